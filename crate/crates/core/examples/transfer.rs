//! Desk-scale transfer experiment on a synthetic world: trains a teacher on
//! every triplet, then the target in several modes at several overlap ratios,
//! and prints mean test metrics over seeds.
//!
//! Usage: cargo run --release --example transfer [seeds] [ratio ...]

use std::time::Instant;

use atransn::graph::{FilterIndex, TeacherEmbeddings};
use atransn::synth::{SynthConfig, SynthWorld};
use atransn::trainer::{train, Mode, TeacherInput, TrainingConfig};
use atransn::{Evaluator, ModelKind, Scorer, SplitDataset};

fn teacher_config() -> TrainingConfig {
    TrainingConfig {
        kind: ModelKind::TransE,
        dim: 32,
        gamma: 4.0,
        k: 16,
        lr_e: 1e-2,
        epochs_max: 50,
        mode: Mode::Plain,
        log_wall_clock: false,
        ..TrainingConfig::default()
    }
}

fn target_config(mode: Mode, seed: u64) -> TrainingConfig {
    TrainingConfig {
        mode,
        seed,
        n_a: 32,
        t_d: 2,
        t_g: 2,
        alpha: 1.0,
        beta: 0.1,
        ..teacher_config()
    }
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let seeds: u64 = args.get(1).map_or(5, |s| s.parse().unwrap());
    let ratios: Vec<f64> = if args.len() > 2 {
        args[2..].iter().map(|s| s.parse().unwrap()).collect()
    } else {
        vec![0.8]
    };

    let started = Instant::now();
    let world = SynthWorld::generate(&SynthConfig::default(), 0).unwrap();
    let all = SplitDataset {
        train: world.teacher.triplets.clone(),
        valid: vec![],
        test: vec![],
        seed: None,
    };
    let teacher = train(teacher_config(), &world.teacher, &all, vec![]).unwrap();
    let teacher_emb = TeacherEmbeddings::new(
        teacher.table.num_entities,
        teacher.table.dim,
        teacher.table.entities.clone(),
    )
    .unwrap();
    println!("teacher trained in {:.1}s", started.elapsed().as_secs_f64());
    {
        let f = FilterIndex::from_triplets(&world.teacher.triplets);
        let m = Evaluator::new(Scorer::new(ModelKind::TransE), &f)
            .evaluate(&teacher.table, &world.teacher.triplets[..300])
            .unwrap();
        println!(
            "teacher train-set MRR {:.4} MR {:.2} last loss {:.4}",
            m.mrr,
            m.mr,
            teacher.log.last().unwrap().loss_e
        );
    }

    let filter = FilterIndex::build(&world.splits);
    let scorer = Scorer::new(ModelKind::TransE);
    for &ratio in &ratios {
        let alignment = world.alignment(ratio).unwrap();
        for mode in [Mode::Plain, Mode::Ctranse, Mode::Atransn, Mode::Joint] {
            let (mut mrr, mut mr) = (0.0, 0.0);
            let t0 = Instant::now();
            for seed in 0..seeds {
                let input = TeacherInput {
                    embeddings: Some(teacher_emb.clone()),
                    alignment: alignment.clone(),
                    graph: Some(world.teacher.clone()),
                };
                let out = train(
                    target_config(mode, seed),
                    &world.target,
                    &world.splits,
                    vec![input],
                )
                .unwrap();
                let m = Evaluator::new(scorer, &filter)
                    .evaluate(&out.table, &world.splits.test)
                    .unwrap();
                if std::env::var("VERBOSE").is_ok() {
                    let v: Vec<String> = out
                        .evaluations
                        .iter()
                        .step_by(5)
                        .map(|c| format!("{:.3}", c.metrics.mrr))
                        .collect();
                    println!(
                        "  seed {seed} valid {} loss {:.3}",
                        v.join(" "),
                        out.log.last().unwrap().loss_e
                    );
                }
                mrr += m.mrr / seeds as f64;
                mr += m.mr / seeds as f64;
            }
            println!(
                "ratio {ratio:.2} {mode:?}: MRR {mrr:.4} MR {mr:.2} ({:.1}s)",
                t0.elapsed().as_secs_f64()
            );
        }
    }
}
