use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use atransn::graph::{AlignmentSet, TeacherEmbeddings};
use atransn::trainer::train;
use atransn::{
    KnowledgeGraph, Mode, RankingMetrics, SplitDataset, TeacherInput, TrainOutcome, TrainingConfig,
};

use crate::checkpoint::Checkpoint;
use crate::data::DataArgs;
use crate::evaluate::{evaluate_split, Split};
use crate::manifest::{write_json, Manifest};
use crate::{ensure_dir, parse_mode, usage};

#[derive(Args, Debug)]
pub struct CommonArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// JSON training configuration; unknown keys are rejected.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for checkpoint, log, metrics and manifest.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct TeacherArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug)]
pub struct TargetArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Overrides the configured mode.
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<Mode>,
    /// Teacher entity embedding dump; repeat for several teachers.
    #[arg(long = "teacher-emb")]
    pub teacher_emb: Vec<PathBuf>,
    /// Alignment file, paired with the teachers in order.
    #[arg(long)]
    pub align: Vec<PathBuf>,
    /// Teacher triplet file, paired with the teachers in order.
    #[arg(long = "teacher-triplets")]
    pub teacher_triplets: Vec<PathBuf>,
}

/// Contents of `metrics.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsFile {
    pub mode: Mode,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    pub split: Split,
    #[serde(flatten)]
    pub metrics: RankingMetrics,
    pub selection_score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valid: Option<RankingMetrics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_step: Option<usize>,
}

fn load_config(common: &CommonArgs) -> anyhow::Result<TrainingConfig> {
    let mut config = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| atransn::Error::io(path, e))?;
            TrainingConfig::from_json(&text)
                .map_err(|e| usage(format!("{}: {e}", path.display())))?
        }
        None => TrainingConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    Ok(config)
}

pub fn train_teacher(args: TeacherArgs) -> anyhow::Result<()> {
    let mut config = load_config(&args.common)?;
    config.mode = Mode::Plain;
    let (graph, splits) = args.common.data.load(&config)?;
    let outcome = train(config.clone(), &graph, &splits, vec![])?;
    let inputs = args.common.data.files();
    write_outputs(
        "train-teacher",
        &args.common.out,
        config,
        &graph,
        &splits,
        outcome,
        None,
        &inputs,
    )
}

pub fn train_target(args: TargetArgs) -> anyhow::Result<()> {
    let mut config = load_config(&args.common)?;
    if let Some(mode) = args.mode {
        config.mode = mode;
    }
    let (graph, splits) = args.common.data.load(&config)?;
    let teachers = load_teachers(&args, &graph)?;
    let ratio = teachers.first().map(|t| t.alignment.alignment_ratio());
    let outcome = train(config.clone(), &graph, &splits, teachers)?;
    let mut inputs = args.common.data.files();
    inputs.extend(
        args.teacher_emb
            .iter()
            .chain(&args.align)
            .chain(&args.teacher_triplets)
            .cloned(),
    );
    write_outputs(
        "train-target",
        &args.common.out,
        config,
        &graph,
        &splits,
        outcome,
        ratio,
        &inputs,
    )
}

fn load_teachers(args: &TargetArgs, target: &KnowledgeGraph) -> anyhow::Result<Vec<TeacherInput>> {
    let n = args.align.len();
    for (flag, count) in [
        ("--teacher-emb", args.teacher_emb.len()),
        ("--teacher-triplets", args.teacher_triplets.len()),
    ] {
        if count != 0 && count != n {
            return Err(usage(format!(
                "{count} {flag} value(s) for {n} --align file(s)"
            )));
        }
    }
    if n > 0 && args.teacher_emb.is_empty() && args.teacher_triplets.is_empty() {
        return Err(usage("--align needs --teacher-emb or --teacher-triplets"));
    }
    let mut teachers = Vec::with_capacity(n);
    for i in 0..n {
        let graph = match args.teacher_triplets.get(i) {
            Some(path) => Some(KnowledgeGraph::load(path)?.0),
            None => None,
        };
        let (vocab, embeddings) = match (args.teacher_emb.get(i), &graph) {
            (Some(path), Some(g)) => (
                g.entities.clone(),
                Some(TeacherEmbeddings::load(path, &g.entities)?),
            ),
            (Some(path), None) => {
                let (vocab, emb) = TeacherEmbeddings::load_standalone(path)?;
                (vocab, Some(emb))
            }
            (None, Some(g)) => (g.entities.clone(), None),
            (None, None) => unreachable!("checked above"),
        };
        let (alignment, report) = AlignmentSet::load(&args.align[i], &vocab, &target.entities)?;
        log::info!(
            "teacher {i}: {} aligned pairs ({} skipped), ratio {:.3}",
            alignment.len(),
            report.skipped,
            alignment.alignment_ratio()
        );
        teachers.push(TeacherInput {
            embeddings,
            alignment,
            graph,
        });
    }
    Ok(teachers)
}

#[allow(clippy::too_many_arguments)]
fn write_outputs(
    command: &str,
    out: &Path,
    config: TrainingConfig,
    graph: &KnowledgeGraph,
    splits: &SplitDataset,
    outcome: TrainOutcome,
    ratio: Option<f64>,
    inputs: &[PathBuf],
) -> anyhow::Result<()> {
    ensure_dir(&out.to_path_buf())?;
    let mut manifest = Manifest::new(command, config.seed, &config, inputs)?;

    let log_path = out.join("log.jsonl");
    let file = std::fs::File::create(&log_path).map_err(|e| atransn::Error::io(&log_path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for record in &outcome.log {
        serde_json::to_writer(&mut w, record)?;
        w.write_all(b"\n")
            .map_err(|e| atransn::Error::io(&log_path, e))?;
    }
    w.flush().map_err(|e| atransn::Error::io(&log_path, e))?;
    manifest.artifact("log", &log_path);

    let evals_path = out.join("evaluations.json");
    write_json(&evals_path, &outcome.evaluations)?;
    manifest.artifact("evaluations", &evals_path);

    let ckpt = Checkpoint {
        version: env!("CARGO_PKG_VERSION").to_owned(),
        config: config.clone(),
        entities: graph.entities.clone(),
        relations: graph.relations.clone(),
        table: outcome.table,
        best: outcome.best.clone(),
    };
    let ckpt_path = out.join("checkpoint.json");
    ckpt.save(&ckpt_path)?;
    manifest.artifact("checkpoint", &ckpt_path);

    if splits.test.is_empty() {
        log::warn!("no test triplets; metrics.json not written");
    } else {
        let metrics = evaluate_split(&ckpt, splits, Split::Test)?;
        let file = MetricsFile {
            mode: config.mode,
            seed: config.seed,
            ratio,
            split: Split::Test,
            selection_score: metrics.selection_score(),
            metrics,
            valid: outcome.best.as_ref().map(|b| b.metrics),
            best_step: outcome.best.as_ref().map(|b| b.step),
        };
        let metrics_path = out.join("metrics.json");
        write_json(&metrics_path, &file)?;
        manifest.artifact("metrics", &metrics_path);
        println!(
            "test MRR {:.4} MR {:.2} Hits@1 {:.4} Hits@3 {:.4} Hits@10 {:.4}",
            metrics.mrr, metrics.mr, metrics.hits1, metrics.hits3, metrics.hits10
        );
    }
    manifest.write(&out.join("manifest.json"))
}
