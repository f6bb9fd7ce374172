mod common;

use std::collections::HashSet;
use std::f64::consts::PI;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use atransn::embedding::{embedding_loss, sample_negative_batch};
use atransn::eval::filtered_rank;
use atransn::graph::{AlignmentSet, FilterIndex, TeacherEmbeddings, Triplet};
use atransn::nn::{Activation, DenseLayer, DenseNet};
use atransn::rng::{stream, Stream};
use atransn::trainer::{anneal_weight, warmup_lr};
use atransn::transfer::{
    cosine_distance, distance_constraint, expand_transferred, triplet_constraint, TransitionNetwork,
};
use atransn::{
    EmbeddingTable, Evaluator, KnowledgeGraph, Mode, ModelKind, Scorer, SplitDataset, Trainer,
    TrainingConfig,
};
use common::*;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn vec_of(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transe_zero_exactly_on_translation(h in vec_of(6), r in vec_of(6), t in vec_of(6)) {
        let s = Scorer::new(ModelKind::TransE);
        let sum: Vec<f64> = h.iter().zip(&r).map(|(a, b)| a + b).collect();
        prop_assert!(s.score(&h, &r, &sum).unwrap().abs() < 1e-12);
        let gap: f64 = sum.iter().zip(&t).map(|(a, b)| (a - b).abs()).sum();
        if gap > 1e-9 {
            prop_assert!(s.score(&h, &r, &t).unwrap() > 0.0);
        }
    }

    #[test]
    fn distmult_is_symmetric(h in vec_of(6), r in vec_of(6), t in vec_of(6)) {
        let s = Scorer::new(ModelKind::DistMult);
        prop_assert!((s.score(&h, &r, &t).unwrap() - s.score(&t, &r, &h).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn complex_swap_matches_conjugate_relation(h in vec_of(8), r in vec_of(8), t in vec_of(8)) {
        let s = Scorer::new(ModelKind::ComplEx);
        let mut conj = r.clone();
        conj[4..].iter_mut().for_each(|v| *v = -*v);
        prop_assert!((s.score(&h, &r, &t).unwrap() - s.score(&t, &conj, &h).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn rotate_swap_matches_inverse_rotation(h in vec_of(8), r in prop::collection::vec(-PI..PI, 4), t in vec_of(8)) {
        let s = Scorer::new(ModelKind::RotatE);
        let inv: Vec<f64> = r.iter().map(|p| -p).collect();
        let a = s.score(&h, &r, &t).unwrap();
        prop_assert!(a >= 0.0);
        prop_assert!((a - s.score(&t, &inv, &h).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn layer_norm_standardizes(x in prop::collection::vec(-5.0..5.0f64, 8)) {
        let mean = x.iter().sum::<f64>() / 8.0;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 8.0;
        prop_assume!(var > 0.5);
        let mut layer = DenseLayer::new(8, 8, Activation::None, true);
        for i in 0..8 {
            layer.weight[i * 8 + i] = 1.0;
        }
        let y = DenseNet::new(vec![layer]).unwrap().predict(&x).unwrap();
        let m = y.iter().sum::<f64>() / 8.0;
        let v = y.iter().map(|a| (a - m).powi(2)).sum::<f64>() / 8.0;
        prop_assert!(m.abs() < 1e-9);
        prop_assert!((v - 1.0).abs() < 1e-4, "variance {}", v);
    }

    #[test]
    fn rank_bounds_and_permutation(truth in -3i32..3, mut cands in prop::collection::vec(-3i32..3, 0..30)) {
        let score = |v: &[i32]| v.iter().map(|&c| f64::from(c)).collect::<Vec<_>>();
        let r = filtered_rank(f64::from(truth), score(&cands), Default::default());
        prop_assert!(r >= 1.0 && r <= cands.len() as f64 + 1.0);
        cands.reverse();
        prop_assert_eq!(r, filtered_rank(f64::from(truth), score(&cands), Default::default()));
    }

    #[test]
    fn rank_translation_invariant(truth in -3i32..3, cands in prop::collection::vec(-3i32..3, 0..30), shift in -100i32..100) {
        let base = filtered_rank(f64::from(truth), cands.iter().map(|&c| f64::from(c)), Default::default());
        let moved = filtered_rank(
            f64::from(truth + shift),
            cands.iter().map(|&c| f64::from(c + shift)),
            Default::default(),
        );
        prop_assert_eq!(base, moved);
    }

    #[test]
    fn filtering_never_worsens_rank(truth in -3.0..3.0f64, cands in prop::collection::vec(-3.0..3.0f64, 1..30), keep in prop::collection::vec(any::<bool>(), 30)) {
        let all = filtered_rank(truth, cands.iter().copied(), Default::default());
        let some = filtered_rank(
            truth,
            cands.iter().zip(&keep).filter(|(_, k)| **k).map(|(c, _)| *c),
            Default::default(),
        );
        prop_assert!(some <= all);
    }

    #[test]
    fn schedules_stay_in_envelope(step in 0usize..5000, total in 1usize..5000, w in 0.0..50.0f64, cycles in 1usize..8, frac in 0.0..0.5f64) {
        let a = anneal_weight(step, total, w, cycles);
        prop_assert!((0.0..=w + 1e-12).contains(&a));
        let lr = warmup_lr(step, total, 1e-3, frac);
        prop_assert!((0.0..=1e-3).contains(&lr));
        prop_assert!(warmup_lr(step + 1, total, 1e-3, frac) >= lr);
    }

    #[test]
    fn cosine_distance_range(u in vec_of(5), v in vec_of(5), c in 0.1..10.0f64) {
        let d = cosine_distance(&u, &v).value;
        prop_assert!((-1e-12..=2.0 + 1e-12).contains(&d));
        let scaled: Vec<f64> = u.iter().map(|x| x * c).collect();
        let self_d = cosine_distance(&u, &scaled);
        if !self_d.degenerate {
            prop_assert!(self_d.value.abs() < 1e-12);
        }
    }

    #[test]
    fn split_partitions_deterministically(seed in any::<u64>(), gseed in any::<u64>()) {
        let (g, _) = random_graph(&mut rng(gseed), 12, 3, 60);
        let a = SplitDataset::split(&g, [0.6, 0.2, 0.2], seed).unwrap();
        prop_assert_eq!(&a, &SplitDataset::split(&g, [0.6, 0.2, 0.2], seed).unwrap());
        let mut all: Vec<Triplet> = a.all().copied().collect();
        all.sort();
        let mut expected = g.triplets.clone();
        expected.sort();
        prop_assert_eq!(all, expected);
        let n = g.triplets.len();
        prop_assert_eq!(a.valid.len(), (0.2 * n as f64 + 1e-9).floor() as usize);
        prop_assert_eq!(a.test.len(), a.valid.len());
    }

    #[test]
    fn filter_knows_every_split_triplet(gseed in any::<u64>()) {
        let (_, splits) = random_graph(&mut rng(gseed), 12, 3, 60);
        let f = FilterIndex::build(&splits);
        for t in splits.all() {
            prop_assert!(f.is_known_tail(t.head, t.relation, t.tail));
            prop_assert!(f.is_known_head(t.relation, t.tail, t.head));
        }
    }

    #[test]
    fn graph_file_round_trip(gseed in any::<u64>()) {
        let (g, _) = random_graph(&mut rng(gseed), 12, 3, 60);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.tsv");
        g.export(&path).unwrap();
        let (back, report) = KnowledgeGraph::load(&path).unwrap();
        prop_assert_eq!(report.duplicates, 0);
        prop_assert_eq!(back, g);
    }

    #[test]
    fn projection_enforces_constraints(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mut t = random_table(&mut r, ModelKind::TransE, 6, 2, 4);
        t.project_constraints();
        for e in 0..6 {
            let n: f64 = t.entity(e).iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!((n - 1.0).abs() < 1e-12);
        }
        let once = t.clone();
        t.project_constraints();
        prop_assert!(t.entities.iter().zip(&once.entities).all(|(a, b)| (a - b).abs() < 1e-15));

        let mut rot = random_table(&mut r, ModelKind::RotatE, 6, 2, 4);
        rot.relations.iter_mut().for_each(|p| *p *= 7.0);
        rot.project_constraints();
        prop_assert!(rot.relations.iter().all(|p| *p > -PI - 1e-12 && *p <= PI + 1e-12));
    }

    #[test]
    fn embedding_loss_positive(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (g, splits) = random_graph(&mut r, 10, 3, 30);
        let table = random_table(&mut r, ModelKind::TransE, g.num_entities(), g.num_relations(), 4);
        let negs = sample_negative_batch(&splits.train, 3, g.num_entities(), &mut r);
        let loss = embedding_loss(&Scorer::new(ModelKind::TransE), &table, &splits.train, &negs, 2.0).unwrap();
        prop_assert!(loss.loss > 0.0 && loss.loss.is_finite());
    }
}

fn transfer_fixture(
    seed: u64,
) -> (
    TransitionNetwork,
    TeacherEmbeddings,
    EmbeddingTable,
    AlignmentSet,
) {
    let mut r = rng(seed);
    let teacher = TeacherEmbeddings::new(8, 5, random_vec(&mut r, 40, 1.0)).unwrap();
    let table = random_table(&mut r, ModelKind::TransE, 6, 2, 4);
    let w = TransitionNetwork::new(5, 4, Some(0.01), &mut stream(seed, Stream::TeacherInit(0)));
    let alignment = AlignmentSet::new((0..6).map(|i| (i + 1, i)), 8, 6).unwrap();
    (w, teacher, table, alignment)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn zero_weights_annihilate_constraints(seed in any::<u64>()) {
        let (w, teacher, table, alignment) = transfer_fixture(seed);
        let pairs = alignment.pairs().to_vec();
        let d = distance_constraint(&w, &teacher, &table, &pairs, &vec![0.0; pairs.len()]).unwrap();
        prop_assert_eq!(d.loss, 0.0);
        prop_assert!(d.entity_grads.is_empty());
        prop_assert!(d.transition_grads == w.net.zero_grads());

        let batch = [Triplet::new(0, 0, 1), Triplet::new(2, 1, 3)];
        let tt = expand_transferred(&batch, &alignment, None, &mut rng(seed));
        let scorer = Scorer::new(ModelKind::TransE);
        let c = triplet_constraint(&w, &teacher, &table, &scorer, &tt, &vec![0.0; tt.len()], 4.0).unwrap();
        prop_assert_eq!(c.loss, 0.0);
        prop_assert!(c.entity_grads.is_empty() && c.relation_grads.is_empty());
        prop_assert!(c.transition_grads == w.net.zero_grads());
    }

    #[test]
    fn distance_constraint_descends(seed in any::<u64>()) {
        let (w, teacher, mut table, alignment) = transfer_fixture(seed);
        let pairs = alignment.pairs().to_vec();
        let weights = vec![1.0; pairs.len()];
        let before = distance_constraint(&w, &teacher, &table, &pairs, &weights).unwrap();
        let mut norm = 0.0;
        for (row, g) in before.entity_grads.iter() {
            norm += g.iter().map(|v| v * v).sum::<f64>();
            for (p, gi) in table.entity_mut(row).iter_mut().zip(g) {
                *p -= 1e-3 * gi;
            }
        }
        prop_assume!(norm > 1e-12);
        let after = distance_constraint(&w, &teacher, &table, &pairs, &weights).unwrap();
        prop_assert!(after.loss < before.loss, "{} -> {}", before.loss, after.loss);
    }
}

#[test]
fn different_seeds_give_different_splits() {
    let (g, _) = random_graph(&mut rng(5), 20, 3, 80);
    let splits: HashSet<Vec<Triplet>> = (0..10)
        .map(|s| SplitDataset::split(&g, [0.6, 0.2, 0.2], s).unwrap().test)
        .collect();
    assert_eq!(splits.len(), 10);
}

#[test]
fn evaluator_filter_monotone_on_real_tables() {
    let mut r = rng(9);
    for _ in 0..10 {
        let (g, splits) = random_graph(&mut r, 12, 3, 50);
        let table = random_table(
            &mut r,
            ModelKind::TransE,
            g.num_entities(),
            g.num_relations(),
            4,
        );
        let scorer = Scorer::new(ModelKind::TransE);
        let partial = FilterIndex::from_triplets(&splits.test);
        let full = FilterIndex::build(&splits);
        for t in &splits.test {
            let a = Evaluator::new(scorer, &partial).rank_triplet(&table, t);
            let b = Evaluator::new(scorer, &full).rank_triplet(&table, t);
            assert!(b.head_rank <= a.head_rank && b.tail_rank <= a.tail_rank);
        }
    }
}

fn ring_world() -> (KnowledgeGraph, SplitDataset) {
    let labels: Vec<String> = (0..20).map(|i| format!("e{i}")).collect();
    let mut rows = Vec::new();
    for i in 0..20 {
        rows.push((labels[i].as_str(), "next", labels[(i + 1) % 20].as_str()));
        rows.push((labels[i].as_str(), "skip", labels[(i + 2) % 20].as_str()));
    }
    let g = KnowledgeGraph::from_labels(rows);
    let splits = SplitDataset {
        train: g.triplets.clone(),
        valid: vec![],
        test: vec![],
        seed: None,
    };
    (g, splits)
}

#[test]
fn plain_training_halves_the_loss() {
    let (g, splits) = ring_world();
    let mut ratios: Vec<f64> = (0..5)
        .map(|seed| {
            let config = TrainingConfig {
                mode: Mode::Plain,
                dim: 16,
                gamma: 4.0,
                k: 8,
                lr_e: 2e-2,
                n_l: Some(8),
                t_l: Some(200),
                seed,
                ..TrainingConfig::default()
            };
            let mut trainer = Trainer::new(config, &g, &splits, vec![]).unwrap();
            let losses: Vec<f64> = (0..200).map(|_| trainer.step().unwrap().loss_e).collect();
            let head = losses[..10].iter().sum::<f64>() / 10.0;
            let tail = losses[190..].iter().sum::<f64>() / 10.0;
            tail / head
        })
        .collect();
    ratios.sort_by(f64::total_cmp);
    assert!(
        ratios[2] <= 0.5,
        "median loss ratio {:.3} ({ratios:?})",
        ratios[2]
    );
}
