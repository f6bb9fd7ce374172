//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use atransn::graph::{FilterIndex, Triplet};
use atransn::nn::DenseNet;
use atransn::{EmbeddingTable, KnowledgeGraph, ModelKind, Scorer, SplitDataset};
use rand::Rng;

pub const FD_STEP: f64 = 1e-6;

/// Central finite-difference gradient of `f` at `x`.
pub fn numeric_grad(x: &[f64], mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + FD_STEP;
            let up = f(&probe);
            probe[i] = orig - FD_STEP;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * FD_STEP)
        })
        .collect()
}

/// `‖a − b‖ / max(‖a‖, ‖b‖)`, or the absolute difference when both are tiny.
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = analytic.iter().zip(numeric).map(|(a, b)| a - b).collect();
    let scale = norm(analytic).max(norm(numeric));
    if scale < 1e-7 {
        norm(&diff)
    } else {
        norm(&diff) / scale
    }
}

/// Finite-difference gradient over every parameter of a network, in
/// `tensors()` order, flattened.
pub fn numeric_net_grad(net: &DenseNet, mut loss: impl FnMut(&DenseNet) -> f64) -> Vec<f64> {
    let mut probe = net.clone();
    let sizes = net.tensor_sizes();
    let mut out = Vec::new();
    for (ti, &size) in sizes.iter().enumerate() {
        for j in 0..size {
            let orig = probe.tensors()[ti][j];
            probe.tensors_mut()[ti][j] = orig + FD_STEP;
            let up = loss(&probe);
            probe.tensors_mut()[ti][j] = orig - FD_STEP;
            let down = loss(&probe);
            probe.tensors_mut()[ti][j] = orig;
            out.push((up - down) / (2.0 * FD_STEP));
        }
    }
    out
}

pub fn flatten(tensors: Vec<&[f64]>) -> Vec<f64> {
    tensors.into_iter().flatten().copied().collect()
}

pub fn random_vec(rng: &mut impl Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

pub fn random_table(
    rng: &mut impl Rng,
    kind: ModelKind,
    entities: usize,
    relations: usize,
    dim: usize,
) -> EmbeddingTable {
    let mut t = EmbeddingTable::zeros(kind, entities, relations, dim).unwrap();
    t.entities = random_vec(rng, t.entities.len(), 1.0);
    t.relations = random_vec(
        rng,
        t.relations.len(),
        if kind == ModelKind::RotatE { 3.0 } else { 1.0 },
    );
    t
}

/// Random graph with distinct triplets, split at random.
pub fn random_graph(
    rng: &mut impl Rng,
    max_entities: usize,
    max_relations: usize,
    max_triplets: usize,
) -> (KnowledgeGraph, SplitDataset) {
    let ne = rng.random_range(4..=max_entities);
    let nr = rng.random_range(1..=max_relations);
    let target = rng.random_range(5..=max_triplets);
    let mut rows = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for _ in 0..target * 4 {
        if rows.len() == target {
            break;
        }
        let t = (
            rng.random_range(0..ne),
            rng.random_range(0..nr),
            rng.random_range(0..ne),
        );
        if seen.insert(t) {
            rows.push((
                format!("e{}", t.0),
                format!("r{}", t.1),
                format!("e{}", t.2),
            ));
        }
    }
    let g = KnowledgeGraph::from_labels(
        rows.iter()
            .map(|(h, r, t)| (h.as_str(), r.as_str(), t.as_str())),
    );
    let seed = rng.random();
    let s = SplitDataset::split(&g, [0.6, 0.2, 0.2], seed).unwrap();
    (g, s)
}

/// Brute-force filtered rank: score every replacement, drop known triplets
/// other than the true one, sort ascending with the true entity first among
/// equal scores, and return its 1-based position.
pub fn oracle_rank(
    scorer: &Scorer,
    table: &EmbeddingTable,
    known: &[Triplet],
    t: Triplet,
    replace_head: bool,
) -> f64 {
    let mut candidates: Vec<(f64, bool)> = Vec::new();
    for e in 0..table.num_entities {
        let c = if replace_head {
            Triplet::new(e, t.relation, t.tail)
        } else {
            Triplet::new(t.head, t.relation, e)
        };
        let is_true = c == t;
        if !is_true && known.contains(&c) {
            continue;
        }
        let score = scorer
            .score(
                table.entity(c.head),
                table.relation(c.relation),
                table.entity(c.tail),
            )
            .unwrap();
        candidates.push((score, is_true));
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
    (candidates.iter().position(|c| c.1).unwrap() + 1) as f64
}

/// MR, MRR, Hits@1/3/10 from oracle ranks, head then tail per triplet.
pub fn oracle_metrics(
    scorer: &Scorer,
    table: &EmbeddingTable,
    splits: &SplitDataset,
    test: &[Triplet],
) -> [f64; 5] {
    let known: Vec<Triplet> = splits.all().copied().collect();
    let mut ranks = Vec::new();
    for &t in test {
        ranks.push(oracle_rank(scorer, table, &known, t, true));
        ranks.push(oracle_rank(scorer, table, &known, t, false));
    }
    let n = ranks.len() as f64;
    let hits = |k: f64| ranks.iter().filter(|&&r| r <= k).count() as f64 / n;
    [
        ranks.iter().sum::<f64>() / n,
        ranks.iter().map(|r| 1.0 / r).sum::<f64>() / n,
        hits(1.0),
        hits(3.0),
        hits(10.0),
    ]
}

pub fn filter_of(splits: &SplitDataset) -> FilterIndex {
    FilterIndex::build(splits)
}
