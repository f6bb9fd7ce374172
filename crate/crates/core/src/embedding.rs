//! Negative sampling and the self-supervised embedding objective.
//!
//! For a positive triplet with score `f` and its `k` corruptions with scores
//! `f'_j`, the per-positive loss is
//! `−ln σ(γ − f) − (1/k) Σ_j ln σ(f'_j − γ)`, averaged over the batch.

use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::Triplet;
use crate::math::{neg_log_sigmoid, sigmoid};
use crate::scoring::{EmbeddingTable, Scorer};

/// Row-indexed gradient accumulator for an embedding matrix. Rows are kept in
/// id order so optimizer application is deterministic.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseGrad {
    width: usize,
    rows: BTreeMap<usize, Vec<f64>>,
}

impl SparseGrad {
    pub fn new(width: usize) -> Self {
        Self {
            width,
            rows: BTreeMap::new(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Adds `scale * grad` into `row`.
    pub fn add(&mut self, row: usize, grad: &[f64], scale: f64) {
        let width = self.width;
        let dst = self.rows.entry(row).or_insert_with(|| vec![0.0; width]);
        crate::math::axpy(scale, grad, dst);
    }

    pub fn merge(&mut self, other: &SparseGrad, scale: f64) {
        for (row, g) in &other.rows {
            self.add(*row, g, scale);
        }
    }

    pub fn get(&self, row: usize) -> Option<&[f64]> {
        self.rows.get(&row).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &[f64])> {
        self.rows.iter().map(|(r, g)| (*r, g.as_slice()))
    }

    pub fn row_ids(&self) -> Vec<usize> {
        self.rows.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Corruption {
    Head,
    Tail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Negative {
    pub triplet: Triplet,
    pub corrupted: Corruption,
}

/// `k` negatives per positive, stored contiguously in positive order.
#[derive(Debug, Clone, PartialEq)]
pub struct NegativeBatch {
    pub k: usize,
    pub negatives: Vec<Negative>,
}

impl NegativeBatch {
    pub fn for_positive(&self, i: usize) -> &[Negative] {
        &self.negatives[i * self.k..(i + 1) * self.k]
    }
}

/// "unif" corruption: each negative flips a fair coin for head or tail and
/// draws the replacement uniformly over all entities. No false-negative filter.
pub fn sample_negatives(
    positive: Triplet,
    k: usize,
    num_entities: usize,
    rng: &mut impl Rng,
) -> Vec<Negative> {
    (0..k)
        .map(|_| {
            let corrupted = if rng.random_bool(0.5) {
                Corruption::Head
            } else {
                Corruption::Tail
            };
            let replacement = rng.random_range(0..num_entities);
            let mut triplet = positive;
            match corrupted {
                Corruption::Head => triplet.head = replacement,
                Corruption::Tail => triplet.tail = replacement,
            }
            Negative { triplet, corrupted }
        })
        .collect()
}

pub fn sample_negative_batch(
    positives: &[Triplet],
    k: usize,
    num_entities: usize,
    rng: &mut impl Rng,
) -> NegativeBatch {
    let negatives = positives
        .iter()
        .flat_map(|p| sample_negatives(*p, k, num_entities, rng))
        .collect();
    NegativeBatch { k, negatives }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingLoss {
    pub loss: f64,
    pub entity_grads: SparseGrad,
    pub relation_grads: SparseGrad,
}

/// Accumulates `scale * ∂f/∂(h, r, t)` for a table triplet into sparse grads.
pub(crate) fn add_triplet_grad(
    scorer: &Scorer,
    table: &EmbeddingTable,
    t: Triplet,
    scale: f64,
    entity_grads: &mut SparseGrad,
    relation_grads: &mut SparseGrad,
) -> f64 {
    let (h, r, tl) = (
        table.entity(t.head),
        table.relation(t.relation),
        table.entity(t.tail),
    );
    let mut dh = vec![0.0; h.len()];
    let mut dr = vec![0.0; r.len()];
    let mut dt = vec![0.0; tl.len()];
    let score = scorer.accumulate_grad(h, r, tl, scale, &mut dh, &mut dr, &mut dt);
    entity_grads.add(t.head, &dh, 1.0);
    relation_grads.add(t.relation, &dr, 1.0);
    entity_grads.add(t.tail, &dt, 1.0);
    score
}

pub fn embedding_loss(
    scorer: &Scorer,
    table: &EmbeddingTable,
    positives: &[Triplet],
    negatives: &NegativeBatch,
    gamma: f64,
) -> Result<EmbeddingLoss> {
    if negatives.negatives.len() != positives.len() * negatives.k {
        return Err(Error::shape(
            "negative batch",
            positives.len() * negatives.k,
            negatives.negatives.len(),
        ));
    }
    let mut out = EmbeddingLoss {
        loss: 0.0,
        entity_grads: SparseGrad::new(table.dim),
        relation_grads: SparseGrad::new(table.relation_dim),
    };
    if positives.is_empty() {
        return Ok(out);
    }
    let batch = positives.len() as f64;
    let k = negatives.k as f64;
    for (i, pos) in positives.iter().enumerate() {
        let f = scorer.score_unchecked(
            table.entity(pos.head),
            table.relation(pos.relation),
            table.entity(pos.tail),
        );
        check_finite(f, pos)?;
        out.loss += neg_log_sigmoid(gamma - f) / batch;
        add_triplet_grad(
            scorer,
            table,
            *pos,
            sigmoid(f - gamma) / batch,
            &mut out.entity_grads,
            &mut out.relation_grads,
        );
        for neg in negatives.for_positive(i) {
            let t = neg.triplet;
            let f = scorer.score_unchecked(
                table.entity(t.head),
                table.relation(t.relation),
                table.entity(t.tail),
            );
            check_finite(f, &t)?;
            out.loss += neg_log_sigmoid(f - gamma) / (batch * k);
            add_triplet_grad(
                scorer,
                table,
                t,
                -sigmoid(gamma - f) / (batch * k),
                &mut out.entity_grads,
                &mut out.relation_grads,
            );
        }
    }
    Ok(out)
}

fn check_finite(score: f64, t: &Triplet) -> Result<()> {
    if score.is_finite() {
        Ok(())
    } else {
        Err(Error::Training(format!(
            "non-finite score for triplet {t:?}"
        )))
    }
}
