//! Teacher-to-target transfer: the transition network and the two soft
//! constraints built on it.
//!
//! Teacher embeddings are only ever read here. None of the outputs carries a
//! teacher gradient, so frozen teachers stay frozen by construction.

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::embedding::SparseGrad;
use crate::error::{check_len, Result};
use crate::graph::{AlignmentSet, TeacherEmbeddings, Triplet};
use crate::math::{dot, l2_norm, neg_log_sigmoid, sigmoid};
use crate::nn::{Activation, DenseLayer, DenseNet, InitScheme, NetGrads};
use crate::scoring::{EmbeddingTable, Scorer};

/// Vectors shorter than this are treated as degenerate by the cosine distance.
pub const COSINE_NORM_FLOOR: f64 = 1e-12;

/// Two-layer map from teacher space `ℝ^m` to target space `ℝ^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionNetwork {
    pub net: DenseNet,
}

impl TransitionNetwork {
    /// Hidden width is `max(m, n)`. `hidden_activation` of `None` stacks two
    /// purely linear layers.
    pub fn new(
        teacher_dim: usize,
        target_dim: usize,
        hidden_activation: Option<f64>,
        rng: &mut impl Rng,
    ) -> Self {
        let hidden = teacher_dim.max(target_dim);
        let act = hidden_activation.map_or(Activation::None, Activation::LeakyRelu);
        let mut net = DenseNet::new(vec![
            DenseLayer::new(teacher_dim, hidden, act, false),
            DenseLayer::new(hidden, target_dim, Activation::None, false),
        ])
        .expect("widths chain by construction");
        net.initialize(InitScheme::Orthogonal, rng);
        Self { net }
    }

    pub fn teacher_dim(&self) -> usize {
        self.net.input_dim()
    }

    pub fn target_dim(&self) -> usize {
        self.net.output_dim()
    }

    pub fn project(&self, teacher_vec: &[f64]) -> Result<Vec<f64>> {
        self.net.predict(teacher_vec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosineDistance {
    pub value: f64,
    pub degenerate: bool,
}

/// `1 − cos(u, v)`. A near-zero vector yields 1 and sets `degenerate`.
pub fn cosine_distance(u: &[f64], v: &[f64]) -> CosineDistance {
    let (nu, nv) = (l2_norm(u), l2_norm(v));
    if nu < COSINE_NORM_FLOOR || nv < COSINE_NORM_FLOOR {
        return CosineDistance {
            value: 1.0,
            degenerate: true,
        };
    }
    CosineDistance {
        value: 1.0 - dot(u, v) / (nu * nv),
        degenerate: false,
    }
}

/// Cosine distance with its gradients `(∂/∂u, ∂/∂v)`; zero when degenerate.
pub fn cosine_distance_grad(u: &[f64], v: &[f64]) -> (CosineDistance, Vec<f64>, Vec<f64>) {
    let d = cosine_distance(u, v);
    if d.degenerate {
        return (d, vec![0.0; u.len()], vec![0.0; v.len()]);
    }
    let (nu, nv) = (l2_norm(u), l2_norm(v));
    let cos = 1.0 - d.value;
    let du = u
        .iter()
        .zip(v)
        .map(|(a, b)| -(b / (nu * nv) - cos * a / (nu * nu)))
        .collect();
    let dv = u
        .iter()
        .zip(v)
        .map(|(a, b)| -(a / (nu * nv) - cos * b / (nv * nv)))
        .collect();
    (d, du, dv)
}

/// Loss and gradients of one transfer constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintOutput {
    pub loss: f64,
    pub entity_grads: SparseGrad,
    pub relation_grads: SparseGrad,
    pub transition_grads: NetGrads,
    pub degenerate: usize,
}

impl ConstraintOutput {
    fn empty(table: &EmbeddingTable, w: &TransitionNetwork) -> Self {
        Self {
            loss: 0.0,
            entity_grads: SparseGrad::new(table.dim),
            relation_grads: SparseGrad::new(table.relation_dim),
            transition_grads: w.net.zero_grads(),
            degenerate: 0,
        }
    }
}

fn check_dims(
    w: &TransitionNetwork,
    teacher: &TeacherEmbeddings,
    table: &EmbeddingTable,
) -> Result<()> {
    check_len("transition input", teacher.dim(), w.teacher_dim())?;
    check_len("transition output", table.dim, w.target_dim())
}

/// Weighted, batch-averaged cosine distance between projected teachers and
/// their aligned target entities. `pairs` are `(teacher, target)` ids.
pub fn distance_constraint(
    w: &TransitionNetwork,
    teacher: &TeacherEmbeddings,
    table: &EmbeddingTable,
    pairs: &[(usize, usize)],
    weights: &[f64],
) -> Result<ConstraintOutput> {
    check_dims(w, teacher, table)?;
    check_len("distance constraint weights", pairs.len(), weights.len())?;
    let mut out = ConstraintOutput::empty(table, w);
    if pairs.is_empty() {
        return Ok(out);
    }
    let batch = pairs.len() as f64;
    for (&(t_id, s_id), &weight) in pairs.iter().zip(weights) {
        if weight == 0.0 {
            continue;
        }
        let (proj, cache) = w.net.forward(teacher.row(t_id))?;
        let (dist, d_proj, d_target) = cosine_distance_grad(&proj, table.entity(s_id));
        out.degenerate += usize::from(dist.degenerate);
        let scale = weight / batch;
        out.loss += scale * dist.value;
        if dist.degenerate {
            continue;
        }
        out.entity_grads.add(s_id, &d_target, scale);
        let d_proj: Vec<f64> = d_proj.iter().map(|g| g * scale).collect();
        let (gw, _) = w.net.backward(&cache, &d_proj)?;
        out.transition_grads.add_scaled(&gw, 1.0);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Head,
    Tail,
}

/// A target triplet with one entity replaced by an aligned teacher entity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransferredTriplet {
    pub source: Triplet,
    pub side: Side,
    pub teacher: usize,
}

impl TransferredTriplet {
    /// The target entity the teacher entity stands in for.
    pub fn replaced(&self) -> usize {
        match self.side {
            Side::Head => self.source.head,
            Side::Tail => self.source.tail,
        }
    }
}

/// Expands each batch triplet into its transferred triplets: one per teacher
/// entity aligned to the head and one per teacher entity aligned to the tail.
/// With `cap`, a triplet with more expansions keeps a uniform subsample.
pub fn expand_transferred(
    batch: &[Triplet],
    alignment: &AlignmentSet,
    cap: Option<usize>,
    rng: &mut impl Rng,
) -> Vec<TransferredTriplet> {
    let mut out = Vec::new();
    for &source in batch {
        let mut expansions: Vec<TransferredTriplet> =
            alignment
                .teachers_of(source.head)
                .iter()
                .map(|&teacher| TransferredTriplet {
                    source,
                    side: Side::Head,
                    teacher,
                })
                .chain(alignment.teachers_of(source.tail).iter().map(|&teacher| {
                    TransferredTriplet {
                        source,
                        side: Side::Tail,
                        teacher,
                    }
                }))
                .collect();
        if let Some(cap) = cap {
            if expansions.len() > cap {
                expansions = expansions.choose_multiple(rng, cap).copied().collect();
            }
        }
        out.extend(expansions);
    }
    out
}

/// Weighted mean of `−ln σ(γ − f)` over transferred triplets.
#[allow(clippy::too_many_arguments)]
pub fn triplet_constraint(
    w: &TransitionNetwork,
    teacher: &TeacherEmbeddings,
    table: &EmbeddingTable,
    scorer: &Scorer,
    transferred: &[TransferredTriplet],
    weights: &[f64],
    gamma: f64,
) -> Result<ConstraintOutput> {
    check_dims(w, teacher, table)?;
    check_len(
        "triplet constraint weights",
        transferred.len(),
        weights.len(),
    )?;
    let mut out = ConstraintOutput::empty(table, w);
    if transferred.is_empty() {
        return Ok(out);
    }
    let count = transferred.len() as f64;
    for (tt, &weight) in transferred.iter().zip(weights) {
        if weight == 0.0 {
            continue;
        }
        let (proj, cache) = w.net.forward(teacher.row(tt.teacher))?;
        let rel = table.relation(tt.source.relation);
        let (h, t) = match tt.side {
            Side::Head => (proj.as_slice(), table.entity(tt.source.tail)),
            Side::Tail => (table.entity(tt.source.head), proj.as_slice()),
        };
        let f = scorer.score_unchecked(h, rel, t);
        let scale = weight / count;
        out.loss += scale * neg_log_sigmoid(gamma - f);
        let mut dh = vec![0.0; h.len()];
        let mut dr = vec![0.0; rel.len()];
        let mut dt = vec![0.0; t.len()];
        scorer.accumulate_grad(
            h,
            rel,
            t,
            scale * sigmoid(f - gamma),
            &mut dh,
            &mut dr,
            &mut dt,
        );
        out.relation_grads.add(tt.source.relation, &dr, 1.0);
        let (d_proj, other, d_other) = match tt.side {
            Side::Head => (dh, tt.source.tail, dt),
            Side::Tail => (dt, tt.source.head, dh),
        };
        out.entity_grads.add(other, &d_other, 1.0);
        let (gw, _) = w.net.backward(&cache, &d_proj)?;
        out.transition_grads.add_scaled(&gw, 1.0);
    }
    Ok(out)
}
