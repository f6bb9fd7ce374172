//! Shallow score functions and the embedding table they read from.
//!
//! Every score is a distance-like quantity: lower means more plausible. The
//! bilinear models are stored negated so one ranking path serves all kinds.
//! ComplEx and RotatE entity vectors of width `n` hold `n/2` real parts followed
//! by `n/2` imaginary parts; RotatE relations are `n/2` phase angles.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    TransE,
    DistMult,
    ComplEx,
    RotatE,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::TransE,
        ModelKind::DistMult,
        ModelKind::ComplEx,
        ModelKind::RotatE,
    ];

    pub fn is_complex(self) -> bool {
        matches!(self, ModelKind::ComplEx | ModelKind::RotatE)
    }

    /// Width of a relation vector for entity width `dim`.
    pub fn relation_dim(self, dim: usize) -> usize {
        match self {
            ModelKind::RotatE => dim / 2,
            _ => dim,
        }
    }

    pub fn default_norm(self) -> Norm {
        match self {
            ModelKind::TransE => Norm::L1,
            _ => Norm::L2,
        }
    }
}

/// Distance norm for the translational kinds. For RotatE it applies to the
/// vector of complex moduli.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L1,
    L2,
}

/// Gradient of one score with respect to its three arguments.
#[derive(Debug, Clone, PartialEq)]
pub struct TripletGrad {
    pub d_head: Vec<f64>,
    pub d_relation: Vec<f64>,
    pub d_tail: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scorer {
    pub kind: ModelKind,
    pub norm: Norm,
}

impl Scorer {
    pub fn new(kind: ModelKind) -> Self {
        Self {
            kind,
            norm: kind.default_norm(),
        }
    }

    pub fn with_norm(kind: ModelKind, norm: Norm) -> Self {
        Self { kind, norm }
    }

    fn check(&self, h: &[f64], r: &[f64], t: &[f64]) -> Result<()> {
        if self.kind.is_complex() && !h.len().is_multiple_of(2) {
            return Err(Error::shape(
                "complex entity width (even)",
                h.len() + 1,
                h.len(),
            ));
        }
        check_len("score tail", h.len(), t.len())?;
        check_len("score relation", self.kind.relation_dim(h.len()), r.len())
    }

    pub fn score(&self, h: &[f64], r: &[f64], t: &[f64]) -> Result<f64> {
        self.check(h, r, t)?;
        Ok(self.score_unchecked(h, r, t))
    }

    pub fn score_grad(&self, h: &[f64], r: &[f64], t: &[f64]) -> Result<(f64, TripletGrad)> {
        self.check(h, r, t)?;
        let mut g = TripletGrad {
            d_head: vec![0.0; h.len()],
            d_relation: vec![0.0; r.len()],
            d_tail: vec![0.0; t.len()],
        };
        let s = self.accumulate_grad(
            h,
            r,
            t,
            1.0,
            &mut g.d_head,
            &mut g.d_relation,
            &mut g.d_tail,
        );
        Ok((s, g))
    }

    /// Score without shape checks; callers guarantee the layout.
    pub fn score_unchecked(&self, h: &[f64], r: &[f64], t: &[f64]) -> f64 {
        match self.kind {
            ModelKind::TransE => {
                let diffs = h.iter().zip(r).zip(t).map(|((a, b), c)| a + b - c);
                match self.norm {
                    Norm::L1 => diffs.map(f64::abs).sum(),
                    Norm::L2 => diffs.map(|d| d * d).sum::<f64>().sqrt(),
                }
            }
            ModelKind::DistMult => -h
                .iter()
                .zip(r)
                .zip(t)
                .map(|((a, b), c)| a * b * c)
                .sum::<f64>(),
            ModelKind::ComplEx => {
                let d = h.len() / 2;
                let mut acc = 0.0;
                for i in 0..d {
                    let (a, b) = (h[i], h[d + i]);
                    let (c, e_) = (r[i], r[d + i]);
                    let (e, f) = (t[i], t[d + i]);
                    acc += (a * c - b * e_) * e + (a * e_ + b * c) * f;
                }
                -acc
            }
            ModelKind::RotatE => {
                let d = h.len() / 2;
                let mut acc = 0.0;
                for i in 0..d {
                    let (re, im) = rotate_residual(h[i], h[d + i], r[i], t[i], t[d + i]);
                    let sq = re * re + im * im;
                    acc += match self.norm {
                        Norm::L1 => sq.sqrt(),
                        Norm::L2 => sq,
                    };
                }
                match self.norm {
                    Norm::L1 => acc,
                    Norm::L2 => acc.sqrt(),
                }
            }
        }
    }

    /// Adds `scale * ∂score/∂(h, r, t)` into the three buffers and returns the score.
    /// Non-differentiable points of the norms take subgradient 0.
    #[allow(clippy::too_many_arguments)]
    pub fn accumulate_grad(
        &self,
        h: &[f64],
        r: &[f64],
        t: &[f64],
        scale: f64,
        dh: &mut [f64],
        dr: &mut [f64],
        dt: &mut [f64],
    ) -> f64 {
        match self.kind {
            ModelKind::TransE => {
                let score = self.score_unchecked(h, r, t);
                for i in 0..h.len() {
                    let diff = h[i] + r[i] - t[i];
                    let g = match self.norm {
                        Norm::L1 => sign(diff),
                        Norm::L2 if score > 0.0 => diff / score,
                        Norm::L2 => 0.0,
                    } * scale;
                    dh[i] += g;
                    dr[i] += g;
                    dt[i] -= g;
                }
                score
            }
            ModelKind::DistMult => {
                let mut acc = 0.0;
                for i in 0..h.len() {
                    acc += h[i] * r[i] * t[i];
                    dh[i] -= scale * r[i] * t[i];
                    dr[i] -= scale * h[i] * t[i];
                    dt[i] -= scale * h[i] * r[i];
                }
                -acc
            }
            ModelKind::ComplEx => {
                let d = h.len() / 2;
                let mut acc = 0.0;
                for i in 0..d {
                    let (a, b) = (h[i], h[d + i]);
                    let (c, e_) = (r[i], r[d + i]);
                    let (e, f) = (t[i], t[d + i]);
                    acc += (a * c - b * e_) * e + (a * e_ + b * c) * f;
                    dh[i] -= scale * (c * e + e_ * f);
                    dh[d + i] -= scale * (c * f - e_ * e);
                    dr[i] -= scale * (a * e + b * f);
                    dr[d + i] -= scale * (a * f - b * e);
                    dt[i] -= scale * (a * c - b * e_);
                    dt[d + i] -= scale * (a * e_ + b * c);
                }
                -acc
            }
            ModelKind::RotatE => {
                let d = h.len() / 2;
                let score = self.score_unchecked(h, r, t);
                for i in 0..d {
                    let (a, b, theta) = (h[i], h[d + i], r[i]);
                    let (re, im) = rotate_residual(a, b, theta, t[i], t[d + i]);
                    // ∂score/∂re and ∂score/∂im
                    let denom = match self.norm {
                        Norm::L1 => (re * re + im * im).sqrt(),
                        Norm::L2 => score,
                    };
                    if denom == 0.0 {
                        continue;
                    }
                    let (gre, gim) = (scale * re / denom, scale * im / denom);
                    let (cos, sin) = (theta.cos(), theta.sin());
                    dh[i] += gre * cos + gim * sin;
                    dh[d + i] += -gre * sin + gim * cos;
                    dr[i] += gre * (-a * sin - b * cos) + gim * (a * cos - b * sin);
                    dt[i] -= gre;
                    dt[d + i] -= gim;
                }
                score
            }
        }
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Real and imaginary parts of `h ∘ e^{iθ} − t` for one complex coordinate.
fn rotate_residual(a: f64, b: f64, theta: f64, e: f64, f: f64) -> (f64, f64) {
    let (cos, sin) = (theta.cos(), theta.sin());
    (a * cos - b * sin - e, a * sin + b * cos - f)
}

/// Wraps an angle into `[-π, π)`.
pub fn wrap_phase(theta: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let wrapped = theta - two_pi * ((theta + PI) / two_pi).floor();
    if wrapped >= PI {
        wrapped - two_pi
    } else {
        wrapped
    }
}

/// Dense entity and relation parameters for one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingTable {
    pub kind: ModelKind,
    pub dim: usize,
    pub relation_dim: usize,
    pub num_entities: usize,
    pub num_relations: usize,
    pub entities: Vec<f64>,
    pub relations: Vec<f64>,
}

impl EmbeddingTable {
    pub fn zeros(
        kind: ModelKind,
        num_entities: usize,
        num_relations: usize,
        dim: usize,
    ) -> Result<Self> {
        if dim == 0 || (kind.is_complex() && !dim.is_multiple_of(2)) {
            return Err(Error::Config(format!(
                "embedding width {dim} is invalid for {kind:?} (complex kinds need an even width)"
            )));
        }
        let relation_dim = kind.relation_dim(dim);
        Ok(Self {
            kind,
            dim,
            relation_dim,
            num_entities,
            num_relations,
            entities: vec![0.0; num_entities * dim],
            relations: vec![0.0; num_relations * relation_dim],
        })
    }

    /// Uniform initialization in `(−(γ+ε)/n, (γ+ε)/n)`; RotatE relations are
    /// phases uniform in `[−π, π)`.
    pub fn init_uniform(
        kind: ModelKind,
        num_entities: usize,
        num_relations: usize,
        dim: usize,
        gamma: f64,
        epsilon: f64,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let mut table = Self::zeros(kind, num_entities, num_relations, dim)?;
        let bound = (gamma + epsilon) / dim as f64;
        for v in table.entities.iter_mut() {
            *v = open_uniform(rng, bound);
        }
        for v in table.relations.iter_mut() {
            *v = if kind == ModelKind::RotatE {
                rng.random_range(-PI..PI)
            } else {
                open_uniform(rng, bound)
            };
        }
        Ok(table)
    }

    pub fn entity(&self, i: usize) -> &[f64] {
        &self.entities[i * self.dim..(i + 1) * self.dim]
    }

    pub fn entity_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.entities[i * self.dim..(i + 1) * self.dim]
    }

    pub fn relation(&self, i: usize) -> &[f64] {
        &self.relations[i * self.relation_dim..(i + 1) * self.relation_dim]
    }

    pub fn relation_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.relations[i * self.relation_dim..(i + 1) * self.relation_dim]
    }

    /// Enforces the model constraints on every row. Returns the number of zero
    /// TransE entity rows that could not be normalized.
    pub fn project_constraints(&mut self) -> usize {
        let entities: Vec<usize> = (0..self.num_entities).collect();
        let relations: Vec<usize> = (0..self.num_relations).collect();
        self.project_rows(&entities, &relations)
    }

    /// Enforces the model constraints on the given rows only.
    pub fn project_rows(&mut self, entities: &[usize], relations: &[usize]) -> usize {
        let mut zero_rows = 0;
        match self.kind {
            ModelKind::TransE => {
                for &e in entities {
                    let row = self.entity_mut(e);
                    let norm = crate::math::l2_norm(row);
                    if norm == 0.0 {
                        zero_rows += 1;
                    } else {
                        row.iter_mut().for_each(|v| *v /= norm);
                    }
                }
            }
            ModelKind::RotatE => {
                for &r in relations {
                    self.relation_mut(r)
                        .iter_mut()
                        .for_each(|v| *v = wrap_phase(*v));
                }
            }
            ModelKind::DistMult | ModelKind::ComplEx => {}
        }
        if zero_rows > 0 {
            log::warn!("{zero_rows} zero entity row(s) left unnormalized");
        }
        zero_rows
    }

    /// Keeps only the first `entities` entity rows and `relations` relation rows.
    pub fn truncated(&self, entities: usize, relations: usize) -> Self {
        Self {
            kind: self.kind,
            dim: self.dim,
            relation_dim: self.relation_dim,
            num_entities: entities,
            num_relations: relations,
            entities: self.entities[..entities * self.dim].to_vec(),
            relations: self.relations[..relations * self.relation_dim].to_vec(),
        }
    }

    pub fn is_finite(&self) -> bool {
        crate::math::all_finite(&self.entities) && crate::math::all_finite(&self.relations)
    }
}

fn open_uniform(rng: &mut impl Rng, bound: f64) -> f64 {
    loop {
        let v = rng.random_range(-bound..bound);
        if v != -bound {
            return v;
        }
    }
}
