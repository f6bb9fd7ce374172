use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::TiePolicy;
use crate::scoring::{ModelKind, Norm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Constraints weighted by the adversarially trained discriminator.
    Atransn,
    /// Constraints with constant weights, no adversarial phases.
    Ctranse,
    /// Target triplets only.
    Plain,
    /// Plain training on target plus id-mapped teacher triplets.
    Joint,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_ascii_lowercase()))
            .map_err(|_| Error::Config(format!("unknown mode '{s}'")))
    }
}

/// Which target entities condition the generator's fake candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FakePool {
    /// The target side of the sampled aligned pairs.
    Aligned,
    /// Uniformly drawn target entities.
    All,
}

/// Every training hyperparameter. Serialized as flat JSON; unknown keys are
/// rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub kind: ModelKind,
    /// Distance norm; `None` picks the kind's default (L1 TransE, L2 RotatE).
    pub norm: Option<Norm>,
    /// Entity vector width (real values).
    pub dim: usize,
    pub gamma: f64,
    /// Initialization slack: entries start in `±(γ+ε)/dim`.
    pub epsilon: f64,
    pub alpha: f64,
    pub beta: f64,
    pub lr_e: f64,
    pub lr_a: f64,
    /// Negatives per positive.
    pub k: usize,
    /// Embedding batch size; `None` sizes batches for about 100 steps per epoch.
    pub n_l: Option<usize>,
    /// Adversarial and aligned-pair batch size.
    pub n_a: usize,
    /// Outer steps; `None` means `epochs_max` full passes over the training set.
    pub t_l: Option<usize>,
    pub t_g: usize,
    pub t_d: usize,
    pub warmup_fraction: f64,
    pub anneal_cycles: usize,
    pub lambda_g: f64,
    pub seed: u64,
    pub mode: Mode,
    pub epochs_max: usize,
    /// Validation period in steps; `None` means once per epoch.
    pub eval_every: Option<usize>,
    pub leaky_slope: f64,
    /// Put a LeakyReLU between the transition network's two layers.
    pub transition_activation: bool,
    /// Cap on transferred triplets per positive triplet.
    pub transfer_cap: Option<usize>,
    /// Evaluate the distance constraint over every aligned pair instead of
    /// `n_a` sampled ones.
    pub full_alignment: bool,
    pub fake_pool: FakePool,
    /// Overrides the discriminator weights with a constant.
    pub constant_weight: Option<f64>,
    pub tie_policy: TiePolicy,
    /// Train/valid/test ratios used when a single triplet file is split.
    pub split: [f64; 3],
    /// Expected teacher embedding width, checked against loaded dumps.
    pub teacher_dim: Option<usize>,
    /// Record elapsed wall time in the step log (otherwise 0).
    pub log_wall_clock: bool,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            kind: ModelKind::TransE,
            norm: None,
            dim: 200,
            gamma: 8.0,
            epsilon: 2.0,
            alpha: 30.0,
            beta: 0.1,
            lr_e: 1e-3,
            lr_a: 2e-4,
            k: 128,
            n_l: None,
            n_a: 128,
            t_l: None,
            t_g: 5,
            t_d: 5,
            warmup_fraction: 0.01,
            anneal_cycles: 4,
            lambda_g: 1.0,
            seed: 0,
            mode: Mode::Atransn,
            epochs_max: 300,
            eval_every: None,
            leaky_slope: 0.01,
            transition_activation: true,
            transfer_cap: None,
            full_alignment: false,
            fake_pool: FakePool::Aligned,
            constant_weight: None,
            tie_policy: TiePolicy::Optimistic,
            split: [0.6, 0.2, 0.2],
            teacher_dim: None,
            log_wall_clock: false,
        }
    }
}

impl TrainingConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn norm(&self) -> Norm {
        self.norm.unwrap_or(self.kind.default_norm())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        for (name, v) in [("lr_e", self.lr_e), ("lr_a", self.lr_a)] {
            if !(v > 0.0 && v.is_finite()) {
                return fail(format!("{name} must be positive, got {v}"));
            }
        }
        for (name, v) in [
            ("k", self.k),
            ("n_a", self.n_a),
            ("anneal_cycles", self.anneal_cycles),
            ("epochs_max", self.epochs_max),
            ("dim", self.dim),
        ] {
            if v == 0 {
                return fail(format!("{name} must be at least 1"));
            }
        }
        if self.t_l == Some(0)
            || self.n_l == Some(0)
            || self.eval_every == Some(0)
            || self.transfer_cap == Some(0)
        {
            return fail(
                "t_l, n_l, eval_every and transfer_cap must be at least 1 when set".into(),
            );
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return fail(format!(
                "warmup_fraction must lie in [0, 1), got {}",
                self.warmup_fraction
            ));
        }
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("lambda_g", self.lambda_g),
            ("gamma", self.gamma),
            ("epsilon", self.epsilon),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return fail(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        if self.kind.is_complex() && !self.dim.is_multiple_of(2) {
            return fail(format!(
                "{:?} needs an even dim, got {}",
                self.kind, self.dim
            ));
        }
        if let Some(w) = self.constant_weight {
            if !(0.0..=1.0).contains(&w) {
                return fail(format!("constant_weight must lie in [0, 1], got {w}"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_is_named() {
        let err = TrainingConfig::from_json(r#"{"gamma": 4.0, "gama": 2}"#).unwrap_err();
        assert!(err.to_string().contains("gama"), "{err}");
    }

    #[test]
    fn defaults_and_partial_override() {
        let c = TrainingConfig::from_json(r#"{"mode": "ctranse", "k": 16}"#).unwrap();
        assert_eq!(
            (c.mode, c.k, c.t_g, c.t_d, c.n_a),
            (Mode::Ctranse, 16, 5, 5, 128)
        );
        assert_eq!((c.lr_e, c.lr_a), (1e-3, 2e-4));
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(TrainingConfig::from_json(r#"{"lr_e": 0}"#).is_err());
        assert!(TrainingConfig::from_json(r#"{"warmup_fraction": 1.0}"#).is_err());
        assert!(TrainingConfig::from_json(r#"{"kind": "rotate", "dim": 7}"#).is_err());
        assert_eq!("Joint".parse::<Mode>().unwrap(), Mode::Joint);
    }
}
