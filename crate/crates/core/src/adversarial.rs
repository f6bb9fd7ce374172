//! Conditional generator and consistency discriminator.
//!
//! The discriminator reads a concatenated pair `(target embedding, candidate)`
//! and outputs the probability that the candidate is a genuine projected
//! teacher embedding for that entity. The generator produces fake candidates
//! from a target embedding concatenated with uniform noise. Discriminator
//! outputs are clamped to `[1e-7, 1 − 1e-7]`, which keeps every log term finite.

use rand::Rng;

use crate::error::{check_len, Result};
use crate::math::concat;
use crate::nn::{Activation, DenseLayer, DenseNet, ForwardCache, InitScheme, NetGrads};
use crate::transfer::{cosine_distance_grad, TransitionNetwork};

pub const PROB_CLAMP: f64 = 1e-7;

fn clamp_prob(p: f64) -> (f64, bool) {
    if p < PROB_CLAMP {
        (PROB_CLAMP, true)
    } else if p > 1.0 - PROB_CLAMP {
        (1.0 - PROB_CLAMP, true)
    } else {
        (p, false)
    }
}

/// i.i.d. coordinates uniform on the open interval `(−1, 1)`.
pub fn sample_noise(dim: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..dim)
        .map(|_| loop {
            let v = rng.random_range(-1.0..1.0);
            if v != -1.0 {
                break v;
            }
        })
        .collect()
}

/// `G(e, z)`: `ℝ^{2n} → ℝ^{2n} → ℝ^n` with LeakyReLU after the first layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub net: DenseNet,
}

impl Generator {
    pub fn new(dim: usize, slope: f64, rng: &mut impl Rng) -> Self {
        let mut net = DenseNet::new(vec![
            DenseLayer::new(2 * dim, 2 * dim, Activation::LeakyRelu(slope), false),
            DenseLayer::new(2 * dim, dim, Activation::None, false),
        ])
        .expect("widths chain by construction");
        net.initialize(InitScheme::FanUniform, rng);
        Self { net }
    }

    pub fn dim(&self) -> usize {
        self.net.output_dim()
    }

    pub fn generate(&self, target: &[f64], noise: &[f64]) -> Result<Vec<f64>> {
        self.net.predict(&concat(target, noise))
    }
}

/// `D(e, c)`: linear + LeakyReLU + layer norm to width `n`, then linear + sigmoid.
#[derive(Debug, Clone, PartialEq)]
pub struct Discriminator {
    pub net: DenseNet,
}

impl Discriminator {
    pub fn new(dim: usize, slope: f64, rng: &mut impl Rng) -> Self {
        let mut net = DenseNet::new(vec![
            DenseLayer::new(2 * dim, dim, Activation::LeakyRelu(slope), true),
            DenseLayer::new(dim, 1, Activation::Sigmoid, false),
        ])
        .expect("widths chain by construction");
        net.initialize(InitScheme::FanUniform, rng);
        Self { net }
    }

    pub fn dim(&self) -> usize {
        self.net.input_dim() / 2
    }

    /// Consistency score in `(0, 1)`.
    pub fn discriminate(&self, target: &[f64], candidate: &[f64]) -> Result<f64> {
        check_len("discriminator candidate", target.len(), candidate.len())?;
        let p = self.net.predict(&concat(target, candidate))?[0];
        Ok(clamp_prob(p).0)
    }

    fn forward(&self, target: &[f64], candidate: &[f64]) -> Result<(f64, bool, ForwardCache)> {
        check_len("discriminator candidate", target.len(), candidate.len())?;
        let (y, cache) = self.net.forward(&concat(target, candidate))?;
        let (p, clamped) = clamp_prob(y[0]);
        Ok((p, clamped, cache))
    }

    /// Gradient of the clamped score with respect to `(target, candidate)`.
    pub fn input_grad(&self, target: &[f64], candidate: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let (_, clamped, cache) = self.forward(target, candidate)?;
        let dy = if clamped { 0.0 } else { 1.0 };
        let (_, dx) = self.net.backward(&cache, &[dy])?;
        let (a, b) = dx.split_at(target.len());
        Ok((a.to_vec(), b.to_vec()))
    }

    /// Fraction of pairs classified correctly at threshold 0.5.
    pub fn accuracy(&self, real: &[(&[f64], &[f64])], fake: &[(&[f64], &[f64])]) -> Result<f64> {
        let mut correct = 0usize;
        for (e, c) in real {
            correct += usize::from(self.discriminate(e, c)? > 0.5);
        }
        for (e, c) in fake {
            correct += usize::from(self.discriminate(e, c)? < 0.5);
        }
        Ok(correct as f64 / (real.len() + fake.len()).max(1) as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminatorLoss {
    pub loss: f64,
    pub discriminator_grads: NetGrads,
    /// Gradients for the transition network through the real pairs; zero when
    /// the real candidates were given directly.
    pub transition_grads: Option<NetGrads>,
}

/// Binary cross-entropy over real and fake pairs, where each real candidate is
/// already in target space. Returns the loss, discriminator gradients and the
/// gradient with respect to every real candidate.
pub fn discriminator_loss_raw(
    d: &Discriminator,
    real: &[(&[f64], &[f64])],
    fake: &[(&[f64], &[f64])],
) -> Result<(f64, NetGrads, Vec<Vec<f64>>)> {
    let mut grads = d.net.zero_grads();
    let mut loss = 0.0;
    let mut candidate_grads = Vec::with_capacity(real.len());
    let n_real = real.len().max(1) as f64;
    let n_fake = fake.len().max(1) as f64;
    for (e, c) in real {
        let (p, clamped, cache) = d.forward(e, c)?;
        loss -= p.ln() / n_real;
        let dp = if clamped { 0.0 } else { -1.0 / (p * n_real) };
        let (g, dx) = d.net.backward(&cache, &[dp])?;
        grads.add_scaled(&g, 1.0);
        candidate_grads.push(dx[e.len()..].to_vec());
    }
    for (e, c) in fake {
        let (p, clamped, cache) = d.forward(e, c)?;
        loss -= (1.0 - p).ln() / n_fake;
        let dp = if clamped {
            0.0
        } else {
            1.0 / ((1.0 - p) * n_fake)
        };
        let (g, _) = d.net.backward(&cache, &[dp])?;
        grads.add_scaled(&g, 1.0);
    }
    Ok((loss, grads, candidate_grads))
}

/// Discriminator loss with real pairs `(target embedding, teacher embedding)`
/// projected through `w`; gradients reach both `d` and `w`. Fake candidates
/// are constants here.
pub fn discriminator_loss(
    d: &Discriminator,
    w: &TransitionNetwork,
    real: &[(&[f64], &[f64])],
    fake: &[(&[f64], &[f64])],
) -> Result<DiscriminatorLoss> {
    let mut projections = Vec::with_capacity(real.len());
    for (_, teacher) in real {
        projections.push(w.net.forward(teacher)?);
    }
    let real_pairs: Vec<(&[f64], &[f64])> = real
        .iter()
        .zip(&projections)
        .map(|((e, _), (proj, _))| (*e, proj.as_slice()))
        .collect();
    let (loss, discriminator_grads, candidate_grads) =
        discriminator_loss_raw(d, &real_pairs, fake)?;
    let mut w_grads = w.net.zero_grads();
    for ((_, cache), dc) in projections.iter().zip(&candidate_grads) {
        let (g, _) = w.net.backward(cache, dc)?;
        w_grads.add_scaled(&g, 1.0);
    }
    Ok(DiscriminatorLoss {
        loss,
        discriminator_grads,
        transition_grads: Some(w_grads),
    })
}

/// Mean of `−ln D(e, G(e, z)) + λ·(1 − cos(e, G(e, z)))`; gradients for `g` only.
pub fn generator_loss(
    g: &Generator,
    d: &Discriminator,
    targets: &[&[f64]],
    noises: &[Vec<f64>],
    cosine_weight: f64,
) -> Result<(f64, NetGrads)> {
    check_len("generator noise batch", targets.len(), noises.len())?;
    let mut grads = g.net.zero_grads();
    let mut loss = 0.0;
    let batch = targets.len().max(1) as f64;
    for (e, z) in targets.iter().zip(noises) {
        let (fake, g_cache) = g.net.forward(&concat(e, z))?;
        let (p, clamped, d_cache) = d.forward(e, &fake)?;
        let (dist, _, d_fake_cos) = cosine_distance_grad(e, &fake);
        loss += (-p.ln() + cosine_weight * dist.value) / batch;
        let dp = if clamped { 0.0 } else { -1.0 / (p * batch) };
        let (_, dx) = d.net.backward(&d_cache, &[dp])?;
        let d_fake: Vec<f64> = dx[e.len()..]
            .iter()
            .zip(&d_fake_cos)
            .map(|(a, b)| a + cosine_weight * b / batch)
            .collect();
        let (gg, _) = g.net.backward(&g_cache, &d_fake)?;
        grads.add_scaled(&gg, 1.0);
    }
    Ok((loss, grads))
}

/// `D(e_s, W(e_t))` for each `(teacher vector, target vector)` pair. No
/// gradients are recorded.
pub fn consistency_weights(
    d: &Discriminator,
    w: &TransitionNetwork,
    pairs: &[(&[f64], &[f64])],
) -> Result<Vec<f64>> {
    pairs
        .iter()
        .map(|(teacher, target)| d.discriminate(target, &w.project(teacher)?))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};
    use std::f64::consts::LN_2;

    fn flat_discriminator(dim: usize) -> Discriminator {
        let mut d = Discriminator::new(dim, 0.01, &mut stream(0, Stream::TeacherInit(0)));
        let last = d.net.layers.last_mut().unwrap();
        last.weight.iter_mut().for_each(|v| *v = 0.0);
        last.bias[0] = 0.0;
        d
    }

    #[test]
    fn noise_support_mean_and_determinism() {
        let mut rng = stream(11, Stream::Adversarial(0));
        let z = sample_noise(100_000, &mut rng);
        assert!(z.iter().all(|v| *v > -1.0 && *v < 1.0));
        let mean = z.iter().sum::<f64>() / z.len() as f64;
        assert!(mean.abs() < 0.02, "{mean}");
        assert_eq!(
            sample_noise(8, &mut stream(3, Stream::Adversarial(1))),
            sample_noise(8, &mut stream(3, Stream::Adversarial(1)))
        );
    }

    #[test]
    fn discriminator_output_range_and_flat_baseline() {
        let d = Discriminator::new(3, 0.01, &mut stream(2, Stream::TeacherInit(0)));
        let p = d
            .discriminate(&[100.0, -50.0, 3.0], &[1e3, 2.0, -7.0])
            .unwrap();
        assert!(p > 0.0 && p < 1.0);
        let flat = flat_discriminator(3);
        assert_eq!(
            flat.discriminate(&[1.0, 2.0, 3.0], &[0.0, 1.0, 0.0])
                .unwrap(),
            0.5
        );
        assert!(d.discriminate(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn discriminator_loss_baseline_is_two_log_two() {
        let d = flat_discriminator(2);
        let (a, b, c) = ([0.3, 0.1], [0.5, -0.5], [1.0, 2.0]);
        let (loss, _, _) = discriminator_loss_raw(&d, &[(&a, &b)], &[(&a, &c)]).unwrap();
        assert!((loss - 2.0 * LN_2).abs() < 1e-12);
    }

    #[test]
    fn discriminator_loss_hand_value() {
        // Zero weights in the last layer make the output σ(bias).
        let mut d = flat_discriminator(2);
        let logit = |p: f64| (p / (1.0 - p)).ln();
        d.net.layers[1].bias[0] = logit(0.8);
        let (a, b) = ([0.3, 0.1], [0.5, -0.5]);
        let (real_loss, _, _) = discriminator_loss_raw(&d, &[(&a, &b)], &[]).unwrap();
        d.net.layers[1].bias[0] = logit(0.3);
        let (fake_loss, _, _) = discriminator_loss_raw(&d, &[], &[(&a, &b)]).unwrap();
        assert!((real_loss + fake_loss - 0.579_818_495_252_942).abs() < 1e-9);
    }

    #[test]
    fn saturated_discriminator_loss_stays_finite() {
        let mut d = flat_discriminator(1);
        d.net.layers[1].bias[0] = 1e3;
        let (a, b) = ([1.0], [1.0]);
        let (loss, _, _) = discriminator_loss_raw(&d, &[(&a, &b)], &[(&a, &b)]).unwrap();
        assert!(loss.is_finite());
        d.net.layers[1].bias[0] = -1e3;
        let (loss, _, _) = discriminator_loss_raw(&d, &[(&a, &b)], &[(&a, &b)]).unwrap();
        assert!(loss.is_finite());
    }

    fn identity_generator(dim: usize) -> Generator {
        // Output = first half of the input, i.e. the conditioning embedding.
        let mut g = Generator::new(dim, 1.0, &mut stream(0, Stream::TeacherInit(0)));
        let l0 = &mut g.net.layers[0];
        l0.weight.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..2 * dim {
            l0.weight[i * 2 * dim + i] = 1.0;
        }
        let l1 = &mut g.net.layers[1];
        l1.weight.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..dim {
            l1.weight[i * 2 * dim + i] = 1.0;
        }
        g
    }

    #[test]
    fn generator_loss_reference_values() {
        let d = flat_discriminator(2);
        let g = identity_generator(2);
        let e = [0.6, -0.8];
        let z = vec![0.1, 0.9];
        let (loss, _) = generator_loss(&g, &d, &[&e], std::slice::from_ref(&z), 1.0).unwrap();
        assert!((loss - LN_2).abs() < 1e-12);

        // A generator that emits a vector orthogonal to e.
        let mut ortho = identity_generator(2);
        let l1 = &mut ortho.net.layers[1];
        l1.weight = vec![0.0, -1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0];
        let out = ortho.generate(&e, &z).unwrap();
        assert!(crate::math::dot(&out, &e).abs() < 1e-15);
        let (loss, _) = generator_loss(&ortho, &d, &[&e], &[z], 1.0).unwrap();
        assert!((loss - (LN_2 + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn consistency_weights_with_flat_discriminator_are_half() {
        let d = flat_discriminator(2);
        let w = TransitionNetwork::new(3, 2, Some(0.01), &mut stream(0, Stream::TeacherInit(1)));
        let (t1, s1, t2, s2) = ([1.0, 0.0, 2.0], [0.1, 0.2], [0.0, 1.0, 0.0], [0.4, -0.2]);
        let ws = consistency_weights(&d, &w, &[(&t1, &s1), (&t2, &s2)]).unwrap();
        assert_eq!(ws, vec![0.5, 0.5]);
    }
}
