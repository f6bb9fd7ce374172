//! Minimal dense networks with exact forward/backward passes.
//!
//! Each layer computes `z = W x + b`, applies an optional activation and then
//! an optional layer normalization. That covers the three small networks the
//! trainer needs (transition network, generator, discriminator).

mod adam;
mod init;

pub use adam::{Adam, AdamConfig, RowAdam};
pub use init::{init_dense, InitScheme};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::math::sigmoid;

/// Variance threshold below which layer normalization treats its input as
/// constant: the output is the shift vector and no gradient reaches the input.
pub const LAYER_NORM_EPS: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    None,
    LeakyRelu(f64),
    Sigmoid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerNorm {
    pub gain: Vec<f64>,
    pub shift: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major `outputs × inputs`.
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
    pub layer_norm: Option<LayerNorm>,
}

impl DenseLayer {
    pub fn new(inputs: usize, outputs: usize, activation: Activation, layer_norm: bool) -> Self {
        Self {
            inputs,
            outputs,
            weight: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
            activation,
            layer_norm: layer_norm.then(|| LayerNorm {
                gain: vec![1.0; outputs],
                shift: vec![0.0; outputs],
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseNet {
    pub layers: Vec<DenseLayer>,
}

#[derive(Debug, Clone)]
struct LayerCache {
    input: Vec<f64>,
    pre_activation: Vec<f64>,
    activated: Vec<f64>,
    /// Normalized activations and the standard deviation used, when layer
    /// norm is on. `std == 0` marks the degenerate constant-input case.
    normalized: Option<(Vec<f64>, f64)>,
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    layers: Vec<LayerCache>,
}

/// Parameter gradients mirroring a [`DenseNet`]'s tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct NetGrads {
    pub layers: Vec<LayerGrads>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads {
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
    pub gain: Option<Vec<f64>>,
    pub shift: Option<Vec<f64>>,
}

impl DenseNet {
    /// Chains layers, checking adjacent widths.
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self> {
        for pair in layers.windows(2) {
            check_len("layer chaining", pair[0].outputs, pair[1].inputs)?;
        }
        Ok(Self { layers })
    }

    /// Initializes every weight matrix with `scheme`; biases and layer-norm
    /// shifts start at zero, gains at one.
    pub fn initialize(&mut self, scheme: InitScheme, rng: &mut impl Rng) {
        for layer in &mut self.layers {
            layer.weight = init_dense(layer.outputs, layer.inputs, scheme, rng);
            layer.bias.iter_mut().for_each(|b| *b = 0.0);
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.inputs)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
        check_len("network input", self.input_dim(), x.len())?;
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut current = x.to_vec();
        for layer in &self.layers {
            let (out, cache) = layer_forward(layer, current);
            caches.push(cache);
            current = out;
        }
        Ok((current, ForwardCache { layers: caches }))
    }

    /// Forward pass without keeping intermediates.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.forward(x).map(|(y, _)| y)
    }

    /// Returns parameter gradients and the input gradient for output gradient `dy`.
    pub fn backward(&self, cache: &ForwardCache, dy: &[f64]) -> Result<(NetGrads, Vec<f64>)> {
        if cache.layers.len() != self.layers.len()
            || cache
                .layers
                .iter()
                .zip(&self.layers)
                .any(|(c, l)| c.input.len() != l.inputs || c.pre_activation.len() != l.outputs)
        {
            return Err(Error::State(
                "forward cache does not match this network".into(),
            ));
        }
        check_len("output gradient", self.output_dim(), dy.len())?;
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut upstream = dy.to_vec();
        for (layer, cache) in self.layers.iter().zip(&cache.layers).rev() {
            let (g, dx) = layer_backward(layer, cache, &upstream);
            grads.push(g);
            upstream = dx;
        }
        grads.reverse();
        Ok((NetGrads { layers: grads }, upstream))
    }

    pub fn zero_grads(&self) -> NetGrads {
        NetGrads {
            layers: self
                .layers
                .iter()
                .map(|l| LayerGrads {
                    weight: vec![0.0; l.weight.len()],
                    bias: vec![0.0; l.bias.len()],
                    gain: l.layer_norm.as_ref().map(|n| vec![0.0; n.gain.len()]),
                    shift: l.layer_norm.as_ref().map(|n| vec![0.0; n.shift.len()]),
                })
                .collect(),
        }
    }

    /// Parameter tensors in a fixed order: per layer weight, bias, gain, shift.
    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for l in &mut self.layers {
            out.push(&mut l.weight);
            out.push(&mut l.bias);
            if let Some(n) = &mut l.layer_norm {
                out.push(&mut n.gain);
                out.push(&mut n.shift);
            }
        }
        out
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for l in &self.layers {
            out.push(&l.weight);
            out.push(&l.bias);
            if let Some(n) = &l.layer_norm {
                out.push(&n.gain);
                out.push(&n.shift);
            }
        }
        out
    }

    pub fn tensor_names(&self, prefix: &str) -> Vec<String> {
        let mut out = Vec::new();
        for (i, l) in self.layers.iter().enumerate() {
            out.push(format!("{prefix}.{i}.weight"));
            out.push(format!("{prefix}.{i}.bias"));
            if l.layer_norm.is_some() {
                out.push(format!("{prefix}.{i}.ln_gain"));
                out.push(format!("{prefix}.{i}.ln_shift"));
            }
        }
        out
    }

    pub fn tensor_sizes(&self) -> Vec<usize> {
        self.tensors().iter().map(|t| t.len()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| crate::math::all_finite(t))
    }
}

impl NetGrads {
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for l in &self.layers {
            out.push(&l.weight);
            out.push(&l.bias);
            if let Some(g) = &l.gain {
                out.push(g);
            }
            if let Some(s) = &l.shift {
                out.push(s);
            }
        }
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out = Vec::new();
        for l in &mut self.layers {
            out.push(&mut l.weight);
            out.push(&mut l.bias);
            if let Some(g) = &mut l.gain {
                out.push(g);
            }
            if let Some(s) = &mut l.shift {
                out.push(s);
            }
        }
        out
    }

    /// `self += scale * other`
    pub fn add_scaled(&mut self, other: &NetGrads, scale: f64) {
        for (dst, src) in self.tensors_mut().into_iter().zip(other.tensors()) {
            crate::math::axpy(scale, src, dst);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= factor);
        }
    }
}

fn layer_forward(layer: &DenseLayer, input: Vec<f64>) -> (Vec<f64>, LayerCache) {
    let mut z = layer.bias.clone();
    for (o, zo) in z.iter_mut().enumerate() {
        let row = &layer.weight[o * layer.inputs..(o + 1) * layer.inputs];
        *zo += crate::math::dot(row, &input);
    }
    let a: Vec<f64> = match layer.activation {
        Activation::None => z.clone(),
        Activation::LeakyRelu(slope) => z
            .iter()
            .map(|&v| if v > 0.0 { v } else { slope * v })
            .collect(),
        Activation::Sigmoid => z.iter().map(|&v| sigmoid(v)).collect(),
    };
    let (out, normalized) = match &layer.layer_norm {
        None => (a.clone(), None),
        Some(ln) => {
            let n = a.len() as f64;
            let mean = a.iter().sum::<f64>() / n;
            let var = a.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let (xhat, std) = if var > LAYER_NORM_EPS {
                let std = var.sqrt();
                (a.iter().map(|v| (v - mean) / std).collect(), std)
            } else {
                (vec![0.0; a.len()], 0.0)
            };
            let out = xhat
                .iter()
                .zip(&ln.gain)
                .zip(&ln.shift)
                .map(|((x, g), s)| g * x + s)
                .collect();
            (out, Some((xhat, std)))
        }
    };
    (
        out,
        LayerCache {
            input,
            pre_activation: z,
            activated: a,
            normalized,
        },
    )
}

fn layer_backward(layer: &DenseLayer, cache: &LayerCache, dy: &[f64]) -> (LayerGrads, Vec<f64>) {
    let n = layer.outputs;
    let (da, gain_grad, shift_grad) = match (&layer.layer_norm, &cache.normalized) {
        (Some(ln), Some((xhat, std))) => {
            let dgain: Vec<f64> = dy.iter().zip(xhat).map(|(d, x)| d * x).collect();
            let dshift = dy.to_vec();
            let da = if *std == 0.0 {
                vec![0.0; n]
            } else {
                let dxhat: Vec<f64> = dy.iter().zip(&ln.gain).map(|(d, g)| d * g).collect();
                let mean_d = dxhat.iter().sum::<f64>() / n as f64;
                let mean_dx = dxhat.iter().zip(xhat).map(|(d, x)| d * x).sum::<f64>() / n as f64;
                dxhat
                    .iter()
                    .zip(xhat)
                    .map(|(d, x)| (d - mean_d - x * mean_dx) / std)
                    .collect()
            };
            (da, Some(dgain), Some(dshift))
        }
        _ => (dy.to_vec(), None, None),
    };
    let dz: Vec<f64> = match layer.activation {
        Activation::None => da,
        Activation::LeakyRelu(slope) => da
            .iter()
            .zip(&cache.pre_activation)
            .map(|(d, z)| if *z > 0.0 { *d } else { slope * d })
            .collect(),
        Activation::Sigmoid => da
            .iter()
            .zip(&cache.activated)
            .map(|(d, y)| d * y * (1.0 - y))
            .collect(),
    };
    let mut dw = vec![0.0; layer.weight.len()];
    let mut dx = vec![0.0; layer.inputs];
    for (o, &g) in dz.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        let row = &layer.weight[o * layer.inputs..(o + 1) * layer.inputs];
        let drow = &mut dw[o * layer.inputs..(o + 1) * layer.inputs];
        for i in 0..layer.inputs {
            drow[i] = g * cache.input[i];
            dx[i] += g * row[i];
        }
    }
    (
        LayerGrads {
            weight: dw,
            bias: dz,
            gain: gain_grad,
            shift: shift_grad,
        },
        dx,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    fn identity_layer(n: usize, activation: Activation) -> DenseLayer {
        let mut l = DenseLayer::new(n, n, activation, false);
        for i in 0..n {
            l.weight[i * n + i] = 1.0;
        }
        l
    }

    #[test]
    fn forward_identity_leaky_and_sigmoid() {
        let net = DenseNet::new(vec![identity_layer(2, Activation::None)]).unwrap();
        assert_eq!(net.predict(&[1.0, 2.0]).unwrap(), vec![1.0, 2.0]);

        let net = DenseNet::new(vec![identity_layer(2, Activation::LeakyRelu(0.01))]).unwrap();
        assert_eq!(net.predict(&[-1.0, 2.0]).unwrap(), vec![-0.01, 2.0]);

        let net = DenseNet::new(vec![identity_layer(1, Activation::Sigmoid)]).unwrap();
        assert_eq!(net.predict(&[0.0]).unwrap(), vec![0.5]);
    }

    #[test]
    fn forward_rejects_wrong_width_and_bad_chaining() {
        let net = DenseNet::new(vec![identity_layer(2, Activation::None)]).unwrap();
        assert!(matches!(net.forward(&[1.0]), Err(Error::Shape { .. })));
        assert!(DenseNet::new(vec![
            DenseLayer::new(2, 3, Activation::None, false),
            DenseLayer::new(4, 1, Activation::None, false)
        ])
        .is_err());
    }

    #[test]
    fn linear_weight_gradient_is_outer_product() {
        let mut l = DenseLayer::new(2, 1, Activation::None, false);
        l.weight = vec![0.3, -0.7];
        let net = DenseNet::new(vec![l]).unwrap();
        let (_, cache) = net.forward(&[1.0, 2.0]).unwrap();
        let (g, dx) = net.backward(&cache, &[1.0]).unwrap();
        assert_eq!(g.layers[0].weight, vec![1.0, 2.0]);
        assert_eq!(dx, vec![0.3, -0.7]);
    }

    #[test]
    fn layer_norm_constant_input_gives_shift_and_zero_input_grad() {
        let mut l = identity_layer(3, Activation::None);
        l.layer_norm = Some(LayerNorm {
            gain: vec![2.0, 2.0, 2.0],
            shift: vec![0.1, 0.2, 0.3],
        });
        let net = DenseNet::new(vec![l]).unwrap();
        let (y, cache) = net.forward(&[4.0, 4.0, 4.0]).unwrap();
        assert_eq!(y, vec![0.1, 0.2, 0.3]);
        let (_, dx) = net.backward(&cache, &[1.0, -2.0, 0.5]).unwrap();
        assert_eq!(dx, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn layer_norm_output_is_standardized() {
        let mut l = identity_layer(5, Activation::None);
        l.layer_norm = Some(LayerNorm {
            gain: vec![1.0; 5],
            shift: vec![0.0; 5],
        });
        let net = DenseNet::new(vec![l]).unwrap();
        let y = net.predict(&[0.3, -1.2, 4.0, 0.0, 2.5]).unwrap();
        let mean = y.iter().sum::<f64>() / 5.0;
        let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 5.0;
        assert!(mean.abs() < 1e-12 && (var - 1.0).abs() < 1e-9);
    }

    #[test]
    fn stale_cache_is_a_state_error() {
        let mut rng = stream(1, Stream::TeacherInit(0));
        let mut a = DenseNet::new(vec![DenseLayer::new(3, 2, Activation::None, false)]).unwrap();
        a.initialize(InitScheme::FanUniform, &mut rng);
        let b = DenseNet::new(vec![DenseLayer::new(4, 2, Activation::None, false)]).unwrap();
        let (_, cache) = a.forward(&[1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(
            b.backward(&cache, &[1.0, 1.0]),
            Err(Error::State(_))
        ));
    }
}
