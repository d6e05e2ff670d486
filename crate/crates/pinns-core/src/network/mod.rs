//! Fully connected feedforward network `u_θ = C_K ∘ σ ∘ C_{K-1} ∘ … ∘ σ ∘ C_1`.
//!
//! Parameters live in one flat vector laid out layer by layer: the weight
//! matrix of layer `k` in row-major order (rows = outputs), followed by its
//! bias. The last layer is affine with no activation.

mod batched;
mod checkpoint;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Jet2, Scalar};
use crate::error::{Error, Result};

pub use crate::autodiff::Activation;
pub use batched::{BatchGrad, BatchJets, JetLayout};
pub use checkpoint::{Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MlpArchitecture {
    pub input_dim: usize,
    pub output_dim: usize,
    /// Number of hidden layers, `K - 1`.
    pub hidden_layers: usize,
    pub hidden_width: usize,
    #[serde(default)]
    pub activation: Activation,
}

/// Offsets of one affine layer inside the flat parameter vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LayerSlice {
    pub weights: usize,
    pub bias: usize,
    pub rows: usize,
    pub cols: usize,
}

impl MlpArchitecture {
    pub fn new(input_dim: usize, output_dim: usize, hidden_layers: usize, hidden_width: usize) -> Self {
        Self {
            input_dim,
            output_dim,
            hidden_layers,
            hidden_width,
            activation: Activation::Tanh,
        }
    }

    pub fn with_activation(mut self, activation: Activation) -> Self {
        self.activation = activation;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 || self.hidden_layers == 0 || self.hidden_width == 0 {
            return Err(Error::Config(format!("architecture sizes must be positive: {self:?}")));
        }
        Ok(())
    }

    /// `[d_1, …, d_K]` with `d_1` the input and `d_K` the output dimension.
    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = Vec::with_capacity(self.hidden_layers + 2);
        sizes.push(self.input_dim);
        sizes.extend(std::iter::repeat_n(self.hidden_width, self.hidden_layers));
        sizes.push(self.output_dim);
        sizes
    }

    /// `M = Σ_k (d_k + 1) d_{k+1}`.
    pub fn param_count(&self) -> usize {
        self.layer_sizes().windows(2).map(|w| (w[0] + 1) * w[1]).sum()
    }

    pub fn layers(&self) -> Vec<LayerSlice> {
        let mut offset = 0;
        self.layer_sizes()
            .windows(2)
            .map(|w| {
                let (cols, rows) = (w[0], w[1]);
                let slice = LayerSlice {
                    weights: offset,
                    bias: offset + rows * cols,
                    rows,
                    cols,
                };
                offset += (cols + 1) * rows;
                slice
            })
            .collect()
    }

    /// Indices of the weight entries (biases excluded).
    pub fn weight_indices(&self) -> Vec<usize> {
        self.layers()
            .iter()
            .flat_map(|l| l.weights..l.weights + l.rows * l.cols)
            .collect()
    }

    /// Per-parameter flag: `true` for weights, `false` for biases.
    pub fn weight_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.param_count()];
        for i in self.weight_indices() {
            mask[i] = true;
        }
        mask
    }
}

/// Flat trainable parameter vector `θ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParameterVector(pub Vec<f64>);

impl ParameterVector {
    pub fn zeros(arch: &MlpArchitecture) -> Self {
        Self(vec![0.0; arch.param_count()])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Splits into per-layer `(weights, bias)` slices.
    pub fn unflatten<'a>(&'a self, arch: &MlpArchitecture) -> Vec<(&'a [f64], &'a [f64])> {
        arch.layers()
            .iter()
            .map(|l| {
                (
                    &self.0[l.weights..l.weights + l.rows * l.cols],
                    &self.0[l.bias..l.bias + l.rows],
                )
            })
            .collect()
    }

    /// Inverse of [`ParameterVector::unflatten`].
    pub fn flatten(layers: &[(&[f64], &[f64])]) -> Self {
        let mut theta = Vec::new();
        for (w, b) in layers {
            theta.extend_from_slice(w);
            theta.extend_from_slice(b);
        }
        Self(theta)
    }

    /// `‖θ_W‖_q^q` over weights only.
    pub fn weight_norm_pow(&self, arch: &MlpArchitecture, q: i32) -> f64 {
        arch.weight_indices()
            .into_iter()
            .map(|i| self.0[i].abs().powi(q))
            .sum()
    }
}

/// Glorot-uniform weights, zero biases.
pub fn init(arch: &MlpArchitecture, seed: u64) -> ParameterVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut theta = vec![0.0; arch.param_count()];
    for l in arch.layers() {
        let bound = (6.0 / (l.rows + l.cols) as f64).sqrt();
        for w in &mut theta[l.weights..l.weights + l.rows * l.cols] {
            *w = rng.gen_range(-bound..=bound);
        }
    }
    ParameterVector(theta)
}

/// Plain evaluation `u_θ(x)`.
pub fn forward(arch: &MlpArchitecture, theta: &[f64], x: &[f64]) -> Vec<f64> {
    assert_eq!(x.len(), arch.input_dim, "input dimension");
    assert_eq!(theta.len(), arch.param_count(), "parameter count");
    let layers = arch.layers();
    let last = layers.len() - 1;
    let mut z = x.to_vec();
    for (k, l) in layers.iter().enumerate() {
        let w = &theta[l.weights..l.weights + l.rows * l.cols];
        let b = &theta[l.bias..l.bias + l.rows];
        let mut next = Vec::with_capacity(l.rows);
        for j in 0..l.rows {
            let row = &w[j * l.cols..(j + 1) * l.cols];
            let mut acc = b[j];
            for (wi, zi) in row.iter().zip(&z) {
                acc += *wi * *zi;
            }
            next.push(if k < last { arch.activation.apply(acc) } else { acc });
        }
        z = next;
    }
    z
}

/// Evaluation carrying a full second-order jet (all first derivatives and the
/// Hessian diagonal) for each output component. With `S = Var` every jet
/// component is differentiable with respect to `theta`.
pub fn forward_jet<S: Scalar>(arch: &MlpArchitecture, theta: &[S], x: &[f64]) -> Vec<Jet2<S>> {
    assert_eq!(x.len(), arch.input_dim, "input dimension");
    assert_eq!(theta.len(), arch.param_count(), "parameter count");
    let dim = arch.input_dim;
    let layers = arch.layers();
    let last = layers.len() - 1;
    let mut z: Vec<Jet2<S>> = Jet2::seed(x);
    for (k, l) in layers.iter().enumerate() {
        let w = &theta[l.weights..l.weights + l.rows * l.cols];
        let b = &theta[l.bias..l.bias + l.rows];
        let mut next = Vec::with_capacity(l.rows);
        for j in 0..l.rows {
            let row = &w[j * l.cols..(j + 1) * l.cols];
            let mut value = b[j];
            let mut d1 = vec![S::constant(0.0); dim];
            let mut d2 = vec![S::constant(0.0); dim];
            for (i, (&wi, zi)) in row.iter().zip(&z).enumerate() {
                value = value + wi * zi.value;
                for c in 0..dim {
                    if k == 0 {
                        // seeded inputs: d1 is e_i, d2 vanishes
                        if c == i {
                            d1[c] = d1[c] + wi;
                        }
                    } else {
                        d1[c] = d1[c] + wi * zi.d1[c];
                        d2[c] = d2[c] + wi * zi.d2[c];
                    }
                }
            }
            let pre = Jet2 { value, d1, d2 };
            next.push(if k < last { pre.activation(arch.activation) } else { pre });
        }
        z = next;
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{reverse_gradient, Tape};

    #[test]
    fn param_count_examples() {
        assert_eq!(MlpArchitecture::new(2, 1, 1, 20).param_count(), 81);
        assert_eq!(MlpArchitecture::new(2, 1, 4, 24).param_count(), 1897);
        assert_eq!(MlpArchitecture::new(101, 1, 4, 20).param_count(), 3321);
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let arch = MlpArchitecture::new(3, 2, 3, 16);
        let a = init(&arch, 42);
        let b = init(&arch, 42);
        assert_eq!(a, b);
        assert_ne!(a, init(&arch, 43));
        assert_eq!(a.len(), arch.param_count());
        for l in arch.layers() {
            let bound = (6.0 / (l.rows + l.cols) as f64).sqrt();
            assert!(a.0[l.weights..l.weights + l.rows * l.cols].iter().all(|w| w.abs() <= bound));
            assert!(a.0[l.bias..l.bias + l.rows].iter().all(|&b| b == 0.0));
        }
    }

    #[test]
    fn glorot_weights_have_zero_mean() {
        // 10⁴ draws from U(-b, b): mean within 3 standard errors b/√(3n)
        let arch = MlpArchitecture::new(50, 50, 1, 100);
        let theta = init(&arch, 7);
        let l = arch.layers()[0];
        let w = &theta.0[l.weights..l.weights + 10_000];
        let bound = (6.0 / 150.0f64).sqrt();
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        let se = bound / (3.0 * w.len() as f64).sqrt();
        assert!(mean.abs() < 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn flatten_unflatten_roundtrip() {
        let arch = MlpArchitecture::new(2, 3, 2, 5);
        let theta = init(&arch, 1);
        assert_eq!(ParameterVector::flatten(&theta.unflatten(&arch)), theta);
    }

    #[test]
    fn zero_network_outputs_zero() {
        let arch = MlpArchitecture::new(2, 1, 3, 8);
        let theta = ParameterVector::zeros(&arch);
        assert_eq!(forward(&arch, theta.as_slice(), &[0.3, -0.9]), vec![0.0]);
        let jets = forward_jet(&arch, theta.as_slice(), &[0.3, -0.9]);
        assert_eq!(jets[0], Jet2::constant(0.0, 2));
    }

    #[test]
    fn hand_set_single_hidden_layer_is_tanh() {
        // one hidden neuron: u(x) = 1·tanh(1·x₁ + 0·x₂)
        let arch = MlpArchitecture::new(2, 1, 1, 1);
        let theta = vec![1.0, 0.0, 0.0, 1.0, 0.0];
        for i in 0..10 {
            let x1 = -2.0 + 0.4 * i as f64;
            let u = forward(&arch, &theta, &[x1, 0.5]);
            assert!((u[0] - x1.tanh()).abs() < 1e-15);
        }
    }

    #[test]
    fn forward_matches_jet_value_bitwise() {
        let arch = MlpArchitecture::new(3, 2, 3, 7);
        let theta = init(&arch, 3);
        for i in 0..20 {
            let x = [0.1 * i as f64, -0.05 * i as f64, 0.7];
            let plain = forward(&arch, theta.as_slice(), &x);
            let jets = forward_jet(&arch, theta.as_slice(), &x);
            for (p, j) in plain.iter().zip(&jets) {
                assert_eq!(p.to_bits(), j.value.to_bits());
            }
        }
    }

    #[test]
    fn linear_network_has_no_curvature() {
        let arch = MlpArchitecture::new(2, 1, 2, 6).with_activation(Activation::Identity);
        let theta = init(&arch, 9);
        let jets = forward_jet(&arch, theta.as_slice(), &[0.2, 0.4]);
        assert!(jets[0].d2.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn jet_laplacian_matches_five_point_stencil() {
        let arch = MlpArchitecture::new(2, 1, 2, 20);
        let theta = init(&arch, 11);
        let u = |x: f64, y: f64| forward(&arch, theta.as_slice(), &[x, y])[0];
        let h = 1e-3;
        for &(x, y) in &[(0.2, 0.3), (0.5, 0.5), (0.9, 0.1)] {
            let fd = (u(x + h, y) + u(x - h, y) + u(x, y + h) + u(x, y - h) - 4.0 * u(x, y)) / (h * h);
            let jet = forward_jet(&arch, theta.as_slice(), &[x, y]);
            let lap = jet[0].laplacian(0..2);
            assert!((lap - fd).abs() <= 1e-4 * lap.abs().max(1.0), "{lap} vs {fd}");
        }
    }

    #[test]
    fn jet_parameter_gradient_matches_generic_tape() {
        let arch = MlpArchitecture::new(2, 1, 2, 4);
        let theta = init(&arch, 5);
        let tape = Tape::new();
        let params = tape.inputs(theta.as_slice());
        let jets = forward_jet(&arch, &params, &[0.3, 0.6]);
        let lap = jets[0].laplacian(0..2);
        let g = reverse_gradient(&(lap * lap), &params).unwrap();
        let lap_of = |t: &[f64]| forward_jet(&arch, t, &[0.3, 0.6])[0].laplacian(0..2);
        for m in 0..arch.param_count() {
            let mut p = theta.0.clone();
            let mut q = theta.0.clone();
            p[m] += 1e-6;
            q[m] -= 1e-6;
            let fd = (lap_of(&p).powi(2) - lap_of(&q).powi(2)) / 2e-6;
            assert!((g[m] - fd).abs() <= 1e-4 * fd.abs().max(1e-3), "param {m}: {} vs {fd}", g[m]);
        }
    }
}
