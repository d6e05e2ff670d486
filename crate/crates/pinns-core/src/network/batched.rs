//! Batched jet propagation with a fused reverse pass.
//!
//! This is the training hot path. A batch of points is propagated as one
//! matrix per layer whose columns are `(point, jet component)` pairs, so each
//! affine layer is a single GEMM. The reverse pass applies the adjoint of the
//! second-order activation rule layer by layer and accumulates `∂J/∂θ` from
//! the adjoints of the output jet components. It computes exactly what the
//! scalar tape computes through [`super::forward_jet`] with `S = Var`, only
//! with layer-sized operations.

use crate::autodiff::Jet2;
use crate::error::{Error, Result};

use super::MlpArchitecture;

/// Which input derivatives a batched evaluation carries.
///
/// Component 0 is the value, then one first derivative per coordinate in
/// `d1`, then one second derivative per coordinate in `d2`. Every `d2`
/// coordinate needs its first derivative too.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JetLayout {
    d1: Vec<usize>,
    d2: Vec<usize>,
    /// For each d2 entry, the component index of the matching d1 entry.
    d2_src: Vec<usize>,
}

impl JetLayout {
    pub fn value_only() -> Self {
        Self {
            d1: Vec::new(),
            d2: Vec::new(),
            d2_src: Vec::new(),
        }
    }

    pub fn new(d1: Vec<usize>, d2: Vec<usize>) -> Result<Self> {
        let d2_src = d2
            .iter()
            .map(|c| {
                d1.iter()
                    .position(|x| x == c)
                    .map(|k| 1 + k)
                    .ok_or_else(|| Error::Config(format!("second derivative in coordinate {c} needs its first derivative")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { d1, d2, d2_src })
    }

    /// First derivatives only.
    pub fn gradient(coords: impl IntoIterator<Item = usize>) -> Self {
        Self::new(coords.into_iter().collect(), Vec::new()).expect("no d2 entries")
    }

    pub fn components(&self) -> usize {
        1 + self.d1.len() + self.d2.len()
    }

    pub fn d1_coords(&self) -> &[usize] {
        &self.d1
    }

    pub fn d2_coords(&self) -> &[usize] {
        &self.d2
    }

    fn first_d2(&self) -> usize {
        1 + self.d1.len()
    }

    /// Component index carrying `∂/∂y_coord`.
    pub fn d1_slot(&self, coord: usize) -> Option<usize> {
        self.d1.iter().position(|&c| c == coord).map(|k| 1 + k)
    }

    /// Component index carrying `∂²/∂y_coord²`.
    pub fn d2_slot(&self, coord: usize) -> Option<usize> {
        self.d2.iter().position(|&c| c == coord).map(|k| self.first_d2() + k)
    }
}

/// Stored forward state for one batch.
#[derive(Clone, Debug)]
pub struct BatchJets {
    layout: JetLayout,
    n_points: usize,
    input_dim: usize,
    output_dim: usize,
    /// Seeded input matrix (`d̄ × cols`).
    seed: Vec<f64>,
    /// Pre-activations of the hidden layers (`width × cols` each).
    pre: Vec<Vec<f64>>,
    /// Post-activations of the hidden layers.
    post: Vec<Vec<f64>>,
    /// Network output (`m × cols`).
    output: Vec<f64>,
}

/// Gradient accumulator matching the flat parameter layout.
pub type BatchGrad = Vec<f64>;

#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    rsa: usize,
    csa: usize,
    b: &[f64],
    rsb: usize,
    csb: usize,
    beta: f64,
    c: &mut [f64],
    rsc: usize,
) {
    if m == 0 || n == 0 {
        return;
    }
    debug_assert!(a.len() > (m - 1) * rsa + (k.max(1) - 1) * csa || k == 0);
    debug_assert!(c.len() >= (m - 1) * rsc + n);
    // SAFETY: the strides describe matrices that lie inside the given slices
    // (checked by the callers' construction and the debug assertions above),
    // and `c` does not alias `a` or `b`.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            rsc as isize,
            1,
        );
    }
}

/// `A·B` into a fresh `m × n` row-major buffer.
#[allow(clippy::too_many_arguments)]
fn gemm_new(m: usize, k: usize, n: usize, a: &[f64], rsa: usize, csa: usize, b: &[f64], rsb: usize, csb: usize) -> Vec<f64> {
    let len = m * n;
    if len == 0 {
        return Vec::new();
    }
    debug_assert!(a.len() > (m - 1) * rsa + (k.max(1) - 1) * csa || k == 0);
    let mut c: Vec<f64> = Vec::with_capacity(len);
    // SAFETY: as in `gemm`; with β = 0 dgemm writes every element of C
    // without reading it, so the buffer is fully initialized before
    // `set_len`.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            0.0,
            c.spare_capacity_mut().as_mut_ptr().cast::<f64>(),
            n as isize,
            1,
        );
        c.set_len(len);
    }
    c
}

impl BatchJets {
    /// Propagates `points` (row-major, `n × d̄`) through the network.
    pub fn forward(arch: &MlpArchitecture, theta: &[f64], points: &[f64], layout: &JetLayout) -> Self {
        let d = arch.input_dim;
        assert_eq!(theta.len(), arch.param_count(), "parameter count");
        assert_eq!(points.len() % d, 0, "point buffer");
        let n_points = points.len() / d;
        let comps = layout.components();
        let cols = n_points * comps;

        let mut seed = vec![0.0; d * cols];
        for p in 0..n_points {
            let base = p * comps;
            for i in 0..d {
                seed[i * cols + base] = points[p * d + i];
            }
            for (k, &c) in layout.d1.iter().enumerate() {
                seed[c * cols + base + 1 + k] = 1.0;
            }
        }

        let layers = arch.layers();
        let last = layers.len() - 1;
        let mut pre = Vec::with_capacity(last);
        let mut post: Vec<Vec<f64>> = Vec::with_capacity(last);
        let mut output = Vec::new();
        for (li, l) in layers.iter().enumerate() {
            let input: &[f64] = if li == 0 { &seed } else { &post[li - 1] };
            let w = &theta[l.weights..l.weights + l.rows * l.cols];
            let b = &theta[l.bias..l.bias + l.rows];
            let mut a = gemm_new(l.rows, l.cols, cols, w, l.cols, 1, input, cols, 1);
            for j in 0..l.rows {
                let row = &mut a[j * cols..(j + 1) * cols];
                for p in 0..n_points {
                    row[p * comps] += b[j];
                }
            }
            if li == last {
                output = a;
            } else {
                let z = activate(&a, l.rows, n_points, layout, arch.activation);
                pre.push(a);
                post.push(z);
            }
        }
        Self {
            layout: layout.clone(),
            n_points,
            input_dim: d,
            output_dim: arch.output_dim,
            seed,
            pre,
            post,
            output,
        }
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn layout(&self) -> &JetLayout {
        &self.layout
    }

    fn cols(&self) -> usize {
        self.n_points * self.layout.components()
    }

    /// Raw output component `comp` of output `out` at point `p`.
    pub fn component(&self, p: usize, out: usize, comp: usize) -> f64 {
        self.output[out * self.cols() + p * self.layout.components() + comp]
    }

    pub fn value(&self, p: usize, out: usize) -> f64 {
        self.component(p, out, 0)
    }

    /// Output jet at point `p` with full-length `d1`/`d2` vectors; entries the
    /// layout does not carry are NaN so accidental use is loud.
    pub fn jet(&self, p: usize, out: usize) -> Jet2<f64> {
        let mut jet = Jet2 {
            value: self.value(p, out),
            d1: vec![f64::NAN; self.input_dim],
            d2: vec![f64::NAN; self.input_dim],
        };
        for (k, &c) in self.layout.d1.iter().enumerate() {
            jet.d1[c] = self.component(p, out, 1 + k);
        }
        for (k, &c) in self.layout.d2.iter().enumerate() {
            jet.d2[c] = self.component(p, out, self.layout.first_d2() + k);
        }
        jet
    }

    /// Accumulates `∂J/∂θ` into `grad` given `∂J/∂(output component)` laid out
    /// like the output matrix (`m × cols`, see [`BatchJets::adjoint_index`]).
    pub fn backward(&self, arch: &MlpArchitecture, theta: &[f64], out_adjoint: &[f64], grad: &mut [f64]) {
        let cols = self.cols();
        let comps = self.layout.components();
        assert_eq!(out_adjoint.len(), self.output_dim * cols, "adjoint buffer");
        assert_eq!(grad.len(), theta.len(), "gradient buffer");
        let layers = arch.layers();
        let mut a_bar = out_adjoint.to_vec();
        for li in (0..layers.len()).rev() {
            let l = layers[li];
            let input: &[f64] = if li == 0 { &self.seed } else { &self.post[li - 1] };
            // W̄ += Ā Zᵀ
            gemm(
                l.rows,
                cols,
                l.cols,
                &a_bar,
                cols,
                1,
                input,
                1,
                cols,
                1.0,
                &mut grad[l.weights..l.weights + l.rows * l.cols],
                l.cols,
            );
            for j in 0..l.rows {
                let row = &a_bar[j * cols..(j + 1) * cols];
                grad[l.bias + j] += (0..self.n_points).map(|p| row[p * comps]).sum::<f64>();
            }
            if li == 0 {
                break;
            }
            // Z̄ = Wᵀ Ā
            let w = &theta[l.weights..l.weights + l.rows * l.cols];
            let z_bar = gemm_new(l.cols, l.rows, cols, w, 1, l.cols, &a_bar, cols, 1);
            a_bar = activate_adjoint(
                &self.pre[li - 1],
                &self.post[li - 1],
                &z_bar,
                l.cols,
                self.n_points,
                &self.layout,
                arch.activation,
            );
        }
    }

    /// Flat index of output `out`, component `comp` at point `p` in the
    /// adjoint buffer passed to [`BatchJets::backward`].
    pub fn adjoint_index(&self, p: usize, out: usize, comp: usize) -> usize {
        out * self.cols() + p * self.layout.components() + comp
    }

    pub fn adjoint_len(&self) -> usize {
        self.output_dim * self.cols()
    }
}

fn activate(a: &[f64], rows: usize, n_points: usize, layout: &JetLayout, kind: super::Activation) -> Vec<f64> {
    let comps = layout.components();
    let cols = n_points * comps;
    let n1 = layout.d1.len();
    let f2 = layout.first_d2();
    let mut z = Vec::with_capacity(rows * cols);
    let mut zv = vec![0.0; comps];
    for j in 0..rows {
        for p in 0..n_points {
            let base = j * cols + p * comps;
            let av = &a[base..base + comps];
            let [s, s1, s2, _] = kind.derivatives(av[0]);
            zv[0] = if kind == super::Activation::Identity { av[0] } else { s };
            for k in 1..=n1 {
                zv[k] = s1 * av[k];
            }
            for (m, &src) in layout.d2_src.iter().enumerate() {
                let d1 = av[src];
                zv[f2 + m] = s2 * (d1 * d1) + s1 * av[f2 + m];
            }
            z.extend_from_slice(&zv);
        }
    }
    z
}

fn activate_adjoint(
    a: &[f64],
    z: &[f64],
    z_bar: &[f64],
    rows: usize,
    n_points: usize,
    layout: &JetLayout,
    kind: super::Activation,
) -> Vec<f64> {
    let comps = layout.components();
    let cols = n_points * comps;
    let n1 = layout.d1.len();
    let f2 = layout.first_d2();
    let mut a_bar = Vec::with_capacity(rows * cols);
    let mut ab = vec![0.0; comps];
    for j in 0..rows {
        for p in 0..n_points {
            let base = j * cols + p * comps;
            let av = &a[base..base + comps];
            let zb = &z_bar[base..base + comps];
            let [_, s1, s2, s3] = kind.derivatives_from_value(av[0], z[base]);
            let mut v = zb[0] * s1;
            for k in 1..=n1 {
                v += zb[k] * s2 * av[k];
                ab[k] = zb[k] * s1;
            }
            for (m, &src) in layout.d2_src.iter().enumerate() {
                let g = zb[f2 + m];
                let d1 = av[src];
                v += g * (s3 * (d1 * d1) + s2 * av[f2 + m]);
                ab[src] += g * 2.0 * s2 * d1;
                ab[f2 + m] = g * s1;
            }
            ab[0] = v;
            a_bar.extend_from_slice(&ab);
        }
    }
    a_bar
}
