//! Loss assembly.
//!
//! `J(θ) = Σ_d w|R_d|² + Σ_sb w|R_sb|² + λ Σ_int w|R|² + λ_reg ‖θ_W‖_q^q`.
//!
//! [`assemble_loss`] builds `J` on the scalar tape from full input jets. It is
//! the reference. [`LossEvaluator`] computes the same value and gradient with
//! the batched kernels and is what the optimizers call.

use serde::{Deserialize, Serialize};

use crate::autodiff::{Jet2, Scalar, Tape, Var};
use crate::error::Result;
use crate::network::{forward_jet, BatchJets, JetLayout, MlpArchitecture};
use crate::problems::{PointSet, ProblemSpec, SetKind, TrainingSets};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    /// Weight of the interior residual.
    pub lambda: f64,
    pub lambda_reg: f64,
    /// Regularization exponent.
    pub q: i32,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda: 1e-3,
            lambda_reg: 0.0,
            q: 2,
        }
    }
}

/// Weighted squared residual sums at one θ.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossTerms {
    /// `Σ_d w |R_d|²`
    pub data: f64,
    /// `Σ_sb w |R_sb|²`
    pub boundary: f64,
    /// `Σ_int w |R|²`
    pub pde: f64,
    /// `‖θ_W‖_q^q`
    pub reg: f64,
}

impl LossTerms {
    pub fn total(&self, w: &LossWeights) -> f64 {
        self.data + self.boundary + w.lambda * self.pde + w.lambda_reg * self.reg
    }

    pub fn e_d(&self) -> f64 {
        self.data.sqrt()
    }

    pub fn e_sb(&self) -> f64 {
        self.boundary.sqrt()
    }

    pub fn e_p(&self) -> f64 {
        self.pde.sqrt()
    }

    /// `E_T = √(E_d² + E_sb² + λ E_p²)`.
    pub fn e_t(&self, lambda: f64) -> f64 {
        (self.data + self.boundary + lambda * self.pde).sqrt()
    }
}

fn set_coef(kind: SetKind, lambda: f64) -> f64 {
    match kind {
        SetKind::Interior => lambda,
        _ => 1.0,
    }
}

/// Weighted squared residual sums `[data, boundary, pde]` of an arbitrary jet
/// field, e.g. a closed-form oracle field or a network on the tape.
pub fn residual_sums<S: Scalar>(
    spec: &ProblemSpec,
    sets: &TrainingSets,
    mut field: impl FnMut(&[f64]) -> Vec<Jet2<S>>,
) -> [S; 3] {
    let mut sum_set = |set: &PointSet| {
        let mut acc = S::constant(0.0);
        for i in 0..set.len() {
            let jets = field(set.quad.point(i));
            let r = spec.residuals(set.kind, &jets, set.target(i));
            let sq = r.iter().fold(S::constant(0.0), |a, &v| a + v * v);
            acc = acc + sq * set.quad.weights[i];
        }
        acc
    };
    let data = sum_set(&sets.data);
    let boundary = sets.boundary.as_ref().map_or(S::constant(0.0), &mut sum_set);
    let pde = sum_set(&sets.interior);
    [data, boundary, pde]
}

/// `J(θ)` on the tape, with `theta` the recorded parameters.
pub fn assemble_loss<'t>(
    spec: &ProblemSpec,
    sets: &TrainingSets,
    arch: &MlpArchitecture,
    theta: &[Var<'t>],
    w: &LossWeights,
) -> Result<Var<'t>> {
    sets.check(spec)?;
    let [data, boundary, pde] = residual_sums(spec, sets, |x| forward_jet(arch, theta, x));
    let mut reg = Var::constant(0.0);
    if w.lambda_reg != 0.0 {
        for i in arch.weight_indices() {
            // |θ|^q
            let t = if theta[i].value() < 0.0 { -theta[i] } else { theta[i] };
            reg = reg + t.powi(w.q);
        }
    }
    Ok(data + boundary + pde * w.lambda + reg * w.lambda_reg)
}

/// Points per batch. Results do not depend on it beyond rounding, and the
/// accumulation order is fixed, so runs are reproducible.
const CHUNK: usize = 256;

/// Batched `J(θ)` and `∇J(θ)`.
#[derive(Clone, Debug)]
pub struct LossEvaluator<'a> {
    spec: &'a ProblemSpec,
    sets: &'a TrainingSets,
    arch: &'a MlpArchitecture,
    weights: LossWeights,
    layouts: [JetLayout; 3],
    weight_indices: Vec<usize>,
}

impl<'a> LossEvaluator<'a> {
    pub fn new(spec: &'a ProblemSpec, sets: &'a TrainingSets, arch: &'a MlpArchitecture, weights: LossWeights) -> Result<Self> {
        sets.check(spec)?;
        arch.validate()?;
        if arch.input_dim != spec.input_dim() || arch.output_dim != spec.output_dim() {
            return Err(crate::error::Error::SetMismatch(format!(
                "network maps {} -> {}, problem `{}` needs {} -> {}",
                arch.input_dim,
                arch.output_dim,
                spec.id,
                spec.input_dim(),
                spec.output_dim()
            )));
        }
        Ok(Self {
            spec,
            sets,
            arch,
            weights,
            layouts: [
                spec.layout(SetKind::Interior),
                spec.layout(SetKind::Boundary),
                spec.layout(SetKind::Data),
            ],
            weight_indices: arch.weight_indices(),
        })
    }

    pub fn weights(&self) -> &LossWeights {
        &self.weights
    }

    fn layout(&self, kind: SetKind) -> &JetLayout {
        match kind {
            SetKind::Interior => &self.layouts[0],
            SetKind::Boundary => &self.layouts[1],
            SetKind::Data => &self.layouts[2],
        }
    }

    fn reg(&self, theta: &[f64]) -> f64 {
        self.weight_indices.iter().map(|&i| theta[i].abs().powi(self.weights.q)).sum()
    }

    /// Residual sums without gradients.
    pub fn terms(&self, theta: &[f64]) -> LossTerms {
        let mut sums = [0.0; 3];
        for set in self.sets.sets() {
            let layout = self.layout(set.kind);
            let d = set.quad.dim;
            let mut acc = 0.0;
            for start in (0..set.len()).step_by(CHUNK) {
                let end = (start + CHUNK).min(set.len());
                let batch = BatchJets::forward(self.arch, theta, &set.quad.points[start * d..end * d], layout);
                for p in 0..end - start {
                    let jets: Vec<Jet2<f64>> = (0..self.arch.output_dim).map(|o| batch.jet(p, o)).collect();
                    let r = self.spec.residuals(set.kind, &jets, set.target(start + p));
                    acc += set.quad.weights[start + p] * r.iter().map(|v| v * v).sum::<f64>();
                }
            }
            sums[set_index(set.kind)] = acc;
        }
        LossTerms {
            data: sums[0],
            boundary: sums[1],
            pde: sums[2],
            reg: self.reg(theta),
        }
    }

    pub fn value(&self, theta: &[f64]) -> f64 {
        self.terms(theta).total(&self.weights)
    }

    /// `(J, ∇J)`. A non-finite intermediate yields `(NaN, 0)` so a line
    /// search can back off.
    pub fn value_and_gradient(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; theta.len()];
        let mut total = 0.0;
        for set in self.sets.sets() {
            let coef = set_coef(set.kind, self.weights.lambda);
            match self.accumulate(set, coef, theta, &mut grad) {
                Some(v) => total += coef * v,
                None => return (f64::NAN, vec![0.0; theta.len()]),
            }
        }
        if self.weights.lambda_reg != 0.0 {
            let q = self.weights.q;
            for &i in &self.weight_indices {
                let t = theta[i];
                total += self.weights.lambda_reg * t.abs().powi(q);
                grad[i] += self.weights.lambda_reg * f64::from(q) * t.abs().powi(q - 1) * t.signum();
            }
        }
        (total, grad)
    }

    /// Adds `coef · ∇ Σ w|R|²` of one set to `grad` and returns `Σ w|R|²`.
    fn accumulate(&self, set: &PointSet, coef: f64, theta: &[f64], grad: &mut [f64]) -> Option<f64> {
        let layout = self.layout(set.kind);
        let comps = layout.components();
        let d = set.quad.dim;
        let m = self.arch.output_dim;
        let mut acc = 0.0;
        for start in (0..set.len()).step_by(CHUNK) {
            let end = (start + CHUNK).min(set.len());
            let n = end - start;
            let batch = BatchJets::forward(self.arch, theta, &set.quad.points[start * d..end * d], layout);
            let tape = Tape::with_capacity(m * n * comps * 4);
            let mut inputs = Vec::with_capacity(batch.adjoint_len());
            for o in 0..m {
                for p in 0..n {
                    for c in 0..comps {
                        inputs.push(tape.input(batch.component(p, o, c)));
                    }
                }
            }
            let nan = Var::constant(f64::NAN);
            let mut loss = Var::constant(0.0);
            let mut plain = 0.0;
            for p in 0..n {
                let jets: Vec<Jet2<Var>> = (0..m)
                    .map(|o| {
                        let at = |c: usize| inputs[batch.adjoint_index(p, o, c)];
                        let mut jet = Jet2 {
                            value: at(0),
                            d1: vec![nan; d],
                            d2: vec![nan; d],
                        };
                        for &k in layout.d1_coords() {
                            jet.d1[k] = at(layout.d1_slot(k).unwrap());
                        }
                        for &k in layout.d2_coords() {
                            jet.d2[k] = at(layout.d2_slot(k).unwrap());
                        }
                        jet
                    })
                    .collect();
                let r = self.spec.residuals(set.kind, &jets, set.target(start + p));
                let w = set.quad.weights[start + p];
                let sq = r.iter().fold(Var::constant(0.0), |a, &v| a + v * v);
                plain += w * sq.value();
                loss = loss + sq * (w * coef);
            }
            if !plain.is_finite() {
                return None;
            }
            acc += plain;
            let adj = tape.adjoints(&loss).ok()?;
            let out_adj: Vec<f64> = inputs
                .iter()
                .map(|v| v.tape_index(&tape).map_or(0.0, |k| adj[k]))
                .collect();
            batch.backward(self.arch, theta, &out_adj, grad);
        }
        Some(acc)
    }
}

fn set_index(kind: SetKind) -> usize {
    match kind {
        SetKind::Data => 0,
        SetKind::Boundary => 1,
        SetKind::Interior => 2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::reverse_gradient;
    use crate::network::init;
    use crate::problems::{exact_jets, HeatSolution, ProblemSpec};

    fn small(spec: &ProblemSpec) -> (TrainingSets, MlpArchitecture) {
        let counts = match spec.kind.has_boundary() {
            true => crate::problems::SetCounts { n_int: 9, n_sb: 6, n_d: 5 },
            false => crate::problems::SetCounts { n_int: 8, n_sb: 0, n_d: 4 },
        };
        let sets = spec.build_sets(counts, 1).unwrap();
        (sets, MlpArchitecture::new(spec.input_dim(), spec.output_dim(), 2, 6))
    }

    fn specs() -> Vec<ProblemSpec> {
        vec![
            ProblemSpec::poisson(),
            ProblemSpec::heat1d(HeatSolution::Printed),
            ProblemSpec::heat_nd(3).unwrap(),
            ProblemSpec::wave(true),
            ProblemSpec::stokes(),
        ]
    }

    #[test]
    fn batched_matches_tape() {
        for spec in specs() {
            let (sets, arch) = small(&spec);
            let w = LossWeights {
                lambda: 0.1,
                lambda_reg: 1e-3,
                q: 2,
            };
            let theta = init(&arch, 5);
            let tape = Tape::new();
            let vars = tape.inputs(theta.as_slice());
            let loss = assemble_loss(&spec, &sets, &arch, &vars, &w).unwrap();
            let g_tape = reverse_gradient(&loss, &vars).unwrap();
            let ev = LossEvaluator::new(&spec, &sets, &arch, w).unwrap();
            let (v, g) = ev.value_and_gradient(theta.as_slice());
            assert!((v - loss.value()).abs() <= 1e-12 * v.abs().max(1.0), "{}", spec.id);
            assert!((ev.value(theta.as_slice()) - v).abs() <= 1e-12 * v.abs().max(1.0));
            for (a, b) in g.iter().zip(&g_tape) {
                assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0), "{}: {a} vs {b}", spec.id);
            }
        }
    }

    #[test]
    fn oracle_field_has_zero_residual_loss() {
        for spec in specs() {
            let (sets, _) = small(&spec);
            let [d, b, p] = residual_sums(&spec, &sets, |x| exact_jets(&spec.kind, &Jet2::<f64>::seed(x)));
            assert!(d.abs() < 1e-20 && b.abs() < 1e-20 && p.abs() < 1e-18, "{}: {d} {b} {p}", spec.id);
        }
    }

    #[test]
    fn zero_network_on_poisson() {
        let spec = ProblemSpec::poisson();
        let (sets, arch) = small(&spec);
        let w = LossWeights {
            lambda: 0.01,
            lambda_reg: 0.0,
            q: 2,
        };
        let ev = LossEvaluator::new(&spec, &sets, &arch, w).unwrap();
        let zero = vec![0.0; arch.param_count()];
        let want: f64 = sets.data.quad.iter().enumerate().map(|(i, (_, w))| w * sets.data.target(i)[0].powi(2)).sum::<f64>()
            + 0.01
                * sets
                    .interior
                    .quad
                    .iter()
                    .enumerate()
                    .map(|(i, (_, w))| w * sets.interior.target(i)[0].powi(2))
                    .sum::<f64>();
        assert!((ev.value(&zero) - want).abs() < 1e-14);
    }

    #[test]
    fn lambda_enters_linearly() {
        let spec = ProblemSpec::wave(false);
        let (sets, arch) = small(&spec);
        let theta = init(&arch, 2);
        let w1 = LossWeights {
            lambda: 0.01,
            ..Default::default()
        };
        let w2 = LossWeights { lambda: 0.02, ..w1 };
        let e1 = LossEvaluator::new(&spec, &sets, &arch, w1).unwrap();
        let e2 = LossEvaluator::new(&spec, &sets, &arch, w2).unwrap();
        let terms = e1.terms(theta.as_slice());
        let diff = e2.value(theta.as_slice()) - e1.value(theta.as_slice());
        assert!((diff - 0.01 * terms.pde).abs() < 1e-14 * terms.pde.max(1.0));
        assert!((terms.e_t(0.01) - (terms.data + terms.boundary + 0.01 * terms.pde).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn mismatched_sets_are_rejected() {
        let (sets, arch) = small(&ProblemSpec::poisson());
        let spec = ProblemSpec::heat1d(HeatSolution::Printed);
        assert!(LossEvaluator::new(&spec, &sets, &arch, LossWeights::default()).is_err());
    }
}
