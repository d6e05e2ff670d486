//! Closed-form exact solutions, their gradients and the matching sources.
//!
//! The fields are written once over [`Jet2`] so they can be evaluated with
//! exact input derivatives (oracle fields for residual checks). Gradients used
//! for error norms and the source terms are separate hand-written formulas;
//! tests tie the two together.

use std::f64::consts::PI;

use crate::autodiff::{Jet2, Scalar};

use super::{HeatSolution, ProblemKind};

fn one_minus<S: Scalar>(a: &Jet2<S>) -> Jet2<S> {
    a.scale(-1.0).shift(1.0)
}

/// Exact output fields as jets of the seeded input jets `y`.
pub fn exact_jets<S: Scalar>(kind: &ProblemKind, y: &[Jet2<S>]) -> Vec<Jet2<S>> {
    match kind {
        ProblemKind::Poisson2D => {
            let a = &y[0] * &one_minus(&y[0]);
            let b = &y[1] * &one_minus(&y[1]);
            vec![(&a * &b).scale(30.0)]
        }
        ProblemKind::Heat1D { solution } => {
            let (x, t) = (&y[0], &y[1]);
            let decay = match solution {
                HeatSolution::Printed => t.powi(2).scale(-4.0 * PI * PI).exp(),
                HeatSolution::Decaying => t.scale(-4.0 * PI * PI).exp(),
            };
            vec![&decay * &x.scale(2.0 * PI).sin()]
        }
        ProblemKind::HeatNd { n } => {
            let t = &y[*n];
            let mut acc = t.scale(2.0);
            for xi in &y[..*n] {
                acc = &acc + &xi.powi(2).scale(1.0 / *n as f64);
            }
            vec![acc]
        }
        ProblemKind::Wave1D { .. } => {
            let (x, t) = (&y[0], &y[1]);
            vec![&t.scale(2.0 * PI).sin() * &x.scale(2.0 * PI).sin()]
        }
        ProblemKind::Stokes2D => {
            let (x1, x2) = (&y[0], &y[1]);
            let u1 = (x1 * &x2.powi(3)).scale(4.0);
            let u2 = &x1.powi(4) - &x2.powi(4);
            let p = &(&x1.powi(2) * x2).scale(12.0) - &x2.powi(3).scale(4.0).shift(1.0);
            vec![u1, u2, p]
        }
    }
}

/// Exact output values at `x`.
pub fn exact_values(kind: &ProblemKind, x: &[f64]) -> Vec<f64> {
    match kind {
        ProblemKind::Poisson2D => vec![30.0 * x[0] * x[1] * (1.0 - x[0]) * (1.0 - x[1])],
        ProblemKind::Heat1D { solution } => {
            let (s, t) = (x[0], x[1]);
            let decay = match solution {
                HeatSolution::Printed => (-4.0 * PI * PI * t * t).exp(),
                HeatSolution::Decaying => (-4.0 * PI * PI * t).exp(),
            };
            vec![decay * (2.0 * PI * s).sin()]
        }
        ProblemKind::HeatNd { n } => {
            let r2: f64 = x[..*n].iter().map(|v| v * v).sum();
            vec![r2 / *n as f64 + 2.0 * x[*n]]
        }
        ProblemKind::Wave1D { .. } => vec![(2.0 * PI * x[1]).sin() * (2.0 * PI * x[0]).sin()],
        ProblemKind::Stokes2D => {
            let (a, b) = (x[0], x[1]);
            vec![
                4.0 * a * b.powi(3),
                a.powi(4) - b.powi(4),
                12.0 * a * a * b - 4.0 * b.powi(3) - 1.0,
            ]
        }
    }
}

/// Gradient of output `out` with respect to every input coordinate.
pub fn exact_gradient(kind: &ProblemKind, x: &[f64], out: usize) -> Vec<f64> {
    match kind {
        ProblemKind::Poisson2D => {
            let (a, b) = (x[0], x[1]);
            vec![
                30.0 * b * (1.0 - b) * (1.0 - 2.0 * a),
                30.0 * a * (1.0 - a) * (1.0 - 2.0 * b),
            ]
        }
        ProblemKind::Heat1D { solution } => {
            let (s, t) = (x[0], x[1]);
            let k = 4.0 * PI * PI;
            let (decay, ddecay) = match solution {
                HeatSolution::Printed => {
                    let e = (-k * t * t).exp();
                    (e, -2.0 * k * t * e)
                }
                HeatSolution::Decaying => {
                    let e = (-k * t).exp();
                    (e, -k * e)
                }
            };
            vec![
                2.0 * PI * decay * (2.0 * PI * s).cos(),
                ddecay * (2.0 * PI * s).sin(),
            ]
        }
        ProblemKind::HeatNd { n } => {
            let mut g: Vec<f64> = x[..*n].iter().map(|v| 2.0 * v / *n as f64).collect();
            g.push(2.0);
            g
        }
        ProblemKind::Wave1D { .. } => {
            let (s, t) = (2.0 * PI * x[0], 2.0 * PI * x[1]);
            vec![2.0 * PI * t.sin() * s.cos(), 2.0 * PI * t.cos() * s.sin()]
        }
        ProblemKind::Stokes2D => {
            let (a, b) = (x[0], x[1]);
            match out {
                0 => vec![4.0 * b.powi(3), 12.0 * a * b * b],
                1 => vec![4.0 * a.powi(3), -4.0 * b.powi(3)],
                _ => vec![24.0 * a * b, 12.0 * a * a - 12.0 * b * b],
            }
        }
    }
}

/// Interior source terms. One value for scalar problems, `(f_1, f_2, f_d)` for
/// Stokes. Each is the operator applied to the exact solution, so the exact
/// solution has zero residual.
pub fn source(kind: &ProblemKind, x: &[f64]) -> Vec<f64> {
    match kind {
        // −Δu
        ProblemKind::Poisson2D => vec![60.0 * (x[0] - x[0] * x[0] + x[1] - x[1] * x[1])],
        // ∂_t u − ∂_xx u
        ProblemKind::Heat1D { solution } => match solution {
            HeatSolution::Printed => {
                let (s, t) = (x[0], x[1]);
                let k = 4.0 * PI * PI;
                vec![(k - 2.0 * k * t) * (-k * t * t).exp() * (2.0 * PI * s).sin()]
            }
            HeatSolution::Decaying => vec![0.0],
        },
        ProblemKind::HeatNd { .. } | ProblemKind::Wave1D { .. } => vec![0.0],
        // Δu + ∇p, div u
        ProblemKind::Stokes2D => {
            let (a, b) = (x[0], x[1]);
            vec![48.0 * a * b, 24.0 * (a * a - b * b), 0.0]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn kinds() -> Vec<ProblemKind> {
        vec![
            ProblemKind::Poisson2D,
            ProblemKind::Heat1D {
                solution: HeatSolution::Printed,
            },
            ProblemKind::Heat1D {
                solution: HeatSolution::Decaying,
            },
            ProblemKind::HeatNd { n: 3 },
            ProblemKind::Wave1D { gcc: true },
            ProblemKind::Stokes2D,
        ]
    }

    #[test]
    fn jets_agree_with_hand_written_formulas() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for kind in kinds() {
            let d = kind.input_dim();
            for _ in 0..20 {
                let x: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
                let jets = exact_jets(&kind, &Jet2::<f64>::seed(&x));
                let vals = exact_values(&kind, &x);
                for (o, jet) in jets.iter().enumerate() {
                    assert!((jet.value - vals[o]).abs() < 1e-12, "{kind:?}");
                    let g = exact_gradient(&kind, &x, o);
                    for i in 0..d {
                        assert!((jet.d1[i] - g[i]).abs() < 1e-11, "{kind:?} d{i}");
                    }
                }
            }
        }
    }

    #[test]
    fn poisson_source_is_minus_laplacian() {
        // Δ(30 x1 x2 (1−x1)(1−x2)) = −60 (x1 − x1² + x2 − x2²)
        let x = [0.3, 0.8];
        let jet = &exact_jets(&ProblemKind::Poisson2D, &Jet2::<f64>::seed(&x))[0];
        let lap = jet.d2[0] + jet.d2[1];
        assert!((lap + 60.0 * (0.3 - 0.09 + 0.8 - 0.64)).abs() < 1e-12);
        assert!((source(&ProblemKind::Poisson2D, &x)[0] + lap).abs() < 1e-12);
    }

    #[test]
    fn poisson_peak_value() {
        assert_eq!(exact_values(&ProblemKind::Poisson2D, &[0.5, 0.5])[0], 1.875);
    }

    #[test]
    fn stokes_exact_fields_are_divergence_free() {
        let x = [0.21, 0.67];
        let j = exact_jets(&ProblemKind::Stokes2D, &Jet2::<f64>::seed(&x));
        assert!((j[0].d1[0] + j[1].d1[1]).abs() < 1e-14);
    }
}
