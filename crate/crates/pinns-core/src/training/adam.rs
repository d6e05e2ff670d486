//! Full-batch Adam.

use serde::{Deserialize, Serialize};

use super::lbfgs::{OptimResult, Status};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamOptions {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub max_iter: usize,
    /// Stop when `‖∇f‖_∞ ≤ gtol`.
    pub gtol: f64,
}

impl Default for AdamOptions {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            max_iter: 10_000,
            gtol: 1e-9,
        }
    }
}

/// Runs Adam and returns the best iterate seen. A non-finite objective halves
/// the learning rate and restarts from the best iterate.
pub fn adam_minimize(mut f: impl FnMut(&[f64]) -> (f64, Vec<f64>), x0: &[f64], opts: &AdamOptions) -> OptimResult {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut m = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut lr = opts.lr;
    let (fx, mut g) = f(&x);
    let mut evaluations = 1;
    if !fx.is_finite() {
        return OptimResult {
            x,
            f: fx,
            iterations: 0,
            evaluations,
            status: Status::NonFiniteStart,
            history: vec![fx],
        };
    }
    let mut best = (fx, x.clone());
    let mut history = vec![fx];
    let mut status = Status::MaxIterations;
    let mut step = 0i32;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        if g.iter().fold(0.0f64, |a, b| a.max(b.abs())) <= opts.gtol {
            status = Status::GradientTolerance;
            break;
        }
        step += 1;
        let c1 = 1.0 - opts.beta1.powi(step);
        let c2 = 1.0 - opts.beta2.powi(step);
        for i in 0..n {
            m[i] = opts.beta1 * m[i] + (1.0 - opts.beta1) * g[i];
            v[i] = opts.beta2 * v[i] + (1.0 - opts.beta2) * g[i] * g[i];
            x[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + opts.eps);
        }
        iterations += 1;
        let (fn_, gn) = f(&x);
        evaluations += 1;
        if !fn_.is_finite() || gn.iter().any(|v| !v.is_finite()) {
            lr *= 0.5;
            x = best.1.clone();
            m.iter_mut().chain(v.iter_mut()).for_each(|a| *a = 0.0);
            step = 0;
            g = f(&x).1;
            evaluations += 1;
            continue;
        }
        g = gn;
        history.push(fn_);
        if fn_ < best.0 {
            best = (fn_, x.clone());
        }
    }
    OptimResult {
        x: best.1,
        f: best.0,
        iterations,
        evaluations,
        status,
        history,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad(x: &[f64]) -> (f64, Vec<f64>) {
        let c = [0.5, -0.25, 1.0];
        let f = x.iter().zip(&c).map(|(a, b)| (a - b).powi(2)).sum();
        (f, x.iter().zip(&c).map(|(a, b)| 2.0 * (a - b)).collect())
    }

    #[test]
    fn quadratic_decreases_a_hundredfold() {
        let opts = AdamOptions {
            max_iter: 2000,
            ..Default::default()
        };
        let res = adam_minimize(quad, &[0.0; 3], &opts);
        assert!(res.f * 100.0 <= res.history[0], "{} vs {}", res.f, res.history[0]);
    }

    #[test]
    fn stationary_start_is_kept() {
        let x0 = [0.5, -0.25, 1.0];
        let res = adam_minimize(quad, &x0, &AdamOptions::default());
        assert_eq!(res.x, x0.to_vec());
        assert_eq!(res.iterations, 0);
    }

    #[test]
    fn deterministic() {
        let a = adam_minimize(quad, &[3.0, 1.0, -2.0], &AdamOptions::default());
        let b = adam_minimize(quad, &[3.0, 1.0, -2.0], &AdamOptions::default());
        assert_eq!(a, b);
    }
}
