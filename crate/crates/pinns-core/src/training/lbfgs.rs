//! Limited-memory BFGS with a strong-Wolfe line search.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LbfgsOptions {
    pub memory: usize,
    pub max_iter: usize,
    /// Stop when `‖∇f‖_∞ ≤ gtol`.
    pub gtol: f64,
    /// Stop when `(f_k − f_{k+1}) ≤ ftol · max(|f_k|, |f_{k+1}|)`.
    pub ftol: f64,
    pub c1: f64,
    pub c2: f64,
    /// Function evaluations allowed per line search.
    pub max_line_search: usize,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            memory: 10,
            max_iter: 10_000,
            gtol: 1e-9,
            ftol: 1e-12,
            c1: 1e-4,
            c2: 0.9,
            max_line_search: 25,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    GradientTolerance,
    RelativeChange,
    MaxIterations,
    /// No acceptable step; the best iterate is returned.
    LineSearchFailed,
    /// The objective was not finite at the start.
    NonFiniteStart,
}

impl Status {
    pub fn converged(self) -> bool {
        matches!(self, Status::GradientTolerance | Status::RelativeChange)
    }

    /// A flagged status is reported but does not discard the result.
    pub fn flagged(self) -> bool {
        matches!(self, Status::LineSearchFailed | Status::NonFiniteStart)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub status: Status,
    /// Objective at every accepted iterate, starting with `f(x0)`.
    pub history: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

struct Probe {
    alpha: f64,
    f: f64,
    g: Vec<f64>,
    slope: f64,
}

struct LineSearch<'a, F> {
    f: &'a mut F,
    x: &'a [f64],
    d: &'a [f64],
    f0: f64,
    slope0: f64,
    c1: f64,
    c2: f64,
    budget: usize,
    evaluations: usize,
}

impl<F: FnMut(&[f64]) -> (f64, Vec<f64>)> LineSearch<'_, F> {
    fn probe(&mut self, alpha: f64) -> Probe {
        let xt: Vec<f64> = self.x.iter().zip(self.d).map(|(x, d)| x + alpha * d).collect();
        let (f, g) = (self.f)(&xt);
        self.evaluations += 1;
        let slope = dot(&g, self.d);
        Probe { alpha, f, g, slope }
    }

    fn armijo(&self, p: &Probe) -> bool {
        p.f <= self.f0 + self.c1 * p.alpha * self.slope0
    }

    fn curvature(&self, p: &Probe) -> bool {
        p.slope.abs() <= -self.c2 * self.slope0
    }

    /// Returns an accepted probe (Armijo holds, strong Wolfe when possible).
    fn run(&mut self, alpha0: f64) -> Option<Probe> {
        let mut prev = Probe {
            alpha: 0.0,
            f: self.f0,
            g: Vec::new(),
            slope: self.slope0,
        };
        let mut alpha = alpha0;
        let mut first = true;
        while self.evaluations < self.budget {
            let p = self.probe(alpha);
            if !p.f.is_finite() || !p.slope.is_finite() {
                // shrink towards the last good step
                alpha = prev.alpha + 0.5 * (alpha - prev.alpha);
                continue;
            }
            if !self.armijo(&p) || (!first && p.f >= prev.f) {
                return self.zoom(prev, p);
            }
            if self.curvature(&p) {
                return Some(p);
            }
            if p.slope >= 0.0 {
                return self.zoom(p, prev);
            }
            first = false;
            alpha = 2.0 * p.alpha;
            prev = p;
        }
        (prev.alpha > 0.0).then_some(prev)
    }

    fn zoom(&mut self, mut lo: Probe, mut hi: Probe) -> Option<Probe> {
        while self.evaluations < self.budget {
            let alpha = interpolate(&lo, &hi);
            if (hi.alpha - lo.alpha).abs() < 1e-16 * lo.alpha.abs().max(1e-300) {
                break;
            }
            let p = self.probe(alpha);
            if !p.f.is_finite() || !p.slope.is_finite() || !self.armijo(&p) || p.f >= lo.f {
                hi = p;
                continue;
            }
            if self.curvature(&p) {
                return Some(p);
            }
            if p.slope * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = p;
        }
        (lo.alpha > 0.0).then_some(lo)
    }
}

/// Safeguarded cubic interpolation between two probes.
fn interpolate(lo: &Probe, hi: &Probe) -> f64 {
    let (a, b) = (lo.alpha, hi.alpha);
    let (left, right) = (a.min(b), a.max(b));
    let width = right - left;
    let mid = 0.5 * (a + b);
    if !hi.f.is_finite() || !hi.slope.is_finite() {
        return mid;
    }
    let d1 = lo.slope + hi.slope - 3.0 * (lo.f - hi.f) / (a - b);
    let disc = d1 * d1 - lo.slope * hi.slope;
    if disc < 0.0 {
        return mid;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let t = b - (b - a) * (hi.slope + d2 - d1) / (hi.slope - lo.slope + 2.0 * d2);
    if t.is_finite() && t > left + 0.1 * width && t < right - 0.1 * width {
        t
    } else {
        mid
    }
}

/// Minimizes `f`, which returns the value and gradient.
pub fn lbfgs_minimize(mut f: impl FnMut(&[f64]) -> (f64, Vec<f64>), x0: &[f64], opts: &LbfgsOptions) -> OptimResult {
    let mut x = x0.to_vec();
    let (mut fx, mut g) = f(&x);
    let mut evaluations = 1;
    let mut history = vec![fx];
    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return OptimResult {
            x,
            f: fx,
            iterations: 0,
            evaluations,
            status: Status::NonFiniteStart,
            history,
        };
    }
    let mut mem: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut status = Status::MaxIterations;
    let mut iterations = 0;
    let mut retried = false;
    while iterations < opts.max_iter {
        if inf_norm(&g) <= opts.gtol {
            status = Status::GradientTolerance;
            break;
        }
        // two-loop recursion
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(mem.len());
        for (s, y, rho) in mem.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        if let Some((s, y, _)) = mem.back() {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|v| *v *= gamma);
        }
        for ((s, y, rho), a) in mem.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        let mut d: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            mem.clear();
            d = g.iter().map(|v| -v).collect();
            slope = dot(&g, &d);
        }
        let alpha0 = if mem.is_empty() {
            (1.0 / inf_norm(&g)).min(1.0)
        } else {
            1.0
        };
        let mut ls = LineSearch {
            f: &mut f,
            x: &x,
            d: &d,
            f0: fx,
            slope0: slope,
            c1: opts.c1,
            c2: opts.c2,
            budget: opts.max_line_search,
            evaluations: 0,
        };
        let accepted = ls.run(alpha0);
        evaluations += ls.evaluations;
        let Some(p) = accepted else {
            if !mem.is_empty() && !retried {
                // retry once along steepest descent
                mem.clear();
                retried = true;
                continue;
            }
            status = Status::LineSearchFailed;
            break;
        };
        retried = false;
        iterations += 1;
        let s: Vec<f64> = d.iter().map(|v| p.alpha * v).collect();
        let y: Vec<f64> = p.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        x.iter_mut().zip(&s).for_each(|(xi, si)| *xi += si);
        let f_old = fx;
        fx = p.f;
        g = p.g;
        history.push(fx);
        if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() && sy > 0.0 {
            if mem.len() == opts.memory {
                mem.pop_front();
            }
            mem.push_back((s, y, 1.0 / sy));
        }
        if f_old - fx <= opts.ftol * f_old.abs().max(fx.abs()) {
            status = Status::RelativeChange;
            break;
        }
    }
    OptimResult {
        x,
        f: fx,
        iterations,
        evaluations,
        status,
        history,
    }
}
