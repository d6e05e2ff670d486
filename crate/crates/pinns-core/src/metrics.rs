//! Generalization errors against the exact solutions and the well-trained
//! diagnostic.
//!
//! Relative errors are percentages `100 · ‖u − u*‖ / ‖u‖` with both norms
//! taken on the same test set. The H¹ norm is the full norm
//! `(‖v‖² + ‖∇v‖²)^{1/2}`; for time-dependent problems the gradient is spatial.

use serde::{Deserialize, Serialize};

use crate::network::{BatchJets, JetLayout, MlpArchitecture};
use crate::problems::{exact_gradient, exact_values, ProblemKind, ProblemSpec};
use crate::quadrature::{self, Geometry, QuadratureSet, Rule};
use crate::seed::{self, Stream};

/// Points per batched forward pass during evaluation.
const EVAL_CHUNK: usize = 4096;

/// How a test set was generated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestDescriptor {
    pub rule: Rule,
    pub count: usize,
    pub seed: Option<u64>,
}

/// Default test set: a 200-per-axis midpoint grid for two-dimensional
/// domains, 10⁵ uniform samples for the n-dimensional heat problem.
pub fn default_test_set(spec: &ProblemSpec, seed: u64) -> (QuadratureSet, TestDescriptor) {
    match spec.kind {
        ProblemKind::HeatNd { .. } => {
            let s = seed::derive(seed, Stream::Test);
            let q = quadrature::uniform_random(100_000, &spec.domain, s);
            let d = TestDescriptor {
                rule: Rule::UniformRandom,
                count: q.len(),
                seed: Some(s),
            };
            (q, d)
        }
        _ => {
            let q = quadrature::midpoint_grid(&vec![200; spec.input_dim()], &spec.domain).expect("box domain");
            let d = TestDescriptor {
                rule: Rule::MidpointGrid,
                count: q.len(),
                seed: None,
            };
            (q, d)
        }
    }
}

/// Network outputs at every test point (`len × m`).
pub fn predict(arch: &MlpArchitecture, theta: &[f64], test: &QuadratureSet) -> Vec<f64> {
    let m = arch.output_dim;
    let mut out = Vec::with_capacity(test.len() * m);
    let layout = JetLayout::value_only();
    for chunk in test.points.chunks(EVAL_CHUNK * test.dim) {
        let b = BatchJets::forward(arch, theta, chunk, &layout);
        for p in 0..b.n_points() {
            out.extend((0..m).map(|o| b.value(p, o)));
        }
    }
    out
}

/// Network gradients with respect to `coords` (`len × m × coords.len()`).
pub fn predict_gradients(arch: &MlpArchitecture, theta: &[f64], test: &QuadratureSet, coords: &[usize]) -> Vec<f64> {
    let m = arch.output_dim;
    let layout = JetLayout::gradient(coords.iter().copied());
    let mut out = Vec::with_capacity(test.len() * m * coords.len());
    for chunk in test.points.chunks(EVAL_CHUNK * test.dim) {
        let b = BatchJets::forward(arch, theta, chunk, &layout);
        for p in 0..b.n_points() {
            for o in 0..m {
                out.extend(coords.iter().map(|&c| b.component(p, o, layout.d1_slot(c).unwrap())));
            }
        }
    }
    out
}

/// Closed-form outputs at every test point, laid out like [`predict`].
pub fn exact_outputs(spec: &ProblemSpec, test: &QuadratureSet) -> Vec<f64> {
    test.iter().flat_map(|(x, _)| exact_values(&spec.kind, x)).collect()
}

/// Closed-form gradients laid out like [`predict_gradients`].
pub fn exact_output_gradients(spec: &ProblemSpec, test: &QuadratureSet, coords: &[usize]) -> Vec<f64> {
    let m = spec.output_dim();
    let mut out = Vec::with_capacity(test.len() * m * coords.len());
    for (x, _) in test.iter() {
        for o in 0..m {
            let g = exact_gradient(&spec.kind, x, o);
            out.extend(coords.iter().map(|&c| g[c]));
        }
    }
    out
}

fn ratio_pct(num: f64, den: f64) -> f64 {
    100.0 * (num / den).sqrt()
}

/// Relative L² error of the observed fields (the velocity for Stokes).
/// `pred` is laid out like [`predict`].
pub fn l2_relative_error(spec: &ProblemSpec, test: &QuadratureSet, pred: &[f64]) -> f64 {
    let m = spec.output_dim();
    let k = spec.kind.observed_outputs();
    let (mut num, mut den) = (0.0, 0.0);
    for (i, (x, w)) in test.iter().enumerate() {
        let u = exact_values(&spec.kind, x);
        for o in 0..k {
            let e = pred[i * m + o] - u[o];
            num += w * e * e;
            den += w * u[o] * u[o];
        }
    }
    ratio_pct(num, den)
}

/// Spatial coordinates entering the H¹ norm.
pub fn h1_coords(spec: &ProblemSpec) -> Vec<usize> {
    (0..spec.kind.spatial_dims()).collect()
}

/// Relative H¹ error of the observed fields; `grad` holds gradients with
/// respect to [`h1_coords`] laid out like [`predict_gradients`].
pub fn h1_relative_error(spec: &ProblemSpec, test: &QuadratureSet, pred: &[f64], grad: &[f64]) -> f64 {
    let m = spec.output_dim();
    let k = spec.kind.observed_outputs();
    let coords = h1_coords(spec);
    let nc = coords.len();
    let (mut num, mut den) = (0.0, 0.0);
    for (i, (x, w)) in test.iter().enumerate() {
        let u = exact_values(&spec.kind, x);
        for o in 0..k {
            let e = pred[i * m + o] - u[o];
            num += w * e * e;
            den += w * u[o] * u[o];
            let g = exact_gradient(&spec.kind, x, o);
            for (j, &c) in coords.iter().enumerate() {
                let ge = grad[(i * m + o) * nc + j] - g[c];
                num += w * ge * ge;
                den += w * g[c] * g[c];
            }
        }
    }
    ratio_pct(num, den)
}

/// Relative L² error of the Stokes pressure after removing the mean of
/// `p* − p`.
pub fn pressure_relative_error(spec: &ProblemSpec, test: &QuadratureSet, pred: &[f64]) -> f64 {
    let m = spec.output_dim();
    let exact: Vec<f64> = test.iter().map(|(x, _)| exact_values(&spec.kind, x)[2]).collect();
    let area = test.total_weight();
    let shift = test
        .iter()
        .enumerate()
        .map(|(i, (_, w))| w * (pred[i * m + 2] - exact[i]))
        .sum::<f64>()
        / area;
    let (mut num, mut den) = (0.0, 0.0);
    for (i, (_, w)) in test.iter().enumerate() {
        let e = pred[i * m + 2] - shift - exact[i];
        num += w * e * e;
        den += w * exact[i] * exact[i];
    }
    ratio_pct(num, den)
}

/// `max_t ‖u(·,t) − u*(·,t)‖ / max_t ‖u(·,t)‖` over `slices` equally spaced
/// times in `[t0, t1]`, each with an `n_space` midpoint grid. `predict_at`
/// returns the scalar output at every point of a slice.
pub fn sup_t_l2_error_with(
    spec: &ProblemSpec,
    slices: usize,
    n_space: usize,
    mut predict_at: impl FnMut(&QuadratureSet) -> Vec<f64>,
) -> f64 {
    let (t0, t1) = spec.domain.time_span().expect("time-dependent problem");
    let space = match &spec.domain {
        Geometry::Slab { space, .. } => space.as_ref().clone(),
        _ => unreachable!(),
    };
    let grid = quadrature::midpoint_grid(&vec![n_space; space.dim()], &space).expect("box domain");
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for s in 0..slices {
        let t = if slices == 1 {
            t0
        } else {
            t0 + (t1 - t0) * s as f64 / (slices - 1) as f64
        };
        let mut slice = QuadratureSet::empty(space.dim() + 1, Rule::MidpointGrid);
        slice.points = grid.iter().flat_map(|(x, _)| x.iter().copied().chain(std::iter::once(t))).collect();
        slice.weights = grid.weights.clone();
        let pred = predict_at(&slice);
        let (mut num, mut den) = (0.0, 0.0);
        for (i, (x, w)) in slice.iter().enumerate() {
            let u = exact_values(&spec.kind, x)[0];
            num += w * (pred[i] - u).powi(2);
            den += w * u * u;
        }
        worst = worst.max(num.sqrt());
        scale = scale.max(den.sqrt());
    }
    100.0 * worst / scale
}

pub fn sup_t_l2_error(spec: &ProblemSpec, arch: &MlpArchitecture, theta: &[f64], slices: usize, n_space: usize) -> f64 {
    sup_t_l2_error_with(spec, slices, n_space, |q| {
        let m = arch.output_dim;
        predict(arch, theta, q).chunks(m).map(|c| c[0]).collect()
    })
}

/// Generalization errors of one trained network.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GeneralizationErrors {
    pub l2_pct: f64,
    pub h1_pct: Option<f64>,
    pub sup_l2_pct: Option<f64>,
    pub p_l2_pct: Option<f64>,
}

/// Errors on `test`, choosing the norms that apply to the problem.
pub fn evaluate(spec: &ProblemSpec, arch: &MlpArchitecture, theta: &[f64], test: &QuadratureSet) -> GeneralizationErrors {
    let pred = predict(arch, theta, test);
    let l2_pct = l2_relative_error(spec, test, &pred);
    let h1_pct = match spec.kind {
        ProblemKind::Poisson2D | ProblemKind::Heat1D { .. } => {
            let grad = predict_gradients(arch, theta, test, &h1_coords(spec));
            Some(h1_relative_error(spec, test, &pred, &grad))
        }
        _ => None,
    };
    let sup_l2_pct = match spec.kind {
        ProblemKind::Wave1D { .. } => Some(sup_t_l2_error(spec, arch, theta, 101, 200)),
        _ => None,
    };
    let p_l2_pct = match spec.kind {
        ProblemKind::Stokes2D => Some(pressure_relative_error(spec, test, &pred)),
        _ => None,
    };
    GeneralizationErrors {
        l2_pct,
        h1_pct,
        sup_l2_pct,
        p_l2_pct,
    }
}

/// Training and generalization errors of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub e_dt: f64,
    pub e_pt: f64,
    pub e_sbt: Option<f64>,
    pub e_t: f64,
    #[serde(flatten)]
    pub errors: GeneralizationErrors,
    pub test: TestDescriptor,
}

/// Column order of the per-experiment CSV.
pub const CSV_HEADER: &str =
    "problem,N,N_int,N_sb,N_d,depth,width,lambda,lambda_reg,seed,restarts,E_dT,E_pT,E_T,L2_pct,H1_pct,supL2_pct,p_L2_pct,wall_s";

/// Least-squares fit of `err ≈ C · N^{−α}`. `None` without two distinct
/// sizes with positive errors.
pub fn fit_decay_rate(ns: &[usize], errors: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = ns
        .iter()
        .zip(errors)
        .filter(|(_, &e)| e > 0.0 && e.is_finite())
        .map(|(&n, &e)| ((n as f64).ln(), e.ln()))
        .collect();
    let distinct = pts.iter().any(|p| (p.0 - pts[0].0).abs() > 0.0);
    if pts.len() < 2 || !distinct {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(-sxy / sxx)
}

/// Quadrature error `|Σ w h − ∫h|` of a rule at several sizes, with `exact`
/// the reference integral, and the fitted decay rate.
pub fn quadrature_error_rate(
    geom: &Geometry,
    ns: &[usize],
    make: impl Fn(usize, &Geometry) -> QuadratureSet,
    h: impl Fn(&[f64]) -> f64,
    exact: f64,
) -> (Vec<f64>, Option<f64>) {
    let errors: Vec<f64> = ns.iter().map(|&n| (make(n, geom).integrate_fn(&h) - exact).abs()).collect();
    let rate = fit_decay_rate(ns, &errors);
    (errors, rate)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WellTrainedStatus {
    WellTrained,
    NotWellTrained,
    Indeterminate,
}

/// Training errors against the generalization-gap terms `N^{−α/2}` and
/// `N_d^{−α_d/2}` (unit constants). Diagnostic only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WellTrained {
    pub status: WellTrainedStatus,
    pub e_pt: f64,
    pub e_dt: f64,
    pub gap_int: Option<f64>,
    pub gap_d: Option<f64>,
    pub alpha: Option<f64>,
    pub alpha_d: Option<f64>,
}

pub fn well_trained_check(
    e_pt: f64,
    e_dt: f64,
    n_int: usize,
    n_d: usize,
    alpha: Option<f64>,
    alpha_d: Option<f64>,
) -> WellTrained {
    let gap_int = alpha.map(|a| (n_int as f64).powf(-a / 2.0));
    let gap_d = alpha_d.map(|a| (n_d as f64).powf(-a / 2.0));
    let status = if e_pt == 0.0 && e_dt == 0.0 {
        WellTrainedStatus::WellTrained
    } else {
        match (gap_int, gap_d) {
            (Some(gi), Some(gd)) if e_pt.max(e_dt) <= gi.min(gd) => WellTrainedStatus::WellTrained,
            (Some(_), Some(_)) => WellTrainedStatus::NotWellTrained,
            _ => WellTrainedStatus::Indeterminate,
        }
    };
    WellTrained {
        status,
        e_pt,
        e_dt,
        gap_int,
        gap_d,
        alpha,
        alpha_d,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::MlpArchitecture;
    use crate::problems::HeatSolution;

    fn grid(spec: &ProblemSpec, n: usize) -> QuadratureSet {
        quadrature::midpoint_grid(&vec![n; spec.input_dim()], &spec.domain).unwrap()
    }

    #[test]
    fn exact_prediction_has_zero_error() {
        for spec in [ProblemSpec::poisson(), ProblemSpec::heat1d(HeatSolution::Printed), ProblemSpec::stokes()] {
            let q = grid(&spec, 40);
            let pred = exact_outputs(&spec, &q);
            assert_eq!(l2_relative_error(&spec, &q, &pred), 0.0);
            let grad = exact_output_gradients(&spec, &q, &h1_coords(&spec));
            assert_eq!(h1_relative_error(&spec, &q, &pred, &grad), 0.0);
        }
        let wave = ProblemSpec::wave(true);
        assert_eq!(
            sup_t_l2_error_with(&wave, 11, 50, |q| exact_outputs(&wave, q)),
            0.0
        );
    }

    #[test]
    fn doubled_prediction_is_one_hundred_percent() {
        let spec = ProblemSpec::poisson();
        let q = grid(&spec, 50);
        let pred: Vec<f64> = exact_outputs(&spec, &q).iter().map(|v| 2.0 * v).collect();
        assert!((l2_relative_error(&spec, &q, &pred) - 100.0).abs() < 1e-10);
        let wave = ProblemSpec::wave(false);
        let e = sup_t_l2_error_with(&wave, 21, 40, |q| exact_outputs(&wave, q).iter().map(|v| 2.0 * v).collect());
        assert!((e - 100.0).abs() < 1e-10);
    }

    #[test]
    fn zero_network_is_one_hundred_percent() {
        let spec = ProblemSpec::poisson();
        let arch = MlpArchitecture::new(2, 1, 2, 5);
        let q = grid(&spec, 30);
        let errs = evaluate(&spec, &arch, &vec![0.0; arch.param_count()], &q);
        assert!((errs.l2_pct - 100.0).abs() < 1e-12);
        assert!((errs.h1_pct.unwrap() - 100.0).abs() < 1e-12);
    }

    #[test]
    fn constant_offset_in_h1() {
        let spec = ProblemSpec::poisson();
        let q = grid(&spec, 64);
        let c = 0.05;
        let pred: Vec<f64> = exact_outputs(&spec, &q).iter().map(|v| v + c).collect();
        let grad = exact_output_gradients(&spec, &q, &[0, 1]);
        let h1_norm = q
            .iter()
            .map(|(x, w)| {
                let u = exact_values(&spec.kind, x)[0];
                let g = exact_gradient(&spec.kind, x, 0);
                w * (u * u + g[0] * g[0] + g[1] * g[1])
            })
            .sum::<f64>()
            .sqrt();
        let want = 100.0 * c * 1.0 / h1_norm;
        assert!((h1_relative_error(&spec, &q, &pred, &grad) - want).abs() < 1e-10);
    }

    #[test]
    fn pressure_gauge_is_removed() {
        let spec = ProblemSpec::stokes();
        let q = grid(&spec, 40);
        let pred: Vec<f64> = exact_outputs(&spec, &q)
            .chunks(3)
            .flat_map(|c| [c[0], c[1], c[2] + 3.0])
            .collect();
        assert!(pressure_relative_error(&spec, &q, &pred) < 1e-10);
        assert!(l2_relative_error(&spec, &q, &pred) < 1e-12);
    }

    #[test]
    fn symmetric_absolute_error() {
        let spec = ProblemSpec::poisson();
        let q = grid(&spec, 20);
        let u = exact_outputs(&spec, &q);
        let v: Vec<f64> = u.iter().map(|x| x * 0.7 + 0.01).collect();
        let abs = |a: &[f64], b: &[f64]| q.iter().enumerate().map(|(i, (_, w))| w * (a[i] - b[i]).powi(2)).sum::<f64>();
        assert_eq!(abs(&u, &v), abs(&v, &u));
    }

    #[test]
    fn decay_rate_fit() {
        let ns = [100, 400, 1600];
        let errs: Vec<f64> = ns.iter().map(|&n| 3.0 * (n as f64).powf(-0.75)).collect();
        assert!((fit_decay_rate(&ns, &errs).unwrap() - 0.75).abs() < 1e-12);
        assert_eq!(fit_decay_rate(&[400], &[0.1]), None);
        assert_eq!(fit_decay_rate(&[400, 400], &[0.1, 0.2]), None);
    }

    #[test]
    fn midpoint_rate_is_two_over_dimension() {
        // sin(2πx₁) on [0, 0.4]²; the unit square would integrate it exactly
        let geom = Geometry::rect(vec![0.0; 2], vec![0.4; 2]);
        let exact = 0.4 * (1.0 - (0.8 * std::f64::consts::PI).cos()) / (2.0 * std::f64::consts::PI);
        let ns = [16 * 16, 32 * 32, 64 * 64, 128 * 128];
        let (_, rate) = quadrature_error_rate(
            &geom,
            &ns,
            |n, g| {
                let k = (n as f64).sqrt().round() as usize;
                quadrature::midpoint_grid(&[k, k], g).unwrap()
            },
            |x| (2.0 * std::f64::consts::PI * x[0]).sin(),
            exact,
        );
        let rate = rate.unwrap();
        assert!((rate - 1.0).abs() < 0.2, "{rate}");
    }

    #[test]
    fn well_trained_paths() {
        assert_eq!(
            well_trained_check(0.0, 0.0, 100, 100, None, None).status,
            WellTrainedStatus::WellTrained
        );
        assert_eq!(
            well_trained_check(1e-3, 1e-3, 100, 100, None, Some(1.0)).status,
            WellTrainedStatus::Indeterminate
        );
        assert_eq!(
            well_trained_check(1e-3, 1e-3, 400, 400, Some(1.0), Some(1.0)).status,
            WellTrainedStatus::WellTrained
        );
        assert_eq!(
            well_trained_check(0.5, 1e-3, 400, 400, Some(1.0), Some(1.0)).status,
            WellTrainedStatus::NotWellTrained
        );
    }
}
