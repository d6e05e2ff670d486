//! The builtin data-assimilation problems.
//!
//! Every problem lives on a box (or a time slab over a box) with an observation
//! subdomain where the solution is measured. Inputs of time-dependent problems
//! are ordered `(x_1, …, x_n, t)`.

mod fields;
pub mod residuals;

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::autodiff::{Jet2, Scalar};
use crate::error::{Error, Result};
use crate::network::JetLayout;
use crate::quadrature::{self, Geometry, QuadratureSet};
use crate::seed::{self, Stream};

pub use fields::{exact_gradient, exact_jets, exact_values, source};

/// Which closed form the one-dimensional heat experiment uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeatSolution {
    /// `e^{−4π²t²} sin(2πx)` with the source it induces.
    #[default]
    Printed,
    /// `e^{−4π²t} sin(2πx)`, a homogeneous solution.
    Decaying,
}

impl std::str::FromStr for HeatSolution {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "printed" => Ok(HeatSolution::Printed),
            "decaying" => Ok(HeatSolution::Decaying),
            other => Err(format!("unknown heat solution `{other}` (printed, decaying)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ProblemKind {
    Poisson2D,
    Heat1D { solution: HeatSolution },
    HeatNd { n: usize },
    Wave1D { gcc: bool },
    Stokes2D,
}

impl ProblemKind {
    pub fn input_dim(&self) -> usize {
        match self {
            ProblemKind::HeatNd { n } => n + 1,
            _ => 2,
        }
    }

    /// `u` for scalar problems, `(u_1, u_2, p)` for Stokes.
    pub fn output_dim(&self) -> usize {
        match self {
            ProblemKind::Stokes2D => 3,
            _ => 1,
        }
    }

    /// Outputs measured on the observation domain.
    pub fn observed_outputs(&self) -> usize {
        match self {
            ProblemKind::Stokes2D => 2,
            _ => 1,
        }
    }

    pub fn time_axis(&self) -> Option<usize> {
        match self {
            ProblemKind::Heat1D { .. } | ProblemKind::Wave1D { .. } => Some(1),
            ProblemKind::HeatNd { n } => Some(*n),
            _ => None,
        }
    }

    pub fn spatial_dims(&self) -> usize {
        self.input_dim() - usize::from(self.time_axis().is_some())
    }

    pub fn has_boundary(&self) -> bool {
        self.time_axis().is_some()
    }

    /// Number of interior residual components.
    pub fn pde_components(&self) -> usize {
        match self {
            ProblemKind::Stokes2D => 3,
            _ => 1,
        }
    }
}

/// How training points are placed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampling {
    /// Sobol interior, midpoint grids for boundary and data.
    #[default]
    Structured,
    /// Independent uniform samples for every set.
    Random,
}

impl std::str::FromStr for Sampling {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "structured" => Ok(Sampling::Structured),
            "random" => Ok(Sampling::Random),
            other => Err(format!("unknown sampling `{other}` (structured, random)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SetKind {
    Interior,
    Boundary,
    Data,
}

impl SetKind {
    pub fn label(self) -> &'static str {
        match self {
            SetKind::Interior => "int",
            SetKind::Boundary => "sb",
            SetKind::Data => "d",
        }
    }
}

/// Fractions of the total budget given to each training set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub interior: f64,
    pub boundary: f64,
    pub data: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SetCounts {
    pub n_int: usize,
    pub n_sb: usize,
    pub n_d: usize,
}

impl SetCounts {
    pub fn total(&self) -> usize {
        self.n_int + self.n_sb + self.n_d
    }
}

impl fmt::Display for SetCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "N_int={} N_sb={} N_d={}", self.n_int, self.n_sb, self.n_d)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub id: String,
    pub kind: ProblemKind,
    /// `D` or `D_T`.
    pub domain: Geometry,
    /// `D′` or `D′_T`.
    pub observation: Geometry,
    pub split: Split,
    pub sampling: Sampling,
    /// Relative noise amplitude on the data (0 = exact data).
    pub noise_level: f64,
    /// Total point count used when none is given.
    pub default_n: usize,
}

/// Ids accepted by [`ProblemSpec::from_id`].
pub const CATALOG: &[&str] = &[
    "poisson",
    "poisson-noisy",
    "heat1d",
    "heat1d-random",
    "heatnd:<n>",
    "wave-gcc",
    "wave-nogcc",
    "stokes",
];

/// Split for time-dependent problems: `interior` of the budget to the
/// interior, the rest shared by boundary and data in proportion to
/// `|∂D|·T` and `|D′_T|`.
fn measure_split(interior: f64, domain: &Geometry, observation: &Geometry) -> Split {
    let (t0, t1) = domain.time_span().expect("time slab");
    let space = match domain {
        Geometry::Slab { space, .. } => space,
        _ => unreachable!(),
    };
    let sb = space.boundary_measure().expect("box domain") * (t1 - t0);
    let d = observation.measure();
    let rest = 1.0 - interior;
    Split {
        interior,
        boundary: rest * sb / (sb + d),
        data: rest * d / (sb + d),
    }
}

impl ProblemSpec {
    pub fn poisson() -> Self {
        let observation = Geometry::rect(vec![0.125; 2], vec![0.875; 2]);
        let r = observation.measure();
        Self {
            id: "poisson".into(),
            kind: ProblemKind::Poisson2D,
            domain: Geometry::unit_cube(2),
            observation,
            split: Split {
                interior: 1.0 - r,
                boundary: 0.0,
                data: r,
            },
            sampling: Sampling::Structured,
            noise_level: 0.0,
            default_n: 400,
        }
    }

    pub fn poisson_noisy() -> Self {
        Self {
            id: "poisson-noisy".into(),
            noise_level: 0.01,
            ..Self::poisson()
        }
    }

    pub fn heat1d(solution: HeatSolution) -> Self {
        let t = 0.02;
        let domain = Geometry::slab(Geometry::interval(0.0, 1.0), 0.0, t);
        let observation = Geometry::slab(Geometry::interval(0.2, 0.8), 0.0, t);
        Self {
            id: "heat1d".into(),
            kind: ProblemKind::Heat1D { solution },
            split: measure_split(0.4, &domain, &observation),
            domain,
            observation,
            sampling: Sampling::Structured,
            noise_level: 0.0,
            default_n: 16 * 50,
        }
    }

    pub fn heat1d_random(solution: HeatSolution) -> Self {
        Self {
            id: "heat1d-random".into(),
            sampling: Sampling::Random,
            ..Self::heat1d(solution)
        }
    }

    pub fn heat_nd(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("heatnd needs at least one space dimension".into()));
        }
        let a = 0.4;
        Ok(Self {
            id: format!("heatnd:{n}"),
            kind: ProblemKind::HeatNd { n },
            domain: Geometry::slab(Geometry::unit_cube(n), 0.0, 1.0),
            observation: Geometry::rect(vec![a; n + 1], vec![1.0 - a; n + 1]),
            split: Split {
                interior: 8192.0 / 16384.0,
                boundary: 2048.0 / 16384.0,
                data: 6144.0 / 16384.0,
            },
            sampling: Sampling::Random,
            noise_level: 0.0,
            default_n: 16384,
        })
    }

    pub fn wave(gcc: bool) -> Self {
        let domain = Geometry::slab(Geometry::interval(0.0, 1.0), 0.0, 1.0);
        let (space, interior, id) = if gcc {
            (
                Geometry::union(vec![Geometry::interval(0.0, 0.2), Geometry::interval(0.8, 1.0)]),
                0.6,
                "wave-gcc",
            )
        } else {
            (Geometry::interval(0.0, 0.2), 0.8, "wave-nogcc")
        };
        let observation = Geometry::slab(space, 0.0, 1.0);
        Self {
            id: id.into(),
            kind: ProblemKind::Wave1D { gcc },
            split: measure_split(interior, &domain, &observation),
            domain,
            observation,
            sampling: Sampling::Structured,
            noise_level: 0.0,
            default_n: 60 * 60,
        }
    }

    pub fn stokes() -> Self {
        let observation = Geometry::disc([0.5, 0.5], 0.25);
        let r = observation.measure();
        Self {
            id: "stokes".into(),
            kind: ProblemKind::Stokes2D,
            domain: Geometry::unit_cube(2),
            observation,
            split: Split {
                interior: 1.0 - r,
                boundary: 0.0,
                data: r,
            },
            sampling: Sampling::Structured,
            noise_level: 0.0,
            default_n: 400,
        }
    }

    /// Looks up a catalog id.
    pub fn from_id(id: &str) -> Result<Self> {
        let unknown = || Error::UnknownProblem {
            id: id.to_string(),
            catalog: CATALOG.join(", "),
        };
        Ok(match id {
            "poisson" => Self::poisson(),
            "poisson-noisy" => Self::poisson_noisy(),
            "heat1d" => Self::heat1d(HeatSolution::Printed),
            "heat1d-random" => Self::heat1d_random(HeatSolution::Printed),
            "wave-gcc" => Self::wave(true),
            "wave-nogcc" => Self::wave(false),
            "stokes" => Self::stokes(),
            other => {
                let n = other
                    .strip_prefix("heatnd:")
                    .and_then(|n| n.parse::<usize>().ok())
                    .filter(|&n| n > 0)
                    .ok_or_else(unknown)?;
                Self::heat_nd(n)?
            }
        })
    }

    pub fn input_dim(&self) -> usize {
        self.kind.input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.kind.output_dim()
    }

    /// Budget split of `n` total points.
    pub fn counts(&self, n: usize) -> SetCounts {
        let s = &self.split;
        let parts = quadrature::split_proportional(n, &[s.interior, s.boundary, s.data]);
        SetCounts {
            n_int: parts[0],
            n_sb: parts[1],
            n_d: parts[2],
        }
    }

    /// Jet components a set needs.
    pub fn layout(&self, set: SetKind) -> JetLayout {
        match (set, &self.kind) {
            (SetKind::Interior, ProblemKind::HeatNd { n }) => {
                JetLayout::new((0..=*n).collect(), (0..*n).collect()).expect("valid layout")
            }
            (SetKind::Interior, ProblemKind::Heat1D { .. }) => {
                JetLayout::new(vec![0, 1], vec![0]).expect("valid layout")
            }
            (SetKind::Interior, _) => JetLayout::new(vec![0, 1], vec![0, 1]).expect("valid layout"),
            _ => JetLayout::value_only(),
        }
    }

    /// Number of residual components per point of a set.
    pub fn residual_width(&self, set: SetKind) -> usize {
        match set {
            SetKind::Interior => self.kind.pde_components(),
            SetKind::Boundary => 1,
            SetKind::Data => self.kind.observed_outputs(),
        }
    }

    /// Number of per-point target values stored with a set.
    pub fn target_width(&self, set: SetKind) -> usize {
        match set {
            SetKind::Interior => source(&self.kind, &vec![0.5; self.input_dim()]).len(),
            SetKind::Boundary => 1,
            SetKind::Data => self.kind.observed_outputs(),
        }
    }

    /// Residual components at one point from the output jets and the point's
    /// stored targets (source values, boundary trace, or data).
    pub fn residuals<S: Scalar>(&self, set: SetKind, jets: &[Jet2<S>], target: &[f64]) -> Vec<S> {
        match set {
            SetKind::Interior => match &self.kind {
                ProblemKind::Poisson2D => vec![residuals::poisson_pde(&jets[0], target[0])],
                ProblemKind::Heat1D { .. } => vec![residuals::heat_pde(&jets[0], 1, target[0])],
                ProblemKind::HeatNd { n } => vec![residuals::heat_pde(&jets[0], *n, target[0])],
                ProblemKind::Wave1D { .. } => vec![residuals::wave_pde(&jets[0], target[0])],
                ProblemKind::Stokes2D => residuals::stokes_pde(&jets[0], &jets[1], &jets[2], target).to_vec(),
            },
            SetKind::Boundary => vec![residuals::mismatch(jets[0].value, target[0])],
            SetKind::Data => (0..self.kind.observed_outputs())
                .map(|o| residuals::mismatch(jets[o].value, target[o]))
                .collect(),
        }
    }

    /// Exact observed outputs at `x`.
    pub fn observed(&self, x: &[f64]) -> Vec<f64> {
        let mut v = exact_values(&self.kind, x);
        v.truncate(self.kind.observed_outputs());
        v
    }

    /// `‖u‖_{L∞(D′)}` (Euclidean norm for the Stokes velocity), sampled on a
    /// lattice that includes the centre, vertices and edge midpoints.
    pub fn observation_sup(&self) -> f64 {
        let norm = |x: &[f64]| self.observed(x).iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut best = 0.0f64;
        let mut visit = |x: &[f64]| best = best.max(norm(x));
        match &self.observation {
            Geometry::Disc { center, radius } => {
                visit(center);
                for i in 1..=32 {
                    let r = radius * i as f64 / 32.0;
                    for j in 0..128 {
                        let phi = 2.0 * std::f64::consts::PI * j as f64 / 128.0;
                        visit(&[center[0] + r * phi.cos(), center[1] + r * phi.sin()]);
                    }
                }
            }
            geom => {
                let boxes = geom.boxes().expect("box-like observation");
                for (lo, hi) in boxes {
                    let d = lo.len();
                    // 2k+1 nodes per axis, capped so the lattice stays small
                    let per_axis = match d {
                        1 | 2 => 65,
                        3 => 33,
                        4 | 5 => 9,
                        6..=8 => 5,
                        9..=12 => 3,
                        _ => 2,
                    };
                    let total = (per_axis as u64).saturating_pow(d as u32);
                    if total <= 1 << 20 {
                        let mut idx = vec![0usize; d];
                        let mut x = vec![0.0; d];
                        for _ in 0..total {
                            for i in 0..d {
                                x[i] = lo[i] + (hi[i] - lo[i]) * idx[i] as f64 / (per_axis - 1) as f64;
                            }
                            visit(&x);
                            for i in (0..d).rev() {
                                idx[i] += 1;
                                if idx[i] < per_axis {
                                    break;
                                }
                                idx[i] = 0;
                            }
                        }
                    }
                    let centre: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
                    visit(&centre);
                    visit(&hi);
                    visit(&lo);
                }
            }
        }
        best
    }

    /// Data values at `points`: exact observations plus
    /// `noise_level · ‖u‖_{L∞(D′)} · ε` with standard normal `ε`.
    pub fn make_data(&self, points: &QuadratureSet, noise_level: f64, seed: u64) -> Vec<f64> {
        let mut out = Vec::with_capacity(points.len() * self.kind.observed_outputs());
        for (x, _) in points.iter() {
            out.extend(self.observed(x));
        }
        if noise_level > 0.0 {
            let scale = noise_level * self.observation_sup();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for v in &mut out {
                let e: f64 = StandardNormal.sample(&mut rng);
                *v += scale * e;
            }
        }
        out
    }

    /// Builds `S_int`, `S_sb`, `S_d` with their per-point targets.
    pub fn build_sets(&self, counts: SetCounts, seed: u64) -> Result<TrainingSets> {
        if counts.n_int == 0 || counts.n_d == 0 {
            return Err(Error::Config("interior and data sets must be non-empty".into()));
        }
        if self.kind.has_boundary() && counts.n_sb == 0 {
            return Err(Error::Config("this problem needs boundary points".into()));
        }
        let (interior, boundary, data) = match self.sampling {
            Sampling::Structured => {
                let int = quadrature::sobol_points(counts.n_int, &self.domain)?;
                let sb = if self.kind.has_boundary() {
                    Some(quadrature::boundary_grid_n(&self.domain, counts.n_sb)?)
                } else {
                    None
                };
                let d = quadrature::midpoint_grid_n(counts.n_d, &self.observation, &self.domain)?;
                (int, sb, d)
            }
            Sampling::Random => {
                let int = quadrature::uniform_random(counts.n_int, &self.domain, seed::derive(seed, Stream::Interior));
                let sb = if self.kind.has_boundary() {
                    Some(quadrature::boundary_random(
                        &self.domain,
                        counts.n_sb,
                        seed::derive(seed, Stream::Boundary),
                    )?)
                } else {
                    None
                };
                let d = quadrature::uniform_random(counts.n_d, &self.observation, seed::derive(seed, Stream::Data));
                (int, sb, d)
            }
        };
        let int_targets: Vec<f64> = interior.iter().flat_map(|(x, _)| source(&self.kind, x)).collect();
        let boundary = boundary.map(|q| {
            let targets = q.iter().map(|(x, _)| exact_values(&self.kind, x)[0]).collect();
            PointSet {
                kind: SetKind::Boundary,
                quad: q,
                targets,
                width: 1,
            }
        });
        let data_targets = self.make_data(&data, self.noise_level, seed::derive(seed, Stream::Noise));
        Ok(TrainingSets {
            interior: PointSet {
                kind: SetKind::Interior,
                quad: interior,
                targets: int_targets,
                width: self.target_width(SetKind::Interior),
            },
            boundary,
            data: PointSet {
                kind: SetKind::Data,
                quad: data,
                targets: data_targets,
                width: self.kind.observed_outputs(),
            },
        })
    }
}

/// A training set with one row of targets per point.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    pub kind: SetKind,
    pub quad: QuadratureSet,
    pub targets: Vec<f64>,
    pub width: usize,
}

impl PointSet {
    pub fn len(&self) -> usize {
        self.quad.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quad.is_empty()
    }

    pub fn target(&self, i: usize) -> &[f64] {
        &self.targets[i * self.width..(i + 1) * self.width]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingSets {
    pub interior: PointSet,
    pub boundary: Option<PointSet>,
    pub data: PointSet,
}

impl TrainingSets {
    pub fn counts(&self) -> SetCounts {
        SetCounts {
            n_int: self.interior.len(),
            n_sb: self.boundary.as_ref().map_or(0, PointSet::len),
            n_d: self.data.len(),
        }
    }

    pub fn sets(&self) -> impl Iterator<Item = &PointSet> {
        std::iter::once(&self.interior).chain(self.boundary.as_ref()).chain(std::iter::once(&self.data))
    }

    /// Checks that the sets fit the problem's dimensions.
    pub fn check(&self, spec: &ProblemSpec) -> Result<()> {
        for set in self.sets() {
            if set.quad.dim != spec.input_dim() {
                return Err(Error::SetMismatch(format!(
                    "{} set has dimension {}, problem `{}` needs {}",
                    set.kind.label(),
                    set.quad.dim,
                    spec.id,
                    spec.input_dim()
                )));
            }
            if set.width != spec.target_width(set.kind) || set.targets.len() != set.len() * set.width {
                return Err(Error::SetMismatch(format!("{} set targets do not fit `{}`", set.kind.label(), spec.id)));
            }
        }
        if self.boundary.is_some() != spec.kind.has_boundary() {
            return Err(Error::SetMismatch(format!("boundary set presence does not fit `{}`", spec.id)));
        }
        Ok(())
    }

    /// Writes all sets as one CSV with a leading `set` column.
    pub fn write_csv(&self, out: &mut impl std::io::Write) -> Result<()> {
        let mut header = true;
        for set in self.sets() {
            set.quad.write_csv(out, Some(set.kind.label()), header)?;
            header = false;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn all_specs() -> Vec<ProblemSpec> {
        vec![
            ProblemSpec::poisson(),
            ProblemSpec::poisson_noisy(),
            ProblemSpec::heat1d(HeatSolution::Printed),
            ProblemSpec::heat1d(HeatSolution::Decaying),
            ProblemSpec::heat1d_random(HeatSolution::Printed),
            ProblemSpec::heat_nd(1).unwrap(),
            ProblemSpec::heat_nd(5).unwrap(),
            ProblemSpec::heat_nd(10).unwrap(),
            ProblemSpec::wave(true),
            ProblemSpec::wave(false),
            ProblemSpec::stokes(),
        ]
    }

    #[test]
    fn poisson_split() {
        let c = ProblemSpec::poisson().counts(400);
        assert_eq!((c.n_d, c.n_int, c.n_sb), (225, 175, 0));
        let sets = ProblemSpec::poisson().build_sets(c, 0).unwrap();
        assert_eq!(sets.counts(), c);
    }

    #[test]
    fn heat_nd_split() {
        let c = ProblemSpec::heat_nd(100).unwrap().counts(16384);
        assert_eq!((c.n_int, c.n_d, c.n_sb), (8192, 6144, 2048));
    }

    #[test]
    fn stokes_ratio() {
        assert!((ProblemSpec::stokes().split.data - 0.19635).abs() < 1e-5);
    }

    #[test]
    fn splits_sum_to_one() {
        for s in all_specs() {
            let total = s.split.interior + s.split.boundary + s.split.data;
            assert!((total - 1.0).abs() < 1e-12, "{}", s.id);
            assert_eq!(s.split.boundary == 0.0, !s.kind.has_boundary(), "{}", s.id);
            assert!(s.observation.is_within(&s.domain), "{}", s.id);
            assert!(s.observation.measure() < s.domain.measure());
        }
    }

    #[test]
    fn catalog_lookup() {
        assert_eq!(ProblemSpec::from_id("heatnd:7").unwrap().input_dim(), 8);
        for id in ["poisson", "poisson-noisy", "heat1d", "heat1d-random", "wave-gcc", "wave-nogcc", "stokes"] {
            assert_eq!(ProblemSpec::from_id(id).unwrap().id, id);
        }
        match ProblemSpec::from_id("navier") {
            Err(Error::UnknownProblem { catalog, .. }) => assert!(catalog.contains("wave-gcc")),
            other => panic!("{other:?}"),
        }
        assert!(ProblemSpec::from_id("heatnd:0").is_err());
    }

    #[test]
    fn poisson_sup_norm() {
        assert_eq!(ProblemSpec::poisson().observation_sup(), 1.875);
    }

    #[test]
    fn exact_fields_annihilate_residuals() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for spec in all_specs() {
            let d = spec.input_dim();
            for _ in 0..200 {
                let x: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
                let jets = exact_jets(&spec.kind, &Jet2::<f64>::seed(&x));
                let f = source(&spec.kind, &x);
                for r in spec.residuals(SetKind::Interior, &jets, &f) {
                    assert!(r.abs() <= 1e-10, "{}: {r}", spec.id);
                }
                for r in spec.residuals(SetKind::Data, &jets, &spec.observed(&x)) {
                    assert!(r.abs() <= 1e-10);
                }
            }
        }
    }

    #[test]
    fn sets_lie_in_their_geometries() {
        for spec in all_specs() {
            let n = if matches!(spec.kind, ProblemKind::HeatNd { .. }) { 2000 } else { spec.default_n };
            let sets = spec.build_sets(spec.counts(n), 3).unwrap();
            sets.check(&spec).unwrap();
            for (x, w) in sets.interior.quad.iter() {
                assert!(spec.domain.contains(x) && w > 0.0);
            }
            for (x, _) in sets.data.quad.iter() {
                assert!(spec.observation.contains(x), "{} {x:?}", spec.id);
            }
            if let Some(sb) = &sets.boundary {
                for (i, (x, _)) in sb.quad.iter().enumerate() {
                    assert!(spec.domain.contains(x));
                    // boundary targets are the exact trace
                    assert_eq!(sb.target(i)[0], exact_values(&spec.kind, x)[0]);
                }
            }
        }
    }

    #[test]
    fn zero_noise_data_is_exact() {
        let spec = ProblemSpec::stokes();
        let sets = spec.build_sets(spec.counts(400), 0).unwrap();
        for i in 0..sets.data.len() {
            assert_eq!(sets.data.target(i), spec.observed(sets.data.quad.point(i)).as_slice());
        }
    }

    #[test]
    fn noise_changes_only_data() {
        let clean = ProblemSpec::poisson().build_sets(ProblemSpec::poisson().counts(400), 5).unwrap();
        let noisy = ProblemSpec::poisson_noisy()
            .build_sets(ProblemSpec::poisson().counts(400), 5)
            .unwrap();
        assert_eq!(clean.interior, noisy.interior);
        assert_eq!(clean.data.quad, noisy.data.quad);
        assert_ne!(clean.data.targets, noisy.data.targets);
    }

    #[test]
    fn noise_statistics() {
        let spec = ProblemSpec::poisson();
        let grid = quadrature::midpoint_grid(&[25, 25], &spec.observation).unwrap();
        let clean = spec.make_data(&grid, 0.0, 1);
        let noisy = spec.make_data(&grid, 0.01, 1);
        assert_eq!(noisy, spec.make_data(&grid, 0.01, 1));
        let diffs: Vec<f64> = noisy.iter().zip(&clean).map(|(a, b)| a - b).collect();
        let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
        let sd = (diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (diffs.len() - 1) as f64).sqrt();
        let want = 0.01 * 1.875;
        assert!((sd - want).abs() < 0.2 * want, "{sd}");
    }
}
