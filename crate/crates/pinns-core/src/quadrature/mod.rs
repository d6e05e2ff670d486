//! Point sets with quadrature weights over the problem geometries.

mod geometry;
mod rules;
mod sobol;
mod sobol_table;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use geometry::Geometry;
pub use rules::{
    boundary_grid, boundary_grid_n, boundary_random, grid_resolution, midpoint_grid, midpoint_grid_n, sobol_points,
    uniform_random,
};
pub use sobol::{Sobol, MAX_DIM as SOBOL_MAX_DIM};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    Sobol,
    MidpointGrid,
    UniformRandom,
    BoundaryGrid,
    BoundaryRandom,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::Sobol => "sobol",
            Rule::MidpointGrid => "midpoint-grid",
            Rule::UniformRandom => "uniform-random",
            Rule::BoundaryGrid => "boundary-grid",
            Rule::BoundaryRandom => "boundary-random",
        }
    }
}

/// Points (row-major, `len × dim`) with positive weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSet {
    pub dim: usize,
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub rule: Rule,
}

impl QuadratureSet {
    pub fn empty(dim: usize, rule: Rule) -> Self {
        Self {
            dim,
            points: Vec::new(),
            weights: Vec::new(),
            rule,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.points.chunks_exact(self.dim.max(1)).zip(self.weights.iter().copied())
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `Σ w_i v_i`.
    pub fn integrate(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: values.len(),
            });
        }
        Ok(self.weights.iter().zip(values).map(|(w, v)| w * v).sum())
    }

    /// Integrates a function of the point.
    pub fn integrate_fn(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.iter().map(|(x, w)| w * f(x)).sum()
    }

    pub(crate) fn push(&mut self, x: &[f64], w: f64) {
        debug_assert_eq!(x.len(), self.dim);
        self.points.extend_from_slice(x);
        self.weights.push(w);
    }

    /// Writes `x1,...,xd,w` rows, with an optional leading `set` column.
    pub fn write_csv(&self, out: &mut impl Write, label: Option<&str>, header: bool) -> Result<()> {
        if header {
            let mut cols: Vec<String> = Vec::new();
            if label.is_some() {
                cols.push("set".into());
            }
            cols.extend((1..=self.dim).map(|i| format!("x{i}")));
            cols.push("w".into());
            writeln!(out, "{}", cols.join(","))?;
        }
        for (x, w) in self.iter() {
            if let Some(l) = label {
                write!(out, "{l},")?;
            }
            for v in x {
                write!(out, "{v},")?;
            }
            writeln!(out, "{w}")?;
        }
        Ok(())
    }
}

/// Splits `n` into parts proportional to `shares` (largest remainder,
/// ties to the earlier part).
pub fn split_proportional(n: usize, shares: &[f64]) -> Vec<usize> {
    let total: f64 = shares.iter().sum();
    let exact: Vec<f64> = shares.iter().map(|s| n as f64 * s / total).collect();
    let mut parts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut left = n - parts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..shares.len()).collect();
    order.sort_by(|&a, &b| {
        let (fa, fb) = (exact[a] - exact[a].floor(), exact[b] - exact[b].floor());
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for i in order {
        if left == 0 {
            break;
        }
        parts[i] += 1;
        left -= 1;
    }
    parts
}
