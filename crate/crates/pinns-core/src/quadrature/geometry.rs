use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// Membership slack for points generated on or near a boundary.
const EPS: f64 = 1e-12;

/// Domains used for training and test sets. Time-dependent domains put time
/// in the last coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Geometry {
    /// Axis-aligned box `Π [lo_i, hi_i]`.
    Rect { lo: Vec<f64>, hi: Vec<f64> },
    /// Disc in the plane.
    Disc { center: [f64; 2], radius: f64 },
    /// Union of disjoint pieces of equal dimension.
    Union { parts: Vec<Geometry> },
    /// `space × (t0, t1)`.
    Slab { space: Box<Geometry>, t0: f64, t1: f64 },
}

impl Geometry {
    pub fn unit_cube(dim: usize) -> Self {
        Self::rect(vec![0.0; dim], vec![1.0; dim])
    }

    pub fn rect(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len());
        assert!(lo.iter().zip(&hi).all(|(a, b)| a < b), "degenerate box");
        Geometry::Rect { lo, hi }
    }

    pub fn interval(a: f64, b: f64) -> Self {
        Self::rect(vec![a], vec![b])
    }

    pub fn disc(center: [f64; 2], radius: f64) -> Self {
        assert!(radius > 0.0);
        Geometry::Disc { center, radius }
    }

    pub fn union(parts: Vec<Geometry>) -> Self {
        assert!(!parts.is_empty());
        let d = parts[0].dim();
        assert!(parts.iter().all(|p| p.dim() == d), "mixed dimensions");
        Geometry::Union { parts }
    }

    pub fn slab(space: Geometry, t0: f64, t1: f64) -> Self {
        assert!(t0 < t1);
        Geometry::Slab {
            space: Box::new(space),
            t0,
            t1,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Geometry::Rect { lo, .. } => lo.len(),
            Geometry::Disc { .. } => 2,
            Geometry::Union { parts } => parts[0].dim(),
            Geometry::Slab { space, .. } => space.dim() + 1,
        }
    }

    pub fn measure(&self) -> f64 {
        match self {
            Geometry::Rect { lo, hi } => lo.iter().zip(hi).map(|(a, b)| b - a).product(),
            Geometry::Disc { radius, .. } => PI * radius * radius,
            Geometry::Union { parts } => parts.iter().map(Geometry::measure).sum(),
            Geometry::Slab { space, t0, t1 } => space.measure() * (t1 - t0),
        }
    }

    /// Closed-set membership with a small slack.
    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        match self {
            Geometry::Rect { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(&v, (&a, &b))| v >= a - EPS && v <= b + EPS),
            Geometry::Disc { center, radius } => {
                let (dx, dy) = (x[0] - center[0], x[1] - center[1]);
                (dx * dx + dy * dy).sqrt() <= radius + EPS
            }
            Geometry::Union { parts } => parts.iter().any(|p| p.contains(x)),
            Geometry::Slab { space, t0, t1 } => {
                let (s, t) = x.split_at(x.len() - 1);
                t[0] >= t0 - EPS && t[0] <= t1 + EPS && space.contains(s)
            }
        }
    }

    /// `(lo, hi)` of the smallest enclosing box.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Geometry::Rect { lo, hi } => (lo.clone(), hi.clone()),
            Geometry::Disc { center, radius } => (
                vec![center[0] - radius, center[1] - radius],
                vec![center[0] + radius, center[1] + radius],
            ),
            Geometry::Union { parts } => {
                let (mut lo, mut hi) = parts[0].bounding_box();
                for p in &parts[1..] {
                    let (l, h) = p.bounding_box();
                    for i in 0..lo.len() {
                        lo[i] = lo[i].min(l[i]);
                        hi[i] = hi[i].max(h[i]);
                    }
                }
                (lo, hi)
            }
            Geometry::Slab { space, t0, t1 } => {
                let (mut lo, mut hi) = space.bounding_box();
                lo.push(*t0);
                hi.push(*t1);
                (lo, hi)
            }
        }
    }

    /// Decomposes into disjoint boxes when the geometry is box-like
    /// (boxes, unions of boxes, slabs over either).
    pub fn boxes(&self) -> Option<Vec<(Vec<f64>, Vec<f64>)>> {
        match self {
            Geometry::Rect { lo, hi } => Some(vec![(lo.clone(), hi.clone())]),
            Geometry::Disc { .. } => None,
            Geometry::Union { parts } => {
                let mut out = Vec::new();
                for p in parts {
                    out.extend(p.boxes()?);
                }
                Some(out)
            }
            Geometry::Slab { space, t0, t1 } => Some(
                space
                    .boxes()?
                    .into_iter()
                    .map(|(mut lo, mut hi)| {
                        lo.push(*t0);
                        hi.push(*t1);
                        (lo, hi)
                    })
                    .collect(),
            ),
        }
    }

    /// Whether every point of `self` lies in `other`, checked on box corners
    /// and disc extremes. Enough for the shapes used here.
    pub fn is_within(&self, other: &Geometry) -> bool {
        match self {
            Geometry::Disc { center, radius } => {
                let probes = 16;
                (0..probes).all(|k| {
                    let phi = 2.0 * PI * k as f64 / probes as f64;
                    other.contains(&[center[0] + radius * phi.cos(), center[1] + radius * phi.sin()])
                }) && other.contains(center)
            }
            Geometry::Union { parts } => parts.iter().all(|p| p.is_within(other)),
            _ => match self.boxes() {
                Some(boxes) => boxes.iter().all(|(lo, hi)| {
                    let d = lo.len();
                    (0..1usize << d).all(|mask| {
                        let corner: Vec<f64> =
                            (0..d).map(|i| if mask >> i & 1 == 1 { hi[i] } else { lo[i] }).collect();
                        other.contains(&corner)
                    })
                }),
                None => false,
            },
        }
    }

    /// Time interval of a slab.
    pub fn time_span(&self) -> Option<(f64, f64)> {
        match self {
            Geometry::Slab { t0, t1, .. } => Some((*t0, *t1)),
            _ => None,
        }
    }

    /// Surface measure of the boundary of a box (sum of face measures).
    pub fn boundary_measure(&self) -> Option<f64> {
        match self {
            Geometry::Rect { lo, hi } => {
                let ext: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| b - a).collect();
                Some(
                    (0..ext.len())
                        .map(|i| 2.0 * ext.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, e)| e).product::<f64>())
                        .sum(),
                )
            }
            Geometry::Disc { radius, .. } => Some(2.0 * PI * radius),
            _ => None,
        }
    }
}
