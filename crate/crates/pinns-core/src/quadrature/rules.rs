use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{split_proportional, Geometry, QuadratureSet, Rule, Sobol};
use crate::error::{Error, Result};

fn require_boxes(geom: &Geometry, what: &str) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    geom.boxes()
        .ok_or_else(|| Error::Config(format!("{what} needs a box-like geometry")))
}

/// First `n` Sobol points mapped onto `geom`, weight `|geom| / n`. Unions get
/// one sequence per part with the budget split by measure.
pub fn sobol_points(n: usize, geom: &Geometry) -> Result<QuadratureSet> {
    let boxes = require_boxes(geom, "sobol_points")?;
    let measures: Vec<f64> = boxes.iter().map(box_measure).collect();
    let counts = split_proportional(n, &measures);
    let mut q = QuadratureSet::empty(geom.dim(), Rule::Sobol);
    for ((lo, hi), (&m, &k)) in boxes.iter().zip(measures.iter().zip(&counts)) {
        if k == 0 {
            continue;
        }
        let mut seq = Sobol::new(lo.len())?;
        for _ in 0..k {
            let u = seq.next_point();
            let x: Vec<f64> = u.iter().zip(lo.iter().zip(hi)).map(|(u, (a, b))| a + u * (b - a)).collect();
            q.push(&x, m / k as f64);
        }
    }
    Ok(q)
}

fn box_measure(b: &(Vec<f64>, Vec<f64>)) -> f64 {
    b.0.iter().zip(&b.1).map(|(a, c)| c - a).product()
}

fn tensor_midpoints(lo: &[f64], hi: &[f64], res: &[usize], q: &mut QuadratureSet) {
    let d = lo.len();
    let h: Vec<f64> = (0..d).map(|i| (hi[i] - lo[i]) / res[i] as f64).collect();
    let w: f64 = h.iter().product();
    let total: usize = res.iter().product();
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    for _ in 0..total {
        for i in 0..d {
            x[i] = lo[i] + (idx[i] as f64 + 0.5) * h[i];
        }
        q.push(&x, w);
        for i in (0..d).rev() {
            idx[i] += 1;
            if idx[i] < res[i] {
                break;
            }
            idx[i] = 0;
        }
    }
}

/// Cell-midpoint rule. For boxes `res` holds one count per axis (the last axis
/// varies fastest); union parts each get the same resolution. For a disc `res`
/// is `[n_r, n_phi]` on a polar grid with weight `r Δr Δφ`.
pub fn midpoint_grid(res: &[usize], geom: &Geometry) -> Result<QuadratureSet> {
    if res.contains(&0) {
        return Err(Error::Config("grid resolution must be positive".into()));
    }
    let mut q = QuadratureSet::empty(geom.dim(), Rule::MidpointGrid);
    if let Geometry::Disc { center, radius } = geom {
        if res.len() != 2 {
            return Err(Error::Config("disc grid needs [n_r, n_phi]".into()));
        }
        let (nr, nphi) = (res[0], res[1]);
        let dr = radius / nr as f64;
        let dphi = 2.0 * PI / nphi as f64;
        for i in 0..nr {
            let r = (i as f64 + 0.5) * dr;
            for j in 0..nphi {
                let phi = (j as f64 + 0.5) * dphi;
                q.push(&[center[0] + r * phi.cos(), center[1] + r * phi.sin()], r * dr * dphi);
            }
        }
        return Ok(q);
    }
    let boxes = require_boxes(geom, "midpoint_grid")?;
    if res.len() != geom.dim() {
        return Err(Error::Config(format!(
            "grid resolution has {} axes, geometry has {}",
            res.len(),
            geom.dim()
        )));
    }
    for (lo, hi) in &boxes {
        tensor_midpoints(lo, hi, res, &mut q);
    }
    Ok(q)
}

/// Per-axis counts whose product is close to `n` and whose ratios follow
/// `extents`.
pub fn grid_resolution(n: usize, extents: &[f64]) -> Vec<usize> {
    let d = extents.len();
    let vol: f64 = extents.iter().product();
    let s = (n as f64 / vol).powf(1.0 / d as f64);
    let ideal: Vec<f64> = extents.iter().map(|e| (e * s).max(1.0)).collect();
    let rounded: Vec<usize> = ideal.iter().map(|v| v.round() as usize).collect();
    if d > 8 {
        return rounded;
    }
    // pick the floor/ceil combination closest to n, preferring plain rounding
    let mut best = rounded.clone();
    let mut best_gap = (best.iter().product::<usize>() as f64 - n as f64).abs();
    for mask in 0..1usize << d {
        let cand: Vec<usize> = (0..d)
            .map(|i| {
                let v = if mask >> i & 1 == 1 { ideal[i].ceil() } else { ideal[i].floor() };
                (v as usize).max(1)
            })
            .collect();
        let gap = (cand.iter().product::<usize>() as f64 - n as f64).abs();
        if gap < best_gap {
            best = cand;
            best_gap = gap;
        }
    }
    best
}

/// Midpoint grid with about `n` points. Axis counts follow the extents of
/// `geom` measured in units of `reference` (the parent domain's box), so an
/// observation grid has the same spacing on every axis relative to the parent.
/// Unions split `n` by measure.
pub fn midpoint_grid_n(n: usize, geom: &Geometry, reference: &Geometry) -> Result<QuadratureSet> {
    if let Geometry::Disc { .. } = geom {
        let nr = ((n as f64 / PI).sqrt().round() as usize).max(1);
        let nphi = ((n as f64 / nr as f64).round() as usize).max(1);
        return midpoint_grid(&[nr, nphi], geom);
    }
    let boxes = require_boxes(geom, "midpoint_grid_n")?;
    let (rlo, rhi) = reference.bounding_box();
    let counts = split_proportional(n, &boxes.iter().map(box_measure).collect::<Vec<_>>());
    let mut q = QuadratureSet::empty(geom.dim(), Rule::MidpointGrid);
    for ((lo, hi), k) in boxes.iter().zip(counts) {
        if k == 0 {
            continue;
        }
        let ext: Vec<f64> = (0..lo.len()).map(|i| (hi[i] - lo[i]) / (rhi[i] - rlo[i])).collect();
        tensor_midpoints(lo, hi, &grid_resolution(k, &ext), &mut q);
    }
    Ok(q)
}

fn sample_box(rng: &mut ChaCha8Rng, lo: &[f64], hi: &[f64], x: &mut [f64]) {
    for i in 0..lo.len() {
        x[i] = lo[i] + rng.gen::<f64>() * (hi[i] - lo[i]);
    }
}

/// `n` i.i.d. uniform points, weight `|geom| / n`. Boxes are sampled directly,
/// everything else by rejection from the bounding box.
pub fn uniform_random(n: usize, geom: &Geometry, seed: u64) -> QuadratureSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = geom.dim();
    let w = geom.measure() / n.max(1) as f64;
    let mut q = QuadratureSet::empty(dim, Rule::UniformRandom);
    let (lo, hi) = geom.bounding_box();
    let direct = matches!(geom.boxes(), Some(b) if b.len() == 1);
    let mut x = vec![0.0; dim];
    while q.len() < n {
        sample_box(&mut rng, &lo, &hi, &mut x);
        if direct || geom.contains(&x) {
            q.push(&x, w);
        }
    }
    q
}

fn slab_parts(slab: &Geometry) -> Result<(Vec<f64>, Vec<f64>, f64, f64)> {
    match slab {
        Geometry::Slab { space, t0, t1 } => match space.as_ref() {
            Geometry::Rect { lo, hi } => Ok((lo.clone(), hi.clone(), *t0, *t1)),
            _ => Err(Error::Config("boundary rules need a box spatial domain".into())),
        },
        _ => Err(Error::Config("boundary rules need a time slab".into())),
    }
}

/// Spatial boundary `∂D × (t0, t1)` of a slab over a box. Each face `x_i = lo_i`
/// or `x_i = hi_i` carries a midpoint grid with `face_res` cells along every
/// other spatial axis and `n_t` time cells. Weights are face cell measure × Δt.
pub fn boundary_grid(slab: &Geometry, face_res: usize, n_t: usize) -> Result<QuadratureSet> {
    let (lo, hi, t0, t1) = slab_parts(slab)?;
    let d = lo.len();
    let mut res = vec![face_res; d - 1];
    res.push(n_t);
    boundary_grid_with(&lo, &hi, t0, t1, |_| res.clone())
}

fn boundary_grid_with(
    lo: &[f64],
    hi: &[f64],
    t0: f64,
    t1: f64,
    res_for: impl Fn(usize) -> Vec<usize>,
) -> Result<QuadratureSet> {
    let d = lo.len();
    let mut q = QuadratureSet::empty(d + 1, Rule::BoundaryGrid);
    for axis in 0..d {
        let res = res_for(axis);
        if res.contains(&0) {
            return Err(Error::Config("grid resolution must be positive".into()));
        }
        // free coordinates: spatial axes other than `axis`, then time
        let mut flo: Vec<f64> = (0..d).filter(|&j| j != axis).map(|j| lo[j]).collect();
        let mut fhi: Vec<f64> = (0..d).filter(|&j| j != axis).map(|j| hi[j]).collect();
        flo.push(t0);
        fhi.push(t1);
        let mut face = QuadratureSet::empty(d, Rule::BoundaryGrid);
        tensor_midpoints(&flo, &fhi, &res, &mut face);
        for side in [lo[axis], hi[axis]] {
            for (y, w) in face.iter() {
                let mut x = Vec::with_capacity(d + 1);
                x.extend_from_slice(&y[..axis]);
                x.push(side);
                x.extend_from_slice(&y[axis..]);
                q.push(&x, w);
            }
        }
    }
    Ok(q)
}

/// Boundary grid with about `n` points, split evenly across the faces; each
/// face grid follows the face extents relative to the slab's box.
pub fn boundary_grid_n(slab: &Geometry, n: usize) -> Result<QuadratureSet> {
    let (lo, hi, t0, t1) = slab_parts(slab)?;
    let d = lo.len();
    let per_face = (n as f64 / (2 * d) as f64).round().max(1.0) as usize;
    let res = grid_resolution(per_face, &vec![1.0; d]);
    boundary_grid_with(&lo, &hi, t0, t1, |_| res.clone())
}

/// `n` i.i.d. points uniform on `∂D × (t0, t1)` for a slab over a box.
pub fn boundary_random(slab: &Geometry, n: usize, seed: u64) -> Result<QuadratureSet> {
    let (lo, hi, t0, t1) = slab_parts(slab)?;
    let d = lo.len();
    let ext: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| b - a).collect();
    let face: Vec<f64> = (0..d)
        .map(|i| ext.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, e)| e).product())
        .collect();
    let area: f64 = 2.0 * face.iter().sum::<f64>();
    let w = area * (t1 - t0) / n.max(1) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = QuadratureSet::empty(d + 1, Rule::BoundaryRandom);
    let mut x = vec![0.0; d + 1];
    let mut blo = lo.clone();
    blo.push(t0);
    let mut bhi = hi.clone();
    bhi.push(t1);
    for _ in 0..n {
        sample_box(&mut rng, &blo, &bhi, &mut x);
        let mut u = rng.gen::<f64>() * area;
        let mut chosen = (d - 1, 1);
        'faces: for (i, &f) in face.iter().enumerate() {
            for side in 0..2 {
                if u < f {
                    chosen = (i, side);
                    break 'faces;
                }
                u -= f;
            }
        }
        x[chosen.0] = if chosen.1 == 0 { lo[chosen.0] } else { hi[chosen.0] };
        q.push(&x, w);
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Geometry {
        Geometry::unit_cube(2)
    }

    #[test]
    fn sobol_single_point() {
        let q = sobol_points(1, &unit()).unwrap();
        assert_eq!(q.points, vec![0.5, 0.5]);
        assert_eq!(q.weights, vec![1.0]);
    }

    #[test]
    fn sobol_integrates_product() {
        let q = sobol_points(4096, &unit()).unwrap();
        assert!((q.integrate_fn(|x| x[0] * x[1]) - 0.25).abs() < 1e-3);
        assert!(q.weights.iter().all(|&w| w == q.weights[0]));
        assert!((q.total_weight() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sobol_rejects_high_dimension() {
        assert!(matches!(
            sobol_points(4, &Geometry::unit_cube(65)),
            Err(Error::UnsupportedDimension(65))
        ));
    }

    #[test]
    fn two_by_two_midpoints() {
        let q = midpoint_grid(&[2, 2], &unit()).unwrap();
        assert_eq!(q.points, vec![0.25, 0.25, 0.25, 0.75, 0.75, 0.25, 0.75, 0.75]);
        assert_eq!(q.weights, vec![0.25; 4]);
    }

    #[test]
    fn midpoint_second_order() {
        let exact = 2.0 / 3.0;
        let err = |n| (midpoint_grid(&[n, n], &unit()).unwrap().integrate_fn(|x| x[0] * x[0] + x[1] * x[1]) - exact).abs();
        let ratio = err(16) / err(32);
        assert!((ratio - 4.0).abs() < 0.8, "{ratio}");
    }

    #[test]
    fn polar_disc_area() {
        let disc = Geometry::disc([0.5, 0.5], 0.25);
        let q = midpoint_grid(&[20, 20], &disc).unwrap();
        assert!((q.total_weight() - PI / 16.0).abs() < 0.01 * PI / 16.0);
        assert!(q.iter().all(|(x, _)| disc.contains(x)));
    }

    #[test]
    fn grid_sizes_follow_reference_extents() {
        let inner = Geometry::rect(vec![0.125; 2], vec![0.875; 2]);
        let q = midpoint_grid_n(225, &inner, &unit()).unwrap();
        assert_eq!(q.len(), 225);
        assert_eq!(grid_resolution(120, &[0.2, 1.0]), vec![5, 24]);
        let parts = Geometry::slab(
            Geometry::union(vec![Geometry::interval(0.0, 0.2), Geometry::interval(0.8, 1.0)]),
            0.0,
            1.0,
        );
        let q = midpoint_grid_n(240, &parts, &Geometry::unit_cube(2)).unwrap();
        assert_eq!(q.len(), 240);
        assert!(q.iter().all(|(x, _)| parts.contains(x)));
        assert!((q.total_weight() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn random_sets_are_reproducible() {
        let g = Geometry::unit_cube(3);
        assert_eq!(uniform_random(50, &g, 4), uniform_random(50, &g, 4));
        assert_ne!(uniform_random(50, &g, 4), uniform_random(50, &g, 5));
        let disc = Geometry::disc([0.0, 0.0], 1.0);
        let q = uniform_random(300, &disc, 1);
        assert!(q.iter().all(|(x, _)| disc.contains(x)));
        assert!((q.total_weight() - PI).abs() < 1e-12);
    }

    #[test]
    fn two_point_boundary() {
        let slab = Geometry::slab(Geometry::interval(0.0, 1.0), 0.0, 1.0);
        let q = boundary_grid(&slab, 1, 2).unwrap();
        assert_eq!(q.points, vec![0.0, 0.25, 0.0, 0.75, 1.0, 0.25, 1.0, 0.75]);
        assert_eq!(q.weights, vec![0.5; 4]);
        let fine = boundary_grid(&slab, 1, 200).unwrap();
        assert!((fine.total_weight() - 2.0).abs() < 1e-12);
        assert!(fine.integrate_fn(|x| (2.0 * PI * x[1]).sin()).abs() < 1e-3);
    }

    #[test]
    fn boundary_sets_lie_on_faces() {
        let slab = Geometry::slab(Geometry::unit_cube(3), 0.0, 1.0);
        for q in [boundary_grid_n(&slab, 600).unwrap(), boundary_random(&slab, 600, 9).unwrap()] {
            assert!((q.total_weight() - 6.0).abs() < 1e-9);
            for (x, _) in q.iter() {
                assert!(slab.contains(x));
                assert!(x[..3].iter().any(|&v| v == 0.0 || v == 1.0));
            }
        }
    }
}
