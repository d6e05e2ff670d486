//! Residual operators, generic over the jet scalar so the same code serves
//! plain evaluation, the tape gradient and the fused training kernel.

use crate::autodiff::{Jet2, Scalar};

/// `−Δu − f` in two space dimensions.
pub fn poisson_pde<S: Scalar>(u: &Jet2<S>, f: f64) -> S {
    -(u.d2[0] + u.d2[1]) - f
}

/// `∂_t u − Δ_x u − f` with time in coordinate `n` and space in `0..n`.
pub fn heat_pde<S: Scalar>(u: &Jet2<S>, n: usize, f: f64) -> S {
    u.d1[n] - u.laplacian(0..n) - f
}

/// `∂_tt u − ∂_xx u − f` with input `(x, t)`.
pub fn wave_pde<S: Scalar>(u: &Jet2<S>, f: f64) -> S {
    u.d2[1] - u.d2[0] - f
}

/// Momentum `Δu_i + ∂_i p − f_i` and divergence `∂_1 u_1 + ∂_2 u_2 − f_d`.
pub fn stokes_pde<S: Scalar>(u1: &Jet2<S>, u2: &Jet2<S>, p: &Jet2<S>, f: &[f64]) -> [S; 3] {
    [
        u1.laplacian(0..2) + p.d1[0] - f[0],
        u2.laplacian(0..2) + p.d1[1] - f[1],
        u1.d1[0] + u2.d1[1] - f[2],
    ]
}

/// `u − g`; also the spatial-boundary residual `u − h`.
pub fn mismatch<S: Scalar>(value: S, target: f64) -> S {
    value - target
}
