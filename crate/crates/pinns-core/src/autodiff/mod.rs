//! Differentiation engine.
//!
//! Second-order forward jets over the network inputs ([`Jet2`]) are built on
//! top of a generic [`Scalar`]. Instantiated with `f64` they give plain input
//! derivatives; instantiated with [`Var`] every jet component stays
//! differentiable with respect to the network parameters through the
//! reverse-mode [`Tape`].

mod jet;
mod tape;

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

pub use jet::Jet2;
pub use tape::{reverse_gradient, Op, Tape, Var};

/// Elementwise activation function.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Tanh,
    Sigmoid,
    /// Bypass; turns the network into an affine map.
    Identity,
}

impl Activation {
    /// `[σ, σ', σ'', σ''']` at `x`.
    pub fn derivatives(self, x: f64) -> [f64; 4] {
        match self {
            Activation::Tanh => {
                let t = x.tanh();
                let s = 1.0 - t * t;
                [t, s, -2.0 * t * s, -2.0 * s * (s - 2.0 * t * t)]
            }
            Activation::Sigmoid => {
                let s = 1.0 / (1.0 + (-x).exp());
                let d1 = s * (1.0 - s);
                [s, d1, d1 * (1.0 - 2.0 * s), d1 * (1.0 - 6.0 * s + 6.0 * s * s)]
            }
            Activation::Identity => [x, 1.0, 0.0, 0.0],
        }
    }

    /// Same as [`Activation::derivatives`] given `σ(x)` already computed.
    pub fn derivatives_from_value(self, x: f64, s: f64) -> [f64; 4] {
        match self {
            Activation::Tanh => {
                let d = 1.0 - s * s;
                [s, d, -2.0 * s * d, -2.0 * d * (d - 2.0 * s * s)]
            }
            Activation::Sigmoid => {
                let d1 = s * (1.0 - s);
                [s, d1, d1 * (1.0 - 2.0 * s), d1 * (1.0 - 6.0 * s + 6.0 * s * s)]
            }
            Activation::Identity => [x, 1.0, 0.0, 0.0],
        }
    }

    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            _ => self.derivatives(x)[0],
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "sigmoid" => Ok(Activation::Sigmoid),
            "identity" => Ok(Activation::Identity),
            other => Err(format!("unknown activation `{other}`")),
        }
    }
}

/// Numeric type the jets and residual operators are generic over.
pub trait Scalar:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn constant(c: f64) -> Self;
    fn value(&self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn powi(self, n: i32) -> Self;
    /// `[σ(a), σ'(a), σ''(a)]`.
    fn activation(self, kind: Activation) -> [Self; 3];
}

impl Scalar for f64 {
    fn constant(c: f64) -> Self {
        c
    }

    fn value(&self) -> f64 {
        *self
    }

    fn sin(self) -> Self {
        f64::sin(self)
    }

    fn cos(self) -> Self {
        f64::cos(self)
    }

    fn exp(self) -> Self {
        f64::exp(self)
    }

    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }

    fn activation(self, kind: Activation) -> [Self; 3] {
        let [s, s1, s2, _] = kind.derivatives(self);
        [s, s1, s2]
    }
}

impl<'t> Scalar for Var<'t> {
    fn constant(c: f64) -> Self {
        Var::constant(c)
    }

    fn value(&self) -> f64 {
        Var::value(self)
    }

    fn sin(self) -> Self {
        Var::sin(self)
    }

    fn cos(self) -> Self {
        Var::cos(self)
    }

    fn exp(self) -> Self {
        Var::exp(self)
    }

    fn powi(self, n: i32) -> Self {
        Var::powi(self, n)
    }

    fn activation(self, kind: Activation) -> [Self; 3] {
        tape::activation_var(self, kind)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn central(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn activation_derivative_towers_match_finite_differences() {
        for kind in [Activation::Tanh, Activation::Sigmoid] {
            for &x in &[-2.1, -0.4, 0.0, 0.3, 1.7] {
                let d = kind.derivatives(x);
                for k in 0..3 {
                    let fd = central(|y| kind.derivatives(y)[k], x, 1e-5);
                    assert!((fd - d[k + 1]).abs() < 1e-8, "{kind:?} order {} at {x}", k + 1);
                }
            }
        }
    }

    #[test]
    fn tanh_third_derivative_closed_form() {
        let x = 0.7f64;
        let sech2 = 1.0 / x.cosh().powi(2);
        let t = x.tanh();
        let expected = -2.0 * sech2 * (sech2 - 2.0 * t * t);
        assert!((Activation::Tanh.derivatives(x)[3] - expected).abs() < 1e-14);
    }
}
