use std::ops::{Add, Mul, Neg, Sub};

use super::{Activation, Scalar};

/// Value, gradient and Hessian diagonal of a field with respect to each input
/// coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet2<S> {
    pub value: S,
    /// `∂/∂y_i`
    pub d1: Vec<S>,
    /// `∂²/∂y_i²`
    pub d2: Vec<S>,
}

impl<S: Scalar> Jet2<S> {
    pub fn constant(c: f64, dim: usize) -> Self {
        Self {
            value: S::constant(c),
            d1: vec![S::constant(0.0); dim],
            d2: vec![S::constant(0.0); dim],
        }
    }

    /// Taylor seed for a point: coordinate `i` gets `d1 = e_i` and zero curvature.
    pub fn seed(x: &[f64]) -> Vec<Self> {
        let dim = x.len();
        x.iter()
            .enumerate()
            .map(|(i, &xi)| {
                let mut jet = Self::constant(xi, dim);
                jet.d1[i] = S::constant(1.0);
                jet
            })
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.d1.len()
    }

    /// Applies a scalar function given its value and first two derivatives at
    /// `self.value`.
    pub fn chain(&self, f: S, df: S, d2f: S) -> Self {
        Self {
            value: f,
            d1: self.d1.iter().map(|&a| df * a).collect(),
            d2: self
                .d1
                .iter()
                .zip(&self.d2)
                .map(|(&a1, &a2)| d2f * (a1 * a1) + df * a2)
                .collect(),
        }
    }

    pub fn activation(&self, kind: Activation) -> Self {
        if kind == Activation::Identity {
            return self.clone();
        }
        let [s, s1, s2] = self.value.activation(kind);
        self.chain(s, s1, s2)
    }

    pub fn sin(&self) -> Self {
        let s = self.value.sin();
        let c = self.value.cos();
        self.chain(s, c, -s)
    }

    pub fn cos(&self) -> Self {
        let s = self.value.sin();
        let c = self.value.cos();
        self.chain(c, -s, -c)
    }

    pub fn exp(&self) -> Self {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    pub fn powi(&self, n: i32) -> Self {
        let f = self.value.powi(n);
        let df = self.value.powi(n - 1) * f64::from(n);
        let d2f = if n == 1 {
            S::constant(0.0)
        } else {
            self.value.powi(n - 2) * f64::from(n * (n - 1))
        };
        self.chain(f, df, d2f)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            value: self.value * c,
            d1: self.d1.iter().map(|&a| a * c).collect(),
            d2: self.d2.iter().map(|&a| a * c).collect(),
        }
    }

    pub fn shift(&self, c: f64) -> Self {
        Self {
            value: self.value + c,
            d1: self.d1.clone(),
            d2: self.d2.clone(),
        }
    }

    /// Sum of the Hessian diagonal over the given coordinates.
    pub fn laplacian(&self, coords: impl IntoIterator<Item = usize>) -> S {
        let mut it = coords.into_iter();
        let Some(first) = it.next() else {
            return S::constant(0.0);
        };
        it.fold(self.d2[first], |acc, i| acc + self.d2[i])
    }

    pub fn values_f64(&self) -> Jet2<f64> {
        Jet2 {
            value: self.value.value(),
            d1: self.d1.iter().map(Scalar::value).collect(),
            d2: self.d2.iter().map(Scalar::value).collect(),
        }
    }
}

impl<S: Scalar> Add for &Jet2<S> {
    type Output = Jet2<S>;
    fn add(self, rhs: &Jet2<S>) -> Jet2<S> {
        Jet2 {
            value: self.value + rhs.value,
            d1: self.d1.iter().zip(&rhs.d1).map(|(&a, &b)| a + b).collect(),
            d2: self.d2.iter().zip(&rhs.d2).map(|(&a, &b)| a + b).collect(),
        }
    }
}

impl<S: Scalar> Sub for &Jet2<S> {
    type Output = Jet2<S>;
    fn sub(self, rhs: &Jet2<S>) -> Jet2<S> {
        Jet2 {
            value: self.value - rhs.value,
            d1: self.d1.iter().zip(&rhs.d1).map(|(&a, &b)| a - b).collect(),
            d2: self.d2.iter().zip(&rhs.d2).map(|(&a, &b)| a - b).collect(),
        }
    }
}

impl<S: Scalar> Mul for &Jet2<S> {
    type Output = Jet2<S>;
    #[allow(clippy::suspicious_arithmetic_impl)] // product rule
    fn mul(self, rhs: &Jet2<S>) -> Jet2<S> {
        let (a, b) = (self, rhs);
        Jet2 {
            value: a.value * b.value,
            d1: a
                .d1
                .iter()
                .zip(&b.d1)
                .map(|(&a1, &b1)| a1 * b.value + a.value * b1)
                .collect(),
            d2: (0..a.dim())
                .map(|i| a.d2[i] * b.value + (a.d1[i] * b.d1[i]) * 2.0 + a.value * b.d2[i])
                .collect(),
        }
    }
}

impl<S: Scalar> Neg for &Jet2<S> {
    type Output = Jet2<S>;
    fn neg(self) -> Jet2<S> {
        Jet2 {
            value: -self.value,
            d1: self.d1.iter().map(|&a| -a).collect(),
            d2: self.d2.iter().map(|&a| -a).collect(),
        }
    }
}

macro_rules! forward_owned {
    ($trait:ident, $method:ident) => {
        impl<S: Scalar> $trait for Jet2<S> {
            type Output = Jet2<S>;
            fn $method(self, rhs: Jet2<S>) -> Jet2<S> {
                (&self).$method(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{reverse_gradient, Tape, Var};

    #[test]
    fn tanh_of_unit_seed_at_zero() {
        let a = Jet2 {
            value: 0.0,
            d1: vec![1.0],
            d2: vec![0.0],
        };
        let out = a.activation(Activation::Tanh);
        assert_eq!(out.value, 0.0);
        assert_eq!(out.d1, vec![1.0]);
        assert_eq!(out.d2, vec![0.0]);
    }

    #[test]
    fn identity_leaves_jet_unchanged() {
        let a = Jet2 {
            value: 1.3,
            d1: vec![-0.2, 4.0],
            d2: vec![7.5, -1.0],
        };
        assert_eq!(a.activation(Activation::Identity), a);
    }

    #[test]
    fn tanh_second_order_chain_rule() {
        let a = Jet2 {
            value: 0.5,
            d1: vec![2.0],
            d2: vec![1.0],
        };
        let out = a.activation(Activation::Tanh);
        let t = 0.5f64.tanh();
        let sech2 = 1.0 / 0.5f64.cosh().powi(2);
        assert!((out.value - t).abs() < 1e-15);
        assert!((out.d1[0] - sech2 * 2.0).abs() < 1e-14);
        let d2 = -2.0 * t * sech2 * 4.0 + sech2 * 1.0;
        assert!((out.d2[0] - d2).abs() < 1e-14);
    }

    #[test]
    fn seeding_convention() {
        let jets = Jet2::<f64>::seed(&[0.3, 0.7]);
        assert_eq!(jets[0].d1, vec![1.0, 0.0]);
        assert_eq!(jets[1].d1, vec![0.0, 1.0]);
        assert!(jets.iter().all(|j| j.d2.iter().all(|&v| v == 0.0)));
        let t = Jet2::<f64>::seed(&[0.25]);
        assert_eq!(t[0], Jet2 { value: 0.25, d1: vec![1.0], d2: vec![0.0] });
    }

    #[test]
    fn laplacian_of_x1_squared_x2() {
        // f = x1² x2  =>  Δf = 2 x2 (symbolic)
        for &(x1, x2) in &[(0.3, 0.7), (-1.2, 2.5), (4.0, -0.1)] {
            let y = Jet2::<f64>::seed(&[x1, x2]);
            let f = &(&y[0] * &y[0]) * &y[1];
            assert!((f.laplacian(0..2) - 2.0 * x2).abs() < 1e-13);
            assert!((f.d1[0] - 2.0 * x1 * x2).abs() < 1e-13);
            assert!((f.d1[1] - x1 * x1).abs() < 1e-13);
        }
    }

    #[test]
    fn jet_components_are_parameter_differentiable() {
        // u(x) = tanh(w x) ; d2u/dx2 = w² tanh''(w x); d/dw of that by FD
        let x = 0.4;
        let d2 = |w: f64| {
            let [_, _, s2, _] = Activation::Tanh.derivatives(w * x);
            w * w * s2
        };
        let tape = Tape::new();
        let w = tape.input(1.3);
        let seed = Jet2::<Var>::seed(&[x]);
        let out = seed[0].scale(1.0).chain(w * x, w, Var::constant(0.0)); // affine w·x
        let u = out.activation(Activation::Tanh);
        let g = reverse_gradient(&u.d2[0], &[w]).unwrap();
        let fd = (d2(1.3 + 1e-6) - d2(1.3 - 1e-6)) / 2e-6;
        assert!((g[0] - fd).abs() < 1e-7, "{} vs {}", g[0], fd);
    }
}
