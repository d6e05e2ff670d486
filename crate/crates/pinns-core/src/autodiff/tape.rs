//! Scalar reverse-mode tape.
//!
//! Every arithmetic operation on a [`Var`] appends a node holding its value,
//! operand indices and local partial derivatives. A reverse sweep from a
//! scalar output accumulates adjoints for every node that output depends on.
//!
//! Constants never touch the tape: a `Var` without a tape reference behaves
//! like a plain `f64`, and operations with a constant operand are recorded
//! as unary nodes.

use std::cell::RefCell;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};

use super::Activation;

const NONE: u32 = u32::MAX;

/// Primitive operation recorded on the tape.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Op {
    Input,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    /// `a + c`
    Shift(f64),
    /// `a * c`
    Scale(f64),
    /// `c - a`
    RSub(f64),
    /// `a / c`
    DivBy(f64),
    /// `c / a`
    RDiv(f64),
    Sin,
    Cos,
    Exp,
    Powi(i32),
    Powf(f64),
    Tanh,
    TanhD1,
    TanhD2,
    Sigmoid,
    SigmoidD1,
    SigmoidD2,
}

impl Op {
    pub fn name(&self) -> &'static str {
        match self {
            Op::Input => "input",
            Op::Add => "add",
            Op::Sub => "sub",
            Op::Mul => "mul",
            Op::Div => "div",
            Op::Neg => "neg",
            Op::Shift(_) => "shift",
            Op::Scale(_) => "scale",
            Op::RSub(_) => "rsub",
            Op::DivBy(_) => "div_const",
            Op::RDiv(_) => "rdiv",
            Op::Sin => "sin",
            Op::Cos => "cos",
            Op::Exp => "exp",
            Op::Powi(_) => "powi",
            Op::Powf(_) => "powf",
            Op::Tanh => "tanh",
            Op::TanhD1 => "tanh'",
            Op::TanhD2 => "tanh''",
            Op::Sigmoid => "sigmoid",
            Op::SigmoidD1 => "sigmoid'",
            Op::SigmoidD2 => "sigmoid''",
        }
    }

    fn is_binary(&self) -> bool {
        matches!(self, Op::Add | Op::Sub | Op::Mul | Op::Div)
    }

    /// Forward value. Shared by recording and replay so both agree bit for bit.
    pub fn eval(self, a: f64, b: f64) -> f64 {
        match self {
            Op::Input => a,
            Op::Add => a + b,
            Op::Sub => a - b,
            Op::Mul => a * b,
            Op::Div => a / b,
            Op::Neg => -a,
            Op::Shift(c) => a + c,
            Op::Scale(c) => a * c,
            Op::RSub(c) => c - a,
            Op::DivBy(c) => a / c,
            Op::RDiv(c) => c / a,
            Op::Sin => a.sin(),
            Op::Cos => a.cos(),
            Op::Exp => a.exp(),
            Op::Powi(n) => a.powi(n),
            Op::Powf(p) => a.powf(p),
            Op::Tanh => Activation::Tanh.derivatives(a)[0],
            Op::TanhD1 => Activation::Tanh.derivatives(a)[1],
            Op::TanhD2 => Activation::Tanh.derivatives(a)[2],
            Op::Sigmoid => Activation::Sigmoid.derivatives(a)[0],
            Op::SigmoidD1 => Activation::Sigmoid.derivatives(a)[1],
            Op::SigmoidD2 => Activation::Sigmoid.derivatives(a)[2],
        }
    }

    /// Local partials with respect to the (up to two) operands.
    fn partials(self, a: f64, b: f64, value: f64) -> [f64; 2] {
        match self {
            Op::Input => [0.0, 0.0],
            Op::Add => [1.0, 1.0],
            Op::Sub => [1.0, -1.0],
            Op::Mul => [b, a],
            Op::Div => [1.0 / b, -a / (b * b)],
            Op::Neg => [-1.0, 0.0],
            Op::Shift(_) => [1.0, 0.0],
            Op::Scale(c) => [c, 0.0],
            Op::RSub(_) => [-1.0, 0.0],
            Op::DivBy(c) => [1.0 / c, 0.0],
            Op::RDiv(c) => [-c / (a * a), 0.0],
            Op::Sin => [a.cos(), 0.0],
            Op::Cos => [-a.sin(), 0.0],
            Op::Exp => [value, 0.0],
            Op::Powi(n) => [f64::from(n) * a.powi(n - 1), 0.0],
            Op::Powf(p) => [p * a.powf(p - 1.0), 0.0],
            Op::Tanh => [Activation::Tanh.derivatives(a)[1], 0.0],
            Op::TanhD1 => [Activation::Tanh.derivatives(a)[2], 0.0],
            Op::TanhD2 => [Activation::Tanh.derivatives(a)[3], 0.0],
            Op::Sigmoid => [Activation::Sigmoid.derivatives(a)[1], 0.0],
            Op::SigmoidD1 => [Activation::Sigmoid.derivatives(a)[2], 0.0],
            Op::SigmoidD2 => [Activation::Sigmoid.derivatives(a)[3], 0.0],
        }
    }
}

#[derive(Clone, Debug)]
struct Node {
    op: Op,
    args: [u32; 2],
    partials: [f64; 2],
    value: f64,
}

/// Recording context for one evaluation. Discard it after taking gradients.
#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

impl fmt::Debug for Tape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tape({} nodes)", self.len())
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Self {
            nodes: RefCell::new(Vec::with_capacity(n)),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Registers an independent variable.
    pub fn input(&self, value: f64) -> Var<'_> {
        let idx = self.push(Op::Input, [NONE, NONE], [0.0, 0.0], value);
        Var {
            tape: Some(self),
            idx,
            value,
        }
    }

    pub fn inputs(&self, values: &[f64]) -> Vec<Var<'_>> {
        values.iter().map(|&v| self.input(v)).collect()
    }

    fn push(&self, op: Op, args: [u32; 2], partials: [f64; 2], value: f64) -> u32 {
        let mut nodes = self.nodes.borrow_mut();
        let idx = u32::try_from(nodes.len()).expect("tape exceeds u32 nodes");
        assert!(idx != NONE, "tape exceeds u32 nodes");
        nodes.push(Node {
            op,
            args,
            partials,
            value,
        });
        idx
    }

    fn unary<'t>(&'t self, op: Op, a: &Var<'t>) -> Var<'t> {
        let value = op.eval(a.value, 0.0);
        let partials = op.partials(a.value, 0.0, value);
        let idx = self.push(op, [a.idx, NONE], partials, value);
        Var {
            tape: Some(self),
            idx,
            value,
        }
    }

    fn binary<'t>(&'t self, op: Op, a: &Var<'t>, b: &Var<'t>) -> Var<'t> {
        let value = op.eval(a.value, b.value);
        let partials = op.partials(a.value, b.value, value);
        let idx = self.push(op, [a.idx, b.idx], partials, value);
        Var {
            tape: Some(self),
            idx,
            value,
        }
    }

    /// Adjoint of every node with respect to `output` (zero for unreachable
    /// nodes). Fails on the earliest reachable node whose value, local partial
    /// or adjoint is not finite.
    pub fn adjoints(&self, output: &Var<'_>) -> Result<Vec<f64>> {
        let nodes = self.nodes.borrow();
        let mut adj = vec![0.0; nodes.len()];
        let Some(out) = output.tape_index(self) else {
            return Ok(adj);
        };
        let mut reachable = vec![false; nodes.len()];
        reachable[out] = true;
        adj[out] = 1.0;
        // Earliest node with a non-finite value or partial; failing that, the
        // first node (in sweep order) whose adjoint overflowed.
        let mut offending: Option<usize> = None;
        let mut overflowed: Option<usize> = None;
        for i in (0..=out).rev() {
            if !reachable[i] {
                continue;
            }
            let node = &nodes[i];
            let a = adj[i];
            let arity = if node.op == Op::Input {
                0
            } else if node.op.is_binary() {
                2
            } else {
                1
            };
            if !node.value.is_finite() || node.partials[..arity].iter().any(|p| !p.is_finite()) {
                offending = Some(i);
            } else if !a.is_finite() && overflowed.is_none() {
                overflowed = Some(i);
            }
            for k in 0..arity {
                let arg = node.args[k] as usize;
                reachable[arg] = true;
                adj[arg] += a * node.partials[k];
            }
        }
        match offending.or(overflowed) {
            Some(node) => Err(Error::NonFinite {
                node,
                op: nodes[node].op.name(),
            }),
            None => Ok(adj),
        }
    }

    /// Gradient of `output` with respect to each of `wrt`.
    pub fn gradient(&self, output: &Var<'_>, wrt: &[Var<'_>]) -> Result<Vec<f64>> {
        let adj = self.adjoints(output)?;
        Ok(wrt
            .iter()
            .map(|v| v.tape_index(self).map_or(0.0, |i| adj[i]))
            .collect())
    }

    /// Re-evaluates every node from new input values (in registration order).
    pub fn replay(&self, inputs: &[f64]) -> Result<Vec<f64>> {
        let nodes = self.nodes.borrow();
        let n_inputs = nodes.iter().filter(|n| n.op == Op::Input).count();
        if n_inputs != inputs.len() {
            return Err(Error::LengthMismatch {
                expected: n_inputs,
                got: inputs.len(),
            });
        }
        let mut values = Vec::with_capacity(nodes.len());
        let mut next_input = inputs.iter();
        for node in nodes.iter() {
            let v = match node.op {
                Op::Input => *next_input.next().expect("counted above"),
                op => {
                    let a = values[node.args[0] as usize];
                    let b = if op.is_binary() {
                        values[node.args[1] as usize]
                    } else {
                        0.0
                    };
                    op.eval(a, b)
                }
            };
            values.push(v);
        }
        Ok(values)
    }

    /// Recorded values, in node order.
    pub fn values(&self) -> Vec<f64> {
        self.nodes.borrow().iter().map(|n| n.value).collect()
    }
}

/// Gradient of a scalar loss with respect to the given parameters.
///
/// Parameters the loss does not depend on receive exactly zero.
pub fn reverse_gradient(loss: &Var<'_>, params: &[Var<'_>]) -> Result<Vec<f64>> {
    match loss.tape {
        Some(tape) => tape.gradient(loss, params),
        None => Ok(vec![0.0; params.len()]),
    }
}

/// Differentiable scalar. Copyable handle into a [`Tape`], or a constant.
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: Option<&'t Tape>,
    idx: u32,
    value: f64,
}

impl fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.tape {
            Some(_) => write!(f, "Var(#{} = {})", self.idx, self.value),
            None => write!(f, "Const({})", self.value),
        }
    }
}

impl<'t> Var<'t> {
    pub fn constant(value: f64) -> Self {
        Self {
            tape: None,
            idx: NONE,
            value,
        }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn is_constant(&self) -> bool {
        self.tape.is_none()
    }

    /// Node index on `tape`, if this variable lives there.
    pub fn tape_index(&self, tape: &Tape) -> Option<usize> {
        match self.tape {
            Some(t) if std::ptr::eq(t, tape) => Some(self.idx as usize),
            _ => None,
        }
    }

    fn apply(self, op: Op) -> Self {
        match self.tape {
            Some(t) => t.unary(op, &self),
            None => Var::constant(op.eval(self.value, 0.0)),
        }
    }

    fn combine(self, rhs: Self, op: Op) -> Self {
        match (self.tape, rhs.tape) {
            (Some(t), Some(u)) => {
                debug_assert!(std::ptr::eq(t, u), "operands recorded on different tapes");
                t.binary(op, &self, &rhs)
            }
            (Some(_), None) => {
                let c = rhs.value;
                let unary = match op {
                    Op::Add => Op::Shift(c),
                    Op::Sub => Op::Shift(-c),
                    Op::Mul => Op::Scale(c),
                    Op::Div => Op::DivBy(c),
                    _ => unreachable!(),
                };
                self.apply(unary)
            }
            (None, Some(_)) => {
                let c = self.value;
                let unary = match op {
                    Op::Add => Op::Shift(c),
                    Op::Sub => Op::RSub(c),
                    Op::Mul => Op::Scale(c),
                    Op::Div => Op::RDiv(c),
                    _ => unreachable!(),
                };
                rhs.apply(unary)
            }
            (None, None) => Var::constant(op.eval(self.value, rhs.value)),
        }
    }

    pub fn sin(self) -> Self {
        self.apply(Op::Sin)
    }

    pub fn cos(self) -> Self {
        self.apply(Op::Cos)
    }

    pub fn exp(self) -> Self {
        self.apply(Op::Exp)
    }

    pub fn powi(self, n: i32) -> Self {
        self.apply(Op::Powi(n))
    }

    pub fn powf(self, p: f64) -> Self {
        self.apply(Op::Powf(p))
    }

    pub fn tanh(self) -> Self {
        self.apply(Op::Tanh)
    }
}

macro_rules! var_binop {
    ($trait:ident, $method:ident, $op:expr) => {
        impl<'t> $trait for Var<'t> {
            type Output = Var<'t>;
            fn $method(self, rhs: Var<'t>) -> Var<'t> {
                self.combine(rhs, $op)
            }
        }
        impl<'t> $trait<f64> for Var<'t> {
            type Output = Var<'t>;
            fn $method(self, rhs: f64) -> Var<'t> {
                self.combine(Var::constant(rhs), $op)
            }
        }
        impl<'t> $trait<Var<'t>> for f64 {
            type Output = Var<'t>;
            fn $method(self, rhs: Var<'t>) -> Var<'t> {
                Var::constant(self).combine(rhs, $op)
            }
        }
    };
}

var_binop!(Add, add, Op::Add);
var_binop!(Sub, sub, Op::Sub);
var_binop!(Mul, mul, Op::Mul);
var_binop!(Div, div, Op::Div);

impl<'t> Neg for Var<'t> {
    type Output = Var<'t>;
    fn neg(self) -> Var<'t> {
        self.apply(Op::Neg)
    }
}

/// Activation value and its first two derivatives as tape primitives, so the
/// reverse sweep through second-order jets stays exact.
pub(crate) fn activation_var<'t>(a: Var<'t>, kind: Activation) -> [Var<'t>; 3] {
    match kind {
        Activation::Identity => [a, Var::constant(1.0), Var::constant(0.0)],
        Activation::Tanh => [a.apply(Op::Tanh), a.apply(Op::TanhD1), a.apply(Op::TanhD2)],
        Activation::Sigmoid => [
            a.apply(Op::Sigmoid),
            a.apply(Op::SigmoidD1),
            a.apply(Op::SigmoidD2),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule() {
        let tape = Tape::new();
        let p = tape.inputs(&[2.0, 3.0]);
        let loss = p[0] * p[1];
        assert_eq!(reverse_gradient(&loss, &p).unwrap(), vec![3.0, 2.0]);
    }

    #[test]
    fn tanh_at_zero() {
        let tape = Tape::new();
        let p = tape.inputs(&[0.0]);
        let loss = p[0].tanh();
        assert_eq!(reverse_gradient(&loss, &p).unwrap(), vec![1.0]);
    }

    #[test]
    fn unreachable_parameters_get_zero() {
        let tape = Tape::new();
        let p = tape.inputs(&[1.5, -4.0, 2.0]);
        let loss = p[0].sin() * p[2];
        let g = reverse_gradient(&loss, &p).unwrap();
        assert_eq!(g[1], 0.0);
        assert_eq!(g[0], 1.5f64.cos() * 2.0);
    }

    #[test]
    fn constant_loss_has_zero_gradient() {
        let tape = Tape::new();
        let p = tape.inputs(&[1.0, 2.0]);
        let loss = Var::constant(3.0) * 2.0;
        assert_eq!(reverse_gradient(&loss, &p).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn non_finite_names_first_offending_op() {
        let tape = Tape::new();
        let p = tape.inputs(&[0.0, 1.0]);
        let bad = p[1] / p[0]; // inf
        let loss = bad * 2.0 + p[1];
        match reverse_gradient(&loss, &p) {
            Err(Error::NonFinite { node, op }) => {
                assert_eq!(op, "div");
                assert_eq!(node, 2);
            }
            other => panic!("expected non-finite error, got {other:?}"),
        }
    }

    #[test]
    fn replay_reproduces_recorded_values() {
        let tape = Tape::new();
        let p = tape.inputs(&[0.3, -1.2]);
        let y = (p[0] * p[1]).tanh() + (p[0] / (p[1] * p[1] + 1.0)).exp() - 2.0 * p[1].sin();
        let _ = y.powi(3) + 1.0 / y;
        let replayed = tape.replay(&[0.3, -1.2]).unwrap();
        let recorded = tape.values();
        assert_eq!(replayed.len(), recorded.len());
        for (a, b) in replayed.iter().zip(&recorded) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn constant_folding_stays_off_tape() {
        let tape = Tape::new();
        let x = tape.input(1.0);
        let c = Var::constant(2.0) * Var::constant(4.0);
        assert!(c.is_constant());
        assert_eq!(c.value(), 8.0);
        let _ = x + c;
        assert_eq!(tape.len(), 2);
    }
}
