//! Scalar reverse-mode tape.
//!
//! Every arithmetic operation on a [`Var`] appends a node to the owning
//! [`Tape`]; nodes only ever reference earlier nodes, so the graph is acyclic
//! by construction and a single reverse sweep yields all adjoints.

use std::cell::RefCell;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Const,
    Param(usize),
    Input,
    Neg(u32),
    Add(u32, u32),
    Sub(u32, u32),
    Mul(u32, u32),
    Div(u32, u32),
    PowI(u32, i32),
    Sin(u32),
    Cos(u32),
    Tanh(u32),
    Exp(u32),
    Log(u32),
    Square(u32),
    /// Mean over `len` operands stored contiguously in the operand arena.
    Mean {
        start: u32,
        len: u32,
    },
}

impl Op {
    fn kind(&self) -> &'static str {
        match self {
            Op::Const => "const",
            Op::Param(_) => "param",
            Op::Input => "input",
            Op::Neg(_) => "neg",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::Div(..) => "div",
            Op::PowI(..) => "powi",
            Op::Sin(_) => "sin",
            Op::Cos(_) => "cos",
            Op::Tanh(_) => "tanh",
            Op::Exp(_) => "exp",
            Op::Log(_) => "log",
            Op::Square(_) => "square",
            Op::Mean { .. } => "mean",
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Node {
    op: Op,
    value: f64,
}

#[derive(Debug, Default)]
struct Graph {
    nodes: Vec<Node>,
    operands: Vec<u32>,
    n_params: usize,
}

/// Append-only expression graph. Confined to one thread.
#[derive(Debug, Default)]
pub struct Tape {
    graph: RefCell<Graph>,
}

/// Handle to a scalar node on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    idx: u32,
}

impl std::fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Var")
            .field("idx", &self.idx)
            .field("value", &self.value())
            .finish()
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&self, op: Op, value: f64) -> Var<'_> {
        let mut g = self.graph.borrow_mut();
        let idx = g.nodes.len() as u32;
        g.nodes.push(Node { op, value });
        Var { tape: self, idx }
    }

    pub fn constant(&self, value: f64) -> Var<'_> {
        self.push(Op::Const, value)
    }

    /// A non-trainable leaf, e.g. an input coordinate.
    pub fn input(&self, value: f64) -> Var<'_> {
        self.push(Op::Input, value)
    }

    /// Registers the next trainable slot and returns its leaf.
    pub fn param(&self, value: f64) -> Var<'_> {
        let slot = {
            let mut g = self.graph.borrow_mut();
            g.n_params += 1;
            g.n_params - 1
        };
        self.push(Op::Param(slot), value)
    }

    /// Registers one leaf per entry of `values`, in slot order.
    pub fn params(&self, values: &[f64]) -> Vec<Var<'_>> {
        values.iter().map(|&v| self.param(v)).collect()
    }

    pub fn n_params(&self) -> usize {
        self.graph.borrow().n_params
    }

    pub fn len(&self) -> usize {
        self.graph.borrow().nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Arithmetic mean of `items`; an empty slice is a contract violation.
    pub fn mean<'t>(&'t self, items: &[Var<'t>]) -> Result<Var<'t>> {
        if items.is_empty() {
            return Err(Error::contract("mean of an empty set of expressions"));
        }
        let value = items.iter().map(|v| v.value()).sum::<f64>() / items.len() as f64;
        let start = {
            let mut g = self.graph.borrow_mut();
            let start = g.operands.len() as u32;
            g.operands.extend(items.iter().map(|v| v.idx));
            start
        };
        Ok(self.push(
            Op::Mean {
                start,
                len: items.len() as u32,
            },
            value,
        ))
    }

    /// Adjoints of `loss` with respect to every node, indexed by node id.
    fn adjoints(&self, loss: Var<'_>) -> Result<Vec<f64>> {
        let g = self.graph.borrow();
        let mut adj = vec![0.0; loss.idx as usize + 1];
        adj[loss.idx as usize] = 1.0;
        for i in (0..=loss.idx as usize).rev() {
            let a = adj[i];
            if a == 0.0 {
                continue;
            }
            let node = g.nodes[i];
            let val = |j: u32| g.nodes[j as usize].value;
            let mut contrib = |j: u32, d: f64| -> Result<()> {
                if matches!(g.nodes[j as usize].op, Op::Const) {
                    return Ok(());
                }
                let c = a * d;
                if !c.is_finite() {
                    return Err(Error::numeric(
                        node.op.kind(),
                        format!("adjoint contribution {c} from node {i}"),
                    ));
                }
                adj[j as usize] += c;
                Ok(())
            };
            match node.op {
                Op::Const | Op::Param(_) | Op::Input => {}
                Op::Neg(x) => contrib(x, -1.0)?,
                Op::Add(x, y) => {
                    contrib(x, 1.0)?;
                    contrib(y, 1.0)?;
                }
                Op::Sub(x, y) => {
                    contrib(x, 1.0)?;
                    contrib(y, -1.0)?;
                }
                Op::Mul(x, y) => {
                    let (vx, vy) = (val(x), val(y));
                    contrib(x, vy)?;
                    contrib(y, vx)?;
                }
                Op::Div(x, y) => {
                    let vy = val(y);
                    contrib(x, 1.0 / vy)?;
                    contrib(y, -node.value / vy)?;
                }
                Op::PowI(x, n) => {
                    let d = if n == 0 {
                        0.0
                    } else {
                        n as f64 * val(x).powi(n - 1)
                    };
                    contrib(x, d)?;
                }
                Op::Sin(x) => contrib(x, val(x).cos())?,
                Op::Cos(x) => contrib(x, -val(x).sin())?,
                Op::Tanh(x) => contrib(x, 1.0 - node.value * node.value)?,
                Op::Exp(x) => contrib(x, node.value)?,
                Op::Log(x) => contrib(x, 1.0 / val(x))?,
                Op::Square(x) => contrib(x, 2.0 * val(x))?,
                Op::Mean { start, len } => {
                    let w = 1.0 / len as f64;
                    for k in start..start + len {
                        contrib(g.operands[k as usize], w)?;
                    }
                }
            }
        }
        Ok(adj)
    }

    /// Reverse sweep from `loss`: adjoints of every node plus the gradient
    /// over registered parameter slots.
    pub fn backward(&self, loss: Var<'_>) -> Result<Adjoints> {
        let adj = self.adjoints(loss)?;
        let g = self.graph.borrow();
        let mut params = vec![0.0; g.n_params];
        for (node, a) in g.nodes.iter().zip(&adj) {
            if let Op::Param(slot) = node.op {
                params[slot] += a;
            }
        }
        Ok(Adjoints { adj, params })
    }

    /// Gradient of the scalar `loss` with respect to every registered
    /// parameter slot.
    pub fn grad_params(&self, loss: Var<'_>) -> Result<Vec<f64>> {
        Ok(self.backward(loss)?.params)
    }

    /// Adjoints of `loss` with respect to arbitrary nodes.
    pub fn grad_wrt(&self, loss: Var<'_>, wrt: &[Var<'_>]) -> Result<Vec<f64>> {
        let adj = self.backward(loss)?;
        Ok(wrt.iter().map(|v| adj.of(*v)).collect())
    }
}

/// Result of one reverse sweep.
#[derive(Debug, Clone)]
pub struct Adjoints {
    adj: Vec<f64>,
    params: Vec<f64>,
}

impl Adjoints {
    /// Adjoint of any node; nodes recorded after the loss have adjoint 0.
    pub fn of(&self, v: Var<'_>) -> f64 {
        self.adj.get(v.idx as usize).copied().unwrap_or(0.0)
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn into_params(self) -> Vec<f64> {
        self.params
    }
}

/// Gradient of a loss expression with respect to all parameter slots.
///
/// The loss must be a single scalar node; passing a vector-valued output is a
/// contract violation.
pub fn grad_params(tape: &Tape, loss: &[Var<'_>]) -> Result<Vec<f64>> {
    match loss {
        [single] => tape.grad_params(*single),
        _ => Err(Error::contract(format!(
            "loss must be scalar, got {} outputs",
            loss.len()
        ))),
    }
}

impl<'t> Var<'t> {
    pub fn value(&self) -> f64 {
        self.tape.graph.borrow().nodes[self.idx as usize].value
    }

    pub fn tape(&self) -> &'t Tape {
        self.tape
    }

    fn unary(self, op: Op, value: f64) -> Self {
        self.tape.push(op, value)
    }

    pub fn sin(self) -> Self {
        self.unary(Op::Sin(self.idx), self.value().sin())
    }

    pub fn cos(self) -> Self {
        self.unary(Op::Cos(self.idx), self.value().cos())
    }

    pub fn tanh(self) -> Self {
        self.unary(Op::Tanh(self.idx), self.value().tanh())
    }

    pub fn exp(self) -> Self {
        self.unary(Op::Exp(self.idx), self.value().exp())
    }

    pub fn ln(self) -> Self {
        self.unary(Op::Log(self.idx), self.value().ln())
    }

    pub fn square(self) -> Self {
        let v = self.value();
        self.unary(Op::Square(self.idx), v * v)
    }

    pub fn powi(self, n: i32) -> Self {
        self.unary(Op::PowI(self.idx, n), self.value().powi(n))
    }

    fn constant(&self, c: f64) -> Self {
        self.tape.constant(c)
    }
}

macro_rules! binary_op {
    ($trait:ident, $method:ident, $op:ident, $f:expr) => {
        impl<'t> $trait for Var<'t> {
            type Output = Var<'t>;
            fn $method(self, rhs: Var<'t>) -> Var<'t> {
                debug_assert!(std::ptr::eq(self.tape, rhs.tape), "mixing tapes");
                let f: fn(f64, f64) -> f64 = $f;
                let v = f(self.value(), rhs.value());
                self.tape.push(Op::$op(self.idx, rhs.idx), v)
            }
        }

        impl<'t> $trait<f64> for Var<'t> {
            type Output = Var<'t>;
            fn $method(self, rhs: f64) -> Var<'t> {
                let c = self.constant(rhs);
                self.$method(c)
            }
        }

        impl<'t> $trait<Var<'t>> for f64 {
            type Output = Var<'t>;
            fn $method(self, rhs: Var<'t>) -> Var<'t> {
                let c = rhs.constant(self);
                c.$method(rhs)
            }
        }
    };
}

binary_op!(Add, add, Add, |a, b| a + b);
binary_op!(Sub, sub, Sub, |a, b| a - b);
binary_op!(Mul, mul, Mul, |a, b| a * b);
binary_op!(Div, div, Div, |a, b| a / b);

impl<'t> Neg for Var<'t> {
    type Output = Var<'t>;
    fn neg(self) -> Var<'t> {
        let v = -self.value();
        self.unary(Op::Neg(self.idx), v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_of_param() {
        let tape = Tape::new();
        let w = tape.param(3.0);
        let loss = w * w;
        assert_eq!(tape.grad_params(loss).unwrap(), vec![6.0]);
    }

    #[test]
    fn tanh_slope_at_origin() {
        let tape = Tape::new();
        let w = tape.param(0.0);
        let x = tape.input(1.0);
        let loss = (w * x).tanh();
        assert_eq!(tape.grad_params(loss).unwrap(), vec![1.0]);
    }

    #[test]
    fn vector_loss_rejected() {
        let tape = Tape::new();
        let a = tape.param(1.0);
        let b = tape.param(2.0);
        let err = grad_params(&tape, &[a, b]).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn nan_in_reverse_sweep_names_the_node() {
        let tape = Tape::new();
        let w = tape.param(0.0);
        // d/dw log(w) = 1/0
        let loss = w.ln() * 1.0;
        match tape.grad_params(loss) {
            Err(Error::Numeric { node, .. }) => assert_eq!(node, "log"),
            other => panic!("expected numeric error, got {other:?}"),
        }
    }

    #[test]
    fn mean_reduction() {
        let tape = Tape::new();
        let p = tape.params(&[1.0, 2.0, 3.0, 4.0]);
        let sq: Vec<_> = p.iter().map(|v| v.square()).collect();
        let loss = tape.mean(&sq).unwrap();
        assert_eq!(loss.value(), 7.5);
        assert_eq!(tape.grad_params(loss).unwrap(), vec![0.5, 1.0, 1.5, 2.0]);
        assert!(tape.mean(&[]).is_err());
    }

    #[test]
    fn primitive_derivatives() {
        let tape = Tape::new();
        let x = tape.param(0.7);
        let y = tape.param(-1.3);
        let loss = x.sin() * y.cos() + x.exp() / y.square() - (x * 2.0).ln() + y.powi(3) - (-x);
        let g = tape.grad_params(loss).unwrap();
        let (xv, yv): (f64, f64) = (0.7, -1.3);
        let dx = xv.cos() * yv.cos() + xv.exp() / (yv * yv) - 1.0 / xv + 1.0;
        let dy = -xv.sin() * yv.sin() - 2.0 * xv.exp() / yv.powi(3) + 3.0 * yv * yv;
        assert!((g[0] - dx).abs() < 1e-12);
        assert!((g[1] - dy).abs() < 1e-12);
    }
}
