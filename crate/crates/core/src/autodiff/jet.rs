//! Truncated second-order Taylor arithmetic over input coordinates.
//!
//! A [`Jet2`] carries a value, its gradient with respect to every input
//! coordinate, and the second derivatives for a requested list of index
//! pairs. The scalar type is generic so the same propagation runs on plain
//! `f64` or on tape variables, which makes every jet component
//! differentiable with respect to the trainable parameters.

use std::ops::{Add, Div, Mul, Neg, Sub};

use super::tape::Var;
use crate::error::{Error, Result};

/// Scalar types the jet and network code can run on.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
{
    fn value(&self) -> f64;
    /// A constant living in the same context as `self`.
    fn lift(&self, c: f64) -> Self;
    fn tanh(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn square(self) -> Self;
    fn powi(self, n: i32) -> Self;
}

impl Scalar for f64 {
    fn value(&self) -> f64 {
        *self
    }
    fn lift(&self, c: f64) -> Self {
        c
    }
    fn tanh(self) -> Self {
        f64::tanh(self)
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
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn square(self) -> Self {
        self * self
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
}

impl<'t> Scalar for Var<'t> {
    fn value(&self) -> f64 {
        Var::value(self)
    }
    fn lift(&self, c: f64) -> Self {
        self.tape().constant(c)
    }
    fn tanh(self) -> Self {
        Var::tanh(self)
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
    fn ln(self) -> Self {
        Var::ln(self)
    }
    fn square(self) -> Self {
        Var::square(self)
    }
    fn powi(self, n: i32) -> Self {
        Var::powi(self, n)
    }
}

/// Value, input gradient and selected second input derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2<S = f64> {
    pub value: S,
    pub grad: Vec<S>,
    pub second: Vec<S>,
    pub pairs: Vec<(usize, usize)>,
}

/// Checks that every pair index is below `dim`.
pub fn validate_pairs(pairs: &[(usize, usize)], dim: usize) -> Result<()> {
    for &(i, j) in pairs {
        if i >= dim || j >= dim {
            return Err(Error::contract(format!(
                "derivative pair ({i},{j}) out of range for input dimension {dim}"
            )));
        }
    }
    Ok(())
}

impl<S: Scalar> Jet2<S> {
    pub fn constant(c: S, dim: usize, pairs: &[(usize, usize)]) -> Self {
        let zero = c.lift(0.0);
        Self {
            value: c,
            grad: vec![zero; dim],
            second: vec![zero; pairs.len()],
            pairs: pairs.to_vec(),
        }
    }

    /// The coordinate function `x_index` evaluated at `x`.
    pub fn variable(x: S, index: usize, dim: usize, pairs: &[(usize, usize)]) -> Self {
        let mut jet = Self::constant(x, dim, pairs);
        jet.grad[index] = x.lift(1.0);
        jet
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    /// Second derivative for `(i, j)` if it (or its transpose) was requested.
    pub fn second_at(&self, i: usize, j: usize) -> Option<S> {
        self.pairs
            .iter()
            .position(|&p| p == (i, j) || p == (j, i))
            .map(|k| self.second[k])
    }

    /// Applies a scalar function given its value and first two derivatives
    /// at `self.value`.
    pub fn chain(&self, f: S, df: S, d2f: S) -> Self {
        let grad = self.grad.iter().map(|&g| df * g).collect();
        let second = self
            .pairs
            .iter()
            .zip(&self.second)
            .map(|(&(i, j), &s)| df * s + d2f * (self.grad[i] * self.grad[j]))
            .collect();
        Self {
            value: f,
            grad,
            second,
            pairs: self.pairs.clone(),
        }
    }

    pub fn tanh(&self) -> Self {
        let t = self.value.tanh();
        let d1 = (t * t - 1.0) * -1.0;
        let d2 = t * d1 * -2.0;
        self.chain(t, d1, d2)
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

    pub fn square(&self) -> Self {
        self.mul(self)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            value: self.value + other.value,
            grad: zip_with(&self.grad, &other.grad, |a, b| a + b),
            second: zip_with(&self.second, &other.second, |a, b| a + b),
            pairs: self.pairs.clone(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            value: self.value - other.value,
            grad: zip_with(&self.grad, &other.grad, |a, b| a - b),
            second: zip_with(&self.second, &other.second, |a, b| a - b),
            pairs: self.pairs.clone(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let (f, g) = (self.value, other.value);
        let grad = self
            .grad
            .iter()
            .zip(&other.grad)
            .map(|(&fi, &gi)| fi * g + f * gi)
            .collect();
        let second = self
            .pairs
            .iter()
            .enumerate()
            .map(|(k, &(i, j))| {
                self.second[k] * g
                    + self.grad[i] * other.grad[j]
                    + self.grad[j] * other.grad[i]
                    + f * other.second[k]
            })
            .collect();
        Self {
            value: f * g,
            grad,
            second,
            pairs: self.pairs.clone(),
        }
    }

    /// Multiplies every component by a jet-independent scalar.
    pub fn scale(&self, c: S) -> Self {
        Self {
            value: self.value * c,
            grad: self.grad.iter().map(|&g| g * c).collect(),
            second: self.second.iter().map(|&s| s * c).collect(),
            pairs: self.pairs.clone(),
        }
    }

    pub fn add_scalar(&self, c: S) -> Self {
        Self {
            value: self.value + c,
            ..self.clone()
        }
    }

    /// Plain-`f64` copy of the jet.
    pub fn values(&self) -> Jet2<f64> {
        Jet2 {
            value: self.value.value(),
            grad: self.grad.iter().map(Scalar::value).collect(),
            second: self.second.iter().map(Scalar::value).collect(),
            pairs: self.pairs.clone(),
        }
    }
}

fn zip_with<S: Copy>(a: &[S], b: &[S], f: impl Fn(S, S) -> S) -> Vec<S> {
    a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect()
}
