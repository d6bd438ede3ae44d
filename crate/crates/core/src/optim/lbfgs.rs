use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LbfgsConfig {
    pub memory: usize,
    pub c1: f64,
    pub c2: f64,
    /// Evaluations allowed per line search (bracketing plus zoom).
    pub max_line_search: usize,
    /// Stop when the largest gradient entry falls below this.
    pub grad_tol: f64,
    /// Stop when `|f_k - f_{k+1}| <= tol * max(|f_k|, |f_{k+1}|)`.
    pub rel_loss_tol: f64,
    pub max_iters: usize,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        Self {
            memory: 50,
            c1: 1e-4,
            c2: 0.9,
            max_line_search: 25,
            grad_tol: 1e-9,
            rel_loss_tol: 1e-12,
            max_iters: 3000,
        }
    }
}

impl LbfgsConfig {
    fn validate(&self) -> Result<()> {
        if !(0.0 < self.c1 && self.c1 < self.c2 && self.c2 < 1.0) {
            return Err(Error::contract(format!(
                "line search needs 0 < c1 < c2 < 1, got c1={} c2={}",
                self.c1, self.c2
            )));
        }
        if self.max_line_search == 0 {
            return Err(Error::contract("max_line_search must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GradientConverged,
    LossConverged,
    IterationCap,
    LineSearchFailed,
    /// The step callback asked to stop.
    Stopped,
}

/// Curvature pairs of the limited-memory inverse Hessian.
#[derive(Debug, Clone)]
pub struct LbfgsState {
    pub memory: usize,
    s: VecDeque<Vec<f64>>,
    y: VecDeque<Vec<f64>>,
    rho: VecDeque<f64>,
    pub rejected: usize,
}

const CURVATURE_MIN: f64 = 1e-10;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

impl LbfgsState {
    pub fn new(memory: usize) -> Self {
        Self {
            memory,
            s: VecDeque::with_capacity(memory),
            y: VecDeque::with_capacity(memory),
            rho: VecDeque::with_capacity(memory),
            rejected: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn clear(&mut self) {
        self.s.clear();
        self.y.clear();
        self.rho.clear();
    }

    /// Stores a pair if it satisfies the curvature condition.
    pub fn push(&mut self, s: Vec<f64>, y: Vec<f64>) -> bool {
        let sy = dot(&s, &y);
        if !(sy > CURVATURE_MIN) {
            self.rejected += 1;
            return false;
        }
        if self.memory == 0 {
            return true;
        }
        if self.s.len() == self.memory {
            self.s.pop_front();
            self.y.pop_front();
            self.rho.pop_front();
        }
        self.s.push_back(s);
        self.y.push_back(y);
        self.rho.push_back(1.0 / sy);
        true
    }

    /// Two-loop recursion: `-H g`.
    pub fn direction(&self, g: &[f64]) -> Vec<f64> {
        let mut q = g.to_vec();
        let k = self.s.len();
        let mut alpha = vec![0.0; k];
        for i in (0..k).rev() {
            alpha[i] = self.rho[i] * dot(&self.s[i], &q);
            for (qj, yj) in q.iter_mut().zip(&self.y[i]) {
                *qj -= alpha[i] * yj;
            }
        }
        if let (Some(s), Some(y)) = (self.s.back(), self.y.back()) {
            let scale = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|v| *v *= scale);
        }
        for i in 0..k {
            let beta = self.rho[i] * dot(&self.y[i], &q);
            for (qj, sj) in q.iter_mut().zip(&self.s[i]) {
                *qj += (alpha[i] - beta) * sj;
            }
        }
        q.iter_mut().for_each(|v| *v = -*v);
        q
    }
}

/// Reported after every accepted step.
pub struct StepInfo<'a, T> {
    pub iter: usize,
    pub loss: f64,
    pub step: f64,
    pub params: &'a [f64],
    pub grad: &'a [f64],
    pub aux: &'a T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LbfgsReport {
    pub iterations: usize,
    pub evaluations: usize,
    pub loss: f64,
    pub grad_max: f64,
    pub termination: Termination,
    pub rejected_pairs: usize,
}

struct Point<T> {
    alpha: f64,
    f: f64,
    d: f64,
    g: Vec<f64>,
    aux: Option<T>,
}

struct LineSearch<'c, F> {
    f: F,
    c1: f64,
    c2: f64,
    budget: usize,
    evaluations: &'c mut usize,
}

impl<F, T> LineSearch<'_, F>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>, T)>,
{
    fn eval(&mut self, x: &[f64], p: &[f64], alpha: f64) -> Result<Point<T>> {
        let trial: Vec<f64> = x.iter().zip(p).map(|(a, b)| a + alpha * b).collect();
        *self.evaluations += 1;
        self.budget -= 1;
        match (self.f)(&trial) {
            Ok((f, g, aux)) if f.is_finite() && g.iter().all(|v| v.is_finite()) => Ok(Point {
                alpha,
                f,
                d: dot(&g, p),
                g,
                aux: Some(aux),
            }),
            // Overflow at a long trial step: treat as a failed sufficient
            // decrease so the bracket shrinks.
            Ok(_) | Err(Error::Numeric { .. }) => Ok(Point {
                alpha,
                f: f64::INFINITY,
                d: f64::NAN,
                g: Vec::new(),
                aux: None,
            }),
            Err(e) => Err(e),
        }
    }

    fn armijo_fails(&self, f0: f64, d0: f64, pt: &Point<T>) -> bool {
        !(pt.f <= f0 + self.c1 * pt.alpha * d0)
    }

    fn curvature_holds(&self, d0: f64, pt: &Point<T>) -> bool {
        pt.d.abs() <= -self.c2 * d0
    }

    fn search(
        &mut self,
        x: &[f64],
        p: &[f64],
        f0: f64,
        d0: f64,
        alpha0: f64,
    ) -> Result<Option<Point<T>>> {
        let mut prev = Point {
            alpha: 0.0,
            f: f0,
            d: d0,
            g: Vec::new(),
            aux: None,
        };
        let mut alpha = alpha0;
        let mut first = true;
        while self.budget > 0 {
            let cur = self.eval(x, p, alpha)?;
            if self.armijo_fails(f0, d0, &cur) || (!first && cur.f >= prev.f) {
                return self.zoom(x, p, f0, d0, prev, cur);
            }
            if self.curvature_holds(d0, &cur) {
                return Ok(Some(cur));
            }
            if cur.d >= 0.0 {
                return self.zoom(x, p, f0, d0, cur, prev);
            }
            first = false;
            alpha *= 2.0;
            prev = cur;
        }
        Ok(None)
    }

    fn zoom(
        &mut self,
        x: &[f64],
        p: &[f64],
        f0: f64,
        d0: f64,
        mut lo: Point<T>,
        mut hi: Point<T>,
    ) -> Result<Option<Point<T>>> {
        while self.budget > 0 {
            let width = (hi.alpha - lo.alpha).abs();
            if width <= 1e-16 * lo.alpha.abs().max(hi.alpha.abs()) {
                break;
            }
            let alpha = interpolate(&lo, &hi);
            let cur = self.eval(x, p, alpha)?;
            if self.armijo_fails(f0, d0, &cur) || cur.f >= lo.f {
                hi = cur;
            } else {
                if self.curvature_holds(d0, &cur) {
                    return Ok(Some(cur));
                }
                if cur.d * (hi.alpha - lo.alpha) >= 0.0 {
                    hi = lo;
                }
                lo = cur;
            }
        }
        Ok(None)
    }
}

/// Cubic interpolation between two bracket ends, safeguarded to the inner
/// 80% of the bracket; bisection when derivative data is missing.
fn interpolate<T>(a: &Point<T>, b: &Point<T>) -> f64 {
    let (lo, hi) = if a.alpha < b.alpha { (a, b) } else { (b, a) };
    let width = hi.alpha - lo.alpha;
    let mid = 0.5 * (lo.alpha + hi.alpha);
    if !(lo.f.is_finite() && hi.f.is_finite() && lo.d.is_finite() && hi.d.is_finite()) {
        return mid;
    }
    let d1 = lo.d + hi.d - 3.0 * (lo.f - hi.f) / (lo.alpha - hi.alpha);
    let disc = d1 * d1 - lo.d * hi.d;
    if disc < 0.0 {
        return mid;
    }
    let d2 = disc.sqrt();
    let t = hi.alpha - width * (hi.d + d2 - d1) / (hi.d - lo.d + 2.0 * d2);
    let (min, max) = (lo.alpha + 0.1 * width, hi.alpha - 0.1 * width);
    if t.is_finite() {
        t.clamp(min, max)
    } else {
        mid
    }
}

/// Minimizes `f` starting from `x`, which holds the final iterate on return.
///
/// `f` returns the loss, its gradient, and an auxiliary value passed to
/// `on_step` with every accepted iterate. Returning `false` from `on_step`
/// stops the run.
pub fn lbfgs_minimize<T, F, C>(
    mut f: F,
    x: &mut [f64],
    config: &LbfgsConfig,
    mut on_step: C,
) -> Result<LbfgsReport>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>, T)>,
    C: FnMut(&StepInfo<'_, T>) -> bool,
{
    config.validate()?;
    let mut state = LbfgsState::new(config.memory);
    let mut evaluations = 1;
    let (mut loss, mut grad, _) = f(x)?;
    if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::numeric(
            "lbfgs",
            format!("initial loss {loss} or gradient is not finite"),
        ));
    }
    let report = |iterations, evaluations, loss, grad: &[f64], termination, rejected| LbfgsReport {
        iterations,
        evaluations,
        loss,
        grad_max: max_abs(grad),
        termination,
        rejected_pairs: rejected,
    };
    if max_abs(&grad) <= config.grad_tol {
        return Ok(report(
            0,
            evaluations,
            loss,
            &grad,
            Termination::GradientConverged,
            0,
        ));
    }
    for iter in 1..=config.max_iters {
        let mut p = state.direction(&grad);
        let mut d0 = dot(&p, &grad);
        if !(d0 < 0.0) {
            state.clear();
            p = grad.iter().map(|g| -g).collect();
            d0 = dot(&p, &grad);
        }
        let alpha0 = if iter == 1 && state.is_empty() {
            (1.0 / grad.iter().map(|g| g.abs()).sum::<f64>()).min(1.0)
        } else {
            1.0
        };
        let mut ls = LineSearch {
            f: &mut f,
            c1: config.c1,
            c2: config.c2,
            budget: config.max_line_search,
            evaluations: &mut evaluations,
        };
        let Some(pt) = ls.search(x, &p, loss, d0, alpha0)? else {
            return Ok(report(
                iter - 1,
                evaluations,
                loss,
                &grad,
                Termination::LineSearchFailed,
                state.rejected,
            ));
        };
        let s: Vec<f64> = p.iter().map(|v| pt.alpha * v).collect();
        let y: Vec<f64> = pt.g.iter().zip(&grad).map(|(a, b)| a - b).collect();
        for (xi, si) in x.iter_mut().zip(&s) {
            *xi += si;
        }
        state.push(s, y);
        let previous = loss;
        loss = pt.f;
        grad = pt.g;
        let aux = pt.aux.expect("accepted points carry aux");
        let go_on = on_step(&StepInfo {
            iter,
            loss,
            step: pt.alpha,
            params: x,
            grad: &grad,
            aux: &aux,
        });
        let termination = if !go_on {
            Some(Termination::Stopped)
        } else if max_abs(&grad) <= config.grad_tol {
            Some(Termination::GradientConverged)
        } else if (previous - loss).abs() <= config.rel_loss_tol * previous.abs().max(loss.abs()) {
            Some(Termination::LossConverged)
        } else {
            None
        };
        if let Some(t) = termination {
            return Ok(report(iter, evaluations, loss, &grad, t, state.rejected));
        }
    }
    Ok(report(
        config.max_iters,
        evaluations,
        loss,
        &grad,
        Termination::IterationCap,
        state.rejected,
    ))
}
