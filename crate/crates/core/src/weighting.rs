//! Loss aggregation: fixed multipliers, uncertainty weighting, and
//! uncertainty weighting with an upper bound on every weight.
//!
//! Uncertainties are parametrized as `sigma^2 = exp(s)` with `s` trainable,
//! which keeps them positive without constraints.

use serde::{Deserialize, Serialize};

use crate::autodiff::Scalar;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// `sum lambda_m L_m` with constant multipliers.
    Fixed,
    /// `sum L_m / (2 sigma_m^2) + 1/2 log sigma_m^2`.
    Aw,
    /// `sum L_m / (sigma_m^2 + 1/gamma) + log(sigma_m^2 + 1/gamma)`.
    Iaw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Term {
    Ic,
    Bc,
    R,
}

impl Term {
    pub const ALL: [Term; 3] = [Term::Ic, Term::Bc, Term::R];

    pub fn name(self) -> &'static str {
        match self {
            Term::Ic => "ic",
            Term::Bc => "bc",
            Term::R => "r",
        }
    }
}

/// Per-term mean-of-squares losses; absent terms are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown<S = f64> {
    pub ic: Option<S>,
    pub bc: Option<S>,
    pub r: Option<S>,
}

impl<S: Copy> LossBreakdown<S> {
    pub fn get(&self, term: Term) -> Option<S> {
        match term {
            Term::Ic => self.ic,
            Term::Bc => self.bc,
            Term::R => self.r,
        }
    }

    /// Present terms in `ic, bc, r` order.
    pub fn present(&self) -> Vec<(Term, S)> {
        Term::ALL
            .iter()
            .filter_map(|&t| self.get(t).map(|v| (t, v)))
            .collect()
    }

    pub fn terms(&self) -> Vec<Term> {
        self.present().into_iter().map(|(t, _)| t).collect()
    }
}

impl<S: Scalar> LossBreakdown<S> {
    pub fn values(&self) -> LossBreakdown<f64> {
        LossBreakdown {
            ic: self.ic.map(|v| v.value()),
            bc: self.bc.map(|v| v.value()),
            r: self.r.map(|v| v.value()),
        }
    }
}

/// Weighting scheme plus its trainable raw uncertainties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightState {
    pub scheme: Scheme,
    /// Weight cap; only meaningful for [`Scheme::Iaw`].
    pub gamma: f64,
    pub terms: Vec<Term>,
    /// `s_m` with `sigma_m^2 = exp(s_m)`, one per term (adaptive schemes).
    pub raw: Vec<f64>,
    /// Multipliers for [`Scheme::Fixed`].
    pub fixed_lambdas: Vec<f64>,
}

impl WeightState {
    pub fn fixed(terms: &[Term], lambdas: &[f64]) -> Result<Self> {
        if lambdas.len() != terms.len() {
            return Err(Error::contract(
                "one fixed multiplier per loss term is required",
            ));
        }
        Ok(Self {
            scheme: Scheme::Fixed,
            gamma: f64::INFINITY,
            terms: terms.to_vec(),
            raw: Vec::new(),
            fixed_lambdas: lambdas.to_vec(),
        })
    }

    /// Uncertainty weighting initialized so every weight starts at 1.
    pub fn aw(terms: &[Term]) -> Self {
        Self {
            scheme: Scheme::Aw,
            gamma: f64::INFINITY,
            terms: terms.to_vec(),
            raw: vec![0.5f64.ln(); terms.len()],
            fixed_lambdas: Vec::new(),
        }
    }

    /// Capped uncertainty weighting. Weights start at 1 when `gamma > 1`;
    /// otherwise `sigma^2 = 1/gamma` and the initial weight is `gamma / 2`.
    pub fn iaw(terms: &[Term], gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        let s0 = if gamma > 1.0 {
            (1.0 - 1.0 / gamma).ln()
        } else {
            (1.0 / gamma).ln()
        };
        Ok(Self {
            scheme: Scheme::Iaw,
            gamma,
            terms: terms.to_vec(),
            raw: vec![s0; terms.len()],
            fixed_lambdas: Vec::new(),
        })
    }

    pub fn build(scheme: Scheme, terms: &[Term], gamma: f64) -> Result<Self> {
        match scheme {
            Scheme::Fixed => Self::fixed(terms, &vec![1.0; terms.len()]),
            Scheme::Aw => Ok(Self::aw(terms)),
            Scheme::Iaw => Self::iaw(terms, gamma),
        }
    }

    pub fn is_adaptive(&self) -> bool {
        self.scheme != Scheme::Fixed
    }

    pub fn sigma2(&self) -> Vec<f64> {
        self.raw.iter().map(|s| s.exp()).collect()
    }

    pub fn lambdas(&self) -> Result<Vec<f64>> {
        lambdas(self.scheme, self.gamma, &self.raw, &self.fixed_lambdas)
    }

    pub fn total_loss<S: Scalar>(&self, losses: &LossBreakdown<S>, raw: &[S]) -> Result<S> {
        total_loss(
            self.scheme,
            self.gamma,
            &self.terms,
            losses,
            raw,
            &self.fixed_lambdas,
        )
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 {
        Ok(())
    } else {
        Err(Error::contract(format!(
            "weight cap must be positive, got {gamma}"
        )))
    }
}

/// Effective multipliers `lambda_m` for raw uncertainties `raw`.
pub fn lambdas(scheme: Scheme, gamma: f64, raw: &[f64], fixed: &[f64]) -> Result<Vec<f64>> {
    match scheme {
        Scheme::Fixed => Ok(fixed.to_vec()),
        Scheme::Aw => Ok(raw.iter().map(|s| 1.0 / (2.0 * s.exp())).collect()),
        Scheme::Iaw => {
            check_gamma(gamma)?;
            Ok(raw.iter().map(|s| 1.0 / (s.exp() + 1.0 / gamma)).collect())
        }
    }
}

/// Aggregates the present loss terms. Differentiable in both the losses and
/// the raw uncertainties when `S` is a tape variable.
pub fn total_loss<S: Scalar>(
    scheme: Scheme,
    gamma: f64,
    terms: &[Term],
    losses: &LossBreakdown<S>,
    raw: &[S],
    fixed: &[f64],
) -> Result<S> {
    let present = losses.present();
    if present.iter().map(|(t, _)| *t).ne(terms.iter().copied()) {
        return Err(Error::contract(format!(
            "loss terms {:?} do not match weighting terms {:?}",
            present.iter().map(|(t, _)| t.name()).collect::<Vec<_>>(),
            terms.iter().map(|t| t.name()).collect::<Vec<_>>()
        )));
    }
    for (t, l) in &present {
        if !l.value().is_finite() {
            return Err(Error::numeric(
                "loss",
                format!("L_{} = {}", t.name(), l.value()),
            ));
        }
    }
    let per_term: Vec<S> = match scheme {
        Scheme::Fixed => {
            if fixed.len() != present.len() {
                return Err(Error::contract(
                    "one fixed multiplier per loss term is required",
                ));
            }
            present
                .iter()
                .zip(fixed)
                .map(|((_, l), &w)| *l * w)
                .collect()
        }
        Scheme::Aw | Scheme::Iaw => {
            if raw.len() != present.len() {
                return Err(Error::contract(
                    "one raw uncertainty per loss term is required",
                ));
            }
            present
                .iter()
                .zip(raw)
                .map(|((_, l), &s)| match scheme {
                    Scheme::Aw => *l / (s.exp() * 2.0) + s * 0.5,
                    _ => {
                        let denom = s.exp() + 1.0 / gamma;
                        *l / denom + denom.ln()
                    }
                })
                .collect()
        }
    };
    if scheme == Scheme::Iaw {
        check_gamma(gamma)?;
    }
    let mut iter = per_term.into_iter();
    let first = iter
        .next()
        .ok_or_else(|| Error::contract("no loss terms to aggregate"))?;
    Ok(iter.fold(first, |acc, v| acc + v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tape;
    use proptest::prelude::*;

    const ALL: [Term; 3] = Term::ALL;

    fn losses(v: [f64; 3]) -> LossBreakdown {
        LossBreakdown {
            ic: Some(v[0]),
            bc: Some(v[1]),
            r: Some(v[2]),
        }
    }

    #[test]
    fn iaw_initial_weights_are_one() {
        let w = WeightState::iaw(&ALL, 100.0).unwrap();
        for (l, s2) in w.lambdas().unwrap().iter().zip(w.sigma2()) {
            assert!((l - 1.0).abs() < 1e-14);
            assert!((s2 - 0.99).abs() < 1e-14);
        }
    }

    #[test]
    fn iaw_small_cap_starts_at_half_cap() {
        let w = WeightState::iaw(&ALL, 0.5).unwrap();
        for l in w.lambdas().unwrap() {
            assert!((l - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn iaw_cap_attained_in_the_limit() {
        let l = lambdas(Scheme::Iaw, 100.0, &[-60.0], &[]).unwrap()[0];
        assert!((l - 100.0).abs() < 1e-10);
    }

    #[test]
    fn aw_unit_sigma_is_half() {
        assert_eq!(lambdas(Scheme::Aw, 0.0, &[0.0], &[]).unwrap(), vec![0.5]);
    }

    #[test]
    fn nonpositive_cap_rejected() {
        assert!(lambdas(Scheme::Iaw, 0.0, &[0.0], &[]).is_err());
        assert!(WeightState::iaw(&ALL, -1.0).is_err());
    }

    #[test]
    fn fixed_and_aw_totals() {
        let fixed = WeightState::fixed(&ALL, &[1.0; 3]).unwrap();
        assert_eq!(
            fixed.total_loss(&losses([1.0, 2.0, 3.0]), &[]).unwrap(),
            6.0
        );
        let total = total_loss(
            Scheme::Aw,
            0.0,
            &ALL,
            &losses([1.0, 2.0, 3.0]),
            &[0.0; 3],
            &[],
        )
        .unwrap();
        assert_eq!(total, 3.0);
    }

    #[test]
    fn nan_loss_is_numeric_error() {
        let w = WeightState::fixed(&ALL, &[1.0; 3]).unwrap();
        let err = w
            .total_loss(&losses([1.0, f64::NAN, 0.0]), &[])
            .unwrap_err();
        assert!(matches!(err, Error::Numeric { .. }));
    }

    #[test]
    fn missing_terms_follow_state() {
        let terms = [Term::Bc, Term::R];
        let w = WeightState::iaw(&terms, 100.0).unwrap();
        let l = LossBreakdown {
            ic: None,
            bc: Some(2.0),
            r: Some(3.0),
        };
        let t = w.total_loss(&l, &w.raw).unwrap();
        // sigma^2 + 1/gamma = 1 for both terms: 2/1 + 3/1 + 2 log 1
        assert!((t - 5.0).abs() < 1e-12);
        assert!(w.total_loss(&losses([1.0, 2.0, 3.0]), &w.raw).is_err());
    }

    #[test]
    fn regularizer_gradient_positive_in_raw() {
        let tape = Tape::new();
        for s in [-30.0, -3.0, 0.0, 4.0, 30.0] {
            let raw = tape.param(s);
            let zero = tape.constant(0.0);
            let l = LossBreakdown {
                ic: None,
                bc: None,
                r: Some(zero),
            };
            let total = total_loss(Scheme::Iaw, 1e3, &[Term::R], &l, &[raw], &[]).unwrap();
            let g = tape.grad_params(total).unwrap();
            assert!(*g.last().unwrap() > 0.0, "s = {s}");
        }
    }

    proptest! {
        #[test]
        fn iaw_weights_bounded_by_cap(s in -30.0f64..30.0, log_gamma in -3.0f64..12.0) {
            let gamma = 10f64.powf(log_gamma);
            let l = lambdas(Scheme::Iaw, gamma, &[s], &[]).unwrap()[0];
            prop_assert!(l > 0.0 && l <= gamma);
        }

        #[test]
        fn iaw_weight_decreases_with_sigma(s in -20.0f64..20.0, ds in 1e-3f64..5.0) {
            let w = lambdas(Scheme::Iaw, 1e3, &[s, s + ds], &[]).unwrap();
            prop_assert!(w[1] < w[0]);
        }

        #[test]
        fn large_cap_recovers_doubled_aw(
            l in proptest::array::uniform3(0.0f64..100.0),
            s in proptest::array::uniform3(-5.0f64..5.0),
        ) {
            let iaw = total_loss(Scheme::Iaw, 1e12, &ALL, &losses(l), &s, &[]).unwrap();
            let aw = total_loss(Scheme::Aw, 0.0, &ALL, &losses(l), &s, &[]).unwrap();
            prop_assert!((iaw - 2.0 * aw).abs() <= 1e-6 * (2.0 * aw).abs().max(1.0));
        }
    }
}
