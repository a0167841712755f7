//! Summation of series written in the identity language.
//!
//! Terminating sums are exact in the rational regimes. Infinite sums run in a
//! float regime until an empirical ratio test bounds the tail, and every float
//! result is recomputed with 32 more bits and required to agree to `p - 8`
//! bits before it is returned.

mod eval;
mod hyper;

use std::collections::HashMap;

use thiserror::Error;

use crate::dsl::{Expr, Formula, SeriesSpec, Upper};
use crate::numeric::{HighPrecision, NumError, Rational, Regime, Scalar};
use eval::{Bound, Evaluator};

pub use hyper::{basic_hypergeometric_eval, hypergeometric_eval, HyperMode};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeriesError {
    #[error(transparent)]
    Num(#[from] NumError),
    #[error("unbound parameter `{0}`")]
    Unbound(String),
    #[error("{0}")]
    NotExact(String),
    #[error("pole{}: {detail}", .index.map(|k| format!(" at term {k}")).unwrap_or_default())]
    Pole { index: Option<u64>, detail: String },
    #[error("tail is not geometric within {terms} terms")]
    NonGeometricTail { terms: u64 },
    #[error("evaluations at {bits} and {} bits disagree", .bits + 32)]
    PrecisionLoss { bits: u32 },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SumOptions {
    /// Give up on an infinite sum after this many terms.
    pub term_budget: u64,
    /// Extend running products and inner sums instead of recomputing them.
    pub caching: bool,
}

impl Default for SumOptions {
    fn default() -> Self {
        SumOptions {
            term_budget: 1_000_000,
            caching: true,
        }
    }
}

/// Bound on the discarded remainder of an infinite sum: `|t_K| rho/(1-rho)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TailBound {
    pub start: u64,
    pub ratio: HighPrecision,
    pub bound: HighPrecision,
}

impl TailBound {
    fn new(start: u64, log_ratio: f64, log_bound: f64, bits: u32) -> Self {
        TailBound {
            start,
            ratio: HighPrecision::exp2(log_ratio, 64.min(bits)),
            bound: HighPrecision::exp2(log_bound, 64.min(bits)),
        }
    }
}

/// A value together with how it was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub value: Scalar,
    pub terms: u64,
    pub tail: Option<TailBound>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Binding {
    Value(Rational),
    /// Defined in terms of earlier bindings, evaluated in the target regime so
    /// that jets propagate through it.
    Derived(Expr),
    Scalar(Scalar),
}

/// Parameter values for an evaluation, in definition order, with at most one
/// parameter marked as the jet variable.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Bindings {
    entries: Vec<(String, Binding)>,
    active: Option<String>,
}

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, name: &str, value: Rational) -> &mut Self {
        self.put(name, Binding::Value(value))
    }

    pub fn derive(&mut self, name: &str, expr: Expr) -> &mut Self {
        self.put(name, Binding::Derived(expr))
    }

    pub fn set_scalar(&mut self, name: &str, value: Scalar) -> &mut Self {
        self.put(name, Binding::Scalar(value))
    }

    fn put(&mut self, name: &str, b: Binding) -> &mut Self {
        if let Some(slot) = self.entries.iter_mut().find(|(n, _)| n == name) {
            slot.1 = b;
        } else {
            self.entries.push((name.to_string(), b));
        }
        self
    }

    /// Mark the parameter that jet regimes differentiate with respect to.
    pub fn activate(&mut self, name: &str) -> &mut Self {
        self.active = Some(name.to_string());
        self
    }

    pub fn active(&self) -> Option<&str> {
        self.active.as_deref()
    }

    pub fn get(&self, name: &str) -> Option<&Binding> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, b)| b)
    }

    pub fn value(&self, name: &str) -> Option<&Rational> {
        match self.get(name) {
            Some(Binding::Value(r)) => Some(r),
            _ => None,
        }
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.get(name).is_some()
    }

    fn evaluator(&self, regime: Regime, opts: SumOptions) -> Result<Evaluator, SeriesError> {
        let mut ev = Evaluator::new(regime, HashMap::new(), opts);
        for (name, b) in &self.entries {
            let is_active = regime.is_jet() && self.active.as_deref() == Some(name.as_str());
            let bound = match b {
                Binding::Value(r) => Bound {
                    exact: if is_active { None } else { Some(r.clone()) },
                    value: regime.lift(r, is_active),
                },
                Binding::Derived(e) => {
                    if is_active {
                        return Err(SeriesError::Invalid(format!(
                            "derived parameter `{name}` cannot be the jet variable"
                        )));
                    }
                    Bound {
                        exact: ev.exact(e).ok(),
                        value: ev.eval(e)?,
                    }
                }
                Binding::Scalar(s) => {
                    if s.regime().name() != regime.name() {
                        return Err(NumError::RegimeMismatch(s.regime().name(), regime.name()).into());
                    }
                    let value = match (s, regime.bits()) {
                        (Scalar::Float(x), Some(bits)) => Scalar::Float(x.with_precision(bits)),
                        _ => s.clone(),
                    };
                    Bound {
                        exact: s.as_exact().cloned(),
                        value,
                    }
                }
            };
            ev.bind(name, bound);
        }
        Ok(ev)
    }
}

/// The `k`-th summand.
pub fn evaluate_term(spec: &SeriesSpec, k: u64, bindings: &Bindings, regime: Regime) -> Result<Scalar, SeriesError> {
    let mut ev = bindings.evaluator(regime, SumOptions::default())?;
    ev.term(spec, k)
}

/// Exact sum of a terminating series, terms added in increasing order.
pub fn sum_terminating(spec: &SeriesSpec, bindings: &Bindings, regime: Regime) -> Result<Scalar, SeriesError> {
    sum_terminating_with(spec, bindings, regime, SumOptions::default(), false)
}

/// Like [`sum_terminating`] with explicit options and direction.
pub fn sum_terminating_with(
    spec: &SeriesSpec,
    bindings: &Bindings,
    regime: Regime,
    opts: SumOptions,
    backward: bool,
) -> Result<Scalar, SeriesError> {
    let mut ev = bindings.evaluator(regime, opts)?;
    let n = ev.finite_terms(spec)?;
    if backward {
        ev.sum_range_backward(spec, spec.lower, spec.lower + n)
    } else {
        ev.sum_range(spec, spec.lower, spec.lower + n)
    }
}

/// The first `terms` terms of a series, whatever its bound.
pub fn sum_partial(spec: &SeriesSpec, bindings: &Bindings, regime: Regime, terms: u64) -> Result<Scalar, SeriesError> {
    let mut ev = bindings.evaluator(regime, SumOptions::default())?;
    ev.sum_range(spec, spec.lower, spec.lower + terms)
}

/// An infinite series at `regime` precision, with its tail bound.
pub fn sum_infinite(spec: &SeriesSpec, bindings: &Bindings, regime: Regime, opts: SumOptions) -> Result<Evaluation, SeriesError> {
    if !spec.is_infinite() {
        return Err(SeriesError::Invalid("series is not infinite".into()));
    }
    evaluate(&Formula::Series(spec.clone()), bindings, regime, opts)
}

fn evaluate_once(formula: &Formula, bindings: &Bindings, regime: Regime, opts: SumOptions) -> Result<Evaluation, SeriesError> {
    let mut ev = bindings.evaluator(regime, opts)?;
    match formula {
        Formula::Closed(e) => Ok(Evaluation {
            value: ev.eval(e)?,
            terms: 0,
            tail: None,
        }),
        Formula::Series(s) if s.upper == Upper::Inf => {
            let (value, tail, terms) = ev.sum_infinite(s)?;
            Ok(Evaluation {
                value,
                terms,
                tail: Some(tail),
            })
        }
        Formula::Series(s) => {
            let n = ev.finite_terms(s)?;
            Ok(Evaluation {
                value: ev.sum_range(s, s.lower, s.lower + n)?,
                terms: n,
                tail: None,
            })
        }
    }
}

/// Evaluate a closed form or series. Float regimes are evaluated twice, at
/// `p` and `p + 32` bits, and must agree to `p - 8` bits; the more precise
/// value is returned.
pub fn evaluate(formula: &Formula, bindings: &Bindings, regime: Regime, opts: SumOptions) -> Result<Evaluation, SeriesError> {
    let Some(bits) = regime.bits() else {
        return evaluate_once(formula, bindings, regime, opts);
    };
    let low = evaluate_once(formula, bindings, regime, opts)?;
    let high = evaluate_once(formula, bindings, regime.with_bits(bits + 32), opts)?;
    let lo = low.value.components_float(bits);
    let hi = high.value.components_float(bits + 32);
    if lo.iter().zip(&hi).any(|(a, b)| !a.agree_to(b, bits - 8)) {
        return Err(SeriesError::PrecisionLoss { bits });
    }
    Ok(Evaluation {
        value: high.value,
        terms: low.terms,
        tail: low.tail,
    })
}

/// Evaluate a closed-form expression.
pub fn evaluate_closed(expr: &Expr, bindings: &Bindings, regime: Regime) -> Result<Scalar, SeriesError> {
    Ok(evaluate(&Formula::Closed(expr.clone()), bindings, regime, SumOptions::default())?.value)
}
