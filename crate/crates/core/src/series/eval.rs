use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};

use super::{SeriesError, SumOptions, TailBound};
use crate::dsl::{BinOp, Expr, SeriesSpec, Upper};
use crate::numeric::{HighPrecision, NumError, Rational, Regime, Scalar};
use crate::special::{self, ConstantTag, QBase};

/// A bound name: the exact value when one exists (jet-active parameters have
/// none) and the value in the evaluation regime.
#[derive(Debug, Clone)]
pub(crate) struct Bound {
    pub exact: Option<Rational>,
    pub value: Scalar,
}

/// Running state of a counted atom: the arguments it was computed for, how
/// many steps it covers, and the accumulated value.
struct Partial {
    args: Vec<Scalar>,
    upto: u64,
    value: Scalar,
}

#[derive(Clone, Copy)]
enum Fold {
    Product,
    Sum,
}

pub(crate) struct Evaluator {
    regime: Regime,
    env: HashMap<String, Bound>,
    scopes: Vec<(String, Bound)>,
    cache: HashMap<usize, Partial>,
    opts: SumOptions,
}

fn key(e: &Expr) -> usize {
    e as *const Expr as usize
}

fn pole(e: NumError) -> SeriesError {
    match e {
        NumError::DivisionByZero => SeriesError::Pole {
            index: None,
            detail: "zero denominator".into(),
        },
        NumError::Pole(detail) => SeriesError::Pole { index: None, detail },
        other => SeriesError::Num(other),
    }
}

impl Evaluator {
    pub fn new(regime: Regime, env: HashMap<String, Bound>, opts: SumOptions) -> Self {
        Evaluator {
            regime,
            env,
            scopes: Vec::new(),
            cache: HashMap::new(),
            opts,
        }
    }

    pub fn bind(&mut self, name: &str, b: Bound) {
        self.env.insert(name.to_string(), b);
    }

    fn lookup(&self, name: &str) -> Option<&Bound> {
        self.scopes
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, b)| b)
            .or_else(|| self.env.get(name))
    }

    fn push_index(&mut self, name: &str, k: u64) {
        let exact = Rational::from_integer(BigInt::from(k));
        let value = self.regime.constant(&exact);
        self.scopes.push((
            name.to_string(),
            Bound {
                exact: Some(exact),
                value,
            },
        ));
    }

    fn pop_index(&mut self) {
        self.scopes.pop();
    }

    /// Exact rational value of an integer-valued sub-expression: exponents,
    /// counts, bounds and trigonometric arguments.
    pub fn exact(&self, e: &Expr) -> Result<Rational, SeriesError> {
        match e {
            Expr::Int(v) => Ok(Rational::from_integer(v.clone())),
            Expr::Var(name) => match self.lookup(name) {
                Some(Bound { exact: Some(r), .. }) => Ok(r.clone()),
                Some(_) => Err(SeriesError::NotExact(format!(
                    "`{name}` varies with the jet and cannot appear in an exponent, count or bound"
                ))),
                None => Err(SeriesError::Unbound(name.clone())),
            },
            Expr::Neg(a) => Ok(-self.exact(a)?),
            Expr::Binary(op, a, b) => {
                let (a, b) = (self.exact(a)?, self.exact(b)?);
                match op {
                    BinOp::Add => Ok(a + b),
                    BinOp::Sub => Ok(a - b),
                    BinOp::Mul => Ok(a * b),
                    BinOp::Div if b.is_zero() => Err(SeriesError::Pole {
                        index: None,
                        detail: "zero denominator in an exact sub-expression".into(),
                    }),
                    BinOp::Div => Ok(a / b),
                }
            }
            Expr::Pow(a, b) => {
                let base = self.exact(a)?;
                let n = self.integer(b)?;
                if n < 0 && base.is_zero() {
                    return Err(SeriesError::Pole {
                        index: None,
                        detail: "zero to a negative power".into(),
                    });
                }
                let p = num_traits::pow(base, n.unsigned_abs() as usize);
                Ok(if n < 0 { p.recip() } else { p })
            }
            other => Err(SeriesError::NotExact(format!(
                "`{other}` is not allowed where an exact integer or rational is required"
            ))),
        }
    }

    pub fn integer(&self, e: &Expr) -> Result<i64, SeriesError> {
        let r = self.exact(e)?;
        if !r.is_integer() {
            return Err(SeriesError::Invalid(format!("`{e}` = {r} is not an integer")));
        }
        r.to_integer()
            .to_i64()
            .ok_or_else(|| SeriesError::Invalid(format!("`{e}` is too large")))
    }

    fn count(&self, e: &Expr) -> Result<u64, SeriesError> {
        let n = self.integer(e)?;
        u64::try_from(n).map_err(|_| SeriesError::Invalid(format!("`{e}` = {n} is negative")))
    }

    fn q(&self) -> Result<Scalar, SeriesError> {
        self.lookup("q")
            .map(|b| b.value.clone())
            .ok_or_else(|| SeriesError::Unbound("q".into()))
    }

    fn bits(&self, what: &str) -> Result<u32, SeriesError> {
        self.regime
            .bits()
            .ok_or_else(|| SeriesError::NotExact(format!("{what} needs a floating-point regime")))
    }

    /// Extend a cached running product or sum to `m` steps, or start over when
    /// the arguments changed or `m` went backwards.
    fn counted(
        &mut self,
        node: &Expr,
        args: Vec<Scalar>,
        m: u64,
        fold: Fold,
        mut step: impl FnMut(&mut Self, u64, u64) -> Result<Scalar, SeriesError>,
    ) -> Result<Scalar, SeriesError> {
        let k = key(node);
        if self.opts.caching {
            if let Some(p) = self.cache.get(&k) {
                if p.args == args && p.upto == m {
                    return Ok(p.value.clone());
                }
                if p.args == args && p.upto < m {
                    let (from, prev) = (p.upto, p.value.clone());
                    let part = step(self, from, m)?;
                    let value = match fold {
                        Fold::Product => prev.mul(&part)?,
                        Fold::Sum => prev.add(&part)?,
                    };
                    self.cache.insert(
                        k,
                        Partial {
                            args,
                            upto: m,
                            value: value.clone(),
                        },
                    );
                    return Ok(value);
                }
            }
        }
        let value = step(self, 0, m)?;
        if self.opts.caching {
            self.cache.insert(
                k,
                Partial {
                    args,
                    upto: m,
                    value: value.clone(),
                },
            );
        }
        Ok(value)
    }

    pub fn eval(&mut self, e: &Expr) -> Result<Scalar, SeriesError> {
        let regime = self.regime;
        match e {
            Expr::Int(v) => Ok(regime.constant(&Rational::from_integer(v.clone()))),
            Expr::Var(name) => self
                .lookup(name)
                .map(|b| b.value.clone())
                .ok_or_else(|| SeriesError::Unbound(name.clone())),
            Expr::Neg(a) => Ok(self.eval(a)?.neg()),
            Expr::Binary(op, a, b) => {
                let x = self.eval(a)?;
                let y = self.eval(b)?;
                match op {
                    BinOp::Add => Ok(x.add(&y)?),
                    BinOp::Sub => Ok(x.sub(&y)?),
                    BinOp::Mul => Ok(x.mul(&y)?),
                    BinOp::Div => {
                        if y.value_is_zero() {
                            return Err(SeriesError::Pole {
                                index: None,
                                detail: format!("`{b}` vanishes"),
                            });
                        }
                        x.div(&y).map_err(pole)
                    }
                }
            }
            Expr::Pow(a, b) => {
                let n = self.integer(b)?;
                let base = self.eval(a)?;
                if n < 0 && base.value_is_zero() {
                    return Err(SeriesError::Pole {
                        index: None,
                        detail: format!("`{a}` vanishes under a negative power"),
                    });
                }
                base.powi(n).map_err(pole)
            }
            Expr::Pi => {
                let bits = self.bits("pi")?;
                self.constant(e, &ConstantTag::Pi, bits)
            }
            Expr::Sqrt(m) => {
                let root = BigInt::from(*m).sqrt();
                if &root * &root == BigInt::from(*m) {
                    return Ok(regime.constant(&Rational::from_integer(root)));
                }
                let bits = self.bits("an irrational square root")?;
                self.constant(e, &ConstantTag::Sqrt(*m), bits)
            }
            Expr::SinPi(a) | Expr::CosPi(a) => {
                let r = self.exact(a)?;
                let (c, rad) = if matches!(e, Expr::SinPi(_)) {
                    special::sinpi_closed(&r)?
                } else {
                    special::cospi_closed(&r)?
                };
                Ok(special::algebraic_value(&c, rad, regime)?)
            }
            Expr::Poch(x, m) => {
                let xv = self.eval(x)?;
                let m = self.count(m)?;
                self.counted(e, vec![xv.clone()], m, Fold::Product, |_, a, b| {
                    Ok(special::pochhammer_range(&xv, a, b)?)
                })
            }
            Expr::QPoch(x, s, m) => {
                let xv = self.eval(x)?;
                let base = QBase::new(self.q()?, *s);
                let m = self.count(m)?;
                self.counted(e, vec![xv.clone(), base.q.clone()], m, Fold::Product, |_, a, b| {
                    special::q_pochhammer_range(&xv, &base, a, b).map_err(pole)
                })
            }
            Expr::QPochInf(x, s) => {
                self.bits("an infinite q-product")?;
                let xv = self.eval(x)?;
                let base = QBase::new(self.q()?, *s);
                self.counted(e, vec![xv.clone(), base.q.clone()], 0, Fold::Product, |_, _, _| {
                    Ok(special::q_pochhammer_infinite(&xv, &base)?)
                })
            }
            Expr::Fact(m) => {
                let m = self.count(m)?;
                self.counted(e, vec![], m, Fold::Product, |ev, a, b| {
                    let mut acc = BigInt::one();
                    for i in a + 1..=b {
                        acc *= i;
                    }
                    Ok(ev.regime.constant(&Rational::from_integer(acc)))
                })
            }
            Expr::DFactOdd(m) => {
                let m = self.count(m)? + 1;
                self.counted(e, vec![], m, Fold::Product, |ev, a, b| {
                    let mut acc = BigInt::one();
                    for i in a..b {
                        acc *= 2 * i + 1;
                    }
                    Ok(ev.regime.constant(&Rational::from_integer(acc)))
                })
            }
            Expr::QInt(m) => {
                let m = self.count(m)?;
                Ok(special::q_integer(m, &self.q()?)?)
            }
            Expr::Harm(l, m) => {
                let m = self.count(m)?;
                let zero = regime.integer(0);
                let l = *l;
                self.counted(e, vec![], m, Fold::Sum, |_, a, b| {
                    special::harmonic_range(l, &zero, a, b).map_err(pole)
                })
            }
            Expr::HarmX(l, m, x) => {
                let m = self.count(m)?;
                let xv = self.eval(x)?;
                let l = *l;
                self.counted(e, vec![xv.clone()], m, Fold::Sum, |_, a, b| {
                    special::harmonic_range(l, &xv, a, b).map_err(pole)
                })
            }
            Expr::QSum(shape, Upper::Finite(m)) => {
                let m = self.count(m)?;
                let q = self.q()?;
                let shape = *shape;
                self.counted(e, vec![q.clone()], m, Fold::Sum, |_, a, b| {
                    special::q_partial_sum_range(shape, &q, a, b).map_err(pole)
                })
            }
            Expr::QSum(shape, Upper::Inf) => {
                self.bits("an infinite q-sum")?;
                let q = self.q()?;
                let shape = *shape;
                self.counted(e, vec![q.clone()], 0, Fold::Sum, |_, _, _| {
                    special::q_sum_infinite(shape, &q).map_err(pole)
                })
            }
            Expr::Sum(spec) => self.inner_sum(e, spec),
        }
    }

    fn constant(&mut self, node: &Expr, tag: &ConstantTag, bits: u32) -> Result<Scalar, SeriesError> {
        let regime = self.regime;
        self.counted(node, vec![], 0, Fold::Product, |_, _, _| {
            let v: HighPrecision = special::constant(tag, bits)?;
            Ok(regime.lift_float(&v)?)
        })
    }

    fn inner_sum(&mut self, node: &Expr, spec: &SeriesSpec) -> Result<Scalar, SeriesError> {
        let mut free = spec.body.free_vars();
        free.remove(&spec.index);
        let independent = !self.scopes.iter().any(|(n, _)| free.contains(n));
        match &spec.upper {
            Upper::Inf => {
                self.bits("an infinite inner sum")?;
                if independent {
                    let spec = spec.clone();
                    self.counted(node, vec![], 0, Fold::Sum, move |ev, _, _| {
                        Ok(ev.sum_infinite(&spec)?.0)
                    })
                } else {
                    Ok(self.sum_infinite(spec)?.0)
                }
            }
            Upper::Finite(hi) => {
                let hi = self.integer(hi)?;
                let terms = if hi < spec.lower as i64 {
                    0
                } else {
                    (hi - spec.lower as i64 + 1) as u64
                };
                let lower = spec.lower;
                if independent {
                    let spec = spec.clone();
                    self.counted(node, vec![], terms, Fold::Sum, move |ev, a, b| {
                        ev.sum_range(&spec, lower + a, lower + b)
                    })
                } else {
                    self.sum_range(spec, lower, lower + terms)
                }
            }
        }
    }

    /// Term `k` of a series.
    pub fn term(&mut self, spec: &SeriesSpec, k: u64) -> Result<Scalar, SeriesError> {
        self.push_index(&spec.index, k);
        let v = self.eval(&spec.body);
        self.pop_index();
        v.map_err(|e| match e {
            SeriesError::Pole { index: None, detail } => SeriesError::Pole {
                index: Some(k),
                detail,
            },
            other => other,
        })
    }

    /// Sum of terms `from..to` (exclusive) in increasing order.
    pub fn sum_range(&mut self, spec: &SeriesSpec, from: u64, to: u64) -> Result<Scalar, SeriesError> {
        let mut acc = self.regime.integer(0);
        for k in from..to {
            acc = acc.add(&self.term(spec, k)?)?;
        }
        Ok(acc)
    }

    /// Sum of terms `from..to` (exclusive) from the top index down.
    pub fn sum_range_backward(
        &mut self,
        spec: &SeriesSpec,
        from: u64,
        to: u64,
    ) -> Result<Scalar, SeriesError> {
        let mut acc = self.regime.integer(0);
        for k in (from..to).rev() {
            acc = acc.add(&self.term(spec, k)?)?;
        }
        Ok(acc)
    }

    /// Number of terms in a finite series, from its bound.
    pub fn finite_terms(&self, spec: &SeriesSpec) -> Result<u64, SeriesError> {
        match &spec.upper {
            Upper::Inf => Err(SeriesError::Invalid("series is infinite".into())),
            Upper::Finite(hi) => {
                let hi = self.integer(hi)?;
                Ok(if hi < spec.lower as i64 {
                    0
                } else {
                    (hi - spec.lower as i64 + 1) as u64
                })
            }
        }
    }

    /// Sum until the tail is provably (under the geometric assumption) below
    /// `2^(-bits-4)`.
    pub fn sum_infinite(&mut self, spec: &SeriesSpec) -> Result<(Scalar, TailBound, u64), SeriesError> {
        const WARMUP: u64 = 32;
        const WINDOW: usize = 16;
        let bits = self.bits("an infinite series")?;
        let rho_max = (63.0f64 / 64.0).log2();
        let target = -(bits as f64) - 4.0;
        let mut acc = self.regime.integer(0);
        // log2 magnitudes of the most recent terms; None for exact zeros
        let mut recent: std::collections::VecDeque<Option<f64>> = std::collections::VecDeque::new();
        let mut k = spec.lower;
        let mut count = 0u64;
        loop {
            if count >= self.opts.term_budget {
                return Err(SeriesError::NonGeometricTail { terms: count });
            }
            let t = self.term(spec, k)?;
            acc = acc.add(&t)?;
            recent.push_back(t.log2_magnitude());
            if recent.len() > WINDOW + 1 {
                recent.pop_front();
            }
            count += 1;
            if count >= WARMUP + WINDOW as u64 {
                let ratio = recent
                    .iter()
                    .zip(recent.iter().skip(1))
                    .map(|(a, b)| match (a, b) {
                        (_, None) => f64::NEG_INFINITY,
                        (None, Some(_)) => f64::INFINITY,
                        (Some(a), Some(b)) => b - a,
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                if ratio <= rho_max {
                    let last = recent.back().copied().flatten();
                    let log_bound = match last {
                        None => f64::NEG_INFINITY,
                        Some(l) if ratio == f64::NEG_INFINITY => l + ratio,
                        Some(l) => l + ratio - (1.0 - ratio.exp2()).log2(),
                    };
                    if log_bound < target {
                        let tail = TailBound::new(k, ratio, log_bound, bits);
                        return Ok((acc, tail, count));
                    }
                }
            }
            k += 1;
        }
    }
}
