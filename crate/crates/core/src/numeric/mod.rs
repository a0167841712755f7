//! Scalar arithmetic in three regimes: exact rationals, binary floating point
//! with a chosen working precision, and second-order jets over either.
//!
//! Every evaluator in the crate works on [`Scalar`]. The regime is chosen up
//! front through a [`Regime`]; combining scalars from different regimes is an
//! error, never a silent promotion.

mod float;
mod jet;

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub use float::HighPrecision;
pub use jet::Jet2;

/// Exact rational number, always normalized (positive denominator, reduced).
pub type Rational = num_rational::BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("regime mismatch: {0} combined with {1}")]
    RegimeMismatch(&'static str, &'static str),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("pole: {0}")]
    Pole(String),
    #[error("not convergent: {0}")]
    NotConvergent(String),
}

/// The arithmetic shared by every scalar component type.
pub trait Field: Clone + PartialEq + fmt::Debug {
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Result<Self, NumError>;
    fn neg(&self) -> Self;
    fn is_zero(&self) -> bool;
    fn zero_like(&self) -> Self;
    fn one_like(&self) -> Self;
    /// Whether dividing by this value is a pole (for jets: the value part).
    fn divisor_is_zero(&self) -> bool {
        self.is_zero()
    }
}

impl Field for Rational {
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Result<Self, NumError> {
        if Zero::is_zero(o) {
            Err(NumError::DivisionByZero)
        } else {
            Ok(self / o)
        }
    }
    fn neg(&self) -> Self {
        -self
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn zero_like(&self) -> Self {
        Rational::zero()
    }
    fn one_like(&self) -> Self {
        Rational::one()
    }
}

impl Field for HighPrecision {
    fn add(&self, o: &Self) -> Self {
        HighPrecision::add(self, o)
    }
    fn sub(&self, o: &Self) -> Self {
        HighPrecision::sub(self, o)
    }
    fn mul(&self, o: &Self) -> Self {
        HighPrecision::mul(self, o)
    }
    fn div(&self, o: &Self) -> Result<Self, NumError> {
        HighPrecision::div(self, o)
    }
    fn neg(&self) -> Self {
        HighPrecision::neg(self)
    }
    fn is_zero(&self) -> bool {
        HighPrecision::is_zero(self)
    }
    fn zero_like(&self) -> Self {
        HighPrecision::zero(self.precision())
    }
    fn one_like(&self) -> Self {
        HighPrecision::one(self.precision())
    }
}

/// Which arithmetic an evaluation runs in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    Exact,
    Float { bits: u32 },
    JetExact,
    JetFloat { bits: u32 },
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Exact => "exact",
            Regime::Float { .. } => "float",
            Regime::JetExact => "jet-exact",
            Regime::JetFloat { .. } => "jet-float",
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(self, Regime::Exact | Regime::JetExact)
    }

    pub fn is_jet(self) -> bool {
        matches!(self, Regime::JetExact | Regime::JetFloat { .. })
    }

    pub fn bits(self) -> Option<u32> {
        match self {
            Regime::Float { bits } | Regime::JetFloat { bits } => Some(bits),
            _ => None,
        }
    }

    /// The same regime at a different working precision.
    pub fn with_bits(self, bits: u32) -> Self {
        match self {
            Regime::Float { .. } => Regime::Float { bits },
            Regime::JetFloat { .. } => Regime::JetFloat { bits },
            other => other,
        }
    }

    /// A constant in this regime.
    pub fn constant(self, r: &Rational) -> Scalar {
        self.lift(r, false)
    }

    pub fn integer(self, v: i64) -> Scalar {
        self.constant(&Rational::from_integer(v.into()))
    }

    /// Lift an exact value; `active` seeds the jet derivative.
    pub fn lift(self, r: &Rational, active: bool) -> Scalar {
        match self {
            Regime::Exact => Scalar::Exact(r.clone()),
            Regime::Float { bits } => Scalar::Float(to_precision(r, bits)),
            Regime::JetExact => Scalar::JetExact(Jet2::lift(r.clone(), active)),
            Regime::JetFloat { bits } => Scalar::JetFloat(Jet2::lift(to_precision(r, bits), active)),
        }
    }

    /// Lift a float value into a float regime.
    pub fn lift_float(self, x: &HighPrecision) -> Result<Scalar, NumError> {
        match self {
            Regime::Float { bits } => Ok(Scalar::Float(x.with_precision(bits))),
            Regime::JetFloat { bits } => Ok(Scalar::JetFloat(Jet2::constant(x.with_precision(bits)))),
            other => Err(NumError::RegimeMismatch(other.name(), "float")),
        }
    }
}

/// A number in one of the four regimes.
#[derive(Clone, Debug, PartialEq)]
pub enum Scalar {
    Exact(Rational),
    Float(HighPrecision),
    JetExact(Jet2<Rational>),
    JetFloat(Jet2<HighPrecision>),
}

/// One arithmetic step applied by [`scalar_combine`].
#[derive(Debug, Clone, Copy)]
pub enum Combine<'a> {
    Add(&'a Scalar),
    Sub(&'a Scalar),
    Mul(&'a Scalar),
    Div(&'a Scalar),
    Neg,
    Pow(i64),
}

macro_rules! binary {
    ($a:expr, $b:expr, |$x:ident, $y:ident| $body:expr) => {
        match ($a, $b) {
            (Scalar::Exact($x), Scalar::Exact($y)) => Ok(Scalar::Exact($body?)),
            (Scalar::Float($x), Scalar::Float($y)) => Ok(Scalar::Float($body?)),
            (Scalar::JetExact($x), Scalar::JetExact($y)) => Ok(Scalar::JetExact($body?)),
            (Scalar::JetFloat($x), Scalar::JetFloat($y)) => Ok(Scalar::JetFloat($body?)),
            (a, b) => Err(NumError::RegimeMismatch(a.regime_name(), b.regime_name())),
        }
    };
}

impl Scalar {
    pub fn regime(&self) -> Regime {
        match self {
            Scalar::Exact(_) => Regime::Exact,
            Scalar::Float(x) => Regime::Float { bits: x.precision() },
            Scalar::JetExact(_) => Regime::JetExact,
            Scalar::JetFloat(j) => Regime::JetFloat {
                bits: j.value.precision(),
            },
        }
    }

    fn regime_name(&self) -> &'static str {
        self.regime().name()
    }

    pub fn add(&self, o: &Scalar) -> Result<Scalar, NumError> {
        binary!(self, o, |x, y| Ok::<_, NumError>(x.add(y)))
    }

    pub fn sub(&self, o: &Scalar) -> Result<Scalar, NumError> {
        binary!(self, o, |x, y| Ok::<_, NumError>(x.sub(y)))
    }

    pub fn mul(&self, o: &Scalar) -> Result<Scalar, NumError> {
        binary!(self, o, |x, y| Ok::<_, NumError>(x.mul(y)))
    }

    pub fn div(&self, o: &Scalar) -> Result<Scalar, NumError> {
        binary!(self, o, |x, y| Field::div(x, y))
    }

    pub fn neg(&self) -> Scalar {
        match self {
            Scalar::Exact(x) => Scalar::Exact(-x),
            Scalar::Float(x) => Scalar::Float(x.neg()),
            Scalar::JetExact(x) => Scalar::JetExact(x.neg()),
            Scalar::JetFloat(x) => Scalar::JetFloat(x.neg()),
        }
    }

    /// Integer power; negative exponents divide.
    pub fn powi(&self, n: i64) -> Result<Scalar, NumError> {
        let mut base = self.clone();
        let mut e = n.unsigned_abs();
        let mut acc = self.one_like();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base)?;
            }
        }
        if n < 0 {
            self.one_like().div(&acc)
        } else {
            Ok(acc)
        }
    }

    /// An exact constant lifted into this scalar's regime.
    pub fn lift_const(&self, r: &Rational) -> Scalar {
        self.regime().constant(r)
    }

    pub fn add_int(&self, v: i64) -> Result<Scalar, NumError> {
        self.add(&self.regime().integer(v))
    }

    pub fn one_like(&self) -> Scalar {
        match self {
            Scalar::Exact(x) => Scalar::Exact(x.one_like()),
            Scalar::Float(x) => Scalar::Float(x.one_like()),
            Scalar::JetExact(x) => Scalar::JetExact(x.one_like()),
            Scalar::JetFloat(x) => Scalar::JetFloat(x.one_like()),
        }
    }

    pub fn zero_like(&self) -> Scalar {
        match self {
            Scalar::Exact(x) => Scalar::Exact(x.zero_like()),
            Scalar::Float(x) => Scalar::Float(x.zero_like()),
            Scalar::JetExact(x) => Scalar::JetExact(x.zero_like()),
            Scalar::JetFloat(x) => Scalar::JetFloat(x.zero_like()),
        }
    }

    /// Whether the value component is zero.
    pub fn value_is_zero(&self) -> bool {
        match self {
            Scalar::Exact(x) => Zero::is_zero(x),
            Scalar::Float(x) => x.is_zero(),
            Scalar::JetExact(x) => Zero::is_zero(&x.value),
            Scalar::JetFloat(x) => x.value.is_zero(),
        }
    }

    /// Approximate `log2` of the largest component magnitude; `None` when
    /// every component is zero.
    pub fn log2_magnitude(&self) -> Option<f64> {
        fn rat_log2(r: &Rational) -> Option<f64> {
            if Zero::is_zero(r) {
                return None;
            }
            let n = r.numer().abs();
            let d = r.denom();
            Some(big_log2(&n) - big_log2(d))
        }
        let logs: Vec<Option<f64>> = match self {
            Scalar::Exact(x) => vec![rat_log2(x)],
            Scalar::Float(x) => vec![x.log2_abs()],
            Scalar::JetExact(j) => vec![rat_log2(&j.value), rat_log2(&j.d1), rat_log2(&j.d2)],
            Scalar::JetFloat(j) => vec![j.value.log2_abs(), j.d1.log2_abs(), j.d2.log2_abs()],
        };
        logs.into_iter().flatten().reduce(f64::max)
    }

    /// The value component as a float, rounded to `bits` for exact regimes.
    pub fn value_float(&self, bits: u32) -> HighPrecision {
        match self {
            Scalar::Exact(x) => to_precision(x, bits),
            Scalar::Float(x) => x.clone(),
            Scalar::JetExact(j) => to_precision(&j.value, bits),
            Scalar::JetFloat(j) => j.value.clone(),
        }
    }

    /// Components as floats: `[value]` or `[value, d1, d2]`.
    pub fn components_float(&self, bits: u32) -> Vec<HighPrecision> {
        match self {
            Scalar::Exact(x) => vec![to_precision(x, bits)],
            Scalar::Float(x) => vec![x.clone()],
            Scalar::JetExact(j) => vec![
                to_precision(&j.value, bits),
                to_precision(&j.d1, bits),
                to_precision(&j.d2, bits),
            ],
            Scalar::JetFloat(j) => vec![j.value.clone(), j.d1.clone(), j.d2.clone()],
        }
    }

    /// Exact components: `[value]` or `[value, d1, d2]`; `None` for floats.
    pub fn components_exact(&self) -> Option<Vec<Rational>> {
        match self {
            Scalar::Exact(x) => Some(vec![x.clone()]),
            Scalar::JetExact(j) => Some(vec![j.value.clone(), j.d1.clone(), j.d2.clone()]),
            _ => None,
        }
    }

    pub fn as_exact(&self) -> Option<&Rational> {
        match self {
            Scalar::Exact(x) => Some(x),
            _ => None,
        }
    }

    pub fn as_float(&self) -> Option<&HighPrecision> {
        match self {
            Scalar::Float(x) => Some(x),
            _ => None,
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(x) => write!(f, "{x}"),
            Scalar::Float(x) => fmt::Display::fmt(x, f),
            Scalar::JetExact(j) => write!(f, "({}, {}, {})", j.value, j.d1, j.d2),
            Scalar::JetFloat(j) => {
                f.write_str("(")?;
                fmt::Display::fmt(&j.value, f)?;
                f.write_str(", ")?;
                fmt::Display::fmt(&j.d1, f)?;
                f.write_str(", ")?;
                fmt::Display::fmt(&j.d2, f)?;
                f.write_str(")")
            }
        }
    }
}

fn big_log2(n: &BigInt) -> f64 {
    let b = n.bits() as i64;
    let keep = b.min(60);
    let lead = (n.abs() >> (b - keep) as u64).to_u64().unwrap_or(1) as f64;
    lead.log2() + (b - keep) as f64
}

pub fn scalar_combine(a: &Scalar, op: Combine<'_>) -> Result<Scalar, NumError> {
    match op {
        Combine::Add(b) => a.add(b),
        Combine::Sub(b) => a.sub(b),
        Combine::Mul(b) => a.mul(b),
        Combine::Div(b) => a.div(b),
        Combine::Neg => Ok(a.neg()),
        Combine::Pow(n) => a.powi(n),
    }
}

/// Seed a jet: `(x, 1, 0)` when active, `(x, 0, 0)` otherwise.
pub fn jet_lift(x: &Scalar, active: bool) -> Result<Scalar, NumError> {
    match x {
        Scalar::Exact(r) => Ok(Scalar::JetExact(Jet2::lift(r.clone(), active))),
        Scalar::Float(h) => Ok(Scalar::JetFloat(Jet2::lift(h.clone(), active))),
        other => Err(NumError::RegimeMismatch(other.regime_name(), "exact or float")),
    }
}

/// Nearest `bits`-bit float to `x`.
pub fn to_precision(x: &Rational, bits: u32) -> HighPrecision {
    HighPrecision::from_rational(x, bits)
}

/// Residual test: `|a - b| <= 2^-bits * max(1, |a|)`.
pub fn agree_to(a: &HighPrecision, b: &HighPrecision, bits: u32) -> bool {
    a.agree_to(b, bits)
}

/// Bits needed to represent `digits` decimal digits.
pub fn digits_to_bits(digits: u32) -> u32 {
    (digits as f64 * std::f64::consts::LOG2_10).ceil() as u32
}

/// `10^-digits` as a float.
pub fn decimal_tolerance(digits: u32, bits: u32) -> HighPrecision {
    let den = num_traits::pow(BigInt::from(10), digits as usize);
    to_precision(&Rational::new(BigInt::one(), den), bits)
}

/// Parse `"3"`, `"-7/2"` style rationals.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: BigInt = n.parse().ok()?;
    let d: BigInt = d.parse().ok()?;
    if d.is_zero() {
        return None;
    }
    Some(Rational::new(n, d))
}
