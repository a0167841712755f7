//! Binary floating point with an arbitrary-precision significand.
//!
//! A value is `(-1)^neg * mant * 2^exp` with `mant < 2^prec`. Every operation
//! rounds to nearest (ties to even) at the larger precision of its operands.
//! Values are kept canonical (odd significand, or zero) so that structural
//! equality is numeric equality.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{NumError, Rational};

#[derive(Clone)]
pub struct HighPrecision {
    neg: bool,
    mant: BigUint,
    exp: i64,
    prec: u32,
}

fn bits(m: &BigUint) -> i64 {
    m.bits() as i64
}

impl HighPrecision {
    pub const MIN_PRECISION: u32 = 8;

    pub fn zero(prec: u32) -> Self {
        HighPrecision {
            neg: false,
            mant: BigUint::zero(),
            exp: 0,
            prec: prec.max(Self::MIN_PRECISION),
        }
    }

    pub fn one(prec: u32) -> Self {
        Self::from_int(1, prec)
    }

    pub fn from_int(v: i64, prec: u32) -> Self {
        Self::from_bigint(&BigInt::from(v), prec)
    }

    pub fn from_bigint(v: &BigInt, prec: u32) -> Self {
        Self::round(v.sign() == Sign::Minus, v.magnitude().clone(), 0, prec, false)
    }

    /// Nearest `prec`-bit value to the rational `r`.
    pub fn from_rational(r: &Rational, prec: u32) -> Self {
        let neg = r.is_negative();
        let num = r.numer().magnitude().clone();
        let den = r.denom().magnitude().clone();
        Self::quotient(neg, num, 0, den, 0, prec)
    }

    /// Exact conversion of a finite `f64`.
    pub fn from_f64(v: f64, prec: u32) -> Self {
        assert!(v.is_finite(), "non-finite f64");
        if v == 0.0 {
            return Self::zero(prec);
        }
        let raw = v.to_bits();
        let neg = raw >> 63 == 1;
        let e = ((raw >> 52) & 0x7ff) as i64;
        let frac = raw & ((1u64 << 52) - 1);
        let (m, ex) = if e == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), e - 1075)
        };
        Self::round(neg, BigUint::from(m), ex, prec, false)
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }

    /// Re-round to a different working precision.
    pub fn with_precision(&self, prec: u32) -> Self {
        Self::round(self.neg, self.mant.clone(), self.exp, prec, false)
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.neg
    }

    pub fn significand(&self) -> BigInt {
        let m = BigInt::from_biguint(Sign::Plus, self.mant.clone());
        if self.neg {
            -m
        } else {
            m
        }
    }

    pub fn exponent(&self) -> i64 {
        self.exp
    }

    fn round(neg: bool, mut mant: BigUint, mut exp: i64, prec: u32, sticky: bool) -> Self {
        let prec = prec.max(Self::MIN_PRECISION);
        if mant.is_zero() {
            return Self::zero(prec);
        }
        let nbits = bits(&mant);
        if nbits > prec as i64 {
            let shift = (nbits - prec as i64) as u64;
            let low_mask = (BigUint::one() << shift) - BigUint::one();
            let low = &mant & &low_mask;
            let half = BigUint::one() << (shift - 1);
            mant >>= shift;
            exp += shift as i64;
            let up = match low.cmp(&half) {
                Ordering::Greater => true,
                Ordering::Less => false,
                Ordering::Equal => sticky || mant.is_odd(),
            };
            if up {
                mant += 1u32;
            }
        }
        let tz = mant.trailing_zeros().unwrap_or(0);
        if tz > 0 {
            mant >>= tz;
            exp += tz as i64;
        }
        HighPrecision {
            neg,
            mant,
            exp,
            prec,
        }
    }

    /// Correctly rounded `(num * 2^ne) / (den * 2^de)`.
    fn quotient(neg: bool, num: BigUint, ne: i64, den: BigUint, de: i64, prec: u32) -> Self {
        if num.is_zero() {
            return Self::zero(prec);
        }
        let shift = (prec as i64 + 2 + bits(&den) - bits(&num)).max(0);
        let (q, r) = (num << shift as u64).div_rem(&den);
        Self::round(neg, q, ne - de - shift, prec, !r.is_zero())
    }

    /// Position of the most significant bit plus one: `|x| < 2^top`.
    fn top(&self) -> i64 {
        self.exp + bits(&self.mant)
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        if !out.mant.is_zero() {
            out.neg = !out.neg;
        }
        out
    }

    pub fn abs(&self) -> Self {
        let mut out = self.clone();
        out.neg = false;
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let prec = self.prec.max(other.prec);
        if self.is_zero() {
            return other.with_precision(prec);
        }
        if other.is_zero() {
            return self.with_precision(prec);
        }
        // far-apart operands: the smaller one lies below a quarter ulp
        if self.top() > other.top() + prec as i64 + 2 {
            return self.with_precision(prec);
        }
        if other.top() > self.top() + prec as i64 + 2 {
            return other.with_precision(prec);
        }
        let e = self.exp.min(other.exp);
        let a = BigInt::from_biguint(
            if self.neg { Sign::Minus } else { Sign::Plus },
            &self.mant << (self.exp - e) as u64,
        );
        let b = BigInt::from_biguint(
            if other.neg { Sign::Minus } else { Sign::Plus },
            &other.mant << (other.exp - e) as u64,
        );
        let s = a + b;
        Self::round(s.is_negative(), s.magnitude().clone(), e, prec, false)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let prec = self.prec.max(other.prec);
        Self::round(
            self.neg != other.neg,
            &self.mant * &other.mant,
            self.exp + other.exp,
            prec,
            false,
        )
    }

    pub fn div(&self, other: &Self) -> Result<Self, NumError> {
        if other.is_zero() {
            return Err(NumError::DivisionByZero);
        }
        let prec = self.prec.max(other.prec);
        Ok(Self::quotient(
            self.neg != other.neg,
            self.mant.clone(),
            self.exp,
            other.mant.clone(),
            other.exp,
            prec,
        ))
    }

    /// Correctly rounded square root.
    pub fn sqrt(&self) -> Result<Self, NumError> {
        if self.neg {
            return Err(NumError::Domain("square root of a negative value".into()));
        }
        if self.is_zero() {
            return Ok(self.clone());
        }
        let want = 2 * (self.prec as i64 + 2);
        let mut shift = (want - bits(&self.mant)).max(0);
        if (self.exp - shift).rem_euclid(2) != 0 {
            shift += 1;
        }
        let m = &self.mant << shift as u64;
        let r = m.sqrt();
        let sticky = &r * &r != m;
        Ok(Self::round(false, r, (self.exp - shift) / 2, self.prec, sticky))
    }

    /// Exact scaling by `2^e`.
    pub fn ldexp(&self, e: i64) -> Self {
        let mut out = self.clone();
        if !out.mant.is_zero() {
            out.exp += e;
        }
        out
    }

    /// Approximately `2^l`, from a base-2 logarithm.
    pub fn exp2(l: f64, prec: u32) -> Self {
        if l == f64::NEG_INFINITY {
            return Self::zero(prec);
        }
        let i = l.floor();
        Self::from_f64((l - i).exp2(), prec).ldexp(i as i64)
    }

    pub fn powi(&self, n: i64) -> Result<Self, NumError> {
        let mut base = self.clone();
        let mut e = n.unsigned_abs();
        let mut acc = Self::one(self.prec);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        if n < 0 {
            Self::one(self.prec).div(&acc)
        } else {
            Ok(acc)
        }
    }

    /// Exact rational value.
    pub fn to_rational(&self) -> Rational {
        let m = BigInt::from_biguint(Sign::Plus, self.mant.clone());
        let m = if self.neg { -m } else { m };
        if self.exp >= 0 {
            Rational::from_integer(m << self.exp as u64)
        } else {
            Rational::new(m, BigInt::one() << (-self.exp) as u64)
        }
    }

    /// Approximate `log2 |x|`; `None` for zero.
    pub fn log2_abs(&self) -> Option<f64> {
        if self.is_zero() {
            return None;
        }
        let b = bits(&self.mant);
        let keep = b.min(60);
        let lead = (&self.mant >> (b - keep) as u64).to_u64().unwrap_or(1) as f64;
        Some(lead.log2() + (b - keep + self.exp) as f64)
    }

    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let r = self.with_precision(53);
        let m = r.mant.to_u64().unwrap_or(0) as f64;
        // split the scaling so subnormal-range exponents do not underflow early
        let e = r.exp.clamp(-2200, 2200) as i32;
        let v = m * 2f64.powi(e / 2) * 2f64.powi(e - e / 2);
        if r.neg {
            -v
        } else {
            v
        }
    }

    pub fn cmp_abs(&self, other: &Self) -> Ordering {
        match (self.is_zero(), other.is_zero()) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
        match self.top().cmp(&other.top()) {
            Ordering::Equal => {}
            o => return o,
        }
        let e = self.exp.min(other.exp);
        let a = &self.mant << (self.exp - e) as u64;
        let b = &other.mant << (other.exp - e) as u64;
        a.cmp(&b)
    }

    /// `true` iff `|self - other| <= 2^-bits * max(1, |self|)`.
    pub fn agree_to(&self, other: &Self, bits: u32) -> bool {
        let prec = self.prec.max(other.prec).max(bits + 16);
        let diff = self.with_precision(prec).sub(&other.with_precision(prec)).abs();
        if diff.is_zero() {
            return true;
        }
        let one = Self::one(prec);
        let scale = if self.cmp_abs(&one) == Ordering::Greater { self.abs() } else { one };
        let threshold = scale.mul(&Self::round(false, BigUint::one(), -(bits as i64), prec, false));
        diff.cmp_abs(&threshold) != Ordering::Greater
    }

    /// Decimal rendering rounded to `digits` significant digits.
    pub fn to_decimal(&self, digits: usize) -> String {
        let digits = digits.max(1);
        if self.is_zero() {
            return "0".to_string();
        }
        let r = self.to_rational().abs();
        let ten = BigInt::from(10);
        // decimal exponent estimate, corrected below
        let mut e10 = (self.log2_abs().unwrap() * std::f64::consts::LOG10_2).floor() as i64;
        let scaled = |e10: i64| -> BigInt {
            let p = digits as i64 - 1 - e10;
            let v = if p >= 0 {
                &r * Rational::from_integer(num_traits::pow(ten.clone(), p as usize))
            } else {
                &r / Rational::from_integer(num_traits::pow(ten.clone(), (-p) as usize))
            };
            let two = BigInt::from(2);
            let num = v.numer() * &two + v.denom();
            num.div_floor(&(v.denom() * &two))
        };
        let mut n = scaled(e10);
        let limit = num_traits::pow(ten.clone(), digits);
        let lower = num_traits::pow(ten.clone(), digits - 1);
        if n >= limit {
            e10 += 1;
            n = scaled(e10);
        } else if n < lower {
            e10 -= 1;
            n = scaled(e10);
            if n >= limit {
                e10 += 1;
                n = scaled(e10);
            }
        }
        let s = n.to_string();
        let sign = if self.neg { "-" } else { "" };
        if (-5..digits as i64).contains(&e10) {
            if e10 >= 0 {
                let int_len = (e10 + 1) as usize;
                let (a, b) = s.split_at(int_len.min(s.len()));
                if b.is_empty() {
                    format!("{sign}{a}")
                } else {
                    format!("{sign}{a}.{b}")
                }
            } else {
                let zeros = "0".repeat((-e10 - 1) as usize);
                format!("{sign}0.{zeros}{s}")
            }
        } else {
            let (a, b) = s.split_at(1);
            if b.is_empty() {
                format!("{sign}{a}e{e10}")
            } else {
                format!("{sign}{a}.{b}e{e10}")
            }
        }
    }
}

impl PartialEq for HighPrecision {
    fn eq(&self, other: &Self) -> bool {
        self.neg == other.neg && self.exp == other.exp && self.mant == other.mant
    }
}

impl fmt::Debug for HighPrecision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = ((self.prec as f64) * std::f64::consts::LOG10_2).floor() as usize;
        write!(f, "{}", self.to_decimal(digits.max(1)))
    }
}

impl fmt::Display for HighPrecision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f
            .precision()
            .unwrap_or(((self.prec as f64) * std::f64::consts::LOG10_2).floor() as usize);
        f.write_str(&self.to_decimal(digits))
    }
}
