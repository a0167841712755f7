//! Shifted factorials, harmonic numbers, their q-analogues and the constants
//! that appear on right-hand sides.
//!
//! Finite products and sums work in any [`Regime`]; infinite ones need a float
//! regime. The `*_range` variants compute a slice of the product or sum so
//! callers can extend a cached prefix instead of starting over.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::numeric::{HighPrecision, NumError, Rational, Regime, Scalar};

/// The base `q^step` of a q-shifted factorial.
#[derive(Debug, Clone, PartialEq)]
pub struct QBase {
    pub q: Scalar,
    pub step: u32,
}

impl QBase {
    pub fn new(q: Scalar, step: u32) -> Self {
        QBase { q, step }
    }

    pub fn value(&self) -> Result<Scalar, NumError> {
        self.q.powi(self.step as i64)
    }
}

/// Sign of the alternating factor `sign^(i-1)` in a q-harmonic sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

/// Shape of a q-harmonic partial sum: `sum sign^(i-1) q^(c i + d) / [c i + d]^order`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QSumShape {
    pub order: u32,
    pub stride: u32,
    pub offset: i64,
    pub sign: Sign,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConstantTag {
    Pi,
    Sqrt(u32),
    Zeta2,
    QSum { shape: QSumShape, q: Rational },
}

/// `(x)_n = x (x+1) ... (x+n-1)`.
pub fn pochhammer(x: &Scalar, n: u64) -> Result<Scalar, NumError> {
    pochhammer_range(x, 0, n)
}

/// `prod_{i=from}^{to-1} (x + i)`.
pub fn pochhammer_range(x: &Scalar, from: u64, to: u64) -> Result<Scalar, NumError> {
    let mut acc = x.one_like();
    for i in from..to {
        acc = acc.mul(&x.add_int(i as i64)?)?;
    }
    Ok(acc)
}

/// `H_n^(order)(offset) = sum_{k=1}^n 1/(offset+k)^order`.
pub fn harmonic(order: u32, n: u64, offset: &Scalar) -> Result<Scalar, NumError> {
    harmonic_range(order, offset, 0, n)
}

/// `sum_{k=from+1}^{to} 1/(offset+k)^order`.
pub fn harmonic_range(order: u32, offset: &Scalar, from: u64, to: u64) -> Result<Scalar, NumError> {
    let mut acc = offset.zero_like();
    for k in from + 1..=to {
        let base = offset.add_int(k as i64)?;
        if base.value_is_zero() {
            return Err(NumError::Pole(format!("harmonic term {k} has a zero denominator")));
        }
        acc = acc.add(&base.powi(-(order as i64))?)?;
    }
    Ok(acc)
}

/// `k!` as an exact integer.
pub fn factorial(k: u64) -> Rational {
    let mut acc = BigInt::one();
    for i in 2..=k {
        acc *= i;
    }
    Rational::from_integer(acc)
}

/// `(2k+1)!! = 1 * 3 * ... * (2k+1)`.
pub fn double_factorial_odd(k: u64) -> Rational {
    let mut acc = BigInt::one();
    for i in 0..=k {
        acc *= 2 * i + 1;
    }
    Rational::from_integer(acc)
}

/// `(x; q^s)_n = prod_{i=0}^{n-1} (1 - x q^(s i))`.
pub fn q_pochhammer(x: &Scalar, base: &QBase, n: u64) -> Result<Scalar, NumError> {
    q_pochhammer_range(x, base, 0, n)
}

/// `prod_{i=from}^{to-1} (1 - x q^(s i))`.
pub fn q_pochhammer_range(x: &Scalar, base: &QBase, from: u64, to: u64) -> Result<Scalar, NumError> {
    let one = x.one_like();
    if from >= to {
        return Ok(one);
    }
    let b = base.value()?;
    let mut t = x.mul(&b.powi(from as i64)?)?;
    let mut acc = one.clone();
    for i in from..to {
        acc = acc.mul(&one.sub(&t)?)?;
        if i + 1 < to {
            t = t.mul(&b)?;
        }
    }
    Ok(acc)
}

/// `(x; q^s)_inf`, truncated once `|x| q^(s i)` drops below `2^(-bits-8)`.
///
/// The regime of `x` must be a float regime; `bits` defaults to its precision.
pub fn q_pochhammer_infinite(x: &Scalar, base: &QBase) -> Result<Scalar, NumError> {
    let bits = float_bits(x)?;
    let b = base.value()?;
    check_base(&b)?;
    let cutoff = -(bits as f64) - 8.0;
    let one = x.one_like();
    let mut acc = one.clone();
    let mut t = x.clone();
    loop {
        match t.log2_magnitude() {
            None => break,
            Some(l) if l < cutoff => break,
            _ => {}
        }
        acc = acc.mul(&one.sub(&t)?)?;
        t = t.mul(&b)?;
    }
    Ok(acc)
}

/// `[m] = 1 + q + ... + q^(m-1)`; `[0] = 0`.
pub fn q_integer(m: u64, q: &Scalar) -> Result<Scalar, NumError> {
    let one = q.one_like();
    let q_is_one = q.sub(&one)?.value_is_zero();
    if m <= 32 || q_is_one {
        let mut acc = q.zero_like();
        let mut pw = one;
        for _ in 0..m {
            acc = acc.add(&pw)?;
            pw = pw.mul(q)?;
        }
        Ok(acc)
    } else {
        one.sub(&q.powi(m as i64)?)?.div(&one.sub(q)?)
    }
}

/// `sum_{i=1}^m sign^(i-1) q^(c i + d) / [c i + d]^order`.
pub fn q_partial_sum(shape: QSumShape, m: u64, q: &Scalar) -> Result<Scalar, NumError> {
    q_partial_sum_range(shape, q, 0, m)
}

/// Terms `i = from+1 ..= to` of [`q_partial_sum`].
pub fn q_partial_sum_range(shape: QSumShape, q: &Scalar, from: u64, to: u64) -> Result<Scalar, NumError> {
    let mut acc = q.zero_like();
    for i in from + 1..=to {
        acc = acc.add(&q_sum_term(shape, i, q)?)?;
    }
    Ok(acc)
}

fn q_sum_term(shape: QSumShape, i: u64, q: &Scalar) -> Result<Scalar, NumError> {
    let idx = shape.stride as i64 * i as i64 + shape.offset;
    if idx < 1 {
        return Err(NumError::Domain(format!("q-sum index {idx} is not positive")));
    }
    let den = q_integer(idx as u64, q)?;
    if den.value_is_zero() {
        return Err(NumError::Pole(format!("q-integer [{idx}] vanishes")));
    }
    let t = q.powi(idx)?.div(&den.powi(shape.order as i64)?)?;
    Ok(if shape.sign == Sign::Minus && i.is_multiple_of(2) {
        t.neg()
    } else {
        t
    })
}

/// The infinite q-harmonic sum, stopped when the geometric tail bound
/// `|term| / (1 - q^c)` falls below `2^(-bits-8)`.
pub fn q_sum_infinite(shape: QSumShape, q: &Scalar) -> Result<Scalar, NumError> {
    let bits = float_bits(q)?;
    let qc = q.powi(shape.stride as i64)?;
    check_base(&qc)?;
    let one = q.one_like();
    let ratio_log = -one.sub(&qc)?.log2_magnitude().unwrap_or(0.0);
    let cutoff = -(bits as f64) - 8.0;
    let mut acc = q.zero_like();
    let mut i = 1u64;
    loop {
        let idx = shape.stride as i64 * i as i64 + shape.offset;
        if idx >= 1 {
            let t = q_sum_term(shape, i, q)?;
            acc = acc.add(&t)?;
            if let Some(l) = t.log2_magnitude() {
                if l + ratio_log < cutoff {
                    break;
                }
            } else {
                break;
            }
        }
        i += 1;
    }
    Ok(acc)
}

fn float_bits(x: &Scalar) -> Result<u32, NumError> {
    x.regime()
        .bits()
        .ok_or_else(|| NumError::Domain("infinite products and sums need a float regime".into()))
}

fn check_base(b: &Scalar) -> Result<(), NumError> {
    let v = b.value_float(64);
    let one = HighPrecision::one(64);
    if v.is_zero() || v.is_negative() || v.cmp_abs(&one) != std::cmp::Ordering::Less {
        return Err(NumError::NotConvergent(format!("base {v} is not in (0, 1)")));
    }
    Ok(())
}

/// Fixed-point `atan(1/n) * 2^bits`.
fn atan_inv(n: u64, bits: u64) -> BigInt {
    let one = BigInt::one() << bits;
    let n2 = BigInt::from(n * n);
    let mut pw = &one / n;
    let mut acc = pw.clone();
    let mut k = 1u64;
    loop {
        pw = -(pw / &n2);
        if pw.is_zero() {
            break;
        }
        acc += &pw / (2 * k + 1);
        k += 1;
    }
    acc
}

fn pi_from(terms: &[(i64, u64)], bits: u32) -> HighPrecision {
    let guard = 32u64;
    let wp = bits as u64 + guard;
    let mut acc = BigInt::zero();
    for &(c, n) in terms {
        acc += atan_inv(n, wp) * c;
    }
    HighPrecision::from_rational(&Rational::new(acc, BigInt::one() << wp), bits)
}

/// `pi = 16 atan(1/5) - 4 atan(1/239)`.
pub fn pi_machin(bits: u32) -> HighPrecision {
    pi_from(&[(16, 5), (-4, 239)], bits)
}

/// `pi = 48 atan(1/18) + 32 atan(1/57) - 20 atan(1/239)`.
pub fn pi_stormer(bits: u32) -> HighPrecision {
    pi_from(&[(48, 18), (32, 57), (-20, 239)], bits)
}

pub fn constant(tag: &ConstantTag, bits: u32) -> Result<HighPrecision, NumError> {
    let bits = bits.max(HighPrecision::MIN_PRECISION);
    match tag {
        ConstantTag::Pi => Ok(pi_machin(bits)),
        ConstantTag::Sqrt(m) => HighPrecision::from_int(*m as i64, bits + 8)
            .sqrt()
            .map(|s| s.with_precision(bits)),
        ConstantTag::Zeta2 => {
            let p = pi_machin(bits + 8);
            Ok(p.mul(&p).div(&HighPrecision::from_int(6, bits + 8))?.with_precision(bits))
        }
        ConstantTag::QSum { shape, q } => {
            let q = Regime::Float { bits: bits + 8 }.constant(q);
            Ok(q_sum_infinite(*shape, &q)?.value_float(bits).with_precision(bits))
        }
    }
}

/// `sin(pi r)` as `coefficient * sqrt(radicand)`, for `r` with denominator
/// dividing 4 or 6.
pub fn sinpi_closed(r: &Rational) -> Result<(Rational, u32), NumError> {
    let twelve = r * Rational::from_integer(12.into());
    if !twelve.is_integer() {
        return Err(NumError::Domain(format!("sin(pi * {r}) has no tabulated closed form")));
    }
    let k = twelve.to_integer().mod_floor(&BigInt::from(24)).to_u32().unwrap_or(0);
    let (neg, k) = if k >= 12 { (true, k - 12) } else { (false, k) };
    let half = Rational::new(1.into(), 2.into());
    let (c, rad) = match k {
        0 => (Rational::zero(), 1),
        2 | 10 => (half, 1),
        3 | 9 => (half, 2),
        4 | 8 => (half, 3),
        6 => (Rational::one(), 1),
        _ => return Err(NumError::Domain(format!("sin(pi * {r}) has no tabulated closed form"))),
    };
    Ok((if neg { -c } else { c }, rad))
}

/// `cos(pi r) = sin(pi (r + 1/2))`.
pub fn cospi_closed(r: &Rational) -> Result<(Rational, u32), NumError> {
    sinpi_closed(&(r + Rational::new(1.into(), 2.into())))
}

/// Lift `coefficient * sqrt(radicand)` into a regime; irrational values need
/// a float regime.
pub fn algebraic_value(c: &Rational, radicand: u32, regime: Regime) -> Result<Scalar, NumError> {
    if radicand == 1 || c.is_zero() {
        return Ok(regime.constant(c));
    }
    match regime.bits() {
        Some(bits) => {
            let s = constant(&ConstantTag::Sqrt(radicand), bits)?;
            regime.lift_float(&s)?.mul(&regime.constant(c))
        }
        None => Err(NumError::Domain(format!("sqrt({radicand}) is irrational"))),
    }
}
