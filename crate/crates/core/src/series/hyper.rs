use num_bigint::BigInt;

use super::{evaluate, Bindings, SeriesError, SumOptions};
use crate::dsl::{BinOp, Expr, Formula, SeriesSpec, Upper};
use crate::numeric::{Rational, Regime, Scalar};
use crate::special::QBase;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HyperMode {
    /// Exact sum of the terms `0..=n`; an upper parameter must cut the series
    /// off there.
    ExactTerminating(u64),
    /// Infinite sum at this many bits.
    Numeric(u32),
}

fn bind_all(b: &mut Bindings, prefix: &str, values: &[Scalar]) -> Vec<Expr> {
    values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let name = format!("{prefix}{i}");
            match v {
                Scalar::Exact(r) => b.set(&name, r.clone()),
                other => b.set_scalar(&name, other.clone()),
            };
            Expr::var(&name)
        })
        .collect()
}

fn product(factors: impl IntoIterator<Item = Expr>) -> Expr {
    factors
        .into_iter()
        .reduce(Expr::mul)
        .unwrap_or_else(|| Expr::int(1))
}

fn regime_for(values: &[&Scalar], mode: HyperMode) -> Regime {
    match mode {
        HyperMode::Numeric(bits) => {
            if values.iter().any(|v| matches!(v, Scalar::JetFloat(_) | Scalar::JetExact(_))) {
                Regime::JetFloat { bits }
            } else {
                Regime::Float { bits }
            }
        }
        HyperMode::ExactTerminating(_) => {
            if values.iter().any(|v| matches!(v, Scalar::JetExact(_))) {
                Regime::JetExact
            } else {
                Regime::Exact
            }
        }
    }
}

fn run(spec: SeriesSpec, b: &mut Bindings, regime: Regime, mode: HyperMode) -> Result<Scalar, SeriesError> {
    if let HyperMode::ExactTerminating(n) = mode {
        b.set("n", Rational::from_integer(BigInt::from(n)));
    }
    Ok(evaluate(&Formula::Series(spec), b, regime, SumOptions::default())?.value)
}

fn upper_bound(mode: HyperMode) -> Upper {
    match mode {
        HyperMode::ExactTerminating(_) => Upper::Finite(Box::new(Expr::var("n"))),
        HyperMode::Numeric(_) => Upper::Inf,
    }
}

/// `rFs(upper; lower; z) = sum (a_1)_k ... (a_r)_k / ((b_1)_k ... (b_s)_k k!) z^k`.
pub fn hypergeometric_eval(
    upper: &[Scalar],
    lower: &[Scalar],
    z: &Scalar,
    mode: HyperMode,
) -> Result<Scalar, SeriesError> {
    if let HyperMode::ExactTerminating(n) = mode {
        let target = Rational::from_integer(-BigInt::from(n));
        if !upper.iter().any(|a| a.as_exact() == Some(&target)) {
            return Err(SeriesError::Invalid(format!(
                "no upper parameter equals -{n}, so the series does not terminate there"
            )));
        }
    }
    let mut b = Bindings::new();
    let k = || Expr::var("k");
    let num = bind_all(&mut b, "a", upper);
    let den = bind_all(&mut b, "b", lower);
    b.set_scalar("z", z.clone());
    if let Scalar::Exact(r) = z {
        b.set("z", r.clone());
    }
    let top = product(num.into_iter().map(|a| Expr::Poch(Box::new(a), Box::new(k()))));
    let bottom = product(
        den.into_iter()
            .map(|a| Expr::Poch(Box::new(a), Box::new(k())))
            .chain([Expr::Fact(Box::new(k()))]),
    );
    let body = Expr::mul(Expr::div(top, bottom), Expr::pow(Expr::var("z"), k()));
    let spec = SeriesSpec {
        index: "k".into(),
        lower: 0,
        upper: upper_bound(mode),
        body,
    };
    let all: Vec<&Scalar> = upper.iter().chain(lower).chain([z]).collect();
    let regime = regime_for(&all, mode);
    run(spec, &mut b, regime, mode)
}

/// `rphis(upper; lower; q^s, z)` with the factor `[(-1)^k q^(s k(k-1)/2)]^(1+s-r)`.
pub fn basic_hypergeometric_eval(
    upper: &[Scalar],
    lower: &[Scalar],
    base: &QBase,
    z: &Scalar,
    mode: HyperMode,
) -> Result<Scalar, SeriesError> {
    let s = base.step;
    if let HyperMode::ExactTerminating(n) = mode {
        let q = base.q.as_exact().ok_or_else(|| {
            SeriesError::Invalid("exact terminating evaluation needs an exact base".into())
        })?;
        let target = num_traits::pow(q.clone(), (n as usize) * s as usize).recip();
        if !upper.iter().any(|a| a.as_exact() == Some(&target)) {
            return Err(SeriesError::Invalid(format!(
                "no upper parameter equals q^-{n}, so the series does not terminate there"
            )));
        }
    }
    let mut b = Bindings::new();
    match &base.q {
        Scalar::Exact(r) => b.set("q", r.clone()),
        other => b.set_scalar("q", other.clone()),
    };
    let k = || Expr::var("k");
    let num = bind_all(&mut b, "a", upper);
    let den = bind_all(&mut b, "b", lower);
    match z {
        Scalar::Exact(r) => b.set("z", r.clone()),
        other => b.set_scalar("z", other.clone()),
    };
    let qp = |a: Expr| Expr::QPoch(Box::new(a), s, Box::new(k()));
    let top = product(num.into_iter().map(qp));
    let q_s = Expr::pow(Expr::var("q"), Expr::int(s as i64));
    let bottom = product(den.into_iter().map(qp).chain([qp(q_s)]));
    let mut body = Expr::mul(Expr::div(top, bottom), Expr::pow(Expr::var("z"), k()));
    let e = 1 + lower.len() as i64 - upper.len() as i64;
    if e != 0 {
        // (-1)^(e k) q^(s e k(k-1)/2)
        let sign = Expr::pow(Expr::Neg(Box::new(Expr::int(1))), Expr::mul(Expr::int(e), k()));
        let tri = Expr::div(
            Expr::mul(k(), Expr::bin(BinOp::Sub, k(), Expr::int(1))),
            Expr::int(2),
        );
        let qpow = Expr::pow(Expr::var("q"), Expr::mul(Expr::int(s as i64 * e), tri));
        body = Expr::mul(body, Expr::mul(sign, qpow));
    }
    let spec = SeriesSpec {
        index: "k".into(),
        lower: 0,
        upper: upper_bound(mode),
        body,
    };
    let all: Vec<&Scalar> = upper.iter().chain(lower).chain([z, &base.q]).collect();
    let regime = regime_for(&all, mode);
    run(spec, &mut b, regime, mode)
}
