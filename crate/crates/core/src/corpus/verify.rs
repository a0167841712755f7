use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Corpus, CorpusError, Domain, IdentityRecord, Kind, Summary};
use crate::dsl::{Expr, Formula, SeriesSpec};
use crate::numeric::{decimal_tolerance, digits_to_bits, HighPrecision, NumError, Rational, Regime, Scalar};
use crate::series::{evaluate, Bindings, SeriesError, SumOptions};
use crate::special::harmonic;

/// Rejection budget per sample.
const MAX_REJECTIONS: u32 = 1000;
/// Guard bits on top of the requested digits.
const GUARD_BITS: u32 = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub digits: u32,
    pub samples: u32,
    pub seed: u64,
    pub q_values: Vec<Rational>,
    pub max_n: u64,
    pub term_budget: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            digits: 30,
            samples: 20,
            seed: 0,
            q_values: vec![Rational::new(1.into(), 2.into())],
            max_n: 8,
            term_budget: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Error,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Error => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub id: String,
    pub mode: String,
    pub verdict: Verdict,
    /// Largest residual over the samples; `None` when nothing was compared.
    pub residual: Option<HighPrecision>,
    /// `None` means exact equality was required.
    pub tolerance: Option<HighPrecision>,
    pub terms: u64,
    /// One description per binding checked.
    pub samples: Vec<String>,
    pub elapsed: Duration,
    /// Error message, or which variant holds when the stated form fails.
    pub detail: Option<String>,
    pub variant: Option<String>,
}

impl VerificationReport {
    fn errored(id: &str, mode: &str, detail: String) -> Self {
        VerificationReport {
            id: id.to_string(),
            mode: mode.to_string(),
            verdict: Verdict::Error,
            residual: None,
            tolerance: None,
            terms: 0,
            samples: vec![],
            elapsed: Duration::ZERO,
            detail: Some(detail),
            variant: None,
        }
    }
}

struct Outcome {
    pass: bool,
    residual: HighPrecision,
    terms: u64,
    samples: Vec<String>,
    detail: Option<String>,
}

fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// The sampler stream of one record: independent of every other record.
fn stream(seed: u64, id: &str) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(fnv1a(id));
    rng
}

fn random_rational(rng: &mut ChaCha8Rng) -> Rational {
    let n: i64 = rng.gen_range(-7..=7);
    let d: i64 = rng.gen_range(1..=7);
    Rational::new(n.into(), d.into())
}

fn is_rejection(e: &SeriesError) -> bool {
    matches!(
        e,
        SeriesError::Pole { .. }
            | SeriesError::Num(NumError::DivisionByZero | NumError::Pole(_) | NumError::Domain(_))
    )
}

fn describe(values: &[(String, Rational)]) -> String {
    values
        .iter()
        .map(|(n, v)| format!("{n}={v}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn bindings_for(rec: &IdentityRecord, values: &[(String, Rational)]) -> Bindings {
    let mut b = Bindings::new();
    for (name, v) in values {
        b.set(name, v.clone());
    }
    for (name, e) in &rec.derived {
        b.derive(name, e.clone());
    }
    if rec.kind == Kind::JetDerived {
        if let Some(a) = &rec.active {
            b.activate(a);
        }
    }
    b
}

fn abs_diff(a: &Rational, b: &Rational) -> HighPrecision {
    HighPrecision::from_rational(&(a - b).abs(), 64)
}

fn max_hp(a: HighPrecision, b: HighPrecision) -> HighPrecision {
    if b.cmp_abs(&a).is_gt() {
        b
    } else {
        a
    }
}

fn sum_options(opts: &VerifyOptions) -> SumOptions {
    SumOptions {
        term_budget: opts.term_budget,
        ..SumOptions::default()
    }
}

fn check_exact(
    rec: &IdentityRecord,
    lhs: &SeriesSpec,
    rhs: &Formula,
    opts: &VerifyOptions,
) -> Result<Outcome, CorpusError> {
    let mut rng = stream(opts.seed, &rec.id);
    let regime = if rec.kind == Kind::JetDerived {
        Regime::JetExact
    } else {
        Regime::Exact
    };
    let components = if rec.kind == Kind::JetDerived { rec.order as usize + 1 } else { 1 };
    let lhs = Formula::Series(lhs.clone());
    let mut out = Outcome {
        pass: true,
        residual: HighPrecision::zero(64),
        terms: 0,
        samples: vec![],
        detail: None,
    };
    for _ in 0..opts.samples {
        let mut rejected = 0;
        loop {
            if rejected == MAX_REJECTIONS {
                return Err(CorpusError::Pole(format!(
                    "{}: no admissible binding after {MAX_REJECTIONS} draws",
                    rec.id
                )));
            }
            let values: Vec<(String, Rational)> = rec
                .params
                .iter()
                .map(|p| {
                    let v = match &p.domain {
                        Domain::Rational | Domain::Q => random_rational(&mut rng),
                        Domain::Count => Rational::from_integer(rng.gen_range(0..=opts.max_n).into()),
                        Domain::Points(pts) => pts[rng.gen_range(0..pts.len())].clone(),
                    };
                    (p.name.clone(), v)
                })
                .collect();
            let b = bindings_for(rec, &values);
            let both = evaluate(&lhs, &b, regime, SumOptions::default())
                .and_then(|l| Ok((l, evaluate(rhs, &b, regime, SumOptions::default())?)));
            let (l, r) = match both {
                Ok(v) => v,
                Err(e) if is_rejection(&e) => {
                    rejected += 1;
                    continue;
                }
                Err(e) => return Err(e.into()),
            };
            let lc = l.value.components_exact().expect("exact regime");
            let rc = r.value.components_exact().expect("exact regime");
            for (a, b) in lc.iter().zip(&rc).take(components) {
                if a != b {
                    out.pass = false;
                    out.residual = max_hp(out.residual, abs_diff(a, b));
                }
            }
            out.terms = out.terms.max(l.terms.max(r.terms));
            out.samples.push(describe(&values));
            break;
        }
    }
    Ok(out)
}

/// Every combination of the fixed sample points, in declaration order.
fn grid(rec: &IdentityRecord, opts: &VerifyOptions) -> Vec<Vec<(String, Rational)>> {
    let mut rows: Vec<Vec<(String, Rational)>> = vec![vec![]];
    for p in &rec.params {
        let values: &[Rational] = match &p.domain {
            Domain::Q => &opts.q_values,
            Domain::Points(v) => v,
            Domain::Rational | Domain::Count => unreachable!("validated"),
        };
        rows = rows
            .into_iter()
            .flat_map(|row| {
                values.iter().map(move |v| {
                    let mut r = row.clone();
                    r.push((p.name.clone(), v.clone()));
                    r
                })
            })
            .collect();
    }
    rows
}

fn check_numeric(
    rec: &IdentityRecord,
    lhs: &SeriesSpec,
    rhs: &Formula,
    opts: &VerifyOptions,
) -> Result<Outcome, CorpusError> {
    let bits = digits_to_bits(opts.digits) + GUARD_BITS;
    let regime = Regime::Float { bits };
    let tol = decimal_tolerance(opts.digits, bits);
    let lhs = Formula::Series(lhs.clone());
    let mut out = Outcome {
        pass: true,
        residual: HighPrecision::zero(bits),
        terms: 0,
        samples: vec![],
        detail: None,
    };
    for values in grid(rec, opts) {
        let b = bindings_for(rec, &values);
        let l = evaluate(&lhs, &b, regime, sum_options(opts))?;
        let r = match evaluate(rhs, &b, regime, sum_options(opts)) {
            Ok(r) => r,
            // a convergent left side cannot equal a pole
            Err(e) if is_rejection(&e) => {
                out.pass = false;
                out.detail = Some(format!("right side at {}: {e}", describe(&values)));
                out.samples.push(describe(&values));
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let diff = l.value.value_float(bits).sub(&r.value.value_float(bits)).abs();
        if diff.cmp_abs(&tol).is_gt() {
            out.pass = false;
        }
        out.residual = max_hp(out.residual, diff);
        out.terms = out.terms.max(l.terms.max(r.terms));
        out.samples.push(describe(&values));
    }
    Ok(out)
}

fn check(rec: &IdentityRecord, lhs: &SeriesSpec, rhs: &Formula, opts: &VerifyOptions) -> Result<Outcome, CorpusError> {
    match rec.kind {
        Kind::InfiniteNumeric => check_numeric(rec, lhs, rhs, opts),
        Kind::TerminatingExact | Kind::JetDerived => check_exact(rec, lhs, rhs, opts),
    }
}

/// Verify one record. Failures and evaluation errors become verdicts.
pub fn verify_record(rec: &IdentityRecord, opts: &VerifyOptions) -> VerificationReport {
    let start = Instant::now();
    let mode = rec.kind.name();
    let tolerance = match rec.kind {
        Kind::InfiniteNumeric => Some(decimal_tolerance(opts.digits, 64)),
        _ => None,
    };
    let mut report = match check(rec, &rec.lhs, &rec.rhs, opts) {
        Ok(o) => VerificationReport {
            id: rec.id.clone(),
            mode: mode.to_string(),
            verdict: if o.pass { Verdict::Pass } else { Verdict::Fail },
            residual: Some(o.residual),
            tolerance,
            terms: o.terms,
            samples: o.samples,
            elapsed: Duration::ZERO,
            detail: o.detail,
            variant: None,
        },
        Err(e) => VerificationReport::errored(&rec.id, mode, e.to_string()),
    };
    if report.verdict == Verdict::Fail && !rec.variants.is_empty() {
        let holding = rec
            .variants
            .iter()
            .find(|v| matches!(check(rec, &v.lhs, &v.rhs, opts), Ok(o) if o.pass));
        report.detail = Some(match holding {
            Some(v) => {
                report.variant = Some(v.label.clone());
                format!("stated form fails; variant `{}` holds", v.label)
            }
            None => "stated form and every variant fail".to_string(),
        });
    }
    report.elapsed = start.elapsed();
    report
}

impl Corpus {
    pub fn verify(&self, id: &str, opts: &VerifyOptions) -> Result<VerificationReport, CorpusError> {
        Ok(verify_record(self.get(id)?, opts))
    }

    /// Every listed record, run concurrently, reported in corpus order.
    pub fn verify_all(&self, opts: &VerifyOptions) -> (Vec<VerificationReport>, Summary) {
        let reports: Vec<_> = self.list().par_iter().map(|r| verify_record(r, opts)).collect();
        let summary = Summary::of(&reports);
        (reports, summary)
    }

    /// Lift `parameter` to a jet at `point`, evaluate both sides of a
    /// terminating record exactly and compare the value and derivatives up
    /// to `order`. `bindings` fixes the other parameters; an entry may be an
    /// expression in `parameter`, such as `2 - b`. A parameter the record
    /// does not mention must be named in `bindings`; its entry there is
    /// ignored in favour of `point`.
    pub fn operator_derive_check(
        &self,
        id: &str,
        parameter: &str,
        order: u32,
        point: &Rational,
        bindings: &[(String, Expr)],
    ) -> Result<VerificationReport, CorpusError> {
        let start = Instant::now();
        let rec = self.get(id)?;
        if rec.kind != Kind::TerminatingExact {
            return Err(CorpusError::Unsupported(format!(
                "{id} is {}, not terminating-exact",
                rec.kind.name()
            )));
        }
        if !(1..=2).contains(&order) {
            return Err(CorpusError::Unsupported(format!("derivative order {order}")));
        }
        let known = rec.param(parameter).is_some()
            || rec.derived.iter().any(|(n, _)| n == parameter)
            || bindings.iter().any(|(n, _)| n == parameter);
        if !known {
            return Err(CorpusError::UnknownParameter(parameter.to_string()));
        }
        let mut b = Bindings::new();
        b.set(parameter, point.clone()).activate(parameter);
        let mut desc = vec![(parameter.to_string(), point.to_string())];
        let mut derived = vec![];
        for (name, e) in bindings.iter().filter(|(n, _)| n != parameter) {
            if e.free_vars().is_empty() {
                let v = crate::series::evaluate_closed(e, &Bindings::new(), Regime::Exact)?;
                b.set(name, v.as_exact().expect("exact").clone());
            } else {
                derived.push((name.clone(), e.clone()));
            }
            desc.push((name.clone(), e.to_string()));
        }
        for (name, e) in derived.into_iter().chain(
            rec.derived
                .iter()
                .filter(|(n, _)| n != parameter && !bindings.iter().any(|(m, _)| m == n))
                .cloned(),
        ) {
            b.derive(&name, e);
        }
        let eval = |f: &Formula| {
            evaluate(f, &b, Regime::JetExact, SumOptions::default()).map_err(|e| match e {
                e if is_rejection(&e) => CorpusError::Pole(e.to_string()),
                e => e.into(),
            })
        };
        let l = eval(&Formula::Series(rec.lhs.clone()))?;
        let r = eval(&rec.rhs)?;
        let lc = l.value.components_exact().expect("exact regime");
        let rc = r.value.components_exact().expect("exact regime");
        let mut residual = HighPrecision::zero(64);
        let mut pass = true;
        for (a, c) in lc.iter().zip(&rc).take(order as usize + 1) {
            if a != c {
                pass = false;
                residual = max_hp(residual, abs_diff(a, c));
            }
        }
        Ok(VerificationReport {
            id: id.to_string(),
            mode: "operator-derive".to_string(),
            verdict: if pass { Verdict::Pass } else { Verdict::Fail },
            residual: Some(residual),
            tolerance: None,
            terms: l.terms.max(r.terms),
            samples: vec![desc.iter().map(|(n, v)| format!("{n}={v}")).collect::<Vec<_>>().join(", ")],
            elapsed: start.elapsed(),
            detail: None,
            variant: None,
        })
    }

    /// Numeric `q -> 1` note: the record's left side at `q = 127/128` against
    /// the scaled value of its classical counterpart. Not a pass/fail gate.
    pub fn limit_note(&self, id: &str) -> Result<Option<LimitNote>, CorpusError> {
        let rec = self.get(id)?;
        let Some((target, scale)) = &rec.limit else {
            return Ok(None);
        };
        let classical = self.get(target)?;
        let bits = 64;
        let regime = Regime::Float { bits };
        let q = Rational::new(127.into(), 128.into());
        let mut b = Bindings::new();
        b.set("q", q.clone());
        for (name, e) in &rec.derived {
            b.derive(name, e.clone());
        }
        let value = evaluate(&Formula::Series(rec.lhs.clone()), &b, regime, SumOptions::default())?;
        let expected = evaluate(&classical.rhs, &Bindings::new(), regime, SumOptions::default())?;
        let value = value.value.value_float(bits).to_f64();
        let expected = expected.value.value_float(bits).to_f64() * scale_f64(scale);
        let relative_error = ((value - expected) / expected).abs();
        Ok(Some(LimitNote {
            id: rec.id.clone(),
            target: target.clone(),
            q,
            value,
            expected,
            relative_error,
            within: relative_error <= 0.1,
        }))
    }
}

fn scale_f64(r: &Rational) -> f64 {
    HighPrecision::from_rational(r, 64).to_f64()
}

/// Outcome of [`Corpus::limit_note`].
#[derive(Debug, Clone, PartialEq)]
pub struct LimitNote {
    pub id: String,
    pub target: String,
    pub q: Rational,
    pub value: f64,
    pub expected: f64,
    pub relative_error: f64,
    /// Relative error at most 1/10.
    pub within: bool,
}

/// Verify a record of the embedded corpus.
pub fn verify_identity(id: &str, opts: &VerifyOptions) -> Result<VerificationReport, CorpusError> {
    Corpus::embedded().verify(id, opts)
}

/// Verify every record of the embedded corpus.
pub fn verify_all(opts: &VerifyOptions) -> (Vec<VerificationReport>, Summary) {
    Corpus::embedded().verify_all(opts)
}

/// [`Corpus::operator_derive_check`] on the embedded corpus.
pub fn operator_derive_check(
    id: &str,
    parameter: &str,
    order: u32,
    point: &Rational,
    bindings: &[(String, Expr)],
) -> Result<VerificationReport, CorpusError> {
    Corpus::embedded().operator_derive_check(id, parameter, order, point, bindings)
}

/// [`Corpus::limit_note`] on the embedded corpus.
pub fn limit_note(id: &str) -> Result<Option<LimitNote>, CorpusError> {
    Corpus::embedded().limit_note(id)
}

/// Exact check of
/// `(H_m(x+u) - H_m(v-x)) / (v-u-2x) = sum_{i=1}^m 1/((x+u+i)(v-x+i))`.
pub fn divided_difference_check(m: u64, u: &Rational, v: &Rational, x: &Rational) -> Result<bool, CorpusError> {
    let two = Rational::from_integer(BigInt::from(2));
    let gap = v - u - &two * x;
    if gap.is_zero() {
        return Err(CorpusError::Pole("v - u - 2x vanishes".into()));
    }
    let a = x + u;
    let c = v - x;
    let mut rhs = Rational::zero();
    for i in 1..=m {
        let i = Rational::from_integer(BigInt::from(i));
        let den = (&a + &i) * (&c + &i);
        if den.is_zero() {
            return Err(CorpusError::Pole(format!("factor {i} vanishes")));
        }
        rhs += den.recip();
    }
    let h = |off: &Rational| -> Result<Rational, CorpusError> {
        let s = harmonic(1, m, &Scalar::Exact(off.clone())).map_err(|e| CorpusError::Pole(e.to_string()))?;
        Ok(s.as_exact().expect("exact").clone())
    };
    let lhs = (h(&a)? - h(&c)?) / gap;
    Ok(lhs == rhs)
}
