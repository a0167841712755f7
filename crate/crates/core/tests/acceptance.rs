//! Acceptance criteria, one line each. Runs without the libtest harness so the
//! verdict lines always reach the output; exits nonzero if any criterion fails.

mod common;

use std::time::{Duration, Instant};

use hyperq::corpus::{verify_record, Corpus, Verdict, VerificationReport, VerifyOptions};
use hyperq::dsl::{parse_closed_form, Formula};
use hyperq::numeric::{digits_to_bits, HighPrecision, Rational, Regime};
use hyperq::series::{evaluate, Bindings, SumOptions};
use hyperq::special::{pi_machin, pi_stormer};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::rat;

type Outcome = Result<String, String>;

// ---- oracles: fixed-point integers scaled by 10^SCALE_DIGITS, computed
// without the library ----

const SCALE_DIGITS: u32 = 80;

fn scale() -> BigInt {
    num_traits::pow(BigInt::from(10), SCALE_DIGITS as usize)
}

/// `atan(1/x)` by its alternating series.
fn atan_inv(x: u64, s: &BigInt) -> BigInt {
    let x2 = BigInt::from(x * x);
    let mut power = s / BigInt::from(x);
    let mut total = BigInt::from(0);
    let mut k = 0u64;
    while power != BigInt::from(0) {
        let term = &power / BigInt::from(2 * k + 1);
        if k.is_multiple_of(2) {
            total += term;
        } else {
            total -= term;
        }
        power /= &x2;
        k += 1;
    }
    total
}

struct Oracle {
    s: BigInt,
    pi: BigInt,
    sqrt3: BigInt,
}

impl Oracle {
    fn new() -> Self {
        // 20 guard digits below the comparison scale
        let guard = num_traits::pow(BigInt::from(10), 20);
        let wide = scale() * &guard;
        let pi = (atan_inv(5, &wide) * 16 - atan_inv(239, &wide) * 4) / &guard;
        let sqrt3 = (BigInt::from(3) * &wide * &wide).sqrt() / &guard;
        Oracle { s: scale(), pi, sqrt3 }
    }

    fn pi_pow(&self, e: u32) -> BigInt {
        let mut v = self.s.clone();
        for _ in 0..e {
            v = v * &self.pi / &self.s;
        }
        v
    }

    /// `num/den * pi^e`, optionally times `sqrt 3`.
    fn value(&self, num: i64, den: i64, e: i32, sqrt3: bool) -> BigInt {
        let mut v = if e >= 0 {
            self.pi_pow(e as u32)
        } else {
            &self.s * &self.s / self.pi_pow((-e) as u32)
        };
        if sqrt3 {
            v = v * &self.sqrt3 / &self.s;
        }
        v * BigInt::from(num) / BigInt::from(den)
    }
}

fn to_fixed(x: &HighPrecision) -> BigInt {
    let r = x.to_rational() * Rational::from_integer(scale());
    let two = BigInt::from(2);
    (r.numer() * &two + r.denom()).div_floor(&(r.denom() * &two))
}

struct Sum {
    value: BigInt,
    terms: u64,
    elapsed: Duration,
}

fn lhs_at(id: &str, digits: u32) -> Sum {
    let rec = Corpus::embedded().get(id).unwrap();
    let bits = digits_to_bits(digits) + 16;
    let start = Instant::now();
    let e = evaluate(
        &Formula::Series(rec.lhs.clone()),
        &Bindings::new(),
        Regime::Float { bits },
        SumOptions::default(),
    )
    .unwrap_or_else(|e| panic!("{id}: {e}"));
    Sum {
        value: to_fixed(&e.value.value_float(bits)),
        terms: e.terms,
        elapsed: start.elapsed(),
    }
}

/// Checks each `(id, num, den, pi power, sqrt3)` against the oracle and the
/// harness at `digits`.
fn oracle_suite(cases: &[(&str, i64, i64, i32, bool)], digits: u32, limits: Option<(Duration, u64)>) -> Outcome {
    let o = Oracle::new();
    let tol = num_traits::pow(BigInt::from(10), (SCALE_DIGITS - digits) as usize);
    let opts = VerifyOptions {
        digits,
        ..VerifyOptions::default()
    };
    let mut notes = vec![];
    for &(id, num, den, e, s3) in cases {
        let sum = lhs_at(id, digits);
        let diff = (&sum.value - o.value(num, den, e, s3)).abs();
        if diff >= tol {
            return Err(format!("{id}: |lhs - oracle| = {diff} x 10^-{SCALE_DIGITS}"));
        }
        if let Some((time, terms)) = limits {
            if sum.elapsed >= time || sum.terms >= terms {
                return Err(format!("{id}: {} terms in {:?}", sum.terms, sum.elapsed));
            }
        }
        let r = verify_record(Corpus::embedded().get(id).unwrap(), &opts);
        if r.verdict != Verdict::Pass {
            return Err(format!("{id}: harness verdict {}", r.verdict.name()));
        }
        notes.push(format!("{id} {} terms", sum.terms));
    }
    Ok(notes.join(", "))
}

fn criterion_1() -> Outcome {
    oracle_suite(
        &[("R1", 4, 1, -1, false), ("R2", 2, 1, -1, true), ("R3", 16, 1, -1, false)],
        40,
        Some((Duration::from_secs(1), 300)),
    )
}

fn criterion_2() -> Outcome {
    oracle_suite(
        &[
            ("W1", 1, 2, 1, false),
            ("G1", 1, 4, 2, false),
            ("H1", 1, 48, 3, false),
            ("EU", 1, 6, 2, false),
            ("S1", 1, 12, 1, false),
            ("S2", 1, 54, 1, true),
        ],
        40,
        None,
    )
}

fn criterion_3() -> Outcome {
    oracle_suite(
        &[
            ("T1", 1, 48, 4, false),
            ("T2", 2, 69, 1, false),
            ("CC", 8, 3, 1, false),
            ("DD", 8, 3, 1, false),
        ],
        40,
        None,
    )
}

fn require(r: &VerificationReport, what: &str) -> Result<(), String> {
    if r.verdict == Verdict::Pass {
        Ok(())
    } else {
        Err(format!("{what}: {} {:?}", r.verdict.name(), r.detail))
    }
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let opts = VerifyOptions {
        samples: 20,
        max_n: 8,
        ..VerifyOptions::default()
    };
    let ids = ["GOS", "DOU", "OMEGA", "REL", "QB", "QB-SP0", "QB-SP3", "QFF", "QGG", "QDOU", "UV"];
    for id in ids {
        let r = verify_record(Corpus::embedded().get(id).unwrap(), &opts);
        require(&r, id)?;
        if r.samples.len() != 20 || r.residual.as_ref().is_some_and(|x| !x.is_zero()) {
            return Err(format!("{id}: {} exact samples", r.samples.len()));
        }
    }
    let t = start.elapsed();
    if t >= Duration::from_secs(60) {
        return Err(format!("took {t:?}"));
    }
    Ok(format!("{} identities x 20 samples in {:.1?}", ids.len(), t))
}

fn small(rng: &mut ChaCha8Rng) -> Rational {
    rat(rng.gen_range(-7..=7), rng.gen_range(1..=7))
}

/// Value and both derivatives of one side with `b` lifted.
fn jet_side(f: &Formula, b: &Bindings) -> Option<Vec<Rational>> {
    let e = evaluate(f, b, Regime::JetExact, SumOptions::default()).ok()?;
    e.value.components_exact()
}

fn exact_side(f: &Formula, b: &Bindings) -> Option<Rational> {
    let e = evaluate(f, b, Regime::Exact, SumOptions::default()).ok()?;
    e.value.as_exact().cloned()
}

/// Exact jet check of `id` in `b` with `c` tied to `b`, at ten admissible
/// points; the second derivative must also equal the closed differentiated
/// record `d2`.
fn operator_suite(id: &str, d2: &str, tie: &str, q: bool, rng: &mut ChaCha8Rng) -> Result<usize, String> {
    let corpus = Corpus::embedded();
    let (base, second) = (corpus.get(id).unwrap(), corpus.get(d2).unwrap());
    let tie = parse_closed_form(tie).unwrap();
    let mut checked = 0;
    let mut draws = 0;
    'draw: while checked < 10 {
        draws += 1;
        if draws > 1000 {
            return Err(format!("{id}: only {checked} admissible points"));
        }
        let (a, b, n) = (small(rng), small(rng), rng.gen_range(0..=8u64));
        let qv = small(rng);
        let mut binds = vec![
            ("a".to_string(), hyperq::dsl::Expr::Int(0.into())),
            ("n".to_string(), hyperq::dsl::Expr::int(n as i64)),
        ];
        binds[0].1 = parse_closed_form(&a.to_string()).unwrap();
        if q {
            binds.push(("q".into(), parse_closed_form(&qv.to_string()).unwrap()));
        }
        binds.push(("c".into(), tie.clone()));
        let Ok(r) = corpus.operator_derive_check(id, "b", 2, &b, &binds) else {
            continue;
        };
        require(&r, id)?;
        // the same point, evaluated by hand against the differentiated record
        let mut jb = Bindings::new();
        jb.set("b", b.clone()).activate("b").set("a", a.clone()).set("n", Rational::from_integer(n.into()));
        let mut xb = Bindings::new();
        xb.set("a", a.clone()).set("b", b.clone()).set("n", Rational::from_integer(n.into()));
        if q {
            jb.set("q", qv.clone());
            xb.set("q", qv.clone());
        }
        jb.derive("c", tie.clone());
        for (side, closed) in [
            (Formula::Series(base.lhs.clone()), Formula::Series(second.lhs.clone())),
            (base.rhs.clone(), second.rhs.clone()),
        ] {
            // the harmonic kernels can have poles the original does not
            let (Some(j), Some(v)) = (jet_side(&side, &jb), exact_side(&closed, &xb)) else {
                continue 'draw;
            };
            if j[2] != v {
                return Err(format!("{id}: second derivative differs from {d2} at a={a}, b={b}, n={n}"));
            }
        }
        checked += 1;
    }
    Ok(checked)
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = operator_suite("GOS", "GOS-D2", "2 - b", false, &mut rng)?;
    let q = operator_suite("QB", "QB-D2", "q^4/b", true, &mut rng)?;
    Ok(format!("GOS at {g} points, QB at {q} points"))
}

fn numeric_at(id: &str, q: &[Rational], digits: u32, below: i64) -> Result<VerificationReport, String> {
    let opts = VerifyOptions {
        digits,
        q_values: q.to_vec(),
        ..VerifyOptions::default()
    };
    let r = verify_record(Corpus::embedded().get(id).unwrap(), &opts);
    require(&r, id)?;
    let bound = HighPrecision::from_rational(&Rational::new(1.into(), num_traits::pow(BigInt::from(10), below as usize)), 64);
    match &r.residual {
        Some(x) if x.cmp_abs(&bound).is_lt() => Ok(r),
        other => Err(format!("{id}: residual {other:?}")),
    }
}

fn criterion_6() -> Outcome {
    let qs = [rat(1, 3), rat(1, 2), rat(7, 10)];
    let ids = [
        "T3a", "T3b", "T3c", "T4", "T5", "QA1", "QA2", "QS1", "QS2", "QGAUSS", "QBC", "QCD", "SB",
    ];
    for id in ids {
        for q in &qs {
            numeric_at(id, std::slice::from_ref(q), 40, 30)?;
        }
    }
    Ok(format!("{} identities at q = 1/3, 1/2, 7/10", ids.len()))
}

fn criterion_7() -> Outcome {
    let r = numeric_at("T6", &[rat(1, 3), rat(1, 2)], 40, 25)?;
    // a misplaced factor must be reported with the form that holds
    let m = verify_record(Corpus::embedded().get("T6-misplaced").unwrap(), &VerifyOptions::default());
    if m.verdict != Verdict::Fail || m.variant.as_deref() != Some("inverted") {
        return Err(format!("misplaced form not localized: {:?} {:?}", m.verdict, m.detail));
    }
    Ok(format!(
        "stated form holds, residual {}; misplaced form reported: {}",
        r.residual.unwrap().to_decimal(3),
        m.detail.unwrap()
    ))
}

fn criterion_8() -> Outcome {
    let opts = VerifyOptions::default();
    let wrong = verify_record(Corpus::embedded().get("SA-uncorrected").unwrap(), &opts);
    let thousandth = HighPrecision::from_rational(&rat(1, 1000), 64);
    if wrong.verdict != Verdict::Fail
        || wrong.samples != ["x=1/3"]
        || !wrong.residual.as_ref().unwrap().cmp_abs(&thousandth).is_gt()
    {
        return Err(format!("uncorrected form: {:?} {:?}", wrong.verdict, wrong.residual));
    }
    let right = numeric_at("SA", &[], 30, 30)?;
    if right.samples != ["x=1/6", "x=1/4", "x=1/3"] {
        return Err(format!("SA sampled {:?}", right.samples));
    }
    Ok(format!(
        "uncorrected residual {}, corrected residual {}",
        wrong.residual.unwrap().to_decimal(3),
        right.residual.unwrap().to_decimal(3)
    ))
}

fn criterion_9() -> Outcome {
    for digits in [30u32, 60, 100] {
        let bits = digits_to_bits(digits + 8) + 8;
        let (a, b) = (pi_machin(bits), pi_stormer(bits));
        if !a.agree_to(&b, digits_to_bits(digits + 8)) {
            return Err(format!("disagree at {digits} digits"));
        }
    }
    Ok("agree at 30, 60, 100 digits plus 8 guard digits".into())
}

fn criterion_10() -> Outcome {
    let laws = common::laws();
    for law in &laws {
        (law.check)(200).map_err(|e| format!("{}::{}: {e}", law.module, law.name))?;
    }
    Ok(format!("{} laws x 200 cases", laws.len()))
}

fn criterion_11() -> Outcome {
    let corpus = Corpus::embedded();
    let records = corpus.list();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let picked = rand::seq::index::sample(&mut rng, records.len(), 10);
    let opts = VerifyOptions::default();
    let mut ids = vec![];
    for i in picked {
        let rec = records[i];
        let m = rec.mutated(rng.gen_range(0..rec.mutation_sites()));
        let r = verify_record(&m, &opts);
        if r.verdict != Verdict::Fail {
            return Err(format!("{} with rhs {} still {}", rec.id, m.rhs, r.verdict.name()));
        }
        ids.push(rec.id.clone());
    }
    Ok(format!("all flipped: {}", ids.join(", ")))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("Ramanujan series R1-R3 at 40 digits", criterion_1),
        ("pi-family series at 40 digits", criterion_2),
        ("T1, T2, CC, DD at 40 digits", criterion_3),
        ("exact terminating suite", criterion_4),
        ("operator method by exact jets", criterion_5),
        ("q-analogues at three q values", criterion_6),
        ("T6 gate", criterion_7),
        ("correction detection", criterion_8),
        ("independent pi formulas", criterion_9),
        ("property suites", criterion_10),
        ("mutation sensitivity", criterion_11),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().unwrap_or_else(|| "panicked".into()))
        });
        let t = start.elapsed();
        match outcome {
            Ok(note) => println!("acceptance {:>2} PASS  {name} ({note}; {t:.1?})", i + 1),
            Err(why) => {
                failed += 1;
                println!("acceptance {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
