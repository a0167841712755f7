//! Property laws shared by the property suite and the acceptance runner.
//!
//! Each law drives its own proptest runner with a deterministic RNG so that
//! runs are repeatable; the case count is a parameter.

#![allow(dead_code)]

use hyperq::corpus::{verify_record, Corpus, Domain, IdentityRecord, Kind, Verdict, VerifyOptions};
use hyperq::dsl::{
    parse_closed_form, parse_formula, parse_series_spec, BinOp, Expr, Formula, SeriesSpec, Upper,
};
use hyperq::numeric::{digits_to_bits, HighPrecision, Rational, Regime, Scalar};
use hyperq::series::{
    basic_hypergeometric_eval, evaluate, hypergeometric_eval, sum_partial, sum_terminating_with, Bindings,
    HyperMode, SumOptions,
};
use hyperq::special::{
    harmonic, pochhammer, q_integer, q_partial_sum, q_pochhammer, QBase, QSumShape, Sign,
};
use num_bigint::BigInt;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

pub struct Law {
    pub module: &'static str,
    pub name: &'static str,
    pub check: fn(u32) -> Result<(), String>,
}

pub fn laws() -> Vec<Law> {
    macro_rules! law {
        ($m:literal, $f:ident) => {
            Law {
                module: $m,
                name: stringify!($f),
                check: $f,
            }
        };
    }
    vec![
        law!("numeric-core", field_laws),
        law!("numeric-core", jet_primitives),
        law!("numeric-core", jet_matches_finite_differences),
        law!("numeric-core", precision_stability),
        law!("special-functions", pochhammer_concatenation),
        law!("special-functions", q_pochhammer_concatenation),
        law!("special-functions", harmonic_recurrence),
        law!("special-functions", q_integer_addition),
        law!("special-functions", jet_pochhammer),
        law!("special-functions", jet_q_pochhammer),
        law!("special-functions", q_sums_increase),
        law!("series-engine", forward_equals_backward),
        law!("series-engine", tail_bound_is_sound),
        law!("series-engine", incremental_weights),
        law!("series-engine", closed_definitions_agree),
        law!("spec-parser", corpus_round_trip),
        law!("spec-parser", random_round_trip),
        law!("spec-parser", deletion_error_positions),
        law!("spec-parser", parsing_is_deterministic),
        law!("identity-corpus", exact_suite),
        law!("identity-corpus", numeric_suite),
        law!("identity-corpus", linear_combinations),
        law!("identity-corpus", q_consistency),
        law!("identity-corpus", mutation_sensitivity),
    ]
}

fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        max_global_rejects: cases * 64,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn run<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    runner(cases).run(&strategy, test).map_err(|e| e.to_string())
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

fn int(v: u64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

fn rational() -> impl Strategy<Value = Rational> {
    (-60i64..=60, 1i64..=60).prop_map(|(n, d)| rat(n, d))
}

fn nonzero_rational() -> impl Strategy<Value = Rational> {
    rational().prop_filter("nonzero", |r| *r != rat(0, 1))
}

/// A rational in (0, 1).
fn unit_rational() -> impl Strategy<Value = Rational> {
    (1i64..=60).prop_flat_map(|n| (Just(n), n + 1..=61)).prop_map(|(n, d)| rat(n, d))
}

fn exact(r: &Rational) -> Scalar {
    Scalar::Exact(r.clone())
}

fn value(s: Scalar) -> Rational {
    s.as_exact().expect("exact").clone()
}

fn jet(s: &Scalar) -> Vec<Rational> {
    s.components_exact().expect("exact jet")
}

fn q_values() -> [Rational; 3] {
    [rat(1, 3), rat(1, 2), rat(7, 10)]
}

// ---- numeric core ----

fn field_laws(cases: u32) -> Result<(), String> {
    run(cases, (rational(), rational(), rational()), |(a, b, c)| {
        let (a, b, c) = (exact(&a), exact(&b), exact(&c));
        let l = a.add(&b).unwrap().add(&c).unwrap();
        let r = a.add(&b.add(&c).unwrap()).unwrap();
        prop_assert_eq!(l, r);
        let l = a.mul(&b.add(&c).unwrap()).unwrap();
        let r = a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap();
        prop_assert_eq!(l, r);
        Ok(())
    })
}

fn jet_primitives(cases: u32) -> Result<(), String> {
    let strategy = (
        nonzero_rational(),
        -6i64..=6,
        prop::collection::vec(rational(), 1..6),
    );
    run(cases, strategy, |(x, n, shifts)| {
        let xj = Regime::JetExact.lift(&x, true);
        // reciprocal
        let c = jet(&xj.powi(-1).unwrap());
        prop_assert_eq!(&c[1], &(-(&x * &x).recip()));
        prop_assert_eq!(&c[2], &(rat(2, 1) / (&x * &x * &x)));
        // integer power
        let c = jet(&xj.powi(n).unwrap());
        let p = |e: i64| -> Rational { num_traits::pow::Pow::pow(&x, e as i32) };
        prop_assert_eq!(&c[1], &(rat(n, 1) * p(n - 1)));
        prop_assert_eq!(&c[2], &(rat(n * (n - 1), 1) * p(n - 2)));
        // product of linear factors
        let mut f = Regime::JetExact.integer(1);
        for a in &shifts {
            f = f.mul(&xj.add(&Regime::JetExact.constant(a)).unwrap()).unwrap();
        }
        let lin: Vec<Rational> = shifts.iter().map(|a| &x + a).collect();
        let prod_except = |skip: &[usize]| -> Rational {
            lin.iter()
                .enumerate()
                .filter(|(i, _)| !skip.contains(i))
                .fold(rat(1, 1), |acc, (_, v)| acc * v)
        };
        let m = lin.len();
        let d1: Rational = (0..m).map(|j| prod_except(&[j])).fold(rat(0, 1), |a, b| a + b);
        let d2: Rational = (0..m)
            .flat_map(|j| (0..m).filter(move |&l| l != j).map(move |l| (j, l)))
            .map(|(j, l)| prod_except(&[j, l]))
            .fold(rat(0, 1), |a, b| a + b);
        let c = jet(&f);
        prop_assert_eq!(&c[0], &prod_except(&[]));
        prop_assert_eq!(&c[1], &d1);
        prop_assert_eq!(&c[2], &d2);
        Ok(())
    })
}

fn jet_matches_finite_differences(cases: u32) -> Result<(), String> {
    let bits = digits_to_bits(64);
    let h = Rational::new(1.into(), num_traits::pow(BigInt::from(10), 10));
    let strategy = (0usize..3, unit_rational(), 1u64..12, unit_rational(), 1u32..4);
    run(cases, strategy, move |(which, x, n, q, order)| {
        let f = |x: &Scalar| -> Scalar {
            match which {
                0 => pochhammer(x, n).unwrap(),
                1 => {
                    let base = QBase::new(x.lift_const(&q), 1);
                    q_pochhammer(x, &base, n).unwrap()
                }
                _ => harmonic(order, n, x).unwrap(),
            }
        };
        let jr = Regime::JetFloat { bits };
        let fr = Regime::Float { bits };
        let d1 = f(&jr.lift(&x, true)).components_float(bits)[1].clone();
        let plus = f(&fr.lift(&(&x + &h), false)).value_float(bits);
        let minus = f(&fr.lift(&(&x - &h), false)).value_float(bits);
        let two_h = HighPrecision::from_rational(&(&h * rat(2, 1)), bits);
        let fd = plus.sub(&minus).div(&two_h).unwrap();
        let one = HighPrecision::one(bits);
        let scale = if d1.cmp_abs(&one).is_gt() { d1.abs() } else { one };
        let rel = d1.sub(&fd).div(&scale).unwrap();
        prop_assert!(rel.to_f64().abs() <= 1e-6, "relative error {}", rel.to_decimal(3));
        Ok(())
    })
}

/// Bindings for a numeric record: `q` and one choice of each point list.
fn numeric_bindings(rec: &IdentityRecord, q: &Rational, pick: usize) -> Bindings {
    let mut b = Bindings::new();
    for p in &rec.params {
        match &p.domain {
            Domain::Q => b.set(&p.name, q.clone()),
            Domain::Points(v) => b.set(&p.name, v[pick % v.len()].clone()),
            _ => unreachable!(),
        };
    }
    for (n, e) in &rec.derived {
        b.derive(n, e.clone());
    }
    b
}

fn infinite_records() -> Vec<&'static IdentityRecord> {
    Corpus::embedded()
        .list()
        .into_iter()
        .filter(|r| r.kind == Kind::InfiniteNumeric)
        .collect()
}

fn exact_records() -> Vec<&'static IdentityRecord> {
    Corpus::embedded()
        .list()
        .into_iter()
        .filter(|r| r.kind != Kind::InfiniteNumeric)
        .collect()
}

fn precision_stability(cases: u32) -> Result<(), String> {
    let recs = infinite_records();
    let strategy = (0..recs.len(), 0usize..3, 0usize..4, 64u32..=192);
    run(cases, strategy, |(i, qi, pick, p)| {
        let rec = recs[i];
        let b = numeric_bindings(rec, &q_values()[qi], pick);
        let f = Formula::Series(rec.lhs.clone());
        let lo = evaluate(&f, &b, Regime::Float { bits: p }, SumOptions::default()).unwrap();
        let hi = evaluate(&f, &b, Regime::Float { bits: p + 32 }, SumOptions::default()).unwrap();
        prop_assert!(lo
            .value
            .value_float(p + 32)
            .agree_to(&hi.value.value_float(p + 32), p - 8));
        Ok(())
    })
}

// ---- special functions ----

fn pochhammer_concatenation(cases: u32) -> Result<(), String> {
    run(cases, (rational(), 0u64..=20, 0u64..=20), |(x, m, n)| {
        let xs = exact(&x);
        let l = pochhammer(&xs, m + n).unwrap();
        let r = pochhammer(&xs, m)
            .unwrap()
            .mul(&pochhammer(&exact(&(&x + int(m))), n).unwrap())
            .unwrap();
        prop_assert_eq!(l, r);
        Ok(())
    })
}

fn q_pochhammer_concatenation(cases: u32) -> Result<(), String> {
    run(
        cases,
        (rational(), nonzero_rational(), 1u32..=3, 0u64..=10, 0u64..=10),
        |(x, q, s, m, n)| {
            let base = QBase::new(exact(&q), s);
            let xs = exact(&x);
            let l = q_pochhammer(&xs, &base, m + n).unwrap();
            let shifted = xs.mul(&exact(&q).powi((s as u64 * m) as i64).unwrap()).unwrap();
            let r = q_pochhammer(&xs, &base, m)
                .unwrap()
                .mul(&q_pochhammer(&shifted, &base, n).unwrap())
                .unwrap();
            prop_assert_eq!(l, r);
            Ok(())
        },
    )
}

fn harmonic_recurrence(cases: u32) -> Result<(), String> {
    run(cases, (rational(), 1u32..=4, 1u64..=30), |(x, l, n)| {
        prop_assume!((1..=n).all(|i| &x + int(i) != rat(0, 1)));
        let xs = exact(&x);
        let full = value(harmonic(l, n, &xs).unwrap());
        let prev = value(harmonic(l, n - 1, &xs).unwrap());
        let last: Rational = num_traits::pow::Pow::pow(&(&x + int(n)), -(l as i32));
        prop_assert_eq!(full, prev + last);
        Ok(())
    })
}

fn q_integer_addition(cases: u32) -> Result<(), String> {
    run(cases, (nonzero_rational(), 0u64..=40, 0u64..=40), |(q, m, n)| {
        let qs = exact(&q);
        let l = value(q_integer(m + n, &qs).unwrap());
        let qm: Rational = num_traits::pow::Pow::pow(&q, m as i32);
        let r = value(q_integer(m, &qs).unwrap()) + qm * value(q_integer(n, &qs).unwrap());
        prop_assert_eq!(l, r);
        Ok(())
    })
}

fn jet_pochhammer(cases: u32) -> Result<(), String> {
    run(cases, (rational(), 0u64..=15), |(x, n)| {
        prop_assume!((0..n).all(|i| &x + int(i) != rat(0, 1)));
        let c = jet(&pochhammer(&Regime::JetExact.lift(&x, true), n).unwrap());
        let p = value(pochhammer(&exact(&x), n).unwrap());
        let h = value(harmonic(1, n, &exact(&(&x - rat(1, 1)))).unwrap());
        prop_assert_eq!(&c[1], &(p * h));
        Ok(())
    })
}

fn jet_q_pochhammer(cases: u32) -> Result<(), String> {
    run(
        cases,
        (rational(), nonzero_rational(), 1u32..=3, 0u64..=10),
        |(x, q, s, n)| {
            let step = |i: u64| -> Rational { num_traits::pow::Pow::pow(&q, (s as u64 * i) as i32) };
            prop_assume!((0..n).all(|i| rat(1, 1) - &x * step(i) != rat(0, 1)));
            let jet_base = QBase::new(Regime::JetExact.constant(&q), s);
            let c = jet(&q_pochhammer(&Regime::JetExact.lift(&x, true), &jet_base, n).unwrap());
            let p = value(q_pochhammer(&exact(&x), &QBase::new(exact(&q), s), n).unwrap());
            let sum = (0..n).fold(rat(0, 1), |acc, i| acc + step(i) / (rat(1, 1) - &x * step(i)));
            prop_assert_eq!(&c[1], &(-p * sum));
            Ok(())
        },
    )
}

fn q_sums_increase(cases: u32) -> Result<(), String> {
    let strategy = (unit_rational(), 1u32..=3, 1u32..=3, -2i64..=2, 0u64..=30);
    run(cases, strategy, |(q, order, stride, offset, m)| {
        prop_assume!(stride as i64 + offset >= 1);
        let shape = QSumShape {
            order,
            stride,
            offset,
            sign: Sign::Plus,
        };
        let qs = exact(&q);
        let a = value(q_partial_sum(shape, m, &qs).unwrap());
        let b = value(q_partial_sum(shape, m + 1, &qs).unwrap());
        prop_assert!(a < b);
        Ok(())
    })
}

// ---- series engine ----

/// Random bindings for an exact record; `None` when a draw hits a pole.
fn exact_bindings(rec: &IdentityRecord, draws: &[Rational], n: u64) -> Bindings {
    let mut b = Bindings::new();
    for (p, r) in rec.params.iter().zip(draws.iter().cycle()) {
        match &p.domain {
            Domain::Count => b.set(&p.name, int(n)),
            Domain::Points(v) => b.set(&p.name, v[0].clone()),
            Domain::Rational | Domain::Q => b.set(&p.name, r.clone()),
        };
    }
    for (name, e) in &rec.derived {
        b.derive(name, e.clone());
    }
    b
}

fn forward_equals_backward(cases: u32) -> Result<(), String> {
    let recs = exact_records();
    let strategy = (0..recs.len(), prop::collection::vec(nonzero_rational(), 6), 0u64..=8);
    run(cases, strategy, |(i, draws, n)| {
        let rec = recs[i];
        let b = exact_bindings(rec, &draws, n);
        let opts = SumOptions::default();
        let f = sum_terminating_with(&rec.lhs, &b, Regime::Exact, opts, false);
        prop_assume!(f.is_ok());
        let g = sum_terminating_with(&rec.lhs, &b, Regime::Exact, opts, true).unwrap();
        prop_assert_eq!(f.unwrap(), g);
        Ok(())
    })
}

fn tail_bound_is_sound(cases: u32) -> Result<(), String> {
    let recs = infinite_records();
    let strategy = (0..recs.len(), 0usize..3, 0usize..4, 64u32..=160);
    run(cases, strategy, |(i, qi, pick, bits)| {
        let rec = recs[i];
        let b = numeric_bindings(rec, &q_values()[qi], pick);
        let e = evaluate(
            &Formula::Series(rec.lhs.clone()),
            &b,
            Regime::Float { bits },
            SumOptions::default(),
        )
        .unwrap();
        let tail = e.tail.expect("infinite sum reports a tail");
        let wide = bits + 64;
        let longer = sum_partial(&rec.lhs, &b, Regime::Float { bits: wide }, 2 * e.terms).unwrap();
        let change = e.value.value_float(wide).sub(&longer.value_float(wide)).abs();
        // the bound covers the discarded terms; allow rounding at the result precision
        let rounding = HighPrecision::one(64).ldexp(-(bits as i64) - 16);
        prop_assert!(
            change.cmp_abs(&tail.bound.add(&rounding)).is_le(),
            "change {} exceeds bound {}",
            change.to_decimal(3),
            tail.bound.to_decimal(3)
        );
        Ok(())
    })
}

fn incremental_weights(cases: u32) -> Result<(), String> {
    let weighted: Vec<&IdentityRecord> = ["GOS-SP", "GOS-LC", "OMEGA", "QFF", "QFG", "QB-D1"]
        .iter()
        .map(|id| Corpus::embedded().get(id).unwrap())
        .collect();
    let strategy = (0..weighted.len(), prop::collection::vec(unit_rational(), 6), 0u64..=50);
    run(cases, strategy, |(i, draws, n)| {
        let rec = weighted[i];
        // q-products grow too fast in exact arithmetic for n near 50
        let n = if rec.param("q").is_some() { n % 13 } else { n };
        let b = exact_bindings(rec, &draws, n);
        let cached = SumOptions {
            caching: true,
            ..SumOptions::default()
        };
        let fresh = SumOptions {
            caching: false,
            ..SumOptions::default()
        };
        let a = sum_terminating_with(&rec.lhs, &b, Regime::Exact, cached, false);
        prop_assume!(a.is_ok());
        let c = sum_terminating_with(&rec.lhs, &b, Regime::Exact, fresh, false).unwrap();
        prop_assert_eq!(a.unwrap(), c);
        Ok(())
    })
}

fn closed_definitions_agree(cases: u32) -> Result<(), String> {
    let strategy = (rational(), rational(), rational(), unit_rational(), 0u64..=8, 0usize..2);
    run(cases, strategy, |(a, b, c, q, n, which)| {
        let mut bind = Bindings::new();
        bind.set("a", a.clone()).set("b", b.clone()).set("c", c.clone()).set("n", int(n));
        if which == 0 {
            // terminating 3F2 at z = 1 against the written-out series
            let upper = [exact(&-int(n)), exact(&a), exact(&b)];
            let lower = [exact(&c), exact(&(&a + rat(1, 2)))];
            let spec = parse_series_spec(
                "sum k=0..n : poch(-n, k)*poch(a, k)*poch(b, k)/(poch(c, k)*poch(a + 1/2, k)*fact(k))",
            )
            .unwrap();
            let direct = evaluate(&Formula::Series(spec), &bind, Regime::Exact, SumOptions::default());
            prop_assume!(direct.is_ok());
            let h = hypergeometric_eval(&upper, &lower, &exact(&rat(1, 1)), HyperMode::ExactTerminating(n)).unwrap();
            prop_assert_eq!(h, direct.unwrap().value);
        } else {
            // convergent 2phi1 numerically
            bind.set("q", q.clone());
            let bits = 128;
            let fr = Regime::Float { bits };
            let qs = fr.lift(&q, false);
            let base = QBase::new(qs.clone(), 1);
            let spec = parse_series_spec(
                "sum k=0..inf : qpoch(a*q, 1, k)*qpoch(b*q, 1, k)/(qpoch(q^3, 1, k)*qpoch(q, 1, k))*q^k",
            )
            .unwrap();
            let direct = evaluate(&Formula::Series(spec), &bind, fr, SumOptions::default());
            prop_assume!(direct.is_ok());
            let a1 = fr.lift(&(&a * &q), false);
            let b1 = fr.lift(&(&b * &q), false);
            let c1 = fr.lift(&(&q * &q * &q), false);
            let h = basic_hypergeometric_eval(&[a1, b1], &[c1], &base, &qs, HyperMode::Numeric(bits));
            prop_assume!(h.is_ok());
            let h = h.unwrap().value_float(bits);
            prop_assert!(h.agree_to(&direct.unwrap().value.value_float(bits), bits - 8));
        }
        Ok(())
    })
}

// ---- parser ----

fn corpus_formulas() -> Vec<String> {
    let mut out = vec![];
    for r in Corpus::embedded().list().into_iter().chain(Corpus::embedded().controls()) {
        out.push(r.lhs.to_string());
        out.push(r.rhs.to_string());
        for v in &r.variants {
            out.push(v.lhs.to_string());
            out.push(v.rhs.to_string());
        }
    }
    out
}

fn corpus_round_trip(cases: u32) -> Result<(), String> {
    let texts = corpus_formulas();
    let n = texts.len();
    run(cases, 0..n, |i| {
        let first = parse_formula(&texts[i]).unwrap();
        let again = parse_formula(&first.to_string()).unwrap();
        prop_assert_eq!(first, again);
        Ok(())
    })
}

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (0u32..200).prop_map(|v| Expr::int(v as i64)),
        prop::sample::select(vec!["a", "b", "x", "q", "n"]).prop_map(Expr::var),
        Just(Expr::Pi),
        (2u32..12).prop_map(Expr::Sqrt),
    ]
}

fn shape() -> impl Strategy<Value = QSumShape> {
    (1u32..=3, 1u32..=3, -2i64..=2, any::<bool>()).prop_map(|(order, stride, offset, plus)| QSumShape {
        order,
        stride,
        offset,
        sign: if plus { Sign::Plus } else { Sign::Minus },
    })
}

fn expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(4, 40, 3, |inner| {
        let b = || inner.clone().prop_map(Box::new);
        prop_oneof![
            b().prop_map(Expr::Neg),
            (
                prop::sample::select(vec![BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div]),
                b(),
                b()
            )
                .prop_map(|(op, l, r)| Expr::Binary(op, l, r)),
            (b(), b()).prop_map(|(l, r)| Expr::Pow(l, r)),
            b().prop_map(Expr::SinPi),
            b().prop_map(Expr::CosPi),
            (b(), b()).prop_map(|(x, m)| Expr::Poch(x, m)),
            (b(), 1u32..4, b()).prop_map(|(x, s, m)| Expr::QPoch(x, s, m)),
            (b(), 1u32..4).prop_map(|(x, s)| Expr::QPochInf(x, s)),
            b().prop_map(Expr::Fact),
            b().prop_map(Expr::DFactOdd),
            b().prop_map(Expr::QInt),
            (1u32..4, b()).prop_map(|(l, m)| Expr::Harm(l, m)),
            (1u32..4, b(), b()).prop_map(|(l, m, x)| Expr::HarmX(l, m, x)),
            (shape(), prop::option::of(b())).prop_map(|(s, m)| Expr::QSum(
                s,
                m.map(Upper::Finite).unwrap_or(Upper::Inf)
            )),
            (0u64..3, prop::option::of(b()), b()).prop_map(|(lower, upper, body)| Expr::Sum(Box::new(SeriesSpec {
                index: "i".into(),
                lower,
                upper: upper.map(Upper::Finite).unwrap_or(Upper::Inf),
                body: *body,
            }))),
        ]
    })
}

fn random_round_trip(cases: u32) -> Result<(), String> {
    run(cases, expr(), |e| {
        let text = e.to_string();
        let back = parse_closed_form(&text);
        prop_assert_eq!(back.as_ref(), Ok(&e), "rendered as {}", text);
        Ok(())
    })
}

/// Byte offsets of the tokens of a formula, by a scanner independent of the
/// library's lexer.
fn token_spans(text: &str) -> Vec<(usize, usize)> {
    let bytes = text.as_bytes();
    let mut out = vec![];
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
        } else if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
        } else if text[i..].starts_with("..") {
            i += 2;
        } else {
            i += 1;
        }
        out.push((start, i));
    }
    out
}

fn deletion_error_positions(cases: u32) -> Result<(), String> {
    let texts = corpus_formulas();
    let strategy = (0..texts.len(), any::<prop::sample::Index>());
    run(cases, strategy, |(i, pick)| {
        let text = &texts[i];
        let spans = token_spans(text);
        let (s, e) = spans[pick.index(spans.len())];
        let damaged = format!("{}{}", &text[..s], &text[e..]);
        if let Err(err) = parse_formula(&damaged) {
            let (line, col) = err.position();
            prop_assert_eq!(line, 1);
            prop_assert!(col > s, "error at column {} before deletion at byte {} in `{}`", col, s, damaged);
        }
        Ok(())
    })
}

fn parsing_is_deterministic(cases: u32) -> Result<(), String> {
    let texts = corpus_formulas();
    let strategy = prop_oneof![
        prop::sample::select(texts).boxed(),
        "[a-z0-9+*/^(),:. =-]{0,40}".boxed(),
    ];
    run(cases, strategy, |t| {
        prop_assert_eq!(parse_formula(&t), parse_formula(&t));
        prop_assert_eq!(parse_series_spec(&t), parse_series_spec(&t));
        Ok(())
    })
}

// ---- corpus ----

fn exact_suite(cases: u32) -> Result<(), String> {
    let recs = exact_records();
    run(cases, (0..recs.len(), any::<u64>()), |(i, seed)| {
        let opts = VerifyOptions {
            seed,
            ..VerifyOptions::default()
        };
        let r = verify_record(recs[i], &opts);
        prop_assert_eq!(r.verdict, Verdict::Pass, "{} with seed {}: {:?}", recs[i].id, seed, r.detail);
        prop_assert_eq!(r.samples.len(), 20);
        Ok(())
    })
}

fn numeric_suite(cases: u32) -> Result<(), String> {
    let recs = infinite_records();
    run(cases, (0..recs.len(), 0usize..3, 20u32..=45), |(i, qi, digits)| {
        let opts = VerifyOptions {
            digits,
            q_values: vec![q_values()[qi].clone()],
            ..VerifyOptions::default()
        };
        let r = verify_record(recs[i], &opts);
        prop_assert_eq!(r.verdict, Verdict::Pass);
        let bound = HighPrecision::one(64).ldexp(4 - digits_to_bits(digits) as i64);
        prop_assert!(r.residual.unwrap().cmp_abs(&bound).is_lt());
        Ok(())
    })
}

fn sides(rec: &IdentityRecord, b: &Bindings) -> Option<(Rational, Rational)> {
    let l = evaluate(&Formula::Series(rec.lhs.clone()), b, Regime::Exact, SumOptions::default()).ok()?;
    let r = evaluate(&rec.rhs, b, Regime::Exact, SumOptions::default()).ok()?;
    Some((value(l.value), value(r.value)))
}

fn linear_combinations(cases: u32) -> Result<(), String> {
    let c = Corpus::embedded();
    run(cases, (0u64..=8, unit_rational()), |(n, q)| {
        let mut b = Bindings::new();
        b.set("n", int(n));
        let sp = sides(c.get("GOS-SP").unwrap(), &b).unwrap();
        let sp0 = sides(c.get("GOS-SP0").unwrap(), &b).unwrap();
        let lc = sides(c.get("GOS-LC").unwrap(), &b).unwrap();
        let four = rat(4, 1);
        prop_assert_eq!(&(&sp.0 + &four * &sp0.0), &lc.0);
        prop_assert_eq!(&(&sp.1 + &four * &sp0.1), &lc.1);
        b.set("q", q.clone());
        let ff = sides(c.get("QFF").unwrap(), &b);
        let gg = sides(c.get("QGG").unwrap(), &b);
        let fg = sides(c.get("QFG").unwrap(), &b);
        prop_assume!(ff.is_some() && gg.is_some() && fg.is_some());
        let (ff, gg, fg) = (ff.unwrap(), gg.unwrap(), fg.unwrap());
        prop_assert_eq!(&ff.0, &(&fg.0 + &q * &gg.0));
        prop_assert_eq!(&ff.1, &(&fg.1 + &q * &gg.1));
        Ok(())
    })
}

fn q_consistency(cases: u32) -> Result<(), String> {
    let recs: Vec<_> = infinite_records()
        .into_iter()
        .filter(|r| r.params.iter().any(|p| p.domain == Domain::Q))
        .collect();
    run(cases, (0..recs.len(), 0usize..3), |(i, qi)| {
        let opts = VerifyOptions {
            q_values: vec![q_values()[qi].clone()],
            ..VerifyOptions::default()
        };
        prop_assert_eq!(verify_record(recs[i], &opts).verdict, Verdict::Pass, "{}", recs[i].id);
        Ok(())
    })
}

fn mutation_sensitivity(cases: u32) -> Result<(), String> {
    let recs: Vec<_> = Corpus::embedded().list();
    let strategy = (0..recs.len(), any::<prop::sample::Index>(), any::<u64>());
    run(cases, strategy, |(i, site, seed)| {
        let rec = recs[i];
        let m = rec.mutated(site.index(rec.mutation_sites()));
        let opts = VerifyOptions {
            seed,
            ..VerifyOptions::default()
        };
        let r = verify_record(&m, &opts);
        prop_assert_eq!(r.verdict, Verdict::Fail, "{} mutated to {}", rec.id, m.rhs);
        Ok(())
    })
}
