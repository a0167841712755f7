//! The `hyperq` command line.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or parse error,
//! 3 convergence or internal error.

use std::ffi::OsString;
use std::io::Write;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_integer::Integer;

use crate::corpus::{format_json, format_text, Corpus, CorpusError, Summary, Verdict, VerifyOptions};
use crate::dsl::{parse_closed_form, parse_formula, Expr, Formula};
use crate::numeric::{digits_to_bits, parse_rational, Rational, Regime};
use crate::series::{evaluate, Bindings, SeriesError, SumOptions};
use crate::special::{pi_machin, pi_stormer};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "hyperq", version, about = "Verify hypergeometric and q-series identities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Args, Debug)]
struct Flags {
    /// Decimal digits for numeric checks.
    #[arg(long, global = true, default_value_t = 30, value_parser = clap::value_parser!(u32).range(4..))]
    digits: u32,
    /// Random bindings per exact check.
    #[arg(long, global = true, default_value_t = 20, value_parser = clap::value_parser!(u32).range(1..))]
    samples: u32,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Comma separated q values for infinite q-series.
    #[arg(long, global = true, default_value = "1/2", value_parser = parse_q_list)]
    q: QList,
    /// Largest count parameter drawn for terminating identities.
    #[arg(long = "max-n", global = true, default_value_t = 8)]
    max_n: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long = "terms-budget", global = true, default_value_t = 1_000_000)]
    terms_budget: u64,
    /// Include elapsed times (makes the output nondeterministic).
    #[arg(long, global = true)]
    timings: bool,
}

#[derive(Clone, Debug)]
struct QList(Vec<Rational>);

fn parse_q_list(s: &str) -> Result<QList, String> {
    s.split(',')
        .map(|p| parse_rational(p).ok_or_else(|| format!("`{}` is not a rational", p.trim())))
        .collect::<Result<_, _>>()
        .map(QList)
}

fn parse_assignment(s: &str) -> Result<(String, String), String> {
    let (name, value) = s.split_once('=').ok_or_else(|| format!("expected NAME=VALUE, got `{s}`"))?;
    Ok((name.trim().to_string(), value.trim().to_string()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List the identities of the corpus.
    List,
    /// Verify one identity, or `all`.
    Verify { target: String },
    /// Evaluate a series or closed form.
    Eval {
        expr: String,
        /// Parameter binding NAME=VALUE; VALUE may be an expression in earlier names.
        #[arg(long = "param", value_parser = parse_assignment)]
        params: Vec<(String, String)>,
    },
    /// Differentiate a terminating identity in one parameter and compare.
    Derive {
        id: String,
        #[arg(long)]
        param: String,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..=2))]
        order: u32,
        /// Rational point of the differentiated parameter.
        #[arg(long)]
        at: String,
        /// Other parameters, NAME=EXPR.
        #[arg(long = "bind", value_parser = parse_assignment)]
        binds: Vec<(String, String)>,
    },
    /// Print decimal digits of pi.
    Pi,
}

/// Parse `argv` (program name first), run, and return the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    match dispatch(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<CorpusError> for Failure {
    fn from(e: CorpusError) -> Self {
        let code = match &e {
            CorpusError::Series(s) => series_code(s),
            CorpusError::Pole(_) => EXIT_INTERNAL,
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<SeriesError> for Failure {
    fn from(e: SeriesError) -> Self {
        Failure {
            code: series_code(&e),
            message: e.to_string(),
        }
    }
}

fn series_code(e: &SeriesError) -> i32 {
    match e {
        SeriesError::Unbound(_) | SeriesError::Invalid(_) => EXIT_USAGE,
        _ => EXIT_INTERNAL,
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure {
            code: EXIT_INTERNAL,
            message: e.to_string(),
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<i32, Failure> {
    let f = &cli.flags;
    match &cli.command {
        Command::List => {
            let corpus = Corpus::load()?;
            for r in corpus.list() {
                match f.format {
                    Format::Text => writeln!(out, "{:<8} {:<18} {}", r.id, r.kind.name(), r.anchor)?,
                    Format::Json => writeln!(
                        out,
                        "{}",
                        serde_json::json!({"id": r.id, "kind": r.kind.name(), "anchor": r.anchor})
                    )?,
                }
            }
            Ok(EXIT_OK)
        }
        Command::Verify { target } => verify(target, f, out),
        Command::Eval { expr, params } => eval(expr, params, f, out),
        Command::Derive {
            id,
            param,
            order,
            at,
            binds,
        } => {
            let point = parse_rational(at).ok_or_else(|| Failure::usage(format!("`{at}` is not a rational")))?;
            let binds = binds
                .iter()
                .map(|(n, v)| Ok((n.clone(), parse_expr(v)?)))
                .collect::<Result<Vec<_>, Failure>>()?;
            let report = Corpus::load()?.operator_derive_check(id, param, *order, &point, &binds)?;
            emit(&report, f, out)?;
            Ok(if report.verdict == Verdict::Pass { EXIT_OK } else { EXIT_FAIL })
        }
        Command::Pi => {
            writeln!(out, "{}", pi_digits(f.digits as usize)?)?;
            Ok(EXIT_OK)
        }
    }
}

fn emit(report: &crate::corpus::VerificationReport, f: &Flags, out: &mut dyn Write) -> std::io::Result<()> {
    match f.format {
        Format::Text => writeln!(out, "{}", format_text(report, f.timings)),
        Format::Json => writeln!(out, "{}", format_json(report, f.timings)),
    }
}

fn verify(target: &str, f: &Flags, out: &mut dyn Write) -> Result<i32, Failure> {
    let corpus = Corpus::load()?;
    let opts = VerifyOptions {
        digits: f.digits,
        samples: f.samples,
        seed: f.seed,
        q_values: f.q.0.clone(),
        max_n: f.max_n,
        term_budget: f.terms_budget,
    };
    let reports = if target == "all" {
        corpus.verify_all(&opts).0
    } else {
        vec![corpus.verify(target, &opts)?]
    };
    for r in &reports {
        emit(r, f, out)?;
    }
    let summary = Summary::of(&reports);
    if target == "all" && f.format == Format::Text {
        writeln!(out, "{} pass, {} fail, {} error", summary.pass, summary.fail, summary.error)?;
    }
    Ok(if summary.fail > 0 {
        EXIT_FAIL
    } else if summary.error > 0 {
        EXIT_INTERNAL
    } else {
        EXIT_OK
    })
}

fn parse_expr(text: &str) -> Result<Expr, Failure> {
    parse_closed_form(text).map_err(|e| Failure::usage(format!("in `{text}`: {e}")))
}

fn eval(text: &str, params: &[(String, String)], f: &Flags, out: &mut dyn Write) -> Result<i32, Failure> {
    let formula = parse_formula(text).map_err(|e| Failure::usage(format!("parse error at {e}")))?;
    let mut b = Bindings::new();
    for (name, value) in params {
        match parse_rational(value) {
            Some(r) => b.set(name, r),
            None => b.derive(name, parse_expr(value)?),
        };
    }
    let opts = SumOptions {
        term_budget: f.terms_budget,
        ..SumOptions::default()
    };
    let infinite = matches!(&formula, Formula::Series(s) if s.is_infinite());
    if !infinite {
        match evaluate(&formula, &b, Regime::Exact, opts) {
            Ok(v) => {
                writeln!(out, "{}", v.value.as_exact().expect("exact regime"))?;
                return Ok(EXIT_OK);
            }
            Err(SeriesError::NotExact(_)) => {}
            Err(e) => return Err(e.into()),
        }
    }
    let bits = digits_to_bits(f.digits) + 16;
    let v = evaluate(&formula, &b, Regime::Float { bits }, opts)?;
    writeln!(out, "{}", v.value.value_float(bits).to_decimal(f.digits as usize))?;
    if let Some(t) = v.tail {
        writeln!(out, "terms {}  tail bound {}", v.terms, t.bound.to_decimal(3))?;
    }
    Ok(EXIT_OK)
}

/// `digits` significant digits of pi, truncated, after checking two
/// independent arctangent formulas against each other.
fn pi_digits(digits: usize) -> Result<String, Failure> {
    let bits = digits_to_bits(digits as u32 + 8) + 8;
    let a = pi_machin(bits);
    if !a.agree_to(&pi_stormer(bits), bits - 8) {
        return Err(Failure {
            code: EXIT_INTERNAL,
            message: "pi formulas disagree".into(),
        });
    }
    let r = a.to_rational();
    let scale = num_traits::pow(BigInt::from(10), digits - 1);
    let t = (r.numer() * scale).div_floor(r.denom()).to_string();
    Ok(if digits == 1 { t } else { format!("{}.{}", &t[..1], &t[1..]) })
}
