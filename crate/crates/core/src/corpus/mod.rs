//! The identity registry and its verification procedures.
//!
//! Every record is one identity `lhs = rhs` with typed parameters. How a
//! record is checked depends on its [`Kind`]: terminating identities are
//! compared exactly at random rational bindings, infinite ones numerically
//! at fixed sample points, and jet-derived ones exactly on all three jet
//! components with one parameter lifted.

mod file;
mod report;
mod verify;

use std::collections::BTreeSet;
use std::sync::OnceLock;

use num_bigint::BigInt;
use thiserror::Error;

use crate::dsl::{DslError, Expr, Formula, SeriesSpec, Upper};
use crate::numeric::Rational;
use crate::series::SeriesError;

pub use file::parse_corpus;
pub use report::{format_json, format_text, Summary};
pub use verify::{
    divided_difference_check, limit_note, operator_derive_check, verify_all, verify_identity, verify_record,
    LimitNote, Verdict, VerificationReport, VerifyOptions,
};

const EMBEDDED: &str = include_str!("../../corpus/identities.corpus");

/// Environment variable naming an alternate corpus file.
pub const CORPUS_ENV: &str = "HYPERQ_CORPUS";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{id}: {key}: {source}")]
    Formula {
        id: String,
        key: String,
        #[source]
        source: DslError,
    },
    #[error("duplicate identity `{0}`")]
    Duplicate(String),
    #[error("unknown identity `{0}`")]
    UnknownId(String),
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("{0}")]
    Unsupported(String),
    #[error("pole: {0}")]
    Pole(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    TerminatingExact,
    InfiniteNumeric,
    JetDerived,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::TerminatingExact => "terminating-exact",
            Kind::InfiniteNumeric => "infinite-numeric",
            Kind::JetDerived => "jet-derived",
        }
    }
}

/// Where a parameter's sample values come from.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    /// Random small rationals.
    Rational,
    /// A nonnegative integer up to the `max-n` option.
    Count,
    /// The base `q`: the requested q-values for infinite identities, random
    /// rationals for terminating ones.
    Q,
    /// Fixed sample points.
    Points(Vec<Rational>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub domain: Domain,
}

/// An alternative reading of a record, tried when the stated form fails.
#[derive(Debug, Clone, PartialEq)]
pub struct Variant {
    pub label: String,
    pub lhs: SeriesSpec,
    pub rhs: Formula,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityRecord {
    pub id: String,
    pub kind: Kind,
    pub lhs: SeriesSpec,
    pub rhs: Formula,
    pub params: Vec<Param>,
    /// Parameters fixed as expressions in the others, bound after them.
    pub derived: Vec<(String, Expr)>,
    /// Jet variable of a jet-derived record.
    pub active: Option<String>,
    pub order: u32,
    pub anchor: String,
    pub notes: String,
    pub derivative_of: Option<String>,
    pub variants: Vec<Variant>,
    /// Deliberately false records, kept for negative tests.
    pub control: bool,
    /// Classical counterpart as `q -> 1`, with the expected ratio.
    pub limit: Option<(String, Rational)>,
}

fn formula_vars(f: &Formula) -> BTreeSet<String> {
    match f {
        Formula::Closed(e) => e.free_vars(),
        Formula::Series(s) => s.free_vars(),
    }
}

impl IdentityRecord {
    /// Names used by either side.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut v = self.lhs.free_vars();
        v.extend(formula_vars(&self.rhs));
        for var in &self.variants {
            v.extend(var.lhs.free_vars());
            v.extend(formula_vars(&var.rhs));
        }
        v
    }

    pub fn param(&self, name: &str) -> Option<&Param> {
        self.params.iter().find(|p| p.name == name)
    }

    fn validate(&self) -> Result<(), String> {
        let id = &self.id;
        let mut declared = BTreeSet::new();
        for name in self.params.iter().map(|p| &p.name).chain(self.derived.iter().map(|(n, _)| n)) {
            if !declared.insert(name.clone()) {
                return Err(format!("{id}: parameter `{name}` declared twice"));
            }
        }
        if let Some(v) = self.free_vars().difference(&declared).next() {
            return Err(format!("{id}: `{v}` is not a declared parameter"));
        }
        let infinite = self.lhs.upper == Upper::Inf;
        match self.kind {
            Kind::InfiniteNumeric => {
                if !infinite {
                    return Err(format!("{id}: infinite-numeric record with a finite lhs"));
                }
                if let Some(p) = self
                    .params
                    .iter()
                    .find(|p| matches!(p.domain, Domain::Rational | Domain::Count))
                {
                    return Err(format!("{id}: `{}` needs fixed points for numeric checking", p.name));
                }
            }
            Kind::TerminatingExact | Kind::JetDerived => {
                if infinite {
                    return Err(format!("{id}: exact record with an infinite lhs"));
                }
            }
        }
        if self.kind == Kind::JetDerived {
            let Some(active) = &self.active else {
                return Err(format!("{id}: jet-derived record without an active parameter"));
            };
            if self.param(active).is_none() {
                return Err(format!("{id}: active parameter `{active}` is not sampled"));
            }
            if !(1..=2).contains(&self.order) {
                return Err(format!("{id}: derivative order must be 1 or 2"));
            }
        }
        Ok(())
    }

    /// Number of sites [`IdentityRecord::mutated`] can perturb (at least 1).
    pub fn mutation_sites(&self) -> usize {
        let mut n = 0;
        formula_literals(&mut self.rhs.clone(), &mut |_| n += 1);
        n.max(1)
    }

    /// This record with one rational coefficient of its right-hand side
    /// increased by 1. Sites are integer literals in value positions (not
    /// exponents or counts), taken in `choice % sites` order; a right-hand
    /// side without any is given the explicit coefficient 2.
    pub fn mutated(&self, choice: usize) -> IdentityRecord {
        let mut out = self.clone();
        let sites = self.mutation_sites();
        let mut seen = 0;
        let target = choice % sites;
        let mut hit = false;
        formula_literals(&mut out.rhs, &mut |v| {
            if seen == target {
                *v += 1;
                hit = true;
            }
            seen += 1;
        });
        if !hit {
            out.rhs = match out.rhs {
                Formula::Closed(e) => Formula::Closed(Expr::mul(Expr::int(2), e)),
                Formula::Series(mut s) => {
                    s.body = Expr::mul(Expr::int(2), s.body);
                    Formula::Series(s)
                }
            };
        }
        out.variants.clear();
        out
    }
}

fn formula_literals(f: &mut Formula, visit: &mut dyn FnMut(&mut BigInt)) {
    match f {
        Formula::Closed(e) => value_literals(e, visit),
        Formula::Series(s) => value_literals(&mut s.body, visit),
    }
}

fn value_literals(e: &mut Expr, visit: &mut dyn FnMut(&mut BigInt)) {
    match e {
        Expr::Int(v) => visit(v),
        Expr::Neg(a) => value_literals(a, visit),
        Expr::Binary(_, a, b) => {
            value_literals(a, visit);
            value_literals(b, visit);
        }
        Expr::Pow(a, _) => value_literals(a, visit),
        Expr::Poch(x, _) | Expr::QPoch(x, _, _) | Expr::QPochInf(x, _) | Expr::HarmX(_, _, x) => {
            value_literals(x, visit)
        }
        Expr::Sum(s) => value_literals(&mut s.body, visit),
        _ => {}
    }
}

/// A loaded registry.
#[derive(Debug, Clone)]
pub struct Corpus {
    records: Vec<IdentityRecord>,
}

impl Corpus {
    pub fn parse(text: &str) -> Result<Corpus, CorpusError> {
        Ok(Corpus {
            records: parse_corpus(text)?,
        })
    }

    /// The corpus compiled into the library.
    pub fn embedded() -> &'static Corpus {
        static CORPUS: OnceLock<Corpus> = OnceLock::new();
        CORPUS.get_or_init(|| Corpus::parse(EMBEDDED).expect("embedded corpus parses"))
    }

    /// The file named by `HYPERQ_CORPUS` if set, else the embedded corpus.
    pub fn load() -> Result<Corpus, CorpusError> {
        match std::env::var_os(CORPUS_ENV) {
            Some(path) => {
                let text = std::fs::read_to_string(&path).map_err(|e| CorpusError::Io {
                    path: path.to_string_lossy().into_owned(),
                    message: e.to_string(),
                })?;
                Corpus::parse(&text)
            }
            None => Ok(Corpus::embedded().clone()),
        }
    }

    /// Every record that is expected to hold, in file order.
    pub fn list(&self) -> Vec<&IdentityRecord> {
        self.records.iter().filter(|r| !r.control).collect()
    }

    /// The deliberately false records.
    pub fn controls(&self) -> Vec<&IdentityRecord> {
        self.records.iter().filter(|r| r.control).collect()
    }

    pub fn get(&self, id: &str) -> Result<&IdentityRecord, CorpusError> {
        self.records
            .iter()
            .find(|r| r.id == id)
            .ok_or_else(|| CorpusError::UnknownId(id.to_string()))
    }
}

/// The embedded registry, controls excluded.
pub fn list_identities() -> Vec<IdentityRecord> {
    Corpus::embedded().list().into_iter().cloned().collect()
}
