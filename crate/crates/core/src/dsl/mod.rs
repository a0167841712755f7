//! The identity language: a small expression grammar for series terms and
//! closed forms.
//!
//! ```text
//! series  := "sum" IDENT "=" INT ".." ("inf" | expr) ":" expr
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := "-" unary | power
//! power   := primary ["^" unary]
//! primary := INT | IDENT | "(" expr ")" | "pi" | call
//!          | "sum" "(" IDENT "=" INT ".." ("inf" | expr) ":" expr ")"
//! ```
//!
//! Calls: `poch(x, m)`, `qpoch(x, s, m)`, `qpochinf(x, s)`, `fact(m)`,
//! `dfactodd(m)`, `qint(m)`, `harm(l, m)`, `harmx(l, m, x)`,
//! `qsum(l, c, d, sign, m | inf)`, `sqrt(INT)`, `sinpi(x)`, `cospi(x)`.
//! The q-atoms use the parameter `q` as their base. Literals are integers;
//! `1/2` is a quotient. `#` starts a comment.

mod ast;
mod lexer;
mod parser;
mod render;

use thiserror::Error;

pub use ast::{BinOp, Expr, Formula, SeriesSpec, Upper};
pub use parser::{parse_closed_form, parse_formula, parse_series_spec, RESERVED};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DslError {
    #[error("{line}:{column}: expected {}, found {found}", .expected.join(" or "))]
    Parse {
        line: usize,
        column: usize,
        expected: Vec<String>,
        found: String,
    },
    #[error("{line}:{column}: unknown function `{name}`")]
    UnknownAtom { name: String, line: usize, column: usize },
    #[error("{line}:{column}: `{name}` takes {expected} arguments, found {found}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
        line: usize,
        column: usize,
    },
}

impl DslError {
    pub fn position(&self) -> (usize, usize) {
        match self {
            DslError::Parse { line, column, .. }
            | DslError::UnknownAtom { line, column, .. }
            | DslError::Arity { line, column, .. } => (*line, *column),
        }
    }

    /// Shift the position by the location of the snippet inside a larger file.
    pub fn offset(self, line0: usize, col0: usize) -> DslError {
        let shift = |line: usize, column: usize| {
            if line == 1 {
                (line0, col0 + column - 1)
            } else {
                (line0 + line - 1, column)
            }
        };
        match self {
            DslError::Parse {
                line,
                column,
                expected,
                found,
            } => {
                let (line, column) = shift(line, column);
                DslError::Parse {
                    line,
                    column,
                    expected,
                    found,
                }
            }
            DslError::UnknownAtom { name, line, column } => {
                let (line, column) = shift(line, column);
                DslError::UnknownAtom { name, line, column }
            }
            DslError::Arity {
                name,
                expected,
                found,
                line,
                column,
            } => {
                let (line, column) = shift(line, column);
                DslError::Arity {
                    name,
                    expected,
                    found,
                    line,
                    column,
                }
            }
        }
    }
}
