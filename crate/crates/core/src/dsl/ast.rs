use std::collections::BTreeSet;

use num_bigint::BigInt;

use crate::special::QSumShape;

/// Upper limit of a sum.
#[derive(Debug, Clone, PartialEq)]
pub enum Upper {
    Inf,
    Finite(Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// A term or closed-form expression.
///
/// `QPoch`, `QPochInf`, `QInt` and `QSum` read the base from the parameter `q`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Int(BigInt),
    Var(String),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Pi,
    Sqrt(u32),
    SinPi(Box<Expr>),
    CosPi(Box<Expr>),
    Poch(Box<Expr>, Box<Expr>),
    QPoch(Box<Expr>, u32, Box<Expr>),
    QPochInf(Box<Expr>, u32),
    Fact(Box<Expr>),
    DFactOdd(Box<Expr>),
    QInt(Box<Expr>),
    Harm(u32, Box<Expr>),
    HarmX(u32, Box<Expr>, Box<Expr>),
    QSum(QSumShape, Upper),
    Sum(Box<SeriesSpec>),
}

/// `sum index=lower..upper : body`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesSpec {
    pub index: String,
    pub lower: u64,
    pub upper: Upper,
    pub body: Expr,
}

/// A right-hand side is either a closed form or a series of its own.
#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    Closed(Expr),
    Series(SeriesSpec),
}

impl Expr {
    pub fn int(v: i64) -> Expr {
        Expr::Int(v.into())
    }

    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        Self::bin(BinOp::Mul, a, b)
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        Self::bin(BinOp::Div, a, b)
    }

    pub fn pow(a: Expr, b: Expr) -> Expr {
        Expr::Pow(Box::new(a), Box::new(b))
    }

    /// Whether evaluation reads the implicit base `q`.
    fn uses_q(&self) -> bool {
        matches!(
            self,
            Expr::QPoch(..) | Expr::QPochInf(..) | Expr::QInt(_) | Expr::QSum(..)
        )
    }

    /// Direct sub-expressions, in source order.
    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Int(_) | Expr::Var(_) | Expr::Pi | Expr::Sqrt(_) => vec![],
            Expr::Neg(a)
            | Expr::SinPi(a)
            | Expr::CosPi(a)
            | Expr::Fact(a)
            | Expr::DFactOdd(a)
            | Expr::QInt(a)
            | Expr::Harm(_, a)
            | Expr::QPochInf(a, _) => vec![a],
            Expr::Binary(_, a, b) | Expr::Pow(a, b) | Expr::Poch(a, b) | Expr::QPoch(a, _, b) => {
                vec![a, b]
            }
            Expr::HarmX(_, a, b) => vec![a, b],
            Expr::QSum(_, Upper::Finite(m)) => vec![m],
            Expr::QSum(_, Upper::Inf) => vec![],
            Expr::Sum(s) => {
                let mut v = vec![&s.body];
                if let Upper::Finite(u) = &s.upper {
                    v.insert(0, u);
                }
                v
            }
        }
    }

    /// Names read by the expression, excluding indices bound by inner sums.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut out);
        out
    }

    fn collect_free(&self, out: &mut BTreeSet<String>) {
        if self.uses_q() {
            out.insert("q".to_string());
        }
        match self {
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Sum(s) => {
                if let Upper::Finite(u) = &s.upper {
                    u.collect_free(out);
                }
                let mut inner = s.body.free_vars();
                inner.remove(&s.index);
                out.extend(inner);
            }
            other => {
                for c in other.children() {
                    c.collect_free(out);
                }
            }
        }
    }

    /// Whether the expression contains anything infinite (products, sums or
    /// irrational constants) and so needs a float regime.
    pub fn needs_float(&self) -> bool {
        match self {
            Expr::Pi | Expr::Sqrt(_) | Expr::QPochInf(..) | Expr::QSum(_, Upper::Inf) => true,
            Expr::Sum(s) if s.upper == Upper::Inf => true,
            other => other.children().iter().any(|c| c.needs_float()),
        }
    }
}

impl SeriesSpec {
    pub fn is_infinite(&self) -> bool {
        self.upper == Upper::Inf
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = self.body.free_vars();
        out.remove(&self.index);
        if let Upper::Finite(u) = &self.upper {
            out.extend(u.free_vars());
        }
        out
    }
}

impl Formula {
    pub fn free_vars(&self) -> BTreeSet<String> {
        match self {
            Formula::Closed(e) => e.free_vars(),
            Formula::Series(s) => s.free_vars(),
        }
    }
}
