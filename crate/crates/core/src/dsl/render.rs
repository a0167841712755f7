use std::fmt::{self, Display, Write};

use super::ast::{BinOp, Expr, Formula, SeriesSpec, Upper};
use crate::special::Sign;

// binding strength, loosest first
const SUM: u8 = 1;
const PRODUCT: u8 = 2;
const UNARY: u8 = 3;
const ATOM: u8 = 5;

fn strength(e: &Expr) -> u8 {
    match e {
        Expr::Binary(BinOp::Add | BinOp::Sub, ..) => SUM,
        Expr::Binary(..) => PRODUCT,
        Expr::Neg(_) => UNARY,
        Expr::Pow(..) => 4,
        _ => ATOM,
    }
}

fn write_at(f: &mut impl Write, e: &Expr, min: u8) -> fmt::Result {
    if strength(e) < min {
        f.write_char('(')?;
        write_expr(f, e)?;
        f.write_char(')')
    } else {
        write_expr(f, e)
    }
}

fn write_upper(f: &mut impl Write, u: &Upper) -> fmt::Result {
    match u {
        Upper::Inf => f.write_str("inf"),
        Upper::Finite(e) => write_expr(f, e),
    }
}

fn write_expr(f: &mut impl Write, e: &Expr) -> fmt::Result {
    match e {
        Expr::Int(v) => write!(f, "{v}"),
        Expr::Var(v) => f.write_str(v),
        Expr::Neg(a) => {
            f.write_char('-')?;
            write_at(f, a, UNARY)
        }
        Expr::Binary(op, a, b) => {
            let (sym, lhs, rhs) = match op {
                BinOp::Add => (" + ", SUM, PRODUCT),
                BinOp::Sub => (" - ", SUM, PRODUCT),
                BinOp::Mul => ("*", PRODUCT, UNARY),
                BinOp::Div => ("/", PRODUCT, UNARY),
            };
            write_at(f, a, lhs)?;
            f.write_str(sym)?;
            write_at(f, b, rhs)
        }
        Expr::Pow(a, b) => {
            write_at(f, a, ATOM)?;
            f.write_char('^')?;
            write_at(f, b, UNARY)
        }
        Expr::Pi => f.write_str("pi"),
        Expr::Sqrt(m) => write!(f, "sqrt({m})"),
        Expr::SinPi(a) => call(f, "sinpi", &[a]),
        Expr::CosPi(a) => call(f, "cospi", &[a]),
        Expr::Poch(a, m) => call(f, "poch", &[a, m]),
        Expr::QPoch(a, s, m) => {
            write!(f, "qpoch(")?;
            write_expr(f, a)?;
            write!(f, ", {s}, ")?;
            write_expr(f, m)?;
            f.write_char(')')
        }
        Expr::QPochInf(a, s) => {
            write!(f, "qpochinf(")?;
            write_expr(f, a)?;
            write!(f, ", {s})")
        }
        Expr::Fact(a) => call(f, "fact", &[a]),
        Expr::DFactOdd(a) => call(f, "dfactodd", &[a]),
        Expr::QInt(a) => call(f, "qint", &[a]),
        Expr::Harm(l, m) => {
            write!(f, "harm({l}, ")?;
            write_expr(f, m)?;
            f.write_char(')')
        }
        Expr::HarmX(l, m, x) => {
            write!(f, "harmx({l}, ")?;
            write_expr(f, m)?;
            f.write_str(", ")?;
            write_expr(f, x)?;
            f.write_char(')')
        }
        Expr::QSum(shape, upper) => {
            let sign = match shape.sign {
                Sign::Plus => '+',
                Sign::Minus => '-',
            };
            write!(
                f,
                "qsum({}, {}, {}, {sign}, ",
                shape.order, shape.stride, shape.offset
            )?;
            write_upper(f, upper)?;
            f.write_char(')')
        }
        Expr::Sum(s) => {
            f.write_str("sum(")?;
            write_spec(f, s)?;
            f.write_char(')')
        }
    }
}

fn call(f: &mut impl Write, name: &str, args: &[&Expr]) -> fmt::Result {
    f.write_str(name)?;
    f.write_char('(')?;
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write_expr(f, a)?;
    }
    f.write_char(')')
}

fn write_spec(f: &mut impl Write, s: &SeriesSpec) -> fmt::Result {
    write!(f, "{}={}..", s.index, s.lower)?;
    write_upper(f, &s.upper)?;
    f.write_str(" : ")?;
    write_expr(f, &s.body)
}

impl Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self)
    }
}

impl Display for SeriesSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("sum ")?;
        write_spec(f, self)
    }
}

impl Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Closed(e) => e.fmt(f),
            Formula::Series(s) => s.fmt(f),
        }
    }
}
