use num_bigint::BigInt;
use num_traits::ToPrimitive;

use super::ast::{BinOp, Expr, Formula, SeriesSpec, Upper};
use super::lexer::{tokenize, Tok, Token};
use super::DslError;
use crate::special::{QSumShape, Sign};

/// Argument kinds of the built-in atoms.
#[derive(Clone, Copy)]
enum Arg {
    Expr,
    Int,
    Sign,
    ExprOrInf,
}

const ATOMS: &[(&str, &[Arg])] = &[
    ("poch", &[Arg::Expr, Arg::Expr]),
    ("qpoch", &[Arg::Expr, Arg::Int, Arg::Expr]),
    ("qpochinf", &[Arg::Expr, Arg::Int]),
    ("fact", &[Arg::Expr]),
    ("dfactodd", &[Arg::Expr]),
    ("qint", &[Arg::Expr]),
    ("harm", &[Arg::Int, Arg::Expr]),
    ("harmx", &[Arg::Int, Arg::Expr, Arg::Expr]),
    ("qsum", &[Arg::Int, Arg::Int, Arg::Int, Arg::Sign, Arg::ExprOrInf]),
    ("sqrt", &[Arg::Int]),
    ("sinpi", &[Arg::Expr]),
    ("cospi", &[Arg::Expr]),
];

/// Names that cannot be used as parameters.
pub const RESERVED: &[&str] = &[
    "sum", "inf", "pi", "poch", "qpoch", "qpochinf", "fact", "dfactodd", "qint", "harm", "harmx",
    "qsum", "sqrt", "sinpi", "cospi",
];

enum Parsed {
    Expr(Expr),
    Int(BigInt),
    Sign(Sign),
    Inf,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

/// Parse a top-level `sum i=lo..hi : body`.
pub fn parse_series_spec(src: &str) -> Result<SeriesSpec, DslError> {
    let mut p = Parser::new(src)?;
    p.expect_ident("sum")?;
    let s = p.sum_tail()?;
    p.expect_eof()?;
    Ok(s)
}

/// Parse a closed-form expression.
pub fn parse_closed_form(src: &str) -> Result<Expr, DslError> {
    let mut p = Parser::new(src)?;
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

/// A series when the text starts with `sum` followed by an index, otherwise a
/// closed form.
pub fn parse_formula(src: &str) -> Result<Formula, DslError> {
    let p = Parser::new(src)?;
    let is_series = matches!(&p.toks[0].tok, Tok::Ident(s) if s == "sum")
        && matches!(p.toks.get(1).map(|t| &t.tok), Some(Tok::Ident(_)));
    if is_series {
        parse_series_spec(src).map(Formula::Series)
    } else {
        parse_closed_form(src).map(Formula::Closed)
    }
}

impl Parser {
    fn new(src: &str) -> Result<Self, DslError> {
        Ok(Parser {
            toks: tokenize(src)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek_at(&self, off: usize) -> &Tok {
        let i = (self.pos + off).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> DslError {
        let t = self.peek();
        DslError::Parse {
            line: t.line,
            column: t.col,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: t.tok.describe(),
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if &self.peek().tok == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), DslError> {
        if self.eat(&tok) {
            Ok(())
        } else {
            Err(self.error(&[&tok.describe()]))
        }
    }

    fn expect_ident(&mut self, word: &str) -> Result<(), DslError> {
        match &self.peek().tok {
            Tok::Ident(s) if s == word => {
                self.bump();
                Ok(())
            }
            _ => Err(self.error(&[&format!("`{word}`")])),
        }
    }

    fn expect_eof(&mut self) -> Result<(), DslError> {
        if self.peek().tok == Tok::Eof {
            Ok(())
        } else {
            Err(self.error(&["operator", "end of input"]))
        }
    }

    fn index_name(&mut self) -> Result<String, DslError> {
        match &self.peek().tok {
            Tok::Ident(s) if !RESERVED.contains(&s.as_str()) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.error(&["index name"])),
        }
    }

    fn unsigned(&mut self) -> Result<BigInt, DslError> {
        match &self.peek().tok {
            Tok::Int(v) => {
                let v = v.clone();
                self.bump();
                Ok(v)
            }
            _ => Err(self.error(&["integer"])),
        }
    }

    fn signed(&mut self) -> Result<BigInt, DslError> {
        if self.eat(&Tok::Minus) {
            Ok(-self.unsigned()?)
        } else {
            self.eat(&Tok::Plus);
            self.unsigned()
        }
    }

    /// `IDENT = INT .. (inf | expr) : expr` after the `sum` keyword.
    fn sum_tail(&mut self) -> Result<SeriesSpec, DslError> {
        let index = self.index_name()?;
        self.expect(Tok::Eq)?;
        let lower = self.unsigned()?.to_u64().ok_or_else(|| self.error(&["small integer"]))?;
        self.expect(Tok::DotDot)?;
        let upper = self.upper()?;
        self.expect(Tok::Colon)?;
        let body = self.expr()?;
        Ok(SeriesSpec {
            index,
            lower,
            upper,
            body,
        })
    }

    fn upper(&mut self) -> Result<Upper, DslError> {
        if matches!(&self.peek().tok, Tok::Ident(s) if s == "inf") {
            self.bump();
            Ok(Upper::Inf)
        } else {
            Ok(Upper::Finite(Box::new(self.expr()?)))
        }
    }

    fn expr(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, DslError> {
        if self.eat(&Tok::Minus) {
            Ok(Expr::Neg(Box::new(self.unary()?)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr, DslError> {
        let base = self.primary()?;
        if self.eat(&Tok::Caret) {
            let exp = self.unary()?;
            Ok(Expr::pow(base, exp))
        } else {
            Ok(base)
        }
    }

    fn primary(&mut self) -> Result<Expr, DslError> {
        let t = self.peek().clone();
        match t.tok.clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::Int(v))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                self.named(&name, &t)
            }
            _ => Err(self.error(&["number", "name", "`(`", "`-`"])),
        }
    }

    fn named(&mut self, name: &str, at: &Token) -> Result<Expr, DslError> {
        match name {
            "pi" => return Ok(Expr::Pi),
            "inf" => {
                return Err(DslError::Parse {
                    line: at.line,
                    column: at.col,
                    expected: vec!["expression".into()],
                    found: "`inf`".into(),
                })
            }
            "sum" => {
                self.expect(Tok::LParen)?;
                let s = self.sum_tail()?;
                self.expect(Tok::RParen)?;
                return Ok(Expr::Sum(Box::new(s)));
            }
            _ => {}
        }
        let sig = ATOMS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s);
        let Some(sig) = sig else {
            if self.peek().tok == Tok::LParen {
                let open = self.peek();
                return Err(DslError::UnknownAtom {
                    name: name.to_string(),
                    line: open.line,
                    column: open.col,
                });
            }
            return Ok(Expr::Var(name.to_string()));
        };
        self.expect(Tok::LParen)?;
        let mut args = Vec::with_capacity(sig.len());
        for (i, kind) in sig.iter().enumerate() {
            if i > 0 {
                if self.peek().tok == Tok::RParen {
                    return Err(self.arity(name, sig.len(), i));
                }
                self.expect(Tok::Comma)?;
            }
            args.push(self.arg(*kind)?);
        }
        if self.peek().tok == Tok::Comma {
            return Err(self.arity(name, sig.len(), sig.len() + 1));
        }
        let close = self.peek().clone();
        self.expect(Tok::RParen)?;
        build(name, args).map_err(|msg| DslError::Parse {
            line: close.line,
            column: close.col,
            expected: vec![msg],
            found: format!("arguments of `{name}`"),
        })
    }

    fn arity(&self, name: &str, expected: usize, found: usize) -> DslError {
        let t = self.peek();
        DslError::Arity {
            name: name.to_string(),
            expected,
            found,
            line: t.line,
            column: t.col,
        }
    }

    fn arg(&mut self, kind: Arg) -> Result<Parsed, DslError> {
        match kind {
            Arg::Expr => Ok(Parsed::Expr(self.expr()?)),
            Arg::Int => Ok(Parsed::Int(self.signed()?)),
            Arg::Sign => {
                let neg = match self.peek().tok {
                    Tok::Plus => false,
                    Tok::Minus => true,
                    _ => return Err(self.error(&["`+`", "`-`"])),
                };
                self.bump();
                if matches!(&self.peek().tok, Tok::Int(v) if *v == BigInt::from(1)) {
                    self.bump();
                }
                Ok(Parsed::Sign(if neg { Sign::Minus } else { Sign::Plus }))
            }
            Arg::ExprOrInf => {
                if matches!(self.peek_at(0), Tok::Ident(s) if s == "inf") {
                    self.bump();
                    Ok(Parsed::Inf)
                } else {
                    Ok(Parsed::Expr(self.expr()?))
                }
            }
        }
    }
}

fn build(name: &str, args: Vec<Parsed>) -> Result<Expr, String> {
    fn small<T: TryFrom<i64>>(v: &BigInt, what: &str) -> Result<T, String> {
        v.to_i64()
            .and_then(|v| T::try_from(v).ok())
            .ok_or_else(|| format!("{what} out of range"))
    }
    let b = |e: &Expr| Box::new(e.clone());
    use Parsed as P;
    Ok(match (name, args.as_slice()) {
        ("poch", [P::Expr(x), P::Expr(m)]) => Expr::Poch(b(x), b(m)),
        ("qpoch", [P::Expr(x), P::Int(s), P::Expr(m)]) => Expr::QPoch(b(x), positive(s)?, b(m)),
        ("qpochinf", [P::Expr(x), P::Int(s)]) => Expr::QPochInf(b(x), positive(s)?),
        ("fact", [P::Expr(x)]) => Expr::Fact(b(x)),
        ("dfactodd", [P::Expr(x)]) => Expr::DFactOdd(b(x)),
        ("qint", [P::Expr(x)]) => Expr::QInt(b(x)),
        ("harm", [P::Int(l), P::Expr(m)]) => Expr::Harm(positive(l)?, b(m)),
        ("harmx", [P::Int(l), P::Expr(m), P::Expr(x)]) => Expr::HarmX(positive(l)?, b(m), b(x)),
        ("qsum", [P::Int(l), P::Int(c), P::Int(d), P::Sign(sign), upper]) => {
            let shape = QSumShape {
                order: positive(l)?,
                stride: positive(c)?,
                offset: small(d, "offset")?,
                sign: *sign,
            };
            let upper = match upper {
                P::Inf => Upper::Inf,
                P::Expr(m) => Upper::Finite(b(m)),
                _ => unreachable!("argument kinds follow the signature"),
            };
            Expr::QSum(shape, upper)
        }
        ("sqrt", [P::Int(m)]) => Expr::Sqrt(positive(m)?),
        ("sinpi", [P::Expr(x)]) => Expr::SinPi(b(x)),
        ("cospi", [P::Expr(x)]) => Expr::CosPi(b(x)),
        _ => unreachable!("argument kinds follow the signature"),
    })
}

fn positive(v: &BigInt) -> Result<u32, String> {
    match v.to_u32() {
        Some(x) if x > 0 => Ok(x),
        _ => Err(format!("expected a positive integer, found {v}")),
    }
}
