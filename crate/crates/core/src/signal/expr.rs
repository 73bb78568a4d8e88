//! Arithmetic expressions for virtual sensor channels.
//!
//! Grammar:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | atom
//! atom   := number | ident | '(' expr ')'
//! ```
//!
//! `−`, `×` and `÷` are accepted as synonyms of `-`, `*` and `/`.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("unexpected character {ch:?} at {pos}")]
    UnexpectedChar { ch: char, pos: usize },
    #[error("unexpected {found} at {pos}, expected {expected}")]
    UnexpectedToken {
        found: String,
        expected: &'static str,
        pos: usize,
    },
    #[error("invalid number {0:?}")]
    BadNumber(String),
    #[error("unknown identifier {0:?}")]
    UnknownIdentifier(String),
    #[error("division by zero")]
    DivisionByZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(BinOp),
    LParen,
    RParen,
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(n) => write!(f, "number {n}"),
            Tok::Ident(s) => write!(f, "identifier {s:?}"),
            Tok::Op(op) => write!(f, "operator {op:?}"),
            Tok::LParen => f.write_str("'('"),
            Tok::RParen => f.write_str("')'"),
            Tok::End => f.write_str("end of input"),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '+' => {
                out.push((Tok::Op(BinOp::Add), pos));
                i += 1;
            }
            '-' | '−' => {
                out.push((Tok::Op(BinOp::Sub), pos));
                i += 1;
            }
            '*' | '×' => {
                out.push((Tok::Op(BinOp::Mul), pos));
                i += 1;
            }
            '/' | '÷' => {
                out.push((Tok::Op(BinOp::Div), pos));
                i += 1;
            }
            '(' => {
                out.push((Tok::LParen, pos));
                i += 1;
            }
            ')' => {
                out.push((Tok::RParen, pos));
                i += 1;
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].1.is_ascii_digit() || chars[i].1 == '.') {
                    i += 1;
                }
                // exponent part, e.g. 1e-3
                if i < chars.len() && matches!(chars[i].1, 'e' | 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && matches!(chars[j].1, '+' | '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].1.is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].1.is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text: String = chars[start..i].iter().map(|(_, c)| c).collect();
                let n = text
                    .parse::<f64>()
                    .map_err(|_| ExprError::BadNumber(text.clone()))?;
                out.push((Tok::Num(n), pos));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len()
                    && (chars[i].1.is_ascii_alphanumeric() || matches!(chars[i].1, '_' | '.'))
                {
                    i += 1;
                }
                let text: String = chars[start..i].iter().map(|(_, c)| c).collect();
                out.push((Tok::Ident(text), pos));
            }
            ch => return Err(ExprError::UnexpectedChar { ch, pos }),
        }
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn unexpected(&self, expected: &'static str) -> ExprError {
        let (tok, pos) = &self.toks[self.at];
        ExprError::UnexpectedToken {
            found: tok.to_string(),
            expected,
            pos: *pos,
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        while let Tok::Op(op @ (BinOp::Add | BinOp::Sub)) = *self.peek() {
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        while let Tok::Op(op @ (BinOp::Mul | BinOp::Div)) = *self.peek() {
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if *self.peek() == Tok::Op(BinOp::Sub) {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(Expr::Num(n))
            }
            Tok::Ident(name) => {
                self.bump();
                Ok(Expr::Var(name))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                if *self.peek() != Tok::RParen {
                    return Err(self.unexpected("')'"));
                }
                self.bump();
                Ok(inner)
            }
            _ => Err(self.unexpected("number, identifier or '('")),
        }
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, ExprError> {
        let mut p = Parser {
            toks: lex(src)?,
            at: 0,
        };
        let e = p.expr()?;
        if *p.peek() != Tok::End {
            return Err(p.unexpected("operator or end of input"));
        }
        Ok(e)
    }

    /// Names referenced by the expression, sorted.
    pub fn variables(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(v) => {
                out.insert(v);
            }
            Expr::Neg(e) => e.collect_vars(out),
            Expr::Bin(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }

    pub fn eval(&self, lookup: &dyn Fn(&str) -> Option<f64>) -> Result<f64, ExprError> {
        match self {
            Expr::Num(n) => Ok(*n),
            Expr::Var(v) => lookup(v).ok_or_else(|| ExprError::UnknownIdentifier(v.clone())),
            Expr::Neg(e) => Ok(-e.eval(lookup)?),
            Expr::Bin(op, l, r) => {
                let a = l.eval(lookup)?;
                let b = r.eval(lookup)?;
                match op {
                    BinOp::Add => Ok(a + b),
                    BinOp::Sub => Ok(a - b),
                    BinOp::Mul => Ok(a * b),
                    BinOp::Div if b == 0.0 => Err(ExprError::DivisionByZero),
                    BinOp::Div => Ok(a / b),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(src: &str) -> Result<f64, ExprError> {
        Expr::parse(src)?.eval(&|name| match name {
            "a" => Some(3.0),
            "b" => Some(1.0),
            "zero" => Some(0.0),
            _ => None,
        })
    }

    #[test]
    fn precedence_and_parens() {
        assert_eq!(eval("1 + 2 * 3").unwrap(), 7.0);
        assert_eq!(eval("(1 + 2) * 3").unwrap(), 9.0);
        assert_eq!(eval("8 / 4 / 2").unwrap(), 1.0);
        assert_eq!(eval("10 - 4 - 3").unwrap(), 3.0);
        assert_eq!(eval("-a * 2").unwrap(), -6.0);
        assert_eq!(eval("a - -b").unwrap(), 4.0);
        assert_eq!(eval("(a+b)/2").unwrap(), 2.0);
        assert_eq!(eval("a−b").unwrap(), 2.0);
        assert_eq!(eval("a × b ÷ 2").unwrap(), 1.5);
        assert_eq!(eval("1.5e1 + 2E-1").unwrap(), 15.2);
    }

    #[test]
    fn errors() {
        assert_eq!(eval("a / zero"), Err(ExprError::DivisionByZero));
        assert_eq!(eval("c + 1"), Err(ExprError::UnknownIdentifier("c".into())));
        assert!(matches!(eval("(a + b"), Err(ExprError::UnexpectedToken { .. })));
        assert!(matches!(eval("a b"), Err(ExprError::UnexpectedToken { .. })));
        assert!(matches!(eval(""), Err(ExprError::UnexpectedToken { .. })));
        assert!(matches!(
            eval("a $ b"),
            Err(ExprError::UnexpectedChar { ch: '$', .. })
        ));
        assert!(matches!(eval("1..2"), Err(ExprError::BadNumber(_))));
    }

    #[test]
    fn variables_are_collected() {
        let e = Expr::parse("(left + right) / 2 - left").unwrap();
        assert_eq!(
            e.variables().into_iter().collect::<Vec<_>>(),
            vec!["left", "right"]
        );
    }
}
