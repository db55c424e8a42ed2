//! Text grammar for polynomials and tower descriptions.
//!
//! ```text
//! expr   := ['+' | '-'] term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := atom ['^' integer]
//! atom   := integer | name | '(' expr ')'
//! ```
//!
//! Names resolve to ring variables first, then tower generators. Division is
//! only by nonzero constants of the tower. Juxtaposition is an error.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use thiserror::Error;

use crate::fieldtower::{Coeff, ExtensionStep, FieldTower};
use crate::polyring::{MultiPoly, PolyRing};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("parse error at line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(BigInt),
    Name(String),
    Op(char),
    End,
}

struct Lexer {
    toks: Vec<(Tok, usize, usize)>,
}

fn lex(text: &str) -> Result<Lexer, ParseError> {
    let mut toks = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut line, mut col) = (1usize, 1usize);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            col += 1;
            i += 1;
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            col += i - start;
            toks.push((Tok::Int(s.parse().unwrap()), l0, c0));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            col += i - start;
            toks.push((Tok::Name(s), l0, c0));
            continue;
        }
        if "+-*/^()".contains(c) {
            toks.push((Tok::Op(c), l0, c0));
            col += 1;
            i += 1;
            continue;
        }
        return Err(ParseError { line: l0, column: c0, message: format!("unexpected character `{c}`") });
    }
    toks.push((Tok::End, line, col));
    Ok(Lexer { toks })
}

struct Parser<'a> {
    ring: &'a Arc<PolyRing>,
    lex: Lexer,
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.lex.toks[self.pos].0
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        let (_, line, column) = &self.lex.toks[self.pos];
        Err(ParseError { line: *line, column: *column, message: message.into() })
    }

    fn bump(&mut self) {
        self.pos += 1;
    }

    fn expr(&mut self) -> Result<MultiPoly, ParseError> {
        let mut neg = false;
        match self.peek() {
            Tok::Op('-') => {
                neg = true;
                self.bump();
            }
            Tok::Op('+') => self.bump(),
            _ => {}
        }
        let mut acc = self.term()?;
        if neg {
            acc = acc.neg();
        }
        loop {
            match self.peek() {
                Tok::Op('+') => {
                    self.bump();
                    acc = acc.add(&self.term()?);
                }
                Tok::Op('-') => {
                    self.bump();
                    acc = acc.sub(&self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<MultiPoly, ParseError> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Tok::Op('*') => {
                    self.bump();
                    acc = acc.mul(&self.factor()?);
                }
                Tok::Op('/') => {
                    self.bump();
                    let at = self.pos;
                    let d = self.factor()?;
                    let c = match d.constant_value() {
                        Some(c) if !c.is_zero() => c,
                        _ => {
                            self.pos = at;
                            return self.err("division is only allowed by a nonzero constant");
                        }
                    };
                    match self.ring.tower().inv(&c) {
                        Ok(inv) => acc = acc.scale(&inv),
                        Err(e) => {
                            self.pos = at;
                            return self.err(format!("cannot divide: {e}"));
                        }
                    }
                }
                Tok::Int(_) | Tok::Name(_) | Tok::Op('(') => {
                    return self.err("implicit multiplication is not allowed; use `*`");
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<MultiPoly, ParseError> {
        let base = self.atom()?;
        if self.peek() == &Tok::Op('^') {
            self.bump();
            let Tok::Int(n) = self.peek().clone() else {
                return self.err("exponent must be a nonnegative integer literal");
            };
            let Ok(n) = u32::try_from(n) else {
                return self.err("exponent too large");
            };
            self.bump();
            return Ok(base.pow(n));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<MultiPoly, ParseError> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(MultiPoly::constant(self.ring, Coeff::from_rational(BigRational::from_integer(n))))
            }
            Tok::Name(s) => {
                if let Some(v) = self.ring.var_index(&s) {
                    self.bump();
                    Ok(MultiPoly::var(self.ring, v))
                } else if let Some(k) = self.ring.tower().index_of(&s) {
                    self.bump();
                    Ok(MultiPoly::constant(self.ring, Coeff::generator(k)))
                } else {
                    self.err(format!("unknown symbol `{s}`"))
                }
            }
            Tok::Op('(') => {
                self.bump();
                let e = self.expr()?;
                if self.peek() != &Tok::Op(')') {
                    return self.err("expected `)`");
                }
                self.bump();
                Ok(e)
            }
            Tok::End => self.err("unexpected end of input"),
            Tok::Op(c) => self.err(format!("unexpected `{c}`")),
        }
    }
}

/// Parse a polynomial in the ring's variables over its tower.
pub fn parse_poly(ring: &Arc<PolyRing>, text: &str) -> Result<MultiPoly, ParseError> {
    let lex = lex(text)?;
    let mut p = Parser { ring, lex, pos: 0 };
    let e = p.expr()?;
    if p.peek() != &Tok::End {
        return match p.peek() {
            Tok::Op(')') => p.err("unbalanced `)`"),
            _ => p.err("implicit multiplication is not allowed; use `*`"),
        };
    }
    Ok(e)
}

/// Parse a constant of the tower.
pub fn parse_coeff(tower: &Arc<FieldTower>, text: &str) -> Result<Coeff, ParseError> {
    let ring = PolyRing::new(tower.clone(), &[]);
    let p = parse_poly(&ring, text)?;
    Ok(p.constant_value().unwrap())
}

/// Build a tower from lines `name: transcendental` or `name: minpoly = <poly in name>`.
/// Errors report the 1-based index of the offending line.
pub fn parse_tower(lines: &[String]) -> Result<Arc<FieldTower>, ParseError> {
    let mut tower = FieldTower::rationals();
    for (i, line) in lines.iter().enumerate() {
        let at = |column: usize, message: String| ParseError { line: i + 1, column, message };
        let Some((name, rest)) = line.split_once(':') else {
            return Err(at(1, "expected `name: transcendental` or `name: minpoly = ...`".into()));
        };
        let name = name.trim();
        if name.is_empty() || !name.chars().all(|c| c.is_alphanumeric() || c == '_') || name.starts_with(|c: char| c.is_ascii_digit()) {
            return Err(at(1, format!("invalid generator name `{name}`")));
        }
        let body = rest.trim();
        let offset = line.len() - rest.trim_start().len() + 1;
        let step = if body == "transcendental" {
            ExtensionStep::transcendental(name)
        } else if let Some(poly) = body.strip_prefix("minpoly") {
            let poly = poly.trim_start();
            let Some(poly) = poly.strip_prefix('=') else {
                return Err(at(offset, "expected `=` after `minpoly`".into()));
            };
            let col = line.len() - poly.len() + 1;
            let ring = PolyRing::new(tower.clone(), &[name]);
            let p = parse_poly(&ring, poly).map_err(|e| at(col + e.column - 1, e.message))?;
            let coeffs = p.to_univariate(0).unwrap();
            ExtensionStep::algebraic(name, coeffs)
        } else {
            return Err(at(offset, "expected `transcendental` or `minpoly = ...`".into()));
        };
        tower = tower.extend(step).map_err(|e| at(1, e.to_string()))?;
    }
    Ok(tower)
}
