//! Recursive-descent parser for the expression grammar used in config files
//! and CLI flags: real literals, chart variables, `+ - * /`, unary minus,
//! parentheses, and `^` with a literal real exponent. Division is only
//! allowed by numeric literals; products are expanded on the spot.

use super::{Monomial, PowerExpr, Var};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokenize(src: &'a str) -> Result<Vec<(Tok, usize)>> {
        let mut lx = Lexer { src: src.as_bytes(), pos: 0 };
        let mut out = Vec::new();
        while let Some(t) = lx.next_token()? {
            out.push(t);
        }
        Ok(out)
    }

    fn next_token(&mut self) -> Result<Option<(Tok, usize)>> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if self.pos >= self.src.len() {
            return Ok(None);
        }
        let start = self.pos;
        let c = self.src[self.pos];
        let tok = match c {
            b'+' => {
                self.pos += 1;
                Tok::Plus
            }
            b'-' => {
                self.pos += 1;
                Tok::Minus
            }
            b'*' => {
                self.pos += 1;
                Tok::Star
            }
            b'/' => {
                self.pos += 1;
                Tok::Slash
            }
            b'^' => {
                self.pos += 1;
                Tok::Caret
            }
            b'(' => {
                self.pos += 1;
                Tok::LParen
            }
            b')' => {
                self.pos += 1;
                Tok::RParen
            }
            b'0'..=b'9' | b'.' => {
                let mut end = self.pos;
                while end < self.src.len()
                    && (self.src[end].is_ascii_digit() || self.src[end] == b'.')
                {
                    end += 1;
                }
                // optional exponent part
                if end < self.src.len() && (self.src[end] == b'e' || self.src[end] == b'E') {
                    let mut e = end + 1;
                    if e < self.src.len() && (self.src[e] == b'+' || self.src[e] == b'-') {
                        e += 1;
                    }
                    if e < self.src.len() && self.src[e].is_ascii_digit() {
                        while e < self.src.len() && self.src[e].is_ascii_digit() {
                            e += 1;
                        }
                        end = e;
                    }
                }
                let text = std::str::from_utf8(&self.src[self.pos..end]).unwrap();
                let value: f64 = text.parse().map_err(|_| Error::Syntax {
                    offset: start,
                    msg: format!("invalid number `{text}`"),
                })?;
                self.pos = end;
                Tok::Num(value)
            }
            c if c.is_ascii_alphabetic() => {
                let mut end = self.pos;
                while end < self.src.len()
                    && (self.src[end].is_ascii_alphanumeric() || self.src[end] == b'_')
                {
                    end += 1;
                }
                let name = std::str::from_utf8(&self.src[self.pos..end]).unwrap().to_string();
                self.pos = end;
                Tok::Ident(name)
            }
            other => {
                return Err(Error::Syntax {
                    offset: start,
                    msg: format!("unexpected character `{}`", other as char),
                })
            }
        };
        Ok(Some((tok, start)))
    }
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    idx: usize,
    chart: &'a [Var],
    len: usize,
}

/// Parse `text` over the given chart into a canonical [`PowerExpr`].
pub fn parse_expr(text: &str, chart: &[Var]) -> Result<PowerExpr> {
    let toks = Lexer::tokenize(text)?;
    let mut p = Parser { toks, idx: 0, chart, len: text.len() };
    let e = p.expr()?;
    if let Some((_, off)) = p.peek_with_offset() {
        return Err(Error::Syntax { offset: off, msg: "trailing input".into() });
    }
    Ok(e)
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.idx).map(|(t, _)| t)
    }

    fn peek_with_offset(&self) -> Option<(&Tok, usize)> {
        self.toks.get(self.idx).map(|(t, o)| (t, *o))
    }

    fn offset(&self) -> usize {
        self.toks.get(self.idx).map(|(_, o)| *o).unwrap_or(self.len)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.idx).map(|(t, _)| t.clone());
        self.idx += 1;
        t
    }

    fn expr(&mut self) -> Result<PowerExpr> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    acc = acc.add(&self.term()?);
                }
                Some(Tok::Minus) => {
                    self.bump();
                    acc = acc.sub(&self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<PowerExpr> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    acc = acc.mul(&self.unary()?);
                }
                Some(Tok::Slash) => {
                    self.bump();
                    let off = self.offset();
                    let rhs = self.unary()?;
                    let c = rhs.as_constant().ok_or(Error::Syntax {
                        offset: off,
                        msg: "division only by numeric literals".into(),
                    })?;
                    if c == 0.0 {
                        return Err(Error::Syntax { offset: off, msg: "division by zero".into() });
                    }
                    acc = acc.scale(1.0 / c);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<PowerExpr> {
        if let Some(Tok::Minus) = self.peek() {
            self.bump();
            return Ok(self.unary()?.neg());
        }
        self.power()
    }

    fn power(&mut self) -> Result<PowerExpr> {
        let base = self.atom()?;
        if let Some(Tok::Caret) = self.peek() {
            self.bump();
            let off = self.offset();
            let exp = self.exponent_literal()?;
            return if exp.fract() == 0.0 && exp >= 0.0 && exp <= 64.0 {
                base.powi(exp as i32)
            } else {
                base.pow_monomial(exp).map_err(|e| match e {
                    Error::Domain(msg) => Error::Syntax { offset: off, msg },
                    other => other,
                })
            };
        }
        Ok(base)
    }

    fn exponent_literal(&mut self) -> Result<f64> {
        let off = self.offset();
        match self.bump() {
            Some(Tok::Num(x)) => Ok(x),
            Some(Tok::Minus) => match self.bump() {
                Some(Tok::Num(x)) => Ok(-x),
                _ => Err(Error::Syntax { offset: off, msg: "expected numeric exponent".into() }),
            },
            Some(Tok::LParen) => {
                let sign = if let Some(Tok::Minus) = self.peek() {
                    self.bump();
                    -1.0
                } else {
                    1.0
                };
                let x = match self.bump() {
                    Some(Tok::Num(x)) => x,
                    Some(Tok::Ident(name)) => return Err(Error::NonLiteralExponent(name)),
                    _ => {
                        return Err(Error::Syntax {
                            offset: off,
                            msg: "expected numeric exponent".into(),
                        })
                    }
                };
                match self.bump() {
                    Some(Tok::RParen) => Ok(sign * x),
                    _ => Err(Error::Syntax { offset: off, msg: "unclosed exponent".into() }),
                }
            }
            Some(Tok::Ident(name)) => Err(Error::NonLiteralExponent(name)),
            _ => Err(Error::Syntax { offset: off, msg: "expected numeric exponent".into() }),
        }
    }

    fn atom(&mut self) -> Result<PowerExpr> {
        let off = self.offset();
        match self.bump() {
            Some(Tok::Num(x)) => Ok(PowerExpr::constant(x)),
            Some(Tok::Ident(name)) => {
                let var = self
                    .chart
                    .iter()
                    .find(|v| v.name() == name)
                    .ok_or(Error::UnknownVariable(name))?;
                Ok(PowerExpr::monomial(Monomial::new(1.0, [(var.clone(), 1.0)])))
            }
            Some(Tok::LParen) => {
                let e = self.expr()?;
                match self.bump() {
                    Some(Tok::RParen) => Ok(e),
                    _ => Err(Error::Syntax { offset: off, msg: "unclosed parenthesis".into() }),
                }
            }
            Some(tok) => Err(Error::Syntax { offset: off, msg: format!("unexpected `{tok:?}`") }),
            None => Err(Error::Syntax { offset: off, msg: "unexpected end of input".into() }),
        }
    }
}
