//! Recursive-descent parser for the coordinate expression grammar:
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := base ('^' integer)?
//! base   := number | ident | ident '(' expr ')' | '(' expr ')' | '-' base
//! ```
//!
//! Unary minus belongs to `base`, so `-x1^2` reads as `(-x1)^2`.

use std::sync::Arc;

use super::node::ScalarExpr;
use super::registry::FunctionRegistry;
use crate::error::{Error, Result};

pub fn parse_expr<S: AsRef<str>>(
    src: &str,
    coords: &[S],
    registry: &FunctionRegistry,
) -> Result<ScalarExpr> {
    let names: Vec<Arc<str>> = coords.iter().map(|s| Arc::from(s.as_ref())).collect();
    let mut p = Parser {
        src: src.as_bytes(),
        pos: 0,
        coords: &names,
        registry,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.syntax("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    coords: &'a [Arc<str>],
    registry: &'a FunctionRegistry,
}

impl<'a> Parser<'a> {
    fn syntax(&self, message: &str) -> Error {
        Error::Syntax {
            pos: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.syntax(&format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<ScalarExpr> {
        let mut acc = self.term()?;
        loop {
            if self.eat(b'+') {
                acc = acc.add(&self.term()?);
            } else if self.eat(b'-') {
                acc = acc.sub(&self.term()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<ScalarExpr> {
        let mut acc = self.factor()?;
        loop {
            if self.eat(b'*') {
                acc = acc.mul(&self.factor()?);
            } else if self.eat(b'/') {
                acc = acc.div(&self.factor()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn factor(&mut self) -> Result<ScalarExpr> {
        let base = self.base()?;
        if self.eat(b'^') {
            let negative = self.eat(b'-');
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(self.syntax("expected integer exponent"));
            }
            let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
            let k: i32 = text.parse().map_err(|_| Error::Syntax {
                pos: start,
                message: "exponent out of range".into(),
            })?;
            return Ok(base.powi(if negative { -k } else { k }));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<ScalarExpr> {
        match self.peek() {
            None => Err(self.syntax("unexpected end of input")),
            Some(b'-') => {
                self.pos += 1;
                Ok(self.base()?.neg())
            }
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(c) => Err(self.syntax(&format!("unexpected character `{}`", c as char))),
        }
    }

    fn number(&mut self) -> Result<ScalarExpr> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
        };
        digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            let exp_start = self.pos;
            digits(self);
            if exp_start == self.pos {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse::<f64>()
            .map(ScalarExpr::constant)
            .map_err(|_| Error::Syntax {
                pos: start,
                message: format!("malformed number `{text}`"),
            })
    }

    fn ident(&mut self) -> Result<ScalarExpr> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        if self.peek() == Some(b'(') {
            self.pos += 1;
            let arg = self.expr()?;
            self.expect(b')')?;
            return match name {
                "sqrt" => Ok(arg.sqrt()),
                "exp" => Ok(arg.exp()),
                _ => match self.registry.get(name) {
                    Some(def) => Ok(ScalarExpr::call(def, &arg)),
                    None => Err(Error::UnknownIdentifier {
                        pos: start,
                        name: name.to_string(),
                    }),
                },
            };
        }
        match self.coords.iter().position(|c| &**c == name) {
            Some(index) => Ok(ScalarExpr::var(index, self.coords[index].clone())),
            None => Err(Error::UnknownIdentifier {
                pos: start,
                name: name.to_string(),
            }),
        }
    }
}
