//! Inline field syntax.
//!
//! ```text
//! field := "V" "=" ( "Id" | "diag(" expr "," expr "," expr "," expr ")" | "[" expr ("," expr){9} "]" )
//! expr  := ["-"] term (("+" | "-") term)*
//! term  := factor (("*" factor) | ("/" factor))*
//! factor:= atom ["^" integer]
//! atom  := number | "nu0".."nu3" | "(" expr ")" | "-" atom
//! ```
//!
//! The bracket list holds the upper triangle row by row.  Division is
//! allowed only by nonzero constants.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::poly::{Poly, Q};
use crate::spin7::SymMatrixField;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("parse error at {pos}: {msg}")]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(s: &'a str) -> Self {
        Parser { s: s.as_bytes(), pos: 0 }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError { pos: self.pos, msg: msg.into() })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(format!("expected '{}'", c as char))
        }
    }

    fn eat_word(&mut self, w: &str) -> bool {
        self.skip_ws();
        if self.s[self.pos..].starts_with(w.as_bytes()) {
            self.pos += w.len();
            true
        } else {
            false
        }
    }

    fn at_end(&mut self) -> bool {
        self.peek().is_none()
    }

    fn expr(&mut self) -> Result<Poly, ParseError> {
        let mut acc = if self.eat(b'-') { -self.term()? } else { self.term()? };
        loop {
            if self.eat(b'+') {
                acc += &self.term()?;
            } else if self.eat(b'-') {
                acc -= &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Poly, ParseError> {
        let mut acc = self.factor()?;
        loop {
            if self.eat(b'*') {
                acc = &acc * &self.factor()?;
            } else if self.eat(b'/') {
                let at = self.pos;
                let d = self.factor()?;
                if !d.is_constant() || d.is_zero() {
                    return Err(ParseError { pos: at, msg: "division only by nonzero constants".into() });
                }
                acc = acc.scale(&(Q::one() / d.constant_term()));
            } else {
                return Ok(acc);
            }
        }
    }

    fn factor(&mut self) -> Result<Poly, ParseError> {
        let base = self.atom()?;
        if self.eat(b'^') {
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            let digits = std::str::from_utf8(&self.s[start..self.pos]).unwrap();
            let e: u32 = match digits.parse() {
                Ok(e) if e <= 64 => e,
                _ => return Err(ParseError { pos: start, msg: "exponent must be an integer in 0..=64".into() }),
            };
            return Ok(base.pow(e));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Poly, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(b'-') => {
                self.pos += 1;
                Ok(-self.atom()?)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(b'n') => {
                if self.eat_word("nu") {
                    match self.s.get(self.pos) {
                        Some(d @ b'0'..=b'3') => {
                            self.pos += 1;
                            Ok(Poly::var((d - b'0') as usize))
                        }
                        _ => self.err("expected nu0, nu1, nu2 or nu3"),
                    }
                } else {
                    self.err("unknown identifier")
                }
            }
            Some(_) => self.err("unexpected character"),
            None => self.err("unexpected end of input"),
        }
    }

    /// Integer or decimal literal, read exactly.
    fn number(&mut self) -> Result<Poly, ParseError> {
        let start = self.pos;
        while self.pos < self.s.len() && (self.s[self.pos].is_ascii_digit() || self.s[self.pos] == b'.') {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.s[start..self.pos]).unwrap();
        let (int, frac) = text.split_once('.').unwrap_or((text, ""));
        if frac.contains('.') || (int.is_empty() && frac.is_empty()) {
            return Err(ParseError { pos: start, msg: format!("bad number '{text}'") });
        }
        let digits = format!("{int}{frac}");
        let num: BigInt = digits.parse().map_err(|_| ParseError { pos: start, msg: format!("bad number '{text}'") })?;
        let den = num_traits::pow(BigInt::from(10), frac.len());
        Ok(Poly::constant(Q::new(num, den)))
    }
}

pub fn parse_poly(s: &str) -> Result<Poly, ParseError> {
    let mut p = Parser::new(s);
    let e = p.expr()?;
    if !p.at_end() {
        return p.err("trailing input");
    }
    Ok(e)
}

/// `V=Id`, `V=diag(p0,p1,p2,p3)` or `V=[v00,v01,v02,v03,v11,v12,v13,v22,v23,v33]`.
pub fn parse_field(s: &str) -> Result<SymMatrixField, ParseError> {
    let mut p = Parser::new(s);
    if !p.eat(b'V') {
        return p.err("field must start with 'V='");
    }
    p.expect(b'=')?;
    let v = if p.eat_word("Id") {
        SymMatrixField::identity()
    } else if p.eat_word("diag") {
        p.expect(b'(')?;
        let items = list(&mut p, b')')?;
        if items.len() != 4 {
            return p.err(format!("diag needs 4 entries, found {}", items.len()));
        }
        SymMatrixField::diag(items.try_into().unwrap())
    } else if p.eat(b'[') {
        let items = list(&mut p, b']')?;
        if items.len() != 10 {
            return p.err(format!("symmetric list needs 10 entries, found {}", items.len()));
        }
        SymMatrixField::from_upper(&items)
    } else {
        return p.err("expected Id, diag(...) or [...]");
    };
    if !p.at_end() {
        return p.err("trailing input");
    }
    Ok(v)
}

fn list(p: &mut Parser<'_>, close: u8) -> Result<Vec<Poly>, ParseError> {
    let mut items = vec![p.expr()?];
    while p.eat(b',') {
        items.push(p.expr()?);
    }
    p.expect(close)?;
    Ok(items)
}

/// A rational literal such as `3`, `-2/5` or `0.25`.
pub fn parse_rational(s: &str) -> Result<Q, ParseError> {
    let p = parse_poly(s)?;
    if !p.is_constant() {
        return Err(ParseError { pos: 0, msg: "expected a constant".into() });
    }
    Ok(if p.is_zero() { Q::zero() } else { p.constant_term() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{nu, q, qr};

    #[test]
    fn arithmetic() {
        assert_eq!(parse_poly("nu1*nu2*nu3").unwrap(), &(&nu(1) * &nu(2)) * &nu(3));
        assert_eq!(parse_poly("(nu0 + 1)^2").unwrap(), (&nu(0) + &Poly::one()).pow(2));
        assert_eq!(parse_poly("-nu1 - 2*nu2").unwrap(), &(-&nu(1)) - &nu(2).scale(&q(2)));
        assert_eq!(parse_poly("nu1/4 + 0.5").unwrap(), &nu(1).scale(&qr(1, 4)) + &Poly::constant(qr(1, 2)));
        assert_eq!(parse_poly("2^3").unwrap(), Poly::int(8));
    }

    #[test]
    fn fields() {
        assert_eq!(parse_field("V=Id").unwrap(), SymMatrixField::identity());
        assert_eq!(
            parse_field("V=diag(nu0,1,1,1)").unwrap(),
            SymMatrixField::diag([nu(0), Poly::one(), Poly::one(), Poly::one()])
        );
        let v = parse_field("V=[1,nu0,0,0,2,0,0,3,0,4]").unwrap();
        assert_eq!(v.get(1, 0), &nu(0));
        assert_eq!(v.get(3, 3), &Poly::int(4));
    }

    #[test]
    fn rejects() {
        assert!(parse_poly("nu1/nu2").is_err());
        assert!(parse_poly("nu4").is_err());
        assert!(parse_poly("1/0").is_err());
        assert!(parse_poly("x").is_err());
        assert!(parse_poly("nu1 +").is_err());
        assert!(parse_poly("(nu1").is_err());
        assert!(parse_field("V=diag(1,2,3)").is_err());
        assert!(parse_field("V=[1,2]").is_err());
        assert!(parse_field("W=Id").is_err());
        assert!(parse_field("V=Id extra").is_err());
    }

    #[test]
    fn rationals() {
        assert_eq!(parse_rational("-2/5").unwrap(), qr(-2, 5));
        assert_eq!(parse_rational("0").unwrap(), q(0));
        assert!(parse_rational("nu0").is_err());
    }
}
