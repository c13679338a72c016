//! Infix parser for the expression grammar used in scenario files and form
//! serialization.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := factor (('*' | '/') factor)*
//! factor  := '-' factor | power
//! power   := primary ('^' exponent)?
//! exponent:= '-'? integer | '(' '-'? integer ')'
//! primary := number | name | name '(' expr ')' | '(' expr ')'
//! number  := digits ('.' digits)?
//! name    := [A-Za-z_][A-Za-z0-9_]*
//! ```
//!
//! The only recognized function names are `sin`, `cos`, `exp`. Rational
//! constants are written with division (`1/2`); decimals parse exactly
//! (`0.25` is 1/4). There is no implicit multiplication.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use super::{Expression, ParseError};

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

pub fn parse(input: &str) -> Result<Expression, ParseError> {
    let mut p = Parser { src: input.as_bytes(), pos: 0 };
    p.skip_ws();
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(ParseError::new(p.pos, "trailing input"));
    }
    Ok(e)
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            self.skip_ws();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(ParseError::new(self.pos, format!("expected '{}'", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expression, ParseError> {
        let mut acc = self.term()?;
        loop {
            if self.eat(b'+') {
                acc = acc + self.term()?;
            } else if self.eat(b'-') {
                acc = acc - self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Expression, ParseError> {
        let mut acc = self.factor()?;
        loop {
            if self.eat(b'*') {
                acc = acc * self.factor()?;
            } else if self.eat(b'/') {
                let pos = self.pos;
                let rhs = self.factor()?;
                acc = acc.checked_div(&rhs).map_err(|_| ParseError::new(pos, "division by zero"))?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn factor(&mut self) -> Result<Expression, ParseError> {
        if self.eat(b'-') {
            return Ok(-self.factor()?);
        }
        let base = self.primary()?;
        if self.eat(b'^') {
            let e = self.exponent()?;
            return base
                .checked_powi(e)
                .map_err(|_| ParseError::new(self.pos, "zero raised to a negative power"));
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<i64, ParseError> {
        let paren = self.eat(b'(');
        let neg = self.eat(b'-');
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(ParseError::new(self.pos, "expected integer exponent"));
        }
        let digits = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let value: i64 = digits
            .parse()
            .map_err(|_| ParseError::new(start, "exponent out of range"))?;
        self.skip_ws();
        if paren {
            self.expect(b')')?;
        }
        Ok(if neg { -value } else { value })
    }

    fn primary(&mut self) -> Result<Expression, ParseError> {
        self.skip_ws();
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                self.skip_ws();
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.name(),
            _ => Err(ParseError::new(self.pos, "expected number, name, or '('")),
        }
    }

    fn number(&mut self) -> Result<Expression, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let int_part = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let mut value = BigRational::from_integer(
            int_part
                .parse::<BigInt>()
                .map_err(|_| ParseError::new(start, "bad integer"))?,
        );
        if self.peek() == Some(b'.') {
            self.pos += 1;
            let fstart = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if self.pos == fstart {
                return Err(ParseError::new(self.pos, "expected digits after '.'"));
            }
            let frac = std::str::from_utf8(&self.src[fstart..self.pos]).unwrap();
            let numer: BigInt = frac.parse().unwrap();
            let mut denom = BigInt::one();
            for _ in 0..frac.len() {
                denom *= 10;
            }
            value += BigRational::new(numer, denom);
        }
        self.skip_ws();
        Ok(Expression::rational_big(value))
    }

    fn name(&mut self) -> Result<Expression, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string();
        self.skip_ws();
        if self.peek() == Some(b'(') {
            self.pos += 1;
            self.skip_ws();
            let arg = self.expr()?;
            self.expect(b')')?;
            match name.as_str() {
                "sin" => Ok(arg.sin()),
                "cos" => Ok(arg.cos()),
                "exp" => Ok(arg.exp()),
                other => Err(ParseError::new(start, format!("unknown function '{other}'"))),
            }
        } else {
            Ok(Expression::var(&name))
        }
    }
}
