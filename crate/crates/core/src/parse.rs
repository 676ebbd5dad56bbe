//! Text grammar for polynomials.
//!
//! ```text
//! poly    := [sign] term (sign term)*
//! term    := factor (["*"] factor)*
//! factor  := real | "i" | "(" complex ")" | ("z" | "w") ["^" nat]
//!          | ("e^(" | "exp(") "i" ["*"] angle ")"
//! complex := [sign] part (sign part)*        part := real ["i"] | "i"
//! angle   := [sign] atom (("*" | "/") atom)*  atom := real | "pi" | "π"
//! ```
//!
//! Whitespace is insignificant. Exponents must be non-negative.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::poly::{LatticePoint, Polynomial};

pub fn parse_polynomial(text: &str) -> Result<Polynomial> {
    let chars: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
    // positions are reported in the whitespace-stripped input
    let mut p = Parser { s: &chars, pos: 0 };
    let mut terms: BTreeMap<LatticePoint, Complex64> = BTreeMap::new();
    if p.s.is_empty() {
        return Err(p.err("expected a term"));
    }
    let mut sign = p.sign().unwrap_or(1.0);
    loop {
        let (alpha, coef) = p.term()?;
        *terms.entry(alpha).or_insert(Complex64::new(0.0, 0.0)) += coef * sign;
        if p.pos == p.s.len() {
            break;
        }
        sign = match p.sign() {
            Some(s) => s,
            None => return Err(p.err("expected '+' or '-'")),
        };
    }
    Polynomial::from_terms(terms)
}

struct Parser<'a> {
    s: &'a [char],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, message: &str) -> Error {
        Error::Syntax { position: self.pos, message: message.to_string() }
    }

    fn peek(&self) -> Option<char> {
        self.s.get(self.pos).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_str(&mut self, word: &str) -> bool {
        let w: Vec<char> = word.chars().collect();
        if self.s[self.pos..].starts_with(&w) {
            self.pos += w.len();
            true
        } else {
            false
        }
    }

    fn sign(&mut self) -> Option<f64> {
        if self.eat('+') {
            Some(1.0)
        } else if self.eat('-') {
            Some(-1.0)
        } else {
            None
        }
    }

    fn starts_factor(&self) -> bool {
        match self.peek() {
            Some(c) => c.is_ascii_digit() || matches!(c, '.' | 'i' | '(' | 'z' | 'w' | 'e'),
            None => false,
        }
    }

    fn term(&mut self) -> Result<(LatticePoint, Complex64)> {
        let mut coef = Complex64::new(1.0, 0.0);
        let (mut i, mut j) = (0i64, 0i64);
        if !self.starts_factor() {
            return Err(self.err("expected a term"));
        }
        loop {
            match self.peek() {
                Some('z') => {
                    self.pos += 1;
                    i += self.exponent()?;
                }
                Some('w') => {
                    self.pos += 1;
                    j += self.exponent()?;
                }
                Some('e') => coef *= self.phase()?,
                Some('(') => {
                    self.pos += 1;
                    coef *= self.complex()?;
                    if !self.eat(')') {
                        return Err(self.err("expected ')'"));
                    }
                }
                Some('i') => {
                    self.pos += 1;
                    coef *= Complex64::new(0.0, 1.0);
                }
                Some(c) if c.is_ascii_digit() || c == '.' => coef *= self.real()?,
                _ => return Err(self.err("expected a factor")),
            }
            if self.eat('*') {
                if !self.starts_factor() {
                    return Err(self.err("expected a factor after '*'"));
                }
                continue;
            }
            if !self.starts_factor() {
                break;
            }
        }
        Ok((LatticePoint::new(i, j), coef))
    }

    fn exponent(&mut self) -> Result<i64> {
        if !self.eat('^') {
            return Ok(1);
        }
        if self.peek() == Some('-') {
            return Err(Error::NegativeExponent { position: self.pos });
        }
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected a natural exponent"));
        }
        let digits: String = self.s[start..self.pos].iter().collect();
        digits.parse::<i64>().map_err(|_| self.err("exponent too large"))
    }

    fn real(&mut self) -> Result<f64> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == '.') {
            self.pos += 1;
        }
        // scientific exponent only when followed by a digit or a signed digit
        if matches!(self.peek(), Some('e') | Some('E')) {
            let next = self.s.get(self.pos + 1).copied();
            let after = self.s.get(self.pos + 2).copied();
            let digit = |c: Option<char>| matches!(c, Some(d) if d.is_ascii_digit());
            if digit(next) || (matches!(next, Some('+') | Some('-')) && digit(after)) {
                self.pos += 2;
                while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    self.pos += 1;
                }
            }
        }
        let lit: String = self.s[start..self.pos].iter().collect();
        lit.parse::<f64>().map_err(|_| Error::Syntax { position: start, message: format!("invalid number '{lit}'") })
    }

    fn complex(&mut self) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut sign = self.sign().unwrap_or(1.0);
        loop {
            let part = if self.eat('i') {
                Complex64::new(0.0, 1.0)
            } else if matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == '.') {
                let v = self.real()?;
                if self.eat('i') {
                    Complex64::new(0.0, v)
                } else {
                    Complex64::new(v, 0.0)
                }
            } else {
                return Err(self.err("expected a number"));
            };
            acc += part * sign;
            match self.sign() {
                Some(s) => sign = s,
                None => break,
            }
        }
        Ok(acc)
    }

    fn phase(&mut self) -> Result<Complex64> {
        if !(self.eat_str("e^(") || self.eat_str("exp(")) {
            return Err(self.err("expected 'e^(' or 'exp('"));
        }
        if !self.eat('i') {
            return Err(self.err("expected 'i' in phase factor"));
        }
        self.eat('*');
        let angle = self.angle()?;
        if !self.eat(')') {
            return Err(self.err("expected ')'"));
        }
        Ok(Complex64::from_polar(1.0, angle))
    }

    fn angle(&mut self) -> Result<f64> {
        let sign = self.sign().unwrap_or(1.0);
        let mut value = self.angle_atom()?;
        loop {
            if self.eat('*') {
                value *= self.angle_atom()?;
            } else if self.eat('/') {
                value /= self.angle_atom()?;
            } else if matches!(self.peek(), Some('p') | Some('π')) {
                value *= self.angle_atom()?;
            } else {
                break;
            }
        }
        Ok(sign * value)
    }

    fn angle_atom(&mut self) -> Result<f64> {
        if self.eat_str("pi") || self.eat('π') {
            Ok(PI)
        } else if matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == '.') {
            self.real()
        } else {
            Err(self.err("expected a number or 'pi'"))
        }
    }
}
