//! Boolean expressions used for cell functions.
//!
//! Grammar, lowest precedence first: `a | b`, `a ^ b`, `a & b`, `!a`,
//! parentheses, pin names and the constants `0`/`1`.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(bool),
    /// Index into the cell's input pin list.
    Pin(usize),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Xor(Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExprError {
    pub position: usize,
    pub message: String,
}

impl fmt::Display for ExprError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at offset {}", self.message, self.position)
    }
}

impl Expr {
    pub fn parse(text: &str, pins: &[String]) -> Result<Expr, ExprError> {
        let mut p = Parser {
            src: text.as_bytes(),
            pos: 0,
            pins,
        };
        let e = p.or()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(e)
    }

    /// Evaluates with bit `i` of `inputs` holding pin `i`.
    pub fn eval(&self, inputs: u32) -> bool {
        match self {
            Expr::Const(b) => *b,
            Expr::Pin(i) => (inputs >> i) & 1 == 1,
            Expr::Not(a) => !a.eval(inputs),
            Expr::And(a, b) => a.eval(inputs) && b.eval(inputs),
            Expr::Or(a, b) => a.eval(inputs) || b.eval(inputs),
            Expr::Xor(a, b) => a.eval(inputs) ^ b.eval(inputs),
        }
    }

    /// Full truth table over `arity` inputs, indexed as in [`Expr::eval`].
    pub fn truth_table(&self, arity: usize) -> Vec<bool> {
        (0..1u32 << arity).map(|m| self.eval(m)).collect()
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    pins: &'a [String],
}

impl Parser<'_> {
    fn error(&self, message: &str) -> ExprError {
        ExprError {
            position: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.src.get(self.pos) == Some(&c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn or(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.xor()?;
        while self.eat(b'|') {
            lhs = Expr::Or(Box::new(lhs), Box::new(self.xor()?));
        }
        Ok(lhs)
    }

    fn xor(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.and()?;
        while self.eat(b'^') {
            lhs = Expr::Xor(Box::new(lhs), Box::new(self.and()?));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        while self.eat(b'&') {
            lhs = Expr::And(Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat(b'!') {
            return Ok(Expr::Not(Box::new(self.unary()?)));
        }
        if self.eat(b'(') {
            let e = self.or()?;
            if !self.eat(b')') {
                return Err(self.error("expected ')'"));
            }
            return Ok(e);
        }
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let word = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
        match word {
            "" => Err(self.error("expected operand")),
            "0" => Ok(Expr::Const(false)),
            "1" => Ok(Expr::Const(true)),
            name => match self.pins.iter().position(|p| p == name) {
                Some(i) => Ok(Expr::Pin(i)),
                None => {
                    self.pos = start;
                    Err(self.error(&format!("unknown input pin '{name}'")))
                }
            },
        }
    }
}
