//! Right-hand-side expression grammar:
//!
//! ```text
//! expr   := ('+' | '-')? term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := base ('^' factor)?            (right-associative)
//! base   := number | 't' | 'x' | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! with functions sqrt, exp, ln, sin, cos, abs. Subtrees without variables
//! are folded to constants at parse time; domain issues (negative radicand,
//! log of a nonpositive number, division by zero) are deferred to
//! evaluation so they can be reported with the offending (t, x).

use std::fmt;

use ufde::{DomainViolation, Rhs};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at position {}", self.message, self.position)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Exp,
    Ln,
    Sin,
    Cos,
    Abs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    T,
    X,
    Neg(Box<Expr>),
    Call(Func, Box<Expr>),
    Bin(Op, Box<Expr>, Box<Expr>),
}

impl Expr {
    /// Strict evaluation; domain violations are errors.
    pub fn eval(&self, t: f64, x: f64) -> Result<f64, DomainViolation> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::T => t,
            Expr::X => x,
            Expr::Neg(e) => -e.eval(t, x)?,
            Expr::Call(f, e) => apply(*f, e.eval(t, x)?)?,
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(t, x)?, b.eval(t, x)?);
                match op {
                    Op::Add => a + b,
                    Op::Sub => a - b,
                    Op::Mul => a * b,
                    Op::Div => {
                        if b == 0.0 {
                            return Err(DomainViolation {
                                reason: "division by zero",
                            });
                        }
                        a / b
                    }
                    Op::Pow => pow_checked(a, b)?,
                }
            }
        })
    }

    /// Clamped evaluation: out-of-domain arguments of sqrt/ln/pow are moved
    /// to the domain boundary and flagged. Division by zero still produces
    /// an IEEE infinity (flagged) for the solver's non-finite check.
    pub fn eval_clamped(&self, t: f64, x: f64) -> (f64, bool) {
        match self {
            Expr::Num(v) => (*v, false),
            Expr::T => (t, false),
            Expr::X => (x, false),
            Expr::Neg(e) => {
                let (v, c) = e.eval_clamped(t, x);
                (-v, c)
            }
            Expr::Call(f, e) => {
                let (v, c) = e.eval_clamped(t, x);
                let (r, c2) = apply_clamped(*f, v);
                (r, c | c2)
            }
            Expr::Bin(op, a, b) => {
                let (a, ca) = a.eval_clamped(t, x);
                let (b, cb) = b.eval_clamped(t, x);
                let (v, c) = match op {
                    Op::Add => (a + b, false),
                    Op::Sub => (a - b, false),
                    Op::Mul => (a * b, false),
                    Op::Div => (a / b, b == 0.0),
                    Op::Pow => {
                        if a < 0.0 && b.fract() != 0.0 {
                            (0.0f64.powf(b), true)
                        } else {
                            (powi_or_powf(a, b), false)
                        }
                    }
                };
                (v, ca | cb | c)
            }
        }
    }

    fn is_const(&self) -> bool {
        match self {
            Expr::Num(_) => true,
            Expr::T | Expr::X => false,
            Expr::Neg(e) | Expr::Call(_, e) => e.is_const(),
            Expr::Bin(_, a, b) => a.is_const() && b.is_const(),
        }
    }

    /// Fold constant subtrees that evaluate cleanly; leave the rest alone so
    /// domain errors still surface at evaluation time.
    fn folded(self) -> Expr {
        if self.is_const() {
            if let Ok(v) = self.eval(0.0, 0.0) {
                if v.is_finite() {
                    return Expr::Num(v);
                }
            }
        }
        self
    }
}

fn apply(f: Func, v: f64) -> Result<f64, DomainViolation> {
    Ok(match f {
        Func::Sqrt => {
            if v < 0.0 {
                return Err(DomainViolation {
                    reason: "sqrt of negative argument",
                });
            }
            v.sqrt()
        }
        Func::Ln => {
            if v <= 0.0 {
                return Err(DomainViolation {
                    reason: "log of a nonpositive argument",
                });
            }
            v.ln()
        }
        Func::Exp => v.exp(),
        Func::Sin => v.sin(),
        Func::Cos => v.cos(),
        Func::Abs => v.abs(),
    })
}

fn apply_clamped(f: Func, v: f64) -> (f64, bool) {
    match f {
        Func::Sqrt if v < 0.0 => (0.0, true),
        Func::Ln if v <= 0.0 => (f64::MIN_POSITIVE.ln(), true),
        _ => (apply(f, v).expect("in-domain by construction"), false),
    }
}

fn pow_checked(a: f64, b: f64) -> Result<f64, DomainViolation> {
    if a < 0.0 && b.fract() != 0.0 {
        return Err(DomainViolation {
            reason: "negative base with fractional exponent",
        });
    }
    if a == 0.0 && b < 0.0 {
        return Err(DomainViolation {
            reason: "zero base with negative exponent",
        });
    }
    Ok(powi_or_powf(a, b))
}

fn powi_or_powf(a: f64, b: f64) -> f64 {
    if b.fract() == 0.0 && b.abs() <= i32::MAX as f64 {
        a.powi(b as i32)
    } else {
        a.powf(b)
    }
}

impl Rhs for Expr {
    fn eval(&self, t: f64, x: f64) -> Result<f64, DomainViolation> {
        Expr::eval(self, t, x)
    }

    fn eval_clamped(&self, t: f64, x: f64) -> Result<(f64, bool), DomainViolation> {
        Ok(Expr::eval_clamped(self, t, x))
    }
}

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

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' => i += 1,
            '+' => {
                toks.push((i, Tok::Plus));
                i += 1;
            }
            '-' => {
                toks.push((i, Tok::Minus));
                i += 1;
            }
            '*' => {
                toks.push((i, Tok::Star));
                i += 1;
            }
            '/' => {
                toks.push((i, Tok::Slash));
                i += 1;
            }
            '^' => {
                toks.push((i, Tok::Caret));
                i += 1;
            }
            '(' => {
                toks.push((i, Tok::LParen));
                i += 1;
            }
            ')' => {
                toks.push((i, Tok::RParen));
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() && matches!(bytes[i] as char, '0'..='9' | '.') {
                    i += 1;
                }
                // optional exponent
                if i < bytes.len() && matches!(bytes[i] as char, 'e' | 'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && matches!(bytes[j] as char, '+' | '-') {
                        j += 1;
                    }
                    if j < bytes.len() && (bytes[j] as char).is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let lit = &text[start..i];
                let v: f64 = lit.parse().map_err(|_| ParseError {
                    position: start,
                    message: format!("invalid number literal '{lit}'"),
                })?;
                toks.push((start, Tok::Num(v)));
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < bytes.len()
                    && matches!(bytes[i] as char, 'a'..='z' | 'A'..='Z' | '0'..='9' | '_')
                {
                    i += 1;
                }
                toks.push((start, Tok::Ident(text[start..i].to_string())));
            }
            _ => {
                return Err(ParseError {
                    position: i,
                    message: format!("unexpected character '{c}'"),
                })
            }
        }
    }
    Ok(toks)
}

struct Parser<'a> {
    toks: &'a [(usize, Tok)],
    pos: usize,
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks
            .get(self.pos)
            .map(|(p, _)| *p)
            .unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let negate = match self.peek() {
            Some(Tok::Minus) => {
                self.pos += 1;
                true
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                false
            }
            _ => false,
        };
        let mut acc = self.term()?;
        if negate {
            acc = Expr::Neg(Box::new(acc)).folded();
        }
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => Op::Add,
                Some(Tok::Minus) => Op::Sub,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.term()?;
            acc = Expr::Bin(op, Box::new(acc), Box::new(rhs)).folded();
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.factor()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Star) => Op::Mul,
                Some(Tok::Slash) => Op::Div,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.factor()?;
            acc = Expr::Bin(op, Box::new(acc), Box::new(rhs)).folded();
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.base()?;
        if matches!(self.peek(), Some(Tok::Caret)) {
            self.pos += 1;
            let exponent = self.factor()?; // right-associative
            return Ok(Expr::Bin(Op::Pow, Box::new(base), Box::new(exponent)).folded());
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        let at = self.here();
        match self.bump() {
            Some(Tok::Num(v)) => Ok(Expr::Num(v)),
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                match self.bump() {
                    Some(Tok::RParen) => Ok(inner),
                    _ => Err(ParseError {
                        position: self.here(),
                        message: "expected ')'".into(),
                    }),
                }
            }
            Some(Tok::Ident(name)) => match name.as_str() {
                "t" => Ok(Expr::T),
                "x" => Ok(Expr::X),
                _ => {
                    let func = match name.as_str() {
                        "sqrt" => Func::Sqrt,
                        "exp" => Func::Exp,
                        "ln" => Func::Ln,
                        "sin" => Func::Sin,
                        "cos" => Func::Cos,
                        "abs" => Func::Abs,
                        _ => {
                            return Err(ParseError {
                                position: at,
                                message: format!("unknown identifier '{name}'"),
                            })
                        }
                    };
                    match self.bump() {
                        Some(Tok::LParen) => {}
                        _ => {
                            return Err(ParseError {
                                position: self.here(),
                                message: format!("expected '(' after '{name}'"),
                            })
                        }
                    }
                    let arg = self.expr()?;
                    match self.bump() {
                        Some(Tok::RParen) => Ok(Expr::Call(func, Box::new(arg)).folded()),
                        _ => Err(ParseError {
                            position: self.here(),
                            message: "expected ')'".into(),
                        }),
                    }
                }
            },
            _ => Err(ParseError {
                position: at,
                message: "expected a number, variable, function or '('".into(),
            }),
        }
    }
}

/// Parse an expression in the variables t and x.
pub fn parse_expression(text: &str) -> Result<Expr, ParseError> {
    let toks = tokenize(text)?;
    let mut p = Parser {
        toks: &toks,
        pos: 0,
        end: text.len(),
    };
    let e = p.expr()?;
    if p.pos != toks.len() {
        return Err(ParseError {
            position: p.here(),
            message: "unexpected trailing input".into(),
        });
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(src: &str, t: f64, x: f64) -> f64 {
        parse_expression(src).unwrap().eval(t, x).unwrap()
    }

    #[test]
    fn benchmark_right_hand_sides() {
        assert_eq!(eval("0.6*x", 0.0, 0.5), 0.3);
        let v = eval("1.2*(0.05-x)+0.04*sqrt(x)", 0.0, 0.04);
        assert!((v - 0.02).abs() < 1e-15, "{v}");
        let v = eval("sqrt(x-1)+(1-t)", 1.0, 3.0);
        assert!((v - 2.0f64.sqrt()).abs() < 1e-15, "{v}");
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(eval("2+3*4", 0.0, 0.0), 14.0);
        assert_eq!(eval("2*3^2", 0.0, 0.0), 18.0);
        // right-associative power
        assert_eq!(eval("2^3^2", 0.0, 0.0), 512.0);
        assert_eq!(eval("-t^2", 2.0, 0.0), -4.0);
        assert_eq!(eval("(1-t)/2", 0.5, 0.0), 0.25);
    }

    #[test]
    fn constant_folding() {
        assert_eq!(parse_expression("3*4+1").unwrap(), Expr::Num(13.0));
        assert_eq!(parse_expression("sqrt(4)*x").unwrap().eval(0.0, 3.0), Ok(6.0));
        // sqrt(-1) must not fold away; it reports at evaluation
        let e = parse_expression("sqrt(0-1)").unwrap();
        assert!(e.eval(0.0, 0.0).is_err());
    }

    #[test]
    fn error_positions() {
        let err = parse_expression("0.6*").unwrap_err();
        assert_eq!(err.position, 4);
        let err = parse_expression("0.6*y").unwrap_err();
        assert_eq!(err.position, 4);
        assert!(err.message.contains("unknown identifier"));
        let err = parse_expression("sin 3").unwrap_err();
        assert!(err.message.contains("expected '('"));
    }

    #[test]
    fn domain_errors_deferred_to_evaluation() {
        let e = parse_expression("sqrt(x-1)").unwrap();
        assert!(e.eval(0.0, 0.5).is_err());
        assert_eq!(e.eval(0.0, 2.0), Ok(1.0));
        let (v, clamped) = e.eval_clamped(0.0, 0.5);
        assert_eq!(v, 0.0);
        assert!(clamped);
        let e = parse_expression("ln(x)").unwrap();
        assert!(e.eval(0.0, 0.0).is_err());
        let e = parse_expression("1/x").unwrap();
        assert!(e.eval(0.0, 0.0).is_err());
    }

    #[test]
    fn scientific_notation() {
        assert_eq!(eval("1e-2+2E3", 0.0, 0.0), 2000.01);
    }
}
