//! A small arithmetic grammar for user-supplied perturbations.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | 'a' | 'b' | 'z' | 'eps' | 'exp' '(' expr ')' | '(' expr ')'
//! ```

use std::path::Path;
use std::sync::Arc;

use cusplab::cusp::{A3System, StatePoint};

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Exp(Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    A,
    B,
    Z,
    Eps,
}

impl Expr {
    pub fn eval(&self, p: &StatePoint) -> f64 {
        match self {
            Expr::Num(x) => *x,
            Expr::Var(Var::A) => p.a,
            Expr::Var(Var::B) => p.b,
            Expr::Var(Var::Z) => p.z,
            Expr::Var(Var::Eps) => p.eps,
            Expr::Neg(e) => -e.eval(p),
            Expr::Add(l, r) => l.eval(p) + r.eval(p),
            Expr::Sub(l, r) => l.eval(p) - r.eval(p),
            Expr::Mul(l, r) => l.eval(p) * r.eval(p),
            Expr::Div(l, r) => l.eval(p) / r.eval(p),
            Expr::Pow(l, r) => {
                let (x, y) = (l.eval(p), r.eval(p));
                if y.fract() == 0.0 && y.abs() < 64.0 {
                    x.powi(y as i32)
                } else {
                    x.powf(y)
                }
            }
            Expr::Exp(e) => e.eval(p).exp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn lex(src: &str) -> Result<Vec<Tok>, String> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let x = text
                .parse::<f64>()
                .map_err(|_| format!("bad number '{text}'"))?;
            out.push(Tok::Num(x));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else {
            return Err(format!("unexpected character '{c}'"));
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek_op(&self) -> Option<char> {
        match self.toks.get(self.pos) {
            Some(Tok::Op(c)) => Some(*c),
            _ => None,
        }
    }

    fn expect(&mut self, op: char) -> Result<(), String> {
        if self.peek_op() == Some(op) {
            self.pos += 1;
            Ok(())
        } else {
            Err(format!("expected '{op}'"))
        }
    }

    fn expr(&mut self) -> Result<Expr, String> {
        let mut lhs = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' {
                Expr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, String> {
        let mut lhs = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' {
                Expr::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, String> {
        match self.peek_op() {
            Some('-') => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, String> {
        let base = self.atom()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, String> {
        let tok = self
            .toks
            .get(self.pos)
            .cloned()
            .ok_or("unexpected end of expression")?;
        self.pos += 1;
        match tok {
            Tok::Num(x) => Ok(Expr::Num(x)),
            Tok::Op('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => match name.as_str() {
                "a" => Ok(Expr::Var(Var::A)),
                "b" => Ok(Expr::Var(Var::B)),
                "z" => Ok(Expr::Var(Var::Z)),
                "eps" => Ok(Expr::Var(Var::Eps)),
                "exp" => {
                    self.expect('(')?;
                    let e = self.expr()?;
                    self.expect(')')?;
                    Ok(Expr::Exp(Box::new(e)))
                }
                _ => Err(format!("unknown name '{name}'")),
            },
            Tok::Op(c) => Err(format!("unexpected '{c}'")),
        }
    }
}

pub fn parse(src: &str) -> Result<Expr, String> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
    };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err("trailing input".into());
    }
    Ok(e)
}

/// Reads `f1 = ...`, `f2 = ...`, `f3 = ...` lines; missing entries are 0.
/// Blank lines and lines starting with `#` are skipped.
pub fn parse_perturbation_file(text: &str) -> Result<[Expr; 3], String> {
    let mut fs = [Expr::Num(0.0), Expr::Num(0.0), Expr::Num(0.0)];
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (name, rhs) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected 'fi = expression'", n + 1))?;
        let idx = match name.trim() {
            "f1" => 0,
            "f2" => 1,
            "f3" => 2,
            other => return Err(format!("line {}: unknown name '{other}'", n + 1)),
        };
        fs[idx] = parse(rhs).map_err(|e| format!("line {}: {e}", n + 1))?;
    }
    Ok(fs)
}

pub fn load_system(path: &Path) -> Result<A3System, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let [f1, f2, f3] = parse_perturbation_file(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let wrap = |e: Expr| -> cusplab::cusp::Perturbation { Arc::new(move |p| e.eval(p)) };
    Ok(A3System::with_perturbations(
        format!("expression({})", path.display()),
        wrap(f1),
        wrap(f2),
        wrap(f3),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(a: f64, b: f64, z: f64, eps: f64) -> StatePoint {
        StatePoint::new(a, b, z, eps).unwrap()
    }

    #[test]
    fn precedence() {
        let p = at(2.0, 3.0, 0.5, 0.1);
        assert_eq!(parse("1 + 2 * 3").unwrap().eval(&p), 7.0);
        assert_eq!(parse("-a^2").unwrap().eval(&p), -4.0);
        assert_eq!(parse("2^3^2").unwrap().eval(&p), 512.0);
        assert_eq!(parse("(a - b) / z").unwrap().eval(&p), -2.0);
        assert!((parse("exp(-1/eps)").unwrap().eval(&p) - (-10f64).exp()).abs() < 1e-20);
        assert_eq!(parse("1e-3 * 2E2").unwrap().eval(&p), 0.2);
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["", "1 +", "(a", "sin(a)", "a $ b", "2 3", "exp a"] {
            assert!(parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn perturbation_file() {
        let fs = parse_perturbation_file("# flat\nf2 = eps^2\n\nf3 = z\n").unwrap();
        let p = at(0.0, 0.0, 0.5, 0.1);
        assert_eq!(fs[0].eval(&p), 0.0);
        assert!((fs[1].eval(&p) - 0.01).abs() < 1e-15);
        assert_eq!(fs[2].eval(&p), 0.5);
        assert!(parse_perturbation_file("g = 1").is_err());
    }
}
