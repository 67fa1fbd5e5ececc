//! The small expression language used for initial data and load programs.
//!
//! ```text
//! expr := term (('+' | '-') term)*
//! term := ['-'] [number '*'] atom | ['-'] number
//! atom := VAR | 'cos(' number ')' | 'step(' number ')' | 'hat(' number ')'
//! ```
//!
//! `VAR` is `x` for functions on `[0, 1]` and `t` for loads. `cos(k)` is
//! `cos(kπ·VAR)`, `step(a)` the indicator of `[a, 1]`, `hat(a)` is
//! `a - |VAR - a|`.

use std::f64::consts::PI;
use std::fmt;

use pmlab::energy::{Piece, PiecewiseH1Function};
use pmlab::quasistatic::LoadProgram;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Atom {
    One,
    Var,
    Cos(f64),
    Step(f64),
    Hat(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Term {
    coef: f64,
    atom: Atom,
}

impl Term {
    fn value(&self, v: f64) -> f64 {
        self.coef
            * match self.atom {
                Atom::One => 1.0,
                Atom::Var => v,
                Atom::Cos(k) => (k * PI * v).cos(),
                Atom::Step(a) => f64::from(u8::from(v >= a)),
                Atom::Hat(a) => a - (v - a).abs(),
            }
    }

    fn slope(&self, v: f64) -> f64 {
        self.coef
            * match self.atom {
                Atom::One | Atom::Step(_) => 0.0,
                Atom::Var => 1.0,
                Atom::Cos(k) => -k * PI * (k * PI * v).sin(),
                Atom::Hat(a) => {
                    if v < a {
                        1.0
                    } else {
                        -1.0
                    }
                }
            }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExprError {
    pub source: String,
    pub position: usize,
    pub message: String,
}

impl fmt::Display for ExprError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at offset {} in '{}'", self.message, self.position, self.source)
    }
}

/// Parsed expression in one variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    source: String,
    terms: Vec<Term>,
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    var: char,
}

impl Parser<'_> {
    fn err(&self, message: impl Into<String>) -> ExprError {
        ExprError { source: self.src.to_string(), position: self.pos, message: message.into() }
    }

    fn skip_ws(&mut self) {
        while self.src[self.pos..].starts_with(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn number(&mut self) -> Option<f64> {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let mut end = 0;
        let bytes = rest.as_bytes();
        while end < bytes.len() {
            let b = bytes[end];
            let exp_sign = (b == b'+' || b == b'-') && end > 0 && matches!(bytes[end - 1], b'e' | b'E');
            if b.is_ascii_digit() || b == b'.' || b == b'e' || b == b'E' || exp_sign {
                end += 1;
            } else {
                break;
            }
        }
        let v = rest[..end].parse().ok()?;
        self.pos += end;
        Some(v)
    }

    fn call_arg(&mut self, name: &str) -> Result<f64, ExprError> {
        if !self.eat('(') {
            return Err(self.err(format!("expected '(' after {name}")));
        }
        let v = self.number().ok_or_else(|| self.err(format!("expected a number inside {name}(...)")))?;
        if !self.eat(')') {
            return Err(self.err("expected ')'"));
        }
        Ok(v)
    }

    fn atom(&mut self) -> Result<Atom, ExprError> {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        for (name, make) in [("cos", Atom::Cos as fn(f64) -> Atom), ("step", Atom::Step), ("hat", Atom::Hat)] {
            if rest.starts_with(name) {
                self.pos += name.len();
                return Ok(make(self.call_arg(name)?));
            }
        }
        if rest.starts_with(self.var) {
            self.pos += 1;
            return Ok(Atom::Var);
        }
        Err(self.err(format!("expected {}, cos(k), step(a) or hat(a)", self.var)))
    }

    fn term(&mut self, sign: f64) -> Result<Term, ExprError> {
        let sign = if self.eat('-') { -sign } else { sign };
        let save = self.pos;
        if let Some(c) = self.number() {
            if self.eat('*') {
                return Ok(Term { coef: sign * c, atom: self.atom()? });
            }
            return Ok(Term { coef: sign * c, atom: Atom::One });
        }
        self.pos = save;
        Ok(Term { coef: sign, atom: self.atom()? })
    }

    fn expr(&mut self) -> Result<Vec<Term>, ExprError> {
        let mut terms = vec![self.term(1.0)?];
        loop {
            if self.eat('+') {
                terms.push(self.term(1.0)?);
            } else if self.eat('-') {
                terms.push(self.term(-1.0)?);
            } else {
                break;
            }
        }
        self.skip_ws();
        if self.pos != self.src.len() {
            return Err(self.err("unexpected trailing input"));
        }
        Ok(terms)
    }
}

impl Expr {
    pub fn parse(src: &str, var: char) -> Result<Self, ExprError> {
        let terms = Parser { src, pos: 0, var }.expr()?;
        Ok(Self { source: src.to_string(), terms })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval(&self, v: f64) -> f64 {
        self.terms.iter().map(|t| t.value(v)).sum()
    }

    /// Function on `[0, 1]` whose jumps are the `step` positions.
    pub fn to_function(&self) -> Result<PiecewiseH1Function<f64>, String> {
        let mut jumps: Vec<f64> = self
            .terms
            .iter()
            .filter_map(|t| match t.atom {
                Atom::Step(a) => Some(a),
                _ => None,
            })
            .collect();
        if let Some(a) = jumps.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return Err(format!("step position {a} must lie in (0, 1)"));
        }
        jumps.sort_by(f64::total_cmp);
        jumps.dedup();
        let smooth: Vec<Term> = self.terms.iter().copied().filter(|t| !matches!(t.atom, Atom::Step(_))).collect();
        let steps: Vec<Term> = self.terms.iter().copied().filter(|t| matches!(t.atom, Atom::Step(_))).collect();
        let pieces = (0..=jumps.len())
            .map(|k| {
                let start = if k == 0 { 0.0 } else { jumps[k - 1] };
                let offset: f64 = steps.iter().map(|t| t.value(start)).sum();
                let (f, df) = (smooth.clone(), smooth.clone());
                Piece::callable(
                    move |x| offset + f.iter().map(|t| t.value(x)).sum::<f64>(),
                    move |x| df.iter().map(|t| t.slope(x)).sum::<f64>(),
                )
            })
            .collect();
        PiecewiseH1Function::new(jumps, pieces).map_err(|e| e.to_string())
    }

    pub fn to_load(&self) -> Result<LoadProgram<f64>, String> {
        let terms = self.terms.clone();
        LoadProgram::new(self.source.clone(), move |t| terms.iter().map(|x| x.value(t)).sum()).map_err(|e| e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sums_with_coefficients() {
        let e = Expr::parse("cos(2) + 3*step(0.5) - 0.25*x + 1", 'x').unwrap();
        assert_eq!(e.eval(0.0), 2.0);
        assert!((e.eval(0.75) - (3.0 - 0.1875 + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn steps_become_jumps() {
        let u = Expr::parse("cos(2) + 3*step(0.5)", 'x').unwrap().to_function().unwrap();
        assert_eq!(u.jumps(), &[0.5]);
        assert_eq!(u.jump_sizes(), vec![3.0]);
        assert!((u.eval(0.25) - (0.5 * PI).cos()).abs() < 1e-15);
    }

    #[test]
    fn loads_must_start_at_zero() {
        assert!(Expr::parse("hat(1.5)", 't').unwrap().to_load().is_ok());
        assert!(Expr::parse("1 + t", 't').unwrap().to_load().is_err());
        assert_eq!(Expr::parse("2*t", 't').unwrap().to_load().unwrap().at(0.5), 1.0);
    }

    #[test]
    fn reports_the_offset_of_bad_input() {
        let e = Expr::parse("cos(1) + foo", 'x').unwrap_err();
        assert_eq!(e.position, 9);
        assert!(Expr::parse("step(0.5", 'x').is_err());
        assert!(Expr::parse("x", 't').is_err());
        assert!(Expr::parse("1e-3*x", 'x').is_ok());
    }
}
