//! Small arithmetic expressions for user-supplied kernels and right-hand
//! sides: `+ - * / ^`, unary minus, parentheses, `exp log sin cos`, numeric
//! literals and a fixed list of variable names.
//!
//! ```
//! use hilfer_core::expr::Expr;
//! let e = Expr::parse("0.25*(u1 + u2) - exp(-t)", &["t", "s", "u1", "u2"]).unwrap();
//! assert_eq!(e.eval(&[0.0, 0.5, 2.0, 2.0]), 0.0);
//! ```

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Bin(Op, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Func {
    Exp,
    Log,
    Sin,
    Cos,
}

/// A parsed expression over a fixed variable list.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    source: String,
    root: Node,
    arity: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>> {
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
            // exponent part, e.g. 1e-3
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
            let v = text
                .parse::<f64>()
                .map_err(|_| Error::Expression(format!("bad number '{text}' at column {}", start + 1)))?;
            out.push((start, Tok::Num(v)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((start, Tok::Ident(chars[start..i].iter().collect())));
        } else if "+-*/^()".contains(c) {
            out.push((i, Tok::Sym(c)));
            i += 1;
        } else {
            return Err(Error::Expression(format!("unexpected character '{c}' at column {}", i + 1)));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    vars: &'a [&'a str],
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn column(&self) -> usize {
        self.toks.get(self.pos).map_or(usize::MAX, |(c, _)| c + 1)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn err(&self, what: &str) -> Error {
        if self.pos >= self.toks.len() {
            Error::Expression(format!("{what} at end of input"))
        } else {
            Error::Expression(format!("{what} at column {}", self.column()))
        }
    }

    // expr := term (('+' | '-') term)*
    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat('+') {
                Op::Add
            } else if self.eat('-') {
                Op::Sub
            } else {
                return Ok(lhs);
            };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
    }

    // term := unary (('*' | '/') unary)*
    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat('*') {
                Op::Mul
            } else if self.eat('/') {
                Op::Div
            } else {
                return Ok(lhs);
            };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    // unary := '-' unary | '+' unary | power
    fn unary(&mut self) -> Result<Node> {
        if self.eat('-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    // power := atom ('^' unary)?   (right associative, -2^2 = -4)
    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.eat('^') {
            return Ok(Node::Bin(Op::Pow, Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Node::Num(v))
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(inner)
            }
            Some(Tok::Ident(name)) => {
                let col = self.column();
                self.pos += 1;
                let func = match name.as_str() {
                    "exp" => Some(Func::Exp),
                    "log" | "ln" => Some(Func::Log),
                    "sin" => Some(Func::Sin),
                    "cos" => Some(Func::Cos),
                    _ => None,
                };
                if let Some(func) = func {
                    if !self.eat('(') {
                        return Err(self.err(&format!("expected '(' after {name}")));
                    }
                    let arg = self.expr()?;
                    if !self.eat(')') {
                        return Err(self.err("expected ')'"));
                    }
                    return Ok(Node::Call(func, Box::new(arg)));
                }
                match self.vars.iter().position(|v| *v == name) {
                    Some(i) => Ok(Node::Var(i)),
                    None => Err(Error::Expression(format!(
                        "unknown name '{name}' at column {col} (variables: {})",
                        self.vars.join(", ")
                    ))),
                }
            }
            _ => Err(self.err("expected a number, variable or '('")),
        }
    }
}

fn eval_node(node: &Node, vars: &[f64]) -> f64 {
    match node {
        Node::Num(v) => *v,
        Node::Var(i) => vars[*i],
        Node::Neg(a) => -eval_node(a, vars),
        Node::Bin(op, a, b) => {
            let (x, y) = (eval_node(a, vars), eval_node(b, vars));
            match op {
                Op::Add => x + y,
                Op::Sub => x - y,
                Op::Mul => x * y,
                Op::Div => x / y,
                Op::Pow => x.powf(y),
            }
        }
        Node::Call(f, a) => {
            let x = eval_node(a, vars);
            match f {
                Func::Exp => x.exp(),
                Func::Log => x.ln(),
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
            }
        }
    }
}

impl Expr {
    /// Parses `src`; variable `vars[i]` is bound to slot i at evaluation.
    pub fn parse(src: &str, vars: &[&str]) -> Result<Self> {
        let toks = tokenize(src)?;
        if toks.is_empty() {
            return Err(Error::Expression("empty expression".into()));
        }
        let mut p = Parser { toks, pos: 0, vars };
        let root = p.expr()?;
        if p.pos < p.toks.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(Expr {
            source: src.to_string(),
            root,
            arity: vars.len(),
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Evaluates with `vars` in the order given to [`Expr::parse`].
    pub fn eval(&self, vars: &[f64]) -> f64 {
        debug_assert_eq!(vars.len(), self.arity);
        eval_node(&self.root, vars)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(src: &str, vals: &[f64]) -> f64 {
        Expr::parse(src, &["t", "u"]).unwrap().eval(vals)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("1 + 2*3", &[0.0, 0.0]), 7.0);
        assert_eq!(ev("2^3^2", &[0.0, 0.0]), 512.0);
        assert_eq!(ev("-2^2", &[0.0, 0.0]), -4.0);
        assert_eq!(ev("8/4/2", &[0.0, 0.0]), 1.0);
        assert_eq!(ev("(1 - t) * u", &[0.25, 4.0]), 3.0);
        assert_eq!(ev("2^-1", &[0.0, 0.0]), 0.5);
    }

    #[test]
    fn functions_and_literals() {
        assert!((ev("exp(1)", &[0.0, 0.0]) - std::f64::consts::E).abs() < 1e-15);
        assert!((ev("log(exp(2.5))", &[0.0, 0.0]) - 2.5).abs() < 1e-15);
        assert!((ev("sin(t)^2 + cos(t)^2", &[0.7, 0.0]) - 1.0).abs() < 1e-15);
        assert_eq!(ev("1.5e-1 * u", &[0.0, 2.0]), 0.3);
    }

    #[test]
    fn rejects_bad_input() {
        for bad in ["", "1 +", "(t", "foo(t)", "z", "t $ u", "exp t", "1 2"] {
            assert!(Expr::parse(bad, &["t", "u"]).is_err(), "{bad}");
        }
    }
}
