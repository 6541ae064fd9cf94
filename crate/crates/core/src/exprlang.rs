//! A small arithmetic expression language for right-hand sides, delay maps
//! and exact solutions supplied in config files.
//!
//! ```text
//! expr     = term { ("+" | "-") term }
//! term     = unary { ("*" | "/") unary }
//! unary    = "-" unary | power
//! power    = atom [ "^" unary ]          (right-associative)
//! atom     = number | name | call | "(" expr ")"
//! call     = function "(" expr { "," expr } ")"
//! number   = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ]
//! ```
//!
//! Variables are `t u ubar y ybar v vbar z zbar`, named constants are `e` and
//! `pi`, and functions are `sin cos tan exp ln sqrt abs pow min max`.
//! `-x^2` parses as `-(x^2)` and `2^3^2` as `2^(3^2)`.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// The nine argument slots of the right-hand side, in call order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    T,
    U,
    UBar,
    Y,
    YBar,
    V,
    VBar,
    Z,
    ZBar,
}

impl Var {
    pub const ALL: [Var; 9] = [
        Var::T,
        Var::U,
        Var::UBar,
        Var::Y,
        Var::YBar,
        Var::V,
        Var::VBar,
        Var::Z,
        Var::ZBar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Var::T => "t",
            Var::U => "u",
            Var::UBar => "ubar",
            Var::Y => "y",
            Var::YBar => "ybar",
            Var::V => "v",
            Var::VBar => "vbar",
            Var::Z => "z",
            Var::ZBar => "zbar",
        }
    }

    pub fn from_name(name: &str) -> Option<Var> {
        Var::ALL.into_iter().find(|v| v.name() == name)
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedConst {
    E,
    Pi,
}

impl NamedConst {
    pub fn value(self) -> f64 {
        match self {
            NamedConst::E => std::f64::consts::E,
            NamedConst::Pi => std::f64::consts::PI,
        }
    }

    fn name(self) -> &'static str {
        match self {
            NamedConst::E => "e",
            NamedConst::Pi => "pi",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Abs,
    Pow,
    Min,
    Max,
}

impl Func {
    const ALL: [Func; 10] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Exp,
        Func::Ln,
        Func::Sqrt,
        Func::Abs,
        Func::Pow,
        Func::Min,
        Func::Max,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Pow => "pow",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Pow | Func::Min | Func::Max => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Named(NamedConst),
    Var(Var),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: expected {}, found {found}", expected.join(" or "))]
    Syntax {
        offset: usize,
        expected: Vec<String>,
        found: String,
    },
    #[error("unknown identifier `{name}` at byte {offset}; allowed: {}", allowed.join(", "))]
    UnknownIdentifier {
        name: String,
        offset: usize,
        allowed: Vec<String>,
    },
    #[error("`{name}` at byte {offset} takes {expected} argument(s), got {got}")]
    Arity {
        name: String,
        offset: usize,
        expected: usize,
        got: usize,
    },
    #[error("numeric literal `{text}` at byte {offset} is not a finite number")]
    BadNumber { text: String, offset: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("variable `{0}` is not bound")]
    Unbound(Var),
    #[error("math domain error in `{expr}`: {reason}")]
    Domain { expr: String, reason: String },
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
    Comma,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(x) => format!("number {x}"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let single = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(tok) = single {
            out.push((tok, start));
            i += 1;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == b'.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            // exponent only when followed by digits, so `2e` stays an error
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            match text.parse::<f64>() {
                Ok(x) if x.is_finite() => out.push((Tok::Num(x), start)),
                _ => {
                    return Err(ParseError::BadNumber {
                        text: text.to_string(),
                        offset: start,
                    })
                }
            }
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start));
        } else {
            let ch = src[start..].chars().next().unwrap_or('?');
            return Err(ParseError::Syntax {
                offset: start,
                expected: vec!["an expression token".into()],
                found: format!("`{ch}`"),
            });
        }
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        ParseError::Syntax {
            offset: self.offset(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().describe(),
        }
    }

    fn expect(&mut self, tok: Tok, name: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&[name]))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let exp = self.unary()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let offset = self.offset();
        match self.peek().clone() {
            Tok::Num(x) => {
                self.bump();
                Ok(Expr::Const(x))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                if let Some(func) = Func::from_name(&name) {
                    self.expect(Tok::LParen, "`(`")?;
                    let mut args = vec![self.expr()?];
                    while *self.peek() == Tok::Comma {
                        self.bump();
                        args.push(self.expr()?);
                    }
                    self.expect(Tok::RParen, "`)` or `,`")?;
                    if args.len() != func.arity() {
                        return Err(ParseError::Arity {
                            name,
                            offset,
                            expected: func.arity(),
                            got: args.len(),
                        });
                    }
                    return Ok(Expr::Call(func, args));
                }
                if let Some(v) = Var::from_name(&name) {
                    return Ok(Expr::Var(v));
                }
                match name.as_str() {
                    "e" => Ok(Expr::Named(NamedConst::E)),
                    "pi" => Ok(Expr::Named(NamedConst::Pi)),
                    _ => Err(ParseError::UnknownIdentifier {
                        name,
                        offset,
                        allowed: allowed_names(),
                    }),
                }
            }
            _ => Err(self.error(&["number", "name", "`(`", "`-`"])),
        }
    }
}

fn allowed_names() -> Vec<String> {
    Var::ALL
        .iter()
        .map(|v| v.name())
        .chain(["e", "pi"])
        .chain(Func::ALL.iter().map(|f| f.name()))
        .map(String::from)
        .collect()
}

/// Parse `source` into an expression tree.
pub fn parse(source: &str) -> Result<Expr, ParseError> {
    let toks = lex(source)?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.error(&["operator", "end of input"]));
    }
    Ok(e)
}

/// Variable bindings for evaluation.  Unset slots are unbound.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EvalContext {
    values: [Option<f64>; 9],
}

impl EvalContext {
    pub fn new() -> Self {
        Self::default()
    }

    /// Only `t` bound, as used for delay maps and exact solutions.
    pub fn time(t: f64) -> Self {
        let mut ctx = Self::default();
        ctx.values[0] = Some(t);
        ctx
    }

    /// All nine slots bound: `t` followed by the eight state arguments.
    pub fn full(t: f64, args: &[f64; 8]) -> Self {
        let mut values = [Some(t); 9];
        for (slot, x) in values[1..].iter_mut().zip(args) {
            *slot = Some(*x);
        }
        EvalContext { values }
    }

    pub fn bind(mut self, var: Var, value: f64) -> Self {
        self.values[var.index()] = Some(value);
        self
    }

    pub fn get(&self, var: Var) -> Option<f64> {
        self.values[var.index()]
    }
}

fn domain(e: &Expr, reason: impl Into<String>) -> EvalError {
    EvalError::Domain {
        expr: e.to_string(),
        reason: reason.into(),
    }
}

fn checked_pow(e: &Expr, base: f64, exp: f64) -> Result<f64, EvalError> {
    if base < 0.0 && exp.fract() != 0.0 {
        return Err(domain(
            e,
            format!("negative base {base} with non-integer exponent {exp}"),
        ));
    }
    if base == 0.0 && exp < 0.0 {
        return Err(domain(e, "zero raised to a negative power"));
    }
    if exp.fract() == 0.0 && exp.abs() <= 64.0 {
        return Ok(base.powi(exp as i32));
    }
    Ok(base.powf(exp))
}

impl Expr {
    pub fn evaluate(&self, ctx: &EvalContext) -> Result<f64, EvalError> {
        Ok(match self {
            Expr::Const(x) => *x,
            Expr::Named(c) => c.value(),
            Expr::Var(v) => ctx.get(*v).ok_or(EvalError::Unbound(*v))?,
            Expr::Neg(x) => -x.evaluate(ctx)?,
            Expr::Binary(op, l, r) => {
                let a = l.evaluate(ctx)?;
                let b = r.evaluate(ctx)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(domain(self, "division by zero"));
                        }
                        a / b
                    }
                    BinOp::Pow => checked_pow(self, a, b)?,
                }
            }
            Expr::Call(func, args) => {
                let x = args[0].evaluate(ctx)?;
                match func {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Tan => x.tan(),
                    Func::Exp => x.exp(),
                    Func::Ln => {
                        if x <= 0.0 {
                            return Err(domain(self, format!("logarithm of non-positive {x}")));
                        }
                        x.ln()
                    }
                    Func::Sqrt => {
                        if x < 0.0 {
                            return Err(domain(self, format!("square root of negative {x}")));
                        }
                        x.sqrt()
                    }
                    Func::Abs => x.abs(),
                    Func::Pow => checked_pow(self, x, args[1].evaluate(ctx)?)?,
                    Func::Min => x.min(args[1].evaluate(ctx)?),
                    Func::Max => x.max(args[1].evaluate(ctx)?),
                }
            }
        })
    }

    /// The set of variables that occur in the expression.
    pub fn free_variables(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Expr::Const(_) | Expr::Named(_) => {}
            Expr::Var(v) => {
                out.insert(*v);
            }
            Expr::Neg(x) => x.collect_vars(out),
            Expr::Binary(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(op, ..) => op.precedence(),
            Expr::Neg(_) => 3,
            Expr::Const(x) if *x < 0.0 || x.is_sign_negative() => 3,
            _ => 5,
        }
    }
}

/// Evaluate `e` in `ctx`.
pub fn evaluate(e: &Expr, ctx: &EvalContext) -> Result<f64, EvalError> {
    e.evaluate(ctx)
}

/// Free variables of `e`.
pub fn free_variables(e: &Expr) -> BTreeSet<Var> {
    e.free_variables()
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

// Canonical form: minimal parentheses that reproduce the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(x) if *x < 0.0 || x.is_sign_negative() => write!(f, "-{}", -x),
            Expr::Const(x) => write!(f, "{x}"),
            Expr::Named(c) => f.write_str(c.name()),
            Expr::Var(v) => f.write_str(v.name()),
            Expr::Neg(x) => {
                f.write_str("-")?;
                write_child(f, x, x.precedence() < 3)
            }
            Expr::Binary(BinOp::Pow, base, exp) => {
                write_child(f, base, base.precedence() < 5)?;
                f.write_str("^")?;
                write_child(f, exp, exp.precedence() < 3)
            }
            Expr::Binary(op, l, r) => {
                let p = op.precedence();
                write_child(f, l, l.precedence() < p)?;
                write!(f, " {} ", op.symbol())?;
                write_child(f, r, r.precedence() <= p)
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}
