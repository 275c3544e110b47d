//! A small complex-valued expression language.
//!
//! Grammar (tightest binding last):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | power
//! power  := atom ('^' factor)?
//! atom   := NUMBER | 'i' | 'pi' | IDENT | IDENT '(' expr ')' | '(' expr ')'
//! ```
//!
//! `i` and `pi` are reserved; function names may not be used as symbols.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Conj,
    Re,
    Im,
    Abs,
}

impl Func {
    pub const ALL: [Func; 10] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Conj,
        Func::Re,
        Func::Im,
        Func::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Conj => "conj",
            Func::Re => "re",
            Func::Im => "im",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

/// Parsed expression tree.
///
/// Literals are always non-negative; a leading minus is a [`Expr::Neg`] node.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Imag,
    Pi,
    Sym(String),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: expected {}", expected.join(" | "))]
    Syntax {
        offset: usize,
        expected: Vec<String>,
    },
    #[error("unknown function `{name}` at offset {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("unbalanced parentheses at offset {offset}")]
    Unbalanced { offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownFunction { offset, .. }
            | ParseError::Unbalanced { offset } => *offset,
        }
    }

    fn shifted(self, by: usize) -> ParseError {
        match self {
            ParseError::Syntax { offset, expected } => ParseError::Syntax {
                offset: offset + by,
                expected,
            },
            ParseError::UnknownFunction { name, offset } => ParseError::UnknownFunction {
                name,
                offset: offset + by,
            },
            ParseError::Unbalanced { offset } => ParseError::Unbalanced { offset: offset + by },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound symbol `{0}`")]
    Unbound(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("log(0) is undefined")]
    LogZero,
    #[error("zero raised to a non-positive power")]
    ZeroPower,
    #[error("non-finite intermediate value in `{0}`")]
    NonFinite(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Tok<'a> {
    Num(f64),
    Ident(&'a str),
    Op(char),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Eof,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    /// Returns the next token and its starting byte offset.
    fn next(&mut self) -> Result<(Tok<'a>, usize), ParseError> {
        self.skip_ws();
        let start = self.pos;
        let rest = &self.src[start..];
        let Some(ch) = rest.chars().next() else {
            return Ok((Tok::Eof, start));
        };
        if ch.is_ascii_digit() || (ch == '.' && rest[1..].starts_with(|c: char| c.is_ascii_digit())) {
            let len = number_len(rest);
            let text = &rest[..len];
            let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
                offset: start,
                expected: vec!["number".into()],
            })?;
            self.pos += len;
            return Ok((Tok::Num(value), start));
        }
        if ch.is_ascii_alphabetic() || ch == '_' {
            let len = rest
                .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
                .unwrap_or(rest.len());
            self.pos += len;
            return Ok((Tok::Ident(&rest[..len]), start));
        }
        self.pos += ch.len_utf8();
        let tok = match ch {
            '+' | '-' | '*' | '/' | '^' => Tok::Op(ch),
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            ',' => Tok::Comma,
            _ => {
                return Err(ParseError::Syntax {
                    offset: start,
                    expected: vec!["expression".into()],
                })
            }
        };
        Ok((tok, start))
    }
}

fn number_len(s: &str) -> usize {
    let b = s.as_bytes();
    let mut n = 0;
    while n < b.len() && b[n].is_ascii_digit() {
        n += 1;
    }
    if n < b.len() && b[n] == b'.' {
        n += 1;
        while n < b.len() && b[n].is_ascii_digit() {
            n += 1;
        }
    }
    if n < b.len() && (b[n] == b'e' || b[n] == b'E') {
        let mut m = n + 1;
        if m < b.len() && (b[m] == b'+' || b[m] == b'-') {
            m += 1;
        }
        let digits_start = m;
        while m < b.len() && b[m].is_ascii_digit() {
            m += 1;
        }
        if m > digits_start {
            n = m;
        }
    }
    n
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok<'a>,
    at: usize,
    depth: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Self, ParseError> {
        let mut lexer = Lexer { src, pos: 0 };
        let (tok, at) = lexer.next()?;
        Ok(Parser {
            lexer,
            tok,
            at,
            depth: 0,
        })
    }

    fn bump(&mut self) -> Result<(), ParseError> {
        let (tok, at) = self.lexer.next()?;
        self.tok = tok;
        self.at = at;
        Ok(())
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        if self.tok == Tok::RParen && self.depth == 0 {
            return ParseError::Unbalanced { offset: self.at };
        }
        if self.tok == Tok::Eof && self.depth > 0 && expected == [")"] {
            return ParseError::Unbalanced { offset: self.at };
        }
        ParseError::Syntax {
            offset: self.at,
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn expect(&mut self, tok: Tok<'a>, name: &str) -> Result<(), ParseError> {
        if self.tok == tok {
            self.bump()
        } else {
            Err(self.error(&[name]))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.tok {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.tok {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.factor()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.tok == Tok::Op('-') {
            self.bump()?;
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.tok == Tok::Op('^') {
            self.bump()?;
            let exp = self.factor()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.tok {
            Tok::Num(v) => {
                self.bump()?;
                Ok(Expr::Num(v))
            }
            Tok::Ident(name) => {
                let at = self.at;
                self.bump()?;
                if self.tok == Tok::LParen {
                    let func = Func::from_name(name).ok_or_else(|| ParseError::UnknownFunction {
                        name: name.to_string(),
                        offset: at,
                    })?;
                    self.bump()?;
                    self.depth += 1;
                    let arg = self.expr()?;
                    self.expect(Tok::RParen, ")")?;
                    self.depth -= 1;
                    return Ok(Expr::Call(func, Box::new(arg)));
                }
                match name {
                    "i" => Ok(Expr::Imag),
                    "pi" => Ok(Expr::Pi),
                    _ if Func::from_name(name).is_some() => Err(self.error(&["("])),
                    _ => Ok(Expr::Sym(name.to_string())),
                }
            }
            Tok::LParen => {
                self.bump()?;
                self.depth += 1;
                let inner = self.expr()?;
                self.expect(Tok::RParen, ")")?;
                self.depth -= 1;
                Ok(inner)
            }
            _ => Err(self.error(&["number", "identifier", "("])),
        }
    }

    fn finish(&mut self) -> Result<(), ParseError> {
        if self.tok == Tok::Eof {
            Ok(())
        } else {
            Err(self.error(&["operator", "end of input"]))
        }
    }
}

/// Parses a single expression.
pub fn parse_expression(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser::new(src)?;
    let e = p.expr()?;
    p.finish()?;
    Ok(e)
}

/// Parses a bracketed, comma-separated list `[e1, e2, ...]` that must span all of `src`.
///
/// Error offsets are relative to `src` shifted by `base`.
pub fn parse_expression_list(src: &str, base: usize) -> Result<Vec<Expr>, ParseError> {
    let inner = || -> Result<Vec<Expr>, ParseError> {
        let mut p = Parser::new(src)?;
        p.expect(Tok::LBracket, "[")?;
        let mut items = Vec::new();
        if p.tok == Tok::RBracket {
            p.bump()?;
            p.finish()?;
            return Ok(items);
        }
        loop {
            items.push(p.expr()?);
            match p.tok {
                Tok::Comma => p.bump()?,
                Tok::RBracket => {
                    p.bump()?;
                    break;
                }
                _ => return Err(p.error(&[",", "]"])),
            }
        }
        p.finish()?;
        Ok(items)
    };
    inner().map_err(|e| e.shifted(base))
}

impl fmt::Display for Expr {
    /// Fully parenthesized canonical form.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Imag => f.write_str("i"),
            Expr::Pi => f.write_str("pi"),
            Expr::Sym(s) => f.write_str(s),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Call(func, arg) => write!(f, "{}({arg})", func.name()),
        }
    }
}

/// Canonical, fully parenthesized text of `ast`; re-parses to a structurally equal tree.
pub fn canonical_print(ast: &Expr) -> String {
    ast.to_string()
}

/// Evaluates `ast` with symbols resolved from a map.
pub fn eval_expression(ast: &Expr, bindings: &HashMap<String, Complex64>) -> Result<Complex64, EvalError> {
    ast.eval_with(&|name| bindings.get(name).copied())
}

impl Expr {
    pub fn eval_with(&self, lookup: &dyn Fn(&str) -> Option<Complex64>) -> Result<Complex64, EvalError> {
        let v = match self {
            Expr::Num(v) => Complex64::new(*v, 0.0),
            Expr::Imag => Complex64::i(),
            Expr::Pi => Complex64::new(std::f64::consts::PI, 0.0),
            Expr::Sym(name) => lookup(name).ok_or_else(|| EvalError::Unbound(name.clone()))?,
            // 0 - z keeps a +0 imaginary part on negated reals, so principal
            // branches of sqrt and log see the upper side of the cut.
            Expr::Neg(e) => Complex64::new(0.0, 0.0) - e.eval_with(lookup)?,
            Expr::Binary(op, a, b) => {
                let a = a.eval_with(lookup)?;
                let b = b.eval_with(lookup)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == Complex64::new(0.0, 0.0) {
                            return Err(EvalError::DivisionByZero);
                        }
                        a / b
                    }
                    BinOp::Pow => complex_pow(a, b)?,
                }
            }
            Expr::Call(func, arg) => {
                let z = arg.eval_with(lookup)?;
                match func {
                    Func::Sin => z.sin(),
                    Func::Cos => z.cos(),
                    Func::Tan => z.tan(),
                    Func::Exp => z.exp(),
                    Func::Log => {
                        if z == Complex64::new(0.0, 0.0) {
                            return Err(EvalError::LogZero);
                        }
                        z.ln()
                    }
                    Func::Sqrt => z.sqrt(),
                    Func::Conj => z.conj(),
                    Func::Re => Complex64::new(z.re, 0.0),
                    Func::Im => Complex64::new(z.im, 0.0),
                    Func::Abs => Complex64::new(z.norm(), 0.0),
                }
            }
        };
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite(self.to_string()))
        }
    }

    /// Every symbol referenced in the tree, sorted.
    pub fn free_symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Sym(s) => {
                out.insert(s.clone());
            }
            Expr::Neg(e) | Expr::Call(_, e) => e.collect_symbols(out),
            Expr::Binary(_, a, b) => {
                a.collect_symbols(out);
                b.collect_symbols(out);
            }
            Expr::Num(_) | Expr::Imag | Expr::Pi => {}
        }
    }
}

fn complex_pow(base: Complex64, exp: Complex64) -> Result<Complex64, EvalError> {
    // Small integer exponents go through repeated multiplication so that
    // e.g. x^2 stays exact for real x.
    if exp.im == 0.0 && exp.re.fract() == 0.0 && exp.re.abs() <= 64.0 {
        let n = exp.re as i32;
        if base == Complex64::new(0.0, 0.0) && n <= 0 {
            return Err(EvalError::ZeroPower);
        }
        return Ok(base.powi(n));
    }
    if base == Complex64::new(0.0, 0.0) {
        return if exp.re > 0.0 {
            Ok(Complex64::new(0.0, 0.0))
        } else {
            Err(EvalError::ZeroPower)
        };
    }
    Ok(base.powc(exp))
}
