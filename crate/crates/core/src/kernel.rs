//! A small expression language for kernels `φ(x, y)` over real vectors.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := NUMBER | coord | call | '-' factor | '(' expr ')'
//! coord  := ('x' | 'y') '[' INT ']'
//! call   := IDENT '(' expr (',' expr)* ')'
//! ```
//!
//! `IDENT` is one of `min max abs pow dot dist2 lt le`. `dot` and `dist2`
//! take the bare vectors `x` and `y`. Evaluation is plain binary64 in
//! left-to-right order; the final value is clamped to `[0, 1]`.

use std::fmt;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::table::FormulaTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Min,
    Max,
    Pow,
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelExpr {
    Const(f64),
    Coord(Side, usize),
    Neg(Box<KernelExpr>),
    Abs(Box<KernelExpr>),
    Binary(BinOp, Box<KernelExpr>, Box<KernelExpr>),
    /// Inner product of the full vectors.
    Dot,
    /// Squared Euclidean distance of the full vectors.
    Dist2,
    /// 1 if left < right, else 0.
    Lt(Box<KernelExpr>, Box<KernelExpr>),
    /// 1 if left <= right, else 0.
    Le(Box<KernelExpr>, Box<KernelExpr>),
}

impl KernelExpr {
    pub fn binary(op: BinOp, l: KernelExpr, r: KernelExpr) -> Self {
        KernelExpr::Binary(op, Box::new(l), Box::new(r))
    }

    /// Evaluates at `(x, y)` and clamps the result to `[0, 1]`.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let raw = self.eval_raw(x, y)?;
        Ok(raw.clamp(0.0, 1.0))
    }

    /// Unclamped value.
    pub fn eval_raw(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        use KernelExpr::*;
        let v = match self {
            Const(c) => *c,
            Coord(side, i) => {
                let v = match side {
                    Side::X => x,
                    Side::Y => y,
                };
                *v.get(*i).ok_or_else(|| {
                    Error::Dimension(format!(
                        "{}[{i}] used with a vector of dimension {}",
                        side_name(*side),
                        v.len()
                    ))
                })?
            }
            Neg(e) => -e.eval_raw(x, y)?,
            Abs(e) => e.eval_raw(x, y)?.abs(),
            Binary(op, l, r) => {
                let a = l.eval_raw(x, y)?;
                let b = r.eval_raw(x, y)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(Error::DivisionByZero);
                        }
                        a / b
                    }
                    BinOp::Min => a.min(b),
                    BinOp::Max => a.max(b),
                    BinOp::Pow => a.powf(b),
                }
            }
            Dot => {
                same_len(x, y)?;
                x.iter().zip(y).fold(0.0, |acc, (a, b)| acc + a * b)
            }
            Dist2 => {
                same_len(x, y)?;
                x.iter()
                    .zip(y)
                    .fold(0.0, |acc, (a, b)| acc + (a - b) * (a - b))
            }
            Lt(l, r) => {
                let a = l.eval_raw(x, y)?;
                let b = r.eval_raw(x, y)?;
                if a < b {
                    1.0
                } else {
                    0.0
                }
            }
            Le(l, r) => {
                let a = l.eval_raw(x, y)?;
                let b = r.eval_raw(x, y)?;
                if a <= b {
                    1.0
                } else {
                    0.0
                }
            }
        };
        if v.is_nan() {
            return Err(Error::Numeric(format!("`{self}` evaluated to NaN")));
        }
        Ok(v)
    }

    /// Smallest vector dimensions `(dx, dy)` that cover every coordinate
    /// reference. Whole-vector builtins add no constraint here.
    pub fn required_dims(&self) -> (usize, usize) {
        use KernelExpr::*;
        match self {
            Const(_) | Dot | Dist2 => (0, 0),
            Coord(Side::X, i) => (i + 1, 0),
            Coord(Side::Y, i) => (0, i + 1),
            Neg(e) | Abs(e) => e.required_dims(),
            Binary(_, l, r) | Lt(l, r) | Le(l, r) => {
                let (a, b) = l.required_dims();
                let (c, d) = r.required_dims();
                (a.max(c), b.max(d))
            }
        }
    }

    fn uses_whole_vectors(&self) -> bool {
        use KernelExpr::*;
        match self {
            Dot | Dist2 => true,
            Const(_) | Coord(..) => false,
            Neg(e) | Abs(e) => e.uses_whole_vectors(),
            Binary(_, l, r) | Lt(l, r) | Le(l, r) => {
                l.uses_whole_vectors() || r.uses_whole_vectors()
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            KernelExpr::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
            KernelExpr::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
            _ => 3,
        }
    }
}

fn side_name(side: Side) -> &'static str {
    match side {
        Side::X => "x",
        Side::Y => "y",
    }
}

fn same_len(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() == y.len() {
        Ok(())
    } else {
        Err(Error::Dimension(format!(
            "x has dimension {}, y has {}",
            x.len(),
            y.len()
        )))
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &KernelExpr, min_prec: u8) -> fmt::Result {
    if e.precedence() < min_prec {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

/// Canonical printing with the minimal parentheses that reparse to the
/// same tree.
impl fmt::Display for KernelExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use KernelExpr::*;
        match self {
            // prints like the negation it reparses to
            Const(c) if c.is_sign_negative() => write!(f, "-{}", -c),
            Const(c) => write!(f, "{c}"),
            Coord(side, i) => write!(f, "{}[{i}]", side_name(*side)),
            Neg(e) => {
                f.write_str("-")?;
                write_operand(f, e, 3)
            }
            Abs(e) => write!(f, "abs({e})"),
            Binary(op, l, r) => {
                let (sym, prec) = match op {
                    BinOp::Add => ("+", 1),
                    BinOp::Sub => ("-", 1),
                    BinOp::Mul => ("*", 2),
                    BinOp::Div => ("/", 2),
                    BinOp::Min => return write!(f, "min({l}, {r})"),
                    BinOp::Max => return write!(f, "max({l}, {r})"),
                    BinOp::Pow => return write!(f, "pow({l}, {r})"),
                };
                write_operand(f, l, prec)?;
                write!(f, " {sym} ")?;
                write_operand(f, r, prec + 1)
            }
            Dot => f.write_str("dot(x, y)"),
            Dist2 => f.write_str("dist2(x, y)"),
            Lt(l, r) => write!(f, "lt({l}, {r})"),
            Le(l, r) => write!(f, "le({l}, {r})"),
        }
    }
}

impl std::str::FromStr for KernelExpr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Plus,
    Minus,
    Star,
    Slash,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(n) => format!("number {n}"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::End => "end of input".into(),
            t => format!("`{}`", tok_symbol(t)),
        }
    }
}

fn tok_symbol(t: &Tok) -> &'static str {
    match t {
        Tok::LParen => "(",
        Tok::RParen => ")",
        Tok::LBracket => "[",
        Tok::RBracket => "]",
        Tok::Comma => ",",
        Tok::Plus => "+",
        Tok::Minus => "-",
        Tok::Star => "*",
        Tok::Slash => "/",
        _ => "?",
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'[' => Tok::LBracket,
            b']' => Tok::RBracket,
            b',' => Tok::Comma,
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
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
                let v: f64 = text.parse().map_err(|_| Error::Syntax {
                    offset: start,
                    message: format!("malformed number `{text}`"),
                    expected: vec!["number".into()],
                })?;
                out.push((Tok::Num(v), start));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(src[start..i].to_owned()), start));
                continue;
            }
            _ => {
                let ch = src[start..].chars().next().unwrap_or('?');
                return Err(Error::Syntax {
                    offset: start,
                    message: format!("unexpected character `{ch}`"),
                    expected: vec!["expression".into()],
                });
            }
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

const FUNCTIONS: [&str; 8] = ["min", "max", "abs", "pow", "dot", "dist2", "lt", "le"];
const OPERATORS: [&str; 4] = ["+", "-", "*", "/"];

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if t != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &[&str]) -> Result<T> {
        Err(Error::Syntax {
            offset: self.offset(),
            message: format!("unexpected {}", self.peek().describe()),
            expected: expected.iter().map(|s| format!("`{s}`")).collect(),
        })
    }

    /// Consumes `tok`; on mismatch reports `expected`, which should also
    /// list the operators that could have continued the previous operand.
    fn expect(&mut self, tok: Tok, expected: &[&str]) -> Result<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.fail(expected)
        }
    }

    fn expr(&mut self) -> Result<KernelExpr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = KernelExpr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<KernelExpr> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = KernelExpr::binary(op, lhs, rhs);
        }
    }

    fn factor(&mut self) -> Result<KernelExpr> {
        const START: [&str; 6] = ["number", "x[", "y[", "function", "-", "("];
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(KernelExpr::Const(v))
            }
            Tok::Minus => {
                self.bump();
                Ok(KernelExpr::Neg(Box::new(self.factor()?)))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, &with_operators(&[")"]))?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                match name.as_str() {
                    "x" | "y" => self.coord(if name == "x" { Side::X } else { Side::Y }),
                    _ if FUNCTIONS.contains(&name.as_str()) => self.call(&name),
                    _ => {
                        self.pos -= 1;
                        Err(Error::Syntax {
                            offset: self.offset(),
                            message: format!("unknown identifier `{name}`"),
                            expected: START.iter().map(|s| format!("`{s}`")).collect(),
                        })
                    }
                }
            }
            _ => self.fail(&START),
        }
    }

    fn coord(&mut self, side: Side) -> Result<KernelExpr> {
        self.expect(Tok::LBracket, &["["])?;
        let index = match self.peek().clone() {
            Tok::Num(v) if v.fract() == 0.0 && v >= 0.0 && v < u32::MAX as f64 => {
                self.bump();
                v as usize
            }
            _ => return self.fail(&["index"]),
        };
        self.expect(Tok::RBracket, &["]"])?;
        Ok(KernelExpr::Coord(side, index))
    }

    fn call(&mut self, name: &str) -> Result<KernelExpr> {
        self.expect(Tok::LParen, &["("])?;
        if matches!(name, "dot" | "dist2") {
            self.bare_vectors()?;
            return Ok(if name == "dot" {
                KernelExpr::Dot
            } else {
                KernelExpr::Dist2
            });
        }
        let first = self.expr()?;
        if name == "abs" {
            self.expect(Tok::RParen, &with_operators(&[")"]))?;
            return Ok(KernelExpr::Abs(Box::new(first)));
        }
        self.expect(Tok::Comma, &with_operators(&[","]))?;
        let second = self.expr()?;
        self.expect(Tok::RParen, &with_operators(&[")"]))?;
        let (l, r) = (Box::new(first), Box::new(second));
        Ok(match name {
            "min" => KernelExpr::Binary(BinOp::Min, l, r),
            "max" => KernelExpr::Binary(BinOp::Max, l, r),
            "pow" => KernelExpr::Binary(BinOp::Pow, l, r),
            "lt" => KernelExpr::Lt(l, r),
            "le" => KernelExpr::Le(l, r),
            _ => unreachable!("checked against FUNCTIONS"),
        })
    }

    /// `x , y` or `y , x` as whole-vector arguments.
    fn bare_vectors(&mut self) -> Result<()> {
        let first = match self.peek() {
            Tok::Ident(s) if s == "x" || s == "y" => s.clone(),
            _ => return self.fail(&["x", "y"]),
        };
        self.bump();
        self.expect(Tok::Comma, &[","])?;
        let other = if first == "x" { "y" } else { "x" };
        match self.peek() {
            Tok::Ident(s) if s == other => {
                self.bump();
            }
            _ => return self.fail(&[other]),
        }
        self.expect(Tok::RParen, &[")"])
    }
}

fn with_operators(extra: &[&'static str]) -> Vec<&'static str> {
    extra.iter().copied().chain(OPERATORS).collect()
}

/// Parses kernel source text.
pub fn parse(src: &str) -> Result<KernelExpr> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return p.fail(&with_operators(&["end of input"]));
    }
    Ok(e)
}

/// An ordered list of points of a common dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    points: Vec<Vec<f64>>,
}

impl PointSet {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        if dim == 0 {
            return Err(Error::validation(
                "point set needs at least one point of dimension >= 1",
            ));
        }
        if let Some((i, p)) = points.iter().enumerate().find(|(_, p)| p.len() != dim) {
            return Err(Error::Dimension(format!(
                "point {i} has dimension {}, expected {dim}",
                p.len()
            )));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::validation("point coordinates must be finite"));
        }
        Ok(PointSet { dim, points })
    }

    /// One-dimensional points from a sequence of scalars.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        PointSet::new(values.iter().map(|&v| vec![v]).collect())
    }

    /// Parses the point file format: one point per line, no header.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut points = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::Parse {
                line: e.position().map_or(0, |p| p.line() as usize),
                column: 1,
                message: e.to_string(),
            })?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            if record.len() == 1 && record[0].is_empty() {
                continue;
            }
            let point = record
                .iter()
                .enumerate()
                .map(|(k, cell)| {
                    cell.parse::<f64>().map_err(|_| Error::Parse {
                        line,
                        column: k + 1,
                        message: format!("`{cell}` is not a decimal number"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            if let Some(first) = points.first() {
                let first: &Vec<f64> = first;
                if first.len() != point.len() {
                    return Err(Error::Parse {
                        line,
                        column: 1,
                        message: format!("expected {} fields, found {}", first.len(), point.len()),
                    });
                }
            }
            points.push(point);
        }
        PointSet::new(points)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        PointSet::parse_csv(&text)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn get(&self, i: usize) -> &[f64] {
        &self.points[i]
    }
}

/// Checks that `e` can be evaluated on points of the given dimensions.
pub fn check_dims(e: &KernelExpr, dx: usize, dy: usize) -> Result<()> {
    let (rx, ry) = e.required_dims();
    if rx > dx || ry > dy {
        return Err(Error::Dimension(format!(
            "kernel needs x of dimension >= {rx} and y of dimension >= {ry}, got {dx} and {dy}"
        )));
    }
    if e.uses_whole_vectors() && dx != dy {
        return Err(Error::Dimension(format!(
            "dot/dist2 need equal dimensions, got {dx} and {dy}"
        )));
    }
    Ok(())
}

/// Samples `value[i][j] = e(xs[i], ys[j])`.
///
/// Rows are evaluated in parallel and assembled by index.
pub fn sample_table(e: &KernelExpr, xs: &PointSet, ys: &PointSet) -> Result<FormulaTable> {
    check_dims(e, xs.dim(), ys.dim())?;
    let rows: Vec<Vec<f64>> = xs
        .points()
        .par_iter()
        .map(|x| {
            ys.points()
                .iter()
                .map(|y| e.eval(x, y))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    FormulaTable::new(
        (0..xs.len()).map(|i| format!("x{i}")).collect(),
        (0..ys.len()).map(|j| format!("y{j}")).collect(),
        rows.into_iter().flatten().collect(),
    )
}
