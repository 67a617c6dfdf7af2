//! A small expression language for potentials `f(u)` over the control range
//! (and `f(x, u)` over state x control for the total variant).
//!
//! Grammar (whitespace insensitive):
//!
//! ```text
//! Expr    -> Term  (('+' | '-') Term)*
//! Term    -> Factor (('*' | '/') Factor)*
//! Factor  -> Unary ('^' Factor)?          // '^' right-associative
//! Unary   -> '-' Unary | Primary
//! Primary -> number | ident | ident '(' Args ')' | '(' Expr ')'
//! ```
//!
//! Note that per this grammar `-u0^2` parses as `(-u0)^2`. Identifiers are
//! the variables `u0..u{m-1}`, `x0..x{d-1}` and the lowercase function names
//! `abs`, `exp`, `log` (natural), `min`, `max`, `sqrt`. There are no
//! comparison or conditional operators: potentials are continuous by
//! construction. Division, `log` and `sqrt` are guarded at evaluation time,
//! not parse time.

use nalgebra::DVector;
use std::fmt;
use thiserror::Error;

use crate::geometry::ConvexPolytope;
use crate::reachability::{LinearSystem, ReachError, trajectory};

#[derive(Debug, Error)]
pub enum PotentialError {
    #[error("parse error at byte {offset}: expected {expected}, found {found}")]
    ParseError { offset: usize, expected: String, found: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("function `{name}` at byte {offset} takes {expected} argument(s), got {got}")]
    ArityError { name: String, offset: usize, expected: usize, got: usize },
    #[error("domain error in `{expr}`: {reason} (input {value})")]
    DomainError { expr: String, reason: &'static str, value: f64 },
    #[error("potential uses state variables; supply a state or use the total mode")]
    StateRequired,
    #[error("control has length {got}, expected {expected}")]
    ControlLength { expected: usize, got: usize },
    #[error("state has length {got}, expected {expected}")]
    StateLength { expected: usize, got: usize },
    #[error("minimization requires a control-only potential")]
    NotControlOnly,
    #[error("grid must have at least 2 points per axis")]
    GridTooCoarse,
    #[error("simulation failed: {0}")]
    Reach(#[from] ReachError),
    #[error("geometry failure: {0}")]
    Geometry(#[from] crate::geometry::GeometryError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Abs,
    Exp,
    Log,
    Min,
    Max,
    Sqrt,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Abs => "abs",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Min => "min",
            Func::Max => "max",
            Func::Sqrt => "sqrt",
        }
    }

    fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        match name {
            "abs" => Some(Func::Abs),
            "exp" => Some(Func::Exp),
            "log" => Some(Func::Log),
            "min" => Some(Func::Min),
            "max" => Some(Func::Max),
            "sqrt" => Some(Func::Sqrt),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Number(f64),
    Control(usize),
    State(usize),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_prec(f, 0)
    }
}

impl Expr {
    /// Pretty-print with minimal parentheses; `prec` is the binding power of
    /// the context (0 loosest).
    fn write_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        let my_prec = match self {
            Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Binary(BinOp::Pow, ..) => 4,
            _ => 5,
        };
        let need = my_prec < prec;
        if need {
            write!(f, "(")?;
        }
        match self {
            Expr::Number(v) => {
                if *v == v.trunc() && v.abs() < 1e15 {
                    write!(f, "{v:.1}")?;
                } else {
                    write!(f, "{v}")?;
                }
            }
            Expr::Control(i) => write!(f, "u{i}")?,
            Expr::State(i) => write!(f, "x{i}")?,
            Expr::Neg(e) => {
                write!(f, "-")?;
                e.write_prec(f, 3)?;
            }
            Expr::Binary(op, a, b) => {
                let (sym, lp, rp) = match op {
                    BinOp::Add => (" + ", 1, 2),
                    BinOp::Sub => (" - ", 1, 2),
                    BinOp::Mul => (" * ", 2, 3),
                    BinOp::Div => (" / ", 2, 3),
                    // Right-associative: the left operand needs one level more.
                    BinOp::Pow => ("^", 5, 4),
                };
                a.write_prec(f, lp)?;
                write!(f, "{sym}")?;
                b.write_prec(f, rp)?;
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    a.write_prec(f, 0)?;
                }
                write!(f, ")")?;
            }
        }
        if need {
            write!(f, ")")?;
        }
        Ok(())
    }

    fn uses_state(&self) -> bool {
        match self {
            Expr::State(_) => true,
            Expr::Number(_) | Expr::Control(_) => false,
            Expr::Neg(e) => e.uses_state(),
            Expr::Binary(_, a, b) => a.uses_state() || b.uses_state(),
            Expr::Call(_, args) => args.iter().any(Expr::uses_state),
        }
    }
}

/// A compiled potential: immutable and freely shareable across threads.
#[derive(Clone, Debug)]
pub struct Potential {
    ast: Expr,
    uses_state: bool,
    state_dim: usize,
    control_dim: usize,
}

impl fmt::Display for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.ast.fmt(f)
    }
}

// ---------------------------------------------------------------------------
// lexer

#[derive(Clone, Debug, PartialEq)]
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
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number `{v}`"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
        }
    }
}

struct Spanned {
    tok: Tok,
    start: usize,
}

fn lex(src: &str) -> Result<Vec<Spanned>, PotentialError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0usize;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                out.push(Spanned { tok: Tok::Plus, start: i });
                i += 1;
            }
            '-' => {
                out.push(Spanned { tok: Tok::Minus, start: i });
                i += 1;
            }
            '*' => {
                out.push(Spanned { tok: Tok::Star, start: i });
                i += 1;
            }
            '/' => {
                out.push(Spanned { tok: Tok::Slash, start: i });
                i += 1;
            }
            '^' => {
                out.push(Spanned { tok: Tok::Caret, start: i });
                i += 1;
            }
            '(' => {
                out.push(Spanned { tok: Tok::LParen, start: i });
                i += 1;
            }
            ')' => {
                out.push(Spanned { tok: Tok::RParen, start: i });
                i += 1;
            }
            ',' => {
                out.push(Spanned { tok: Tok::Comma, start: i });
                i += 1;
            }
            '0'..='9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    if i >= bytes.len() || !bytes[i].is_ascii_digit() {
                        return Err(PotentialError::ParseError {
                            offset: i.min(bytes.len()),
                            expected: "digit after decimal point".into(),
                            found: found_at(src, i),
                        });
                    }
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &src[start..i];
                let value = text.parse::<f64>().map_err(|_| PotentialError::ParseError {
                    offset: start,
                    expected: "numeric literal".into(),
                    found: format!("`{text}`"),
                })?;
                out.push(Spanned { tok: Tok::Num(value), start });
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                out.push(Spanned { tok: Tok::Ident(src[start..i].to_string()), start });
            }
            _ => {
                return Err(PotentialError::ParseError {
                    offset: i,
                    expected: "expression token".into(),
                    found: format!("`{c}`"),
                });
            }
        }
    }
    Ok(out)
}

fn found_at(src: &str, offset: usize) -> String {
    if offset >= src.len() {
        "end of input".into()
    } else {
        format!("`{}`", &src[offset..src.len().min(offset + 1)])
    }
}

// ---------------------------------------------------------------------------
// parser

struct Parser<'a> {
    toks: Vec<Spanned>,
    pos: usize,
    src: &'a str,
    state_dim: usize,
    control_dim: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Spanned> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<&Spanned> {
        let t = self.toks.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn eof_offset(&self) -> usize {
        self.src.len()
    }

    fn expr(&mut self) -> Result<Expr, PotentialError> {
        let mut lhs = self.term()?;
        while let Some(s) = self.peek() {
            let op = match s.tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, PotentialError> {
        let mut lhs = self.factor()?;
        while let Some(s) = self.peek() {
            let op = match s.tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr, PotentialError> {
        let base = self.unary()?;
        if let Some(s) = self.peek() {
            if s.tok == Tok::Caret {
                self.pos += 1;
                let exp = self.factor()?; // right-associative
                return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exp)));
            }
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<Expr, PotentialError> {
        if let Some(s) = self.peek() {
            if s.tok == Tok::Minus {
                self.pos += 1;
                let inner = self.unary()?;
                return Ok(Expr::Neg(Box::new(inner)));
            }
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, PotentialError> {
        let Some(s) = self.next() else {
            return Err(PotentialError::ParseError {
                offset: self.eof_offset(),
                expected: "number, identifier or `(`".into(),
                found: "end of input".into(),
            });
        };
        let start = s.start;
        match s.tok.clone() {
            Tok::Num(v) => Ok(Expr::Number(v)),
            Tok::LParen => {
                let inner = self.expr()?;
                match self.next() {
                    Some(t) if t.tok == Tok::RParen => Ok(inner),
                    Some(t) => Err(PotentialError::ParseError {
                        offset: t.start,
                        expected: "`)`".into(),
                        found: t.tok.describe(),
                    }),
                    None => Err(PotentialError::ParseError {
                        offset: self.eof_offset(),
                        expected: "`)`".into(),
                        found: "end of input".into(),
                    }),
                }
            }
            Tok::Ident(name) => {
                // Function call?
                if matches!(self.peek(), Some(t) if t.tok == Tok::LParen) {
                    let Some(func) = Func::from_name(&name) else {
                        return Err(PotentialError::UnknownIdentifier { name, offset: start });
                    };
                    self.pos += 1; // consume '('
                    let mut args = vec![self.expr()?];
                    loop {
                        match self.next() {
                            Some(t) if t.tok == Tok::Comma => args.push(self.expr()?),
                            Some(t) if t.tok == Tok::RParen => break,
                            Some(t) => {
                                return Err(PotentialError::ParseError {
                                    offset: t.start,
                                    expected: "`,` or `)`".into(),
                                    found: t.tok.describe(),
                                });
                            }
                            None => {
                                return Err(PotentialError::ParseError {
                                    offset: self.eof_offset(),
                                    expected: "`,` or `)`".into(),
                                    found: "end of input".into(),
                                });
                            }
                        }
                    }
                    if args.len() != func.arity() {
                        return Err(PotentialError::ArityError {
                            name,
                            offset: start,
                            expected: func.arity(),
                            got: args.len(),
                        });
                    }
                    Ok(Expr::Call(func, args))
                } else {
                    self.variable(&name, start)
                }
            }
            tok => Err(PotentialError::ParseError {
                offset: start,
                expected: "number, identifier or `(`".into(),
                found: tok.describe(),
            }),
        }
    }

    fn variable(&self, name: &str, offset: usize) -> Result<Expr, PotentialError> {
        let unknown = || PotentialError::UnknownIdentifier { name: name.to_string(), offset };
        let (kind, idx_str) = match name.as_bytes().first() {
            Some(b'u') => ('u', &name[1..]),
            Some(b'x') => ('x', &name[1..]),
            _ => return Err(unknown()),
        };
        let idx: usize = idx_str.parse().map_err(|_| unknown())?;
        match kind {
            'u' if idx < self.control_dim => Ok(Expr::Control(idx)),
            'x' if idx < self.state_dim => Ok(Expr::State(idx)),
            _ => Err(unknown()),
        }
    }
}

/// Parse a potential over `u0..u{m-1}` and `x0..x{d-1}`.
///
/// # Examples
/// ```
/// let p = linpress::parse_potential("max(x0^2, abs(u0) - 0.5)", 2, 1).unwrap();
/// assert!(p.uses_state());
///
/// let f = linpress::parse_potential("(u0 - 0.3)^2 + 1", 0, 1).unwrap();
/// let u = nalgebra::DVector::from_vec(vec![0.3]);
/// assert_eq!(f.evaluate(None, &u).unwrap(), 1.0);
/// ```
pub fn parse_potential(src: &str, state_dim: usize, control_dim: usize) -> Result<Potential, PotentialError> {
    let toks = lex(src)?;
    if toks.is_empty() {
        return Err(PotentialError::ParseError {
            offset: 0,
            expected: "expression".into(),
            found: "end of input".into(),
        });
    }
    let mut parser = Parser { toks, pos: 0, src, state_dim, control_dim };
    let ast = parser.expr()?;
    if let Some(extra) = parser.peek() {
        return Err(PotentialError::ParseError {
            offset: extra.start,
            expected: "end of input".into(),
            found: extra.tok.describe(),
        });
    }
    let uses_state = ast.uses_state();
    Ok(Potential { ast, uses_state, state_dim, control_dim })
}

// ---------------------------------------------------------------------------
// evaluation

impl Potential {
    pub fn uses_state(&self) -> bool {
        self.uses_state
    }

    pub fn control_dim(&self) -> usize {
        self.control_dim
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn ast(&self) -> &Expr {
        &self.ast
    }

    /// Evaluate at a control value (and a state when the potential uses one).
    pub fn evaluate(&self, x: Option<&DVector<f64>>, u: &DVector<f64>) -> Result<f64, PotentialError> {
        if u.len() != self.control_dim {
            return Err(PotentialError::ControlLength { expected: self.control_dim, got: u.len() });
        }
        if self.uses_state {
            let x = x.ok_or(PotentialError::StateRequired)?;
            if x.len() != self.state_dim {
                return Err(PotentialError::StateLength { expected: self.state_dim, got: x.len() });
            }
        }
        eval_node(&self.ast, x, u)
    }
}

fn eval_node(e: &Expr, x: Option<&DVector<f64>>, u: &DVector<f64>) -> Result<f64, PotentialError> {
    let domain_err = |expr: &Expr, reason: &'static str, value: f64| PotentialError::DomainError {
        expr: expr.to_string(),
        reason,
        value,
    };
    Ok(match e {
        Expr::Number(v) => *v,
        Expr::Control(i) => u[*i],
        Expr::State(i) => x.expect("state checked by caller")[*i],
        Expr::Neg(inner) => -eval_node(inner, x, u)?,
        Expr::Binary(op, a, b) => {
            let va = eval_node(a, x, u)?;
            let vb = eval_node(b, x, u)?;
            match op {
                BinOp::Add => va + vb,
                BinOp::Sub => va - vb,
                BinOp::Mul => va * vb,
                BinOp::Div => {
                    if vb.abs() < 1e-300 {
                        return Err(domain_err(e, "division by (near) zero", vb));
                    }
                    va / vb
                }
                BinOp::Pow => {
                    let r = va.powf(vb);
                    if r.is_nan() {
                        return Err(domain_err(e, "negative base with fractional exponent", va));
                    }
                    r
                }
            }
        }
        Expr::Call(func, args) => {
            let v0 = eval_node(&args[0], x, u)?;
            match func {
                Func::Abs => v0.abs(),
                Func::Exp => v0.exp(),
                Func::Log => {
                    if v0 <= 0.0 {
                        return Err(domain_err(e, "log of a nonpositive value", v0));
                    }
                    v0.ln()
                }
                Func::Sqrt => {
                    if v0 < 0.0 {
                        return Err(domain_err(e, "sqrt of a negative value", v0));
                    }
                    v0.sqrt()
                }
                Func::Min => v0.min(eval_node(&args[1], x, u)?),
                Func::Max => v0.max(eval_node(&args[1], x, u)?),
            }
        }
    })
}

/// Birkhoff sum along a trajectory: `sum_i f(u_i)` for control-only
/// potentials, `sum_i f(x_i, u_i)` with `x_0 = x` for state-dependent ones.
pub fn birkhoff_sum(
    p: &Potential,
    sys: &LinearSystem,
    x: &DVector<f64>,
    controls: &[DVector<f64>],
) -> Result<f64, PotentialError> {
    if p.uses_state {
        let traj = trajectory(sys, x, controls)?;
        let mut acc = 0.0;
        for (i, u) in controls.iter().enumerate() {
            acc += p.evaluate(Some(&traj.states[i]), u)?;
        }
        Ok(acc)
    } else {
        let mut acc = 0.0;
        for u in controls {
            sys.control_admissible(u)?;
            acc += p.evaluate(None, u)?;
        }
        Ok(acc)
    }
}

/// Result of minimizing a potential over the control range.
#[derive(Clone, Debug)]
pub struct Minimum {
    pub argmin: DVector<f64>,
    pub value: f64,
}

/// Derivative-free minimization of a control-only potential over a polytope:
/// a grid over the bounding box (filtered to `U`) plus all vertices and the
/// origin, followed by `refine_iters` rounds of local grid refinement with
/// shrink factor 0.3 around the incumbent, projecting candidates into `U`.
///
/// If no grid point lands inside `U`, the vertex evaluations alone seed the
/// search; the refinement still projects into `U`, so the result is always
/// feasible.
pub fn minimize_over_u(
    p: &Potential,
    u_poly: &ConvexPolytope,
    grid: usize,
    refine_iters: usize,
) -> Result<Minimum, PotentialError> {
    if p.uses_state {
        return Err(PotentialError::NotControlOnly);
    }
    if grid < 2 {
        return Err(PotentialError::GridTooCoarse);
    }
    let m = u_poly.dim();
    if m != p.control_dim {
        return Err(PotentialError::ControlLength { expected: p.control_dim, got: m });
    }
    let hs = if m <= 3 { Some(u_poly.halfspaces()?) } else { None };
    let inside = |pt: &DVector<f64>| -> Result<bool, PotentialError> {
        match hs {
            Some(hs) => Ok(hs.iter().all(|h| h.margin(pt) >= -1e-9)),
            None => Ok(u_poly.contains_point(pt, 1e-9)?),
        }
    };

    let (lo, hi) = u_poly.bounding_box();
    let mut best: Option<Minimum> = None;
    let consider = |pt: DVector<f64>, best: &mut Option<Minimum>| -> Result<(), PotentialError> {
        let value = p.evaluate(None, &pt)?;
        if best.as_ref().is_none_or(|b| value < b.value) {
            *best = Some(Minimum { argmin: pt, value });
        }
        Ok(())
    };

    // Global pass: box grid filtered to U, vertices, origin.
    for pt in grid_points(&lo, &hi, grid) {
        if inside(&pt)? {
            consider(pt, &mut best)?;
        }
    }
    for vtx in u_poly.vertices() {
        consider(vtx.clone(), &mut best)?;
    }
    let zero = DVector::zeros(m);
    if inside(&zero)? {
        consider(zero, &mut best)?;
    }
    let mut incumbent = best.expect("vertex set nonempty");

    // Local refinement.
    let mut half: DVector<f64> = (&hi - &lo) * 0.5;
    for _ in 0..refine_iters {
        half *= 0.3;
        let center = incumbent.argmin.clone();
        let lo_loc = &center - &half;
        let hi_loc = &center + &half;
        for pt in grid_points(&lo_loc, &hi_loc, grid) {
            let candidate = if inside(&pt)? { pt } else { u_poly.euclidean_projection(&pt).1 };
            let value = p.evaluate(None, &candidate)?;
            if value < incumbent.value {
                incumbent = Minimum { argmin: candidate, value };
            }
        }
    }
    Ok(incumbent)
}

fn grid_points(lo: &DVector<f64>, hi: &DVector<f64>, grid: usize) -> Vec<DVector<f64>> {
    let m = lo.len();
    let mut out = Vec::with_capacity(grid.pow(m as u32));
    let mut idx = vec![0usize; m];
    loop {
        let mut pt = DVector::zeros(m);
        for j in 0..m {
            let t = idx[j] as f64 / (grid - 1) as f64;
            pt[j] = lo[j] + t * (hi[j] - lo[j]);
        }
        out.push(pt);
        // Odometer increment.
        let mut j = 0;
        loop {
            if j == m {
                return out;
            }
            idx[j] += 1;
            if idx[j] < grid {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}
