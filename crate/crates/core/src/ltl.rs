//! LTL with step-bounded until, evaluated on finite prefixes.
//!
//! ASCII grammar, loosest binding first:
//!
//! ```text
//! f ::= f -> f                      right associative
//!     | f | f
//!     | f & f
//!     | f U[i,j) f  |  f U f        right associative
//!     | !f | X f | F[i,j) f | G[i,j) f | F f | G f
//!     | true | false | atom | ( f )
//! ```
//!
//! Bounds are half-open `[i,j)` with `j` a natural number or `inf`. An
//! omitted bound means `[0,inf)`.
//!
//! A finite trace is judged against all its infinite extensions: the verdict
//! is `True` when every extension satisfies the formula, `False` when none
//! does and `Inconclusive` otherwise. Evaluation is exact on bounded
//! formulas and on the until fragment with propositional arguments. For
//! nested unbounded operators it may answer `Inconclusive` where a full
//! satisfiability check would decide.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Formula {
    True,
    False,
    Atom(String),
    Not(Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    /// `left U[lo,hi) right`; `hi == None` is unbounded.
    Until {
        lo: u32,
        hi: Option<u32>,
        left: Box<Formula>,
        right: Box<Formula>,
    },
    Eventually {
        lo: u32,
        hi: Option<u32>,
        inner: Box<Formula>,
    },
    Globally {
        lo: u32,
        hi: Option<u32>,
        inner: Box<Formula>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    True,
    False,
    Inconclusive,
}

impl Verdict {
    fn from_bool(b: bool) -> Self {
        if b {
            Verdict::True
        } else {
            Verdict::False
        }
    }

    fn not(self) -> Self {
        match self {
            Verdict::True => Verdict::False,
            Verdict::False => Verdict::True,
            Verdict::Inconclusive => Verdict::Inconclusive,
        }
    }

    fn or(self, other: Self) -> Self {
        match (self, other) {
            (Verdict::True, _) | (_, Verdict::True) => Verdict::True,
            (Verdict::False, Verdict::False) => Verdict::False,
            _ => Verdict::Inconclusive,
        }
    }

    fn and(self, other: Self) -> Self {
        self.not().or(other.not()).not()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LtlError {
    #[error("syntax error at column {}: {msg}", pos + 1)]
    Syntax { pos: usize, msg: String },
    #[error("cannot evaluate on an empty output sequence")]
    EmptyTrace,
    #[error("formula mentions {0} atomic propositions; at most 64 are supported")]
    TooManyAtoms(usize),
}

/// Anything that can answer "does proposition `atom` hold here".
pub trait Valuation {
    fn holds(&self, atom: &str) -> bool;
}

impl Valuation for BTreeSet<String> {
    fn holds(&self, atom: &str) -> bool {
        self.contains(atom)
    }
}

impl Valuation for HashSet<String> {
    fn holds(&self, atom: &str) -> bool {
        self.contains(atom)
    }
}

impl Valuation for BTreeSet<&str> {
    fn holds(&self, atom: &str) -> bool {
        self.contains(atom)
    }
}

impl<T: Valuation + ?Sized> Valuation for &T {
    fn holds(&self, atom: &str) -> bool {
        (**self).holds(atom)
    }
}

/// `Some(k)` when every trace with at least `k` outputs decides the
/// formula, `None` when no finite length suffices.
pub type Horizon = Option<usize>;

impl Formula {
    pub fn atom(name: &str) -> Self {
        Formula::Atom(name.to_string())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn next(f: Formula) -> Self {
        Formula::Next(Box::new(f))
    }

    pub fn until(lo: u32, hi: Option<u32>, left: Formula, right: Formula) -> Self {
        Formula::Until {
            lo,
            hi,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn eventually(lo: u32, hi: Option<u32>, inner: Formula) -> Self {
        Formula::Eventually {
            lo,
            hi,
            inner: Box::new(inner),
        }
    }

    pub fn globally(lo: u32, hi: Option<u32>, inner: Formula) -> Self {
        Formula::Globally {
            lo,
            hi,
            inner: Box::new(inner),
        }
    }

    /// True when the formula only uses `True`, atoms, `Not` and `Or`.
    pub fn is_core(&self) -> bool {
        match self {
            Formula::True | Formula::Atom(_) => true,
            Formula::Not(f) | Formula::Next(f) => f.is_core(),
            Formula::Or(a, b) => a.is_core() && b.is_core(),
            Formula::Until { left, right, .. } => left.is_core() && right.is_core(),
            _ => false,
        }
    }

    /// No temporal operators anywhere.
    pub fn is_propositional(&self) -> bool {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => true,
            Formula::Not(f) => f.is_propositional(),
            Formula::Or(a, b) | Formula::And(a, b) | Formula::Implies(a, b) => {
                a.is_propositional() && b.is_propositional()
            }
            _ => false,
        }
    }

    /// Rewrites sugar into `True / Atom / Not / Or / Next / Until`.
    pub fn desugar(&self) -> Formula {
        match self {
            Formula::True => Formula::True,
            Formula::False => Formula::not(Formula::True),
            Formula::Atom(a) => Formula::Atom(a.clone()),
            Formula::Not(f) => Formula::not(f.desugar()),
            Formula::Or(a, b) => Formula::or(a.desugar(), b.desugar()),
            Formula::And(a, b) => Formula::not(Formula::or(
                Formula::not(a.desugar()),
                Formula::not(b.desugar()),
            )),
            Formula::Implies(a, b) => Formula::or(Formula::not(a.desugar()), b.desugar()),
            Formula::Next(f) => Formula::next(f.desugar()),
            Formula::Until { lo, hi, left, right } => {
                Formula::until(*lo, *hi, left.desugar(), right.desugar())
            }
            Formula::Eventually { lo, hi, inner } => {
                Formula::until(*lo, *hi, Formula::True, inner.desugar())
            }
            Formula::Globally { lo, hi, inner } => Formula::not(Formula::until(
                *lo,
                *hi,
                Formula::True,
                Formula::not(inner.desugar()),
            )),
        }
    }

    pub fn horizon(&self) -> Horizon {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => Some(1),
            Formula::Not(f) => f.horizon(),
            Formula::Or(a, b) | Formula::And(a, b) | Formula::Implies(a, b) => {
                Some(a.horizon()?.max(b.horizon()?))
            }
            Formula::Next(f) => Some(1 + f.horizon()?),
            Formula::Until { hi, left, right, .. } => {
                let hi = (*hi)? as usize;
                Some(hi.saturating_sub(1) + left.horizon()?.max(right.horizon()?))
            }
            Formula::Eventually { hi, inner, .. } | Formula::Globally { hi, inner, .. } => {
                let hi = (*hi)? as usize;
                Some(hi.saturating_sub(1) + inner.horizon()?)
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => 1,
            Formula::Not(f) | Formula::Next(f) => 1 + f.depth(),
            Formula::Eventually { inner, .. } | Formula::Globally { inner, .. } => 1 + inner.depth(),
            Formula::Or(a, b) | Formula::And(a, b) | Formula::Implies(a, b) => {
                1 + a.depth().max(b.depth())
            }
            Formula::Until { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    /// Atomic propositions in order of first appearance.
    pub fn atoms(&self) -> Vec<String> {
        fn walk(f: &Formula, out: &mut Vec<String>) {
            match f {
                Formula::True | Formula::False => {}
                Formula::Atom(a) => {
                    if !out.contains(a) {
                        out.push(a.clone());
                    }
                }
                Formula::Not(f)
                | Formula::Next(f)
                | Formula::Eventually { inner: f, .. }
                | Formula::Globally { inner: f, .. } => walk(f, out),
                Formula::Or(a, b)
                | Formula::And(a, b)
                | Formula::Implies(a, b)
                | Formula::Until {
                    left: a, right: b, ..
                } => {
                    walk(a, out);
                    walk(b, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }

    /// Truth value of a propositional formula at one letter.
    ///
    /// Temporal operators are evaluated as if the letter repeated forever.
    pub fn holds_now<L: Valuation + ?Sized>(&self, letter: &L) -> bool {
        match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom(a) => letter.holds(a),
            Formula::Not(f) => !f.holds_now(letter),
            Formula::Or(a, b) => a.holds_now(letter) || b.holds_now(letter),
            Formula::And(a, b) => a.holds_now(letter) && b.holds_now(letter),
            Formula::Implies(a, b) => !a.holds_now(letter) || b.holds_now(letter),
            Formula::Next(f) => f.holds_now(letter),
            Formula::Until { lo, hi, left, right } => {
                let window = hi.is_none_or(|h| h > *lo);
                window && right.holds_now(letter) && (*lo == 0 || left.holds_now(letter))
            }
            Formula::Eventually { lo, hi, inner } => {
                hi.is_none_or(|h| h > *lo) && inner.holds_now(letter)
            }
            Formula::Globally { lo, hi, inner } => {
                !hi.is_none_or(|h| h > *lo) || inner.holds_now(letter)
            }
        }
    }
}

fn fmt_bound(f: &mut fmt::Formatter<'_>, lo: u32, hi: Option<u32>) -> fmt::Result {
    match hi {
        Some(h) => write!(f, "[{lo},{h})"),
        None => write!(f, "[{lo},inf)"),
    }
}

impl fmt::Display for Formula {
    /// Fully parenthesized; re-parses to the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::Not(g) => write!(f, "!({g})"),
            Formula::Or(a, b) => write!(f, "({a}) | ({b})"),
            Formula::And(a, b) => write!(f, "({a}) & ({b})"),
            Formula::Implies(a, b) => write!(f, "({a}) -> ({b})"),
            Formula::Next(g) => write!(f, "X ({g})"),
            Formula::Until { lo, hi, left, right } => {
                write!(f, "({left}) U")?;
                fmt_bound(f, *lo, *hi)?;
                write!(f, " ({right})")
            }
            Formula::Eventually { lo, hi, inner } => {
                write!(f, "F")?;
                fmt_bound(f, *lo, *hi)?;
                write!(f, " ({inner})")
            }
            Formula::Globally { lo, hi, inner } => {
                write!(f, "G")?;
                fmt_bound(f, *lo, *hi)?;
                write!(f, " ({inner})")
            }
        }
    }
}

// ---------------------------------------------------------------- parsing

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(u32),
    True,
    False,
    Inf,
    Not,
    And,
    Or,
    Implies,
    Next,
    Until,
    Eventually,
    Globally,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, LtlError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let single = match c {
            '!' => Some(Tok::Not),
            '&' => Some(Tok::And),
            '|' => Some(Tok::Or),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            ',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(t) = single {
            toks.push((t, start));
            i += 1;
            continue;
        }
        if c == '-' {
            if bytes.get(i + 1) == Some(&b'>') {
                toks.push((Tok::Implies, start));
                i += 2;
                continue;
            }
            return Err(LtlError::Syntax {
                pos: start,
                msg: "expected `->`".into(),
            });
        }
        if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let n = text[start..i].parse::<u32>().map_err(|_| LtlError::Syntax {
                pos: start,
                msg: "number too large".into(),
            })?;
            toks.push((Tok::Num(n), start));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let word = &text[start..i];
            let t = match word {
                "true" => Tok::True,
                "false" => Tok::False,
                "inf" => Tok::Inf,
                "X" => Tok::Next,
                "U" => Tok::Until,
                "F" => Tok::Eventually,
                "G" => Tok::Globally,
                _ => Tok::Ident(word.to_string()),
            };
            toks.push((t, start));
            continue;
        }
        return Err(LtlError::Syntax {
            pos: start,
            msg: format!("unexpected character `{c}`"),
        });
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(t, _)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |(_, p)| *p)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, LtlError> {
        Err(LtlError::Syntax {
            pos: self.pos(),
            msg: msg.into(),
        })
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.at).map(|(t, _)| t.clone());
        self.at += 1;
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn implication(&mut self) -> Result<Formula, LtlError> {
        let lhs = self.disjunction()?;
        if self.eat(&Tok::Implies) {
            let rhs = self.implication()?;
            return Ok(Formula::Implies(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, LtlError> {
        let mut lhs = self.conjunction()?;
        while self.eat(&Tok::Or) {
            let rhs = self.conjunction()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula, LtlError> {
        let mut lhs = self.until()?;
        while self.eat(&Tok::And) {
            let rhs = self.until()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn until(&mut self) -> Result<Formula, LtlError> {
        let lhs = self.unary()?;
        if self.eat(&Tok::Until) {
            let (lo, hi) = self.optional_bound()?;
            let rhs = self.until()?;
            return Ok(Formula::until(lo, hi, lhs, rhs));
        }
        Ok(lhs)
    }

    fn optional_bound(&mut self) -> Result<(u32, Option<u32>), LtlError> {
        if self.peek() != Some(&Tok::LBracket) {
            return Ok((0, None));
        }
        let open = self.pos();
        self.bump();
        let lo = match self.bump() {
            Some(Tok::Num(n)) => n,
            Some(Tok::Inf) => {
                self.at -= 1;
                return self.err("lower bound must be a natural number, not `inf`");
            }
            _ => {
                self.at = self.at.saturating_sub(1);
                return self.err("expected lower bound");
            }
        };
        if !self.eat(&Tok::Comma) {
            return self.err("expected `,` in bound");
        }
        let hi = match self.bump() {
            Some(Tok::Num(n)) => Some(n),
            Some(Tok::Inf) => None,
            _ => {
                self.at = self.at.saturating_sub(1);
                return self.err("expected upper bound or `inf`");
            }
        };
        match self.peek() {
            Some(Tok::RParen) => {
                self.bump();
            }
            Some(Tok::RBracket) => {
                return self.err("closed upper bounds `]` are not supported; use `[i,j)`");
            }
            _ => return self.err("expected `)` closing the bound"),
        }
        if let Some(h) = hi {
            if lo > h {
                return Err(LtlError::Syntax {
                    pos: open,
                    msg: format!("empty bound: lower {lo} exceeds upper {h}"),
                });
            }
        }
        Ok((lo, hi))
    }

    fn unary(&mut self) -> Result<Formula, LtlError> {
        let pos = self.pos();
        match self.bump() {
            Some(Tok::Not) => Ok(Formula::not(self.unary()?)),
            Some(Tok::Next) => Ok(Formula::next(self.unary()?)),
            Some(Tok::Eventually) => {
                let (lo, hi) = self.optional_bound()?;
                Ok(Formula::eventually(lo, hi, self.unary()?))
            }
            Some(Tok::Globally) => {
                let (lo, hi) = self.optional_bound()?;
                Ok(Formula::globally(lo, hi, self.unary()?))
            }
            Some(Tok::True) => Ok(Formula::True),
            Some(Tok::False) => Ok(Formula::False),
            Some(Tok::Ident(a)) => Ok(Formula::Atom(a)),
            Some(Tok::LParen) => {
                let inner = self.implication()?;
                if !self.eat(&Tok::RParen) {
                    return self.err("expected `)`");
                }
                Ok(inner)
            }
            Some(_) => Err(LtlError::Syntax {
                pos,
                msg: "expected a formula".into(),
            }),
            None => Err(LtlError::Syntax {
                pos,
                msg: "unexpected end of input".into(),
            }),
        }
    }
}

pub fn parse(text: &str) -> Result<Formula, LtlError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        at: 0,
        end: text.len(),
    };
    let f = p.implication()?;
    if p.at < p.toks.len() {
        return p.err("unexpected trailing input");
    }
    Ok(f)
}

impl std::str::FromStr for Formula {
    type Err = LtlError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

// ------------------------------------------------------------- evaluation

#[derive(Debug, Clone)]
enum Node {
    True,
    Atom(usize),
    Not(usize),
    Or(usize, usize),
    Next(usize),
    Until {
        lo: usize,
        hi: Option<usize>,
        left: usize,
        right: usize,
    },
}

/// A desugared formula compiled for repeated evaluation.
#[derive(Debug, Clone)]
pub struct Monitor {
    formula: Formula,
    atoms: Vec<String>,
    nodes: Vec<Node>,
    /// Value of each node at a position past the end of the trace.
    future: Vec<Verdict>,
    /// Completion enumeration budget, in number of completed words.
    completion_limit: u64,
}

/// Completions tried before falling back to the conservative answer.
const DEFAULT_COMPLETIONS: u64 = 1 << 16;

impl Monitor {
    pub fn new(f: &Formula) -> Result<Self, LtlError> {
        let formula = f.desugar();
        let atoms = formula.atoms();
        if atoms.len() > 64 {
            return Err(LtlError::TooManyAtoms(atoms.len()));
        }
        let mut m = Monitor {
            formula,
            atoms,
            nodes: Vec::new(),
            future: Vec::new(),
            completion_limit: DEFAULT_COMPLETIONS,
        };
        let f = m.formula.clone();
        m.compile(&f);
        m.future = m.future_values(&f);
        Ok(m)
    }

    pub fn formula(&self) -> &Formula {
        &self.formula
    }

    pub fn atoms(&self) -> &[String] {
        &self.atoms
    }

    pub fn horizon(&self) -> Horizon {
        self.formula.horizon()
    }

    fn compile(&mut self, f: &Formula) -> usize {
        let node = match f {
            Formula::True => Node::True,
            Formula::Atom(a) => Node::Atom(self.atoms.iter().position(|x| x == a).unwrap()),
            Formula::Not(g) => Node::Not(self.compile(g)),
            Formula::Or(a, b) => {
                let a = self.compile(a);
                Node::Or(a, self.compile(b))
            }
            Formula::Next(g) => Node::Next(self.compile(g)),
            Formula::Until { lo, hi, left, right } => {
                let left = self.compile(left);
                Node::Until {
                    lo: *lo as usize,
                    hi: hi.map(|h| h as usize),
                    left,
                    right: self.compile(right),
                }
            }
            _ => unreachable!("monitor compiles desugared formulas only"),
        };
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    /// For every node id, the value at an unobserved position: propositional
    /// subformulas are classified by truth table, the rest combine
    /// the classifications three-valuedly.
    fn future_values(&self, root: &Formula) -> Vec<Verdict> {
        let mut out = vec![Verdict::Inconclusive; self.nodes.len()];
        // nodes were pushed in post-order, matching a post-order walk of `root`
        let mut idx = 0;
        self.classify(root, &mut out, &mut idx);
        out
    }

    fn classify(&self, f: &Formula, out: &mut [Verdict], idx: &mut usize) -> Verdict {
        let v = match f {
            Formula::True => Verdict::True,
            Formula::Atom(_) => Verdict::Inconclusive,
            Formula::Not(g) => self.classify(g, out, idx).not(),
            Formula::Or(a, b) => {
                let va = self.classify(a, out, idx);
                let vb = self.classify(b, out, idx);
                va.or(vb)
            }
            Formula::Next(g) => self.classify(g, out, idx),
            Formula::Until { lo, hi, left, right } => {
                let vl = self.classify(left, out, idx);
                let vr = self.classify(right, out, idx);
                if hi.is_some_and(|h| h <= *lo) {
                    Verdict::False
                } else if *lo > 0 {
                    vl.and(vr)
                } else {
                    vr
                }
            }
            _ => unreachable!(),
        };
        let v = if f.is_propositional() {
            self.truth_table_class(f).unwrap_or(v)
        } else {
            v
        };
        out[*idx] = v;
        *idx += 1;
        v
    }

    fn truth_table_class(&self, f: &Formula) -> Option<Verdict> {
        let atoms = f.atoms();
        if atoms.len() > 16 {
            return None;
        }
        let mut seen_true = false;
        let mut seen_false = false;
        for bits in 0u32..(1 << atoms.len()) {
            let letter: BTreeSet<&str> = atoms
                .iter()
                .enumerate()
                .filter(|(i, _)| bits & (1 << i) != 0)
                .map(|(_, a)| a.as_str())
                .collect();
            if f.holds_now(&letter) {
                seen_true = true;
            } else {
                seen_false = true;
            }
        }
        Some(match (seen_true, seen_false) {
            (true, false) => Verdict::True,
            (false, true) => Verdict::False,
            _ => Verdict::Inconclusive,
        })
    }

    fn letters<L: Valuation>(&self, word: &[L]) -> Vec<u64> {
        word.iter()
            .map(|letter| {
                self.atoms
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| letter.holds(a))
                    .fold(0u64, |acc, (i, _)| acc | (1 << i))
            })
            .collect()
    }

    /// Three-valued evaluation over a word of atom bitmasks.
    fn eval_bits(&self, word: &[u64]) -> Verdict {
        let n = word.len();
        let mut vals: Vec<Vec<Verdict>> = Vec::with_capacity(self.nodes.len());
        for (id, node) in self.nodes.iter().enumerate() {
            let at = |vals: &Vec<Vec<Verdict>>, child: usize, k: usize| {
                if k < n {
                    vals[child][k]
                } else {
                    self.future[child]
                }
            };
            let row: Vec<Verdict> = match node {
                Node::True => vec![Verdict::True; n],
                Node::Atom(i) => word
                    .iter()
                    .map(|bits| Verdict::from_bool(bits & (1 << i) != 0))
                    .collect(),
                Node::Not(c) => vals[*c].iter().map(|v| v.not()).collect(),
                Node::Or(a, b) => (0..n).map(|k| vals[*a][k].or(vals[*b][k])).collect(),
                Node::Next(c) => (0..n).map(|k| at(&vals, *c, k + 1)).collect(),
                Node::Until { lo, hi, left, right } => (0..n)
                    .map(|k| {
                        let lo_pos = k + lo;
                        let hi_pos = hi.map(|h| k + h);
                        let below_hi = |l: usize| hi_pos.is_none_or(|h| l < h);
                        let mut result = Verdict::False;
                        let mut prefix = Verdict::True;
                        let mut l = k;
                        while l < n && below_hi(l) {
                            if l >= lo_pos {
                                result = result.or(prefix.and(vals[*right][l]));
                            }
                            prefix = prefix.and(vals[*left][l]);
                            if prefix == Verdict::False || result == Verdict::True {
                                break;
                            }
                            l += 1;
                        }
                        if l >= n && prefix != Verdict::False && result != Verdict::True {
                            // earliest unobserved witness position
                            let first = n.max(lo_pos);
                            if below_hi(first) {
                                let pre = if first > n {
                                    prefix.and(self.future[*left])
                                } else {
                                    prefix
                                };
                                result = result.or(pre.and(self.future[*right]));
                            }
                        }
                        result
                    })
                    .collect(),
            };
            debug_assert_eq!(row.len(), n);
            vals.push(row);
            let _ = id;
        }
        vals.last().map_or(Verdict::Inconclusive, |r| r[0])
    }

    /// Verdict of the formula on a finite output sequence.
    pub fn evaluate<L: Valuation>(&self, word: &[L]) -> Result<Verdict, LtlError> {
        if word.is_empty() {
            return Err(LtlError::EmptyTrace);
        }
        let bits = self.letters(word);
        Ok(self.evaluate_bits(bits))
    }

    fn evaluate_bits(&self, bits: Vec<u64>) -> Verdict {
        let quick = self.eval_bits(&bits);
        if quick != Verdict::Inconclusive {
            return quick;
        }
        // bounded formulas: decide by enumerating the finitely many relevant
        // future letters
        let Some(h) = self.horizon() else {
            return quick;
        };
        if bits.len() >= h {
            return quick;
        }
        let missing = (h - bits.len()) as u32;
        let per_letter = self.atoms.len() as u32;
        let total_bits = missing * per_letter;
        if total_bits >= 63 || (1u64 << total_bits) > self.completion_limit {
            return quick;
        }
        let mut seen_true = false;
        let mut seen_false = false;
        let mut word = bits.clone();
        word.resize(h, 0);
        let n = bits.len();
        let mask = if per_letter == 64 {
            u64::MAX
        } else {
            (1u64 << per_letter) - 1
        };
        for code in 0u64..(1u64 << total_bits) {
            for j in 0..missing as usize {
                word[n + j] = (code >> (j as u32 * per_letter)) & mask;
            }
            match self.eval_bits(&word) {
                Verdict::True => seen_true = true,
                Verdict::False => seen_false = true,
                Verdict::Inconclusive => return Verdict::Inconclusive,
            }
            if seen_true && seen_false {
                return Verdict::Inconclusive;
            }
        }
        match (seen_true, seen_false) {
            (true, false) => Verdict::True,
            (false, true) => Verdict::False,
            _ => Verdict::Inconclusive,
        }
    }
}

/// Convenience wrapper: desugars, compiles and evaluates in one go.
pub fn evaluate<L: Valuation>(word: &[L], f: &Formula) -> Result<Verdict, LtlError> {
    Monitor::new(f)?.evaluate(word)
}
