//! Linear temporal logic over atomic propositions.
//!
//! The tree is generic over its leaf type so the same operator structure can
//! carry grounded proposition names ([`LtlFormula`]) or lifted propositional
//! function applications (see [`crate::template`]).
//!
//! Concrete syntax uses whitespace-separated tokens `! & | G F U ( )`, the
//! constants `true` / `false`, and bare identifiers for atoms. Unary operators
//! bind tightest, then `U`, then `&`, then `|`; binary operators associate to
//! the left.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// An LTL formula tree with leaves of type `A`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ltl<A> {
    True,
    False,
    Atom(A),
    Not(Box<Ltl<A>>),
    And(Box<Ltl<A>>, Box<Ltl<A>>),
    Or(Box<Ltl<A>>, Box<Ltl<A>>),
    Finally(Box<Ltl<A>>),
    Globally(Box<Ltl<A>>),
    Until(Box<Ltl<A>>, Box<Ltl<A>>),
}

/// A grounded formula whose atoms are proposition identifiers.
pub type LtlFormula = Ltl<String>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LtlError {
    #[error("empty input")]
    EmptyInput,
    #[error("syntax error at token {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("trace must contain at least one step")]
    EmptyTrace,
}

impl<A> Ltl<A> {
    pub fn atom(a: impl Into<A>) -> Self {
        Ltl::Atom(a.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Self) -> Self {
        Ltl::Not(Box::new(f))
    }

    pub fn and(l: Self, r: Self) -> Self {
        Ltl::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Self, r: Self) -> Self {
        Ltl::Or(Box::new(l), Box::new(r))
    }

    pub fn finally(f: Self) -> Self {
        Ltl::Finally(Box::new(f))
    }

    pub fn globally(f: Self) -> Self {
        Ltl::Globally(Box::new(f))
    }

    pub fn until(l: Self, r: Self) -> Self {
        Ltl::Until(Box::new(l), Box::new(r))
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Ltl::True)
    }

    pub fn is_false(&self) -> bool {
        matches!(self, Ltl::False)
    }

    /// Rebuilds the tree with every leaf transformed by `f`.
    pub fn map_atoms<B>(&self, f: &mut impl FnMut(&A) -> Ltl<B>) -> Ltl<B> {
        self.try_map_atoms(&mut |a| Ok::<_, std::convert::Infallible>(f(a)))
            .unwrap_or_else(|never| match never {})
    }

    pub fn try_map_atoms<B, E>(
        &self,
        f: &mut impl FnMut(&A) -> Result<Ltl<B>, E>,
    ) -> Result<Ltl<B>, E> {
        Ok(match self {
            Ltl::True => Ltl::True,
            Ltl::False => Ltl::False,
            Ltl::Atom(a) => f(a)?,
            Ltl::Not(c) => Ltl::not(c.try_map_atoms(f)?),
            Ltl::And(l, r) => Ltl::and(l.try_map_atoms(f)?, r.try_map_atoms(f)?),
            Ltl::Or(l, r) => Ltl::or(l.try_map_atoms(f)?, r.try_map_atoms(f)?),
            Ltl::Finally(c) => Ltl::finally(c.try_map_atoms(f)?),
            Ltl::Globally(c) => Ltl::globally(c.try_map_atoms(f)?),
            Ltl::Until(l, r) => Ltl::until(l.try_map_atoms(f)?, r.try_map_atoms(f)?),
        })
    }

    /// Leaves in left-to-right order, duplicates included.
    pub fn leaves(&self) -> Vec<&A> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a A>) {
        match self {
            Ltl::True | Ltl::False => {}
            Ltl::Atom(a) => out.push(a),
            Ltl::Not(c) | Ltl::Finally(c) | Ltl::Globally(c) => c.collect_leaves(out),
            Ltl::And(l, r) | Ltl::Or(l, r) | Ltl::Until(l, r) => {
                l.collect_leaves(out);
                r.collect_leaves(out);
            }
        }
    }

    /// True when both trees have the same operators in the same positions,
    /// ignoring leaf contents.
    pub fn same_shape<B>(&self, other: &Ltl<B>) -> bool {
        match (self, other) {
            (Ltl::True, Ltl::True) | (Ltl::False, Ltl::False) | (Ltl::Atom(_), Ltl::Atom(_)) => {
                true
            }
            (Ltl::Not(a), Ltl::Not(b))
            | (Ltl::Finally(a), Ltl::Finally(b))
            | (Ltl::Globally(a), Ltl::Globally(b)) => a.same_shape(b),
            (Ltl::And(a, b), Ltl::And(c, d))
            | (Ltl::Or(a, b), Ltl::Or(c, d))
            | (Ltl::Until(a, b), Ltl::Until(c, d)) => a.same_shape(c) && b.same_shape(d),
            _ => false,
        }
    }

    /// Nesting depth of operators; leaves have depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Ltl::True | Ltl::False | Ltl::Atom(_) => 0,
            Ltl::Not(c) | Ltl::Finally(c) | Ltl::Globally(c) => 1 + c.depth(),
            Ltl::And(l, r) | Ltl::Or(l, r) | Ltl::Until(l, r) => 1 + l.depth().max(r.depth()),
        }
    }

    pub fn contains_globally(&self) -> bool {
        match self {
            Ltl::Globally(_) => true,
            Ltl::True | Ltl::False | Ltl::Atom(_) => false,
            Ltl::Not(c) | Ltl::Finally(c) => c.contains_globally(),
            Ltl::And(l, r) | Ltl::Or(l, r) | Ltl::Until(l, r) => {
                l.contains_globally() || r.contains_globally()
            }
        }
    }

    fn is_temporal_free(&self) -> bool {
        match self {
            Ltl::True | Ltl::False | Ltl::Atom(_) => true,
            Ltl::Finally(_) | Ltl::Globally(_) | Ltl::Until(..) => false,
            Ltl::Not(c) => c.is_temporal_free(),
            Ltl::And(l, r) | Ltl::Or(l, r) => l.is_temporal_free() && r.is_temporal_free(),
        }
    }

    /// Syntactically co-safe: no `G`, and no temporal operator under negation.
    pub fn is_syntactically_cosafe(&self) -> bool {
        match self {
            Ltl::True | Ltl::False | Ltl::Atom(_) => true,
            Ltl::Globally(_) => false,
            Ltl::Not(c) => c.is_temporal_free(),
            Ltl::Finally(c) => c.is_syntactically_cosafe(),
            Ltl::And(l, r) | Ltl::Or(l, r) | Ltl::Until(l, r) => {
                l.is_syntactically_cosafe() && r.is_syntactically_cosafe()
            }
        }
    }
}

impl<A: Clone + Ord> Ltl<A> {
    /// Distinct atoms of the formula.
    pub fn atoms(&self) -> BTreeSet<A> {
        self.leaves().into_iter().cloned().collect()
    }
}

const METACHARS: [char; 5] = ['(', ')', '!', '&', '|'];
const KEYWORDS: [&str; 5] = ["F", "G", "U", "true", "false"];

/// Whether `name` can be used as an atom in the concrete syntax.
pub fn is_valid_atom_name(name: &str) -> bool {
    !name.is_empty()
        && !name
            .chars()
            .any(|c| c.is_whitespace() || METACHARS.contains(&c))
        && !KEYWORDS.contains(&name)
}

fn tokenize(text: &str) -> Vec<&str> {
    let mut tokens = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() || METACHARS.contains(&c) {
            if let Some(s) = start.take() {
                tokens.push(&text[s..i]);
            }
            if !c.is_whitespace() {
                tokens.push(&text[i..i + c.len_utf8()]);
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        tokens.push(&text[s..]);
    }
    tokens
}

struct Parser<'a> {
    tokens: Vec<&'a str>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a str> {
        self.tokens.get(self.pos).copied()
    }

    fn error(&self, message: impl Into<String>) -> LtlError {
        LtlError::Syntax {
            position: self.pos,
            message: message.into(),
        }
    }

    fn expect(&mut self, tok: &str) -> Result<(), LtlError> {
        match self.peek() {
            Some(t) if t == tok => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => Err(self.error(format!("expected `{tok}`, found `{t}`"))),
            None => Err(self.error(format!("expected `{tok}`, found end of input"))),
        }
    }

    fn disjunction(&mut self) -> Result<LtlFormula, LtlError> {
        let mut left = self.conjunction()?;
        while self.peek() == Some("|") {
            self.pos += 1;
            left = Ltl::or(left, self.conjunction()?);
        }
        Ok(left)
    }

    fn conjunction(&mut self) -> Result<LtlFormula, LtlError> {
        let mut left = self.until()?;
        while self.peek() == Some("&") {
            self.pos += 1;
            left = Ltl::and(left, self.until()?);
        }
        Ok(left)
    }

    fn until(&mut self) -> Result<LtlFormula, LtlError> {
        let mut left = self.unary()?;
        while self.peek() == Some("U") {
            self.pos += 1;
            left = Ltl::until(left, self.unary()?);
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<LtlFormula, LtlError> {
        match self.peek() {
            Some("!") => {
                self.pos += 1;
                Ok(Ltl::not(self.unary()?))
            }
            Some("F") => {
                self.pos += 1;
                Ok(Ltl::finally(self.unary()?))
            }
            Some("G") => {
                self.pos += 1;
                Ok(Ltl::globally(self.unary()?))
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<LtlFormula, LtlError> {
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some("(") => {
                self.pos += 1;
                let inner = self.disjunction()?;
                self.expect(")")?;
                Ok(inner)
            }
            Some("true") => {
                self.pos += 1;
                Ok(Ltl::True)
            }
            Some("false") => {
                self.pos += 1;
                Ok(Ltl::False)
            }
            Some(t) if is_valid_atom_name(t) => {
                self.pos += 1;
                Ok(Ltl::Atom(t.to_string()))
            }
            Some(t) => Err(self.error(format!("unexpected token `{t}`"))),
        }
    }
}

/// Parses the token syntax into a formula.
pub fn parse_ltl(text: &str) -> Result<LtlFormula, LtlError> {
    let tokens = tokenize(text);
    if tokens.is_empty() {
        return Err(LtlError::EmptyInput);
    }
    let mut parser = Parser { tokens, pos: 0 };
    let formula = parser.disjunction()?;
    if let Some(t) = parser.peek() {
        return Err(parser.error(format!("unexpected trailing token `{t}`")));
    }
    Ok(formula)
}

/// Canonical, fully parenthesized text of a formula.
pub fn format_ltl<A: fmt::Display>(f: &Ltl<A>) -> String {
    f.to_string()
}

impl<A: fmt::Display> Ltl<A> {
    fn fmt_inner(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ltl::And(l, r) => write!(out, "{l} & {r}"),
            Ltl::Or(l, r) => write!(out, "{l} | {r}"),
            Ltl::Until(l, r) => write!(out, "{l} U {r}"),
            other => write!(out, "{other}"),
        }
    }
}

impl<A: fmt::Display> fmt::Display for Ltl<A> {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ltl::True => write!(out, "true"),
            Ltl::False => write!(out, "false"),
            Ltl::Atom(a) => write!(out, "{a}"),
            Ltl::Not(c) | Ltl::Finally(c) | Ltl::Globally(c) => {
                let op = match self {
                    Ltl::Not(_) => "!",
                    Ltl::Finally(_) => "F",
                    _ => "G",
                };
                write!(out, "{op} ( ")?;
                c.fmt_inner(out)?;
                write!(out, " )")
            }
            Ltl::And(..) | Ltl::Or(..) | Ltl::Until(..) => {
                write!(out, "( ")?;
                self.fmt_inner(out)?;
                write!(out, " )")
            }
        }
    }
}

/// A finite sequence of label sets.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    pub steps: Vec<BTreeSet<String>>,
}

impl Trace {
    pub fn new(steps: Vec<BTreeSet<String>>) -> Self {
        Trace { steps }
    }

    /// Builds a trace from per-step atom lists.
    pub fn from_steps<S: AsRef<str>>(steps: &[&[S]]) -> Self {
        Trace {
            steps: steps
                .iter()
                .map(|s| s.iter().map(|a| a.as_ref().to_string()).collect())
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Satisfaction at position 0 under finite-trace semantics.
pub fn evaluate_trace(f: &LtlFormula, trace: &Trace) -> Result<bool, LtlError> {
    if trace.is_empty() {
        return Err(LtlError::EmptyTrace);
    }
    Ok(satisfaction(f, &trace.steps)[0])
}

// Per-position truth values, computed bottom-up.
fn satisfaction(f: &LtlFormula, steps: &[BTreeSet<String>]) -> Vec<bool> {
    let n = steps.len();
    match f {
        Ltl::True => vec![true; n],
        Ltl::False => vec![false; n],
        Ltl::Atom(a) => steps.iter().map(|s| s.contains(a)).collect(),
        Ltl::Not(c) => {
            let mut v = satisfaction(c, steps);
            v.iter_mut().for_each(|x| *x = !*x);
            v
        }
        Ltl::And(l, r) | Ltl::Or(l, r) => {
            let conj = matches!(f, Ltl::And(..));
            let mut v = satisfaction(l, steps);
            for (a, b) in v.iter_mut().zip(satisfaction(r, steps)) {
                *a = if conj { *a && b } else { *a || b };
            }
            v
        }
        Ltl::Finally(c) => {
            let mut v = satisfaction(c, steps);
            for i in (0..n.saturating_sub(1)).rev() {
                v[i] = v[i] || v[i + 1];
            }
            v
        }
        Ltl::Globally(c) => {
            let mut v = satisfaction(c, steps);
            for i in (0..n.saturating_sub(1)).rev() {
                v[i] = v[i] && v[i + 1];
            }
            v
        }
        Ltl::Until(l, r) => {
            let l = satisfaction(l, steps);
            let mut v = satisfaction(r, steps);
            let mut next = false;
            for i in (0..n).rev() {
                v[i] = v[i] || (l[i] && next);
                next = v[i];
            }
            v
        }
    }
}

/// Replaces every atom in `map`'s domain by a copy of its image.
pub fn substitute_atoms(f: &LtlFormula, map: &BTreeMap<String, LtlFormula>) -> LtlFormula {
    f.map_atoms(&mut |a| map.get(a).cloned().unwrap_or_else(|| Ltl::Atom(a.clone())))
}

/// Distinct atom names of a grounded formula.
pub fn atoms(f: &LtlFormula) -> BTreeSet<String> {
    f.atoms()
}

/// Applies the Boolean constant and idempotence identities until nothing
/// changes. Temporal operators are kept as they are; their operands are
/// simplified.
pub fn simplify<A: Clone + PartialEq>(f: &Ltl<A>) -> Ltl<A> {
    match f {
        Ltl::True | Ltl::False | Ltl::Atom(_) => f.clone(),
        Ltl::Not(c) => match simplify(c) {
            Ltl::True => Ltl::False,
            Ltl::False => Ltl::True,
            c => Ltl::not(c),
        },
        Ltl::And(..) => simplify_chain(f, true),
        Ltl::Or(..) => simplify_chain(f, false),
        Ltl::Finally(c) => Ltl::finally(simplify(c)),
        Ltl::Globally(c) => Ltl::globally(simplify(c)),
        Ltl::Until(l, r) => Ltl::until(simplify(l), simplify(r)),
    }
}

fn flatten_chain<'a, A>(f: &'a Ltl<A>, conj: bool, out: &mut Vec<&'a Ltl<A>>) {
    match (f, conj) {
        (Ltl::And(l, r), true) | (Ltl::Or(l, r), false) => {
            flatten_chain(l, conj, out);
            flatten_chain(r, conj, out);
        }
        _ => out.push(f),
    }
}

// Simplifies an associative chain of one connective. The original nesting
// is kept unless an operand is dropped.
fn simplify_chain<A: Clone + PartialEq>(f: &Ltl<A>, conj: bool) -> Ltl<A> {
    let (unit, zero) = if conj {
        (Ltl::True, Ltl::False)
    } else {
        (Ltl::False, Ltl::True)
    };
    let (l, r) = match f {
        Ltl::And(l, r) | Ltl::Or(l, r) => (simplify(l), simplify(r)),
        _ => unreachable!("simplify_chain called on a non-binary node"),
    };
    let rebuilt = if conj { Ltl::and(l, r) } else { Ltl::or(l, r) };
    let mut operands = Vec::new();
    flatten_chain(&rebuilt, conj, &mut operands);
    if operands.iter().any(|o| **o == zero) {
        return zero;
    }
    let mut kept: Vec<&Ltl<A>> = Vec::with_capacity(operands.len());
    for o in &operands {
        if **o != unit && !kept.contains(o) {
            kept.push(o);
        }
    }
    if kept.len() == operands.len() {
        return rebuilt;
    }
    let mut iter = kept.into_iter().cloned();
    match iter.next() {
        None => unit,
        Some(first) => iter.fold(first, |acc, o| {
            if conj {
                Ltl::and(acc, o)
            } else {
                Ltl::or(acc, o)
            }
        }),
    }
}
