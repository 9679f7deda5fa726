use std::fmt;

use serde::{Deserialize, Serialize};

use super::duration::Duration;

/// What an atomic proposition observes on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AtomKind {
    Overload(u32),
    Blackout(u32),
    Generic,
}

/// An atomic proposition such as `oload_3` or `blackout_1`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    name: String,
    kind: AtomKind,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid atom name `{0}` (expected [a-z][a-z0-9_]*)")]
pub struct InvalidAtomName(pub String);

impl Atom {
    pub fn new(name: impl Into<String>) -> Result<Self, InvalidAtomName> {
        let name = name.into();
        if !is_valid_atom_name(&name) {
            return Err(InvalidAtomName(name));
        }
        let kind = infer_kind(&name);
        Ok(Atom { name, kind })
    }

    pub fn overload(line: u32) -> Self {
        Atom {
            name: format!("oload_{line}"),
            kind: AtomKind::Overload(line),
        }
    }

    pub fn blackout(node: u32) -> Self {
        Atom {
            name: format!("blackout_{node}"),
            kind: AtomKind::Blackout(node),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> AtomKind {
        self.kind
    }
}

impl Serialize for Atom {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.name)
    }
}

impl<'de> Deserialize<'de> for Atom {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let name = String::deserialize(deserializer)?;
        Atom::new(name).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

pub(crate) fn is_valid_atom_name(name: &str) -> bool {
    let mut bytes = name.bytes();
    matches!(bytes.next(), Some(b'a'..=b'z'))
        && bytes.all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_')
}

fn infer_kind(name: &str) -> AtomKind {
    let id_after = |prefix: &str| {
        name.strip_prefix(prefix)
            .filter(|rest| !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()))
            .and_then(|rest| rest.parse::<u32>().ok())
    };
    if let Some(id) = id_after("oload_") {
        AtomKind::Overload(id)
    } else if let Some(id) = id_after("blackout_") {
        AtomKind::Blackout(id)
    } else {
        AtomKind::Generic
    }
}

/// An atom or its negation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub atom: Atom,
    pub positive: bool,
}

impl Literal {
    pub fn pos(atom: Atom) -> Self {
        Literal { atom, positive: true }
    }

    pub fn neg(atom: Atom) -> Self {
        Literal { atom, positive: false }
    }

    pub fn negated(&self) -> Self {
        Literal {
            atom: self.atom.clone(),
            positive: !self.positive,
        }
    }

    /// Truth value of the literal given the value of its atom.
    pub fn holds(&self, atom_value: bool) -> bool {
        atom_value == self.positive
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "{}", self.atom)
        } else {
            write!(f, "!{}", self.atom)
        }
    }
}

/// Metric temporal logic restricted to the bounded-eventually fragment.
///
/// `Eventually` is the untimed operator; it parses so that callers get a
/// precise "unsupported" diagnostic instead of a syntax error.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum MtlFormula {
    Atom(Atom),
    Not(Box<MtlFormula>),
    And(Box<MtlFormula>, Box<MtlFormula>),
    Or(Box<MtlFormula>, Box<MtlFormula>),
    Implies(Box<MtlFormula>, Box<MtlFormula>),
    Globally(Box<MtlFormula>),
    EventuallyWithin(Duration, Duration, Box<MtlFormula>),
    Eventually(Box<MtlFormula>),
}

/// Linear temporal logic over sampled sequences.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum LtlFormula {
    Atom(Atom),
    Not(Box<LtlFormula>),
    And(Box<LtlFormula>, Box<LtlFormula>),
    Or(Box<LtlFormula>, Box<LtlFormula>),
    Implies(Box<LtlFormula>, Box<LtlFormula>),
    Globally(Box<LtlFormula>),
    Eventually(Box<LtlFormula>),
    Next(Box<LtlFormula>),
    NextPow(u32, Box<LtlFormula>),
}

impl MtlFormula {
    pub fn atom(a: Atom) -> Self {
        MtlFormula::Atom(a)
    }

    pub fn not(f: MtlFormula) -> Self {
        MtlFormula::Not(Box::new(f))
    }

    pub fn and(a: MtlFormula, b: MtlFormula) -> Self {
        MtlFormula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: MtlFormula, b: MtlFormula) -> Self {
        MtlFormula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: MtlFormula, b: MtlFormula) -> Self {
        MtlFormula::Implies(Box::new(a), Box::new(b))
    }

    pub fn globally(f: MtlFormula) -> Self {
        MtlFormula::Globally(Box::new(f))
    }

    pub fn eventually_within(lo: Duration, hi: Duration, f: MtlFormula) -> Self {
        MtlFormula::EventuallyWithin(lo, hi, Box::new(f))
    }

    pub fn literal(l: &Literal) -> Self {
        let a = MtlFormula::Atom(l.atom.clone());
        if l.positive {
            a
        } else {
            MtlFormula::not(a)
        }
    }

    /// `G (p -> F[0,kappa] !p)`.
    pub fn bounded_overload(line: u32, kappa: Duration) -> Self {
        let p = MtlFormula::atom(Atom::overload(line));
        MtlFormula::globally(MtlFormula::implies(
            p.clone(),
            MtlFormula::eventually_within(Duration::ZERO, kappa, MtlFormula::not(p)),
        ))
    }

    /// `G (!blackout_i)`.
    pub fn no_blackout(node: u32) -> Self {
        MtlFormula::globally(MtlFormula::not(MtlFormula::atom(Atom::blackout(node))))
    }

    pub fn as_literal(&self) -> Option<Literal> {
        match self {
            MtlFormula::Atom(a) => Some(Literal::pos(a.clone())),
            MtlFormula::Not(inner) => match inner.as_ref() {
                MtlFormula::Atom(a) => Some(Literal::neg(a.clone())),
                _ => None,
            },
            _ => None,
        }
    }

    /// Splits a top-level conjunction into its conjuncts, left to right.
    pub fn conjuncts(&self) -> Vec<&MtlFormula> {
        match self {
            MtlFormula::And(a, b) => {
                let mut out = a.conjuncts();
                out.extend(b.conjuncts());
                out
            }
            other => vec![other],
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            MtlFormula::Atom(_) => 1,
            MtlFormula::Not(f)
            | MtlFormula::Globally(f)
            | MtlFormula::Eventually(f)
            | MtlFormula::EventuallyWithin(_, _, f) => 1 + f.depth(),
            MtlFormula::And(a, b) | MtlFormula::Or(a, b) | MtlFormula::Implies(a, b) => {
                1 + a.depth().max(b.depth())
            }
        }
    }

    /// Conjunction of the given formulas, folded to the left.
    pub fn conjunction(parts: impl IntoIterator<Item = MtlFormula>) -> Option<MtlFormula> {
        parts.into_iter().reduce(MtlFormula::and)
    }
}

impl LtlFormula {
    pub fn atom(a: Atom) -> Self {
        LtlFormula::Atom(a)
    }

    pub fn not(f: LtlFormula) -> Self {
        LtlFormula::Not(Box::new(f))
    }

    pub fn and(a: LtlFormula, b: LtlFormula) -> Self {
        LtlFormula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: LtlFormula, b: LtlFormula) -> Self {
        LtlFormula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: LtlFormula, b: LtlFormula) -> Self {
        LtlFormula::Implies(Box::new(a), Box::new(b))
    }

    pub fn globally(f: LtlFormula) -> Self {
        LtlFormula::Globally(Box::new(f))
    }

    pub fn eventually(f: LtlFormula) -> Self {
        LtlFormula::Eventually(Box::new(f))
    }

    pub fn next(f: LtlFormula) -> Self {
        LtlFormula::Next(Box::new(f))
    }

    /// `j` nested `Next` constructors above `f` (already normalized).
    pub fn next_pow(j: u32, f: LtlFormula) -> Self {
        (0..j).fold(f, |acc, _| LtlFormula::next(acc))
    }

    pub fn literal(l: &Literal) -> Self {
        let a = LtlFormula::Atom(l.atom.clone());
        if l.positive {
            a
        } else {
            LtlFormula::not(a)
        }
    }

    pub fn as_literal(&self) -> Option<Literal> {
        match self {
            LtlFormula::Atom(a) => Some(Literal::pos(a.clone())),
            LtlFormula::Not(inner) => match inner.as_ref() {
                LtlFormula::Atom(a) => Some(Literal::neg(a.clone())),
                _ => None,
            },
            _ => None,
        }
    }

    /// Expands every `NextPow(j, f)` into `j` nested `Next`s; `NextPow(0, f)` becomes `f`.
    pub fn normalize(&self) -> LtlFormula {
        use LtlFormula::*;
        match self {
            Atom(a) => Atom(a.clone()),
            Not(f) => LtlFormula::not(f.normalize()),
            And(a, b) => LtlFormula::and(a.normalize(), b.normalize()),
            Or(a, b) => LtlFormula::or(a.normalize(), b.normalize()),
            Implies(a, b) => LtlFormula::implies(a.normalize(), b.normalize()),
            Globally(f) => LtlFormula::globally(f.normalize()),
            Eventually(f) => LtlFormula::eventually(f.normalize()),
            Next(f) => LtlFormula::next(f.normalize()),
            NextPow(j, f) => LtlFormula::next_pow(*j, f.normalize()),
        }
    }

    /// Peels `Next`/`NextPow` prefixes: returns the total shift and the body.
    pub fn strip_next(&self) -> (u32, &LtlFormula) {
        match self {
            LtlFormula::Next(f) => {
                let (k, body) = f.strip_next();
                (k + 1, body)
            }
            LtlFormula::NextPow(j, f) => {
                let (k, body) = f.strip_next();
                (k + j, body)
            }
            other => (0, other),
        }
    }

    pub fn conjuncts(&self) -> Vec<&LtlFormula> {
        match self {
            LtlFormula::And(a, b) => {
                let mut out = a.conjuncts();
                out.extend(b.conjuncts());
                out
            }
            other => vec![other],
        }
    }

    pub fn disjuncts(&self) -> Vec<&LtlFormula> {
        match self {
            LtlFormula::Or(a, b) => {
                let mut out = a.disjuncts();
                out.extend(b.disjuncts());
                out
            }
            other => vec![other],
        }
    }

    pub fn conjunction(parts: impl IntoIterator<Item = LtlFormula>) -> Option<LtlFormula> {
        parts.into_iter().reduce(LtlFormula::and)
    }

    pub fn disjunction(parts: impl IntoIterator<Item = LtlFormula>) -> Option<LtlFormula> {
        parts.into_iter().reduce(LtlFormula::or)
    }

    /// Counts `Next` constructors, with `NextPow(j, _)` contributing `j`.
    pub fn next_count(&self) -> u64 {
        use LtlFormula::*;
        match self {
            Atom(_) => 0,
            Not(f) | Globally(f) | Eventually(f) => f.next_count(),
            Next(f) => 1 + f.next_count(),
            NextPow(j, f) => u64::from(*j) + f.next_count(),
            And(a, b) | Or(a, b) | Implies(a, b) => a.next_count() + b.next_count(),
        }
    }
}
