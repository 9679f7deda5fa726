//! Canonical printing. Output re-parses to the same (normalized) AST.
//!
//! `G` always parenthesizes its operand, other unary operators parenthesize
//! only binary operands, and binary operands that are themselves binary are
//! parenthesized except along a left-leaning `&`/`|` chain.

use std::fmt::{self, Display, Write};

use super::formula::{LtlFormula, MtlFormula};

pub fn format_mtl(f: &MtlFormula) -> String {
    f.to_string()
}

/// Formats the normalized form of `f` (`NextPow` expanded, `X` chains written as `X^k`).
pub fn format_ltl(f: &LtlFormula) -> String {
    f.to_string()
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum BinOp {
    And,
    Or,
    Implies,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::And => "&",
            BinOp::Or => "|",
            BinOp::Implies => "->",
        }
    }
}

/// The printer only needs to know the shape of a node, so both ASTs expose it
/// through this view.
enum Shape<'a, T> {
    Atom(&'a str),
    Not(&'a T),
    Binary(BinOp, &'a T, &'a T),
    Globally(&'a T),
    Prefix(String, &'a T),
}

trait Printable: Sized {
    fn shape(&self) -> Shape<'_, Self>;

    fn binary_op(&self) -> Option<BinOp> {
        match self.shape() {
            Shape::Binary(op, _, _) => Some(op),
            _ => None,
        }
    }
}

impl Printable for MtlFormula {
    fn shape(&self) -> Shape<'_, Self> {
        match self {
            MtlFormula::Atom(a) => Shape::Atom(a.name()),
            MtlFormula::Not(f) => Shape::Not(f),
            MtlFormula::And(a, b) => Shape::Binary(BinOp::And, a, b),
            MtlFormula::Or(a, b) => Shape::Binary(BinOp::Or, a, b),
            MtlFormula::Implies(a, b) => Shape::Binary(BinOp::Implies, a, b),
            MtlFormula::Globally(f) => Shape::Globally(f),
            MtlFormula::EventuallyWithin(lo, hi, f) => Shape::Prefix(format!("F[{lo},{hi}]"), f),
            MtlFormula::Eventually(f) => Shape::Prefix("F".into(), f),
        }
    }
}

/// Only meaningful on normalized formulas; `Display` normalizes first.
impl Printable for LtlFormula {
    fn shape(&self) -> Shape<'_, Self> {
        match self {
            LtlFormula::Atom(a) => Shape::Atom(a.name()),
            LtlFormula::Not(f) => Shape::Not(f),
            LtlFormula::And(a, b) => Shape::Binary(BinOp::And, a, b),
            LtlFormula::Or(a, b) => Shape::Binary(BinOp::Or, a, b),
            LtlFormula::Implies(a, b) => Shape::Binary(BinOp::Implies, a, b),
            LtlFormula::Globally(f) => Shape::Globally(f),
            LtlFormula::Eventually(f) => Shape::Prefix("F".into(), f),
            LtlFormula::Next(_) | LtlFormula::NextPow(..) => {
                let (k, body) = self.strip_next();
                let op = if k == 1 { "X".to_string() } else { format!("X^{k}") };
                Shape::Prefix(op, body)
            }
        }
    }
}

fn write_node<T: Printable>(out: &mut String, node: &T) {
    match node.shape() {
        Shape::Atom(name) => out.push_str(name),
        Shape::Not(f) => {
            out.push('!');
            write_operand(out, f);
        }
        Shape::Globally(f) => {
            out.push_str("G (");
            write_node(out, f);
            out.push(')');
        }
        Shape::Prefix(op, f) => {
            out.push_str(&op);
            out.push(' ');
            write_operand(out, f);
        }
        Shape::Binary(op, a, b) => {
            let chain = matches!(op, BinOp::And | BinOp::Or) && a.binary_op() == Some(op);
            if chain {
                write_node(out, a);
            } else {
                write_operand(out, a);
            }
            let _ = write!(out, " {} ", op.symbol());
            write_operand(out, b);
        }
    }
}

fn write_operand<T: Printable>(out: &mut String, node: &T) {
    if node.binary_op().is_some() {
        out.push('(');
        write_node(out, node);
        out.push(')');
    } else {
        write_node(out, node);
    }
}

impl Display for MtlFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_node(&mut s, self);
        f.write_str(&s)
    }
}

impl Display for LtlFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_node(&mut s, &self.normalize());
        f.write_str(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::formula::{Atom, Literal};
    use crate::logic::parser::{parse_ltl, parse_mtl};
    use crate::logic::Duration;
    use proptest::prelude::*;

    fn p() -> LtlFormula {
        LtlFormula::atom(Atom::new("p").unwrap())
    }

    #[test]
    fn prints_no_blackout() {
        assert_eq!(MtlFormula::no_blackout(1).to_string(), "G (!blackout_1)");
    }

    #[test]
    fn prints_bounded_overload() {
        assert_eq!(
            MtlFormula::bounded_overload(1, Duration::minutes(10)).to_string(),
            "G (oload_1 -> F[0,10] !oload_1)"
        );
    }

    #[test]
    fn prints_strengthened_instance() {
        let q = LtlFormula::literal(&Literal::neg(Atom::overload(1)));
        let f = LtlFormula::globally(LtlFormula::implies(
            LtlFormula::atom(Atom::overload(1)),
            LtlFormula::or(LtlFormula::NextPow(0, Box::new(q.clone())), LtlFormula::NextPow(1, Box::new(q))),
        ));
        assert_eq!(f.to_string(), "G (oload_1 -> (!oload_1 | X !oload_1))");
    }

    #[test]
    fn prints_next_powers() {
        assert_eq!(LtlFormula::NextPow(1, Box::new(p())).to_string(), "X p");
        assert_eq!(LtlFormula::NextPow(3, Box::new(p())).to_string(), "X^3 p");
        assert_eq!(LtlFormula::NextPow(0, Box::new(p())).to_string(), "p");
        assert_eq!(LtlFormula::next(LtlFormula::NextPow(2, Box::new(p()))).to_string(), "X^3 p");
    }

    #[test]
    fn parenthesizes_binary_operands() {
        let a = LtlFormula::atom(Atom::new("a").unwrap());
        let f = LtlFormula::or(a.clone(), LtlFormula::or(p(), a.clone()));
        assert_eq!(f.to_string(), "a | (p | a)");
        let f = LtlFormula::or(LtlFormula::or(p(), a.clone()), a.clone());
        assert_eq!(f.to_string(), "p | a | a");
        let f = LtlFormula::not(LtlFormula::and(p(), a));
        assert_eq!(f.to_string(), "!(p & a)");
    }

    fn arb_atom() -> impl Strategy<Value = Atom> {
        prop_oneof![
            (0u32..5).prop_map(Atom::overload),
            (0u32..5).prop_map(Atom::blackout),
            "[a-z][a-z0-9_]{0,4}".prop_map(|s| Atom::new(s).unwrap()),
        ]
    }

    fn arb_duration() -> impl Strategy<Value = Duration> {
        (0i64..50, 1i64..7).prop_map(|(n, d)| Duration::ratio(n, d))
    }

    fn arb_mtl() -> impl Strategy<Value = MtlFormula> {
        let leaf = arb_atom().prop_map(MtlFormula::Atom);
        leaf.prop_recursive(7, 64, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(MtlFormula::not),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| MtlFormula::and(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| MtlFormula::or(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| MtlFormula::implies(a, b)),
                inner.clone().prop_map(MtlFormula::globally),
                inner.clone().prop_map(|f| MtlFormula::Eventually(Box::new(f))),
                (arb_duration(), arb_duration(), inner).prop_map(|(x, y, f)| {
                    MtlFormula::eventually_within(x.min(y), x.max(y), f)
                }),
            ]
        })
    }

    fn arb_ltl() -> impl Strategy<Value = LtlFormula> {
        let leaf = arb_atom().prop_map(LtlFormula::Atom);
        leaf.prop_recursive(7, 64, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(LtlFormula::not),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| LtlFormula::and(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| LtlFormula::or(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| LtlFormula::implies(a, b)),
                inner.clone().prop_map(LtlFormula::globally),
                inner.clone().prop_map(LtlFormula::eventually),
                inner.clone().prop_map(LtlFormula::next),
                (0u32..4, inner).prop_map(|(j, f)| LtlFormula::NextPow(j, Box::new(f))),
            ]
        })
    }

    proptest! {
        #[test]
        fn mtl_round_trip(f in arb_mtl()) {
            prop_assert!(f.depth() <= 8);
            let text = format_mtl(&f);
            prop_assert_eq!(parse_mtl(&text).unwrap(), f);
        }

        #[test]
        fn ltl_round_trip(f in arb_ltl()) {
            let text = format_ltl(&f);
            prop_assert_eq!(parse_ltl(&text).unwrap(), f.normalize());
        }
    }
}
