//! Recognition of the two supported safety shapes.
//!
//! * bounded response: `G (p -> F[0,k] q)` with literals `p`, `q`
//! * invariant: `G (l1 & l2 & ...)` with literals `li`
//!
//! Top-level conjunctions of these are split conjunct by conjunct.

use super::duration::Duration;
use super::formula::{Literal, MtlFormula};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SafetyPattern {
    BoundedResponse {
        trigger: Literal,
        response: Literal,
        bound: Duration,
    },
    Invariant(Vec<Literal>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FragmentError {
    #[error("unsupported formula `{0}`: only G (p -> F[0,k] q) and G (literal & ...) are supported")]
    Unsupported(String),
    #[error("interval [{lo},{hi}] in `{formula}` must start at 0")]
    NonZeroLowerBound {
        lo: Duration,
        hi: Duration,
        formula: String,
    },
}

pub fn classify_mtl(phi: &MtlFormula) -> Result<Vec<SafetyPattern>, FragmentError> {
    phi.conjuncts().into_iter().map(classify_conjunct).collect()
}

fn classify_conjunct(phi: &MtlFormula) -> Result<SafetyPattern, FragmentError> {
    let unsupported = || FragmentError::Unsupported(phi.to_string());
    let MtlFormula::Globally(body) = phi else {
        return Err(unsupported());
    };
    if let MtlFormula::Implies(lhs, rhs) = body.as_ref() {
        if let (Some(trigger), MtlFormula::EventuallyWithin(lo, hi, inner)) = (lhs.as_literal(), rhs.as_ref()) {
            let response = inner.as_literal().ok_or_else(unsupported)?;
            if !lo.is_zero() {
                return Err(FragmentError::NonZeroLowerBound {
                    lo: *lo,
                    hi: *hi,
                    formula: phi.to_string(),
                });
            }
            return Ok(SafetyPattern::BoundedResponse {
                trigger,
                response,
                bound: *hi,
            });
        }
    }
    body.conjuncts()
        .into_iter()
        .map(MtlFormula::as_literal)
        .collect::<Option<Vec<_>>>()
        .map(SafetyPattern::Invariant)
        .ok_or_else(unsupported)
}
