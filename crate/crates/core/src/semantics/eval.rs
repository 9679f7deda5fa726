//! Reference evaluators: dense-time MTL and finite-prefix LTL.
//!
//! Both are deliberately direct. The dense evaluator reasons about maximal
//! intervals of the piecewise-constant signal; the sampled evaluator unrolls
//! `X` positions one at a time under a three-valued (true/false/pending)
//! reading of the finite prefix. They are the ground truth for the monitors
//! and for the sampling lemmas.

use serde::{Deserialize, Serialize};

use super::trace::{Assignment, DenseTrace, SampledTrace};
use crate::logic::{classify_mtl, Duration, FragmentError, Literal, LtlFormula, MtlFormula, SafetyPattern};

/// Outcome of checking one trace. `Violated` carries the earliest witness:
/// a time for dense traces, a sample index for sampled ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict<W> {
    Sat,
    Violated(W),
}

impl<W> Verdict<W> {
    pub fn is_sat(&self) -> bool {
        matches!(self, Verdict::Sat)
    }

    pub fn is_violated(&self) -> bool {
        !self.is_sat()
    }

    pub fn witness(&self) -> Option<&W> {
        match self {
            Verdict::Sat => None,
            Verdict::Violated(w) => Some(w),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error(transparent)]
    Fragment(#[from] FragmentError),
    #[error("unsupported LTL formula `{0}`: expected a conjunction of G over X-only bodies")]
    UnsupportedLtl(String),
    #[error("atom `{atom}` is not assigned at position {position}")]
    UnknownAtom { atom: String, position: String },
}

fn literal_at(lit: &Literal, a: &Assignment, position: impl FnOnce() -> String) -> Result<bool, EvalError> {
    a.get(lit.atom.name())
        .map(|&v| lit.holds(v))
        .ok_or_else(|| EvalError::UnknownAtom {
            atom: lit.atom.name().to_string(),
            position: position(),
        })
}

/// Dense-time satisfaction over `[0, horizon]`.
///
/// For `G (p -> F[0,k] q)` the maximal runs of `!q` are scanned: inside a run
/// that starts at `c` and ends at the next `q` instant `b`, the earliest
/// `p`-instant `a` is the hardest obligation, and it is met iff `b - a <= k`
/// (the witness interval is closed). A run that reaches the horizon is only a
/// violation once `a + k` has been observed. Invariants fail at the first
/// segment falsifying a literal. The earliest violation time over all
/// conjuncts is reported.
pub fn eval_mtl_dense(phi: &MtlFormula, dense: &DenseTrace) -> Result<Verdict<Duration>, EvalError> {
    let patterns = classify_mtl(phi)?;
    let mut earliest: Option<Duration> = None;
    for pattern in &patterns {
        let found = match pattern {
            SafetyPattern::Invariant(literals) => first_invariant_failure(literals, dense)?,
            SafetyPattern::BoundedResponse { trigger, response, bound } => {
                first_response_failure(trigger, response, *bound, dense)?
            }
        };
        if let Some(t) = found {
            earliest = Some(earliest.map_or(t, |e| e.min(t)));
        }
    }
    Ok(earliest.map_or(Verdict::Sat, Verdict::Violated))
}

fn first_invariant_failure(literals: &[Literal], dense: &DenseTrace) -> Result<Option<Duration>, EvalError> {
    for seg in dense.segments() {
        for lit in literals {
            if !literal_at(lit, &seg.atoms, || seg.start.to_string())? {
                return Ok(Some(seg.start));
            }
        }
    }
    Ok(None)
}

fn first_response_failure(
    trigger: &Literal,
    response: &Literal,
    bound: Duration,
    dense: &DenseTrace,
) -> Result<Option<Duration>, EvalError> {
    // Earliest trigger instant inside the current run of !response, if any.
    let mut pending: Option<Duration> = None;
    for seg in dense.segments() {
        let pos = || seg.start.to_string();
        if literal_at(response, &seg.atoms, pos)? {
            if let Some(a) = pending.take() {
                if seg.start - a > bound {
                    return Ok(Some(a + bound));
                }
            }
        } else if pending.is_none() && literal_at(trigger, &seg.atoms, pos)? {
            pending = Some(seg.start);
        }
    }
    Ok(pending.and_then(|a| (dense.horizon() - a >= bound).then(|| a + bound)))
}

/// One `G body` conjunct of a sampled-time formula.
struct SampledConjunct<'a> {
    body: &'a LtlFormula,
}

fn sampled_conjuncts(phi: &LtlFormula) -> Result<Vec<SampledConjunct<'_>>, EvalError> {
    phi.conjuncts()
        .into_iter()
        .map(|c| match c {
            LtlFormula::Globally(body) if is_next_only(body) => Ok(SampledConjunct { body }),
            _ => Err(EvalError::UnsupportedLtl(phi.to_string())),
        })
        .collect()
}

fn is_next_only(f: &LtlFormula) -> bool {
    use LtlFormula::*;
    match f {
        Atom(_) => true,
        Not(g) | Next(g) | NextPow(_, g) => is_next_only(g),
        And(a, b) | Or(a, b) | Implies(a, b) => is_next_only(a) && is_next_only(b),
        Globally(_) | Eventually(_) => false,
    }
}

/// Three-valued evaluation at position `i`; `None` means the value depends on
/// samples beyond the end of the prefix.
fn eval_at(f: &LtlFormula, trace: &SampledTrace, i: usize) -> Result<Option<bool>, EvalError> {
    use LtlFormula::*;
    Ok(match f {
        Atom(a) => match trace.samples.get(i) {
            None => None,
            Some(s) => Some(*s.get(a.name()).ok_or_else(|| EvalError::UnknownAtom {
                atom: a.name().to_string(),
                position: i.to_string(),
            })?),
        },
        Not(g) => eval_at(g, trace, i)?.map(|v| !v),
        And(a, b) => and3(eval_at(a, trace, i)?, eval_at(b, trace, i)?),
        Or(a, b) => or3(eval_at(a, trace, i)?, eval_at(b, trace, i)?),
        Implies(a, b) => or3(eval_at(a, trace, i)?.map(|v| !v), eval_at(b, trace, i)?),
        Next(g) => eval_at(g, trace, i + 1)?,
        NextPow(j, g) => eval_at(g, trace, i + *j as usize)?,
        Globally(_) | Eventually(_) => unreachable!("checked by sampled_conjuncts"),
    })
}

fn and3(a: Option<bool>, b: Option<bool>) -> Option<bool> {
    match (a, b) {
        (Some(false), _) | (_, Some(false)) => Some(false),
        (Some(true), Some(true)) => Some(true),
        _ => None,
    }
}

fn or3(a: Option<bool>, b: Option<bool>) -> Option<bool> {
    match (a, b) {
        (Some(true), _) | (_, Some(true)) => Some(true),
        (Some(false), Some(false)) => Some(false),
        _ => None,
    }
}

/// Finite-prefix satisfaction with bad-prefix semantics: the prefix violates
/// the formula only at a position whose whole look-ahead window is observed
/// and false. Reports the earliest such position.
pub fn eval_ltl_sampled(phi: &LtlFormula, trace: &SampledTrace) -> Result<Verdict<usize>, EvalError> {
    let conjuncts = sampled_conjuncts(phi)?;
    for i in 0..trace.len() {
        for c in &conjuncts {
            if eval_at(c.body, trace, i)? == Some(false) {
                return Ok(Verdict::Violated(i));
            }
        }
    }
    Ok(Verdict::Sat)
}
