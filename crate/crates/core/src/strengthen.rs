//! MTL → Δ-sampled LTL strengthening.
//!
//! Bounded response `G (p -> F[0,κ] !p)` becomes
//! `G (p -> (!p | X !p | ... | X^(m-1) !p))` with `m = ⌊κ/Δ⌋`; invariants
//! `G (L)` are kept as they are and carry a minimum-dwell assumption on the
//! atoms they constrain.

use serde::Serialize;

use crate::grid::GridSpec;
use crate::logic::{classify_mtl, Atom, Duration, FragmentError, Literal, LtlFormula, MtlFormula, SafetyPattern};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StrengthenError {
    #[error("unsupported fragment: {0}")]
    UnsupportedFragment(String),
    #[error("interval [{lo},{hi}] in {formula}: only lower bound 0 is supported")]
    NonZeroLowerBound { lo: Duration, hi: Duration, formula: String },
    #[error("sampling period {delta} is not smaller than the deadline {kappa}")]
    SamplingTooCoarse { kappa: Duration, delta: Duration },
}

impl From<FragmentError> for StrengthenError {
    fn from(e: FragmentError) -> Self {
        match e {
            FragmentError::Unsupported(s) => StrengthenError::UnsupportedFragment(s),
            FragmentError::NonZeroLowerBound { lo, hi, formula } => {
                StrengthenError::NonZeroLowerBound { lo, hi, formula }
            }
        }
    }
}

/// `m = ⌊κ/Δ⌋`, exact. Requires `κ > Δ`.
pub fn compute_horizon(kappa: Duration, delta: Duration) -> Result<u32, StrengthenError> {
    if delta.is_zero() || kappa <= delta {
        return Err(StrengthenError::SamplingTooCoarse { kappa, delta });
    }
    let m = kappa.floor_div(delta);
    u32::try_from(m).map_err(|_| StrengthenError::UnsupportedFragment(format!("horizon {m} is too large")))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Assumption {
    /// Every maximal interval on which `atom` takes its forbidden value lasts
    /// at least `bound`. `None` until resolved against a grid.
    MinDwell {
        atom: Atom,
        #[serde(rename = "bound_minutes")]
        bound: Option<Duration>,
    },
    SamplingFasterThan {
        #[serde(rename = "bound_minutes")]
        bound: Duration,
    },
}

/// Strengthening of one top-level conjunct.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConjunctResult {
    pub source: MtlFormula,
    pub ltl: LtlFormula,
    pub horizon_m: Option<u32>,
    pub assumptions: Vec<Assumption>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrengthenResult {
    pub ltl: LtlFormula,
    /// Largest horizon over the bounded-response conjuncts; `None` when every
    /// conjunct is an invariant.
    pub horizon_m: Option<u32>,
    pub conjuncts: Vec<ConjunctResult>,
    pub assumptions: Vec<Assumption>,
    pub source: MtlFormula,
    pub delta: Duration,
}

pub fn strengthen(phi: &MtlFormula, delta: Duration) -> Result<StrengthenResult, StrengthenError> {
    let patterns = classify_mtl(phi)?;
    let sources = phi.conjuncts();
    debug_assert_eq!(patterns.len(), sources.len());
    let mut conjuncts = Vec::with_capacity(patterns.len());
    for (pattern, source) in patterns.into_iter().zip(sources) {
        conjuncts.push(strengthen_pattern(pattern, source, delta)?);
    }
    let ltl = LtlFormula::conjunction(conjuncts.iter().map(|c| c.ltl.clone())).expect("at least one conjunct");
    let horizon_m = conjuncts.iter().filter_map(|c| c.horizon_m).max();
    let mut assumptions: Vec<Assumption> = Vec::new();
    for a in conjuncts.iter().flat_map(|c| &c.assumptions) {
        if !assumptions.contains(a) {
            assumptions.push(a.clone());
        }
    }
    Ok(StrengthenResult {
        ltl,
        horizon_m,
        conjuncts,
        assumptions,
        source: phi.clone(),
        delta,
    })
}

fn strengthen_pattern(
    pattern: SafetyPattern,
    source: &MtlFormula,
    delta: Duration,
) -> Result<ConjunctResult, StrengthenError> {
    match pattern {
        SafetyPattern::BoundedResponse {
            trigger,
            response,
            bound,
        } => {
            if response != trigger.negated() {
                return Err(StrengthenError::UnsupportedFragment(format!(
                    "{source}: sampling is only sound when the response is the negated trigger ({})",
                    trigger.negated()
                )));
            }
            let m = compute_horizon(bound, delta)?;
            let q = LtlFormula::literal(&response);
            let window =
                LtlFormula::disjunction((0..m).map(|j| LtlFormula::next_pow(j, q.clone()))).expect("m >= 1");
            Ok(ConjunctResult {
                source: source.clone(),
                ltl: LtlFormula::globally(LtlFormula::implies(LtlFormula::literal(&trigger), window)),
                horizon_m: Some(m),
                assumptions: vec![Assumption::SamplingFasterThan { bound }],
            })
        }
        SafetyPattern::Invariant(literals) => {
            let body = LtlFormula::conjunction(literals.iter().map(LtlFormula::literal)).expect("non-empty");
            let mut assumptions = Vec::new();
            for l in &literals {
                let a = Assumption::MinDwell {
                    atom: l.atom.clone(),
                    bound: None,
                };
                if !assumptions.contains(&a) {
                    assumptions.push(a);
                }
            }
            Ok(ConjunctResult {
                source: source.clone(),
                ltl: LtlFormula::globally(body),
                horizon_m: None,
                assumptions,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AssumptionStatus {
    Satisfied,
    Unsatisfied,
    /// The grid says nothing about this atom.
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AssumptionReport {
    pub assumption: Assumption,
    pub status: AssumptionStatus,
    pub note: String,
}

impl AssumptionReport {
    pub fn is_satisfied(&self) -> bool {
        self.status == AssumptionStatus::Satisfied
    }
}

/// Resolves assumptions against a grid. Blackout dwell is the grid's
/// `gamma_recovery`, judged sufficient when it exceeds Δ (so every blackout
/// covers a sampling instant). The stronger `γ > κ` is noted alongside.
pub fn check_assumptions(result: &StrengthenResult, grid: &GridSpec) -> Vec<AssumptionReport> {
    let delta = result.delta;
    let kappa = result
        .conjuncts
        .iter()
        .flat_map(|c| &c.assumptions)
        .filter_map(|a| match a {
            Assumption::SamplingFasterThan { bound } => Some(*bound),
            _ => None,
        })
        .max();
    result
        .assumptions
        .iter()
        .map(|a| match a {
            Assumption::MinDwell { atom, .. } => {
                let blackout_node = match atom.kind() {
                    crate::logic::AtomKind::Blackout(n) => Some(n),
                    _ => None,
                };
                match blackout_node.filter(|n| grid.node_index(*n).is_some()) {
                    Some(_) => {
                        let gamma = grid.gamma_recovery;
                        let status = if gamma > delta {
                            AssumptionStatus::Satisfied
                        } else {
                            AssumptionStatus::Unsatisfied
                        };
                        let mut note = format!("gamma_recovery = {gamma} min vs delta = {delta} min");
                        if let Some(k) = kappa {
                            let rel = if gamma > k { "holds" } else { "does not hold" };
                            note.push_str(&format!("; the stronger condition gamma > kappa = {k} {rel}"));
                        } else {
                            note.push_str("; the stronger condition gamma > kappa is not checked (no deadline)");
                        }
                        AssumptionReport {
                            assumption: Assumption::MinDwell {
                                atom: atom.clone(),
                                bound: Some(gamma),
                            },
                            status,
                            note,
                        }
                    }
                    None => AssumptionReport {
                        assumption: a.clone(),
                        status: AssumptionStatus::Unknown,
                        note: format!("the grid declares no dwell time for {atom}"),
                    },
                }
            }
            Assumption::SamplingFasterThan { bound } => AssumptionReport {
                assumption: a.clone(),
                status: if delta < *bound {
                    AssumptionStatus::Satisfied
                } else {
                    AssumptionStatus::Unsatisfied
                },
                note: format!("delta = {delta} min vs kappa = {bound} min"),
            },
        })
        .collect()
}

/// JSON shape printed by `sampleguard strengthen`.
#[derive(Debug, Clone, Serialize)]
pub struct StrengthenReport {
    pub source: String,
    pub ltl: String,
    pub m: Option<u32>,
    pub assumptions: Vec<Assumption>,
    pub delta_minutes: Duration,
}

impl StrengthenResult {
    pub fn report(&self) -> StrengthenReport {
        StrengthenReport {
            source: self.source.to_string(),
            ltl: self.ltl.to_string(),
            m: self.horizon_m,
            assumptions: self.assumptions.clone(),
            delta_minutes: self.delta,
        }
    }

    /// Extra samples an episode needs so the last decidable window is observed.
    pub fn padding(&self) -> Duration {
        self.delta.times(i64::from(self.horizon_m.unwrap_or(1).saturating_sub(1)))
    }
}

/// Reads a strengthened-output invariant back as MTL (`G` over propositional
/// structure only); `None` for anything with `X`.
pub fn ltl_invariant_as_mtl(f: &LtlFormula) -> Option<MtlFormula> {
    Some(match f {
        LtlFormula::Atom(a) => MtlFormula::atom(a.clone()),
        LtlFormula::Not(g) => MtlFormula::not(ltl_invariant_as_mtl(g)?),
        LtlFormula::And(a, b) => MtlFormula::and(ltl_invariant_as_mtl(a)?, ltl_invariant_as_mtl(b)?),
        LtlFormula::Or(a, b) => MtlFormula::or(ltl_invariant_as_mtl(a)?, ltl_invariant_as_mtl(b)?),
        LtlFormula::Implies(a, b) => MtlFormula::implies(ltl_invariant_as_mtl(a)?, ltl_invariant_as_mtl(b)?),
        LtlFormula::Globally(g) => MtlFormula::globally(ltl_invariant_as_mtl(g)?),
        _ => return None,
    })
}

/// The literal an invariant monitor watches; convenience for callers building
/// formulas programmatically.
pub fn invariant(literal: &Literal) -> MtlFormula {
    MtlFormula::globally(MtlFormula::literal(literal))
}
