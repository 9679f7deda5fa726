//! Constant-memory online monitors for strengthened safety formulas.
//!
//! A monitor reports a violation at the sample that confirms it. For a
//! bounded-response window of `m` samples the confirming sample is the last one
//! of the window, so the reported index is `start + m - 1` where the reference
//! evaluator reports `start`.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::logic::{Literal, LtlFormula};
use crate::semantics::{Assignment, SampledTrace, Verdict};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MonitorKind {
    /// `G (p -> q | X q | ... | X^(m-1) q)`.
    DwellCounter {
        trigger: Literal,
        response: Literal,
        horizon: u32,
    },
    /// `G l`.
    Invariant(Literal),
    /// Conjunction of leaf monitors, flattened.
    Product(Vec<Monitor>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Monitor {
    kind: MonitorKind,
    description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MonitorError {
    #[error("cannot compile `{0}` into a monitor")]
    UnsupportedFragment(String),
    #[error("sample {index} has no value for atom `{atom}`")]
    UnknownAtom { atom: String, index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Alive,
    /// `at` is the confirming sample, `window_start` the first sample of the
    /// violated obligation.
    Violated { at: usize, window_start: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum LeafState {
    /// Consecutive trigger samples with no response; used when `response == !trigger`.
    Counter(u32),
    /// Last `<= m` samples as `(trigger, response)` pairs.
    Window(VecDeque<(bool, bool)>),
    Invariant,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonitorState {
    next_index: usize,
    leaves: Vec<LeafState>,
    status: Status,
}

impl MonitorState {
    pub fn status(&self) -> Status {
        self.status
    }

    pub fn is_alive(&self) -> bool {
        self.status == Status::Alive
    }

    /// Number of samples consumed so far.
    pub fn samples_seen(&self) -> usize {
        self.next_index
    }

    /// Dwell counters of the leaves, `None` for non-counter leaves.
    pub fn counters(&self) -> Vec<Option<u32>> {
        self.leaves
            .iter()
            .map(|l| match l {
                LeafState::Counter(c) => Some(*c),
                LeafState::Window(w) => Some(pending_age(w)),
                LeafState::Invariant => None,
            })
            .collect()
    }
}

/// Age of the oldest undischarged trigger in the window (0 if none).
fn pending_age(window: &VecDeque<(bool, bool)>) -> u32 {
    let last_response = window.iter().rposition(|&(_, q)| q);
    let from = last_response.map_or(0, |k| k + 1);
    window
        .iter()
        .skip(from)
        .position(|&(p, _)| p)
        .map_or(0, |k| (window.len() - from - k) as u32)
}

impl Monitor {
    pub fn kind(&self) -> &MonitorKind {
        &self.kind
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn dwell_counter(trigger: Literal, response: Literal, horizon: u32) -> Self {
        assert!(horizon >= 1, "horizon must be positive");
        let description = format!("dwell({trigger} -> {response} within {horizon} samples)");
        Monitor {
            kind: MonitorKind::DwellCounter {
                trigger,
                response,
                horizon,
            },
            description,
        }
    }

    pub fn invariant(literal: Literal) -> Self {
        let description = format!("invariant({literal})");
        Monitor {
            kind: MonitorKind::Invariant(literal),
            description,
        }
    }

    /// Product of the given monitors. Nested products are flattened; a product of
    /// one monitor is that monitor.
    pub fn product(parts: Vec<Monitor>) -> Self {
        assert!(!parts.is_empty(), "empty product");
        let mut leaves: Vec<Monitor> = Vec::new();
        for p in parts {
            match p.kind {
                MonitorKind::Product(inner) => leaves.extend(inner),
                _ => leaves.push(p),
            }
        }
        if leaves.len() == 1 {
            return leaves.pop().unwrap();
        }
        let description = leaves.iter().map(|l| l.description.as_str()).collect::<Vec<_>>().join(" & ");
        Monitor {
            kind: MonitorKind::Product(leaves),
            description,
        }
    }

    pub fn leaves(&self) -> &[Monitor] {
        match &self.kind {
            MonitorKind::Product(parts) => parts,
            _ => std::slice::from_ref(self),
        }
    }

    /// Window length in samples (1 for invariants, the largest for products).
    pub fn horizon(&self) -> u32 {
        match &self.kind {
            MonitorKind::DwellCounter { horizon, .. } => *horizon,
            MonitorKind::Invariant(_) => 1,
            MonitorKind::Product(parts) => parts.iter().map(Monitor::horizon).max().unwrap_or(1),
        }
    }

    /// Atoms read by this monitor.
    pub fn atoms(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        for leaf in self.leaves() {
            match &leaf.kind {
                MonitorKind::DwellCounter { trigger, response, .. } => {
                    out.insert(trigger.atom.name());
                    out.insert(response.atom.name());
                }
                MonitorKind::Invariant(l) => {
                    out.insert(l.atom.name());
                }
                MonitorKind::Product(_) => unreachable!("products are flat"),
            }
        }
        out
    }

    pub fn initial_state(&self) -> MonitorState {
        let leaves = self
            .leaves()
            .iter()
            .map(|leaf| match &leaf.kind {
                MonitorKind::DwellCounter { trigger, response, horizon } => {
                    if *response == trigger.negated() {
                        LeafState::Counter(0)
                    } else {
                        LeafState::Window(VecDeque::with_capacity(*horizon as usize))
                    }
                }
                MonitorKind::Invariant(_) => LeafState::Invariant,
                MonitorKind::Product(_) => unreachable!("products are flat"),
            })
            .collect();
        MonitorState {
            next_index: 0,
            leaves,
            status: Status::Alive,
        }
    }

    /// Consumes one sample in place. A violated state is left unchanged.
    pub fn step_in_place(&self, state: &mut MonitorState, sample: &Assignment) -> Result<(), MonitorError> {
        if !state.is_alive() {
            return Ok(());
        }
        let index = state.next_index;
        let read = |lit: &Literal| {
            sample
                .get(lit.atom.name())
                .map(|&v| lit.holds(v))
                .ok_or_else(|| MonitorError::UnknownAtom {
                    atom: lit.atom.name().to_string(),
                    index,
                })
        };
        let mut violation: Option<usize> = None;
        for (leaf, leaf_state) in self.leaves().iter().zip(state.leaves.iter_mut()) {
            let start = match (&leaf.kind, leaf_state) {
                (MonitorKind::DwellCounter { trigger, horizon, .. }, LeafState::Counter(count)) => {
                    *count = if read(trigger)? { *count + 1 } else { 0 };
                    (*count == *horizon).then(|| index + 1 - *horizon as usize)
                }
                (
                    MonitorKind::DwellCounter {
                        trigger,
                        response,
                        horizon,
                    },
                    LeafState::Window(window),
                ) => {
                    let m = *horizon as usize;
                    window.push_back((read(trigger)?, read(response)?));
                    if window.len() > m {
                        window.pop_front();
                    }
                    let bad = window.len() == m && window[0].0 && window.iter().all(|&(_, q)| !q);
                    bad.then(|| index + 1 - m)
                }
                (MonitorKind::Invariant(lit), LeafState::Invariant) => (!read(lit)?).then_some(index),
                _ => unreachable!("state shape follows the monitor"),
            };
            if let Some(s) = start {
                violation = Some(violation.map_or(s, |v| v.min(s)));
            }
        }
        state.next_index += 1;
        if let Some(window_start) = violation {
            state.status = Status::Violated { at: index, window_start };
        }
        Ok(())
    }

    /// Minimum number of further worst-case samples until a violation; 0 once violated.
    pub fn distance_to_violation(&self, state: &MonitorState) -> u32 {
        if !state.is_alive() {
            return 0;
        }
        self.leaves()
            .iter()
            .zip(&state.leaves)
            .map(|(leaf, s)| match (&leaf.kind, s) {
                (MonitorKind::DwellCounter { horizon, .. }, LeafState::Counter(c)) => horizon - c,
                (MonitorKind::DwellCounter { horizon, .. }, LeafState::Window(w)) => {
                    let age = pending_age(w);
                    if age == 0 {
                        *horizon
                    } else {
                        horizon - age
                    }
                }
                (MonitorKind::Invariant(_), _) => 1,
                _ => unreachable!("state shape follows the monitor"),
            })
            .min()
            .unwrap_or(u32::MAX)
    }
}

impl fmt::Display for Monitor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.description)
    }
}

/// Compiles a strengthened formula: a conjunction of `G l`, `G (l1 & ...)` and
/// `G (p -> q | X q | ... | X^(m-1) q)` conjuncts.
pub fn compile_monitor(phi: &LtlFormula) -> Result<Monitor, MonitorError> {
    let normalized = phi.normalize();
    let unsupported = || MonitorError::UnsupportedFragment(phi.to_string());
    let mut parts = Vec::new();
    for conjunct in normalized.conjuncts() {
        let LtlFormula::Globally(body) = conjunct else {
            return Err(unsupported());
        };
        if let LtlFormula::Implies(lhs, rhs) = body.as_ref() {
            let trigger = lhs.as_literal().ok_or_else(unsupported)?;
            let mut response: Option<Literal> = None;
            let mut shifts = BTreeSet::new();
            for disjunct in rhs.disjuncts() {
                let (shift, inner) = disjunct.strip_next();
                let lit = inner.as_literal().ok_or_else(unsupported)?;
                if response.as_ref().is_some_and(|r| *r != lit) {
                    return Err(unsupported());
                }
                response = Some(lit);
                shifts.insert(shift);
            }
            let horizon = shifts.len() as u32;
            if !shifts.iter().copied().eq(0..horizon) {
                return Err(unsupported());
            }
            parts.push(Monitor::dwell_counter(trigger, response.expect("at least one disjunct"), horizon));
            continue;
        }
        for lit in body.conjuncts() {
            parts.push(Monitor::invariant(lit.as_literal().ok_or_else(unsupported)?));
        }
    }
    Ok(Monitor::product(parts))
}

pub fn monitor_step(monitor: &Monitor, state: &MonitorState, sample: &Assignment) -> Result<MonitorState, MonitorError> {
    let mut next = state.clone();
    monitor.step_in_place(&mut next, sample)?;
    Ok(next)
}

/// Runs the monitor over the whole trace and returns the final state.
pub fn monitor_run_state(monitor: &Monitor, trace: &SampledTrace) -> Result<MonitorState, MonitorError> {
    let mut state = monitor.initial_state();
    for sample in &trace.samples {
        monitor.step_in_place(&mut state, sample)?;
        if !state.is_alive() {
            break;
        }
    }
    Ok(state)
}

/// Verdict with the confirming sample index.
pub fn monitor_run(monitor: &Monitor, trace: &SampledTrace) -> Result<Verdict<usize>, MonitorError> {
    Ok(match monitor_run_state(monitor, trace)?.status {
        Status::Alive => Verdict::Sat,
        Status::Violated { at, .. } => Verdict::Violated(at),
    })
}

pub fn distance_to_violation(monitor: &Monitor, state: &MonitorState) -> u32 {
    monitor.distance_to_violation(state)
}
