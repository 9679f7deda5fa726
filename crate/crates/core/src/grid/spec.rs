use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::logic::{Atom, Duration, MtlFormula};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    #[serde(alias = "Generator")]
    Generator,
    #[serde(alias = "Consumer")]
    Consumer,
}

/// Bounded random walk driving a node's production or demand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub base_mw: f64,
    #[serde(default)]
    pub jitter_mw: f64,
    #[serde(default)]
    pub ramp_mw_per_min: f64,
}

impl Profile {
    pub fn constant(base_mw: f64) -> Self {
        Profile {
            base_mw,
            jitter_mw: 0.0,
            ramp_mw_per_min: 0.0,
        }
    }

    /// Walk levels stay in `[0, 2 * base]`.
    pub fn clamp(&self, level: f64) -> f64 {
        level.clamp(0.0, 2.0 * self.base_mw)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: u32,
    pub kind: NodeKind,
    #[serde(flatten)]
    pub profile: Profile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub id: u32,
    pub from: u32,
    pub to: u32,
    /// Per-unit susceptance; the DC flow is `susceptance * (theta_from - theta_to)`.
    pub susceptance: f64,
    pub capacity_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nodes: Vec<Node>,
    pub lines: Vec<Line>,
    /// Minimum time a blacked-out consumer stays dark.
    #[serde(rename = "gamma_recovery_min")]
    pub gamma_recovery: Duration,
    /// Sustained overload after which the protection relay opens a line.
    #[serde(rename = "tau_trip_min")]
    pub tau_trip: Duration,
    #[serde(rename = "slack")]
    pub slack_node: u32,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GridSpecError {
    #[error("duplicate node id {0}")]
    DuplicateNode(u32),
    #[error("duplicate line id {0}")]
    DuplicateLine(u32),
    #[error("line {line} references unknown node {node}")]
    UnknownEndpoint { line: u32, node: u32 },
    #[error("line {0} connects a node to itself")]
    SelfLoop(u32),
    #[error("line {line}: {what} must be positive and finite")]
    BadLineParameter { line: u32, what: &'static str },
    #[error("node {node}: {what}")]
    BadProfile { node: u32, what: &'static str },
    #[error("gamma_recovery and tau_trip must be positive")]
    NonPositiveDwell,
    #[error("the grid has no generator")]
    NoGenerator,
    #[error("slack node {0} is not a generator of this grid")]
    BadSlack(u32),
    #[error("malformed grid file: {0}")]
    Json(String),
}

impl GridSpec {
    pub fn from_json(text: &str) -> Result<Self, GridSpecError> {
        let spec: GridSpec = serde_json::from_str(text).map_err(|e| GridSpecError::Json(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), GridSpecError> {
        let mut ids = BTreeSet::new();
        for n in &self.nodes {
            if !ids.insert(n.id) {
                return Err(GridSpecError::DuplicateNode(n.id));
            }
            let p = &n.profile;
            if !(p.base_mw.is_finite() && p.base_mw >= 0.0) {
                return Err(GridSpecError::BadProfile {
                    node: n.id,
                    what: "base_mw must be finite and non-negative",
                });
            }
            if !(p.jitter_mw.is_finite() && p.jitter_mw >= 0.0) {
                return Err(GridSpecError::BadProfile {
                    node: n.id,
                    what: "jitter_mw must be finite and non-negative",
                });
            }
            if !(p.ramp_mw_per_min.is_finite() && p.ramp_mw_per_min >= 0.0) {
                return Err(GridSpecError::BadProfile {
                    node: n.id,
                    what: "ramp_mw_per_min must be finite and non-negative",
                });
            }
        }
        let mut line_ids = BTreeSet::new();
        for l in &self.lines {
            if !line_ids.insert(l.id) {
                return Err(GridSpecError::DuplicateLine(l.id));
            }
            for node in [l.from, l.to] {
                if !ids.contains(&node) {
                    return Err(GridSpecError::UnknownEndpoint { line: l.id, node });
                }
            }
            if l.from == l.to {
                return Err(GridSpecError::SelfLoop(l.id));
            }
            if !(l.susceptance.is_finite() && l.susceptance > 0.0) {
                return Err(GridSpecError::BadLineParameter {
                    line: l.id,
                    what: "susceptance",
                });
            }
            if !(l.capacity_mw.is_finite() && l.capacity_mw > 0.0) {
                return Err(GridSpecError::BadLineParameter {
                    line: l.id,
                    what: "capacity_mw",
                });
            }
        }
        if self.gamma_recovery.is_zero() || self.tau_trip.is_zero() {
            return Err(GridSpecError::NonPositiveDwell);
        }
        if !self.nodes.iter().any(|n| n.kind == NodeKind::Generator) {
            return Err(GridSpecError::NoGenerator);
        }
        match self.node_index(self.slack_node) {
            Some(i) if self.nodes[i].kind == NodeKind::Generator => Ok(()),
            _ => Err(GridSpecError::BadSlack(self.slack_node)),
        }
    }

    pub fn node_index(&self, id: u32) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn line_index(&self, id: u32) -> Option<usize> {
        self.lines.iter().position(|l| l.id == id)
    }

    pub fn consumers(&self) -> impl Iterator<Item = (usize, &Node)> {
        self.nodes.iter().enumerate().filter(|(_, n)| n.kind == NodeKind::Consumer)
    }

    pub fn generators(&self) -> impl Iterator<Item = (usize, &Node)> {
        self.nodes.iter().enumerate().filter(|(_, n)| n.kind == NodeKind::Generator)
    }

    /// Atom names emitted by the simulator, in a fixed order: one overload atom
    /// per line, then one blackout atom per consumer.
    pub fn atoms(&self) -> Vec<Atom> {
        self.lines
            .iter()
            .map(|l| Atom::overload(l.id))
            .chain(self.consumers().map(|(_, n)| Atom::blackout(n.id)))
            .collect()
    }

    /// Bounded overload for every line and no blackout for every consumer;
    /// `None` for a grid with neither lines nor consumers.
    pub fn safety_requirements(&self, kappa: Duration) -> Option<MtlFormula> {
        let parts = self
            .lines
            .iter()
            .map(|l| MtlFormula::bounded_overload(l.id, kappa))
            .chain(self.consumers().map(|(_, n)| MtlFormula::no_blackout(n.id)));
        MtlFormula::conjunction(parts)
    }
}
