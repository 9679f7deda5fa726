//! Controllers acting on the grid every Δ, and the monitor-driven shield.

mod basic;
mod shield;
#[cfg(feature = "tabular-q")]
mod tabular_q;

use std::fmt;
use std::str::FromStr;

use crate::grid::{apply_action, settle, Action, EpisodeConfig, EpisodeEvent, FlowError, GridSpec, GridState, Settled};
use crate::logic::Duration;
use crate::monitor::Monitor;
use crate::semantics::Assignment;

pub use basic::{GreedyController, NoopController, RandomController};
pub use shield::ShieldedController;
#[cfg(feature = "tabular-q")]
pub use tabular_q::{QParams, TabularQController};

/// What a controller sees at a sampling instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub time: Duration,
    /// Current production (generators) and requested demand (consumers).
    pub profile_mw: Vec<f64>,
    pub injections_mw: Vec<f64>,
    pub load_ratio: Vec<f64>,
    pub line_in_service: Vec<bool>,
    pub blackout: Vec<bool>,
    pub outage_clock: Vec<Duration>,
}

impl Observation {
    pub fn from_state(state: &GridState) -> Observation {
        Observation {
            time: state.time,
            profile_mw: state.profile_mw.clone(),
            injections_mw: state.injections_mw.clone(),
            load_ratio: state.load_ratio.clone(),
            line_in_service: state.line_in_service.clone(),
            blackout: state.blackout.clone(),
            outage_clock: state.outage_clock.clone(),
        }
    }

    pub fn max_load_ratio(&self) -> f64 {
        self.load_ratio.iter().copied().fold(0.0, f64::max)
    }

    /// One-step model: the tick right after `action`, with current levels.
    pub fn predict(&self, grid: &GridSpec, action: Action) -> Result<Settled, FlowError> {
        let mut topology = self.line_in_service.clone();
        if apply_action(grid, &mut topology, action).is_err() {
            topology = self.line_in_service.clone();
        }
        settle(grid, &topology, &self.profile_mw, &self.blackout, &self.outage_clock)
    }
}

pub trait Controller {
    fn act(&mut self, grid: &GridSpec, obs: &Observation) -> Action;

    /// The sample produced at index `index` right after the last action.
    fn observe_sample(&mut self, _index: usize, _sample: &Assignment) {}

    /// Events recorded since the last call, stamped with `t_min` when needed.
    fn drain_events(&mut self, _t_min: Duration) -> Vec<EpisodeEvent> {
        Vec::new()
    }
}

/// Every single-line toggle in line order, then `Noop`.
pub fn candidate_actions(grid: &GridSpec, obs: &Observation) -> Vec<Action> {
    grid.lines
        .iter()
        .zip(&obs.line_in_service)
        .map(|(l, &on)| Action::SetLine {
            line: l.id,
            in_service: !on,
        })
        .chain(std::iter::once(Action::Noop))
        .collect()
}

/// Candidates with their predicted tick, best first: fewest blackouts, then
/// smallest max load ratio; ties keep candidate order (line id, then `Noop`).
pub fn rank_candidates(grid: &GridSpec, obs: &Observation) -> Vec<(Action, Settled)> {
    let mut ranked: Vec<(Action, Settled)> = candidate_actions(grid, obs)
        .into_iter()
        .filter_map(|a| obs.predict(grid, a).ok().map(|s| (a, s)))
        .collect();
    ranked.sort_by(|(_, x), (_, y)| {
        x.blackout_count()
            .cmp(&y.blackout_count())
            .then(x.max_load_ratio().total_cmp(&y.max_load_ratio()))
    });
    ranked
}

/// Controller selection as written in scenario files and on the command line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ControllerSpec {
    Noop,
    Random,
    Greedy,
    TabularQ,
    Shielded(Box<ControllerSpec>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ControllerSpecError {
    #[error("unknown controller `{0}` (expected noop, random, greedy, tabular_q or shielded:<inner>)")]
    Unknown(String),
    #[error("a shield cannot wrap another shield")]
    NestedShield,
    #[error("controller `tabular_q` needs the `tabular-q` feature")]
    FeatureDisabled,
}

impl FromStr for ControllerSpec {
    type Err = ControllerSpecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some(inner) = s.strip_prefix("shielded:") {
            let inner: ControllerSpec = inner.parse()?;
            if matches!(inner, ControllerSpec::Shielded(_)) {
                return Err(ControllerSpecError::NestedShield);
            }
            return Ok(ControllerSpec::Shielded(Box::new(inner)));
        }
        match s {
            "noop" => Ok(ControllerSpec::Noop),
            "random" => Ok(ControllerSpec::Random),
            "greedy" => Ok(ControllerSpec::Greedy),
            "tabular_q" if cfg!(feature = "tabular-q") => Ok(ControllerSpec::TabularQ),
            "tabular_q" => Err(ControllerSpecError::FeatureDisabled),
            other => Err(ControllerSpecError::Unknown(other.to_string())),
        }
    }
}

impl fmt::Display for ControllerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ControllerSpec::Noop => f.write_str("noop"),
            ControllerSpec::Random => f.write_str("random"),
            ControllerSpec::Greedy => f.write_str("greedy"),
            ControllerSpec::TabularQ => f.write_str("tabular_q"),
            ControllerSpec::Shielded(inner) => write!(f, "shielded:{inner}"),
        }
    }
}

/// Tunables shared by all controllers of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerParams {
    pub seed: u64,
    pub epsilon: f64,
    /// Training episodes for learning controllers.
    pub episodes: u32,
}

impl Default for ControllerParams {
    fn default() -> Self {
        ControllerParams {
            seed: 0,
            epsilon: 0.1,
            episodes: 5,
        }
    }
}

/// Everything needed to instantiate a controller for one episode.
#[derive(Debug, Clone, Copy)]
pub struct BuildContext<'a> {
    pub grid: &'a GridSpec,
    pub params: ControllerParams,
    pub episode_seed: u64,
    /// Monitor a shield consults.
    pub monitor: Option<&'a Monitor>,
    pub episode: EpisodeConfig,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BuildError {
    #[error("a shielded controller needs a safety monitor")]
    MissingMonitor,
    #[error(transparent)]
    Spec(#[from] ControllerSpecError),
}

impl ControllerSpec {
    pub fn build(&self, ctx: &BuildContext<'_>) -> Result<Box<dyn Controller + Send>, BuildError> {
        Ok(match self {
            ControllerSpec::Noop => Box::new(NoopController),
            ControllerSpec::Random => Box::new(RandomController::new(ctx.params.seed, ctx.episode_seed)),
            ControllerSpec::Greedy => Box::new(GreedyController),
            #[cfg(feature = "tabular-q")]
            ControllerSpec::TabularQ => Box::new(TabularQController::trained(ctx)),
            #[cfg(not(feature = "tabular-q"))]
            ControllerSpec::TabularQ => return Err(ControllerSpecError::FeatureDisabled.into()),
            ControllerSpec::Shielded(inner) => {
                let monitor = ctx.monitor.ok_or(BuildError::MissingMonitor)?;
                Box::new(ShieldedController::new(inner.build(ctx)?, monitor.clone()))
            }
        })
    }
}
