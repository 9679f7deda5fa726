//! Tick-level grid simulation and the sampled control loop.
//!
//! Time advances in inner ticks of length `delta_small`. Within a tick every
//! quantity is constant, so each tick becomes one dense-trace segment. Per
//! tick: settle (restore eligible consumers, dispatch, solve flows, detect new
//! blackouts), emit the segment, then advance relays, outage clocks and the
//! demand/production random walks for the next tick.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::flow::{flow_solve, FlowError, Islands};
use super::spec::{GridSpec, NodeKind};
use crate::control::{Controller, Observation};
use crate::logic::Duration;
use crate::semantics::{sample_dense, Assignment, DenseTrace, SampledTrace, Segment, TraceError};

/// Topology-changing control command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Action {
    Noop,
    SetLine { line: u32, in_service: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimedAction {
    pub t_min: Duration,
    pub action: Action,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EpisodeEvent {
    /// Protection relay opened the line at `t_min`.
    Trip { line: u32, t_min: Duration },
    BlackoutStart { node: u32, t_min: Duration },
    Restored { node: u32, t_min: Duration },
    /// The shield found no action predicted safe and fell back to `action`.
    ShieldGap { t_min: Duration, action: Action },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("action targets unknown line {0}")]
    InvalidAction(u32),
    #[error("period {period} is not a positive multiple of the inner step {step}")]
    StepMismatch { period: Duration, step: Duration },
    #[error("horizon {horizon} is not a positive multiple of the sampling period {delta}")]
    HorizonMismatch { horizon: Duration, delta: Duration },
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

/// Dynamic electrical and protection state. Vectors are indexed like
/// `GridSpec::nodes` / `GridSpec::lines`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridState {
    pub time: Duration,
    pub line_in_service: Vec<bool>,
    /// Random-walk level per node: available production or requested demand.
    pub profile_mw: Vec<f64>,
    /// Served injections (generation positive, served demand negative).
    pub injections_mw: Vec<f64>,
    pub flows_mw: Vec<f64>,
    pub load_ratio: Vec<f64>,
    pub overload_elapsed: Vec<Duration>,
    /// Always false for generators.
    pub blackout: Vec<bool>,
    pub outage_clock: Vec<Duration>,
}

/// Result of settling one tick on a given topology.
#[derive(Debug, Clone, PartialEq)]
pub struct Settled {
    pub injections_mw: Vec<f64>,
    pub flows_mw: Vec<f64>,
    pub load_ratio: Vec<f64>,
    pub blackout: Vec<bool>,
    pub restored: Vec<bool>,
    pub started: Vec<bool>,
}

impl Settled {
    pub fn max_load_ratio(&self) -> f64 {
        self.load_ratio.iter().copied().fold(0.0, f64::max)
    }

    pub fn overloaded(&self) -> impl Iterator<Item = bool> + '_ {
        self.load_ratio.iter().map(|&r| r >= 1.0)
    }

    pub fn blackout_count(&self) -> usize {
        self.blackout.iter().filter(|&&b| b).count()
    }

    /// Atom valuation of this tick.
    pub fn assignment(&self, spec: &GridSpec) -> Assignment {
        let mut a = Assignment::new();
        for (line, over) in spec.lines.iter().zip(self.overloaded()) {
            a.insert(format!("oload_{}", line.id), over);
        }
        for (i, node) in spec.consumers() {
            a.insert(format!("blackout_{}", node.id), self.blackout[i]);
        }
        a
    }
}

/// Dispatch and flow for one tick.
///
/// A blacked-out consumer comes back once its outage clock reached
/// `gamma_recovery` and its island has production available. Each island then
/// balances: surplus production is scaled down to demand, a deficit is shared
/// out proportionally (partial service is not a blackout). A consumer with
/// positive demand that ends up served nothing starts a blackout.
pub fn settle(
    spec: &GridSpec,
    in_service: &[bool],
    profile_mw: &[f64],
    blackout: &[bool],
    outage_clock: &[Duration],
) -> Result<Settled, FlowError> {
    let n = spec.nodes.len();
    let islands = Islands::compute(spec, in_service);
    let available: Vec<f64> = islands
        .members
        .iter()
        .map(|m| {
            m.iter()
                .filter(|&&v| spec.nodes[v].kind == NodeKind::Generator)
                .map(|&v| profile_mw[v])
                .sum()
        })
        .collect();

    let mut blackout = blackout.to_vec();
    let mut restored = vec![false; n];
    for v in 0..n {
        if blackout[v] && outage_clock[v] >= spec.gamma_recovery && available[islands.of_node[v]] > 0.0 {
            blackout[v] = false;
            restored[v] = true;
        }
    }

    let mut injections = vec![0.0; n];
    for (island, members) in islands.members.iter().enumerate() {
        let supply = available[island];
        let demand: f64 = members
            .iter()
            .filter(|&&v| spec.nodes[v].kind == NodeKind::Consumer && !blackout[v])
            .map(|&v| profile_mw[v])
            .sum();
        if supply <= 0.0 {
            continue;
        }
        let (gen_scale, serve_scale) = if supply >= demand {
            (demand / supply, 1.0)
        } else {
            (1.0, supply / demand)
        };
        for &v in members {
            injections[v] = match spec.nodes[v].kind {
                NodeKind::Generator => profile_mw[v] * gen_scale,
                NodeKind::Consumer if !blackout[v] => -profile_mw[v] * serve_scale,
                NodeKind::Consumer => 0.0,
            };
        }
    }

    let sol = flow_solve(spec, in_service, &injections)?;
    let mut started = vec![false; n];
    for (v, node) in spec.nodes.iter().enumerate() {
        if node.kind == NodeKind::Consumer && !blackout[v] && profile_mw[v] > 0.0 && sol.injections_mw[v] == 0.0 {
            blackout[v] = true;
            started[v] = true;
        }
    }
    let load_ratio = spec
        .lines
        .iter()
        .zip(&sol.flows_mw)
        .zip(in_service)
        .map(|((l, f), &on)| if on { f.abs() / l.capacity_mw } else { 0.0 })
        .collect();
    Ok(Settled {
        injections_mw: sol.injections_mw,
        flows_mw: sol.flows_mw,
        load_ratio,
        blackout,
        restored,
        started,
    })
}

/// Applies an action to a topology vector.
pub fn apply_action(spec: &GridSpec, in_service: &mut [bool], action: Action) -> Result<(), SimError> {
    if let Action::SetLine { line, in_service: on } = action {
        let idx = spec.line_index(line).ok_or(SimError::InvalidAction(line))?;
        in_service[idx] = on;
    }
    Ok(())
}

impl GridState {
    /// All lines in service, profiles at their base levels, settled at `t = 0`.
    pub fn initial(spec: &GridSpec) -> Result<GridState, SimError> {
        let n = spec.nodes.len();
        let mut state = GridState {
            time: Duration::ZERO,
            line_in_service: vec![true; spec.lines.len()],
            profile_mw: spec.nodes.iter().map(|n| n.profile.base_mw).collect(),
            injections_mw: vec![0.0; n],
            flows_mw: vec![0.0; spec.lines.len()],
            load_ratio: vec![0.0; spec.lines.len()],
            overload_elapsed: vec![Duration::ZERO; spec.lines.len()],
            blackout: vec![false; n],
            outage_clock: vec![Duration::ZERO; n],
        };
        let s = settle(spec, &state.line_in_service, &state.profile_mw, &state.blackout, &state.outage_clock)?;
        state.absorb(s);
        Ok(state)
    }

    fn absorb(&mut self, s: Settled) {
        for v in 0..self.blackout.len() {
            if s.restored[v] || s.started[v] {
                self.outage_clock[v] = Duration::ZERO;
            }
        }
        self.injections_mw = s.injections_mw;
        self.flows_mw = s.flows_mw;
        self.load_ratio = s.load_ratio;
        self.blackout = s.blackout;
    }

    pub fn max_load_ratio(&self) -> f64 {
        self.load_ratio.iter().copied().fold(0.0, f64::max)
    }
}

/// Output of one control period.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    /// One segment per inner tick.
    pub segments: Vec<Segment>,
    pub events: Vec<EpisodeEvent>,
}

pub fn step_dense(
    spec: &GridSpec,
    state: &GridState,
    action: Action,
    delta: Duration,
    delta_small: Duration,
    rng: &mut impl Rng,
) -> Result<(StepOutput, GridState), SimError> {
    step_dense_observed(spec, state, action, delta, delta_small, rng, &mut |_| {})
}

/// [`step_dense`] with a callback seeing the state of every settled tick.
pub fn step_dense_observed(
    spec: &GridSpec,
    state: &GridState,
    action: Action,
    delta: Duration,
    delta_small: Duration,
    rng: &mut impl Rng,
    on_tick: &mut dyn FnMut(&GridState),
) -> Result<(StepOutput, GridState), SimError> {
    if delta_small.is_zero() || delta.is_zero() || !delta.is_multiple_of(delta_small) {
        return Err(SimError::StepMismatch {
            period: delta,
            step: delta_small,
        });
    }
    let mut st = state.clone();
    apply_action(spec, &mut st.line_in_service, action)?;
    for (i, on) in st.line_in_service.iter().enumerate() {
        if !on {
            st.overload_elapsed[i] = Duration::ZERO;
        }
    }
    let ticks = delta.floor_div(delta_small);
    let tick_minutes = delta_small.to_f64();
    let mut out = StepOutput {
        segments: Vec::with_capacity(ticks as usize),
        events: Vec::new(),
    };

    for _ in 0..ticks {
        let settled = settle(spec, &st.line_in_service, &st.profile_mw, &st.blackout, &st.outage_clock)?;
        for (v, node) in spec.nodes.iter().enumerate() {
            if settled.restored[v] {
                out.events.push(EpisodeEvent::Restored { node: node.id, t_min: st.time });
            }
            if settled.started[v] {
                out.events.push(EpisodeEvent::BlackoutStart { node: node.id, t_min: st.time });
            }
        }
        let atoms = settled.assignment(spec);
        st.absorb(settled);
        out.segments.push(Segment { start: st.time, atoms });
        on_tick(&st);

        let next_time = st.time + delta_small;
        for (i, line) in spec.lines.iter().enumerate() {
            if st.line_in_service[i] && st.load_ratio[i] >= 1.0 {
                st.overload_elapsed[i] = st.overload_elapsed[i] + delta_small;
                if st.overload_elapsed[i] >= spec.tau_trip {
                    st.line_in_service[i] = false;
                    st.overload_elapsed[i] = Duration::ZERO;
                    out.events.push(EpisodeEvent::Trip { line: line.id, t_min: next_time });
                }
            } else {
                st.overload_elapsed[i] = Duration::ZERO;
            }
        }
        for v in 0..spec.nodes.len() {
            if st.blackout[v] {
                st.outage_clock[v] = st.outage_clock[v] + delta_small;
            }
        }
        for (v, node) in spec.nodes.iter().enumerate() {
            let p = &node.profile;
            let bound = p.jitter_mw.min(p.ramp_mw_per_min * tick_minutes);
            if bound > 0.0 {
                let step: f64 = rng.random_range(-bound..=bound);
                st.profile_mw[v] = p.clamp(st.profile_mw[v] + step);
            }
        }
        st.time = next_time;
    }
    Ok((out, st))
}

/// Everything produced by one closed-loop run.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub seed: u64,
    pub dense: DenseTrace,
    pub sampled: SampledTrace,
    pub actions: Vec<TimedAction>,
    pub events: Vec<EpisodeEvent>,
}

/// Timing of a closed-loop run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpisodeConfig {
    pub horizon: Duration,
    pub delta: Duration,
    pub delta_small: Duration,
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.delta_small.is_zero() || self.delta.is_zero() || !self.delta.is_multiple_of(self.delta_small) {
            return Err(SimError::StepMismatch {
                period: self.delta,
                step: self.delta_small,
            });
        }
        if self.horizon.is_zero() || !self.horizon.is_multiple_of(self.delta) {
            return Err(SimError::HorizonMismatch {
                horizon: self.horizon,
                delta: self.delta,
            });
        }
        Ok(())
    }
}

/// The RNG stream used for the plant in an episode with the given seed.
pub fn episode_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn run_episode(
    spec: &GridSpec,
    controller: &mut dyn Controller,
    cfg: EpisodeConfig,
    seed: u64,
) -> Result<EpisodeRecord, SimError> {
    run_episode_observed(spec, controller, cfg, seed, &mut |_| {})
}

/// Closed loop: at every `t = beta * delta` the controller observes the state,
/// acts, and the plant runs one period. The controller is told the sample its
/// action produced before the next decision.
pub fn run_episode_observed(
    spec: &GridSpec,
    controller: &mut dyn Controller,
    cfg: EpisodeConfig,
    seed: u64,
    on_tick: &mut dyn FnMut(&GridState),
) -> Result<EpisodeRecord, SimError> {
    cfg.validate()?;
    let mut rng = episode_rng(seed);
    let mut state = GridState::initial(spec)?;
    let periods = cfg.horizon.floor_div(cfg.delta) as usize;
    let mut segments = Vec::with_capacity(periods * cfg.delta.floor_div(cfg.delta_small) as usize);
    let mut actions = Vec::with_capacity(periods);
    let mut events = Vec::new();
    let mut seen_samples = Vec::with_capacity(periods + 1);

    for beta in 0..periods {
        let obs = Observation::from_state(&state);
        let action = controller.act(spec, &obs);
        actions.push(TimedAction {
            t_min: state.time,
            action,
        });
        let (out, next) = step_dense_observed(spec, &state, action, cfg.delta, cfg.delta_small, &mut rng, on_tick)?;
        let sample = &out.segments[0].atoms;
        events.extend(controller.drain_events(state.time));
        controller.observe_sample(beta, sample);
        seen_samples.push(sample.clone());
        segments.extend(out.segments);
        events.extend(out.events);
        state = next;
    }

    let dense = DenseTrace::new(cfg.delta_small, cfg.horizon, segments)?.coalesced();
    let sampled = sample_dense(&dense, cfg.delta)?;
    assert_eq!(
        &sampled.samples[..periods],
        &seen_samples[..],
        "sampled trace must agree with what the controller observed"
    );
    Ok(EpisodeRecord {
        seed,
        dense,
        sampled,
        actions,
        events,
    })
}
