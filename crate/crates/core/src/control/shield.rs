use super::{rank_candidates, Controller, Observation};
use crate::grid::{Action, EpisodeEvent, GridSpec};
use crate::logic::Duration;
use crate::monitor::{Monitor, MonitorState};
use crate::semantics::Assignment;

/// One-step shield. The inner action is predicted with the current levels;
/// if the resulting sample would drive the monitor to a violation, the best
/// predicted-safe candidate is used instead. With no safe candidate the
/// best-ranked one is taken and a gap is recorded.
pub struct ShieldedController {
    inner: Box<dyn Controller + Send>,
    monitor: Monitor,
    state: MonitorState,
    gaps: Vec<Action>,
    overrides: usize,
}

impl ShieldedController {
    pub fn new(inner: Box<dyn Controller + Send>, monitor: Monitor) -> Self {
        let state = monitor.initial_state();
        ShieldedController {
            inner,
            monitor,
            state,
            gaps: Vec::new(),
            overrides: 0,
        }
    }

    pub fn monitor_state(&self) -> &MonitorState {
        &self.state
    }

    /// How often the inner action was replaced.
    pub fn overrides(&self) -> usize {
        self.overrides
    }

    fn predicted_safe(&self, sample: &Assignment) -> bool {
        let mut next = self.state.clone();
        match self.monitor.step_in_place(&mut next, sample) {
            Ok(()) => next.is_alive(),
            Err(_) => false,
        }
    }
}

impl Controller for ShieldedController {
    fn act(&mut self, grid: &GridSpec, obs: &Observation) -> Action {
        let proposed = self.inner.act(grid, obs);
        if let Ok(settled) = obs.predict(grid, proposed) {
            if self.predicted_safe(&settled.assignment(grid)) {
                return proposed;
            }
        }
        self.overrides += 1;
        let ranked = rank_candidates(grid, obs);
        if let Some((a, _)) = ranked.iter().find(|(_, s)| self.predicted_safe(&s.assignment(grid))) {
            return *a;
        }
        let fallback = ranked.first().map_or(Action::Noop, |(a, _)| *a);
        self.gaps.push(fallback);
        fallback
    }

    fn observe_sample(&mut self, index: usize, sample: &Assignment) {
        self.inner.observe_sample(index, sample);
        if self.monitor.step_in_place(&mut self.state, sample).is_err() || !self.state.is_alive() {
            // The episode is already lost for this property; keep shielding
            // the remainder from a fresh start.
            self.state = self.monitor.initial_state();
        }
    }

    fn drain_events(&mut self, t_min: Duration) -> Vec<EpisodeEvent> {
        let mut events = self.inner.drain_events(t_min);
        events.extend(self.gaps.drain(..).map(|action| EpisodeEvent::ShieldGap { t_min, action }));
        events
    }
}
