//! Desk-scale ε-greedy Q-learning over bucketed line loads.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{candidate_actions, BuildContext, Controller, Observation};
use crate::grid::{run_episode, Action, GridSpec};
use crate::semantics::Assignment;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QParams {
    pub epsilon: f64,
    pub learning_rate: f64,
    pub discount: f64,
}

impl Default for QParams {
    fn default() -> Self {
        QParams {
            epsilon: 0.1,
            learning_rate: 0.2,
            discount: 0.9,
        }
    }
}

/// Per line: 0 below 0.8, 1 in [0.8, 1), 2 at or above 1, 3 out of service.
fn discretize(obs: &Observation) -> Vec<u8> {
    obs.load_ratio
        .iter()
        .zip(&obs.line_in_service)
        .map(|(&r, &on)| match (on, r) {
            (false, _) => 3,
            (true, r) if r < 0.8 => 0,
            (true, r) if r < 1.0 => 1,
            _ => 2,
        })
        .collect()
}

/// `-(overloaded lines) - 10 * (blacked-out consumers)`.
fn reward(sample: &Assignment) -> f64 {
    sample
        .iter()
        .filter(|(_, &v)| v)
        .map(|(k, _)| if k.starts_with("blackout_") { -10.0 } else { -1.0 })
        .sum()
}

#[derive(Debug, Clone)]
pub struct TabularQController {
    params: QParams,
    table: HashMap<Vec<u8>, Vec<f64>>,
    rng: ChaCha8Rng,
    /// State and action index awaiting their reward.
    pending: Option<(Vec<u8>, usize)>,
    /// Transition awaiting the successor state.
    last: Option<(Vec<u8>, usize, f64)>,
    learning: bool,
}

impl TabularQController {
    pub fn new(params: QParams, seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        TabularQController {
            params,
            table: HashMap::new(),
            rng,
            pending: None,
            last: None,
            learning: true,
        }
    }

    /// Runs `ctx.params.episodes` training episodes before the evaluated one.
    pub fn trained(ctx: &BuildContext<'_>) -> Self {
        let params = QParams {
            epsilon: ctx.params.epsilon,
            ..QParams::default()
        };
        let mut q = TabularQController::new(params, ctx.params.seed, ctx.episode_seed);
        for k in 0..u64::from(ctx.params.episodes) {
            let seed = ctx.episode_seed ^ (k + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
            // Training failures only cost experience.
            let _ = run_episode(ctx.grid, &mut q, ctx.episode, seed);
            q.pending = None;
            q.last = None;
        }
        q
    }

    pub fn states_visited(&self) -> usize {
        self.table.len()
    }

    pub fn set_learning(&mut self, on: bool) {
        self.learning = on;
    }

    fn values(&mut self, key: &[u8], n: usize) -> &mut Vec<f64> {
        self.table.entry(key.to_vec()).or_insert_with(|| vec![0.0; n])
    }
}

impl Controller for TabularQController {
    fn act(&mut self, grid: &GridSpec, obs: &Observation) -> Action {
        let candidates = candidate_actions(grid, obs);
        let n = candidates.len();
        let key = discretize(obs);
        if let Some((s, a, r)) = self.last.take() {
            if self.learning {
                let best_next = self.values(&key, n).iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let QParams {
                    learning_rate,
                    discount,
                    ..
                } = self.params;
                let q = &mut self.values(&s, n)[a];
                *q += learning_rate * (r + discount * best_next - *q);
            }
        }
        let idx = if self.rng.random::<f64>() < self.params.epsilon {
            self.rng.random_range(0..n)
        } else {
            let values = self.values(&key, n);
            // First maximum: lowest line id, `Noop` last.
            let mut best = 0;
            for (i, v) in values.iter().enumerate() {
                if *v > values[best] {
                    best = i;
                }
            }
            best
        };
        self.pending = Some((key, idx));
        candidates[idx]
    }

    fn observe_sample(&mut self, _index: usize, sample: &Assignment) {
        if let Some((s, a)) = self.pending.take() {
            self.last = Some((s, a, reward(sample)));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn buckets() {
        let obs = Observation {
            time: crate::logic::Duration::ZERO,
            profile_mw: vec![],
            injections_mw: vec![],
            load_ratio: vec![0.5, 0.8, 1.0, 2.0],
            line_in_service: vec![true, true, true, false],
            blackout: vec![],
            outage_clock: vec![],
        };
        assert_eq!(discretize(&obs), vec![0, 1, 2, 3]);
    }

    #[test]
    fn reward_counts_atoms() {
        let mut s = Assignment::new();
        s.insert("oload_1".into(), true);
        s.insert("oload_2".into(), false);
        s.insert("blackout_3".into(), true);
        assert_eq!(reward(&s), -11.0);
    }
}
