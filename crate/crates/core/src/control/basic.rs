use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{rank_candidates, Controller, Observation};
use crate::grid::{Action, GridSpec};

#[derive(Debug, Clone, Copy, Default)]
pub struct NoopController;

impl Controller for NoopController {
    fn act(&mut self, _grid: &GridSpec, _obs: &Observation) -> Action {
        Action::Noop
    }
}

/// Uniform over `Noop` and every single-line toggle.
#[derive(Debug, Clone)]
pub struct RandomController {
    rng: ChaCha8Rng,
}

impl RandomController {
    /// Seeded from `seed`; `stream` separates episodes of one run.
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        RandomController { rng }
    }
}

impl Controller for RandomController {
    fn act(&mut self, grid: &GridSpec, obs: &Observation) -> Action {
        let k = self.rng.random_range(0..=grid.lines.len());
        if k == 0 {
            return Action::Noop;
        }
        Action::SetLine {
            line: grid.lines[k - 1].id,
            in_service: !obs.line_in_service[k - 1],
        }
    }
}

/// Acts only under overload: picks the single toggle (or `Noop`) with the
/// fewest predicted blackouts, then the smallest predicted max load ratio.
#[derive(Debug, Clone, Copy, Default)]
pub struct GreedyController;

impl Controller for GreedyController {
    fn act(&mut self, grid: &GridSpec, obs: &Observation) -> Action {
        if obs.max_load_ratio() < 1.0 {
            return Action::Noop;
        }
        rank_candidates(grid, obs).first().map_or(Action::Noop, |(a, _)| *a)
    }
}
