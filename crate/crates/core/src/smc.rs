//! Statistical model checking over seeded episodes.
//!
//! Episode `i` of a run uses seed `master_seed + i` (wrapping). Episodes are
//! independent, so results do not depend on how many workers run them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::beta::beta_reg;

use crate::control::{BuildContext, BuildError, ControllerParams, ControllerSpec};
use crate::grid::{run_episode, EpisodeConfig, GridSpec, SimError};
use crate::logic::{Duration, MtlFormula};
use crate::monitor::{compile_monitor, monitor_run, Monitor, MonitorError};
use crate::semantics::{eval_mtl_dense, EvalError, Verdict};
use crate::strengthen::{check_assumptions, AssumptionReport, StrengthenResult};

#[derive(Debug, thiserror::Error)]
pub enum SmcError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("assumption unsatisfied: {}", .0.first().map(|r| r.note.as_str()).unwrap_or(""))]
    AssumptionUnsatisfied(Vec<AssumptionReport>),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Monitor(#[from] MonitorError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("cannot start worker pool: {0}")]
    Pool(String),
}

/// Smallest `N` with `2 exp(-2 N ε²) ≤ α`.
pub fn required_samples(epsilon: f64, alpha: f64) -> Result<u64, SmcError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(SmcError::Domain(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(SmcError::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let n = ((2.0 / alpha).ln() / (2.0 * epsilon * epsilon)).ceil();
    let mut n = n.max(1.0) as u64;
    // Guard the ceiling against rounding in either direction.
    let ok = |n: u64| 2.0 * (-2.0 * n as f64 * epsilon * epsilon).exp() <= alpha;
    while n > 1 && ok(n - 1) {
        n -= 1;
    }
    while !ok(n) {
        n += 1;
    }
    Ok(n)
}

/// Exact binomial interval for `k` successes out of `n` at confidence `1 - α`.
pub fn clopper_pearson(k: u64, n: u64, alpha: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let (kf, nf) = (k as f64, n as f64);
    let lo = if k == 0 {
        0.0
    } else if k == n {
        (alpha / 2.0).powf(1.0 / nf)
    } else {
        beta_quantile(kf, nf - kf + 1.0, alpha / 2.0)
    };
    let hi = if k == n {
        1.0
    } else if k == 0 {
        1.0 - (alpha / 2.0).powf(1.0 / nf)
    } else {
        beta_quantile(kf + 1.0, nf - kf, 1.0 - alpha / 2.0)
    };
    (lo, hi)
}

/// Inverse of the regularized incomplete beta function by bisection.
fn beta_quantile(a: f64, b: f64, p: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if beta_reg(a, b, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SampleSize {
    Fixed(u64),
    /// Okamoto bound for half-width `epsilon` at the run's `alpha`.
    Accuracy { epsilon: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmcConfig {
    pub size: SampleSize,
    pub alpha: f64,
    pub master_seed: u64,
    /// Worker threads; 0 lets the pool decide.
    pub jobs: usize,
}

impl SmcConfig {
    pub fn episodes(&self) -> Result<u64, SmcError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(SmcError::Domain(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        match self.size {
            SampleSize::Fixed(0) => Err(SmcError::Domain("episode count must be positive".into())),
            SampleSize::Fixed(n) => Ok(n),
            SampleSize::Accuracy { epsilon } => required_samples(epsilon, self.alpha),
        }
    }
}

pub fn episode_seed(master_seed: u64, index: u64) -> u64 {
    master_seed.wrapping_add(index)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceVerdicts {
    pub seed: u64,
    /// Violations carry the confirming sample index.
    pub verdict_ltl: Verdict<usize>,
    /// Violations carry the deadline instant in minutes.
    pub verdict_mtl: Verdict<Duration>,
}

/// A stochastic system producing one verdict pair per seed.
pub trait EpisodeSource: Sync {
    fn run(&self, seed: u64) -> Result<TraceVerdicts, SmcError>;
}

/// Closed-loop grid episodes checked against a strengthened requirement.
pub struct GridSource<'a> {
    pub grid: &'a GridSpec,
    pub controller: &'a ControllerSpec,
    pub params: ControllerParams,
    pub mtl: &'a MtlFormula,
    pub monitor: Monitor,
    /// Horizon already including the padding.
    pub episode: EpisodeConfig,
}

impl<'a> GridSource<'a> {
    pub fn new(
        grid: &'a GridSpec,
        controller: &'a ControllerSpec,
        params: ControllerParams,
        strengthened: &'a StrengthenResult,
        horizon: Duration,
        delta_small: Duration,
    ) -> Result<Self, SmcError> {
        let episode = EpisodeConfig {
            horizon: horizon + strengthened.padding(),
            delta: strengthened.delta,
            delta_small,
        };
        episode.validate()?;
        Ok(GridSource {
            grid,
            controller,
            params,
            mtl: &strengthened.source,
            monitor: compile_monitor(&strengthened.ltl)?,
            episode,
        })
    }
}

impl EpisodeSource for GridSource<'_> {
    fn run(&self, seed: u64) -> Result<TraceVerdicts, SmcError> {
        let ctx = BuildContext {
            grid: self.grid,
            params: self.params,
            episode_seed: seed,
            monitor: Some(&self.monitor),
            episode: self.episode,
        };
        let mut controller = self.controller.build(&ctx)?;
        let record = run_episode(self.grid, controller.as_mut(), self.episode, seed)?;
        Ok(TraceVerdicts {
            seed,
            verdict_ltl: monitor_run(&self.monitor, &record.sampled)?,
            verdict_mtl: eval_mtl_dense(self.mtl, &record.dense)?,
        })
    }
}

/// Coin-flip plant: an episode satisfies both properties with probability `p`.
#[derive(Debug, Clone, Copy)]
pub struct BernoulliSource {
    pub p: f64,
}

impl EpisodeSource for BernoulliSource {
    fn run(&self, seed: u64) -> Result<TraceVerdicts, SmcError> {
        let sat = ChaCha8Rng::seed_from_u64(seed).random_bool(self.p);
        Ok(if sat {
            TraceVerdicts {
                seed,
                verdict_ltl: Verdict::Sat,
                verdict_mtl: Verdict::Sat,
            }
        } else {
            TraceVerdicts {
                seed,
                verdict_ltl: Verdict::Violated(0),
                verdict_mtl: Verdict::Violated(Duration::ZERO),
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmcResult {
    pub n: u64,
    pub alpha: f64,
    pub master_seed: u64,
    pub successes_ltl: u64,
    pub successes_mtl: u64,
    pub p_hat_ltl: f64,
    pub p_hat_mtl: f64,
    pub ci_ltl: (f64, f64),
    pub ci_mtl: (f64, f64),
    pub pairing_ok: bool,
    pub per_trace: Vec<TraceVerdicts>,
}

impl SmcResult {
    pub fn from_traces(per_trace: Vec<TraceVerdicts>, alpha: f64, master_seed: u64) -> SmcResult {
        let n = per_trace.len() as u64;
        let successes_ltl = per_trace.iter().filter(|t| t.verdict_ltl.is_sat()).count() as u64;
        let successes_mtl = per_trace.iter().filter(|t| t.verdict_mtl.is_sat()).count() as u64;
        let ratio = |k: u64| if n == 0 { 0.0 } else { k as f64 / n as f64 };
        SmcResult {
            n,
            alpha,
            master_seed,
            successes_ltl,
            successes_mtl,
            p_hat_ltl: ratio(successes_ltl),
            p_hat_mtl: ratio(successes_mtl),
            ci_ltl: clopper_pearson(successes_ltl, n, alpha),
            ci_mtl: clopper_pearson(successes_mtl, n, alpha),
            pairing_ok: per_trace.iter().all(|t| !(t.verdict_ltl.is_sat() && t.verdict_mtl.is_violated())),
            per_trace,
        }
    }
}

/// Runs `cfg.episodes()` episodes of `source` on a pool of `cfg.jobs` workers.
pub fn smc_run(source: &dyn EpisodeSource, cfg: &SmcConfig) -> Result<SmcResult, SmcError> {
    let n = cfg.episodes()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| SmcError::Pool(e.to_string()))?;
    let per_trace = pool.install(|| {
        (0..n)
            .into_par_iter()
            .map(|i| source.run(episode_seed(cfg.master_seed, i)))
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(SmcResult::from_traces(per_trace, cfg.alpha, cfg.master_seed))
}

/// Checks the strengthening's assumptions against the grid, then estimates
/// both satisfaction probabilities. Episodes last `horizon` plus the padding
/// that lets the last window be observed.
pub fn smc_estimate(
    grid: &GridSpec,
    controller: &ControllerSpec,
    params: ControllerParams,
    strengthened: &StrengthenResult,
    cfg: &SmcConfig,
    horizon: Duration,
    delta_small: Duration,
) -> Result<SmcResult, SmcError> {
    let failing: Vec<AssumptionReport> = check_assumptions(strengthened, grid)
        .into_iter()
        .filter(|r| !r.is_satisfied())
        .collect();
    if !failing.is_empty() {
        return Err(SmcError::AssumptionUnsatisfied(failing));
    }
    let source = GridSource::new(grid, controller, params, strengthened, horizon, delta_small)?;
    smc_run(&source, cfg)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairingReport {
    pub n: u64,
    pub pairing_ok: bool,
    /// Seeds with a satisfied sampled formula but a violated requirement.
    pub unsound: Vec<u64>,
    /// Seeds where only the sampled formula is violated.
    pub strictness_witnesses: Vec<u64>,
    pub empty: bool,
}

pub fn paired_bound_check(result: &SmcResult) -> PairingReport {
    let unsound: Vec<u64> = result
        .per_trace
        .iter()
        .filter(|t| t.verdict_ltl.is_sat() && t.verdict_mtl.is_violated())
        .map(|t| t.seed)
        .collect();
    PairingReport {
        n: result.per_trace.len() as u64,
        pairing_ok: unsound.is_empty(),
        unsound,
        strictness_witnesses: result
            .per_trace
            .iter()
            .filter(|t| t.verdict_ltl.is_violated() && t.verdict_mtl.is_sat())
            .map(|t| t.seed)
            .collect(),
        empty: result.per_trace.is_empty(),
    }
}
