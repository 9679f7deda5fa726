//! Scenario files for `sampleguard smc`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use sampleguard::logic::Duration;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmcSection {
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
}

/// Paths are relative to the scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub grid: PathBuf,
    pub controller: String,
    /// Controller seed; defaults to the master seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Exploration rate of learning controllers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Training episodes of learning controllers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub episodes: Option<u32>,
    #[serde(rename = "delta_min")]
    pub delta: Duration,
    /// Defaults to a fifth of `delta_min`.
    #[serde(rename = "delta_small_min", default, skip_serializing_if = "Option::is_none")]
    pub delta_small: Option<Duration>,
    #[serde(rename = "horizon_min")]
    pub horizon: Duration,
    /// Requirements file; without it the grid's own requirements are used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formulas: Option<PathBuf>,
    /// Overload deadline for the grid's own requirements (default 10).
    #[serde(rename = "kappa_min", default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<Duration>,
    pub smc: SmcSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl Scenario {
    pub fn delta_small(&self) -> Duration {
        self.delta_small.unwrap_or(self.delta / 5)
    }

    pub fn kappa(&self) -> Duration {
        self.kappa.unwrap_or(Duration::minutes(10))
    }

    /// Checks timing and that every referenced file exists below `base`.
    pub fn validate(&self, base: &Path) -> Result<(), String> {
        let small = self.delta_small();
        if small.is_zero() || self.delta.is_zero() || !self.delta.is_multiple_of(small) {
            return Err(format!(
                "delta_min ({}) must be a positive multiple of delta_small_min ({small})",
                self.delta
            ));
        }
        if self.horizon.is_zero() || !self.horizon.is_multiple_of(self.delta) {
            return Err(format!(
                "horizon_min ({}) must be a positive multiple of delta_min ({})",
                self.horizon, self.delta
            ));
        }
        match (self.smc.epsilon, self.smc.n) {
            (Some(_), Some(_)) => return Err("smc: give either epsilon or n, not both".into()),
            (None, None) => return Err("smc: one of epsilon or n is required".into()),
            _ => {}
        }
        for path in std::iter::once(&self.grid).chain(self.formulas.as_ref()) {
            let full = base.join(path);
            if !full.is_file() {
                return Err(format!("referenced file {} does not exist", full.display()));
            }
        }
        Ok(())
    }
}
