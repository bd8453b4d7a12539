//! Monte Carlo and exact experiments, each producing an [`ExperimentReport`].
//!
//! Sampling is split by point id: point `i` always uses the same base stream and omega ids,
//! so results do not depend on how ids are spread over worker threads.

mod curves;
mod measures;
mod report;
mod series;
mod stats;
mod structural;

pub use curves::{entropy_proxy, llt_curve, DistinctCounter};
pub use measures::{cesaro_trajectory, estimate_e_measure, triple_measure_curve};
pub use report::{write_timing, Assertion, Curve, ExperimentReport};
pub use series::{series_partial_sums, tail_integral};
pub use stats::{mean_and_se, quantile, Proportion, Z95};
pub use structural::{conjugacy_sweep, first_odd_parity, selftest, CheckTally};

use std::ops::Range;

use rayon::prelude::*;

use crate::base::BaseError;
use crate::dynamics::{ConfigError, SystemConfig};
use crate::numeric::NumericError;
use crate::perm::{polynomial_times, PermError};

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("configuration: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("worker pool: {0}")]
    Pool(String),
}

impl From<BaseError> for ExperimentError {
    fn from(e: BaseError) -> Self {
        match e {
            BaseError::TooLarge { .. } => ExperimentError::Budget(e.to_string()),
            other => ExperimentError::Input(other.to_string()),
        }
    }
}

impl ExperimentError {
    pub fn is_budget(&self) -> bool {
        matches!(self, ExperimentError::Budget(_))
    }
}

/// Maps `f` over `ids` on a pool of `workers` threads, returning results in id order.
pub fn par_map<R, F>(workers: usize, ids: Range<u64>, f: F) -> Result<Vec<R>, ExperimentError>
where
    R: Send,
    F: Fn(u64) -> R + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| ExperimentError::Pool(e.to_string()))?;
    Ok(pool.install(|| ids.into_par_iter().map(f).collect()))
}

/// Fails with the offending time if the horizon reaches past the Birkhoff budget.
fn check_budget(config: &SystemConfig) -> Result<(), ExperimentError> {
    for (name, p) in [("p1", &config.p1), ("p2", &config.p2)] {
        match polynomial_times(p, config.start(), config.horizon, config.budget) {
            Ok(_) => {}
            Err(PermError::Budget { needed, budget }) => {
                return Err(ExperimentError::Budget(format!(
                    "{name}({}) = {needed} exceeds the Birkhoff budget {budget} (N = {})",
                    config.last(),
                    config.start()
                )))
            }
            Err(e) => return Err(ExperimentError::Input(e.to_string())),
        }
    }
    Ok(())
}

/// Config echo, seeds and base-system flags shared by all sampled experiments.
fn stamp(report: &mut ExperimentReport, config: &SystemConfig) {
    report.config = config.to_kv().into_iter().collect();
    report.seeds.insert("master".into(), config.seed);
    report.seeds.insert("omega".into(), config.omega_seed());
    if !config.base.llt_guaranteed() {
        report.notes.push("LLT not guaranteed for this base system".into());
    }
}
