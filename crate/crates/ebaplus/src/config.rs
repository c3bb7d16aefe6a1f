use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::similarity::DeltaMode;

/// Knobs shared by the assessment pipeline and the validation commands.
///
/// The defaults mirror the usual setup for permutation and bootstrap
/// procedures on small effort datasets: 1000 replicates each, a 5%
/// significance level and a fixed seed so repeated runs agree byte for byte.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    /// Number of permutation replicates for significance tests.
    pub n_perm: usize,
    /// Number of bootstrap replicates for point estimates and intervals.
    pub n_boot: usize,
    /// Significance level for permutation tests and confidence intervals.
    pub alpha: f64,
    /// Master seed; every replicate derives its own stream from it.
    pub seed: u64,
    /// Feature difference used when building similarity matrices.
    pub delta_mode: DeltaMode,
    /// Fold count for k-fold cross validation.
    pub k: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n_perm: 1000,
            n_boot: 1000,
            alpha: 0.05,
            seed: 42,
            delta_mode: DeltaMode::default(),
            k: 10,
        }
    }
}

impl RunConfig {
    /// Checks the numeric ranges that every command relies on.
    pub fn validate(&self) -> Result<()> {
        if self.n_perm == 0 {
            return Err(Error::InvalidArgument("n_perm must be at least 1".into()));
        }
        if self.n_boot == 0 {
            return Err(Error::InvalidArgument("n_boot must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha must lie strictly between 0 and 1, got {}",
                self.alpha
            )));
        }
        if self.k < 2 {
            return Err(Error::InvalidArgument("k must be at least 2".into()));
        }
        Ok(())
    }
}
