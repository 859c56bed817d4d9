//! Training-free fitness from the stability of firing patterns across the
//! samples of a batch.

mod bie;
mod evaluator;
mod metric;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bie::{bie_matrix, bie_score, BieMatrix, BieScore};
pub use evaluator::{genome_seed, BieEvaluator, Evaluation};
pub use metric::{cosine, jaccard, jaccard_with, manhattan, sahd, sahd_with, Metric, MetricParams};

use crate::motif::MotifError;
use crate::sim::SimError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitnessError {
    #[error("firing patterns differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("unknown metric {0:?}")]
    UnknownMetric(String),
    #[error("invalid fitness config: {0}")]
    InvalidConfig(String),
    #[error("batch {index} has {len} samples, need at least 2")]
    BatchTooSmall { index: usize, len: usize },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Motif(#[from] MotifError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitnessConfig {
    pub metric: Metric,
    /// Number of batches `s`.
    pub batches: usize,
    /// Samples per batch `j`.
    pub batch_size: usize,
    pub timesteps: usize,
    /// SAHD scale.
    pub alpha: f64,
    /// Minimum summed spikes per batch; `None` means one spike per sample.
    pub liveness_floor: Option<u64>,
    /// Jaccard/SAHD treat a neuron as active when its count exceeds this.
    pub binarize_threshold: u32,
}

impl Default for FitnessConfig {
    fn default() -> Self {
        Self {
            metric: Metric::Manhattan,
            batches: 2,
            batch_size: 8,
            timesteps: 4,
            alpha: 1.0,
            liveness_floor: None,
            binarize_threshold: 0,
        }
    }
}

impl FitnessConfig {
    pub fn validate(&self) -> Result<(), FitnessError> {
        let bad = |m: &str| Err(FitnessError::InvalidConfig(m.to_string()));
        if self.batch_size < 2 {
            return bad("batch_size must be >= 2");
        }
        if self.batches == 0 {
            return bad("batches must be >= 1");
        }
        if self.timesteps == 0 {
            return bad("timesteps must be >= 1");
        }
        if self.alpha <= 0.0 || !self.alpha.is_finite() {
            return bad("alpha must be > 0");
        }
        Ok(())
    }

    pub fn params(&self) -> MetricParams {
        MetricParams {
            alpha: self.alpha,
            binarize_threshold: self.binarize_threshold,
        }
    }

    pub fn floor_for(&self, batch_len: usize) -> u64 {
        self.liveness_floor.unwrap_or(batch_len as u64)
    }
}
