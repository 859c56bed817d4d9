use serde::{Deserialize, Serialize};

use super::{FitnessConfig, FitnessError, Metric, MetricParams};
use crate::data::SampleBatch;
use crate::motif::NetworkGraph;
use crate::sim::{batch_forward, FiringPattern, LifConfig, Weights};

/// Pairwise distances between the firing patterns of one batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BieMatrix {
    pub size: usize,
    /// Row-major `size x size`.
    pub data: Vec<f64>,
}

impl BieMatrix {
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.data[a * self.size + b]
    }

    /// Mean of the strictly upper triangle.
    pub fn upper_mean(&self) -> f64 {
        let n = self.size;
        let pairs = n * (n - 1) / 2;
        let sum: f64 = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .map(|(a, b)| self.get(a, b))
            .sum();
        sum / pairs as f64
    }
}

pub fn bie_matrix(
    patterns: &[FiringPattern],
    metric: Metric,
    params: &MetricParams,
) -> Result<BieMatrix, FitnessError> {
    let n = patterns.len();
    if n < 2 {
        return Err(FitnessError::BatchTooSmall { index: 0, len: n });
    }
    let len = patterns[0].counts.len();
    if let Some(p) = patterns.iter().find(|p| p.counts.len() != len) {
        return Err(FitnessError::LengthMismatch(len, p.counts.len()));
    }
    let mut data = vec![0.0; n * n];
    for a in 0..n {
        for b in a + 1..n {
            let d = metric.distance(&patterns[a].counts, &patterns[b].counts, params)?;
            data[a * n + b] = d;
            data[b * n + a] = d;
        }
    }
    Ok(BieMatrix { size: n, data })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BieScore {
    /// Lower is better; `+inf` for a dead network.
    pub score: f64,
    /// Per-batch upper-triangle means, before the liveness check.
    pub batch_scores: Vec<f64>,
    pub total_spikes: u64,
    pub dead: bool,
}

impl BieScore {
    /// Value handed to a maximizing search.
    pub fn fitness(&self) -> f64 {
        -self.score
    }
}

/// Mean over batches of the upper-triangle mean of each batch's BIE matrix.
/// If any batch's summed spikes fall below the liveness floor the score is
/// `+inf`.
pub fn bie_score(
    net: &NetworkGraph,
    weights: &Weights,
    batches: &[SampleBatch],
    cfg: &FitnessConfig,
    lif: &LifConfig,
) -> Result<BieScore, FitnessError> {
    cfg.validate()?;
    if batches.is_empty() {
        return Err(FitnessError::InvalidConfig("no evaluation batches".into()));
    }
    let params = cfg.params();
    let mut batch_scores = Vec::with_capacity(batches.len());
    let mut total_spikes = 0;
    let mut dead = false;
    for (index, batch) in batches.iter().enumerate() {
        if batch.len() < 2 {
            return Err(FitnessError::BatchTooSmall {
                index,
                len: batch.len(),
            });
        }
        let results = batch_forward(net, weights, &batch.samples, cfg.timesteps, lif)?;
        let spikes: u64 = results.iter().map(|r| r.total_spikes).sum();
        total_spikes += spikes;
        dead |= spikes < cfg.floor_for(batch.len());
        let patterns: Vec<FiringPattern> = results.into_iter().map(|r| r.firing_pattern).collect();
        batch_scores.push(bie_matrix(&patterns, cfg.metric, &params)?.upper_mean());
    }
    let mean = batch_scores.iter().sum::<f64>() / batch_scores.len() as f64;
    Ok(BieScore {
        score: if dead { f64::INFINITY } else { mean },
        batch_scores,
        total_spikes,
        dead,
    })
}
