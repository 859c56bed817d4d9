use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::FitnessError;

/// Distance between two spike-count vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Manhattan,
    Jaccard,
    Cosine,
    Sahd,
}

impl Metric {
    pub const ALL: [Metric; 4] = [
        Metric::Manhattan,
        Metric::Jaccard,
        Metric::Cosine,
        Metric::Sahd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Manhattan => "manhattan",
            Metric::Jaccard => "jaccard",
            Metric::Cosine => "cosine",
            Metric::Sahd => "sahd",
        }
    }

    pub fn distance(
        self,
        u: &[u32],
        v: &[u32],
        params: &MetricParams,
    ) -> Result<f64, FitnessError> {
        match self {
            Metric::Manhattan => manhattan(u, v),
            Metric::Jaccard => jaccard_with(u, v, params.binarize_threshold),
            Metric::Cosine => cosine(u, v),
            Metric::Sahd => sahd_with(u, v, params.alpha, params.binarize_threshold),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = FitnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| FitnessError::UnknownMetric(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricParams {
    /// SAHD scale.
    pub alpha: f64,
    /// A neuron counts as active when its spike count exceeds this.
    pub binarize_threshold: u32,
}

impl Default for MetricParams {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            binarize_threshold: 0,
        }
    }
}

fn same_len(u: &[u32], v: &[u32]) -> Result<(), FitnessError> {
    if u.len() == v.len() {
        Ok(())
    } else {
        Err(FitnessError::LengthMismatch(u.len(), v.len()))
    }
}

pub fn manhattan(u: &[u32], v: &[u32]) -> Result<f64, FitnessError> {
    same_len(u, v)?;
    Ok(u.iter()
        .zip(v)
        .map(|(&a, &b)| u64::from(a.abs_diff(b)))
        .sum::<u64>() as f64)
}

pub fn jaccard(u: &[u32], v: &[u32]) -> Result<f64, FitnessError> {
    jaccard_with(u, v, 0)
}

/// `(M01 + M10) / (M01 + M10 + M11)` on binarized vectors; 0 when neither
/// vector has an active entry.
pub fn jaccard_with(u: &[u32], v: &[u32], threshold: u32) -> Result<f64, FitnessError> {
    same_len(u, v)?;
    let (mut differ, mut both) = (0u64, 0u64);
    for (&a, &b) in u.iter().zip(v) {
        match (a > threshold, b > threshold) {
            (true, true) => both += 1,
            (true, false) | (false, true) => differ += 1,
            (false, false) => {}
        }
    }
    Ok(if differ + both == 0 {
        0.0
    } else {
        differ as f64 / (differ + both) as f64
    })
}

/// `1 - cos(u, v)`. A zero vector is at distance 1 from any non-zero vector
/// and at distance 0 from another zero vector.
pub fn cosine(u: &[u32], v: &[u32]) -> Result<f64, FitnessError> {
    same_len(u, v)?;
    let (mut dot, mut uu, mut vv) = (0.0f64, 0.0f64, 0.0f64);
    for (&a, &b) in u.iter().zip(v) {
        let (a, b) = (f64::from(a), f64::from(b));
        dot += a * b;
        uu += a * a;
        vv += b * b;
    }
    match (uu == 0.0, vv == 0.0) {
        (true, true) => return Ok(0.0),
        (true, false) | (false, true) => return Ok(1.0),
        (false, false) => {}
    }
    // counts are integers, so uu * vv is exact and u == v gives exactly 0
    Ok((1.0 - dot / (uu * vv).sqrt()).max(0.0))
}

pub fn sahd(u: &[u32], v: &[u32], alpha: f64) -> Result<f64, FitnessError> {
    sahd_with(u, v, alpha, 0)
}

/// `alpha * hamming(binarize(u), binarize(v))`.
pub fn sahd_with(u: &[u32], v: &[u32], alpha: f64, threshold: u32) -> Result<f64, FitnessError> {
    same_len(u, v)?;
    let hamming = u
        .iter()
        .zip(v)
        .filter(|(&a, &b)| (a > threshold) != (b > threshold))
        .count();
    Ok(alpha * hamming as f64)
}
