use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{DataError, SampleBatch};
use crate::sim::{FeatureMap, Stimulus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Generator {
    /// Uniform noise in `[0, 1]`, unlabeled.
    Noise,
    /// One fully lit row (label 0) or column (label 1).
    #[default]
    Bars,
    /// A Gaussian bump centred in one of four quadrants (label = quadrant).
    Blobs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    /// Samples per batch.
    pub j: usize,
    /// Number of batches.
    pub s: usize,
    /// `[channels, height, width]`.
    pub shape: [usize; 3],
    pub generator: Generator,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), DataError> {
        if self.j == 0 || self.s == 0 {
            return Err(DataError::InvalidSpec("j and s must be >= 1".into()));
        }
        if self.shape.contains(&0) {
            return Err(DataError::InvalidSpec("shape entries must be >= 1".into()));
        }
        Ok(())
    }
}

pub fn synthetic_batches<R: Rng + ?Sized>(
    spec: &SyntheticSpec,
    rng: &mut R,
) -> Result<Vec<SampleBatch>, DataError> {
    spec.validate()?;
    let batches = (0..spec.s)
        .map(|_| {
            let (samples, labels): (Vec<_>, Vec<_>) = (0..spec.j)
                .map(|_| {
                    let (map, label) = sample(spec, rng);
                    (Stimulus::Static(map), label)
                })
                .unzip();
            SampleBatch {
                samples,
                labels: (spec.generator != Generator::Noise).then_some(labels),
            }
        })
        .collect();
    Ok(batches)
}

fn sample<R: Rng + ?Sized>(spec: &SyntheticSpec, rng: &mut R) -> (FeatureMap, u32) {
    let [c, h, w] = spec.shape;
    let mut map = FeatureMap::zeros(c, h, w);
    let plane = h * w;
    let label = match spec.generator {
        Generator::Noise => {
            map.data.iter_mut().for_each(|v| *v = rng.random::<f64>());
            0
        }
        Generator::Bars => {
            let vertical = rng.random_bool(0.5);
            let line = rng.random_range(0..if vertical { w } else { h });
            for ch in 0..c {
                for y in 0..h {
                    for x in 0..w {
                        let on = if vertical { x == line } else { y == line };
                        if on {
                            map.data[ch * plane + y * w + x] = 1.0;
                        }
                    }
                }
            }
            u32::from(vertical)
        }
        Generator::Blobs => {
            let quadrant = rng.random_range(0..4u32);
            let (qy, qx) = ((quadrant / 2) as f64, (quadrant % 2) as f64);
            let cy = (qy + 0.5) * h as f64 / 2.0 + rng.random_range(-0.5..0.5);
            let cx = (qx + 0.5) * w as f64 / 2.0 + rng.random_range(-0.5..0.5);
            let sigma = (h.max(w) as f64 / 6.0).max(0.5);
            for ch in 0..c {
                for y in 0..h {
                    for x in 0..w {
                        let d2 = (y as f64 + 0.5 - cy).powi(2) + (x as f64 + 0.5 - cx).powi(2);
                        map.data[ch * plane + y * w + x] = (-d2 / (2.0 * sigma * sigma)).exp();
                    }
                }
            }
            quadrant
        }
    };
    (map, label)
}
