//! Flat binary sample formats. All integers are little-endian `u32`, all
//! values little-endian IEEE-754 `f32`.
//!
//! Raw samples:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "MSNR"
//! 4       4     version (1)
//! 8       4     ndim (4)
//! 12      16    n, channels, height, width
//! 28      4*N   values, sample-major then channel, row, column
//! ```
//!
//! Event frames (already binned per timestep):
//!
//! ```text
//! 0       4     magic "MSNE"
//! 4       4     version (1)
//! 8       4     ndim (5)
//! 12      20    n, timesteps, polarities, height, width
//! 32      4*N   non-negative event counts, sample-major then timestep,
//!               polarity, row, column
//! ```

use std::path::Path;

use rand::Rng;

use super::{DataError, SampleBatch};
use crate::sim::{FeatureMap, Stimulus};

pub const RAW_MAGIC: [u8; 4] = *b"MSNR";
pub const EVENT_MAGIC: [u8; 4] = *b"MSNE";
pub const FORMAT_VERSION: u32 = 1;

fn malformed(msg: impl Into<String>) -> DataError {
    DataError::Malformed(msg.into())
}

fn read(path: &Path) -> Result<Vec<u8>, DataError> {
    std::fs::read(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), DataError> {
    std::fs::write(path, bytes).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn header(magic: [u8; 4], dims: &[usize]) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 4 * dims.len());
    out.extend_from_slice(&magic);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(dims.len() as u32).to_le_bytes());
    for &d in dims {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    out
}

/// Parses the header and returns `(dims, values)`.
fn parse(bytes: &[u8], magic: [u8; 4], ndim: usize) -> Result<(Vec<usize>, Vec<f32>), DataError> {
    let word = |at: usize| -> Result<u32, DataError> {
        bytes
            .get(at..at + 4)
            .map(|b| u32::from_le_bytes(b.try_into().expect("4 bytes")))
            .ok_or_else(|| malformed("truncated header"))
    };
    if bytes.get(..4) != Some(&magic[..]) {
        return Err(malformed(format!(
            "bad magic, expected {:?}",
            String::from_utf8_lossy(&magic)
        )));
    }
    let version = word(4)?;
    if version != FORMAT_VERSION {
        return Err(malformed(format!("unsupported version {version}")));
    }
    let got = word(8)? as usize;
    if got != ndim {
        return Err(malformed(format!(
            "expected {ndim} dims, header says {got}"
        )));
    }
    let dims = (0..ndim)
        .map(|k| word(12 + 4 * k).map(|d| d as usize))
        .collect::<Result<Vec<_>, _>>()?;
    let count = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| malformed("dimension overflow"))?;
    let body = &bytes[12 + 4 * ndim..];
    if body.len() != count * 4 {
        return Err(malformed(format!(
            "payload holds {} bytes, header implies {}",
            body.len(),
            count * 4
        )));
    }
    let values = body
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
        .collect();
    Ok((dims, values))
}

pub fn encode_raw(samples: &[FeatureMap]) -> Result<Vec<u8>, DataError> {
    let shape = samples.first().map_or([0, 0, 0], FeatureMap::shape);
    if samples.iter().any(|s| s.shape() != shape) {
        return Err(malformed("samples differ in shape"));
    }
    let mut out = header(RAW_MAGIC, &[samples.len(), shape[0], shape[1], shape[2]]);
    for v in samples.iter().flat_map(|s| &s.data) {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    Ok(out)
}

/// Decodes every sample without rescaling.
pub fn decode_raw(bytes: &[u8]) -> Result<Vec<FeatureMap>, DataError> {
    let (dims, values) = parse(bytes, RAW_MAGIC, 4)?;
    let [n, c, h, w] = [dims[0], dims[1], dims[2], dims[3]];
    if n > 0 && c * h * w == 0 {
        return Err(malformed("zero-sized sample shape"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(malformed("non-finite value"));
    }
    Ok(values
        .chunks(c * h * w)
        .take(n)
        .map(|chunk| {
            FeatureMap::from_vec(c, h, w, chunk.iter().map(|&v| f64::from(v)).collect())
                .expect("chunk sized by header")
        })
        .collect())
}

pub fn write_raw(path: impl AsRef<Path>, samples: &[FeatureMap]) -> Result<(), DataError> {
    write(path.as_ref(), &encode_raw(samples)?)
}

/// Loads a raw sample file, min-max rescales all values into `[0, 1]` and
/// draws `j * s` distinct samples into `s` batches.
pub fn load_raw_batches<R: Rng + ?Sized>(
    path: impl AsRef<Path>,
    j: usize,
    s: usize,
    rng: &mut R,
) -> Result<Vec<SampleBatch>, DataError> {
    if j == 0 || s == 0 {
        return Err(DataError::InvalidSpec("j and s must be >= 1".into()));
    }
    let mut samples = decode_raw(&read(path.as_ref())?)?;
    let need = j * s;
    if samples.len() < need {
        return Err(DataError::NotEnoughSamples {
            need,
            have: samples.len(),
        });
    }
    let (lo, hi) = samples
        .iter()
        .flat_map(|m| &m.data)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let range = hi - lo;
    for v in samples.iter_mut().flat_map(|m| m.data.iter_mut()) {
        *v = if range > 0.0 {
            (*v - lo) / range
        } else {
            v.clamp(0.0, 1.0)
        };
    }
    let picks = rand::seq::index::sample(rng, samples.len(), need).into_vec();
    Ok(picks
        .chunks(j)
        .map(|chunk| SampleBatch {
            samples: chunk
                .iter()
                .map(|&i| Stimulus::Static(samples[i].clone()))
                .collect(),
            labels: None,
        })
        .collect())
}

/// `samples[n][t]` is the polarity-channel frame of sample `n` at step `t`.
pub fn encode_event_frames(samples: &[Vec<FeatureMap>]) -> Result<Vec<u8>, DataError> {
    let steps = samples.first().map_or(0, Vec::len);
    let shape = samples
        .first()
        .and_then(|s| s.first())
        .map_or([0, 0, 0], FeatureMap::shape);
    if samples
        .iter()
        .any(|s| s.len() != steps || s.iter().any(|f| f.shape() != shape))
    {
        return Err(malformed("event samples differ in shape"));
    }
    let mut out = header(
        EVENT_MAGIC,
        &[samples.len(), steps, shape[0], shape[1], shape[2]],
    );
    for v in samples.iter().flatten().flat_map(|f| &f.data) {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    Ok(out)
}

pub fn decode_event_frames(bytes: &[u8]) -> Result<Vec<Vec<FeatureMap>>, DataError> {
    let (dims, values) = parse(bytes, EVENT_MAGIC, 5)?;
    let [n, t, p, h, w] = [dims[0], dims[1], dims[2], dims[3], dims[4]];
    if n > 0 && t * p * h * w == 0 {
        return Err(malformed("zero-sized event frame shape"));
    }
    if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(malformed("event counts must be finite and non-negative"));
    }
    Ok(values
        .chunks(t * p * h * w)
        .take(n)
        .map(|sample| {
            sample
                .chunks(p * h * w)
                .map(|frame| {
                    FeatureMap::from_vec(p, h, w, frame.iter().map(|&v| f64::from(v)).collect())
                        .expect("frame sized by header")
                })
                .collect()
        })
        .collect())
}

pub fn write_event_frames(
    path: impl AsRef<Path>,
    samples: &[Vec<FeatureMap>],
) -> Result<(), DataError> {
    write(path.as_ref(), &encode_event_frames(samples)?)
}

/// Loads the first `j * s` samples of a pre-binned event file, in file
/// order, as per-timestep stimuli.
pub fn load_event_frames(
    path: impl AsRef<Path>,
    timesteps: usize,
    j: usize,
    s: usize,
) -> Result<Vec<SampleBatch>, DataError> {
    if j == 0 || s == 0 {
        return Err(DataError::InvalidSpec("j and s must be >= 1".into()));
    }
    let bytes = read(path.as_ref())?;
    let (dims, _) = parse(&bytes, EVENT_MAGIC, 5)?;
    if dims[1] != timesteps {
        return Err(DataError::TimestepMismatch {
            file: dims[1],
            requested: timesteps,
        });
    }
    let samples = decode_event_frames(&bytes)?;
    let need = j * s;
    if samples.len() < need {
        return Err(DataError::NotEnoughSamples {
            need,
            have: samples.len(),
        });
    }
    Ok(samples
        .into_iter()
        .take(need)
        .collect::<Vec<_>>()
        .chunks(j)
        .map(|chunk| SampleBatch {
            samples: chunk.iter().cloned().map(Stimulus::Frames).collect(),
            labels: None,
        })
        .collect())
}
