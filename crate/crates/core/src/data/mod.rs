//! Evaluation batches: synthetic generators and two flat binary formats.

mod files;
mod synthetic;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use files::{
    decode_event_frames, decode_raw, encode_event_frames, encode_raw, load_event_frames,
    load_raw_batches, write_event_frames, write_raw, EVENT_MAGIC, FORMAT_VERSION, RAW_MAGIC,
};
pub use synthetic::{synthetic_batches, Generator, SyntheticSpec};

use crate::sim::Stimulus;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed sample file: {0}")]
    Malformed(String),
    #[error("need {need} samples but the file holds {have}")]
    NotEnoughSamples { need: usize, have: usize },
    #[error("file holds {file} timesteps, {requested} requested")]
    TimestepMismatch { file: usize, requested: usize },
    #[error("invalid data spec: {0}")]
    InvalidSpec(String),
}

/// `j` samples evaluated together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub samples: Vec<Stimulus>,
    pub labels: Option<Vec<u32>>,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}
