//! Genotype to phenotype decoding.
//!
//! Each non-empty layer becomes a stage instantiated from one of five motif
//! templates. Stages are chained in order; the `g1` gene adds cross-layer
//! projections from earlier stages and `g2` picks their kernel.

mod phenotype;
mod template;

use thiserror::Error;

pub use phenotype::{
    build_phenotype, build_stage, ei_profile, ArchitectureFile, CrossEdge, EiProfile, Head, Kernel,
    NetworkGraph, PhenotypeConfig, StageEdge, StageGraph, StageNode, ARCHITECTURE_SCHEMA_VERSION,
};
pub use template::{
    template, EdgeKind, EdgeSpec, Endpoint, MotifKind, MotifTemplate, NodeSpec, NodeWidth, Polarity,
};

use crate::genome::Gene;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MotifError {
    #[error("unknown motif gene {0}")]
    UnknownMotif(Gene),
    #[error("unknown motif name {0:?}")]
    UnknownMotifName(String),
    #[error("layer {layer} is empty (m = 0) and has no stage")]
    EmptyLayer { layer: usize },
    #[error("genome has depth 0: every layer is empty")]
    DegenerateGenome,
    #[error("invalid micro-operation gene {0}")]
    UnknownKernel(Gene),
    #[error("invalid phenotype config: {0}")]
    InvalidConfig(String),
    #[error("invalid genome: {0}")]
    InvalidGenome(String),
}
