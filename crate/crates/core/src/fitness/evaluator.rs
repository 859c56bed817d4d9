use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{bie_score, BieScore, FitnessConfig, FitnessError};
use crate::data::SampleBatch;
use crate::genome::{encode, Genome};
use crate::motif::{build_phenotype, MotifError, NetworkGraph, PhenotypeConfig};
use crate::sim::{init_weights, LifConfig, Weights};

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Weight-initialization seed for a genome: a stable hash of the run seed
/// and the flat genes, so a genome scores the same wherever it is evaluated.
pub fn genome_seed(run_seed: u64, g: &Genome) -> u64 {
    let genes = encode(g);
    let mut h = splitmix(run_seed ^ genes.len() as u64);
    for x in genes {
        h = splitmix(h ^ u64::from(x));
    }
    h
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// Maximized by the search; `-inf` for silent or empty networks.
    pub fitness: f64,
    pub depth: usize,
    /// `None` when the genome has no non-empty layer.
    pub score: Option<BieScore>,
}

/// Scores genomes on a fixed set of evaluation batches.
#[derive(Debug, Clone)]
pub struct BieEvaluator {
    pub phenotype: PhenotypeConfig,
    pub lif: LifConfig,
    pub fitness: FitnessConfig,
    pub batches: Vec<SampleBatch>,
    pub seed: u64,
}

impl BieEvaluator {
    pub fn validate(&self) -> Result<(), FitnessError> {
        self.fitness.validate()?;
        self.phenotype.validate()?;
        self.lif.validate()?;
        Ok(())
    }

    /// Decoded network and its seeded initial weights.
    pub fn instantiate(&self, g: &Genome) -> Result<(NetworkGraph, Weights), FitnessError> {
        let net = build_phenotype(g, &self.phenotype)?;
        let weights = init_weights(
            &net,
            &mut ChaCha8Rng::seed_from_u64(genome_seed(self.seed, g)),
        );
        Ok((net, weights))
    }

    pub fn evaluate(&self, g: &Genome) -> Result<Evaluation, FitnessError> {
        let (net, weights) = match self.instantiate(g) {
            Ok(x) => x,
            Err(FitnessError::Motif(MotifError::DegenerateGenome)) => {
                return Ok(Evaluation {
                    fitness: f64::NEG_INFINITY,
                    depth: 0,
                    score: None,
                })
            }
            Err(e) => return Err(e),
        };
        let score = bie_score(&net, &weights, &self.batches, &self.fitness, &self.lif)?;
        Ok(Evaluation {
            fitness: score.fitness(),
            depth: net.depth(),
            score: Some(score),
        })
    }
}
