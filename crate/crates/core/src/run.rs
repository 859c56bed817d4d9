//! End-to-end drivers: resolved run configuration, evaluation data, and the
//! evolve/score/decode/inspect commands with their output files.

use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{
    load_event_frames, load_raw_batches, synthetic_batches, DataError, Generator, SampleBatch,
    SyntheticSpec,
};
use crate::evolution::{
    evolve, transfer_population, EvolutionConfig, EvolutionError, EvolutionOutcome, Executor,
    GenerationStats,
};
use crate::fitness::{BieEvaluator, FitnessConfig, FitnessError};
use crate::genome::{validate, Genome, GenomeConfig, GenomeError, GenomeFile};
use crate::motif::{
    build_phenotype, ei_profile, ArchitectureFile, MotifError, NetworkGraph, PhenotypeConfig,
};
use crate::sim::{batch_forward, LifConfig, SimResult, Stimulus};

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("invalid genome {path}: {message}")]
    Genome { path: String, message: String },
    #[error("degenerate genome {0}: every layer is empty")]
    Degenerate(String),
    #[error("{0}")]
    Import(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Fitness(#[from] FitnessError),
    #[error(transparent)]
    Evolution(#[from] EvolutionError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl RunError {
    /// 2 for bad input (config, genome, imports), 3 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_)
            | RunError::Genome { .. }
            | RunError::Degenerate(_)
            | RunError::Import(_) => 2,
            RunError::Data(DataError::InvalidSpec(_)) => 2,
            RunError::Evolution(EvolutionError::InvalidConfig(_)) => 2,
            RunError::Evolution(EvolutionError::Genome(GenomeError::ConfigMismatch { .. })) => 2,
            _ => 3,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Where evaluation samples come from. Sample counts follow
/// `fitness.batch_size` and `fitness.batches`; shapes must match
/// `phenotype.input_shape`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DataSource {
    Synthetic { generator: Generator },
    Raw { path: PathBuf },
    Events { path: PathBuf },
}

impl Default for DataSource {
    fn default() -> Self {
        DataSource::Synthetic {
            generator: Generator::Bars,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub genome: GenomeConfig,
    pub evolution: EvolutionConfig,
    pub fitness: FitnessConfig,
    pub lif: LifConfig,
    pub phenotype: PhenotypeConfig,
    pub data: DataSource,
    pub output: PathBuf,
    /// Directory of genome files seeding the initial population.
    pub import_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            genome: GenomeConfig::default(),
            evolution: EvolutionConfig::default(),
            fitness: FitnessConfig::default(),
            lif: LifConfig::default(),
            phenotype: PhenotypeConfig::default(),
            data: DataSource::default(),
            output: PathBuf::from("msenas-out"),
            import_dir: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), RunError> {
        let cfg = |e: String| RunError::Config(e);
        self.genome.validate().map_err(|e| cfg(e.to_string()))?;
        self.evolution.validate().map_err(|e| cfg(e.to_string()))?;
        self.fitness.validate().map_err(|e| cfg(e.to_string()))?;
        self.lif.validate().map_err(|e| cfg(e.to_string()))?;
        self.phenotype.validate().map_err(|e| cfg(e.to_string()))?;
        Ok(())
    }

    /// Evaluation batches, drawn once per run from a stream of the run seed
    /// separate from the one driving the search.
    pub fn load_batches(&self) -> Result<Vec<SampleBatch>, RunError> {
        let (j, s) = (self.fitness.batch_size, self.fitness.batches);
        let mut rng = ChaCha8Rng::seed_from_u64(self.evolution.seed);
        rng.set_stream(1);
        let batches = match &self.data {
            DataSource::Synthetic { generator } => {
                let spec = SyntheticSpec {
                    j,
                    s,
                    shape: self.phenotype.input_shape,
                    generator: *generator,
                };
                synthetic_batches(&spec, &mut rng)?
            }
            DataSource::Raw { path } => load_raw_batches(path, j, s, &mut rng)?,
            DataSource::Events { path } => load_event_frames(path, self.fitness.timesteps, j, s)?,
        };
        let want = self.phenotype.input_shape;
        for b in &batches {
            for sample in &b.samples {
                let shape = match sample {
                    Stimulus::Static(m) => m.shape(),
                    Stimulus::Frames(f) => f[0].shape(),
                };
                if shape != want {
                    return Err(RunError::Config(format!(
                        "samples have shape {shape:?} but phenotype.input_shape is {want:?}"
                    )));
                }
            }
        }
        Ok(batches)
    }

    pub fn evaluator(&self) -> Result<BieEvaluator, RunError> {
        self.validate()?;
        Ok(BieEvaluator {
            phenotype: self.phenotype.clone(),
            lif: self.lif,
            fitness: self.fitness.clone(),
            batches: self.load_batches()?,
            seed: self.evolution.seed,
        })
    }
}

pub fn read_genome(path: &Path) -> Result<Genome, RunError> {
    let text = fs::read_to_string(path).map_err(|e| RunError::Genome {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let invalid = |message: String| RunError::Genome {
        path: path.display().to_string(),
        message,
    };
    let file = GenomeFile::from_json(&text).map_err(|e| invalid(e.to_string()))?;
    file.to_genome().map_err(|e| invalid(e.to_string()))
}

/// Genome files of a directory, in file-name order.
pub fn read_import_dir(dir: &Path) -> Result<Vec<Genome>, RunError> {
    let entries = fs::read_dir(dir).map_err(|e| {
        RunError::Import(format!(
            "cannot read import directory {}: {e}",
            dir.display()
        ))
    })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(RunError::Import(format!(
            "import directory {} holds no genome files",
            dir.display()
        )));
    }
    paths.iter().map(|p| read_genome(p)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedGenome {
    pub rank: usize,
    pub id: u64,
    pub fitness: Option<f64>,
    pub file: String,
}

/// Written next to the run outputs; feeding it back as the config repeats
/// the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub command: String,
    pub seed: u64,
    pub config: RunConfig,
    pub imported: Option<usize>,
    pub initial_stats: GenerationStats,
    pub top_k: Vec<RankedGenome>,
}

pub struct RunSummary {
    pub outcome: EvolutionOutcome,
    pub manifest: RunManifest,
    pub out_dir: PathBuf,
}

/// Runs the search and writes `stats.jsonl`, `top_k/rank_NN.json` and
/// `manifest.json` under `cfg.output`. When `cfg.import_dir` is set the
/// initial population is built from the imported genomes.
pub fn run_evolve(cfg: &RunConfig, workers: usize) -> Result<RunSummary, RunError> {
    let evaluator = cfg.evaluator()?;
    let (initial, imported) = match &cfg.import_dir {
        Some(dir) => {
            let imports = read_import_dir(dir)?;
            let pop = transfer_population(&imports, cfg.evolution.n_pop, &cfg.genome)
                .map_err(|e| RunError::Import(e.to_string()))?;
            (Some(pop), Some(imports.len()))
        }
        None => (None, None),
    };

    let out = cfg.output.clone();
    let top_dir = out.join("top_k");
    fs::create_dir_all(&top_dir).map_err(io_err(&top_dir))?;
    let stats_path = out.join("stats.jsonl");
    let mut stats = String::new();
    let outcome = evolve(
        &cfg.evolution,
        &cfg.genome,
        &evaluator,
        &Executor::new(workers),
        initial,
        |s| {
            stats.push_str(&s.to_json_line());
            stats.push('\n');
        },
    )?;
    fs::write(&stats_path, stats).map_err(io_err(&stats_path))?;

    let mut top_k = Vec::with_capacity(outcome.top_k.len());
    for (k, ind) in outcome.top_k.iter().enumerate() {
        let name = format!("rank_{:02}.json", k + 1);
        let path = top_dir.join(&name);
        fs::write(&path, GenomeFile::from_genome(&ind.genome).to_json() + "\n")
            .map_err(io_err(&path))?;
        top_k.push(RankedGenome {
            rank: k + 1,
            id: ind.id,
            fitness: ind.fitness.is_finite().then_some(ind.fitness),
            file: format!("top_k/{name}"),
        });
    }

    let manifest = RunManifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        command: if imported.is_some() {
            "transfer"
        } else {
            "evolve"
        }
        .into(),
        seed: cfg.evolution.seed,
        config: cfg.clone(),
        imported,
        initial_stats: outcome.initial.clone(),
        top_k,
    };
    let manifest_path = out.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    fs::write(&manifest_path, text).map_err(io_err(&manifest_path))?;

    Ok(RunSummary {
        outcome,
        manifest,
        out_dir: out,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    /// `null` for a network below the liveness floor.
    pub bie_score: Option<f64>,
    pub fitness: Option<f64>,
    pub dead: bool,
    pub metric: String,
    pub batch_scores: Vec<f64>,
    pub total_spikes: u64,
    pub depth: usize,
    pub neurons: usize,
    pub ei_histogram: std::collections::BTreeMap<u8, usize>,
}

fn decode_checked(g: &Genome, cfg: &RunConfig, label: &str) -> Result<NetworkGraph, RunError> {
    let report = validate(g, &g.config());
    if !report.is_valid() {
        return Err(RunError::Genome {
            path: label.into(),
            message: format!("{:?}", report.issues),
        });
    }
    build_phenotype(g, &cfg.phenotype).map_err(|e| match e {
        MotifError::DegenerateGenome => RunError::Degenerate(label.into()),
        other => RunError::Config(other.to_string()),
    })
}

pub fn score_genome(g: &Genome, cfg: &RunConfig, label: &str) -> Result<ScoreReport, RunError> {
    let net = decode_checked(g, cfg, label)?;
    let evaluator = cfg.evaluator()?;
    let eval = evaluator.evaluate(g)?;
    let score = eval.score.expect("non-degenerate genome has a score");
    let finite = |x: f64| x.is_finite().then_some(x);
    Ok(ScoreReport {
        bie_score: finite(score.score),
        fitness: finite(eval.fitness),
        dead: score.dead,
        metric: cfg.fitness.metric.to_string(),
        batch_scores: score.batch_scores,
        total_spikes: score.total_spikes,
        depth: net.depth(),
        neurons: net.neurons(),
        ei_histogram: ei_profile(&net).histogram,
    })
}

pub fn decode_genome(
    g: &Genome,
    cfg: &RunConfig,
    label: &str,
) -> Result<ArchitectureFile, RunError> {
    Ok(ArchitectureFile::new(g, decode_checked(g, cfg, label)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InspectedSample {
    pub batch: usize,
    pub index: usize,
    pub label: Option<u32>,
    #[serde(flatten)]
    pub result: SimResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InspectReport {
    pub depth: usize,
    pub neurons: usize,
    pub timesteps: usize,
    pub samples: Vec<InspectedSample>,
}

/// Per-sample simulation results of a genome's seeded network on the
/// evaluation batches.
pub fn inspect_genome(g: &Genome, cfg: &RunConfig, label: &str) -> Result<InspectReport, RunError> {
    decode_checked(g, cfg, label)?;
    let evaluator = cfg.evaluator()?;
    let (net, weights) = evaluator.instantiate(g)?;
    let t = cfg.fitness.timesteps;
    let mut samples = Vec::new();
    for (bi, batch) in evaluator.batches.iter().enumerate() {
        let results = batch_forward(&net, &weights, &batch.samples, t, &cfg.lif)
            .map_err(FitnessError::from)?;
        for (i, result) in results.into_iter().enumerate() {
            samples.push(InspectedSample {
                batch: bi,
                index: i,
                label: batch.labels.as_ref().map(|l| l[i]),
                result,
            });
        }
    }
    Ok(InspectReport {
        depth: net.depth(),
        neurons: net.neurons(),
        timesteps: t,
        samples,
    })
}
