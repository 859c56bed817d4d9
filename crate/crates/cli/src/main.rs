mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use msenas::fitness::Metric;
use msenas::run::{self, RunConfig, RunError};
use serde::Serialize;
use serde_json::Value;

#[derive(Parser)]
#[command(
    name = "msenas",
    version,
    about = "Evolutionary architecture search for spiking networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the search and write stats, top genomes and a manifest.
    Evolve {
        #[command(flatten)]
        opts: Opts,
    },
    /// Run the search starting from genomes imported from a directory.
    Transfer {
        import_dir: PathBuf,
        #[command(flatten)]
        opts: Opts,
    },
    /// Print the training-free score of a genome.
    Score {
        genome: PathBuf,
        #[command(flatten)]
        opts: Opts,
    },
    /// Print the decoded architecture of a genome.
    Decode {
        genome: PathBuf,
        #[command(flatten)]
        opts: Opts,
    },
    /// Print per-sample spike counts and logits of a genome's network.
    Inspect {
        genome: PathBuf,
        #[command(flatten)]
        opts: Opts,
    },
}

#[derive(Args)]
struct Opts {
    /// TOML config or a previous run's manifest.json.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Evaluation threads; 0 uses every core. Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long)]
    metric: Option<Metric>,
    /// Run directory for evolve/transfer; output file for the other commands.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Samples per batch.
    #[arg(long)]
    batch_size: Option<usize>,
    /// Number of batches.
    #[arg(long)]
    batches: Option<usize>,
    #[arg(long)]
    timesteps: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    liveness_floor: Option<u64>,
    /// Override any config key, e.g. `--set evolution.n_pop=20`.
    #[arg(long = "set", value_name = "KEY=VALUE", value_parser = config::parse_assignment)]
    sets: Vec<(String, String)>,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        Failure {
            code: e.exit_code() as u8,
            message: e.to_string(),
        }
    }
}

fn usage(message: String) -> Failure {
    Failure { code: 2, message }
}

fn runtime(message: String) -> Failure {
    Failure { code: 3, message }
}

impl Opts {
    /// File keys, then `--set`, then dedicated flags.
    fn resolve(&self, writes_run_dir: bool) -> Result<RunConfig, Failure> {
        let mut doc = match &self.config {
            Some(path) => config::load_document(path).map_err(usage)?,
            None => Value::Object(Default::default()),
        };
        for (key, value) in &self.sets {
            config::set_key(&mut doc, key, value).map_err(usage)?;
        }
        let flags = [
            ("evolution.seed", self.seed.map(Value::from)),
            ("fitness.metric", self.metric.map(|m| Value::from(m.name()))),
            ("fitness.batch_size", self.batch_size.map(Value::from)),
            ("fitness.batches", self.batches.map(Value::from)),
            ("fitness.timesteps", self.timesteps.map(Value::from)),
            (
                "fitness.liveness_floor",
                self.liveness_floor.map(Value::from),
            ),
            ("fitness.alpha", self.alpha.map(Value::from)),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                config::set_value(&mut doc, key, v).map_err(usage)?;
            }
        }
        if writes_run_dir {
            if let Some(out) = &self.out {
                config::set_value(&mut doc, "output", Value::from(out.display().to_string()))
                    .map_err(usage)?;
            }
        }
        config::resolve(doc).map_err(usage)
    }

    fn emit(&self, value: &impl Serialize) -> Result<(), Failure> {
        let text = serde_json::to_string_pretty(value).expect("report serializes") + "\n";
        match &self.out {
            Some(path) => write_file(path, &text),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .map_err(|e| runtime(format!("cannot create {}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| runtime(format!("cannot write {}: {e}", path.display())))
}

fn label(path: &Path) -> String {
    path.display().to_string()
}

fn evolve(cfg: &RunConfig, workers: usize) -> Result<(), Failure> {
    let summary = run::run_evolve(cfg, workers)?;
    let best = summary
        .outcome
        .history
        .last()
        .unwrap_or(&summary.outcome.initial);
    let show = |f: Option<f64>| f.map_or("none".to_string(), |f| format!("{f:.6}"));
    eprintln!(
        "generation 0 best fitness {}; final best fitness {} after {} generations",
        show(summary.outcome.initial.best_fitness),
        show(best.best_fitness),
        summary.outcome.history.len(),
    );
    eprintln!("wrote {}", summary.out_dir.display());
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Evolve { opts } => evolve(&opts.resolve(true)?, opts.workers),
        Command::Transfer { import_dir, opts } => {
            let mut cfg = opts.resolve(true)?;
            cfg.import_dir = Some(import_dir);
            evolve(&cfg, opts.workers)
        }
        Command::Score { genome, opts } => {
            let cfg = opts.resolve(false)?;
            let g = run::read_genome(&genome)?;
            opts.emit(&run::score_genome(&g, &cfg, &label(&genome))?)
        }
        Command::Decode { genome, opts } => {
            let cfg = opts.resolve(false)?;
            let g = run::read_genome(&genome)?;
            opts.emit(&run::decode_genome(&g, &cfg, &label(&genome))?)
        }
        Command::Inspect { genome, opts } => {
            let cfg = opts.resolve(false)?;
            let g = run::read_genome(&genome)?;
            opts.emit(&run::inspect_genome(&g, &cfg, &label(&genome))?)
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
