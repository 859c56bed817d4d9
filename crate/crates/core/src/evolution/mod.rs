//! Generational genetic algorithm: tournament selection, block-aligned
//! two-point crossover, per-gene bit-flip mutation and elitist truncation
//! over parents plus offspring.

mod operators;
mod parallel;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use operators::{
    bitflip_mutate, crossover_at, crossover_boundaries, tournament_select, transfer_population,
    two_point_crossover,
};
pub use parallel::Executor;

use crate::fitness::{BieEvaluator, FitnessError};
use crate::genome::{random_genome_in, GeneDomains, Genome, GenomeConfig, GenomeError};
use crate::motif::MotifKind;

pub const STATS_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum EvolutionError {
    #[error("invalid evolution config: {0}")]
    InvalidConfig(String),
    #[error("population is empty")]
    EmptyPopulation,
    #[error("cut position {0} is not a crossover boundary")]
    InvalidCut(usize),
    #[error(transparent)]
    Genome(#[from] GenomeError),
    #[error(transparent)]
    Fitness(#[from] FitnessError),
}

/// Scores a genome; larger is better.
pub trait FitnessFn: Sync {
    fn fitness(&self, g: &Genome) -> Result<f64, FitnessError>;
}

impl FitnessFn for BieEvaluator {
    fn fitness(&self, g: &Genome) -> Result<f64, FitnessError> {
        self.evaluate(g).map(|e| e.fitness)
    }
}

/// Adapts a plain function into a [`FitnessFn`].
pub struct FnFitness<F>(pub F);

impl<F: Fn(&Genome) -> f64 + Sync> FitnessFn for FnFitness<F> {
    fn fitness(&self, g: &Genome) -> Result<f64, FitnessError> {
        Ok((self.0)(g))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Ablation {
    /// Restrict every layer to this motif or empty.
    pub freeze_meso: Option<MotifKind>,
    /// Pin the cross-layer span gene.
    pub freeze_macro_g1: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionConfig {
    pub n_pop: usize,
    /// Offspring per generation; `None` means `n_pop`.
    pub n_offs: Option<usize>,
    pub generations: usize,
    /// Per parent pair.
    pub crossover_prob: f64,
    /// Per gene.
    pub mutation_prob: f64,
    pub tournament_size: usize,
    pub top_k: usize,
    pub seed: u64,
    pub ablation: Ablation,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            n_pop: 50,
            n_offs: None,
            generations: 80,
            crossover_prob: 0.3,
            mutation_prob: 0.02,
            tournament_size: 3,
            top_k: 10,
            seed: 0,
            ablation: Ablation::default(),
        }
    }
}

impl EvolutionConfig {
    pub fn offspring(&self) -> usize {
        self.n_offs.unwrap_or(self.n_pop)
    }

    pub fn validate(&self) -> Result<(), EvolutionError> {
        let bad = |m: String| Err(EvolutionError::InvalidConfig(m));
        if self.n_pop < 2 {
            return bad(format!("n_pop must be >= 2, got {}", self.n_pop));
        }
        if self.offspring() == 0 {
            return bad("n_offs must be >= 1".into());
        }
        for (name, p) in [
            ("crossover_prob", self.crossover_prob),
            ("mutation_prob", self.mutation_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        if self.tournament_size == 0 {
            return bad("tournament_size must be >= 1".into());
        }
        if self.top_k > self.n_pop {
            return bad(format!(
                "top_k ({}) exceeds n_pop ({})",
                self.top_k, self.n_pop
            ));
        }
        if let Some(g1) = self.ablation.freeze_macro_g1 {
            if !(1..=3).contains(&g1) {
                return bad(format!("freeze_macro_g1 must be 1, 2 or 3, got {g1}"));
            }
        }
        Ok(())
    }

    /// Gene domains after applying ablation freezes.
    pub fn domains(&self) -> GeneDomains {
        let mut d = GeneDomains::standard();
        if let Some(m) = self.ablation.freeze_meso {
            d = d.with_frozen_motif(m.gene());
        }
        if let Some(g1) = self.ablation.freeze_macro_g1 {
            d = d.with_frozen_cross_span(g1);
        }
        d
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    /// Creation order within the run.
    pub id: u64,
    pub genome: Genome,
    pub fitness: f64,
}

/// One line of `stats.jsonl`. Fitness aggregates skip individuals with
/// non-finite fitness (dead or empty networks); they are `null` when no
/// individual is live.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub schema_version: u32,
    pub generation: usize,
    pub best_fitness: Option<f64>,
    pub mean_fitness: Option<f64>,
    pub fitness_variance: Option<f64>,
    pub best_genome_id: u64,
    pub live: usize,
    pub population: usize,
}

impl GenerationStats {
    pub fn from_population(generation: usize, pop: &[Individual]) -> Self {
        let live: Vec<f64> = pop
            .iter()
            .map(|i| i.fitness)
            .filter(|f| f.is_finite())
            .collect();
        let best = pop
            .iter()
            .reduce(|a, b| if rank(b, a).is_lt() { b } else { a })
            .expect("population is non-empty");
        let (mean, variance) = if live.is_empty() {
            (None, None)
        } else {
            let n = live.len() as f64;
            let mean = live.iter().sum::<f64>() / n;
            let var = live.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / n;
            (Some(mean), Some(var))
        };
        Self {
            schema_version: STATS_SCHEMA_VERSION,
            generation,
            best_fitness: best.fitness.is_finite().then_some(best.fitness),
            mean_fitness: mean,
            fitness_variance: variance,
            best_genome_id: best.id,
            live: live.len(),
            population: pop.len(),
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("stats serialize")
    }
}

/// Better fitness first, then earlier creation.
fn rank(a: &Individual, b: &Individual) -> std::cmp::Ordering {
    b.fitness.total_cmp(&a.fitness).then(a.id.cmp(&b.id))
}

#[derive(Debug, Clone)]
pub struct EvolutionOutcome {
    /// Scored generation-0 population.
    pub initial: GenerationStats,
    /// One entry per completed generation.
    pub history: Vec<GenerationStats>,
    /// Final population, best first.
    pub population: Vec<Individual>,
    pub top_k: Vec<Individual>,
}

fn score<F: FitnessFn>(
    genomes: Vec<Genome>,
    first_id: u64,
    fitness: &F,
    exec: &Executor,
) -> Result<Vec<Individual>, EvolutionError> {
    let scores = exec.map(&genomes, |g| fitness.fitness(g));
    genomes
        .into_iter()
        .zip(scores)
        .enumerate()
        .map(|(k, (genome, f))| {
            Ok(Individual {
                id: first_id + k as u64,
                genome,
                fitness: f?,
            })
        })
        .collect()
}

/// Runs the generational loop. `initial`, when given, replaces random
/// initialization and must hold exactly `n_pop` genomes. `on_generation`
/// sees each generation's stats as soon as it completes.
pub fn evolve<F: FitnessFn>(
    cfg: &EvolutionConfig,
    gcfg: &GenomeConfig,
    fitness: &F,
    exec: &Executor,
    initial: Option<Vec<Genome>>,
    mut on_generation: impl FnMut(&GenerationStats),
) -> Result<EvolutionOutcome, EvolutionError> {
    cfg.validate()?;
    gcfg.validate()?;
    let domains = cfg.domains();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let genomes = match initial {
        Some(pop) => {
            if pop.len() != cfg.n_pop {
                return Err(EvolutionError::InvalidConfig(format!(
                    "initial population has {} genomes, n_pop is {}",
                    pop.len(),
                    cfg.n_pop
                )));
            }
            if let Some(g) = pop.iter().find(|g| g.config() != *gcfg) {
                return Err(GenomeError::ConfigMismatch {
                    left: g.config(),
                    right: *gcfg,
                }
                .into());
            }
            pop
        }
        None => (0..cfg.n_pop)
            .map(|_| random_genome_in(*gcfg, &domains, &mut rng))
            .collect(),
    };
    let mut next_id = genomes.len() as u64;
    let mut pop = score(genomes, 0, fitness, exec)?;
    pop.sort_by(rank);
    let initial = GenerationStats::from_population(0, &pop);

    let mut history = Vec::with_capacity(cfg.generations);
    for generation in 1..=cfg.generations {
        let fit: Vec<f64> = pop.iter().map(|i| i.fitness).collect();
        let mut offspring = Vec::with_capacity(cfg.offspring() + 1);
        while offspring.len() < cfg.offspring() {
            let parents = tournament_select(&fit, 2, cfg.tournament_size, &mut rng)?;
            let (a, b) = two_point_crossover(
                &pop[parents[0]].genome,
                &pop[parents[1]].genome,
                cfg.crossover_prob,
                &mut rng,
            )?;
            offspring.push(bitflip_mutate(&a, cfg.mutation_prob, &domains, &mut rng));
            offspring.push(bitflip_mutate(&b, cfg.mutation_prob, &domains, &mut rng));
        }
        offspring.truncate(cfg.offspring());

        let scored = score(offspring, next_id, fitness, exec)?;
        next_id += scored.len() as u64;
        pop.extend(scored);
        pop.sort_by(rank);
        pop.truncate(cfg.n_pop);

        let stats = GenerationStats::from_population(generation, &pop);
        on_generation(&stats);
        history.push(stats);
    }

    let top_k = pop[..cfg.top_k].to_vec();
    Ok(EvolutionOutcome {
        initial,
        history,
        population: pop,
        top_k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::{depth, encode, validate};

    fn gcfg() -> GenomeConfig {
        GenomeConfig::new(6, 5).unwrap()
    }

    /// Rewards deep genomes with many 5x5 kernels.
    fn toy() -> FnFitness<impl Fn(&Genome) -> f64 + Sync> {
        FnFitness(|g: &Genome| {
            depth(g) as f64 + encode(g).iter().filter(|&&x| x == 2).count() as f64 * 0.1
        })
    }

    fn small(seed: u64) -> EvolutionConfig {
        EvolutionConfig {
            n_pop: 16,
            generations: 10,
            top_k: 5,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn zero_generations_returns_initial_top_k() {
        let cfg = EvolutionConfig {
            generations: 0,
            ..small(1)
        };
        let out = evolve(&cfg, &gcfg(), &toy(), &Executor::sequential(), None, |_| {}).unwrap();
        assert!(out.history.is_empty());
        assert_eq!(out.top_k.len(), 5);
        assert!(out.top_k.windows(2).all(|w| w[0].fitness >= w[1].fitness));
        assert_eq!(out.initial.best_fitness, Some(out.top_k[0].fitness));
    }

    #[test]
    fn elitism_and_closure() {
        for seed in 0..4 {
            let out = evolve(
                &small(seed),
                &gcfg(),
                &toy(),
                &Executor::sequential(),
                None,
                |_| {},
            )
            .unwrap();
            let mut prev = out.initial.best_fitness.unwrap();
            for s in &out.history {
                let best = s.best_fitness.unwrap();
                assert!(best >= prev);
                assert!(best >= s.mean_fitness.unwrap());
                prev = best;
            }
            for ind in &out.population {
                assert!(validate(&ind.genome, &gcfg()).is_valid());
            }
        }
    }

    #[test]
    fn reproducible_across_workers() {
        let run = |workers| {
            let mut lines = Vec::new();
            evolve(
                &small(7),
                &gcfg(),
                &toy(),
                &Executor::new(workers),
                None,
                |s| lines.push(s.to_json_line()),
            )
            .unwrap();
            lines
        };
        let a = run(1);
        assert_eq!(a.len(), 10);
        assert_eq!(a, run(1));
        assert_eq!(a, run(4));
    }

    #[test]
    fn ablation_freezes_hold() {
        let mut cfg = small(3);
        cfg.ablation = Ablation {
            freeze_meso: Some(MotifKind::Li),
            freeze_macro_g1: Some(1),
        };
        let out = evolve(&cfg, &gcfg(), &toy(), &Executor::sequential(), None, |_| {}).unwrap();
        for ind in &out.population {
            assert!(ind.genome.motifs().all(|m| m == 0 || m == 4));
            assert_eq!(ind.genome.g1, 1);
        }
    }

    #[test]
    fn imported_population_is_used() {
        let cfg = EvolutionConfig {
            generations: 0,
            top_k: 16,
            ..small(2)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let imports: Vec<Genome> = (0..16)
            .map(|_| random_genome_in(gcfg(), &GeneDomains::standard(), &mut rng))
            .collect();
        let out = evolve(
            &cfg,
            &gcfg(),
            &toy(),
            &Executor::sequential(),
            Some(imports.clone()),
            |_| {},
        )
        .unwrap();
        let mut got: Vec<Vec<u8>> = out.population.iter().map(|i| encode(&i.genome)).collect();
        let mut want: Vec<Vec<u8>> = imports.iter().map(encode).collect();
        got.sort();
        want.sort();
        assert_eq!(got, want);

        let short = imports[..3].to_vec();
        assert!(evolve(
            &cfg,
            &gcfg(),
            &toy(),
            &Executor::sequential(),
            Some(short),
            |_| {}
        )
        .is_err());
    }

    #[test]
    fn config_validation() {
        let ok = EvolutionConfig::default();
        assert!(ok.validate().is_ok());
        assert_eq!(ok.offspring(), 50);
        for bad in [
            EvolutionConfig {
                n_pop: 1,
                top_k: 1,
                ..ok.clone()
            },
            EvolutionConfig {
                crossover_prob: 1.5,
                ..ok.clone()
            },
            EvolutionConfig {
                mutation_prob: -0.1,
                ..ok.clone()
            },
            EvolutionConfig {
                top_k: 51,
                ..ok.clone()
            },
            EvolutionConfig {
                tournament_size: 0,
                ..ok.clone()
            },
            EvolutionConfig {
                n_offs: Some(0),
                ..ok.clone()
            },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn stats_skip_dead_individuals() {
        let ind = |id, fitness| Individual {
            id,
            genome: random_genome_in(
                gcfg(),
                &GeneDomains::standard(),
                &mut ChaCha8Rng::seed_from_u64(id),
            ),
            fitness,
        };
        let s = GenerationStats::from_population(
            3,
            &[ind(4, -2.0), ind(5, f64::NEG_INFINITY), ind(6, -4.0)],
        );
        assert_eq!(s.best_fitness, Some(-2.0));
        assert_eq!(s.mean_fitness, Some(-3.0));
        assert_eq!(s.fitness_variance, Some(1.0));
        assert_eq!(s.best_genome_id, 4);
        assert_eq!(s.live, 2);
        let dead = GenerationStats::from_population(0, &[ind(1, f64::NEG_INFINITY)]);
        assert_eq!(dead.best_fitness, None);
        assert!(dead.to_json_line().contains("\"best_fitness\":null"));
    }
}
