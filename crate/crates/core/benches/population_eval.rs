use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use msenas::data::{synthetic_batches, Generator, SyntheticSpec};
use msenas::evolution::{Executor, FitnessFn};
use msenas::fitness::{BieEvaluator, FitnessConfig};
use msenas::genome::{random_genome, Genome, GenomeConfig};
use msenas::motif::PhenotypeConfig;
use msenas::sim::LifConfig;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn setup(n: usize) -> (BieEvaluator, Vec<Genome>) {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let spec = SyntheticSpec {
        j: 8,
        s: 2,
        shape: [1, 8, 8],
        generator: Generator::Bars,
    };
    let evaluator = BieEvaluator {
        phenotype: PhenotypeConfig::default(),
        lif: LifConfig::default(),
        fitness: FitnessConfig::default(),
        batches: synthetic_batches(&spec, &mut rng).unwrap(),
        seed: 1,
    };
    let cfg = GenomeConfig::new(6, 5).unwrap();
    let genomes = (0..n).map(|_| random_genome(cfg, &mut rng)).collect();
    (evaluator, genomes)
}

fn population_eval(c: &mut Criterion) {
    let (evaluator, genomes) = setup(16);
    let mut group = c.benchmark_group("population_eval");
    group.sample_size(10);
    let executors = [
        ("sequential", Executor::sequential()),
        ("parallel", Executor::new(0)),
    ];
    for (name, exec) in &executors {
        group.bench_with_input(
            BenchmarkId::new(*name, exec.workers()),
            &genomes,
            |b, genomes| b.iter(|| exec.map(genomes, |g| evaluator.fitness(g).unwrap())),
        );
    }
    group.finish();
}

criterion_group!(benches, population_eval);
criterion_main!(benches);
