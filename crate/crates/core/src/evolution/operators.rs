use rand::Rng;

use super::EvolutionError;
use crate::genome::{Gene, GeneDomains, GeneKind, Genome, GenomeConfig, GenomeError};

/// Indices of `n_select` tournament winners. Each tournament draws
/// `tournament_size` distinct individuals; ties go to the lower index.
pub fn tournament_select<R: Rng + ?Sized>(
    fitness: &[f64],
    n_select: usize,
    tournament_size: usize,
    rng: &mut R,
) -> Result<Vec<usize>, EvolutionError> {
    if fitness.is_empty() {
        return Err(EvolutionError::EmptyPopulation);
    }
    let size = tournament_size.clamp(1, fitness.len());
    Ok((0..n_select)
        .map(|_| {
            let mut members = rand::seq::index::sample(rng, fitness.len(), size).into_vec();
            members.sort_unstable();
            members
                .into_iter()
                .reduce(|best, i| if fitness[i] > fitness[best] { i } else { best })
                .expect("tournament is non-empty")
        })
        .collect())
}

/// Flat positions where crossover may cut: every layer-block boundary, the
/// boundary before the macro genes, and the end of the genome.
pub fn crossover_boundaries(cfg: &GenomeConfig) -> Vec<usize> {
    (0..=cfg.max_layers)
        .map(|k| k * cfg.block_len())
        .chain(std::iter::once(cfg.flat_len()))
        .collect()
}

/// Swaps the flat segment `[cut_lo, cut_hi)` between two parents. Both cuts
/// must be crossover boundaries.
pub fn crossover_at(
    a: &Genome,
    b: &Genome,
    cut_lo: usize,
    cut_hi: usize,
) -> Result<(Genome, Genome), EvolutionError> {
    let cfg = same_config(a, b)?;
    let bounds = crossover_boundaries(&cfg);
    let unit = |cut: usize| {
        bounds
            .iter()
            .position(|&p| p == cut)
            .ok_or(EvolutionError::InvalidCut(cut))
    };
    let (lo, hi) = (unit(cut_lo)?, unit(cut_hi)?);
    let (lo, hi) = (lo.min(hi), lo.max(hi));
    let (mut x, mut y) = (a.clone(), b.clone());
    for u in lo..hi {
        if u < cfg.max_layers {
            std::mem::swap(&mut x.layers[u], &mut y.layers[u]);
        } else {
            std::mem::swap(&mut x.g1, &mut y.g1);
            std::mem::swap(&mut x.g2, &mut y.g2);
        }
    }
    Ok((x, y))
}

/// With probability `prob`, swaps the segment between two distinct random
/// boundaries; otherwise returns clones.
pub fn two_point_crossover<R: Rng + ?Sized>(
    a: &Genome,
    b: &Genome,
    prob: f64,
    rng: &mut R,
) -> Result<(Genome, Genome), EvolutionError> {
    let cfg = same_config(a, b)?;
    if !rng.random_bool(prob) {
        return Ok((a.clone(), b.clone()));
    }
    let bounds = crossover_boundaries(&cfg);
    let picks = rand::seq::index::sample(rng, bounds.len(), 2);
    crossover_at(a, b, bounds[picks.index(0)], bounds[picks.index(1)])
}

fn same_config(a: &Genome, b: &Genome) -> Result<GenomeConfig, EvolutionError> {
    let (ca, cb) = (a.config(), b.config());
    if ca != cb {
        return Err(GenomeError::ConfigMismatch {
            left: ca,
            right: cb,
        }
        .into());
    }
    Ok(ca)
}

/// Re-draws each gene with probability `p` from its domain minus its current
/// value. Genes whose domain offers no alternative stay put.
pub fn bitflip_mutate<R: Rng + ?Sized>(
    g: &Genome,
    p: f64,
    domains: &GeneDomains,
    rng: &mut R,
) -> Genome {
    let mut out = g.clone();
    let flip = |gene: &mut Gene, kind: GeneKind, rng: &mut R| {
        if !rng.random_bool(p) {
            return;
        }
        let choices: Vec<Gene> = domains
            .get(kind)
            .iter()
            .copied()
            .filter(|&v| v != *gene)
            .collect();
        if !choices.is_empty() {
            *gene = choices[rng.random_range(0..choices.len())];
        }
    };
    for block in &mut out.layers {
        flip(&mut block.motif, GeneKind::Motif, rng);
        for x in &mut block.ops {
            flip(x, GeneKind::MicroOp, rng);
        }
    }
    flip(&mut out.g1, GeneKind::CrossSpan, rng);
    flip(&mut out.g2, GeneKind::CrossOp, rng);
    out
}

/// Seeds a population from imported genomes, repeating them cyclically up
/// to `n_pop`.
pub fn transfer_population(
    imports: &[Genome],
    n_pop: usize,
    cfg: &GenomeConfig,
) -> Result<Vec<Genome>, EvolutionError> {
    if imports.is_empty() {
        return Err(EvolutionError::EmptyPopulation);
    }
    if let Some(bad) = imports.iter().find(|g| g.config() != *cfg) {
        return Err(GenomeError::ConfigMismatch {
            left: bad.config(),
            right: *cfg,
        }
        .into());
    }
    Ok(imports.iter().cycle().take(n_pop).cloned().collect())
}
