//! Three-scale genotype: per-layer motif and micro-operation genes followed by
//! the two macro genes controlling cross-layer wiring.
//!
//! The flat encoding is `(m_1, x_1^1..x_1^b, ..., m_l, x_l^1..x_l^b, g1, g2)`
//! and has length `l * (b + 1) + 2`.

use std::fmt;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Gene = u8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenomeError {
    #[error("invalid genome config: l={l}, b={b} (both must be >= 1)")]
    InvalidConfig { l: usize, b: usize },
    #[error("flat genome has length {actual}, expected {expected}")]
    Length { expected: usize, actual: usize },
    #[error("gene {gene} at position {position} has out-of-domain value {value}")]
    Domain {
        position: usize,
        gene: String,
        value: i64,
    },
    #[error("genome configs differ: {left} vs {right}")]
    ConfigMismatch {
        left: GenomeConfig,
        right: GenomeConfig,
    },
}

/// Shape of the search space: at most `l` layers, `b` micro genes per layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GenomeConfig {
    #[serde(rename = "l")]
    pub max_layers: usize,
    #[serde(rename = "b")]
    pub genes_per_layer: usize,
}

impl Default for GenomeConfig {
    fn default() -> Self {
        Self {
            max_layers: 11,
            genes_per_layer: 20,
        }
    }
}

impl fmt::Display for GenomeConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(l={}, b={})", self.max_layers, self.genes_per_layer)
    }
}

impl GenomeConfig {
    pub fn new(max_layers: usize, genes_per_layer: usize) -> Result<Self, GenomeError> {
        let cfg = Self {
            max_layers,
            genes_per_layer,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), GenomeError> {
        if self.max_layers == 0 || self.genes_per_layer == 0 {
            return Err(GenomeError::InvalidConfig {
                l: self.max_layers,
                b: self.genes_per_layer,
            });
        }
        Ok(())
    }

    /// Genes occupied by one layer block (motif gene plus its micro genes).
    pub fn block_len(&self) -> usize {
        self.genes_per_layer + 1
    }

    /// Flat position of `g1`; `g2` follows it.
    pub fn macro_offset(&self) -> usize {
        self.max_layers * self.block_len()
    }

    pub fn flat_len(&self) -> usize {
        self.macro_offset() + 2
    }

    /// Which gene lives at a flat position.
    pub fn locate(&self, position: usize) -> Option<GeneSlot> {
        let macro_at = self.macro_offset();
        if position < macro_at {
            let layer = position / self.block_len();
            let offset = position % self.block_len();
            Some(if offset == 0 {
                GeneSlot::Motif { layer }
            } else {
                GeneSlot::MicroOp {
                    layer,
                    index: offset - 1,
                }
            })
        } else if position == macro_at {
            Some(GeneSlot::CrossSpan)
        } else if position == macro_at + 1 {
            Some(GeneSlot::CrossOp)
        } else {
            None
        }
    }
}

/// Gene categories; each has its own value domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GeneKind {
    Motif,
    MicroOp,
    CrossSpan,
    CrossOp,
}

impl GeneKind {
    pub fn name(self) -> &'static str {
        match self {
            GeneKind::Motif => "m",
            GeneKind::MicroOp => "x",
            GeneKind::CrossSpan => "g1",
            GeneKind::CrossOp => "g2",
        }
    }
}

/// A flat position resolved to its gene. Layer and micro indices are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneSlot {
    Motif { layer: usize },
    MicroOp { layer: usize, index: usize },
    CrossSpan,
    CrossOp,
}

impl GeneSlot {
    pub fn kind(self) -> GeneKind {
        match self {
            GeneSlot::Motif { .. } => GeneKind::Motif,
            GeneSlot::MicroOp { .. } => GeneKind::MicroOp,
            GeneSlot::CrossSpan => GeneKind::CrossSpan,
            GeneSlot::CrossOp => GeneKind::CrossOp,
        }
    }

    pub fn layer(self) -> Option<usize> {
        match self {
            GeneSlot::Motif { layer } | GeneSlot::MicroOp { layer, .. } => Some(layer),
            _ => None,
        }
    }
}

/// Allowed values per gene kind.
///
/// [`GeneDomains::standard`] is the full search space. Restricted tables are
/// used for ablations that pin part of the space (a single motif, no
/// cross-layer wiring); new micro operations are added by extending the
/// micro list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneDomains {
    pub motif: Vec<Gene>,
    pub micro_op: Vec<Gene>,
    pub cross_span: Vec<Gene>,
    pub cross_op: Vec<Gene>,
}

impl Default for GeneDomains {
    fn default() -> Self {
        Self::standard()
    }
}

impl GeneDomains {
    pub fn standard() -> Self {
        Self {
            motif: vec![0, 1, 2, 3, 4, 5],
            micro_op: vec![1, 2],
            cross_span: vec![1, 2, 3],
            cross_op: vec![1, 2],
        }
    }

    pub fn get(&self, kind: GeneKind) -> &[Gene] {
        match kind {
            GeneKind::Motif => &self.motif,
            GeneKind::MicroOp => &self.micro_op,
            GeneKind::CrossSpan => &self.cross_span,
            GeneKind::CrossOp => &self.cross_op,
        }
    }

    pub fn contains(&self, kind: GeneKind, value: i64) -> bool {
        self.get(kind).iter().any(|&v| i64::from(v) == value)
    }

    /// Layers are either empty or built from `motif`.
    pub fn with_frozen_motif(mut self, motif: Gene) -> Self {
        self.motif = vec![0, motif];
        self
    }

    pub fn with_frozen_cross_span(mut self, g1: Gene) -> Self {
        self.cross_span = vec![g1];
        self
    }

    pub fn draw<R: Rng + ?Sized>(&self, kind: GeneKind, rng: &mut R) -> Gene {
        *self
            .get(kind)
            .choose(rng)
            .expect("gene domains are never empty")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LayerBlock {
    /// Motif gene; 0 marks an empty layer.
    pub motif: Gene,
    /// Micro-operation genes (1 = 3x3 conv, 2 = 5x5 conv).
    pub ops: Vec<Gene>,
}

impl LayerBlock {
    pub fn is_empty(&self) -> bool {
        self.motif == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Genome {
    pub layers: Vec<LayerBlock>,
    /// Cross-layer span: 1 = chain only, 2 = also from two back, 3 = also from three back.
    pub g1: Gene,
    /// Cross-layer projection op: 1 = 3x3 conv, 2 = 5x5 conv.
    pub g2: Gene,
}

impl Genome {
    /// Config implied by the genome's own shape.
    pub fn config(&self) -> GenomeConfig {
        GenomeConfig {
            max_layers: self.layers.len(),
            genes_per_layer: self.layers.first().map_or(0, |l| l.ops.len()),
        }
    }

    pub fn depth(&self) -> usize {
        depth(self)
    }

    pub fn encode(&self) -> Vec<Gene> {
        encode(self)
    }

    pub fn motifs(&self) -> impl Iterator<Item = Gene> + '_ {
        self.layers.iter().map(|l| l.motif)
    }
}

pub fn random_genome<R: Rng + ?Sized>(cfg: GenomeConfig, rng: &mut R) -> Genome {
    random_genome_in(cfg, &GeneDomains::standard(), rng)
}

/// Draws every gene uniformly from its domain in `domains`.
pub fn random_genome_in<R: Rng + ?Sized>(
    cfg: GenomeConfig,
    domains: &GeneDomains,
    rng: &mut R,
) -> Genome {
    let layers = (0..cfg.max_layers)
        .map(|_| LayerBlock {
            motif: domains.draw(GeneKind::Motif, rng),
            ops: (0..cfg.genes_per_layer)
                .map(|_| domains.draw(GeneKind::MicroOp, rng))
                .collect(),
        })
        .collect();
    Genome {
        layers,
        g1: domains.draw(GeneKind::CrossSpan, rng),
        g2: domains.draw(GeneKind::CrossOp, rng),
    }
}

/// One failed check found by [`validate`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationIssue {
    /// Flat position, when the issue is tied to a gene.
    pub position: Option<usize>,
    /// 1-based layer number for `m`/`x` genes.
    pub layer: Option<usize>,
    pub gene: String,
    pub value: i64,
    pub message: String,
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.layer {
            Some(layer) => write!(f, "layer {layer}, gene {}: {}", self.gene, self.message),
            None => write!(f, "gene {}: {}", self.gene, self.message),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }
}

/// Checks shape and every gene against the standard domains.
pub fn validate(g: &Genome, cfg: &GenomeConfig) -> ValidationReport {
    validate_in(g, cfg, &GeneDomains::standard())
}

pub fn validate_in(g: &Genome, cfg: &GenomeConfig, domains: &GeneDomains) -> ValidationReport {
    let mut issues = Vec::new();
    if g.layers.len() != cfg.max_layers {
        issues.push(ValidationIssue {
            position: None,
            layer: None,
            gene: "layers".into(),
            value: g.layers.len() as i64,
            message: format!("expected {} layer blocks", cfg.max_layers),
        });
    }
    let stride = cfg.block_len();
    for (i, block) in g.layers.iter().enumerate() {
        let base = i * stride;
        if !domains.contains(GeneKind::Motif, i64::from(block.motif)) {
            issues.push(domain_issue(
                base,
                Some(i),
                GeneKind::Motif,
                block.motif,
                domains,
            ));
        }
        if block.ops.len() != cfg.genes_per_layer {
            issues.push(ValidationIssue {
                position: Some(base),
                layer: Some(i + 1),
                gene: "x".into(),
                value: block.ops.len() as i64,
                message: format!("expected {} micro genes", cfg.genes_per_layer),
            });
        }
        for (k, &x) in block.ops.iter().enumerate() {
            if !domains.contains(GeneKind::MicroOp, i64::from(x)) {
                issues.push(domain_issue(
                    base + 1 + k,
                    Some(i),
                    GeneKind::MicroOp,
                    x,
                    domains,
                ));
            }
        }
    }
    let macro_at = cfg.macro_offset();
    if !domains.contains(GeneKind::CrossSpan, i64::from(g.g1)) {
        issues.push(domain_issue(
            macro_at,
            None,
            GeneKind::CrossSpan,
            g.g1,
            domains,
        ));
    }
    if !domains.contains(GeneKind::CrossOp, i64::from(g.g2)) {
        issues.push(domain_issue(
            macro_at + 1,
            None,
            GeneKind::CrossOp,
            g.g2,
            domains,
        ));
    }
    ValidationReport { issues }
}

fn domain_issue(
    position: usize,
    layer: Option<usize>,
    kind: GeneKind,
    value: Gene,
    domains: &GeneDomains,
) -> ValidationIssue {
    ValidationIssue {
        position: Some(position),
        layer: layer.map(|l| l + 1),
        gene: kind.name().into(),
        value: i64::from(value),
        message: format!("value {value} not in {:?}", domains.get(kind)),
    }
}

/// Number of non-empty layers.
pub fn depth(g: &Genome) -> usize {
    g.layers.iter().filter(|l| !l.is_empty()).count()
}

pub fn encode(g: &Genome) -> Vec<Gene> {
    let mut out = Vec::with_capacity(g.config().flat_len());
    for block in &g.layers {
        out.push(block.motif);
        out.extend_from_slice(&block.ops);
    }
    out.push(g.g1);
    out.push(g.g2);
    out
}

pub fn decode(v: &[Gene], cfg: &GenomeConfig) -> Result<Genome, GenomeError> {
    let wide: Vec<i64> = v.iter().map(|&x| i64::from(x)).collect();
    decode_values(&wide, cfg)
}

/// Decodes untyped integers (as read from JSON), rejecting the first
/// out-of-domain value with its position.
pub fn decode_values(v: &[i64], cfg: &GenomeConfig) -> Result<Genome, GenomeError> {
    cfg.validate()?;
    if v.len() != cfg.flat_len() {
        return Err(GenomeError::Length {
            expected: cfg.flat_len(),
            actual: v.len(),
        });
    }
    let domains = GeneDomains::standard();
    for (position, &value) in v.iter().enumerate() {
        let kind = cfg.locate(position).expect("length checked").kind();
        if !domains.contains(kind, value) {
            return Err(GenomeError::Domain {
                position,
                gene: kind.name().into(),
                value,
            });
        }
    }
    let layers = v[..cfg.macro_offset()]
        .chunks(cfg.block_len())
        .map(|chunk| LayerBlock {
            motif: chunk[0] as Gene,
            ops: chunk[1..].iter().map(|&x| x as Gene).collect(),
        })
        .collect();
    let macro_at = cfg.macro_offset();
    Ok(Genome {
        layers,
        g1: v[macro_at] as Gene,
        g2: v[macro_at + 1] as Gene,
    })
}

/// JSON interchange form: `{"config": {"l": .., "b": ..}, "genes": [..]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenomeFile {
    pub config: GenomeConfig,
    pub genes: Vec<i64>,
}

impl GenomeFile {
    pub fn from_genome(g: &Genome) -> Self {
        Self {
            config: g.config(),
            genes: encode(g).into_iter().map(i64::from).collect(),
        }
    }

    pub fn to_genome(&self) -> Result<Genome, GenomeError> {
        decode_values(&self.genes, &self.config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("genome file serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}
