use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::template::{template, EdgeKind, Endpoint, MotifKind, Polarity};
use super::MotifError;
use crate::genome::{self, Gene, Genome, GenomeFile, LayerBlock};

pub const ARCHITECTURE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Kernel {
    #[serde(rename = "3x3")]
    K3,
    #[serde(rename = "5x5")]
    K5,
}

impl Kernel {
    pub fn from_gene(gene: Gene) -> Result<Self, MotifError> {
        match gene {
            1 => Ok(Kernel::K3),
            2 => Ok(Kernel::K5),
            other => Err(MotifError::UnknownKernel(other)),
        }
    }

    pub fn size(self) -> usize {
        match self {
            Kernel::K3 => 3,
            Kernel::K5 => 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageNode {
    pub name: String,
    pub polarity: Polarity,
    pub channels: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageEdge {
    pub src: Endpoint,
    pub dst: usize,
    pub polarity: Polarity,
    pub kind: EdgeKind,
    pub kernel: Kernel,
    pub in_channels: usize,
    pub out_channels: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageGraph {
    pub motif: MotifKind,
    /// 1-based genome layer this stage was decoded from.
    pub layer: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    /// Spatial size the stage's neurons operate at.
    pub height: usize,
    pub width: usize,
    pub nodes: Vec<StageNode>,
    pub edges: Vec<StageEdge>,
    pub outputs: Vec<usize>,
    pub eval_order: Vec<usize>,
}

impl StageGraph {
    pub fn neurons(&self) -> usize {
        self.nodes.iter().map(|n| n.channels).sum::<usize>() * self.height * self.width
    }
}

/// Projection from an earlier stage's output into a later stage's input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossEdge {
    pub from_stage: usize,
    pub to_stage: usize,
    pub kernel: Kernel,
    pub in_channels: usize,
    pub out_channels: usize,
    /// Average-pool factor applied after the projection conv.
    pub stride: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Head {
    pub pooling: String,
    pub in_features: usize,
    pub classes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkGraph {
    /// `[channels, height, width]` of one input sample.
    pub input_shape: [usize; 3],
    pub stages: Vec<StageGraph>,
    pub cross_edges: Vec<CrossEdge>,
    pub head: Head,
    pub channel_plan: Vec<usize>,
    /// Average-pool factor applied to each stage's output (1 = none).
    pub downsample_plan: Vec<usize>,
}

impl NetworkGraph {
    pub fn depth(&self) -> usize {
        self.stages.len()
    }

    /// Number of spiking neurons, i.e. the firing-pattern length.
    pub fn neurons(&self) -> usize {
        self.stages.iter().map(StageGraph::neurons).sum()
    }

    /// Cross edges feeding into `stage`.
    pub fn incoming_cross(&self, stage: usize) -> impl Iterator<Item = (usize, &CrossEdge)> {
        self.cross_edges
            .iter()
            .enumerate()
            .filter(move |(_, e)| e.to_stage == stage)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhenotypeConfig {
    pub input_shape: [usize; 3],
    /// Constant stage width used when `channel_plan` is empty.
    pub channels: usize,
    /// Per-stage widths; the last entry repeats for deeper networks.
    pub channel_plan: Vec<usize>,
    /// Pool by 2 after every n-th stage; 0 disables downsampling.
    pub downsample_every: usize,
    pub classes: usize,
}

impl Default for PhenotypeConfig {
    fn default() -> Self {
        Self {
            input_shape: [1, 8, 8],
            channels: 8,
            channel_plan: Vec::new(),
            downsample_every: 3,
            classes: 10,
        }
    }
}

impl PhenotypeConfig {
    pub fn validate(&self) -> Result<(), MotifError> {
        let bad = |msg: &str| Err(MotifError::InvalidConfig(msg.to_string()));
        if self.input_shape.contains(&0) {
            return bad("input_shape entries must be >= 1");
        }
        if self.channel_plan.is_empty() && self.channels == 0 {
            return bad("channels must be >= 1");
        }
        if self.channel_plan.contains(&0) {
            return bad("channel_plan entries must be >= 1");
        }
        if self.classes == 0 {
            return bad("classes must be >= 1");
        }
        Ok(())
    }

    pub fn stage_width(&self, stage: usize) -> usize {
        match self.channel_plan.as_slice() {
            [] => self.channels,
            plan => plan[stage.min(plan.len() - 1)],
        }
    }
}

/// Instantiates the motif of `block`, consuming micro genes in template edge
/// order. A template with more edges than micro genes wraps around the
/// genes; surplus genes are ignored.
pub fn build_stage(
    block: &LayerBlock,
    in_channels: usize,
    out_channels: usize,
) -> Result<StageGraph, MotifError> {
    if block.is_empty() {
        return Err(MotifError::EmptyLayer { layer: 0 });
    }
    if block.ops.is_empty() {
        return Err(MotifError::InvalidGenome("layer has no micro genes".into()));
    }
    let kind = MotifKind::from_gene(block.motif)?;
    let t = template(kind);
    let nodes: Vec<StageNode> = t
        .nodes
        .iter()
        .map(|n| StageNode {
            name: n.name.to_string(),
            polarity: n.polarity,
            channels: n.width.channels(out_channels),
        })
        .collect();
    if nodes.iter().any(|n| n.channels == 0) {
        return Err(MotifError::InvalidConfig(format!(
            "{kind} needs at least 2 output channels, got {out_channels}"
        )));
    }
    let edges = t
        .edges
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let in_ch = match e.src {
                Endpoint::Input => in_channels,
                Endpoint::Node(i) => nodes[i].channels,
            };
            Ok(StageEdge {
                src: e.src,
                dst: e.dst,
                polarity: e.polarity,
                kind: e.kind,
                kernel: Kernel::from_gene(block.ops[k % block.ops.len()])?,
                in_channels: in_ch,
                out_channels: nodes[e.dst].channels,
            })
        })
        .collect::<Result<Vec<_>, MotifError>>()?;
    let out_width = t.outputs.iter().map(|&i| nodes[i].channels).sum();
    Ok(StageGraph {
        motif: kind,
        layer: 0,
        in_channels,
        out_channels: out_width,
        height: 0,
        width: 0,
        nodes,
        edges,
        outputs: t.outputs.clone(),
        eval_order: t.eval_order(),
    })
}

pub fn build_phenotype(g: &Genome, cfg: &PhenotypeConfig) -> Result<NetworkGraph, MotifError> {
    cfg.validate()?;
    let report = genome::validate(g, &g.config());
    if let Some(issue) = report.issues.first() {
        return Err(MotifError::InvalidGenome(issue.to_string()));
    }
    if genome::depth(g) == 0 {
        return Err(MotifError::DegenerateGenome);
    }

    let [in_c, mut h, mut w] = cfg.input_shape;
    let mut in_channels = in_c;
    let mut stages = Vec::new();
    let mut channel_plan = Vec::new();
    let mut downsample_plan = Vec::new();
    for (layer, block) in g.layers.iter().enumerate() {
        if block.is_empty() {
            continue;
        }
        let idx = stages.len();
        let width = cfg.stage_width(idx);
        let mut stage = build_stage(block, in_channels, width).map_err(|e| match e {
            MotifError::EmptyLayer { .. } => MotifError::EmptyLayer { layer: layer + 1 },
            other => other,
        })?;
        stage.layer = layer + 1;
        stage.height = h;
        stage.width = w;
        let pool = if cfg.downsample_every > 0
            && (idx + 1) % cfg.downsample_every == 0
            && h >= 2
            && w >= 2
        {
            2
        } else {
            1
        };
        h /= pool;
        w /= pool;
        in_channels = stage.out_channels;
        channel_plan.push(stage.out_channels);
        downsample_plan.push(pool);
        stages.push(stage);
    }

    let kernel = Kernel::from_gene(g.g2)?;
    let mut cross_edges = Vec::new();
    for to in 0..stages.len() {
        for back in 2..=usize::from(g.g1) {
            let Some(from) = to.checked_sub(back) else {
                break;
            };
            let stride = downsample_plan[from + 1..to].iter().product();
            cross_edges.push(CrossEdge {
                from_stage: from,
                to_stage: to,
                kernel,
                in_channels: stages[from].out_channels,
                out_channels: stages[to].in_channels,
                stride,
            });
        }
    }

    let head = Head {
        pooling: "global_average".into(),
        in_features: stages.last().map_or(0, |s| s.out_channels),
        classes: cfg.classes,
    };
    Ok(NetworkGraph {
        input_shape: cfg.input_shape,
        stages,
        cross_edges,
        head,
        channel_plan,
        downsample_plan,
    })
}

/// Per-stage excitation/inhibition class and its histogram.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EiProfile {
    pub classes: Vec<u8>,
    pub histogram: BTreeMap<u8, usize>,
}

pub fn ei_profile(net: &NetworkGraph) -> EiProfile {
    let classes: Vec<u8> = net.stages.iter().map(|s| s.motif.ei_class()).collect();
    let mut histogram = BTreeMap::new();
    for &c in &classes {
        *histogram.entry(c).or_insert(0) += 1;
    }
    EiProfile { classes, histogram }
}

/// Genome plus the decoded architecture, as handed to external trainers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureFile {
    pub schema_version: u32,
    pub genome: GenomeFile,
    pub architecture: NetworkGraph,
    pub ei_profile: EiProfile,
}

impl ArchitectureFile {
    pub fn new(g: &Genome, net: NetworkGraph) -> Self {
        Self {
            schema_version: ARCHITECTURE_SCHEMA_VERSION,
            genome: GenomeFile::from_genome(g),
            ei_profile: ei_profile(&net),
            architecture: net,
        }
    }
}
