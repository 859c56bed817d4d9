//! Discrete-time forward simulation of a decoded network.
//!
//! Every timestep the stages are evaluated in order. Inside a stage, nodes
//! run in the template's evaluation order; feedforward edges read spikes of
//! the current step and feedback edges read the previous step (zero at the
//! first step). Inhibitory edges subtract their conv output from the
//! destination's input current.

mod lif;
mod tensor;
mod weights;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use lif::{lif_step, LifConfig, LifState};
pub use tensor::{avg_pool, ConvKernel, FeatureMap};
pub use weights::{init_weights, Linear, Weights};

use crate::motif::{EdgeKind, Endpoint, NetworkGraph};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite input current")]
    NonFinite,
    #[error("timesteps must be >= 1")]
    NoTimesteps,
    #[error("invalid LIF config: {0}")]
    InvalidLif(String),
}

/// Input presented to the first stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Stimulus {
    /// Same current at every timestep.
    Static(FeatureMap),
    /// One current map per timestep.
    Frames(Vec<FeatureMap>),
}

impl Stimulus {
    fn at(&self, t: usize) -> &FeatureMap {
        match self {
            Stimulus::Static(m) => m,
            Stimulus::Frames(f) => &f[t],
        }
    }

    fn check(&self, shape: [usize; 3], timesteps: usize) -> Result<(), SimError> {
        let maps: &[FeatureMap] = match self {
            Stimulus::Static(m) => std::slice::from_ref(m),
            Stimulus::Frames(f) => {
                if f.len() != timesteps {
                    return Err(SimError::Shape(format!(
                        "{} input frames for {timesteps} timesteps",
                        f.len()
                    )));
                }
                f
            }
        };
        for m in maps {
            if m.shape() != shape || m.data.len() != shape.iter().product::<usize>() {
                return Err(SimError::Shape(format!(
                    "input {:?}, network expects {shape:?}",
                    m.shape()
                )));
            }
            if !m.is_finite() {
                return Err(SimError::NonFinite);
            }
        }
        Ok(())
    }
}

/// Per-neuron spike counts over one run, stage by stage and node by node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiringPattern {
    pub counts: Vec<u32>,
}

impl FiringPattern {
    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| u64::from(c)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub firing_pattern: FiringPattern,
    pub logits: Vec<f64>,
    pub total_spikes: u64,
}

struct NodeState {
    lif: LifState,
    spikes: FeatureMap,
    prev_spikes: FeatureMap,
    current: Vec<f64>,
    counts: Vec<u32>,
}

pub fn forward(
    net: &NetworkGraph,
    weights: &Weights,
    sample: &Stimulus,
    timesteps: usize,
    lif: &LifConfig,
) -> Result<SimResult, SimError> {
    if timesteps == 0 {
        return Err(SimError::NoTimesteps);
    }
    lif.validate()?;
    weights.check_shapes(net)?;
    sample.check(net.input_shape, timesteps)?;

    let mut nodes: Vec<Vec<NodeState>> = net
        .stages
        .iter()
        .map(|s| {
            s.nodes
                .iter()
                .map(|n| {
                    let size = n.channels * s.height * s.width;
                    NodeState {
                        lif: LifState::resting(size, lif),
                        spikes: FeatureMap::zeros(n.channels, s.height, s.width),
                        prev_spikes: FeatureMap::zeros(n.channels, s.height, s.width),
                        current: vec![0.0; size],
                        counts: vec![0; size],
                    }
                })
                .collect()
        })
        .collect();

    let mut pooled_sum = vec![0.0; net.head.in_features];
    let mut outputs: Vec<FeatureMap> = Vec::with_capacity(net.stages.len());
    for t in 0..timesteps {
        outputs.clear();
        for (si, stage) in net.stages.iter().enumerate() {
            let mut drive = match si {
                0 => sample.at(t).clone(),
                _ => outputs[si - 1].clone(),
            };
            for (ci, cross) in net.incoming_cross(si) {
                let src = &outputs[cross.from_stage];
                let mut proj = FeatureMap::zeros(cross.out_channels, src.height, src.width);
                weights.cross[ci].accumulate(src, 1.0, &mut proj.data);
                drive.add_assign(&avg_pool(&proj, cross.stride));
            }

            let state = &mut nodes[si];
            for &n in &stage.eval_order {
                let mut current = std::mem::take(&mut state[n].current);
                current.iter_mut().for_each(|c| *c = 0.0);
                for (ei, edge) in stage.edges.iter().enumerate().filter(|(_, e)| e.dst == n) {
                    let src = match (edge.src, edge.kind) {
                        (Endpoint::Input, _) => &drive,
                        (Endpoint::Node(s), EdgeKind::Feedforward) => &state[s].spikes,
                        (Endpoint::Node(s), EdgeKind::Feedback) => &state[s].prev_spikes,
                    };
                    weights.stages[si][ei].accumulate(src, edge.polarity.sign(), &mut current);
                }
                let node = &mut state[n];
                node.lif.step(&current, lif, &mut node.spikes.data)?;
                for (c, s) in node.counts.iter_mut().zip(&node.spikes.data) {
                    *c += *s as u32;
                }
                node.current = current;
            }
            for node in state.iter_mut() {
                node.prev_spikes.data.copy_from_slice(&node.spikes.data);
            }

            let mut out = FeatureMap::zeros(0, stage.height, stage.width);
            for &o in &stage.outputs {
                out.channels += state[o].spikes.channels;
                out.data.extend_from_slice(&state[o].spikes.data);
            }
            outputs.push(avg_pool(&out, net.downsample_plan[si]));
        }
        if let Some(last) = outputs.last() {
            for (acc, m) in pooled_sum.iter_mut().zip(last.channel_means()) {
                *acc += m;
            }
        }
    }

    let features: Vec<f64> = pooled_sum.iter().map(|s| s / timesteps as f64).collect();
    let counts: Vec<u32> = nodes.into_iter().flatten().flat_map(|n| n.counts).collect();
    let firing_pattern = FiringPattern { counts };
    Ok(SimResult {
        total_spikes: firing_pattern.total(),
        firing_pattern,
        logits: weights.head.apply(&features),
    })
}

/// Runs [`forward`] on each sample in order.
pub fn batch_forward(
    net: &NetworkGraph,
    weights: &Weights,
    batch: &[Stimulus],
    timesteps: usize,
    lif: &LifConfig,
) -> Result<Vec<SimResult>, SimError> {
    batch
        .iter()
        .map(|s| forward(net, weights, s, timesteps, lif))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::{Genome, LayerBlock};
    use crate::motif::{build_phenotype, PhenotypeConfig, Polarity};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn genome(motifs: &[u8], g1: u8) -> Genome {
        Genome {
            layers: motifs
                .iter()
                .map(|&m| LayerBlock {
                    motif: m,
                    ops: vec![1, 2, 2, 1, 2],
                })
                .collect(),
            g1,
            g2: 2,
        }
    }

    fn random_sample(shape: [usize; 3], seed: u64) -> Stimulus {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..shape.iter().product())
            .map(|_| rng.random::<f64>())
            .collect();
        Stimulus::Static(FeatureMap::from_vec(shape[0], shape[1], shape[2], data).unwrap())
    }

    fn setup(motifs: &[u8], g1: u8) -> (NetworkGraph, Weights) {
        let cfg = PhenotypeConfig {
            input_shape: [2, 6, 6],
            channels: 4,
            ..Default::default()
        };
        let net = build_phenotype(&genome(motifs, g1), &cfg).unwrap();
        let w = init_weights(&net, &mut ChaCha8Rng::seed_from_u64(42));
        (net, w)
    }

    #[test]
    fn silent_without_drive() {
        let (net, _) = setup(&[1, 3, 5, 4, 2], 3);
        let w = Weights::zeros(&net);
        let zero = Stimulus::Static(FeatureMap::zeros(2, 6, 6));
        let r = forward(&net, &w, &zero, 8, &LifConfig::default()).unwrap();
        assert_eq!(r.total_spikes, 0);
        assert!(r.firing_pattern.counts.iter().all(|&c| c == 0));
        assert_eq!(r.firing_pattern.counts.len(), net.neurons());
    }

    #[test]
    fn counts_bounded_by_timesteps() {
        let (net, w) = setup(&[1, 3, 5, 4, 2], 3);
        for t in [1, 4, 9] {
            let r = forward(
                &net,
                &w,
                &random_sample([2, 6, 6], 3),
                t,
                &LifConfig::default(),
            )
            .unwrap();
            assert!(r.firing_pattern.counts.iter().all(|&c| c as usize <= t));
            assert_eq!(r.total_spikes, r.firing_pattern.total());
            assert_eq!(r.logits.len(), 10);
        }
    }

    #[test]
    fn forward_is_deterministic() {
        let (net, w) = setup(&[2, 5, 3], 2);
        let s = random_sample([2, 6, 6], 8);
        let a = forward(&net, &w, &s, 5, &LifConfig::default()).unwrap();
        let b = forward(&net, &w, &s, 5, &LifConfig::default()).unwrap();
        assert_eq!(a, b);
        assert!(a.total_spikes > 0);
    }

    #[test]
    fn flipping_polarity_with_negated_weights_is_neutral() {
        let (net, w) = setup(&[2, 3, 4, 5], 3);
        let s = random_sample([2, 6, 6], 17);
        let base = forward(&net, &w, &s, 6, &LifConfig::default()).unwrap();
        let (mut net2, mut w2) = (net.clone(), w.clone());
        for (si, stage) in net2.stages.iter_mut().enumerate() {
            for (ei, e) in stage.edges.iter_mut().enumerate() {
                if e.polarity == Polarity::Inhibitory {
                    e.polarity = Polarity::Excitatory;
                    w2.stages[si][ei].data.iter_mut().for_each(|v| *v = -*v);
                }
            }
        }
        assert_eq!(
            forward(&net2, &w2, &s, 6, &LifConfig::default()).unwrap(),
            base
        );
    }

    #[test]
    fn batch_matches_individual_runs() {
        let (net, w) = setup(&[4, 1], 1);
        let batch: Vec<_> = (0..8).map(|i| random_sample([2, 6, 6], i)).collect();
        let results = batch_forward(&net, &w, &batch, 4, &LifConfig::default()).unwrap();
        assert_eq!(results.len(), 8);
        for (s, r) in batch.iter().zip(&results) {
            assert_eq!(&forward(&net, &w, s, 4, &LifConfig::default()).unwrap(), r);
            assert_eq!(r.total_spikes, r.firing_pattern.total());
        }
        let dup = [batch[3].clone(), batch[3].clone()];
        let r = batch_forward(&net, &w, &dup, 4, &LifConfig::default()).unwrap();
        assert_eq!(r[0], r[1]);
    }

    #[test]
    fn rejects_bad_inputs() {
        let (net, w) = setup(&[1], 1);
        let lif = LifConfig::default();
        let s = random_sample([2, 6, 6], 1);
        assert_eq!(forward(&net, &w, &s, 0, &lif), Err(SimError::NoTimesteps));
        assert!(matches!(
            forward(&net, &w, &random_sample([1, 6, 6], 1), 2, &lif),
            Err(SimError::Shape(_))
        ));
        let mut nan = FeatureMap::zeros(2, 6, 6);
        nan.data[3] = f64::NAN;
        assert_eq!(
            forward(&net, &w, &Stimulus::Static(nan), 2, &lif),
            Err(SimError::NonFinite)
        );
        let frames = Stimulus::Frames(vec![FeatureMap::zeros(2, 6, 6); 3]);
        assert!(matches!(
            forward(&net, &w, &frames, 4, &lif),
            Err(SimError::Shape(_))
        ));
        let (other, _) = setup(&[1, 2], 1);
        assert!(matches!(
            forward(&other, &w, &s, 2, &lif),
            Err(SimError::Shape(_))
        ));
    }

    #[test]
    fn frames_drive_per_timestep() {
        let (net, mut w) = setup(&[1], 1);
        // identity-like first edge so only the driven step can fire
        w.stages[0][0].data.iter_mut().for_each(|v| *v = 0.0);
        let centre = w.stages[0][0].size / 2;
        let k = &mut w.stages[0][0];
        for o in 0..k.out_channels {
            let idx = ((o * k.in_channels) * k.size + centre) * k.size + centre;
            k.data[idx] = 1.0;
        }
        let mut hot = FeatureMap::zeros(2, 6, 6);
        hot.data.iter_mut().for_each(|v| *v = 4.0);
        let frames = vec![hot, FeatureMap::zeros(2, 6, 6), FeatureMap::zeros(2, 6, 6)];
        let r = forward(
            &net,
            &w,
            &Stimulus::Frames(frames),
            3,
            &LifConfig::default(),
        )
        .unwrap();
        // node B fires once per neuron, then decays without drive
        let b_neurons = 4 * 36;
        assert!(r.firing_pattern.counts[..b_neurons].iter().all(|&c| c == 1));
    }
}
