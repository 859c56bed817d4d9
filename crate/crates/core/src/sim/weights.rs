use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::tensor::ConvKernel;
use super::SimError;
use crate::motif::NetworkGraph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    pub in_features: usize,
    pub out_features: usize,
    /// `[out][in]`.
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Linear {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.weight
            .chunks(self.in_features.max(1))
            .zip(&self.bias)
            .map(|(row, b)| b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
            .collect()
    }
}

/// Parameters for every conv edge of a [`NetworkGraph`] plus the classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    /// One kernel per stage edge, in the stage's edge order.
    pub stages: Vec<Vec<ConvKernel>>,
    /// One kernel per cross edge.
    pub cross: Vec<ConvKernel>,
    pub head: Linear,
}

impl Weights {
    pub fn zeros(net: &NetworkGraph) -> Self {
        Self::build(net, |k| k)
    }

    fn build(net: &NetworkGraph, mut fill: impl FnMut(ConvKernel) -> ConvKernel) -> Self {
        let stages = net
            .stages
            .iter()
            .map(|s| {
                s.edges
                    .iter()
                    .map(|e| {
                        fill(ConvKernel::zeros(
                            e.out_channels,
                            e.in_channels,
                            e.kernel.size(),
                        ))
                    })
                    .collect()
            })
            .collect();
        let cross = net
            .cross_edges
            .iter()
            .map(|e| {
                fill(ConvKernel::zeros(
                    e.out_channels,
                    e.in_channels,
                    e.kernel.size(),
                ))
            })
            .collect();
        let head = Linear {
            in_features: net.head.in_features,
            out_features: net.head.classes,
            weight: vec![0.0; net.head.in_features * net.head.classes],
            bias: vec![0.0; net.head.classes],
        };
        Self {
            stages,
            cross,
            head,
        }
    }

    pub fn check_shapes(&self, net: &NetworkGraph) -> Result<(), SimError> {
        let expected = Weights::zeros(net);
        let same = |a: &ConvKernel, b: &ConvKernel| {
            (a.out_channels, a.in_channels, a.size, a.data.len())
                == (b.out_channels, b.in_channels, b.size, b.data.len())
        };
        let stages_ok = self.stages.len() == expected.stages.len()
            && self
                .stages
                .iter()
                .zip(&expected.stages)
                .all(|(a, b)| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| same(x, y)));
        let cross_ok = self.cross.len() == expected.cross.len()
            && self
                .cross
                .iter()
                .zip(&expected.cross)
                .all(|(x, y)| same(x, y));
        let head_ok = self.head.in_features == expected.head.in_features
            && self.head.out_features == expected.head.out_features
            && self.head.weight.len() == expected.head.weight.len()
            && self.head.bias.len() == expected.head.bias.len();
        if stages_ok && cross_ok && head_ok {
            Ok(())
        } else {
            Err(SimError::Shape("weights do not match network".into()))
        }
    }

    pub fn is_finite(&self) -> bool {
        self.stages
            .iter()
            .flatten()
            .chain(&self.cross)
            .flat_map(|k| &k.data)
            .chain(&self.head.weight)
            .chain(&self.head.bias)
            .all(|v| v.is_finite())
    }
}

/// Zero-mean normal weights with standard deviation `1 / sqrt(fan_in)`;
/// biases start at zero.
pub fn init_weights<R: Rng + ?Sized>(net: &NetworkGraph, rng: &mut R) -> Weights {
    let mut w = Weights::build(net, |mut k| {
        let fan_in = k.fan_in();
        fill_normal(&mut k.data, fan_in, rng);
        k
    });
    let fan_in = w.head.in_features;
    fill_normal(&mut w.head.weight, fan_in, rng);
    w
}

fn fill_normal<R: Rng + ?Sized>(data: &mut [f64], fan_in: usize, rng: &mut R) {
    let std = 1.0 / (fan_in.max(1) as f64).sqrt();
    let dist = Normal::new(0.0, std).expect("finite std");
    data.iter_mut().for_each(|v| *v = dist.sample(rng));
}
