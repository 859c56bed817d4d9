use std::fmt;

use serde::{Deserialize, Serialize};

use super::MotifError;
use crate::genome::Gene;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MotifKind {
    /// Feedforward excitation.
    #[serde(rename = "FE")]
    Fe,
    /// Feedforward inhibition.
    #[serde(rename = "FI")]
    Fi,
    /// Feedback inhibition.
    #[serde(rename = "FbI")]
    Fbi,
    /// Lateral inhibition.
    #[serde(rename = "LI")]
    Li,
    /// Mutual inhibition.
    #[serde(rename = "MI")]
    Mi,
}

impl MotifKind {
    pub const ALL: [MotifKind; 5] = [
        MotifKind::Fe,
        MotifKind::Fi,
        MotifKind::Fbi,
        MotifKind::Li,
        MotifKind::Mi,
    ];

    pub fn from_gene(gene: Gene) -> Result<Self, MotifError> {
        match gene {
            1 => Ok(MotifKind::Fe),
            2 => Ok(MotifKind::Fi),
            3 => Ok(MotifKind::Fbi),
            4 => Ok(MotifKind::Li),
            5 => Ok(MotifKind::Mi),
            other => Err(MotifError::UnknownMotif(other)),
        }
    }

    pub fn gene(self) -> Gene {
        match self {
            MotifKind::Fe => 1,
            MotifKind::Fi => 2,
            MotifKind::Fbi => 3,
            MotifKind::Li => 4,
            MotifKind::Mi => 5,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            MotifKind::Fe => "FE",
            MotifKind::Fi => "FI",
            MotifKind::Fbi => "FbI",
            MotifKind::Li => "LI",
            MotifKind::Mi => "MI",
        }
    }

    /// Excitation/inhibition class: FE=1, FI=FbI=2, LI=3, MI=4.
    pub fn ei_class(self) -> u8 {
        match self {
            MotifKind::Fe => 1,
            MotifKind::Fi | MotifKind::Fbi => 2,
            MotifKind::Li => 3,
            MotifKind::Mi => 4,
        }
    }
}

impl fmt::Display for MotifKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for MotifKind {
    type Err = MotifError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MotifKind::ALL
            .into_iter()
            .find(|k| k.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| MotifError::UnknownMotifName(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Excitatory,
    Inhibitory,
}

impl Polarity {
    pub fn sign(self) -> f64 {
        match self {
            Polarity::Excitatory => 1.0,
            Polarity::Inhibitory => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Feedforward,
    /// Reads the source's spikes from the previous timestep.
    Feedback,
}

/// Share of the stage's output width a node gets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeWidth {
    Full,
    /// `ceil(width / 2)`.
    UpperHalf,
    /// `floor(width / 2)`.
    LowerHalf,
}

impl NodeWidth {
    pub fn channels(self, stage_width: usize) -> usize {
        match self {
            NodeWidth::Full => stage_width,
            NodeWidth::UpperHalf => stage_width.div_ceil(2),
            NodeWidth::LowerHalf => stage_width / 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSpec {
    pub name: &'static str,
    pub polarity: Polarity,
    pub width: NodeWidth,
}

/// Edge endpoint: the stage input feature map ("A") or a node index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Endpoint {
    Input,
    Node(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeSpec {
    pub src: Endpoint,
    pub dst: usize,
    pub polarity: Polarity,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MotifTemplate {
    pub kind: MotifKind,
    pub nodes: Vec<NodeSpec>,
    pub edges: Vec<EdgeSpec>,
    /// Nodes whose spikes are channel-concatenated to form the stage output.
    pub outputs: Vec<usize>,
}

impl MotifTemplate {
    pub fn inhibitory_nodes(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| n.polarity == Polarity::Inhibitory)
            .count()
    }

    pub fn has_feedback(&self) -> bool {
        self.edges.iter().any(|e| e.kind == EdgeKind::Feedback)
    }

    /// Node evaluation order within one timestep: every feedforward source
    /// comes before its destination.
    pub fn eval_order(&self) -> Vec<usize> {
        let n = self.nodes.len();
        let mut pending: Vec<usize> = vec![0; n];
        for e in &self.edges {
            if let (EdgeKind::Feedforward, Endpoint::Node(_)) = (e.kind, e.src) {
                pending[e.dst] += 1;
            }
        }
        let mut order = Vec::with_capacity(n);
        let mut done = vec![false; n];
        while order.len() < n {
            let next = (0..n)
                .find(|&i| !done[i] && pending[i] == 0)
                .expect("motif feedforward edges are acyclic");
            done[next] = true;
            order.push(next);
            for e in &self.edges {
                if e.kind == EdgeKind::Feedforward && e.src == Endpoint::Node(next) {
                    pending[e.dst] -= 1;
                }
            }
        }
        order
    }
}

fn node(name: &'static str, polarity: Polarity, width: NodeWidth) -> NodeSpec {
    NodeSpec {
        name,
        polarity,
        width,
    }
}

fn edge(src: Endpoint, dst: usize, polarity: Polarity, kind: EdgeKind) -> EdgeSpec {
    EdgeSpec {
        src,
        dst,
        polarity,
        kind,
    }
}

/// The fixed circuit for a motif. Edge order is the order in which micro
/// genes are consumed.
pub fn template(kind: MotifKind) -> MotifTemplate {
    use EdgeKind::{Feedback, Feedforward};
    use Endpoint::{Input, Node};
    use NodeWidth::{Full, LowerHalf, UpperHalf};
    use Polarity::{Excitatory as Exc, Inhibitory as Inh};

    match kind {
        MotifKind::Fe => MotifTemplate {
            kind,
            nodes: vec![node("B", Exc, Full), node("C", Exc, Full)],
            edges: vec![
                edge(Input, 0, Exc, Feedforward),
                edge(Node(0), 1, Exc, Feedforward),
            ],
            outputs: vec![1],
        },
        MotifKind::Fi => MotifTemplate {
            kind,
            nodes: vec![node("B", Exc, Full), node("C", Inh, Full)],
            edges: vec![
                edge(Input, 0, Exc, Feedforward),
                edge(Input, 1, Exc, Feedforward),
                edge(Node(1), 0, Inh, Feedforward),
            ],
            outputs: vec![0],
        },
        MotifKind::Fbi => MotifTemplate {
            kind,
            nodes: vec![node("B", Exc, Full), node("C", Inh, Full)],
            edges: vec![
                edge(Input, 0, Exc, Feedforward),
                edge(Node(0), 1, Exc, Feedforward),
                edge(Node(1), 0, Inh, Feedback),
            ],
            outputs: vec![0],
        },
        MotifKind::Li => MotifTemplate {
            kind,
            nodes: vec![
                node("B1", Exc, UpperHalf),
                node("B2", Exc, LowerHalf),
                node("C", Inh, Full),
            ],
            edges: vec![
                edge(Input, 0, Exc, Feedforward),
                edge(Input, 1, Exc, Feedforward),
                edge(Input, 2, Exc, Feedforward),
                edge(Node(2), 0, Inh, Feedforward),
                edge(Node(2), 1, Inh, Feedforward),
            ],
            outputs: vec![0, 1],
        },
        MotifKind::Mi => MotifTemplate {
            kind,
            nodes: vec![node("B", Inh, UpperHalf), node("C", Inh, LowerHalf)],
            edges: vec![
                edge(Input, 0, Exc, Feedforward),
                edge(Input, 1, Exc, Feedforward),
                edge(Node(0), 1, Inh, Feedback),
                edge(Node(1), 0, Inh, Feedback),
            ],
            outputs: vec![0, 1],
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn source_polarity(t: &MotifTemplate, e: &EdgeSpec) -> Polarity {
        match e.src {
            Endpoint::Input => Polarity::Excitatory,
            Endpoint::Node(i) => t.nodes[i].polarity,
        }
    }

    #[test]
    fn fe_is_purely_excitatory() {
        let t = template(MotifKind::Fe);
        assert_eq!(t.nodes.len(), 2);
        assert_eq!(t.inhibitory_nodes(), 0);
        assert_eq!(
            t.edges.iter().map(|e| (e.src, e.dst)).collect::<Vec<_>>(),
            [(Endpoint::Input, 0), (Endpoint::Node(0), 1)]
        );
        assert!(t.edges.iter().all(|e| e.polarity == Polarity::Excitatory));
        assert!(!t.has_feedback());
    }

    #[test]
    fn fbi_feeds_inhibition_back() {
        let t = template(MotifKind::Fbi);
        let back = t
            .edges
            .iter()
            .find(|e| e.kind == EdgeKind::Feedback)
            .unwrap();
        assert_eq!((back.src, back.dst), (Endpoint::Node(1), 0));
        assert_eq!(back.polarity, Polarity::Inhibitory);
    }

    #[test]
    fn mi_has_mutual_feedback() {
        let t = template(MotifKind::Mi);
        let fb: Vec<_> = t
            .edges
            .iter()
            .filter(|e| e.kind == EdgeKind::Feedback)
            .map(|e| (e.src, e.dst, e.polarity))
            .collect();
        assert_eq!(
            fb,
            [
                (Endpoint::Node(0), 1, Polarity::Inhibitory),
                (Endpoint::Node(1), 0, Polarity::Inhibitory)
            ]
        );
        assert_eq!(t.inhibitory_nodes(), 2);
    }

    #[test]
    fn structural_invariants_hold_for_all_templates() {
        for kind in MotifKind::ALL {
            let t = template(kind);
            for e in &t.edges {
                assert_eq!(e.polarity, source_polarity(&t, e), "{kind} edge {e:?}");
            }
            let expected_inh = match kind {
                MotifKind::Fe => 0,
                MotifKind::Mi => 2,
                _ => 1,
            };
            assert_eq!(t.inhibitory_nodes(), expected_inh, "{kind}");
            assert_eq!(
                t.has_feedback(),
                matches!(kind, MotifKind::Fbi | MotifKind::Mi),
                "{kind}"
            );
        }
    }

    #[test]
    fn eval_order_respects_feedforward_edges() {
        for kind in MotifKind::ALL {
            let t = template(kind);
            let order = t.eval_order();
            let rank = |n: usize| order.iter().position(|&x| x == n).unwrap();
            for e in &t.edges {
                if let (EdgeKind::Feedforward, Endpoint::Node(s)) = (e.kind, e.src) {
                    assert!(rank(s) < rank(e.dst), "{kind}");
                }
            }
        }
        assert_eq!(template(MotifKind::Fi).eval_order(), [1, 0]);
        assert_eq!(template(MotifKind::Li).eval_order(), [2, 0, 1]);
    }

    #[test]
    fn gene_and_name_round_trip() {
        for kind in MotifKind::ALL {
            assert_eq!(MotifKind::from_gene(kind.gene()).unwrap(), kind);
            assert_eq!(kind.label().parse::<MotifKind>().unwrap(), kind);
        }
        assert!(MotifKind::from_gene(0).is_err());
        assert!(MotifKind::from_gene(6).is_err());
        assert!("XX".parse::<MotifKind>().is_err());
    }

    #[test]
    fn ei_classes() {
        let classes: Vec<u8> = MotifKind::ALL.iter().map(|k| k.ei_class()).collect();
        assert_eq!(classes, [1, 2, 2, 3, 4]);
    }
}
