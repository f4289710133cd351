//! Cross-validation harness: the vulnerability algebra against the bit-level
//! attack oracle, over exhaustive element subsets.
//!
//! Random instances place bundles only where partial exposure propagates to
//! the final key position by position: at the root and under series chains.
//! A compromised bundle member exposes one segment of the concatenated
//! stream; under an XOR or secret-sharing layer that segment would have to
//! align with the other branches' exposed segments, a positional notion the
//! all-or-nothing set algebra deliberately does not model. Everything else,
//! including nested sharing, link reuse, and relay chains, is generated.

use std::collections::BTreeSet;

use crate::linkrates::PresetRegistry;
use crate::netgraph::{
    Link, LinkId, LinkKind, NetworkGraph, NodeId, ProtocolTree, RateSpec, SsScheme,
};
use crate::prng::SplitMix64;
use crate::ratecalc::protocol_rate;
use crate::vulnset::{is_compromised, protocol_vuln, Element};

use super::attack::{announcement_basis, attack_from};
use super::{execute, Execution, SimError};

/// One disagreement between the algebra and the execution oracle.
#[derive(Debug, Clone)]
pub struct OracleMismatch {
    pub compromised: BTreeSet<Element>,
    pub algebra_compromised: bool,
    pub oracle_compromised: bool,
}

/// Result of an exhaustive equivalence check.
#[derive(Debug)]
pub struct OracleReport {
    pub universe: Vec<Element>,
    pub subsets_checked: u64,
    pub mismatches: Vec<OracleMismatch>,
    pub execution: Execution,
    /// Output bits per elapsed tick, with each leaf's consumption timed at
    /// its analytic rate; compare against `analytic_rate`.
    pub measured_rate: f64,
    /// The rate calculus' prediction for the same tree.
    pub analytic_rate: f64,
}

impl OracleReport {
    pub fn is_clean(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Output bits per elapsed tick of an execution, where each link's elapsed
/// time is its consumed bits over its analytic rate and the execution takes
/// as long as its slowest link. Secret-sharing padding and integer bundle
/// splits make this approach the analytic rate from below as demand grows.
pub fn measured_rate(execution: &Execution, graph: &NetworkGraph) -> Result<f64, SimError> {
    let presets = PresetRegistry::default();
    let mut elapsed = 0.0f64;
    for (link, &bits) in &execution.consumed_bits {
        let leaf = ProtocolTree::Leaf { link: link.clone() };
        let rate = protocol_rate(&leaf, graph, &presets)?.bps();
        if rate > 0.0 {
            elapsed = elapsed.max(bits as f64 / rate);
        }
    }
    if elapsed == 0.0 {
        return Ok(0.0);
    }
    Ok(execution.final_key.len() as f64 / elapsed)
}

/// Attackable elements of a tree: its leaf links and series relay nodes.
/// The two end users are outside the adversary model.
pub fn tree_universe(tree: &ProtocolTree) -> Vec<Element> {
    let mut out: Vec<Element> = tree
        .leaf_links()
        .into_iter()
        .map(|l| Element::link(l.as_str()))
        .collect();
    out.extend(
        tree.via_nodes()
            .into_iter()
            .map(|n| Element::node(n.as_str())),
    );
    out
}

const MAX_UNIVERSE: usize = 14;

/// For every subset S of the tree's elements, assert that
/// `is_compromised(protocol_vuln(tree), S)` agrees with a bit-level attack
/// on an execution. Returns all disagreements rather than panicking.
pub fn oracle_check(
    tree: &ProtocolTree,
    graph: &NetworkGraph,
    seed: u64,
) -> Result<OracleReport, SimError> {
    let universe = tree_universe(tree);
    if universe.len() > MAX_UNIVERSE {
        return Err(SimError::UniverseTooLarge(universe.len()));
    }
    // long enough that every bundled channel contributes to the final key
    let rounds = if matches!(tree, ProtocolTree::SecretShare { .. }) {
        2
    } else {
        super::tree_min_bits(tree, graph)?.max(6)
    };
    let execution = execute(tree, graph, seed, rounds)?;
    let v_min = protocol_vuln(tree, graph)?;

    let analytic_rate = protocol_rate(tree, graph, &PresetRegistry::default())?.bps();
    let measured = measured_rate(&execution, graph)?;
    let mut report = OracleReport {
        universe: universe.clone(),
        subsets_checked: 0,
        mismatches: Vec::new(),
        execution,
        measured_rate: measured,
        analytic_rate,
    };
    let public_span = announcement_basis(&report.execution);
    for mask in 0u64..1 << universe.len() {
        let compromised: BTreeSet<Element> = universe
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, e)| e.clone())
            .collect();
        let algebra = is_compromised(&v_min, &compromised);
        let oracle = attack_from(&report.execution, public_span.clone(), &compromised).success;
        if algebra != oracle {
            report.mismatches.push(OracleMismatch {
                compromised,
                algebra_compromised: algebra,
                oracle_compromised: oracle,
            });
        }
        report.subsets_checked += 1;
    }
    Ok(report)
}

/// The worked four-node example: QKD+KEM pair to X relayed onward, XORed
/// with a QKD-to-Y-then-KEM path.
pub fn figure_network() -> (NetworkGraph, ProtocolTree) {
    let qkd = |id: &str, a: &str, b: &str| Link {
        id: LinkId::new(id),
        kind: LinkKind::Qkd,
        ends: (NodeId::new(a), NodeId::new(b)),
        rate_spec: RateSpec::QkdPreset {
            preset: "commercial".into(),
            distance_km: 10.0,
        },
    };
    let kem = |id: &str, a: &str, b: &str| Link {
        id: LinkId::new(id),
        kind: LinkKind::Kem,
        ends: (NodeId::new(a), NodeId::new(b)),
        rate_spec: RateSpec::KemPreset {
            preset: "kyber1024-pc".into(),
        },
    };
    let graph = NetworkGraph::new(
        ["A", "B", "X", "Y"].map(NodeId::new).to_vec(),
        vec![
            qkd("q_AY", "A", "Y"),
            kem("k_YB", "Y", "B"),
            qkd("q_AX", "A", "X"),
            kem("k_AX", "A", "X"),
            kem("k_XB", "X", "B"),
        ],
    )
    .expect("example network is valid");
    let tree = ProtocolTree::Xor {
        children: vec![
            ProtocolTree::Series {
                children: vec![
                    ProtocolTree::Xor {
                        children: vec![ProtocolTree::leaf("q_AX"), ProtocolTree::leaf("k_AX")],
                    },
                    ProtocolTree::leaf("k_XB"),
                ],
                via: vec![NodeId::new("X")],
            },
            ProtocolTree::Series {
                children: vec![ProtocolTree::leaf("q_AY"), ProtocolTree::leaf("k_YB")],
                via: vec![NodeId::new("Y")],
            },
        ],
    };
    (graph, tree)
}

/// Budgeted random protocol instance between users A and B.
///
/// Elements (links plus relay nodes) never exceed `max_elements`; all
/// combinators appear, with bundles kept outside secret-sharing subtrees.
pub fn random_instance(seed: u64, max_elements: usize) -> (NetworkGraph, ProtocolTree) {
    let mut gen = InstanceGen {
        rng: SplitMix64::new(seed),
        nodes: vec![NodeId::new("A"), NodeId::new("B")],
        links: Vec::new(),
        next_link: 0,
        next_node: 0,
    };
    let tree = gen.subtree(
        NodeId::new("A"),
        NodeId::new("B"),
        true,
        0,
        max_elements.max(1),
    );
    let graph = NetworkGraph::new(gen.nodes, gen.links).expect("generated graph is valid");
    (graph, tree)
}

struct InstanceGen {
    rng: SplitMix64,
    nodes: Vec<NodeId>,
    links: Vec<Link>,
    next_link: usize,
    next_node: usize,
}

impl InstanceGen {
    fn leaf(&mut self, a: NodeId, b: NodeId) -> ProtocolTree {
        // occasionally reuse an existing link between the same pair
        if self.rng.next_below(10) == 0 {
            let existing: Vec<LinkId> = self
                .links
                .iter()
                .filter(|l| (l.ends.0 == a && l.ends.1 == b) || (l.ends.0 == b && l.ends.1 == a))
                .map(|l| l.id.clone())
                .collect();
            if !existing.is_empty() {
                let pick = self.rng.next_below(existing.len() as u64) as usize;
                return ProtocolTree::Leaf {
                    link: existing[pick].clone(),
                };
            }
        }
        let id = LinkId::new(format!("e{}", self.next_link));
        self.next_link += 1;
        let kind = if self.rng.next_bool() {
            LinkKind::Qkd
        } else {
            LinkKind::Kem
        };
        self.links.push(Link {
            id: id.clone(),
            kind,
            ends: (a, b),
            rate_spec: RateSpec::Explicit((1 + self.rng.next_below(16)) as f64),
        });
        ProtocolTree::Leaf { link: id }
    }

    /// Even split of a parent allowance over `parts` children, each at
    /// least 1; the remainder goes to the first children.
    fn partition(total: usize, parts: usize) -> Vec<usize> {
        let base = total / parts;
        (0..parts)
            .map(|i| base + usize::from(i < total % parts))
            .collect()
    }

    /// Build a subtree consuming at most `allowance` elements (always >= 1).
    /// `bundle_ok` is true only while every ancestor is a series or bundle,
    /// the positions where partial bundle exposure reaches the final key.
    fn subtree(
        &mut self,
        a: NodeId,
        b: NodeId,
        bundle_ok: bool,
        depth: usize,
        allowance: usize,
    ) -> ProtocolTree {
        if depth >= 3 || allowance < 2 {
            return self.leaf(a, b);
        }
        match self.rng.next_below(if bundle_ok { 10 } else { 8 }) {
            0 | 1 => self.leaf(a, b),
            2 | 3 => {
                let width = (2 + self.rng.next_below(2) as usize).min(allowance);
                let children = Self::partition(allowance, width)
                    .into_iter()
                    .map(|slice| self.subtree(a.clone(), b.clone(), false, depth + 1, slice))
                    .collect();
                ProtocolTree::Xor { children }
            }
            4 | 5 => {
                // relay chain of h hops costs h - 1 fresh nodes plus
                // at least one link per hop
                let max_hops = allowance.div_ceil(2);
                if max_hops < 2 {
                    return self.leaf(a, b);
                }
                let hops = (2 + self.rng.next_below(2) as usize).min(max_hops);
                let mut waypoints = vec![a.clone()];
                for _ in 0..hops - 1 {
                    let node = NodeId::new(format!("M{}", self.next_node));
                    self.next_node += 1;
                    self.nodes.push(node.clone());
                    waypoints.push(node);
                }
                waypoints.push(b.clone());
                let child_allowances = Self::partition(allowance - (hops - 1), hops);
                let children = waypoints
                    .windows(2)
                    .zip(child_allowances)
                    .map(|(pair, slice)| {
                        self.subtree(
                            pair[0].clone(),
                            pair[1].clone(),
                            bundle_ok,
                            depth + 1,
                            slice,
                        )
                    })
                    .collect();
                ProtocolTree::Series {
                    children,
                    via: waypoints[1..hops].to_vec(),
                }
            }
            6 | 7 => {
                let n = (2 + self.rng.next_below(2) as usize).min(allowance);
                let children: Vec<ProtocolTree> = Self::partition(allowance, n)
                    .into_iter()
                    .map(|slice| self.subtree(a.clone(), b.clone(), false, depth + 1, slice))
                    .collect();
                let scheme = if self.rng.next_bool() {
                    SsScheme::Threshold {
                        g: 1 + self.rng.next_below((n - 1) as u64) as usize,
                    }
                } else {
                    SsScheme::AccessStructure {
                        min_sets: self.random_antichain(n),
                    }
                };
                ProtocolTree::SecretShare { children, scheme }
            }
            _ => {
                let width = (2 + self.rng.next_below(2) as usize).min(allowance);
                let children = Self::partition(allowance, width)
                    .into_iter()
                    .map(|slice| self.subtree(a.clone(), b.clone(), bundle_ok, depth + 1, slice))
                    .collect();
                ProtocolTree::Bundle { children }
            }
        }
    }

    fn random_antichain(&mut self, n: usize) -> Vec<BTreeSet<usize>> {
        // a handful of shapes covering dictators, chains, and unions
        match self.rng.next_below(4) {
            0 => vec![(0..n).collect()],
            1 => (1..n).map(|i| [0, i].into()).collect(),
            2 if n >= 3 => vec![[0, 1].into(), [1, 2].into()],
            _ => (0..n).map(|i| [i].into()).collect(),
        }
    }
}
