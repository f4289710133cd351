//! Network multigraph and protocol-tree data model.
//!
//! A [`NetworkGraph`] is a multigraph of named nodes joined by QKD or KEM
//! links; multiple links between the same node pair are allowed. A
//! [`ProtocolTree`] describes one end-to-end key protocol over that graph as
//! a recursive combination of leaf links. [`validate_tree`] checks every
//! structural invariant and returns the protocol's end-user pair.
//!
//! All types are immutable after construction and all operations are pure.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sets::is_antichain;

#[derive(Debug, Error, PartialEq)]
pub enum NetError {
    #[error("syntax error in network document: {0}")]
    Syntax(String),
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("empty identifier")]
    EmptyId,
    #[error("link `{link}` references unknown node `{node}`")]
    UnknownNode { link: String, node: String },
    #[error("link `{link}` joins a node to itself")]
    SelfLoop { link: String },
    #[error("link `{link}`: expected exactly one rate specification")]
    AmbiguousRateSpec { link: String },
    #[error("link `{link}`: {kind} preset given for a {actual} link")]
    PresetKindMismatch {
        link: String,
        kind: &'static str,
        actual: &'static str,
    },
    #[error("link `{link}`: invalid {name} {value}")]
    InvalidNumber {
        link: String,
        name: &'static str,
        value: f64,
    },
    #[error("protocol references unknown link `{0}`")]
    UnknownLink(String),
    #[error("combinator requires at least one child")]
    NoChildren,
    #[error("series with {children} children needs {expected} via nodes, got {given}")]
    ViaCount {
        children: usize,
        expected: usize,
        given: usize,
    },
    #[error("series via node `{via}` does not join children {left} and {right}")]
    BrokenChain {
        via: String,
        left: usize,
        right: usize,
    },
    #[error("series chain would make the two end users identical")]
    DegenerateSeries,
    #[error("children of a parallel combinator span different endpoints: {a} vs {b}")]
    MismatchedEndpoints { a: String, b: String },
    #[error("threshold secret length must satisfy 1 <= g < n; got g={g}, n={n}")]
    BadThreshold { g: usize, n: usize },
    #[error("access structure is invalid: {0}")]
    BadAccessStructure(String),
    #[error("secret-sharing scheme needs exactly one of `g` and `access`")]
    AmbiguousScheme,
}

/// Name of a network node.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub String);

impl NodeId {
    pub fn new(name: impl Into<String>) -> Self {
        Self(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Name of a link.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LinkId(pub String);

impl LinkId {
    pub fn new(name: impl Into<String>) -> Self {
        Self(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkKind {
    Qkd,
    Kem,
}

impl LinkKind {
    fn name(self) -> &'static str {
        match self {
            LinkKind::Qkd => "qkd",
            LinkKind::Kem => "kem",
        }
    }
}

/// How a link's key rate is determined.
#[derive(Debug, Clone, PartialEq)]
pub enum RateSpec {
    /// Fixed rate in bits per second.
    Explicit(f64),
    /// Named QKD parameter preset evaluated at a fiber distance.
    QkdPreset { preset: String, distance_km: f64 },
    /// Named KEM parameter preset (distance independent).
    KemPreset { preset: String },
}

/// One symmetric-key source between two nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub id: LinkId,
    pub kind: LinkKind,
    pub ends: (NodeId, NodeId),
    pub rate_spec: RateSpec,
}

impl Link {
    /// The endpoint opposite `node`, if `node` is an endpoint at all.
    pub fn other_end(&self, node: &NodeId) -> Option<&NodeId> {
        if self.ends.0 == *node {
            Some(&self.ends.1)
        } else if self.ends.1 == *node {
            Some(&self.ends.0)
        } else {
            None
        }
    }
}

/// Multigraph of nodes and rated key links.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkGraph {
    nodes: BTreeSet<NodeId>,
    links: BTreeMap<LinkId, Link>,
}

impl NetworkGraph {
    /// Build a graph, checking id uniqueness and endpoint existence.
    pub fn new(nodes: Vec<NodeId>, links: Vec<Link>) -> Result<Self, NetError> {
        let mut node_set = BTreeSet::new();
        for node in nodes {
            if node.0.is_empty() {
                return Err(NetError::EmptyId);
            }
            if !node_set.insert(node.clone()) {
                return Err(NetError::DuplicateId(node.0));
            }
        }
        let mut link_map = BTreeMap::new();
        for link in links {
            if link.id.0.is_empty() {
                return Err(NetError::EmptyId);
            }
            // node and link names live in one global id space
            if node_set.contains(&NodeId(link.id.0.clone())) {
                return Err(NetError::DuplicateId(link.id.0));
            }
            for end in [&link.ends.0, &link.ends.1] {
                if !node_set.contains(end) {
                    return Err(NetError::UnknownNode {
                        link: link.id.0.clone(),
                        node: end.0.clone(),
                    });
                }
            }
            if link.ends.0 == link.ends.1 {
                return Err(NetError::SelfLoop { link: link.id.0 });
            }
            validate_rate_spec(&link)?;
            if link_map.insert(link.id.clone(), link.clone()).is_some() {
                return Err(NetError::DuplicateId(link.id.0));
            }
        }
        Ok(Self {
            nodes: node_set,
            links: link_map,
        })
    }

    pub fn nodes(&self) -> impl Iterator<Item = &NodeId> {
        self.nodes.iter()
    }

    pub fn links(&self) -> impl Iterator<Item = &Link> {
        self.links.values()
    }

    pub fn link(&self, id: &LinkId) -> Option<&Link> {
        self.links.get(id)
    }

    pub fn has_node(&self, id: &NodeId) -> bool {
        self.nodes.contains(id)
    }
}

fn validate_rate_spec(link: &Link) -> Result<(), NetError> {
    match (&link.rate_spec, link.kind) {
        (RateSpec::Explicit(bps), _) => {
            if !bps.is_finite() || *bps < 0.0 {
                return Err(NetError::InvalidNumber {
                    link: link.id.0.clone(),
                    name: "rate_bps",
                    value: *bps,
                });
            }
        }
        (RateSpec::QkdPreset { distance_km, .. }, LinkKind::Qkd) => {
            if !distance_km.is_finite() || *distance_km < 0.0 {
                return Err(NetError::InvalidNumber {
                    link: link.id.0.clone(),
                    name: "distance_km",
                    value: *distance_km,
                });
            }
        }
        (RateSpec::QkdPreset { .. }, LinkKind::Kem) => {
            return Err(NetError::PresetKindMismatch {
                link: link.id.0.clone(),
                kind: "qkd",
                actual: LinkKind::Kem.name(),
            });
        }
        (RateSpec::KemPreset { .. }, LinkKind::Kem) => {}
        (RateSpec::KemPreset { .. }, LinkKind::Qkd) => {
            return Err(NetError::PresetKindMismatch {
                link: link.id.0.clone(),
                kind: "kem",
                actual: LinkKind::Qkd.name(),
            });
        }
    }
    Ok(())
}

/// Secret-sharing layer description inside a protocol tree.
#[derive(Debug, Clone, PartialEq)]
pub enum SsScheme {
    /// Shamir-variant threshold scheme distributing a secret of `g` field
    /// elements per round over all children.
    Threshold { g: usize },
    /// Explicit minimal access structure over 0-based child indices.
    AccessStructure { min_sets: Vec<BTreeSet<usize>> },
}

/// Recursive description of one end-to-end key protocol.
#[derive(Debug, Clone, PartialEq)]
pub enum ProtocolTree {
    /// Use a single link's key stream directly.
    Leaf { link: LinkId },
    /// Parallel channels between the same user pair whose keys are not
    /// combined; output streams are concatenated.
    Bundle { children: Vec<ProtocolTree> },
    /// Chain of sub-protocols relayed through intermediate nodes; `via[i]`
    /// joins child `i` and child `i + 1`.
    Series {
        children: Vec<ProtocolTree>,
        via: Vec<NodeId>,
    },
    /// Bitwise XOR of all children's keys.
    Xor { children: Vec<ProtocolTree> },
    /// Secret-sharing combination of the children's channels.
    SecretShare {
        children: Vec<ProtocolTree>,
        scheme: SsScheme,
    },
}

impl ProtocolTree {
    pub fn leaf(link: impl Into<String>) -> Self {
        ProtocolTree::Leaf {
            link: LinkId::new(link),
        }
    }

    pub fn children(&self) -> &[ProtocolTree] {
        match self {
            ProtocolTree::Leaf { .. } => &[],
            ProtocolTree::Bundle { children }
            | ProtocolTree::Series { children, .. }
            | ProtocolTree::Xor { children }
            | ProtocolTree::SecretShare { children, .. } => children,
        }
    }

    /// All link ids referenced by leaves, in first-appearance order.
    pub fn leaf_links(&self) -> Vec<LinkId> {
        let mut out = Vec::new();
        self.collect_links(&mut out);
        out
    }

    fn collect_links(&self, out: &mut Vec<LinkId>) {
        match self {
            ProtocolTree::Leaf { link } => {
                if !out.contains(link) {
                    out.push(link.clone());
                }
            }
            _ => {
                for child in self.children() {
                    child.collect_links(out);
                }
            }
        }
    }

    /// All series via nodes in the tree, in first-appearance order.
    pub fn via_nodes(&self) -> Vec<NodeId> {
        let mut out = Vec::new();
        self.collect_vias(&mut out);
        out
    }

    fn collect_vias(&self, out: &mut Vec<NodeId>) {
        if let ProtocolTree::Series { via, .. } = self {
            for node in via {
                if !out.contains(node) {
                    out.push(node.clone());
                }
            }
        }
        for child in self.children() {
            child.collect_vias(out);
        }
    }
}

/// The pair of end users a protocol serves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Endpoints {
    pub a: NodeId,
    pub b: NodeId,
}

impl Endpoints {
    fn unordered_eq(&self, other: &Endpoints) -> bool {
        (self.a == other.a && self.b == other.b) || (self.a == other.b && self.b == other.a)
    }

    fn contains(&self, node: &NodeId) -> bool {
        self.a == *node || self.b == *node
    }

    fn other(&self, node: &NodeId) -> &NodeId {
        if self.a == *node {
            &self.b
        } else {
            &self.a
        }
    }
}

impl fmt::Display for Endpoints {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.a, self.b)
    }
}

/// Check every structural invariant of a tree against its graph and return
/// the end-user pair. Success is independent of child ordering for the
/// parallel combinators.
pub fn validate_tree(tree: &ProtocolTree, graph: &NetworkGraph) -> Result<Endpoints, NetError> {
    match tree {
        ProtocolTree::Leaf { link } => {
            let link = graph
                .link(link)
                .ok_or_else(|| NetError::UnknownLink(link.0.clone()))?;
            Ok(Endpoints {
                a: link.ends.0.clone(),
                b: link.ends.1.clone(),
            })
        }
        ProtocolTree::Series { children, via } => {
            if children.is_empty() {
                return Err(NetError::NoChildren);
            }
            if via.len() + 1 != children.len() {
                return Err(NetError::ViaCount {
                    children: children.len(),
                    expected: children.len() - 1,
                    given: via.len(),
                });
            }
            let spans: Vec<Endpoints> = children
                .iter()
                .map(|child| validate_tree(child, graph))
                .collect::<Result<_, _>>()?;
            for (i, node) in via.iter().enumerate() {
                if !graph.has_node(node) {
                    return Err(NetError::UnknownNode {
                        link: format!("series via #{i}"),
                        node: node.0.clone(),
                    });
                }
                if !spans[i].contains(node) || !spans[i + 1].contains(node) {
                    return Err(NetError::BrokenChain {
                        via: node.0.clone(),
                        left: i,
                        right: i + 1,
                    });
                }
            }
            // walk the chain to fix the orientation of each hop
            let start = if via.is_empty() {
                return Ok(spans[0].clone());
            } else {
                spans[0].other(&via[0]).clone()
            };
            let mut previous = start.clone();
            for (i, span) in spans.iter().enumerate() {
                if !span.contains(&previous) {
                    let via_name = if i == 0 { &start } else { &via[i - 1] };
                    return Err(NetError::BrokenChain {
                        via: via_name.0.clone(),
                        left: i.saturating_sub(1),
                        right: i,
                    });
                }
                previous = span.other(&previous).clone();
            }
            if start == previous {
                return Err(NetError::DegenerateSeries);
            }
            Ok(Endpoints {
                a: start,
                b: previous,
            })
        }
        ProtocolTree::Bundle { children } | ProtocolTree::Xor { children } => {
            parallel_endpoints(children, graph)
        }
        ProtocolTree::SecretShare { children, scheme } => {
            let endpoints = parallel_endpoints(children, graph)?;
            validate_scheme(scheme, children.len())?;
            Ok(endpoints)
        }
    }
}

fn parallel_endpoints(
    children: &[ProtocolTree],
    graph: &NetworkGraph,
) -> Result<Endpoints, NetError> {
    let mut iter = children.iter();
    let first = iter.next().ok_or(NetError::NoChildren)?;
    let endpoints = validate_tree(first, graph)?;
    for child in iter {
        let child_endpoints = validate_tree(child, graph)?;
        if !endpoints.unordered_eq(&child_endpoints) {
            return Err(NetError::MismatchedEndpoints {
                a: endpoints.to_string(),
                b: child_endpoints.to_string(),
            });
        }
    }
    Ok(endpoints)
}

pub(crate) fn validate_scheme(scheme: &SsScheme, child_count: usize) -> Result<(), NetError> {
    match scheme {
        SsScheme::Threshold { g } => {
            if !(1 <= *g && *g < child_count) {
                return Err(NetError::BadThreshold {
                    g: *g,
                    n: child_count,
                });
            }
        }
        SsScheme::AccessStructure { min_sets } => {
            if min_sets.is_empty() {
                return Err(NetError::BadAccessStructure("no access sets".into()));
            }
            for set in min_sets {
                if set.is_empty() {
                    return Err(NetError::BadAccessStructure("empty access set".into()));
                }
                if let Some(&index) = set.iter().find(|&&i| i >= child_count) {
                    return Err(NetError::BadAccessStructure(format!(
                        "child index {index} out of range (have {child_count} children)"
                    )));
                }
            }
            if !is_antichain(min_sets) {
                return Err(NetError::BadAccessStructure(
                    "one access set contains another".into(),
                ));
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// External file format
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetDoc {
    nodes: Vec<String>,
    links: Vec<LinkDoc>,
    protocol: ProtoDoc,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkDoc {
    id: String,
    kind: LinkKind,
    ends: [String; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    rate_bps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    distance_km: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase", deny_unknown_fields)]
enum ProtoDoc {
    Link {
        id: String,
    },
    Bundle {
        children: Vec<ProtoDoc>,
    },
    Xor {
        children: Vec<ProtoDoc>,
    },
    Series {
        children: Vec<ProtoDoc>,
        via: Vec<String>,
    },
    Ss {
        children: Vec<ProtoDoc>,
        #[serde(skip_serializing_if = "Option::is_none")]
        g: Option<usize>,
        #[serde(skip_serializing_if = "Option::is_none")]
        access: Option<Vec<Vec<usize>>>,
    },
}

fn link_from_doc(doc: LinkDoc) -> Result<Link, NetError> {
    let rate_spec = match (doc.rate_bps, doc.preset, doc.distance_km) {
        (Some(bps), None, None) => RateSpec::Explicit(bps),
        (None, Some(preset), Some(distance_km)) => RateSpec::QkdPreset {
            preset,
            distance_km,
        },
        (None, Some(preset), None) => match doc.kind {
            LinkKind::Qkd => {
                return Err(NetError::AmbiguousRateSpec { link: doc.id });
            }
            LinkKind::Kem => RateSpec::KemPreset { preset },
        },
        _ => return Err(NetError::AmbiguousRateSpec { link: doc.id }),
    };
    Ok(Link {
        id: LinkId::new(doc.id),
        kind: doc.kind,
        ends: (
            NodeId::new(doc.ends[0].clone()),
            NodeId::new(doc.ends[1].clone()),
        ),
        rate_spec,
    })
}

fn link_to_doc(link: &Link) -> LinkDoc {
    let (rate_bps, preset, distance_km) = match &link.rate_spec {
        RateSpec::Explicit(bps) => (Some(*bps), None, None),
        RateSpec::QkdPreset {
            preset,
            distance_km,
        } => (None, Some(preset.clone()), Some(*distance_km)),
        RateSpec::KemPreset { preset } => (None, Some(preset.clone()), None),
    };
    LinkDoc {
        id: link.id.0.clone(),
        kind: link.kind,
        ends: [link.ends.0 .0.clone(), link.ends.1 .0.clone()],
        rate_bps,
        preset,
        distance_km,
    }
}

fn tree_from_doc(doc: ProtoDoc) -> Result<ProtocolTree, NetError> {
    Ok(match doc {
        ProtoDoc::Link { id } => ProtocolTree::Leaf {
            link: LinkId::new(id),
        },
        ProtoDoc::Bundle { children } => ProtocolTree::Bundle {
            children: children
                .into_iter()
                .map(tree_from_doc)
                .collect::<Result<_, _>>()?,
        },
        ProtoDoc::Xor { children } => ProtocolTree::Xor {
            children: children
                .into_iter()
                .map(tree_from_doc)
                .collect::<Result<_, _>>()?,
        },
        ProtoDoc::Series { children, via } => ProtocolTree::Series {
            children: children
                .into_iter()
                .map(tree_from_doc)
                .collect::<Result<_, _>>()?,
            via: via.into_iter().map(NodeId::new).collect(),
        },
        ProtoDoc::Ss {
            children,
            g,
            access,
        } => {
            let scheme = match (g, access) {
                (Some(g), None) => SsScheme::Threshold { g },
                (None, Some(sets)) => SsScheme::AccessStructure {
                    min_sets: sets.into_iter().map(|s| s.into_iter().collect()).collect(),
                },
                _ => return Err(NetError::AmbiguousScheme),
            };
            ProtocolTree::SecretShare {
                children: children
                    .into_iter()
                    .map(tree_from_doc)
                    .collect::<Result<_, _>>()?,
                scheme,
            }
        }
    })
}

fn tree_to_doc(tree: &ProtocolTree) -> ProtoDoc {
    match tree {
        ProtocolTree::Leaf { link } => ProtoDoc::Link { id: link.0.clone() },
        ProtocolTree::Bundle { children } => ProtoDoc::Bundle {
            children: children.iter().map(tree_to_doc).collect(),
        },
        ProtocolTree::Xor { children } => ProtoDoc::Xor {
            children: children.iter().map(tree_to_doc).collect(),
        },
        ProtocolTree::Series { children, via } => ProtoDoc::Series {
            children: children.iter().map(tree_to_doc).collect(),
            via: via.iter().map(|n| n.0.clone()).collect(),
        },
        ProtocolTree::SecretShare { children, scheme } => {
            let (g, access) = match scheme {
                SsScheme::Threshold { g } => (Some(*g), None),
                SsScheme::AccessStructure { min_sets } => (
                    None,
                    Some(
                        min_sets
                            .iter()
                            .map(|s| s.iter().copied().collect())
                            .collect(),
                    ),
                ),
            };
            ProtoDoc::Ss {
                children: children.iter().map(tree_to_doc).collect(),
                g,
                access,
            }
        }
    }
}

/// Parse a UTF-8 JSON network description into a validated graph and tree.
pub fn parse_network(text: &str) -> Result<(NetworkGraph, ProtocolTree), NetError> {
    let doc: NetDoc = serde_json::from_str(text).map_err(|e| NetError::Syntax(e.to_string()))?;
    let nodes = doc.nodes.into_iter().map(NodeId::new).collect();
    let links = doc
        .links
        .into_iter()
        .map(link_from_doc)
        .collect::<Result<_, _>>()?;
    let graph = NetworkGraph::new(nodes, links)?;
    let tree = tree_from_doc(doc.protocol)?;
    validate_tree(&tree, &graph)?;
    Ok((graph, tree))
}

/// Render a graph and tree back into the network-description format.
///
/// `parse_network(&serialize_network(g, t))` returns structures equal to
/// `(g, t)` for every valid pair.
pub fn serialize_network(graph: &NetworkGraph, tree: &ProtocolTree) -> String {
    let doc = NetDoc {
        nodes: graph.nodes().map(|n| n.0.clone()).collect(),
        links: graph.links().map(link_to_doc).collect(),
        protocol: tree_to_doc(tree),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("document serialization");
    out.push('\n');
    out
}
