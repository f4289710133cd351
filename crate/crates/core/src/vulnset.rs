//! Vulnerability-set algebra for protocol trees.
//!
//! A vulnerability is a set of network elements (links and nodes) whose joint
//! compromise exposes at least one bit of the final shared key. Each
//! combinator has a construction rule; superset purging afterwards yields the
//! minimal vulnerability set, the antichain whose upward closure is the total
//! vulnerability set. Compromise semantics are binary at one-bit granularity,
//! matching the execution oracle in [`crate::simexec`].

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::netgraph::{Link, NetError, NetworkGraph, NodeId, ProtocolTree, SsScheme};
use crate::sets::prune_supersets;

#[derive(Debug, Error, PartialEq)]
pub enum VulnError {
    #[error("empty vulnerability set has no summary")]
    EmptySet,
    #[error(transparent)]
    Net(#[from] NetError),
}

/// A network element: either a node or a link. Names are globally unique
/// across both namespaces, so ordering and display use the bare id.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Element {
    Node(String),
    Link(String),
}

impl Element {
    pub fn node(name: impl Into<String>) -> Self {
        Element::Node(name.into())
    }

    pub fn link(name: impl Into<String>) -> Self {
        Element::Link(name.into())
    }

    pub fn id(&self) -> &str {
        match self {
            Element::Node(name) | Element::Link(name) => name,
        }
    }
}

impl Ord for Element {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.id().cmp(other.id())
    }
}

impl PartialOrd for Element {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// A non-empty set of elements that, attacked as a unit, exposes the key.
pub type Vulnerability = BTreeSet<Element>;

/// A family of vulnerabilities, kept in canonical (lexicographic) order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VulnerabilitySet {
    members: BTreeSet<Vulnerability>,
}

impl VulnerabilitySet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_members(members: impl IntoIterator<Item = Vulnerability>) -> Self {
        Self {
            members: members.into_iter().collect(),
        }
    }

    pub fn singleton(element: Element) -> Self {
        Self::from_members([[element].into()])
    }

    pub fn members(&self) -> impl Iterator<Item = &Vulnerability> {
        self.members.iter()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn union(mut self, other: VulnerabilitySet) -> Self {
        self.members.extend(other.members);
        self
    }

    /// True iff no member is a strict superset of another member.
    pub fn is_minimal(&self) -> bool {
        let members: Vec<Vulnerability> = self.members.iter().cloned().collect();
        crate::sets::is_antichain(&members)
    }

    /// Canonical one-line rendering: each member as `{a,b}` sorted, members
    /// in lexicographic order, one per line.
    pub fn render_lines(&self) -> Vec<String> {
        self.members
            .iter()
            .map(|v| {
                let ids: Vec<&str> = v.iter().map(Element::id).collect();
                format!("{{{}}}", ids.join(","))
            })
            .collect()
    }
}

impl FromIterator<Vulnerability> for VulnerabilitySet {
    fn from_iter<I: IntoIterator<Item = Vulnerability>>(iter: I) -> Self {
        Self::from_members(iter)
    }
}

/// Vulnerability set of a bare link protocol: the link itself.
pub fn leaf_vuln(link: &Link) -> VulnerabilitySet {
    VulnerabilitySet::singleton(Element::link(link.id.as_str()))
}

/// Series rule: any child's vulnerabilities carry over, and every
/// intermediate relay node is a vulnerability on its own.
pub fn series_vuln(child_sets: &[VulnerabilitySet], via: &[NodeId]) -> VulnerabilitySet {
    let mut all: Vec<Vulnerability> = Vec::new();
    for set in child_sets {
        all.extend(set.members().cloned());
    }
    for node in via {
        all.push([Element::node(node.as_str())].into());
    }
    minimize(VulnerabilitySet::from_members(all))
}

/// XOR rule: Eve needs one vulnerability from every child, so the result is
/// the family of unions across the children's sets.
pub fn xor_vuln(child_sets: &[VulnerabilitySet]) -> VulnerabilitySet {
    let mut acc: Vec<Vulnerability> = vec![BTreeSet::new()];
    for set in child_sets {
        let mut next = Vec::with_capacity(acc.len() * set.len().max(1));
        for partial in &acc {
            for member in set.members() {
                let mut merged = partial.clone();
                merged.extend(member.iter().cloned());
                next.push(merged);
            }
        }
        acc = next;
    }
    // an empty child list leaves the single empty union, which is not a
    // vulnerability; callers guarantee at least one child
    acc.retain(|v| !v.is_empty());
    minimize(VulnerabilitySet::from_members(acc))
}

/// Secret-sharing rule: one XOR-style union per access set, all unioned.
///
/// A threshold layer exposes nothing until every share is readable, so its
/// access structure is the single all-children set.
pub fn ss_vuln(child_sets: &[VulnerabilitySet], scheme: &SsScheme) -> VulnerabilitySet {
    let access: Vec<BTreeSet<usize>> = match scheme {
        SsScheme::Threshold { .. } => vec![(0..child_sets.len()).collect()],
        SsScheme::AccessStructure { min_sets } => min_sets.clone(),
    };
    let mut out = VulnerabilitySet::empty();
    for set in access {
        let chosen: Vec<VulnerabilitySet> = set.iter().map(|&i| child_sets[i].clone()).collect();
        out = out.union(xor_vuln(&chosen));
    }
    minimize(out)
}

/// Purge members having a strict subset in the family. Idempotent and
/// compromise-preserving.
pub fn minimize(set: VulnerabilitySet) -> VulnerabilitySet {
    VulnerabilitySet {
        members: prune_supersets(set.members.into_iter().collect()),
    }
}

/// Construct the minimal vulnerability set of a whole protocol tree.
pub fn protocol_vuln(
    tree: &ProtocolTree,
    graph: &NetworkGraph,
) -> Result<VulnerabilitySet, VulnError> {
    let set = match tree {
        ProtocolTree::Leaf { link } => {
            let link = graph
                .link(link)
                .ok_or_else(|| NetError::UnknownLink(link.as_str().to_owned()))?;
            leaf_vuln(link)
        }
        ProtocolTree::Bundle { children } => {
            // every child's compromise exposes that child's portion of the
            // concatenated stream
            let mut out = VulnerabilitySet::empty();
            for child in children {
                out = out.union(protocol_vuln(child, graph)?);
            }
            minimize(out)
        }
        ProtocolTree::Series { children, via } => {
            let sets = child_sets(children, graph)?;
            series_vuln(&sets, via)
        }
        ProtocolTree::Xor { children } => {
            let sets = child_sets(children, graph)?;
            xor_vuln(&sets)
        }
        ProtocolTree::SecretShare { children, scheme } => {
            let sets = child_sets(children, graph)?;
            ss_vuln(&sets, scheme)
        }
    };
    Ok(set)
}

fn child_sets(
    children: &[ProtocolTree],
    graph: &NetworkGraph,
) -> Result<Vec<VulnerabilitySet>, VulnError> {
    children
        .iter()
        .map(|child| protocol_vuln(child, graph))
        .collect()
}

/// True iff some vulnerability is entirely contained in `compromised`, i.e.
/// `compromised` lies in the upward closure of the set.
pub fn is_compromised(v_min: &VulnerabilitySet, compromised: &BTreeSet<Element>) -> bool {
    v_min.members().any(|v| v.is_subset(compromised))
}

/// Smallest member cardinality and member count: the default security
/// figures of merit for a minimal vulnerability set.
pub fn security_summary(v_min: &VulnerabilitySet) -> Result<(usize, usize), VulnError> {
    let min_attack_size = v_min
        .members()
        .map(BTreeSet::len)
        .min()
        .ok_or(VulnError::EmptySet)?;
    Ok((min_attack_size, v_min.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgraph::{LinkId, LinkKind, RateSpec};

    fn vuln(ids: &[&str]) -> Vulnerability {
        ids.iter()
            .map(|id| {
                if id.chars().next().unwrap().is_uppercase() {
                    Element::node(*id)
                } else {
                    Element::link(*id)
                }
            })
            .collect()
    }

    fn vset(families: &[&[&str]]) -> VulnerabilitySet {
        VulnerabilitySet::from_members(families.iter().map(|ids| vuln(ids)))
    }

    #[test]
    fn leaf_is_a_singleton_of_a_singleton() {
        let link = Link {
            id: LinkId::new("q_AY"),
            kind: LinkKind::Qkd,
            ends: (NodeId::new("A"), NodeId::new("Y")),
            rate_spec: RateSpec::Explicit(1.0),
        };
        assert_eq!(leaf_vuln(&link), vset(&[&["q_AY"]]));
    }

    #[test]
    fn series_adds_relay_nodes() {
        let out = series_vuln(
            &[vset(&[&["q_AY"]]), vset(&[&["k_YB"]])],
            &[NodeId::new("Y")],
        );
        assert_eq!(out, vset(&[&["q_AY"], &["Y"], &["k_YB"]]));
    }

    #[test]
    fn series_with_single_child_is_identity() {
        let child = vset(&[&["a", "b"]]);
        assert_eq!(series_vuln(std::slice::from_ref(&child), &[]), child);
    }

    #[test]
    fn series_through_x_matches_worked_example() {
        let out = series_vuln(
            &[vset(&[&["k_AX", "q_AX"]]), vset(&[&["k_XB"]])],
            &[NodeId::new("X")],
        );
        assert_eq!(out, vset(&[&["k_AX", "q_AX"], &["X"], &["k_XB"]]));
    }

    #[test]
    fn xor_takes_cross_unions() {
        let out = xor_vuln(&[vset(&[&["q_AX"]]), vset(&[&["k_AX"]])]);
        assert_eq!(out, vset(&[&["q_AX", "k_AX"]]));
    }

    #[test]
    fn xor_union_absorbs_common_element() {
        let v = vset(&[&["e", "x"], &["e", "y"]]);
        let out = xor_vuln(&[v.clone(), vset(&[&["e"]])]);
        assert_eq!(out, v);
    }

    #[test]
    fn xor_of_two_relay_paths_gives_nine_members() {
        let p_axb = vset(&[&["k_AX", "q_AX"], &["X"], &["k_XB"]]);
        let p_ayb = vset(&[&["q_AY"], &["Y"], &["k_YB"]]);
        let out = xor_vuln(&[p_axb, p_ayb]);
        let expected = vset(&[
            &["k_AX", "q_AX", "q_AY"],
            &["k_AX", "q_AX", "Y"],
            &["k_AX", "q_AX", "k_YB"],
            &["X", "q_AY"],
            &["X", "Y"],
            &["X", "k_YB"],
            &["k_XB", "q_AY"],
            &["k_XB", "Y"],
            &["k_XB", "k_YB"],
        ]);
        assert_eq!(out, expected);
    }

    #[test]
    fn ss_with_access_structure() {
        let children = [
            vset(&[&["l1"]]),
            vset(&[&["l2"]]),
            vset(&[&["l3"]]),
            vset(&[&["l4"]]),
        ];
        let scheme = SsScheme::AccessStructure {
            min_sets: vec![[0, 1].into(), [0, 2].into(), [0, 3].into()],
        };
        let out = ss_vuln(&children, &scheme);
        assert_eq!(out, vset(&[&["l1", "l2"], &["l1", "l3"], &["l1", "l4"]]));
    }

    #[test]
    fn ss_threshold_requires_every_share() {
        let children = [vset(&[&["l1"]]), vset(&[&["l2"]]), vset(&[&["l3"]])];
        let out = ss_vuln(&children, &SsScheme::Threshold { g: 1 });
        assert_eq!(out, vset(&[&["l1", "l2", "l3"]]));
    }

    #[test]
    fn ss_single_access_set_over_one_child() {
        let child = vset(&[&["a"], &["b", "c"]]);
        let out = ss_vuln(
            std::slice::from_ref(&child),
            &SsScheme::AccessStructure {
                min_sets: vec![[0].into()],
            },
        );
        assert_eq!(out, child);
    }

    #[test]
    fn minimize_purges_supersets() {
        assert_eq!(minimize(vset(&[&["a"], &["a", "b"]])), vset(&[&["a"]]));
        let already = vset(&[&["a", "b"], &["b", "c"]]);
        assert_eq!(minimize(already.clone()), already);
        assert_eq!(
            minimize(vset(&[&["a", "b"], &["b", "c"], &["a", "b", "c"]])),
            vset(&[&["a", "b"], &["b", "c"]])
        );
    }

    #[test]
    fn minimize_is_idempotent() {
        let set = vset(&[&["a", "b"], &["b"], &["c", "d"], &["a", "c", "d"]]);
        let once = minimize(set);
        let twice = minimize(once.clone());
        assert_eq!(once, twice);
    }

    #[test]
    fn compromise_queries() {
        let v = vset(&[&["a"], &["b", "c"]]);
        assert!(is_compromised(&v, &vuln(&["b", "c", "d"])));
        assert!(!is_compromised(&v, &vuln(&["b"])));
        assert!(is_compromised(&v, &vuln(&["a"])));
        assert!(!is_compromised(&v, &BTreeSet::new()));
    }

    #[test]
    fn minimize_preserves_compromise_semantics() {
        let raw = vset(&[&["a", "b"], &["a"], &["b", "c"], &["a", "b", "c"]]);
        let min = minimize(raw.clone());
        // every subset of the universe agrees before and after purging
        let universe = ["a", "b", "c"];
        for bits in 0..8u32 {
            let subset: BTreeSet<Element> = universe
                .iter()
                .enumerate()
                .filter(|(i, _)| bits >> i & 1 == 1)
                .map(|(_, id)| Element::link(*id))
                .collect();
            assert_eq!(is_compromised(&raw, &subset), is_compromised(&min, &subset));
        }
    }

    #[test]
    fn summary_counts_and_errors() {
        assert_eq!(
            security_summary(&vset(&[&["a"], &["b", "c"]])).unwrap(),
            (1, 2)
        );
        assert_eq!(
            security_summary(&vset(&[&["a", "b", "c"]])).unwrap(),
            (3, 1)
        );
        assert_eq!(
            security_summary(&VulnerabilitySet::empty()),
            Err(VulnError::EmptySet)
        );
    }

    #[test]
    fn whole_tree_drives_the_rules() {
        use crate::netgraph::ProtocolTree as T;
        let graph = NetworkGraph::new(
            ["A", "B", "X", "Y"].map(NodeId::new).to_vec(),
            vec![
                Link {
                    id: LinkId::new("q_AY"),
                    kind: LinkKind::Qkd,
                    ends: (NodeId::new("A"), NodeId::new("Y")),
                    rate_spec: RateSpec::Explicit(1.0),
                },
                Link {
                    id: LinkId::new("k_YB"),
                    kind: LinkKind::Kem,
                    ends: (NodeId::new("Y"), NodeId::new("B")),
                    rate_spec: RateSpec::Explicit(1.0),
                },
                Link {
                    id: LinkId::new("q_AX"),
                    kind: LinkKind::Qkd,
                    ends: (NodeId::new("A"), NodeId::new("X")),
                    rate_spec: RateSpec::Explicit(1.0),
                },
                Link {
                    id: LinkId::new("k_AX"),
                    kind: LinkKind::Kem,
                    ends: (NodeId::new("A"), NodeId::new("X")),
                    rate_spec: RateSpec::Explicit(1.0),
                },
                Link {
                    id: LinkId::new("k_XB"),
                    kind: LinkKind::Kem,
                    ends: (NodeId::new("X"), NodeId::new("B")),
                    rate_spec: RateSpec::Explicit(1.0),
                },
            ],
        )
        .unwrap();
        let tree = T::Xor {
            children: vec![
                T::Series {
                    children: vec![
                        T::Xor {
                            children: vec![T::leaf("q_AX"), T::leaf("k_AX")],
                        },
                        T::leaf("k_XB"),
                    ],
                    via: vec![NodeId::new("X")],
                },
                T::Series {
                    children: vec![T::leaf("q_AY"), T::leaf("k_YB")],
                    via: vec![NodeId::new("Y")],
                },
            ],
        };
        let out = protocol_vuln(&tree, &graph).unwrap();
        assert_eq!(out.len(), 9);
        assert!(is_compromised(
            &out,
            &[Element::node("X"), Element::node("Y")].into()
        ));
        assert_eq!(security_summary(&out).unwrap(), (2, 9));
        assert!(out.is_minimal());

        let lines = out.render_lines();
        assert_eq!(lines[0], "{X,Y}");
    }

    #[test]
    fn bundle_exposes_each_child_separately() {
        let graph = NetworkGraph::new(
            ["A", "B"].map(NodeId::new).to_vec(),
            vec![
                Link {
                    id: LinkId::new("e1"),
                    kind: LinkKind::Kem,
                    ends: (NodeId::new("A"), NodeId::new("B")),
                    rate_spec: RateSpec::Explicit(1.0),
                },
                Link {
                    id: LinkId::new("e2"),
                    kind: LinkKind::Kem,
                    ends: (NodeId::new("A"), NodeId::new("B")),
                    rate_spec: RateSpec::Explicit(1.0),
                },
            ],
        )
        .unwrap();
        let tree = ProtocolTree::Bundle {
            children: vec![ProtocolTree::leaf("e1"), ProtocolTree::leaf("e2")],
        };
        let out = protocol_vuln(&tree, &graph).unwrap();
        assert_eq!(out, vset(&[&["e1"], &["e2"]]));
    }

    #[test]
    fn xor_result_ignores_child_order() {
        let a = vset(&[&["p"], &["q", "r"]]);
        let b = vset(&[&["s"]]);
        assert_eq!(xor_vuln(&[a.clone(), b.clone()]), xor_vuln(&[b, a]));
    }
}
