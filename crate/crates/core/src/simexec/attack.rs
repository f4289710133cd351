//! Exact eavesdropper oracle over a recorded execution.
//!
//! Eve always hears every public announcement. Compromising a link hands her
//! its full raw key stream; compromising a relay node hands her the keys that
//! node held (both adjacent child outputs of each series hop it served). Her
//! reasoning is exact linear algebra: a bit is recovered iff its symbolic
//! form lies in the GF(2) span of her known relations. Secret-sharing layers
//! are not GF(2)-linear; a layer round unlocks when Eve can replay the pads
//! of a share subset that the scheme's access structure accepts, decided
//! through the [`crate::gfss`] machinery.

use std::collections::BTreeSet;

use crate::gf2::{Basis, Row};
use crate::gfss::lc_recovery_vector;
use crate::vulnset::Element;

use super::{Execution, SsExecKind, SymFunc};

/// Outcome of one attack: how many final-key bits Eve can derive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttackResult {
    pub recovered_bit_count: usize,
    pub success: bool,
}

/// Decide exactly which final-key bits a compromised element set exposes.
pub fn attack(execution: &Execution, compromised: &BTreeSet<Element>) -> AttackResult {
    attack_from(execution, announcement_basis(execution), compromised)
}

/// Span of everything publicly announced; reusable across many attacks on
/// the same execution.
pub(crate) fn announcement_basis(execution: &Execution) -> Basis {
    let mut basis = Basis::new();
    for announcement in &execution.announcements {
        for (i, func) in announcement.funcs.iter().enumerate() {
            debug_assert_eq!(
                execution.eval_func(func),
                announcement.bits[i],
                "announcement symbolic form must evaluate to its bits"
            );
            basis.insert(row_of(execution.num_vars, func));
        }
    }
    basis
}

pub(crate) fn attack_from(
    execution: &Execution,
    mut basis: Basis,
    compromised: &BTreeSet<Element>,
) -> AttackResult {
    let num_vars = execution.num_vars;

    // compromised links reveal their entire streams
    for element in compromised {
        if let Element::Link(name) = element {
            if let Some(vars) = execution.link_vars.get(&crate::netgraph::LinkId::new(name)) {
                for &var in vars {
                    basis.insert(Row::unit(num_vars, var as usize));
                }
            }
        }
    }

    // compromised relay nodes reveal the keys they handled
    for view in &execution.via_views {
        if compromised.contains(&Element::node(view.node.as_str())) {
            for func in &view.funcs {
                basis.insert(row_of(num_vars, func));
            }
        }
    }

    // secret-sharing layers unlock round by round once Eve can replay an
    // accepted share subset's pads; unlocking can cascade upward
    let mut unlocked: Vec<Vec<bool>> = execution
        .ss_layers
        .iter()
        .map(|layer| vec![false; layer.rounds.len()])
        .collect();
    loop {
        let mut changed = false;
        for (layer_index, layer) in execution.ss_layers.iter().enumerate() {
            for (round_index, round) in layer.rounds.iter().enumerate() {
                if unlocked[layer_index][round_index] {
                    continue;
                }
                let decryptable: BTreeSet<usize> = round
                    .pad_funcs
                    .iter()
                    .enumerate()
                    .filter(|(_, provenance)| {
                        provenance
                            .iter()
                            .all(|func| basis.contains(&row_of(num_vars, func)))
                    })
                    .map(|(slot, _)| slot)
                    .collect();
                let opens = match &layer.kind {
                    SsExecKind::Threshold { scheme } => decryptable.len() == scheme.channels(),
                    SsExecKind::Linear { code, .. } => {
                        let coords: BTreeSet<usize> =
                            decryptable.iter().map(|slot| slot + 1).collect();
                        lc_recovery_vector(code, &coords)
                            .expect("coordinates are in range")
                            .is_some()
                    }
                };
                if opens {
                    unlocked[layer_index][round_index] = true;
                    changed = true;
                    for &var in &round.output_vars {
                        basis.insert(Row::unit(num_vars, var as usize));
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }

    let recovered_bit_count = execution
        .final_funcs
        .iter()
        .filter(|func| basis.contains(&row_of(num_vars, func)))
        .count();
    AttackResult {
        recovered_bit_count,
        success: recovered_bit_count >= 1,
    }
}

fn row_of(num_vars: usize, func: &SymFunc) -> Row {
    Row::from_vars(num_vars, func)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgraph::{
        Link, LinkId, LinkKind, NetworkGraph, NodeId, ProtocolTree, RateSpec, SsScheme,
    };
    use crate::simexec::execute;

    fn pair_graph(link_ids: &[&str]) -> NetworkGraph {
        let links = link_ids
            .iter()
            .map(|id| Link {
                id: LinkId::new(*id),
                kind: LinkKind::Kem,
                ends: (NodeId::new("A"), NodeId::new("B")),
                rate_spec: RateSpec::Explicit(8.0),
            })
            .collect();
        NetworkGraph::new(vec![NodeId::new("A"), NodeId::new("B")], links).unwrap()
    }

    fn links(ids: &[&str]) -> BTreeSet<Element> {
        ids.iter().map(|id| Element::link(*id)).collect()
    }

    fn nodes(ids: &[&str]) -> BTreeSet<Element> {
        ids.iter().map(|id| Element::node(*id)).collect()
    }

    #[test]
    fn xor_needs_both_links() {
        let graph = pair_graph(&["e1", "e2"]);
        let tree = ProtocolTree::Xor {
            children: vec![ProtocolTree::leaf("e1"), ProtocolTree::leaf("e2")],
        };
        let execution = execute(&tree, &graph, 1, 16).unwrap();
        assert!(!attack(&execution, &links(&["e1"])).success);
        assert!(!attack(&execution, &links(&["e2"])).success);
        assert!(!attack(&execution, &BTreeSet::new()).success);
        let both = attack(&execution, &links(&["e1", "e2"]));
        assert!(both.success);
        assert_eq!(both.recovered_bit_count, 16);
    }

    #[test]
    fn series_is_broken_by_either_link_or_relay() {
        let graph = NetworkGraph::new(
            vec![NodeId::new("A"), NodeId::new("M"), NodeId::new("B")],
            vec![
                Link {
                    id: LinkId::new("e1"),
                    kind: LinkKind::Qkd,
                    ends: (NodeId::new("A"), NodeId::new("M")),
                    rate_spec: RateSpec::Explicit(8.0),
                },
                Link {
                    id: LinkId::new("e2"),
                    kind: LinkKind::Kem,
                    ends: (NodeId::new("M"), NodeId::new("B")),
                    rate_spec: RateSpec::Explicit(8.0),
                },
            ],
        )
        .unwrap();
        let tree = ProtocolTree::Series {
            children: vec![ProtocolTree::leaf("e1"), ProtocolTree::leaf("e2")],
            via: vec![NodeId::new("M")],
        };
        let execution = execute(&tree, &graph, 2, 16).unwrap();
        // the masking identity k1 = announcement XOR k2 exposes the key
        assert!(attack(&execution, &links(&["e2"])).success);
        assert!(attack(&execution, &links(&["e1"])).success);
        assert!(attack(&execution, &nodes(&["M"])).success);
        assert!(!attack(&execution, &BTreeSet::new()).success);
    }

    #[test]
    fn threshold_opens_only_with_every_channel() {
        let graph = pair_graph(&["e1", "e2", "e3"]);
        let tree = ProtocolTree::SecretShare {
            children: vec![
                ProtocolTree::leaf("e1"),
                ProtocolTree::leaf("e2"),
                ProtocolTree::leaf("e3"),
            ],
            scheme: SsScheme::Threshold { g: 1 },
        };
        let execution = execute(&tree, &graph, 3, 4).unwrap();
        assert!(!attack(&execution, &links(&["e1", "e2"])).success);
        assert!(!attack(&execution, &links(&["e3"])).success);
        let all = attack(&execution, &links(&["e1", "e2", "e3"]));
        assert!(all.success);
        assert_eq!(all.recovered_bit_count, execution.final_key.len());
    }

    #[test]
    fn access_structure_opens_per_listed_set() {
        let graph = pair_graph(&["e0", "e1", "e2", "e3"]);
        let tree = ProtocolTree::SecretShare {
            children: vec![
                ProtocolTree::leaf("e0"),
                ProtocolTree::leaf("e1"),
                ProtocolTree::leaf("e2"),
                ProtocolTree::leaf("e3"),
            ],
            scheme: SsScheme::AccessStructure {
                min_sets: vec![[0, 1].into(), [0, 2].into(), [0, 3].into()],
            },
        };
        let execution = execute(&tree, &graph, 5, 8).unwrap();
        assert!(attack(&execution, &links(&["e0", "e1"])).success);
        assert!(attack(&execution, &links(&["e0", "e2"])).success);
        assert!(attack(&execution, &links(&["e0", "e3"])).success);
        assert!(!attack(&execution, &links(&["e1", "e2", "e3"])).success);
        assert!(!attack(&execution, &links(&["e0"])).success);
    }

    #[test]
    fn ss_unlock_cascades_through_outer_xor() {
        // XOR(SS(e1, e2), e3): Eve needs the ss output and e3
        let graph = pair_graph(&["e1", "e2", "e3"]);
        let tree = ProtocolTree::Xor {
            children: vec![
                ProtocolTree::SecretShare {
                    children: vec![ProtocolTree::leaf("e1"), ProtocolTree::leaf("e2")],
                    scheme: SsScheme::AccessStructure {
                        min_sets: vec![[0, 1].into()],
                    },
                },
                ProtocolTree::leaf("e3"),
            ],
        };
        let execution = execute(&tree, &graph, 8, 6).unwrap();
        assert!(!attack(&execution, &links(&["e1", "e2"])).success);
        assert!(!attack(&execution, &links(&["e3"])).success);
        assert!(attack(&execution, &links(&["e1", "e2", "e3"])).success);
    }

    #[test]
    fn announcements_alone_reveal_nothing() {
        let graph = pair_graph(&["e1", "e2", "e3", "e4"]);
        let tree = ProtocolTree::Xor {
            children: vec![
                ProtocolTree::SecretShare {
                    children: vec![
                        ProtocolTree::leaf("e1"),
                        ProtocolTree::leaf("e2"),
                        ProtocolTree::leaf("e3"),
                    ],
                    scheme: SsScheme::Threshold { g: 2 },
                },
                ProtocolTree::leaf("e4"),
            ],
        };
        let execution = execute(&tree, &graph, 13, 2).unwrap();
        let result = attack(&execution, &BTreeSet::new());
        assert_eq!(result.recovered_bit_count, 0);
        assert!(!result.success);
    }

    #[test]
    fn compromising_unused_elements_changes_nothing() {
        let graph = pair_graph(&["e1", "e2"]);
        let execution = execute(&ProtocolTree::leaf("e1"), &graph, 2, 8).unwrap();
        assert!(!attack(&execution, &links(&["e2"])).success);
        assert!(attack(&execution, &links(&["e1", "e2"])).success);
    }
}
