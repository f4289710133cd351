//! End-to-end secret-key generation rate of a protocol tree.
//!
//! Every leaf link carries a rate; combinators compose them: bundles of
//! uncombined channels add, series and XOR combinations are limited by their
//! slowest member, and a secret-sharing layer delivers its secret length per
//! bottleneck round. Combination and classical-communication costs are taken
//! as zero and buffers as unbounded.

use thiserror::Error;

use crate::linkrates::{self, LinkRateError, PresetRegistry};
use crate::netgraph::{Link, NetError, NetworkGraph, ProtocolTree, RateSpec, SsScheme};

#[derive(Debug, Error, PartialEq)]
pub enum RateError {
    #[error(transparent)]
    Link(#[from] LinkRateError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error("rate must be finite and non-negative, got {0}")]
    InvalidRate(f64),
}

/// A key-distribution rate in bits per second; finite and non-negative.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Rate(f64);

impl Rate {
    pub fn new(bps: f64) -> Result<Self, RateError> {
        if !bps.is_finite() || bps < 0.0 {
            return Err(RateError::InvalidRate(bps));
        }
        Ok(Self(bps))
    }

    /// Clamp negative values to zero; non-finite input still panics in debug
    /// via [`Rate::new`] in callers that require validation.
    pub fn clamped(bps: f64) -> Self {
        Self(bps.max(0.0))
    }

    pub fn bps(self) -> f64 {
        self.0
    }
}

/// Resolve one link's rate from its specification.
pub fn link_rate(link: &Link, presets: &PresetRegistry) -> Result<Rate, RateError> {
    match &link.rate_spec {
        RateSpec::Explicit(bps) => Ok(Rate::new(*bps)?),
        RateSpec::QkdPreset {
            preset,
            distance_km,
        } => Ok(linkrates::qkd_rate(presets.qkd(preset)?, *distance_km)?),
        RateSpec::KemPreset { preset } => Ok(linkrates::kem_rate(presets.kem(preset)?)?),
    }
}

/// Evaluate the end-to-end rate of a validated protocol tree.
pub fn protocol_rate(
    tree: &ProtocolTree,
    graph: &NetworkGraph,
    presets: &PresetRegistry,
) -> Result<Rate, RateError> {
    match tree {
        ProtocolTree::Leaf { link } => {
            let link = graph
                .link(link)
                .ok_or_else(|| NetError::UnknownLink(link.as_str().to_owned()))?;
            link_rate(link, presets)
        }
        ProtocolTree::Bundle { children } => {
            let mut total = 0.0;
            for child in children {
                total += protocol_rate(child, graph, presets)?.bps();
            }
            Ok(Rate::clamped(total))
        }
        ProtocolTree::Series { children, .. } | ProtocolTree::Xor { children } => {
            min_child_rate(children, graph, presets)
        }
        ProtocolTree::SecretShare { children, scheme } => {
            let bottleneck = min_child_rate(children, graph, presets)?;
            let secret_len = match scheme {
                SsScheme::Threshold { g } => *g as f64,
                // single-secret linear code: one secret coordinate per round
                SsScheme::AccessStructure { .. } => 1.0,
            };
            Ok(Rate::clamped(secret_len * bottleneck.bps()))
        }
    }
}

fn min_child_rate(
    children: &[ProtocolTree],
    graph: &NetworkGraph,
    presets: &PresetRegistry,
) -> Result<Rate, RateError> {
    let mut min: Option<f64> = None;
    for child in children {
        let rate = protocol_rate(child, graph, presets)?.bps();
        min = Some(match min {
            Some(current) => current.min(rate),
            None => rate,
        });
    }
    min.map(Rate::clamped)
        .ok_or(RateError::Net(NetError::NoChildren))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgraph::{LinkId, LinkKind, NodeId};

    fn star_graph(rates: &[f64]) -> (NetworkGraph, Vec<LinkId>) {
        let nodes = vec![NodeId::new("A"), NodeId::new("B")];
        let mut links = Vec::new();
        let mut ids = Vec::new();
        for (i, &bps) in rates.iter().enumerate() {
            let id = LinkId::new(format!("e{i}"));
            ids.push(id.clone());
            links.push(Link {
                id,
                kind: LinkKind::Kem,
                ends: (NodeId::new("A"), NodeId::new("B")),
                rate_spec: RateSpec::Explicit(bps),
            });
        }
        (NetworkGraph::new(nodes, links).unwrap(), ids)
    }

    fn leaves(ids: &[LinkId]) -> Vec<ProtocolTree> {
        ids.iter()
            .map(|id| ProtocolTree::Leaf { link: id.clone() })
            .collect()
    }

    #[test]
    fn explicit_rate_passes_through() {
        let (graph, ids) = star_graph(&[1000.0]);
        let presets = PresetRegistry::default();
        let tree = ProtocolTree::Leaf {
            link: ids[0].clone(),
        };
        assert_eq!(
            protocol_rate(&tree, &graph, &presets).unwrap().bps(),
            1000.0
        );
    }

    #[test]
    fn qkd_preset_leaf_reproduces_published_rate() {
        let graph = NetworkGraph::new(
            vec![NodeId::new("A"), NodeId::new("B")],
            vec![Link {
                id: LinkId::new("q1"),
                kind: LinkKind::Qkd,
                ends: (NodeId::new("A"), NodeId::new("B")),
                rate_spec: RateSpec::QkdPreset {
                    preset: "commercial".into(),
                    distance_km: 10.0,
                },
            }],
        )
        .unwrap();
        let presets = PresetRegistry::default();
        let rate = protocol_rate(&ProtocolTree::leaf("q1"), &graph, &presets)
            .unwrap()
            .bps();
        assert!((2.113e7..=2.134e7).contains(&rate), "{rate}");
    }

    #[test]
    fn kem_preset_leaf() {
        let graph = NetworkGraph::new(
            vec![NodeId::new("A"), NodeId::new("B")],
            vec![Link {
                id: LinkId::new("k1"),
                kind: LinkKind::Kem,
                ends: (NodeId::new("A"), NodeId::new("B")),
                rate_spec: RateSpec::KemPreset {
                    preset: "kyber1024-pc".into(),
                },
            }],
        )
        .unwrap();
        let presets = PresetRegistry::default();
        let rate = protocol_rate(&ProtocolTree::leaf("k1"), &graph, &presets)
            .unwrap()
            .bps();
        assert!((rate - 3.0720e6).abs() <= 0.001 * 3.0720e6, "{rate}");
    }

    #[test]
    fn unknown_preset_is_an_error() {
        let graph = NetworkGraph::new(
            vec![NodeId::new("A"), NodeId::new("B")],
            vec![Link {
                id: LinkId::new("k1"),
                kind: LinkKind::Kem,
                ends: (NodeId::new("A"), NodeId::new("B")),
                rate_spec: RateSpec::KemPreset {
                    preset: "unbenchmarked".into(),
                },
            }],
        )
        .unwrap();
        let presets = PresetRegistry::default();
        assert!(matches!(
            protocol_rate(&ProtocolTree::leaf("k1"), &graph, &presets),
            Err(RateError::Link(LinkRateError::UnknownKemPreset(_)))
        ));
    }

    #[test]
    fn series_takes_the_minimum() {
        let (graph, ids) = star_graph(&[2.123e7, 1e9]);
        let presets = PresetRegistry::default();
        // degenerate two-child series over parallel links through no shared
        // relay is not valid network-wise, so evaluate rule arithmetic via Xor
        // and an explicit Series over a path graph below.
        let tree = ProtocolTree::Xor {
            children: leaves(&ids),
        };
        assert_eq!(
            protocol_rate(&tree, &graph, &presets).unwrap().bps(),
            2.123e7
        );

        let path = NetworkGraph::new(
            vec![NodeId::new("A"), NodeId::new("M"), NodeId::new("B")],
            vec![
                Link {
                    id: LinkId::new("e0"),
                    kind: LinkKind::Qkd,
                    ends: (NodeId::new("A"), NodeId::new("M")),
                    rate_spec: RateSpec::Explicit(2.123e7),
                },
                Link {
                    id: LinkId::new("e1"),
                    kind: LinkKind::Kem,
                    ends: (NodeId::new("M"), NodeId::new("B")),
                    rate_spec: RateSpec::Explicit(1e9),
                },
            ],
        )
        .unwrap();
        let tree = ProtocolTree::Series {
            children: vec![ProtocolTree::leaf("e0"), ProtocolTree::leaf("e1")],
            via: vec![NodeId::new("M")],
        };
        assert_eq!(
            protocol_rate(&tree, &path, &presets).unwrap().bps(),
            2.123e7
        );
    }

    #[test]
    fn xor_rate_is_min_regardless_of_width() {
        let (graph, ids) = star_graph(&[5.0, 5.0, 5.0, 5.0]);
        let presets = PresetRegistry::default();
        let tree = ProtocolTree::Xor {
            children: leaves(&ids),
        };
        // n equal channels at K yield K: information ratio 1/n.
        assert_eq!(protocol_rate(&tree, &graph, &presets).unwrap().bps(), 5.0);
    }

    #[test]
    fn threshold_scales_bottleneck_by_secret_length() {
        let (graph, ids) = star_graph(&[7.0, 9.0, 11.0, 13.0, 20.0]);
        let presets = PresetRegistry::default();
        let tree = ProtocolTree::SecretShare {
            children: leaves(&ids),
            scheme: SsScheme::Threshold { g: 2 },
        };
        // g * min = 2 * 7: information ratio 2/5 against five channels.
        assert_eq!(protocol_rate(&tree, &graph, &presets).unwrap().bps(), 14.0);
    }

    #[test]
    fn access_structure_uses_single_secret_coordinate() {
        let (graph, ids) = star_graph(&[8.0, 3.0, 4.0]);
        let presets = PresetRegistry::default();
        let tree = ProtocolTree::SecretShare {
            children: leaves(&ids),
            scheme: SsScheme::AccessStructure {
                min_sets: vec![[0, 1].into(), [0, 2].into()],
            },
        };
        assert_eq!(protocol_rate(&tree, &graph, &presets).unwrap().bps(), 3.0);
    }

    #[test]
    fn bundle_adds() {
        let (graph, ids) = star_graph(&[3.0, 5.0]);
        let presets = PresetRegistry::default();
        let tree = ProtocolTree::Bundle {
            children: leaves(&ids),
        };
        assert_eq!(protocol_rate(&tree, &graph, &presets).unwrap().bps(), 8.0);
    }

    #[test]
    fn rate_rejects_negative_and_non_finite() {
        assert!(Rate::new(-1.0).is_err());
        assert!(Rate::new(f64::NAN).is_err());
        assert!(Rate::new(f64::INFINITY).is_err());
        assert_eq!(Rate::clamped(-3.0).bps(), 0.0);
    }

    #[test]
    fn children_order_does_not_change_rate() {
        let (graph, ids) = star_graph(&[4.0, 9.0, 2.0]);
        let presets = PresetRegistry::default();
        let forward = ProtocolTree::Xor {
            children: leaves(&ids),
        };
        let mut reversed_ids = ids.clone();
        reversed_ids.reverse();
        let reversed = ProtocolTree::Xor {
            children: leaves(&reversed_ids),
        };
        assert_eq!(
            protocol_rate(&forward, &graph, &presets).unwrap().bps(),
            protocol_rate(&reversed, &graph, &presets).unwrap().bps()
        );
    }
}
