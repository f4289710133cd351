//! Bit-level execution of protocol trees with an exact attacker oracle.
//!
//! [`execute`] runs a validated tree: every link emits a deterministic key
//! stream derived from `(seed, link id)`, series relays announce the XOR of
//! their adjacent keys, XOR layers combine bitwise, bundles concatenate, and
//! secret-sharing layers deal over GF(q) consuming one-time-pad elements from
//! their channels. The result records both end users' keys (checked equal),
//! every public announcement in symbolic form, and a per-link consumption
//! ledger.
//!
//! [`attack`] then decides exactly what an eavesdropper learns from the
//! announcements plus a compromised element set, by GF(2) linear closure with
//! secret-sharing layers unlocked through access-structure decisions.
//! [`harness::oracle_check`] exhaustively cross-validates that oracle against
//! the vulnerability algebra of [`crate::vulnset`].

mod attack;
pub mod harness;

pub use attack::{attack, AttackResult};

use std::collections::BTreeMap;

use thiserror::Error;

use crate::gfss::{
    self, access_structure_code, element_to_bits, lc_deal, lc_recovery_vector, linear::LinearCode,
    shamir_deal, shamir_recover, GfssError, ThresholdScheme,
};
use crate::linkrates::PresetRegistry;
use crate::netgraph::{
    validate_tree, LinkId, NetError, NetworkGraph, NodeId, ProtocolTree, SsScheme,
};
use crate::prng::{fnv1a64, KeyStream, SplitMix64};
use crate::ratecalc::{protocol_rate, RateError};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Rate(#[from] RateError),
    #[error(transparent)]
    Gfss(#[from] GfssError),
    #[error(transparent)]
    Vuln(#[from] crate::vulnset::VulnError),
    #[error("rounds must be at least 1")]
    BadRounds,
    #[error("insufficient key material on link `{0}` for the requested rounds")]
    KeyMaterialExhausted(String),
    #[error("element universe of size {0} too large for exhaustive oracle check")]
    UniverseTooLarge(usize),
}

/// Hard budget per link; executions requesting more fail cleanly.
const MAX_LINK_BITS: u64 = 1 << 22;

/// XOR of boolean-variable ids, kept sorted; the symbolic form of one bit.
pub(crate) type SymFunc = Vec<u32>;

fn sym_xor(a: &SymFunc, b: &SymFunc) -> SymFunc {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// One public announcement made by a series relay: the XOR of the two
/// adjacent child keys, bit for bit.
#[derive(Debug, Clone)]
pub struct Announcement {
    pub via: NodeId,
    pub bits: Vec<bool>,
    pub(crate) funcs: Vec<SymFunc>,
}

/// What a compromised relay node sees: the full output segments of the two
/// child protocols it joins.
#[derive(Debug, Clone)]
pub(crate) struct ViaView {
    pub node: NodeId,
    pub funcs: Vec<SymFunc>,
}

#[derive(Debug, Clone)]
pub(crate) enum SsExecKind {
    Threshold {
        scheme: ThresholdScheme,
    },
    Linear {
        code: LinearCode,
        owners: Vec<Option<usize>>,
    },
}

/// Pad provenance and output variables of one secret-sharing round.
#[derive(Debug, Clone)]
pub(crate) struct SsRound {
    /// Per share slot (threshold: channel; linear: coordinate 1..n-1): the
    /// symbolic bits consumed for its pad, including rejected windows.
    pub pad_funcs: Vec<Vec<SymFunc>>,
    pub ciphertexts: Vec<u64>,
    pub output_vars: Vec<u32>,
}

#[derive(Debug, Clone)]
pub(crate) struct SsLayer {
    pub kind: SsExecKind,
    pub rounds: Vec<SsRound>,
    /// Key bits consumed per channel, counted in padded field elements.
    pub elements_per_channel: Vec<u64>,
}

/// Complete record of one protocol execution.
#[derive(Debug)]
pub struct Execution {
    /// The final shared key (both end users hold this exact string).
    pub final_key: Vec<bool>,
    /// Series-relay announcements in emission order.
    pub announcements: Vec<Announcement>,
    /// Raw key bits consumed per link.
    pub consumed_bits: BTreeMap<LinkId, u64>,
    pub(crate) num_vars: usize,
    pub(crate) var_values: Vec<bool>,
    pub(crate) link_vars: BTreeMap<LinkId, Vec<u32>>,
    pub(crate) final_funcs: Vec<SymFunc>,
    pub(crate) via_views: Vec<ViaView>,
    pub(crate) ss_layers: Vec<SsLayer>,
}

impl Execution {
    /// Padded field elements consumed per channel of secret-sharing layer
    /// `layer` (layers indexed in construction order, root first).
    pub fn ss_elements_per_channel(&self, layer: usize) -> Option<&[u64]> {
        self.ss_layers
            .get(layer)
            .map(|l| l.elements_per_channel.as_slice())
    }

    /// Announced share ciphertexts of one secret-sharing round.
    pub fn ss_round_ciphertexts(&self, layer: usize, round: usize) -> Option<&[u64]> {
        self.ss_layers
            .get(layer)
            .and_then(|l| l.rounds.get(round))
            .map(|r| r.ciphertexts.as_slice())
    }

    pub fn ss_layer_count(&self) -> usize {
        self.ss_layers.len()
    }

    /// Evaluate a symbolic function over the recorded variable values.
    pub(crate) fn eval_func(&self, func: &SymFunc) -> bool {
        func.iter()
            .fold(false, |acc, &v| acc ^ self.var_values[v as usize])
    }
}

/// Execution plan: the tree with per-node machinery resolved up front.
enum Plan {
    Leaf {
        link: LinkId,
    },
    Xor {
        children: Vec<Plan>,
    },
    Series {
        children: Vec<Plan>,
        via: Vec<NodeId>,
    },
    Bundle {
        children: Vec<Plan>,
        weights: Vec<f64>,
    },
    Ss {
        children: Vec<Plan>,
        kind: SsExecKind,
        layer_index: usize,
        round_out_bits: usize,
    },
}

impl Plan {
    fn round_bits(&self) -> Option<usize> {
        match self {
            Plan::Ss { round_out_bits, .. } => Some(*round_out_bits),
            _ => None,
        }
    }

    /// Smallest demand at which every bundled channel still contributes at
    /// least one bit. Secret-sharing layers always deal whole rounds, so
    /// they never starve their channels.
    fn min_demand(&self) -> usize {
        match self {
            Plan::Leaf { .. } | Plan::Ss { .. } => 1,
            Plan::Xor { children } | Plan::Series { children, .. } => {
                children.iter().map(Plan::min_demand).max().unwrap_or(1)
            }
            Plan::Bundle { children, .. } => children.iter().map(Plan::min_demand).sum(),
        }
    }
}

/// Smallest root demand in bits at which no bundled channel is starved.
pub fn tree_min_bits(tree: &ProtocolTree, graph: &NetworkGraph) -> Result<usize, SimError> {
    let mut planner = Planner {
        graph,
        presets: PresetRegistry::default(),
        layer_count: 0,
    };
    Ok(planner.plan(tree)?.min_demand())
}

fn smallest_prime_above(m: u64) -> u64 {
    let mut candidate = m + 1;
    loop {
        if crate::gfss::PrimeField::new(candidate).is_ok() {
            return candidate;
        }
        candidate += 1;
    }
}

struct Planner<'a> {
    graph: &'a NetworkGraph,
    presets: PresetRegistry,
    layer_count: usize,
}

impl Planner<'_> {
    fn plan(&mut self, tree: &ProtocolTree) -> Result<Plan, SimError> {
        Ok(match tree {
            ProtocolTree::Leaf { link } => Plan::Leaf { link: link.clone() },
            ProtocolTree::Xor { children } => Plan::Xor {
                children: self.plan_children(children)?,
            },
            ProtocolTree::Series { children, via } => Plan::Series {
                children: self.plan_children(children)?,
                via: via.clone(),
            },
            ProtocolTree::Bundle { children } => {
                let weights = children
                    .iter()
                    .map(|child| protocol_rate(child, self.graph, &self.presets).map(|r| r.bps()))
                    .collect::<Result<_, _>>()?;
                Plan::Bundle {
                    children: self.plan_children(children)?,
                    weights,
                }
            }
            ProtocolTree::SecretShare { children, scheme } => {
                let layer_index = self.layer_count;
                self.layer_count += 1;
                let n = children.len();
                let (kind, round_out_bits) = match scheme {
                    SsScheme::Threshold { g } => {
                        let q = smallest_prime_above((n + g) as u64);
                        let scheme = ThresholdScheme::new(q, n, *g)?;
                        let width = scheme.field().bits() as usize;
                        (SsExecKind::Threshold { scheme }, g * width)
                    }
                    SsScheme::AccessStructure { min_sets } => {
                        let (code, owners) = access_structure_code(2, n, min_sets)?;
                        (SsExecKind::Linear { code, owners }, 1)
                    }
                };
                Plan::Ss {
                    children: self.plan_children(children)?,
                    kind,
                    layer_index,
                    round_out_bits,
                }
            }
        })
    }

    fn plan_children(&mut self, children: &[ProtocolTree]) -> Result<Vec<Plan>, SimError> {
        children.iter().map(|c| self.plan(c)).collect()
    }
}

/// One pulled segment: concrete bits for both end users plus the symbolic
/// form of each bit.
struct Segment {
    bits: Vec<bool>,
    bob_bits: Vec<bool>,
    funcs: Vec<SymFunc>,
}

struct Engine<'a> {
    seed: u64,
    streams: BTreeMap<LinkId, KeyStream>,
    consumed: BTreeMap<LinkId, u64>,
    link_vars: BTreeMap<LinkId, Vec<u32>>,
    next_var: u32,
    var_values: Vec<bool>,
    announcements: Vec<Announcement>,
    via_views: Vec<ViaView>,
    ss_layers: Vec<Option<SsLayer>>,
    /// Dealer randomness per secret-sharing layer; must persist across
    /// pulls so every round uses fresh randomness.
    ss_rngs: Vec<SplitMix64>,
    _graph: &'a NetworkGraph,
}

impl<'a> Engine<'a> {
    fn new(graph: &'a NetworkGraph, seed: u64, layers: usize) -> Self {
        let ss_rngs = (0..layers)
            .map(|i| SplitMix64::new(seed ^ fnv1a64(format!("ss-layer-{i}").as_bytes())))
            .collect();
        Self {
            seed,
            streams: BTreeMap::new(),
            consumed: BTreeMap::new(),
            link_vars: BTreeMap::new(),
            next_var: 0,
            var_values: Vec::new(),
            announcements: Vec::new(),
            via_views: Vec::new(),
            ss_layers: vec![None; layers],
            ss_rngs,
            _graph: graph,
        }
    }

    fn alloc_var(&mut self, value: bool) -> u32 {
        let var = self.next_var;
        self.next_var += 1;
        self.var_values.push(value);
        var
    }

    fn pull(&mut self, plan: &Plan, demand: usize) -> Result<Segment, SimError> {
        match plan {
            Plan::Leaf { link } => self.pull_leaf(link, demand),
            Plan::Xor { children } => {
                let mut iter = children.iter();
                let first = self.pull(iter.next().expect("validated"), demand)?;
                let (mut bits, mut bob_bits, mut funcs) = (first.bits, first.bob_bits, first.funcs);
                for child in iter {
                    let segment = self.pull(child, demand)?;
                    for i in 0..demand {
                        bits[i] ^= segment.bits[i];
                        bob_bits[i] ^= segment.bob_bits[i];
                        funcs[i] = sym_xor(&funcs[i], &segment.funcs[i]);
                    }
                }
                Ok(Segment {
                    bits,
                    bob_bits,
                    funcs,
                })
            }
            Plan::Series { children, via } => {
                let segments: Vec<Segment> = children
                    .iter()
                    .map(|child| self.pull(child, demand))
                    .collect::<Result<_, _>>()?;
                // each relay announces the XOR of its two adjacent keys and,
                // if compromised, exposes both of them
                for (j, node) in via.iter().enumerate() {
                    let left = &segments[j];
                    let right = &segments[j + 1];
                    let bits = (0..demand).map(|i| left.bits[i] ^ right.bits[i]).collect();
                    let funcs = (0..demand)
                        .map(|i| sym_xor(&left.funcs[i], &right.funcs[i]))
                        .collect();
                    self.announcements.push(Announcement {
                        via: node.clone(),
                        bits,
                        funcs,
                    });
                    let mut view = left.funcs.clone();
                    view.extend(right.funcs.iter().cloned());
                    self.via_views.push(ViaView {
                        node: node.clone(),
                        funcs: view,
                    });
                }
                // the final key is the first child's key; Bob unwinds the
                // announcement telescope from his own last-hop key
                let mut bob_bits = segments[segments.len() - 1].bob_bits.clone();
                let masks = &self.announcements[self.announcements.len() - via.len()..];
                for mask in masks {
                    for (bob, &bit) in bob_bits.iter_mut().zip(&mask.bits) {
                        *bob ^= bit;
                    }
                }
                let first = &segments[0];
                Ok(Segment {
                    bits: first.bits.clone(),
                    bob_bits,
                    funcs: first.funcs.clone(),
                })
            }
            Plan::Bundle { children, weights } => {
                let minimums: Vec<usize> = children.iter().map(Plan::min_demand).collect();
                let counts = split_proportionally(demand, weights, &minimums);
                let mut bits = Vec::with_capacity(demand);
                let mut bob_bits = Vec::with_capacity(demand);
                let mut funcs = Vec::with_capacity(demand);
                for (child, count) in children.iter().zip(counts) {
                    if count == 0 {
                        continue;
                    }
                    let segment = self.pull(child, count)?;
                    bits.extend(segment.bits);
                    bob_bits.extend(segment.bob_bits);
                    funcs.extend(segment.funcs);
                }
                Ok(Segment {
                    bits,
                    bob_bits,
                    funcs,
                })
            }
            Plan::Ss {
                children,
                kind,
                layer_index,
                round_out_bits,
            } => self.pull_ss(children, kind, *layer_index, *round_out_bits, demand),
        }
    }

    fn pull_leaf(&mut self, link: &LinkId, demand: usize) -> Result<Segment, SimError> {
        let consumed = self.consumed.entry(link.clone()).or_insert(0);
        if *consumed + demand as u64 > MAX_LINK_BITS {
            return Err(SimError::KeyMaterialExhausted(link.as_str().to_owned()));
        }
        *consumed += demand as u64;
        let seed = self.seed;
        let stream = self
            .streams
            .entry(link.clone())
            .or_insert_with(|| KeyStream::new(seed, link.as_str()));
        let bits: Vec<bool> = stream.take(demand);
        let mut funcs = Vec::with_capacity(demand);
        for &bit in &bits {
            let var = self.alloc_var(bit);
            self.link_vars.entry(link.clone()).or_default().push(var);
            funcs.push(vec![var]);
        }
        Ok(Segment {
            bob_bits: bits.clone(),
            bits,
            funcs,
        })
    }

    /// Pull one pad element from a child channel: fixed-width windows, MSB
    /// first, rejecting values >= q (same convention as
    /// [`crate::gfss::element_from_bits`]).
    fn pull_pad_element(
        &mut self,
        child: &Plan,
        q: u64,
        width: usize,
    ) -> Result<(u64, u64, Vec<SymFunc>), SimError> {
        let mut provenance = Vec::new();
        loop {
            let window = self.pull(child, width)?;
            let value = window
                .bits
                .iter()
                .fold(0u64, |acc, &b| acc << 1 | u64::from(b));
            let bob_value = window
                .bob_bits
                .iter()
                .fold(0u64, |acc, &b| acc << 1 | u64::from(b));
            debug_assert_eq!(value, bob_value, "key sources are symmetric");
            provenance.extend(window.funcs);
            if value < q {
                return Ok((value, bob_value, provenance));
            }
        }
    }

    fn pull_ss(
        &mut self,
        children: &[Plan],
        kind: &SsExecKind,
        layer_index: usize,
        round_out_bits: usize,
        demand: usize,
    ) -> Result<Segment, SimError> {
        let rounds_needed = demand.div_ceil(round_out_bits);
        let mut bits = Vec::with_capacity(rounds_needed * round_out_bits);
        let mut bob_bits = Vec::with_capacity(rounds_needed * round_out_bits);
        let mut funcs = Vec::with_capacity(rounds_needed * round_out_bits);
        let mut rounds = Vec::with_capacity(rounds_needed);
        let mut elements_per_channel = vec![0u64; children.len()];

        for _ in 0..rounds_needed {
            let round = match kind {
                SsExecKind::Threshold { scheme } => {
                    let field = scheme.field().clone();
                    let width = field.bits() as usize;
                    let deal = shamir_deal(scheme, self.ss_rngs[layer_index].next_u64());

                    let mut pad_funcs = Vec::with_capacity(children.len());
                    let mut ciphertexts = Vec::with_capacity(children.len());
                    let mut bob_shares = Vec::with_capacity(children.len());
                    for (channel, child) in children.iter().enumerate() {
                        let (pad, bob_pad, provenance) =
                            self.pull_pad_element(child, field.q(), width)?;
                        let (x, share) = deal.shares[channel];
                        ciphertexts.push(field.add(share, pad));
                        bob_shares.push((x, field.sub(*ciphertexts.last().unwrap(), bob_pad)));
                        pad_funcs.push(provenance);
                        elements_per_channel[channel] += 1;
                    }

                    // Bob strips the pads and interpolates his copy
                    let bob_secret = shamir_recover(scheme, &bob_shares)?;
                    debug_assert_eq!(bob_secret, deal.secret);

                    let mut output_vars = Vec::with_capacity(round_out_bits);
                    for (&alice_coord, &bob_coord) in deal.secret.iter().zip(&bob_secret) {
                        for (a_bit, b_bit) in element_to_bits(&field, alice_coord)
                            .into_iter()
                            .zip(element_to_bits(&field, bob_coord))
                        {
                            let var = self.alloc_var(a_bit);
                            output_vars.push(var);
                            bits.push(a_bit);
                            bob_bits.push(b_bit);
                            funcs.push(vec![var]);
                        }
                    }
                    SsRound {
                        pad_funcs,
                        ciphertexts,
                        output_vars,
                    }
                }
                SsExecKind::Linear { code, owners } => {
                    let field = code.field().clone();
                    let width = field.bits() as usize;
                    let secret = field.sample(&mut self.ss_rngs[layer_index]);
                    let deal = lc_deal(code, secret, self.ss_rngs[layer_index].next_u64())?;

                    let coords = code.length() - 1;
                    let mut pad_funcs = Vec::with_capacity(coords);
                    let mut ciphertexts = Vec::with_capacity(coords);
                    let mut bob_coords = Vec::with_capacity(coords);
                    for (slot, &share) in deal.shares().iter().enumerate() {
                        let channel = owners[slot + 1].expect("share coordinates are owned");
                        let (pad, bob_pad, provenance) =
                            self.pull_pad_element(&children[channel], field.q(), width)?;
                        let cipher = field.add(share, pad);
                        ciphertexts.push(cipher);
                        bob_coords.push(field.sub(cipher, bob_pad));
                        pad_funcs.push(provenance);
                        elements_per_channel[channel] += 1;
                    }

                    // Bob recovers through the full coordinate set
                    let all: std::collections::BTreeSet<usize> = (1..code.length()).collect();
                    let vector =
                        lc_recovery_vector(code, &all)?.expect("full participant set recovers");
                    let bob_secret = gfss::recover_with_vector(code, &vector, &bob_coords);
                    debug_assert_eq!(bob_secret, secret);

                    let mut output_vars = Vec::with_capacity(width);
                    for (a_bit, b_bit) in element_to_bits(&field, secret)
                        .into_iter()
                        .zip(element_to_bits(&field, bob_secret))
                    {
                        let var = self.alloc_var(a_bit);
                        output_vars.push(var);
                        bits.push(a_bit);
                        bob_bits.push(b_bit);
                        funcs.push(vec![var]);
                    }
                    SsRound {
                        pad_funcs,
                        ciphertexts,
                        output_vars,
                    }
                }
            };
            rounds.push(round);
        }

        match &mut self.ss_layers[layer_index] {
            Some(layer) => {
                layer.rounds.extend(rounds);
                for (total, new) in layer
                    .elements_per_channel
                    .iter_mut()
                    .zip(&elements_per_channel)
                {
                    *total += new;
                }
            }
            slot @ None => {
                *slot = Some(SsLayer {
                    kind: kind.clone(),
                    rounds,
                    elements_per_channel,
                });
            }
        }

        bits.truncate(demand);
        bob_bits.truncate(demand);
        funcs.truncate(demand);
        Ok(Segment {
            bits,
            bob_bits,
            funcs,
        })
    }
}

/// Demand split for bundle children: every child is first granted its
/// minimum workable demand, then the remainder is distributed proportionally
/// to the children's rates with largest-remainder rounding (equal split when
/// all rates are zero). Demands too small to cover the minimums are handed
/// out front to back.
fn split_proportionally(demand: usize, weights: &[f64], minimums: &[usize]) -> Vec<usize> {
    let floor_total: usize = minimums.iter().sum();
    if demand <= floor_total {
        let mut remaining = demand;
        return minimums
            .iter()
            .map(|&m| {
                let take = m.min(remaining);
                remaining -= take;
                take
            })
            .collect();
    }
    let mut counts = minimums.to_vec();
    let extra = demand - floor_total;
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        let base = extra / weights.len();
        for (i, item) in counts.iter_mut().enumerate() {
            *item += base + usize::from(i < extra % weights.len());
        }
        return counts;
    }
    let ideal: Vec<f64> = weights.iter().map(|w| extra as f64 * w / total).collect();
    let floors: Vec<usize> = ideal.iter().map(|&x| x.floor() as usize).collect();
    let assigned: usize = floors.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = ideal[a] - floors[a] as f64;
        let fb = ideal[b] - floors[b] as f64;
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for (i, item) in counts.iter_mut().enumerate() {
        *item += floors[i];
    }
    for &i in order.iter().take(extra - assigned) {
        counts[i] += 1;
    }
    counts
}

/// Execute a protocol tree.
///
/// `rounds` is the number of output units at the root: secret-sharing roots
/// perform that many dealing rounds, every other root emits that many key
/// bits. Identical `(tree, graph, seed, rounds)` always produce identical
/// executions.
pub fn execute(
    tree: &ProtocolTree,
    graph: &NetworkGraph,
    seed: u64,
    rounds: usize,
) -> Result<Execution, SimError> {
    if rounds == 0 {
        return Err(SimError::BadRounds);
    }
    validate_tree(tree, graph)?;
    let mut planner = Planner {
        graph,
        presets: PresetRegistry::default(),
        layer_count: 0,
    };
    let plan = planner.plan(tree)?;
    let demand = match plan.round_bits() {
        Some(bits_per_round) => rounds * bits_per_round,
        None => rounds,
    };
    let mut engine = Engine::new(graph, seed, planner.layer_count);
    let segment = engine.pull(&plan, demand)?;
    assert_eq!(
        segment.bits, segment.bob_bits,
        "end users must agree on the final key"
    );
    Ok(Execution {
        final_key: segment.bits,
        announcements: engine.announcements,
        consumed_bits: engine.consumed,
        num_vars: engine.next_var as usize,
        var_values: engine.var_values,
        link_vars: engine.link_vars,
        final_funcs: segment.funcs,
        via_views: engine.via_views,
        ss_layers: engine.ss_layers.into_iter().map(Option::unwrap).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgraph::{Link, LinkKind, RateSpec};

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

    fn path_graph(hops: &[(&str, &str, &str)]) -> NetworkGraph {
        let mut nodes: Vec<NodeId> = Vec::new();
        let mut links = Vec::new();
        for &(a, id, b) in hops {
            for name in [a, b] {
                let node = NodeId::new(name);
                if !nodes.contains(&node) {
                    nodes.push(node);
                }
            }
            links.push(Link {
                id: LinkId::new(id),
                kind: LinkKind::Kem,
                ends: (NodeId::new(a), NodeId::new(b)),
                rate_spec: RateSpec::Explicit(8.0),
            });
        }
        NetworkGraph::new(nodes, links).unwrap()
    }

    #[test]
    fn leaf_emits_its_stream() {
        let graph = pair_graph(&["e1"]);
        let execution = execute(&ProtocolTree::leaf("e1"), &graph, 5, 16).unwrap();
        let expected = KeyStream::new(5, "e1").take(16);
        assert_eq!(execution.final_key, expected);
        assert_eq!(execution.consumed_bits[&LinkId::new("e1")], 16);
    }

    #[test]
    fn xor_combines_bitwise() {
        let graph = pair_graph(&["e1", "e2"]);
        let tree = ProtocolTree::Xor {
            children: vec![ProtocolTree::leaf("e1"), ProtocolTree::leaf("e2")],
        };
        let execution = execute(&tree, &graph, 9, 32).unwrap();
        let s1 = KeyStream::new(9, "e1").take(32);
        let s2 = KeyStream::new(9, "e2").take(32);
        let expected: Vec<bool> = s1.iter().zip(&s2).map(|(&a, &b)| a ^ b).collect();
        assert_eq!(execution.final_key, expected);
    }

    #[test]
    fn series_masks_and_delivers_first_key() {
        let graph = path_graph(&[("A", "e1", "M"), ("M", "e2", "B")]);
        let tree = ProtocolTree::Series {
            children: vec![ProtocolTree::leaf("e1"), ProtocolTree::leaf("e2")],
            via: vec![NodeId::new("M")],
        };
        let execution = execute(&tree, &graph, 3, 24).unwrap();
        let s1 = KeyStream::new(3, "e1").take(24);
        let s2 = KeyStream::new(3, "e2").take(24);
        assert_eq!(execution.final_key, s1);
        assert_eq!(execution.announcements.len(), 1);
        let expected_mask: Vec<bool> = s1.iter().zip(&s2).map(|(&a, &b)| a ^ b).collect();
        assert_eq!(execution.announcements[0].bits, expected_mask);
        assert_eq!(execution.announcements[0].via, NodeId::new("M"));
    }

    #[test]
    fn bundle_concatenates_proportionally() {
        let graph = NetworkGraph::new(
            vec![NodeId::new("A"), NodeId::new("B")],
            vec![
                Link {
                    id: LinkId::new("e1"),
                    kind: LinkKind::Kem,
                    ends: (NodeId::new("A"), NodeId::new("B")),
                    rate_spec: RateSpec::Explicit(3.0),
                },
                Link {
                    id: LinkId::new("e2"),
                    kind: LinkKind::Kem,
                    ends: (NodeId::new("A"), NodeId::new("B")),
                    rate_spec: RateSpec::Explicit(5.0),
                },
            ],
        )
        .unwrap();
        let tree = ProtocolTree::Bundle {
            children: vec![ProtocolTree::leaf("e1"), ProtocolTree::leaf("e2")],
        };
        let execution = execute(&tree, &graph, 4, 8).unwrap();
        assert_eq!(execution.consumed_bits[&LinkId::new("e1")], 3);
        assert_eq!(execution.consumed_bits[&LinkId::new("e2")], 5);
        let s1 = KeyStream::new(4, "e1").take(3);
        let s2 = KeyStream::new(4, "e2").take(5);
        let expected: Vec<bool> = s1.into_iter().chain(s2).collect();
        assert_eq!(execution.final_key, expected);
    }

    #[test]
    fn threshold_layer_accounts_consumption() {
        // five channels, g = 2: q = 11, 4-bit windows, 100 rounds
        let ids: Vec<String> = (0..5).map(|i| format!("e{i}")).collect();
        let id_refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        let graph = pair_graph(&id_refs);
        let tree = ProtocolTree::SecretShare {
            children: ids
                .iter()
                .map(|id| ProtocolTree::leaf(id.clone()))
                .collect(),
            scheme: SsScheme::Threshold { g: 2 },
        };
        let execution = execute(&tree, &graph, 7, 100).unwrap();
        // output: 100 rounds x 2 elements x 4 bits
        assert_eq!(execution.final_key.len(), 100 * 2 * 4);
        let elements = execution.ss_elements_per_channel(0).unwrap();
        assert_eq!(elements, &[100, 100, 100, 100, 100]);
        // eta in elements: 2 * 100 produced vs 5 * 100 consumed = 2/5
        let produced = 2 * 100u64;
        let consumed: u64 = elements.iter().sum();
        assert_eq!(produced as f64 / consumed as f64, 0.4);
        // raw bit consumption stays within the rejection overhead bound
        for id in &ids {
            let bits = execution.consumed_bits[&LinkId::new(id.clone())];
            assert!(bits >= 400, "at least width bits per element");
            let bound = (100.0 * 4.0 * 16.0 / 11.0) * 1.5;
            assert!((bits as f64) < bound, "{bits} exceeds rejection bound");
        }
    }

    #[test]
    fn access_structure_layer_runs_over_gf2() {
        let graph = pair_graph(&["e0", "e1", "e2"]);
        let tree = ProtocolTree::SecretShare {
            children: vec![
                ProtocolTree::leaf("e0"),
                ProtocolTree::leaf("e1"),
                ProtocolTree::leaf("e2"),
            ],
            scheme: SsScheme::AccessStructure {
                min_sets: vec![[0, 1].into(), [0, 2].into()],
            },
        };
        let execution = execute(&tree, &graph, 11, 16).unwrap();
        assert_eq!(execution.final_key.len(), 16);
        // channel 0 sits in both access sets so it holds two coordinates
        let elements = execution.ss_elements_per_channel(0).unwrap();
        assert_eq!(elements, &[32, 16, 16]);
    }

    #[test]
    fn execution_is_deterministic() {
        let graph = pair_graph(&["e1", "e2"]);
        let tree = ProtocolTree::SecretShare {
            children: vec![
                ProtocolTree::leaf("e1"),
                ProtocolTree::leaf("e2"),
                ProtocolTree::leaf("e1"),
            ],
            scheme: SsScheme::Threshold { g: 1 },
        };
        let a = execute(&tree, &graph, 42, 5).unwrap();
        let b = execute(&tree, &graph, 42, 5).unwrap();
        assert_eq!(a.final_key, b.final_key);
        assert_eq!(a.consumed_bits, b.consumed_bits);
        assert_eq!(
            a.ss_round_ciphertexts(0, 0).unwrap(),
            b.ss_round_ciphertexts(0, 0).unwrap()
        );
        let c = execute(&tree, &graph, 43, 5).unwrap();
        assert_ne!(a.final_key, c.final_key);
    }

    #[test]
    fn announcements_evaluate_to_their_bits() {
        let graph = path_graph(&[("A", "e1", "M"), ("M", "e2", "N"), ("N", "e3", "B")]);
        let tree = ProtocolTree::Series {
            children: vec![
                ProtocolTree::leaf("e1"),
                ProtocolTree::leaf("e2"),
                ProtocolTree::leaf("e3"),
            ],
            via: vec![NodeId::new("M"), NodeId::new("N")],
        };
        let execution = execute(&tree, &graph, 17, 12).unwrap();
        assert_eq!(execution.announcements.len(), 2);
        for announcement in &execution.announcements {
            for (i, &bit) in announcement.bits.iter().enumerate() {
                assert_eq!(execution.eval_func(&announcement.funcs[i]), bit);
            }
        }
        // final key functions also evaluate to the final key
        for (i, &bit) in execution.final_key.iter().enumerate() {
            assert_eq!(execution.eval_func(&execution.final_funcs[i]), bit);
        }
    }

    #[test]
    fn link_reuse_consumes_disjoint_segments() {
        let graph = pair_graph(&["e1"]);
        let tree = ProtocolTree::Xor {
            children: vec![ProtocolTree::leaf("e1"), ProtocolTree::leaf("e1")],
        };
        let execution = execute(&tree, &graph, 23, 10).unwrap();
        assert_eq!(execution.consumed_bits[&LinkId::new("e1")], 20);
        let stream = KeyStream::new(23, "e1").take(20);
        let expected: Vec<bool> = (0..10).map(|i| stream[i] ^ stream[10 + i]).collect();
        assert_eq!(execution.final_key, expected);
    }

    #[test]
    fn zero_rounds_rejected() {
        let graph = pair_graph(&["e1"]);
        assert!(matches!(
            execute(&ProtocolTree::leaf("e1"), &graph, 1, 0),
            Err(SimError::BadRounds)
        ));
    }

    #[test]
    fn absurd_demand_exhausts_key_material() {
        let graph = pair_graph(&["e1"]);
        assert!(matches!(
            execute(&ProtocolTree::leaf("e1"), &graph, 1, 1 << 23),
            Err(SimError::KeyMaterialExhausted(_))
        ));
    }

    #[test]
    fn proportional_split_is_exact_for_rational_weights() {
        assert_eq!(split_proportionally(8, &[3.0, 5.0], &[1, 1]), vec![3, 5]);
        assert_eq!(split_proportionally(10, &[1.0, 1.0], &[1, 1]), vec![5, 5]);
        assert_eq!(split_proportionally(7, &[0.0, 0.0], &[1, 1]), vec![4, 3]);
        let counts = split_proportionally(10, &[1.0, 1.0, 1.0], &[1, 1, 1]);
        assert_eq!(counts.iter().sum::<usize>(), 10);
        // every child keeps its minimum even under skewed rates
        let skewed = split_proportionally(10, &[1.0, 100.0], &[1, 1]);
        assert!(skewed[0] >= 1);
        assert_eq!(skewed.iter().sum::<usize>(), 10);
        // demands below the floor fill front to back
        assert_eq!(split_proportionally(3, &[1.0, 1.0], &[2, 2]), vec![2, 1]);
    }

    #[test]
    fn smallest_prime_above_matches_expectations() {
        assert_eq!(smallest_prime_above(7), 11);
        assert_eq!(smallest_prime_above(3), 5);
        assert_eq!(smallest_prime_above(4), 5);
        assert_eq!(smallest_prime_above(1), 2);
    }
}
