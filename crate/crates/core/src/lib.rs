//! Modeling toolkit for hybrid PQC-QKD key-distribution networks.
//!
//! A network is a multigraph of nodes joined by QKD and KEM links, each link
//! acting as a rated symmetric-key source. An end-to-end key protocol between
//! two users is described by a [`netgraph::ProtocolTree`]: leaf links combined
//! by series relaying, XOR parallelism, uncombined bundling, or secret
//! sharing. On top of that model the crate provides:
//!
//! - [`ratecalc`]: recursive end-to-end secret-key rate evaluation;
//! - [`vulnset`]: the vulnerability-set algebra (which element sets expose the
//!   final key) with superset purging down to the minimal antichain;
//! - [`linkrates`]: physical-layer rate models (asymptotic decoy-state BB84
//!   versus distance, KEM throughput from cycle counts);
//! - [`gfss`]: prime-field secret sharing, both the threshold scheme with
//!   multi-element secrets and linear-code schemes with explicit access
//!   structures;
//! - [`kms`]: an executable model of the central-KMS relay protocol and its
//!   parameterized vulnerability families;
//! - [`simexec`]: a bit-level executor for arbitrary protocol trees with a
//!   linear-algebraic attacker that ground-truths both the rate calculus and
//!   the vulnerability algebra.

pub mod gf2;
pub mod gfss;
pub mod kms;
pub mod linkrates;
pub mod netgraph;
pub mod prng;
pub mod ratecalc;
pub mod sets;
pub mod simexec;
pub mod vulnset;

pub use netgraph::{NetworkGraph, ProtocolTree};
pub use ratecalc::Rate;
pub use vulnset::{Element, VulnerabilitySet};
