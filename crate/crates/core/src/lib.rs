//! Exact simulation of hybrid polarization/coherent-state optical states.
//!
//! The crate builds Omega-type hybrid entangled states, runs the linear-optical
//! entanglement concentration sequence on them (beamsplitters, vacuum
//! post-selection, photon-number discards), evaluates success probabilities
//! and parameter sweeps, and runs hierarchical quantum information splitting
//! over the concentrated channel.
//!
//! Module map:
//! - [`label`], [`state`]: exact labels and the [`HybridState`] term representation.
//! - [`logical`]: logical hybrid qubits |0_L⟩ = |+⟩|α⟩, |1_L⟩ = |-⟩|-α⟩.
//! - [`optics`]: beamsplitter, vacuum post-selection, photon-number discard, logical Paulis.
//! - [`ecp`], [`sweep`]: the concentration pipeline and parameter sweeps.
//! - [`hqis`]: the hierarchical splitting protocol and the logical-Bell audit.
//! - [`dump`]: JSON state dump.

// `!(x > tol)` is deliberate throughout: NaN must fail the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dump;
pub mod ecp;
pub mod error;
pub mod exec;
pub mod hqis;
pub mod label;
pub mod logical;
pub mod optics;
pub mod state;
pub mod sweep;

pub use error::{HybridError, Result};
pub use label::{CoherentLabel, Label, PolLabel};
pub use state::{coherent_overlap, HybridState, Mode, ModeKind, ModeRegistry, Term};

pub use num_complex::Complex64 as C64;
