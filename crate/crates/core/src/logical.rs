//! Logical hybrid qubits.
//!
//! A logical qubit is a (polarization, coherent) mode pair with basis
//! |0_L⟩ = |+⟩|α⟩ and |1_L⟩ = |-⟩|-α⟩. The polarization factor makes the two
//! basis states exactly orthogonal even though |±α⟩ overlap, so projections
//! and partial traces over logical qubits are ordinary finite-dimensional
//! linear algebra.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{HybridError, Result};
use crate::label::{CoherentLabel, Label, PolLabel};
use crate::state::{HybridState, Mode, ModeRegistry, Term, NORM_TOLERANCE};

/// Relative weight outside the logical span tolerated by projections.
pub const SPAN_TOLERANCE: f64 = 1e-10;

pub type DensityMatrix = DMatrix<C64>;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LogicalQubit {
    pub pol_mode: String,
    pub cs_mode: String,
}

impl LogicalQubit {
    pub fn new(pol_mode: impl Into<String>, cs_mode: impl Into<String>) -> Self {
        Self { pol_mode: pol_mode.into(), cs_mode: cs_mode.into() }
    }

    pub fn modes(&self) -> [Mode; 2] {
        [Mode::pol(&self.pol_mode), Mode::coh(&self.cs_mode)]
    }

    pub fn basis_labels(bit: usize) -> (PolLabel, CoherentLabel) {
        if bit == 0 {
            (PolLabel::Plus, CoherentLabel::plus())
        } else {
            (PolLabel::Minus, CoherentLabel::minus())
        }
    }
}

/// A state written as Σ_j |j_L⟩ ⊗ |rest_j⟩ over a set of logical qubits.
///
/// `branches[j]` is the unnormalized remainder on all other modes; the bit
/// of qubit 0 is the most significant bit of `j`.
#[derive(Clone, Debug)]
pub struct LogicalSplit {
    pub qubits: Vec<LogicalQubit>,
    pub branches: Vec<HybridState>,
    /// Relative weight outside the logical span.
    pub residual: f64,
}

impl LogicalSplit {
    pub fn weight(&self, index: usize) -> f64 {
        self.branches[index].norm_sqr()
    }
}

/// Projects `s` onto the logical basis of `qubits`.
pub fn split_logical(s: &HybridState, qubits: &[LogicalQubit]) -> Result<LogicalSplit> {
    let reg = s.registry();
    let mut kept = Vec::with_capacity(qubits.len());
    for q in qubits {
        kept.push((reg.polarization_index(&q.pol_mode)?, reg.coherent_index(&q.cs_mode)?));
    }
    let kept_set: Vec<usize> = kept.iter().flat_map(|&(p, c)| [p, c]).collect();
    for (i, idx) in kept_set.iter().enumerate() {
        if kept_set[..i].contains(idx) {
            return Err(HybridError::DuplicateMode(reg.modes()[*idx].name.clone()));
        }
    }
    let rest_idx: Vec<usize> = (0..reg.len()).filter(|i| !kept_set.contains(i)).collect();
    let rest_reg = ModeRegistry::new(rest_idx.iter().map(|&i| reg.modes()[i].clone()).collect())?;
    let alpha = s.alpha();
    let basis = [LogicalQubit::basis_labels(0).1, LogicalQubit::basis_labels(1).1];

    let dim = 1usize << qubits.len();
    let mut buckets: Vec<Vec<Term>> = vec![Vec::new(); dim];
    for t in s.terms() {
        let mut index = 0usize;
        let mut coeff = 1.0;
        for &(p, c) in &kept {
            let bit = match t.labels[p] {
                Label::Pol(PolLabel::Plus) => 0,
                _ => 1,
            };
            index = (index << 1) | bit;
            let x = t.labels[c].as_coh().expect("coherent mode");
            if x != basis[bit] {
                let d = (x.value() - basis[bit].value()) * alpha;
                coeff *= (-0.5 * d * d).exp();
            }
        }
        if coeff == 0.0 {
            continue;
        }
        let labels = rest_idx.iter().map(|&i| t.labels[i]).collect();
        buckets[index].push(Term { amplitude: t.amplitude * coeff, labels });
    }
    let branches: Vec<HybridState> =
        buckets.into_iter().map(|terms| s.with_terms(rest_reg.clone(), terms)).collect();
    let total = s.norm_sqr();
    let inside: f64 = branches.iter().map(|b| b.norm_sqr()).sum();
    let residual = if total > NORM_TOLERANCE { ((total - inside) / total).max(0.0) } else { 0.0 };
    Ok(LogicalSplit { qubits: qubits.to_vec(), branches, residual })
}

/// Like [`split_logical`] but fails when support leaks outside the span.
pub fn split_logical_checked(s: &HybridState, qubits: &[LogicalQubit]) -> Result<LogicalSplit> {
    let split = split_logical(s, qubits)?;
    if split.residual > SPAN_TOLERANCE {
        return Err(HybridError::OutsideLogicalSpan(split.residual));
    }
    Ok(split)
}

/// (⟨bit_L| ⊗ 1)|s⟩ on the remaining modes, unnormalized.
pub fn project_logical(s: &HybridState, qubit: &LogicalQubit, bit: usize) -> Result<HybridState> {
    let mut split = split_logical_checked(s, std::slice::from_ref(qubit))?;
    Ok(split.branches.swap_remove(bit))
}

/// Reduced density matrix over the logical basis of `keep`, tracing out
/// every other mode of `s`.
///
/// The traced modes need not be logical: the partial trace uses the exact
/// overlaps ⟨rest_k|rest_j⟩ of the remainder states.
pub fn reduced_density_logical(s: &HybridState, keep: &[LogicalQubit]) -> Result<DensityMatrix> {
    let split = split_logical_checked(s, keep)?;
    let dim = split.branches.len();
    let trace: f64 = split.branches.iter().map(|b| b.norm_sqr()).sum();
    if !(trace > NORM_TOLERANCE) {
        return Err(HybridError::ZeroNorm);
    }
    let mut rho = DensityMatrix::zeros(dim, dim);
    for j in 0..dim {
        for k in 0..dim {
            rho[(j, k)] = split.branches[k].inner_unchecked(&split.branches[j]) / trace;
        }
    }
    Ok(rho)
}

/// Builds Σ_j amps[j] |j_L⟩ over `qubits` (qubit 0 most significant).
pub fn logical_state(alpha: f64, qubits: &[LogicalQubit], amps: &[C64]) -> Result<HybridState> {
    let n = qubits.len();
    if amps.len() != 1usize << n {
        return Err(HybridError::InvalidParams(format!(
            "{} amplitudes for {} logical qubits",
            amps.len(),
            n
        )));
    }
    let modes: Vec<Mode> = qubits.iter().flat_map(|q| q.modes()).collect();
    let registry = ModeRegistry::new(modes)?;
    let terms = amps
        .iter()
        .enumerate()
        .filter(|(_, a)| **a != C64::new(0.0, 0.0))
        .map(|(j, a)| {
            let labels = (0..n)
                .flat_map(|q| {
                    let bit = (j >> (n - 1 - q)) & 1;
                    let (p, c) = LogicalQubit::basis_labels(bit);
                    [Label::Pol(p), Label::Coh(c)]
                })
                .collect();
            Term { amplitude: *a, labels }
        })
        .collect();
    HybridState::new(registry, terms, alpha)
}

/// Dense logical amplitudes of a state whose modes are exactly `qubits`.
pub fn logical_amplitudes(s: &HybridState, qubits: &[LogicalQubit]) -> Result<Vec<C64>> {
    let split = split_logical_checked(s, qubits)?;
    if !split.branches.first().map(|b| b.registry().is_empty()).unwrap_or(true) {
        return Err(HybridError::RegistryMismatch("state has modes outside the given qubits".into()));
    }
    Ok(split
        .branches
        .iter()
        .map(|b| b.terms().first().map(|t| t.amplitude).unwrap_or_default())
        .collect())
}
