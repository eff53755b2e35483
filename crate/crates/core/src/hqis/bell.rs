//! Logical Bell basis and the polarization ⊗ quasi-Bell expansion audit.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{HybridError, Result};
use crate::label::{CoherentLabel, Label, PolLabel};
use crate::logical::{logical_state, split_logical, LogicalQubit, SPAN_TOLERANCE};
use crate::state::{HybridState, Mode, ModeRegistry, Term};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LogicalBellOutcome {
    #[serde(rename = "phiL+")]
    PhiPlus,
    #[serde(rename = "phiL-")]
    PhiMinus,
    #[serde(rename = "psiL+")]
    PsiPlus,
    #[serde(rename = "psiL-")]
    PsiMinus,
}

impl LogicalBellOutcome {
    pub const ALL: [Self; 4] = [Self::PhiPlus, Self::PhiMinus, Self::PsiPlus, Self::PsiMinus];

    /// Components over |00⟩, |01⟩, |10⟩, |11⟩.
    pub fn components(self) -> [f64; 4] {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            Self::PhiPlus => [r, 0.0, 0.0, r],
            Self::PhiMinus => [r, 0.0, 0.0, -r],
            Self::PsiPlus => [0.0, r, r, 0.0],
            Self::PsiMinus => [0.0, r, -r, 0.0],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::PhiPlus => "phiL+",
            Self::PhiMinus => "phiL-",
            Self::PsiPlus => "psiL+",
            Self::PsiMinus => "psiL-",
        }
    }
}

impl fmt::Display for LogicalBellOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for LogicalBellOutcome {
    type Err = HybridError;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| HybridError::InvalidParams(format!("unknown Bell outcome {s:?}")))
    }
}

/// Unnormalized remainders ⟨B|s⟩ for the four logical Bell states on (q1, q2),
/// in [`LogicalBellOutcome::ALL`] order.
pub fn bell_branches(s: &HybridState, q1: &LogicalQubit, q2: &LogicalQubit) -> Result<Vec<(LogicalBellOutcome, HybridState)>> {
    let split = split_logical(s, &[q1.clone(), q2.clone()])?;
    if split.residual > SPAN_TOLERANCE {
        return Err(HybridError::OutsideLogicalSpan(split.residual));
    }
    let zero = HybridState::zero(split.branches[0].registry().clone(), s.alpha());
    LogicalBellOutcome::ALL
        .into_iter()
        .map(|o| {
            let mut acc = zero.clone();
            for (c, b) in o.components().iter().zip(&split.branches) {
                if *c != 0.0 {
                    acc = acc.add_scaled(b, C64::new(*c, 0.0))?;
                }
            }
            Ok((o, acc))
        })
        .collect()
}

/// A logical Bell state on two logical qubits.
pub fn logical_bell_state(alpha: f64, q1: &LogicalQubit, q2: &LogicalQubit, o: LogicalBellOutcome) -> Result<HybridState> {
    let amps: Vec<C64> = o.components().iter().map(|&x| C64::new(x, 0.0)).collect();
    logical_state(alpha, &[q1.clone(), q2.clone()], &amps)
}

/// Basis in which the polarization Bell states |φ±⟩, |ψ±⟩ are written.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolConvention {
    /// |0⟩, |1⟩ = |H⟩, |V⟩.
    HorizontalVertical,
    /// |0⟩, |1⟩ = |+⟩, |-⟩ (the labels the logical qubits use).
    Diagonal,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PolBell {
    #[serde(rename = "phi+")]
    PhiPlus,
    #[serde(rename = "phi-")]
    PhiMinus,
    #[serde(rename = "psi+")]
    PsiPlus,
    #[serde(rename = "psi-")]
    PsiMinus,
}

impl PolBell {
    pub const ALL: [Self; 4] = [Self::PhiPlus, Self::PhiMinus, Self::PsiPlus, Self::PsiMinus];

    fn logical(self) -> LogicalBellOutcome {
        match self {
            Self::PhiPlus => LogicalBellOutcome::PhiPlus,
            Self::PhiMinus => LogicalBellOutcome::PhiMinus,
            Self::PsiPlus => LogicalBellOutcome::PsiPlus,
            Self::PsiMinus => LogicalBellOutcome::PsiMinus,
        }
    }

    /// Components over the diagonal product basis |++⟩, |+-⟩, |-+⟩, |--⟩.
    pub fn diagonal_components(self, conv: PolConvention) -> [f64; 4] {
        let comps = self.logical().components();
        match conv {
            PolConvention::Diagonal => comps,
            PolConvention::HorizontalVertical => {
                // basis change: |H⟩ = (|+⟩+|-⟩)/√2, |V⟩ = (|+⟩-|-⟩)/√2
                let hv = [PolLabel::hv_in_diagonal(false), PolLabel::hv_in_diagonal(true)];
                let mut out = [0.0; 4];
                for (k, c) in comps.iter().enumerate() {
                    let (i, j) = (k >> 1, k & 1);
                    for (p, a) in hv[i] {
                        for (q, b) in hv[j] {
                            out[pol_index(p) * 2 + pol_index(q)] += c * a * b;
                        }
                    }
                }
                out
            }
        }
    }
}

fn pol_index(p: PolLabel) -> usize {
    match p {
        PolLabel::Plus => 0,
        PolLabel::Minus => 1,
    }
}

impl fmt::Display for PolBell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::PhiPlus => "phi+",
            Self::PhiMinus => "phi-",
            Self::PsiPlus => "psi+",
            Self::PsiMinus => "psi-",
        })
    }
}

/// Coherent quasi-Bell states |φ±⟩ = N±(|α,α⟩ ± |-α,-α⟩), |ψ±⟩ = N±(|α,-α⟩ ± |-α,α⟩).
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum QuasiBell {
    #[serde(rename = "phi_+")]
    PhiPlus,
    #[serde(rename = "phi_-")]
    PhiMinus,
    #[serde(rename = "psi_+")]
    PsiPlus,
    #[serde(rename = "psi_-")]
    PsiMinus,
}

impl QuasiBell {
    pub const ALL: [Self; 4] = [Self::PhiPlus, Self::PhiMinus, Self::PsiPlus, Self::PsiMinus];

    pub fn is_plus(self) -> bool {
        matches!(self, Self::PhiPlus | Self::PsiPlus)
    }

    /// N± = [2(1 ± e^{-4α²})]^{-1/2}.
    pub fn normalizer(self, alpha: f64) -> f64 {
        let e = (-4.0 * alpha * alpha).exp();
        let s = if self.is_plus() { 1.0 + e } else { 1.0 - e };
        (2.0 * s).powf(-0.5)
    }

    pub fn state(self, alpha: f64, m1: &str, m2: &str) -> HybridState {
        let (x, y) = match self {
            Self::PhiPlus | Self::PhiMinus => (1, 1),
            Self::PsiPlus | Self::PsiMinus => (1, -1),
        };
        let sign = if self.is_plus() { 1.0 } else { -1.0 };
        let n = self.normalizer(alpha);
        let reg = ModeRegistry::new(vec![Mode::coh(m1), Mode::coh(m2)]).expect("distinct");
        let l = |v: i64| Label::Coh(CoherentLabel::from_ints(v, 0));
        HybridState::new(reg, vec![Term::new(n, vec![l(x), l(y)]), Term::new(sign * n, vec![l(-x), l(-y)])], alpha)
            .expect("valid labels")
    }
}

impl fmt::Display for QuasiBell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::PhiPlus => "phi_+",
            Self::PhiMinus => "phi_-",
            Self::PsiPlus => "psi_+",
            Self::PsiMinus => "psi_-",
        })
    }
}

/// One product term c·|pol⟩|quasi⟩ of an expansion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionTerm {
    pub pol: PolBell,
    pub quasi: QuasiBell,
    pub coefficient: f64,
    /// coefficient · N_quasi; ±1/2 when the weights are 1/(2N±).
    pub scaled_by_normalizer: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BellIdentity {
    pub logical: LogicalBellOutcome,
    pub convention: PolConvention,
    pub terms: Vec<ExpansionTerm>,
    /// ‖LHS - Σ terms‖ / ‖LHS‖.
    pub residual: f64,
    /// Every term has |coefficient| = 1/(2N) within 1e-12.
    pub weights_are_half_inverse_normalizers: bool,
    /// Printed (sign, pol, quasi) pairs, ±1/√2 overall and no normalizer weights.
    pub printed: Vec<(f64, PolBell, QuasiBell)>,
    /// The derived terms pair the same states with the same relative signs
    /// as the printed identity.
    pub matches_printed_pairs: bool,
    /// ‖LHS - printed unweighted RHS‖ / ‖LHS‖.
    pub printed_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BellAudit {
    pub alpha: f64,
    pub n_plus: f64,
    pub n_minus: f64,
    pub identities: Vec<BellIdentity>,
}

impl BellAudit {
    pub fn max_residual(&self) -> f64 {
        self.identities.iter().map(|i| i.residual).fold(0.0, f64::max)
    }

    pub fn all_weights_half_inverse_normalizers(&self) -> bool {
        self.identities.iter().all(|i| i.weights_are_half_inverse_normalizers)
    }
}

/// Right-hand sides as printed next to the logical Bell definitions.
pub fn printed_identity(o: LogicalBellOutcome) -> Vec<(f64, PolBell, QuasiBell)> {
    use PolBell as P;
    use QuasiBell as Q;
    match o {
        LogicalBellOutcome::PhiPlus => vec![(1.0, P::PhiPlus, Q::PhiPlus), (1.0, P::PsiPlus, Q::PhiMinus)],
        LogicalBellOutcome::PhiMinus => vec![(1.0, P::PhiPlus, Q::PhiPlus), (-1.0, P::PsiPlus, Q::PhiMinus)],
        LogicalBellOutcome::PsiPlus => vec![(1.0, P::PsiPlus, Q::PsiPlus), (1.0, P::PsiMinus, Q::PsiMinus)],
        LogicalBellOutcome::PsiMinus => vec![(1.0, P::PsiPlus, Q::PsiPlus), (-1.0, P::PsiMinus, Q::PsiMinus)],
    }
}

const P1: &str = "p1";
const P2: &str = "p2";
const C1: &str = "c1";
const C2: &str = "c2";

fn product(alpha: f64, pol: PolBell, conv: PolConvention, quasi: QuasiBell) -> HybridState {
    let reg = ModeRegistry::new(vec![Mode::pol(P1), Mode::pol(P2), Mode::coh(C1), Mode::coh(C2)]).expect("distinct");
    let q = quasi.state(alpha, C1, C2);
    let pols = [PolLabel::Plus, PolLabel::Minus];
    let mut terms = Vec::new();
    for (k, c) in pol.diagonal_components(conv).iter().enumerate() {
        if *c == 0.0 {
            continue;
        }
        for t in q.terms() {
            let mut labels = vec![Label::Pol(pols[k >> 1]), Label::Pol(pols[k & 1])];
            labels.extend(t.labels.iter().copied());
            terms.push(Term::new(t.amplitude * *c, labels));
        }
    }
    HybridState::new(reg, terms, alpha).expect("valid labels")
}

/// ⟨pol|s⟩ over the two polarization modes, a state on (c1, c2).
fn contract_pol(s: &HybridState, pol: PolBell, conv: PolConvention) -> Result<HybridState> {
    let comps = pol.diagonal_components(conv);
    let (i1, i2) = (s.registry().polarization_index(P1)?, s.registry().polarization_index(P2)?);
    let (j1, j2) = (s.registry().coherent_index(C1)?, s.registry().coherent_index(C2)?);
    let reg = ModeRegistry::new(vec![Mode::coh(C1), Mode::coh(C2)])?;
    let terms = s
        .terms()
        .iter()
        .map(|t| {
            let k = pol_index(t.labels[i1].as_pol().expect("pol")) * 2 + pol_index(t.labels[i2].as_pol().expect("pol"));
            Term::new(t.amplitude * comps[k], vec![t.labels[j1], t.labels[j2]])
        })
        .collect();
    HybridState::new(reg, terms, s.alpha())
}

fn identity(alpha: f64, o: LogicalBellOutcome, conv: PolConvention) -> Result<BellIdentity> {
    let (q1, q2) = (LogicalQubit::new(P1, C1), LogicalQubit::new(P2, C2));
    let lhs = logical_bell_state(alpha, &q1, &q2, o)?.aligned_to(product(alpha, PolBell::PhiPlus, conv, QuasiBell::PhiPlus).registry())?;
    let quasi: Vec<HybridState> = QuasiBell::ALL.iter().map(|q| q.state(alpha, C1, C2)).collect();
    let gram = DMatrix::from_fn(4, 4, |i, j| quasi[i].inner_product(&quasi[j]).expect("same registry"));
    let lu = gram.lu();

    let mut terms = Vec::new();
    let mut rhs = HybridState::zero(lhs.registry().clone(), alpha);
    for pol in PolBell::ALL {
        let r = contract_pol(&lhs, pol, conv)?;
        let v = DVector::from_fn(4, |i, _| quasi[i].inner_product(&r).expect("same registry"));
        let x = lu.solve(&v).ok_or_else(|| HybridError::InvalidParams("singular quasi-Bell Gram matrix".into()))?;
        for (k, q) in QuasiBell::ALL.into_iter().enumerate() {
            let c = x[k];
            if c.norm() < 1e-12 {
                continue;
            }
            rhs = rhs.add_scaled(&product(alpha, pol, conv, q), c)?;
            terms.push(ExpansionTerm { pol, quasi: q, coefficient: c.re, scaled_by_normalizer: c.re * q.normalizer(alpha) });
        }
    }
    let lhs_norm = lhs.norm_sqr().sqrt();
    let residual = lhs.add_scaled(&rhs, C64::new(-1.0, 0.0))?.norm_sqr().max(0.0).sqrt() / lhs_norm;
    let weights_are_half_inverse_normalizers = !terms.is_empty() && terms.iter().all(|t| (t.scaled_by_normalizer.abs() - 0.5).abs() < 1e-12);

    let printed = printed_identity(o);
    let mut printed_rhs = HybridState::zero(lhs.registry().clone(), alpha);
    for (sign, pol, q) in &printed {
        printed_rhs = printed_rhs.add_scaled(&product(alpha, *pol, conv, *q), C64::new(sign * std::f64::consts::FRAC_1_SQRT_2, 0.0))?;
    }
    let printed_residual = lhs.add_scaled(&printed_rhs, C64::new(-1.0, 0.0))?.norm_sqr().max(0.0).sqrt() / lhs_norm;
    // same (pol, quasi) pairs with the printed relative signs, up to one global sign
    let global = terms
        .iter()
        .find(|t| t.pol == printed[0].1 && t.quasi == printed[0].2)
        .map(|t| t.scaled_by_normalizer.signum() * printed[0].0);
    let matches_printed_pairs = terms.len() == printed.len()
        && global.is_some_and(|g| {
            printed.iter().all(|(sign, pol, q)| {
                terms
                    .iter()
                    .find(|t| t.pol == *pol && t.quasi == *q)
                    .is_some_and(|t| (t.scaled_by_normalizer - 0.5 * sign * g).abs() < 1e-12)
            })
        });
    Ok(BellIdentity {
        logical: o,
        convention: conv,
        terms,
        residual,
        weights_are_half_inverse_normalizers,
        printed,
        matches_printed_pairs,
        printed_residual,
    })
}

/// Expands every logical Bell state into polarization Bell ⊗ quasi-Bell
/// products, in both polarization conventions.
///
/// The exact expansion is |B_L⟩ = (±|b⟩|q₊⟩/N₊ ± |b′⟩|q₋⟩/N₋)/2: the quasi-Bell
/// factors carry weights 1/(2N±), which tend to 1/√2 only as α → ∞.
pub fn verify_bell_decomposition(alpha: f64) -> Result<BellAudit> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(HybridError::InvalidParams(format!("alpha must be positive, got {alpha}")));
    }
    let mut identities = Vec::new();
    for conv in [PolConvention::HorizontalVertical, PolConvention::Diagonal] {
        for o in LogicalBellOutcome::ALL {
            identities.push(identity(alpha, o, conv)?);
        }
    }
    Ok(BellAudit {
        alpha,
        n_plus: QuasiBell::PhiPlus.normalizer(alpha),
        n_minus: QuasiBell::PhiMinus.normalizer(alpha),
        identities,
    })
}

impl fmt::Display for BellAudit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "alpha = {}  N+ = {:.12}  N- = {:.12}", self.alpha, self.n_plus, self.n_minus)?;
        for id in &self.identities {
            let conv = match id.convention {
                PolConvention::HorizontalVertical => "H/V",
                PolConvention::Diagonal => "+/-",
            };
            let rhs: Vec<String> = id
                .terms
                .iter()
                .map(|t| {
                    let n = if t.quasi.is_plus() { "N+" } else { "N-" };
                    format!("{:+}·|{}⟩|{}⟩/{}", 2.0 * t.scaled_by_normalizer, t.pol, t.quasi, n)
                })
                .collect();
            writeln!(
                f,
                "[{conv}] |{}⟩ = ({}) / 2   residual {:.2e}   printed pairs {}   unweighted printed residual {:.3e}",
                id.logical,
                rhs.join(" "),
                id.residual,
                if id.matches_printed_pairs { "match" } else { "DIFFER" },
                id.printed_residual
            )?;
        }
        Ok(())
    }
}
