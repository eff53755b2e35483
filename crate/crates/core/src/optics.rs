//! Linear-optical elements acting on [`HybridState`]s.
//!
//! Every element comes in two semantics selected by [`FidelityMode`]:
//! `Ideal` treats coherent labels as if they were orthogonal detector
//! outcomes (a label-0 mode is "no photon", ±c are "indistinguishable by
//! photon number"); `Exact` applies the true projectors |0⟩⟨0| and |n⟩⟨n|.

use std::fmt;

use num_complex::Complex64 as C64;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{HybridError, Result};
use crate::label::{CoherentLabel, Label, PolLabel};
use crate::logical::{split_logical, LogicalQubit, SPAN_TOLERANCE};
use crate::state::{HybridState, Term, NORM_TOLERANCE};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FidelityMode {
    #[default]
    Ideal,
    Exact,
}

impl fmt::Display for FidelityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FidelityMode::Ideal => "ideal",
            FidelityMode::Exact => "exact",
        })
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementKind {
    VacuumPostselect,
    PhotonParity,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Accepted,
    Rejected,
    Even,
    Odd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeProbability {
    pub outcome: Outcome,
    pub probability: f64,
}

/// One detector event, with the full outcome distribution it was drawn from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub mode: String,
    pub kind: MeasurementKind,
    pub fidelity_mode: FidelityMode,
    pub outcome: Outcome,
    pub branch_probability: f64,
    /// Set when an exact photon count resolved n = 0 on a mode that also
    /// carries vacuum-labelled terms.
    #[serde(default)]
    pub zero_photons: bool,
    pub distribution: Vec<OutcomeProbability>,
}

impl MeasurementRecord {
    pub fn total_probability(&self) -> f64 {
        self.distribution.iter().map(|o| o.probability).sum()
    }
}

/// 50:50 beamsplitter on two coherent modes: labels (x, y) become
/// ((x + y)/√2, (x - y)/√2); polarization and amplitudes are untouched.
pub fn apply_beamsplitter(s: &HybridState, m1: &str, m2: &str) -> Result<HybridState> {
    let i = s.registry().coherent_index(m1)?;
    let j = s.registry().coherent_index(m2)?;
    if i == j {
        return Err(HybridError::DuplicateMode(m1.to_string()));
    }
    Ok(s.map_terms(|t| {
        let mut labels = t.labels.clone();
        let x = t.labels[i].as_coh().expect("coherent");
        let y = t.labels[j].as_coh().expect("coherent");
        labels[i] = Label::Coh((x + y).div_sqrt2());
        labels[j] = Label::Coh((x - y).div_sqrt2());
        Term { amplitude: t.amplitude, labels }
    }))
}

#[derive(Clone, Debug)]
pub struct VacuumResult {
    /// Normalized post-measurement state without `mode`; the zero vector when
    /// nothing survives.
    pub state: HybridState,
    /// Exact: the acceptance probability. Ideal: ‖kept‖²/‖s‖², which may exceed 1.
    pub probability: f64,
    pub record: MeasurementRecord,
}

/// Keeps the no-photon outcome on `mode` and removes the mode.
pub fn postselect_vacuum(s: &HybridState, mode: &str, fm: FidelityMode) -> Result<VacuumResult> {
    let i = s.registry().coherent_index(mode)?;
    let alpha = s.alpha();
    let projected = match fm {
        FidelityMode::Ideal => s.drop_mode_with(i, |t| {
            if t.labels[i].as_coh().is_some_and(|x| x.is_zero()) {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }),
        FidelityMode::Exact => s.drop_mode_with(i, |t| {
            let x = t.labels[i].as_coh().expect("coherent").value() * alpha;
            C64::new((-0.5 * x * x).exp(), 0.0)
        }),
    };
    let total = s.norm_sqr();
    if !(total > NORM_TOLERANCE) {
        return Err(HybridError::ZeroNorm);
    }
    let kept = projected.norm_sqr();
    // Label-level post-selection is not a contraction: when kept and dropped
    // terms interfere destructively the kept part can outweigh the whole, and
    // the ratio is a bookkeeping weight above 1. Only the projector is clamped.
    let probability = match fm {
        FidelityMode::Ideal => (kept / total).max(0.0),
        FidelityMode::Exact => (kept / total).clamp(0.0, 1.0),
    };
    let state = if kept > NORM_TOLERANCE {
        projected.normalize()?
    } else {
        HybridState::zero(projected.registry().clone(), alpha)
    };
    let record = MeasurementRecord {
        mode: mode.to_string(),
        kind: MeasurementKind::VacuumPostselect,
        fidelity_mode: fm,
        outcome: Outcome::Accepted,
        branch_probability: probability,
        zero_photons: true,
        distribution: vec![
            OutcomeProbability { outcome: Outcome::Accepted, probability },
            OutcomeProbability { outcome: Outcome::Rejected, probability: 1.0 - probability },
        ],
    };
    Ok(VacuumResult { state, probability, record })
}

/// One exact photon-count branch after discarding a mode.
#[derive(Clone, Debug)]
pub struct ParityBranch {
    pub outcome: Outcome,
    pub zero_photons: bool,
    pub probability: f64,
    /// Normalized, sign-corrected state without the measured mode.
    pub state: HybridState,
}

/// Nonzero magnitude shared by all labels on mode `i`, if any, and whether a
/// zero label occurs.
fn label_magnitudes(s: &HybridState, i: usize, mode: &str) -> Result<(Option<CoherentLabel>, bool)> {
    let mut mag: Option<CoherentLabel> = None;
    let mut has_zero = false;
    for t in s.terms() {
        let x = t.labels[i].as_coh().expect("coherent");
        if x.is_zero() {
            has_zero = true;
            continue;
        }
        let m = x.abs();
        match mag {
            None => mag = Some(m),
            Some(prev) if prev != m => return Err(HybridError::NonuniformMagnitude(mode.to_string())),
            _ => {}
        }
    }
    Ok((mag, has_zero))
}

fn partner_flip(state: &HybridState, partner: Option<&str>) -> Result<HybridState> {
    let Some(p) = partner else {
        return Ok(state.clone());
    };
    let j = state.registry().coherent_index(p)?;
    Ok(state.map_terms(|t| {
        let neg = t.labels[j].as_coh().is_some_and(|x| x.signum() < 0);
        Term { amplitude: if neg { -t.amplitude } else { t.amplitude }, labels: t.labels.clone() }
    }))
}

/// Enumerates the exact photon-count outcomes on `mode` and discards it.
///
/// The labels on `mode` must have one nonzero magnitude `c`, optionally
/// mixed with vacuum labels. For n ≥ 1 the conditional state depends on n
/// only through its parity, since ⟨n|-cα⟩ = (-1)ⁿ⟨n|cα⟩; the vacuum count
/// is its own branch when vacuum-labelled terms are present. On odd counts
/// the terms whose `partner` label is negative are sign-flipped, undoing
/// the (-1)ⁿ phase when the partner is perfectly correlated with `mode`.
pub fn photon_count_branches(s: &HybridState, mode: &str, partner: Option<&str>) -> Result<Vec<ParityBranch>> {
    let i = s.registry().coherent_index(mode)?;
    let total = s.norm_sqr();
    if !(total > NORM_TOLERANCE) {
        return Err(HybridError::ZeroNorm);
    }
    let alpha = s.alpha();
    let (mag, has_zero) = label_magnitudes(s, i, mode)?;
    let Some(c) = mag else {
        let state = s.drop_mode_with(i, |_| C64::new(1.0, 0.0)).normalize()?;
        return Ok(vec![ParityBranch { outcome: Outcome::Even, zero_photons: true, probability: 1.0, state }]);
    };
    let x2 = (c.value() * alpha).powi(2);
    let decay = (-x2).exp();

    let nonzero = |t: &Term| !t.labels[i].as_coh().expect("coherent").is_zero();
    let even = s.drop_mode_with(i, |t| if nonzero(t) { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
    let odd = s.drop_mode_with(i, |t| {
        let x = t.labels[i].as_coh().expect("coherent");
        match x.signum() {
            0 => C64::new(0.0, 0.0),
            sg => C64::new(sg as f64, 0.0),
        }
    });

    let mut raw: Vec<(Outcome, bool, f64, HybridState)> = Vec::with_capacity(3);
    if has_zero {
        let vac = s.drop_mode_with(i, |t| {
            let x = t.labels[i].as_coh().expect("coherent").value() * alpha;
            C64::new((-0.5 * x * x).exp(), 0.0)
        });
        let p0 = vac.norm_sqr() / total;
        raw.push((Outcome::Even, true, p0, vac));
        // Σ_{n even, n≥2} e^{-x} xⁿ/n! = (1 + e^{-2x})/2 - e^{-x}
        let w = 0.5 * (1.0 + (-2.0 * x2).exp()) - decay;
        raw.push((Outcome::Even, false, w * even.norm_sqr() / total, even));
    } else {
        let w = 0.5 * (1.0 + (-2.0 * x2).exp());
        raw.push((Outcome::Even, false, w * even.norm_sqr() / total, even));
    }
    let w_odd = 0.5 * (1.0 - (-2.0 * x2).exp());
    let p_odd = w_odd * odd.norm_sqr() / total;
    raw.push((Outcome::Odd, false, p_odd, partner_flip(&odd, partner)?));

    let mut out = Vec::with_capacity(raw.len());
    for (outcome, zero_photons, probability, state) in raw {
        if probability <= 0.0 || !(state.norm_sqr() > NORM_TOLERANCE) {
            continue;
        }
        out.push(ParityBranch { outcome, zero_photons, probability, state: state.normalize()? });
    }
    Ok(out)
}

fn parity_distribution(branches: &[ParityBranch]) -> Vec<OutcomeProbability> {
    let even: f64 = branches.iter().filter(|b| b.outcome == Outcome::Even).map(|b| b.probability).sum();
    let odd: f64 = branches.iter().filter(|b| b.outcome == Outcome::Odd).map(|b| b.probability).sum();
    vec![
        OutcomeProbability { outcome: Outcome::Even, probability: even },
        OutcomeProbability { outcome: Outcome::Odd, probability: odd },
    ]
}

/// Photon-number measurement on `mode` followed by discarding it.
///
/// Ideal mode drops the mode with amplitudes unchanged and records a single
/// certain branch. Exact mode samples a branch from
/// [`photon_count_branches`] with `rng`.
/// ‖s with `mode` dropped, amplitudes unchanged‖² / ‖s‖²: how much a
/// label-level (ideal) discard rescales the weight of the branch it acts on.
/// Differs from 1 when terms with different labels on `mode` interfere.
pub fn ideal_discard_norm_ratio(s: &HybridState, mode: &str) -> Result<f64> {
    let i = s.registry().coherent_index(mode)?;
    let total = s.norm_sqr();
    if !(total > NORM_TOLERANCE) {
        return Err(HybridError::ZeroNorm);
    }
    Ok(s.drop_mode_with(i, |_| C64::new(1.0, 0.0)).norm_sqr() / total)
}

pub fn measure_photon_parity_discard(
    s: &HybridState,
    mode: &str,
    partner: Option<&str>,
    fm: FidelityMode,
    rng: Option<&mut dyn RngCore>,
) -> Result<(HybridState, MeasurementRecord)> {
    let i = s.registry().coherent_index(mode)?;
    match fm {
        FidelityMode::Ideal => {
            let (_, has_zero) = label_magnitudes(s, i, mode)?;
            if has_zero && s.terms().iter().any(|t| !t.labels[i].as_coh().expect("coherent").is_zero()) {
                return Err(HybridError::NonuniformMagnitude(mode.to_string()));
            }
            let state = s.drop_mode_with(i, |_| C64::new(1.0, 0.0)).normalize()?;
            let record = MeasurementRecord {
                mode: mode.to_string(),
                kind: MeasurementKind::PhotonParity,
                fidelity_mode: fm,
                outcome: Outcome::Even,
                branch_probability: 1.0,
                zero_photons: false,
                distribution: vec![OutcomeProbability { outcome: Outcome::Even, probability: 1.0 }],
            };
            Ok((state, record))
        }
        FidelityMode::Exact => {
            let rng = rng.ok_or(HybridError::MissingRng)?;
            let branches = photon_count_branches(s, mode, partner)?;
            let u: f64 = rng.random();
            let total: f64 = branches.iter().map(|b| b.probability).sum();
            let mut acc = 0.0;
            let mut pick = branches.len() - 1;
            for (k, b) in branches.iter().enumerate() {
                acc += b.probability / total;
                if u < acc {
                    pick = k;
                    break;
                }
            }
            let distribution = parity_distribution(&branches);
            let b = &branches[pick];
            let branch_probability = distribution
                .iter()
                .find(|o| o.outcome == b.outcome)
                .map(|o| o.probability)
                .unwrap_or(b.probability);
            let record = MeasurementRecord {
                mode: mode.to_string(),
                kind: MeasurementKind::PhotonParity,
                fidelity_mode: fm,
                outcome: b.outcome,
                branch_probability,
                zero_photons: b.zero_photons,
                distribution,
            };
            Ok((b.state.clone(), record))
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Applies a logical Pauli to qubit `q`.
///
/// Z is a polarization-only phase (a waveplate); X flips the polarization
/// *and* the coherent sign, so physically it also needs a π phase shift on
/// the coherent mode. Y = iXZ.
pub fn apply_logical_pauli(s: &HybridState, q: &LogicalQubit, which: Pauli) -> Result<HybridState> {
    let p = s.registry().polarization_index(&q.pol_mode)?;
    let c = s.registry().coherent_index(&q.cs_mode)?;
    let split = split_logical(s, std::slice::from_ref(q))?;
    if split.residual > SPAN_TOLERANCE {
        return Err(HybridError::OutsideLogicalSpan(split.residual));
    }
    let z = |t: &Term| {
        let minus = t.labels[p] == Label::Pol(PolLabel::Minus);
        Term { amplitude: if minus { -t.amplitude } else { t.amplitude }, labels: t.labels.clone() }
    };
    let x = |t: &Term| {
        let mut labels = t.labels.clone();
        labels[p] = Label::Pol(t.labels[p].as_pol().expect("polarization").flipped());
        labels[c] = Label::Coh(-t.labels[c].as_coh().expect("coherent"));
        Term { amplitude: t.amplitude, labels }
    };
    Ok(match which {
        Pauli::I => s.clone(),
        Pauli::Z => s.map_terms(z),
        Pauli::X => s.map_terms(x),
        Pauli::Y => s.map_terms(z).map_terms(x).scaled(C64::new(0.0, 1.0)),
    })
}
