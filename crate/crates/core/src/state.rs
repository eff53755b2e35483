//! Hybrid states over named polarization and coherent modes.
//!
//! A [`HybridState`] is a finite superposition of product kets. Polarization
//! labels live in the orthonormal basis {|+⟩, |-⟩}; coherent labels are
//! exact multiples of the base amplitude α and are *not* orthogonal, so every
//! norm and inner product goes through the pairwise overlap
//! `⟨xα|yα⟩ = exp(-|x-y|²α²/2)` (real labels).

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{HybridError, Result};
use crate::label::{CoherentLabel, Label};

/// Terms with `|amplitude|` at or below this are dropped by [`HybridState::pruned`].
pub const PRUNE_THRESHOLD: f64 = 1e-12;

/// Squared norms at or below this count as zero.
pub const NORM_TOLERANCE: f64 = 1e-30;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeKind {
    Polarization,
    Coherent,
}

impl ModeKind {
    pub fn name(self) -> &'static str {
        match self {
            ModeKind::Polarization => "polarization",
            ModeKind::Coherent => "coherent",
        }
    }

    fn of(label: &Label) -> Self {
        match label {
            Label::Pol(_) => ModeKind::Polarization,
            Label::Coh(_) => ModeKind::Coherent,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Mode {
    pub name: String,
    pub kind: ModeKind,
}

impl Mode {
    pub fn pol(name: impl Into<String>) -> Self {
        Self { name: name.into(), kind: ModeKind::Polarization }
    }

    pub fn coh(name: impl Into<String>) -> Self {
        Self { name: name.into(), kind: ModeKind::Coherent }
    }
}

/// Ordered list of uniquely named modes.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ModeRegistry {
    modes: Vec<Mode>,
}

impl ModeRegistry {
    pub fn new(modes: Vec<Mode>) -> Result<Self> {
        for (i, m) in modes.iter().enumerate() {
            if modes[..i].iter().any(|o| o.name == m.name) {
                return Err(HybridError::DuplicateMode(m.name.clone()));
            }
        }
        Ok(Self { modes })
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.modes
            .iter()
            .position(|m| m.name == name)
            .ok_or_else(|| HybridError::UnknownMode(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.modes.iter().any(|m| m.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.modes.iter().map(|m| m.name.as_str())
    }

    fn expect_kind(&self, name: &str, kind: ModeKind) -> Result<usize> {
        let i = self.index_of(name)?;
        let found = self.modes[i].kind;
        if found != kind {
            return Err(HybridError::ModeKind {
                mode: name.to_string(),
                expected: kind.name(),
                found: found.name(),
            });
        }
        Ok(i)
    }

    pub fn coherent_index(&self, name: &str) -> Result<usize> {
        self.expect_kind(name, ModeKind::Coherent)
    }

    pub fn polarization_index(&self, name: &str) -> Result<usize> {
        self.expect_kind(name, ModeKind::Polarization)
    }
}

/// One product ket with its amplitude.
#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub amplitude: C64,
    pub labels: Vec<Label>,
}

impl Term {
    pub fn new(amplitude: impl Into<C64>, labels: Vec<Label>) -> Self {
        Self { amplitude: amplitude.into(), labels }
    }
}

/// Overlap ⟨xα|yα⟩ of two coherent states.
pub fn coherent_overlap(x: CoherentLabel, y: CoherentLabel, alpha: f64) -> C64 {
    let (xa, ya) = (x.value() * alpha, y.value() * alpha);
    C64::new((-(xa * xa) / 2.0 - (ya * ya) / 2.0 + xa * ya).exp(), 0.0)
}

/// Overlap of two label vectors over the same registry.
pub(crate) fn label_overlap(lhs: &[Label], rhs: &[Label], alpha: f64) -> f64 {
    let mut acc = 1.0;
    for (l, r) in lhs.iter().zip(rhs) {
        match (l, r) {
            (Label::Pol(p), Label::Pol(q)) => {
                if p != q {
                    return 0.0;
                }
            }
            (Label::Coh(x), Label::Coh(y)) => {
                if x != y {
                    let d = (x.value() - y.value()) * alpha;
                    acc *= (-0.5 * d * d).exp();
                }
            }
            _ => return 0.0,
        }
    }
    acc
}

/// Linear combination of product terms over a [`ModeRegistry`].
///
/// Terms are kept canonical: like terms are merged and exact zeros removed.
/// Term order is the sorted label order, so two states built from the same
/// terms in any order are identical.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridState {
    registry: ModeRegistry,
    terms: Vec<Term>,
    alpha: f64,
}

impl HybridState {
    pub fn new(registry: ModeRegistry, terms: Vec<Term>, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(HybridError::InvalidParams(format!("alpha must be positive, got {alpha}")));
        }
        for t in &terms {
            if t.labels.len() != registry.len() {
                return Err(HybridError::RegistryMismatch(format!(
                    "term has {} labels for {} modes",
                    t.labels.len(),
                    registry.len()
                )));
            }
            for (l, m) in t.labels.iter().zip(registry.modes()) {
                if ModeKind::of(l) != m.kind {
                    return Err(HybridError::LabelKind(m.name.clone()));
                }
            }
        }
        Ok(Self::from_parts(registry, terms, alpha))
    }

    /// Skips validation; callers guarantee label/registry agreement.
    pub(crate) fn from_parts(registry: ModeRegistry, terms: Vec<Term>, alpha: f64) -> Self {
        let mut merged: BTreeMap<Vec<Label>, C64> = BTreeMap::new();
        for t in terms {
            *merged.entry(t.labels).or_insert(C64::new(0.0, 0.0)) += t.amplitude;
        }
        let terms = merged
            .into_iter()
            .filter(|(_, a)| *a != C64::new(0.0, 0.0))
            .map(|(labels, amplitude)| Term { amplitude, labels })
            .collect();
        Self { registry, terms, alpha }
    }

    /// The zero vector over a registry.
    pub fn zero(registry: ModeRegistry, alpha: f64) -> Self {
        Self { registry, terms: Vec::new(), alpha }
    }

    /// Unit-amplitude single product ket.
    pub fn product(modes: Vec<(Mode, Label)>, alpha: f64) -> Result<Self> {
        let (modes, labels): (Vec<_>, Vec<_>) = modes.into_iter().unzip();
        Self::new(ModeRegistry::new(modes)?, vec![Term::new(1.0, labels)], alpha)
    }

    /// The scalar `1` on an empty registry.
    pub fn scalar(value: C64, alpha: f64) -> Self {
        Self::from_parts(ModeRegistry::default(), vec![Term { amplitude: value, labels: Vec::new() }], alpha)
    }

    pub fn registry(&self) -> &ModeRegistry {
        &self.registry
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Drops terms whose amplitude magnitude is at or below `threshold`.
    pub fn pruned(&self, threshold: f64) -> Self {
        Self {
            registry: self.registry.clone(),
            terms: self.terms.iter().filter(|t| t.amplitude.norm() > threshold).cloned().collect(),
            alpha: self.alpha,
        }
    }

    pub fn scaled(&self, factor: C64) -> Self {
        Self::from_parts(
            self.registry.clone(),
            self.terms
                .iter()
                .map(|t| Term { amplitude: t.amplitude * factor, labels: t.labels.clone() })
                .collect(),
            self.alpha,
        )
    }

    /// `self + factor * other` over an identical registry.
    pub fn add_scaled(&self, other: &HybridState, factor: C64) -> Result<Self> {
        self.check_compatible(other)?;
        let mut terms = self.terms.clone();
        terms.extend(
            other
                .terms
                .iter()
                .map(|t| Term { amplitude: t.amplitude * factor, labels: t.labels.clone() }),
        );
        Ok(Self::from_parts(self.registry.clone(), terms, self.alpha))
    }

    /// Applies `f` to every term; the result is re-canonicalized.
    pub fn map_terms(&self, mut f: impl FnMut(&Term) -> Term) -> Self {
        Self::from_parts(self.registry.clone(), self.terms.iter().map(&mut f).collect(), self.alpha)
    }

    pub(crate) fn with_terms(&self, registry: ModeRegistry, terms: Vec<Term>) -> Self {
        Self::from_parts(registry, terms, self.alpha)
    }

    fn check_compatible(&self, other: &HybridState) -> Result<()> {
        if self.registry != other.registry {
            return Err(HybridError::RegistryMismatch(format!(
                "[{}] vs [{}]",
                self.registry.names().collect::<Vec<_>>().join(","),
                other.registry.names().collect::<Vec<_>>().join(",")
            )));
        }
        if self.alpha != other.alpha {
            return Err(HybridError::AlphaMismatch(self.alpha, other.alpha));
        }
        Ok(())
    }

    /// ⟨self|other⟩ by direct pairwise summation.
    pub fn inner_product(&self, other: &HybridState) -> Result<C64> {
        self.check_compatible(other)?;
        Ok(self.inner_unchecked(other))
    }

    pub(crate) fn inner_unchecked(&self, other: &HybridState) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for s in &self.terms {
            for t in &other.terms {
                let ov = label_overlap(&s.labels, &t.labels, self.alpha);
                if ov != 0.0 {
                    acc += s.amplitude.conj() * t.amplitude * ov;
                }
            }
        }
        acc
    }

    /// ⟨self|self⟩.
    pub fn norm_sqr(&self) -> f64 {
        self.inner_unchecked(self).re.max(0.0)
    }

    pub fn normalize(&self) -> Result<Self> {
        let n = self.norm_sqr();
        if !(n > NORM_TOLERANCE) {
            return Err(HybridError::ZeroNorm);
        }
        Ok(self.scaled(C64::new(1.0 / n.sqrt(), 0.0)))
    }

    /// |⟨self|other⟩|² / (⟨self|self⟩⟨other|other⟩), aligning `other` to this
    /// registry order by mode name first.
    pub fn fidelity(&self, other: &HybridState) -> Result<f64> {
        let other = other.aligned_to(&self.registry)?;
        let ip = self.inner_product(&other)?;
        let (n1, n2) = (self.norm_sqr(), other.norm_sqr());
        if !(n1 > NORM_TOLERANCE) || !(n2 > NORM_TOLERANCE) {
            return Err(HybridError::ZeroNorm);
        }
        Ok((ip.norm_sqr() / (n1 * n2)).clamp(0.0, 1.0))
    }

    /// Tensor product; the registry of `other` is appended.
    pub fn tensor(&self, other: &HybridState) -> Result<Self> {
        if self.alpha != other.alpha {
            return Err(HybridError::AlphaMismatch(self.alpha, other.alpha));
        }
        let mut modes = self.registry.modes.clone();
        modes.extend(other.registry.modes.iter().cloned());
        let registry = ModeRegistry::new(modes)?;
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for s in &self.terms {
            for t in &other.terms {
                let mut labels = s.labels.clone();
                labels.extend(t.labels.iter().copied());
                terms.push(Term { amplitude: s.amplitude * t.amplitude, labels });
            }
        }
        Ok(Self::from_parts(registry, terms, self.alpha))
    }

    /// Tensors in a fresh coherent mode in the vacuum.
    pub fn with_vacuum_mode(&self, name: &str) -> Result<Self> {
        let vac = HybridState::product(vec![(Mode::coh(name), Label::Coh(CoherentLabel::zero()))], self.alpha)?;
        self.tensor(&vac)
    }

    pub fn rename_mode(&self, from: &str, to: &str) -> Result<Self> {
        let i = self.registry.index_of(from)?;
        if from != to && self.registry.contains(to) {
            return Err(HybridError::DuplicateMode(to.to_string()));
        }
        let mut registry = self.registry.clone();
        registry.modes[i].name = to.to_string();
        Ok(Self { registry, terms: self.terms.clone(), alpha: self.alpha })
    }

    /// Reorders modes to match `target`, which must hold the same names and kinds.
    pub fn aligned_to(&self, target: &ModeRegistry) -> Result<Self> {
        if &self.registry == target {
            return Ok(self.clone());
        }
        if target.len() != self.registry.len() {
            return Err(HybridError::RegistryMismatch(format!(
                "{} modes vs {} modes",
                self.registry.len(),
                target.len()
            )));
        }
        let mut perm = Vec::with_capacity(target.len());
        for m in target.modes() {
            let i = self.registry.index_of(&m.name).map_err(|_| {
                HybridError::RegistryMismatch(format!("mode `{}` missing", m.name))
            })?;
            if self.registry.modes[i].kind != m.kind {
                return Err(HybridError::RegistryMismatch(format!("mode `{}` kind differs", m.name)));
            }
            perm.push(i);
        }
        let terms = self
            .terms
            .iter()
            .map(|t| Term { amplitude: t.amplitude, labels: perm.iter().map(|&i| t.labels[i]).collect() })
            .collect();
        Ok(Self::from_parts(target.clone(), terms, self.alpha))
    }

    /// Removes mode `index` from the registry and every term.
    pub(crate) fn drop_mode_with(&self, index: usize, mut weight: impl FnMut(&Term) -> C64) -> Self {
        let mut registry = self.registry.clone();
        registry.modes.remove(index);
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let mut labels = t.labels.clone();
                labels.remove(index);
                Term { amplitude: t.amplitude * weight(t), labels }
            })
            .collect();
        Self::from_parts(registry, terms, self.alpha)
    }

    /// Labels of one mode across all terms.
    pub fn labels_of(&self, name: &str) -> Result<Vec<Label>> {
        let i = self.registry.index_of(name)?;
        Ok(self.terms.iter().map(|t| t.labels[i]).collect())
    }
}

impl fmt::Display for HybridState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|·⟩_{{{}}} =", self.registry.names().collect::<Vec<_>>().join(","))?;
        if self.terms.is_empty() {
            return write!(f, " 0");
        }
        for t in &self.terms {
            write!(f, " ({:+.6}{:+.6}i)", t.amplitude.re, t.amplitude.im)?;
            for l in &t.labels {
                write!(f, "|{l}⟩")?;
            }
        }
        Ok(())
    }
}
