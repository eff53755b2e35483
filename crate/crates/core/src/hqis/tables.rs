//! Correction tables, derived by exhaustive search.
//!
//! For each (Alice outcome, helper announcements) branch the recoverer holds
//! M·(λ, η)ᵀ for a fixed 2×2 matrix M. M is read off by running the basis
//! secrets |0_L⟩ and |1_L⟩ through the branch; the correction is the unique
//! Pauli-type operator U with U·M ∝ 𝕀.

use std::fmt;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::{alice_branches, build_channel, helper_branches, input_state, recoverer_amplitudes, HelperOutcome, InputSecret, LogicalBellOutcome, Recoverer};
use crate::error::{HybridError, Result};
use crate::logical::LogicalQubit;
use crate::optics::{apply_logical_pauli, Pauli};
use crate::state::HybridState;

/// Entries within this of 0, ±1, ±i are snapped when printing.
const SNAP: f64 = 1e-9;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Correction {
    I,
    X,
    Z,
    #[serde(rename = "iY")]
    IY,
}

impl Correction {
    pub const ALL: [Self; 4] = [Self::I, Self::X, Self::Z, Self::IY];

    /// Action on logical amplitudes (c₀, c₁).
    pub fn matrix(self) -> [[C64; 2]; 2] {
        let (o, l) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
        match self {
            Self::I => [[l, o], [o, l]],
            Self::X => [[o, l], [l, o]],
            Self::Z => [[l, o], [o, -l]],
            // iY = -XZ
            Self::IY => [[o, l], [-l, o]],
        }
    }

    pub fn apply(self, s: &HybridState, q: &LogicalQubit) -> Result<HybridState> {
        match self {
            Self::I => Ok(s.clone()),
            Self::X => apply_logical_pauli(s, q, Pauli::X),
            Self::Z => apply_logical_pauli(s, q, Pauli::Z),
            Self::IY => {
                let z = apply_logical_pauli(s, q, Pauli::Z)?;
                Ok(apply_logical_pauli(&z, q, Pauli::X)?.scaled(C64::new(-1.0, 0.0)))
            }
        }
    }
}

impl fmt::Display for Correction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::I => "I",
            Self::X => "X",
            Self::Z => "Z",
            Self::IY => "iY",
        })
    }
}

/// The recoverer's state before correction, as amplitudes (c₀, c₁) = M·(λ, η).
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Transform(pub [[C64; 2]; 2]);

fn mul(a: &[[C64; 2]; 2], b: &[[C64; 2]; 2]) -> [[C64; 2]; 2] {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i][0] * b[0][j] + a[i][1] * b[1][j]))
}

impl Transform {
    pub fn from_real(m: [[f64; 2]; 2]) -> Self {
        Self(m.map(|r| r.map(|x| C64::new(x, 0.0))))
    }

    /// Equal up to a global phase.
    pub fn equivalent(&self, other: &Transform, tol: f64) -> bool {
        let (a, b) = (self.0.as_flattened(), other.0.as_flattened());
        let Some(k) = (0..4).max_by(|&i, &j| a[i].norm().total_cmp(&a[j].norm())) else { return false };
        if b[k].norm() < tol {
            return false;
        }
        let phase = a[k] / b[k];
        (phase.norm() - 1.0).abs() < tol && a.iter().zip(b).all(|(x, y)| (x - phase * y).norm() < tol)
    }

    /// U·M ∝ 𝕀.
    pub fn undone_by(&self, u: Correction, tol: f64) -> bool {
        Transform(mul(&u.matrix(), &self.0)).equivalent(&Transform::from_real([[1.0, 0.0], [0.0, 1.0]]), tol)
    }
}

fn coefficient(z: C64) -> Option<&'static str> {
    [(1.0, 0.0, "+"), (-1.0, 0.0, "-"), (0.0, 1.0, "+i"), (0.0, -1.0, "-i")]
        .into_iter()
        .find(|&(re, im, _)| (z - C64::new(re, im)).norm() < SNAP)
        .map(|(_, _, s)| s)
}

impl fmt::Display for Transform {
    /// E.g. `λ|0_L⟩ - η|1_L⟩`; entries that are not phases print numerically.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (row, ket) in self.0.iter().zip(["|0_L⟩", "|1_L⟩"]) {
            for (z, sym) in row.iter().zip(["λ", "η"]) {
                if z.norm() < SNAP {
                    continue;
                }
                let (sign, unit) = match coefficient(*z) {
                    Some(c) => (&c[..1], &c[1..]),
                    None => {
                        write!(f, "{}({:.6}{:+.6}i){sym}{ket}", if first { "" } else { " + " }, z.re, z.im)?;
                        first = false;
                        continue;
                    }
                };
                match (first, sign) {
                    (true, "+") => write!(f, "{unit}{sym}{ket}")?,
                    (true, _) => write!(f, "-{unit}{sym}{ket}")?,
                    (false, _) => write!(f, " {sign} {unit}{sym}{ket}")?,
                }
                first = false;
            }
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

impl Serialize for Transform {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrectionRow {
    pub alice: LogicalBellOutcome,
    pub helpers: Vec<HelperOutcome>,
    pub before: Transform,
    pub correction: Correction,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrectionTable {
    pub recoverer: Recoverer,
    pub alpha: f64,
    pub rows: Vec<CorrectionRow>,
}

impl CorrectionTable {
    pub fn lookup(&self, alice: LogicalBellOutcome, helpers: &[HelperOutcome]) -> Option<Correction> {
        self.rows.iter().find(|r| r.alice == alice && r.helpers == helpers).map(|r| r.correction)
    }

    /// Printed rows that disagree with this table, with a reason each.
    pub fn mismatches(&self, printed: &[CorrectionRow]) -> Vec<String> {
        printed
            .iter()
            .filter_map(|p| {
                let Some(d) = self.rows.iter().find(|r| r.alice == p.alice && r.helpers == p.helpers) else {
                    return Some(format!("{} {:?}: no derived row", p.alice, p.helpers));
                };
                let same_state = d.before.equivalent(&p.before, SNAP);
                (!same_state || d.correction != p.correction).then(|| {
                    format!("{} {:?}: printed {} / {}, derived {} / {}", p.alice, p.helpers, p.before, p.correction, d.before, d.correction)
                })
            })
            .collect()
    }
}

impl fmt::Display for CorrectionTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "recoverer: {}  (alpha = {})", self.recoverer, self.alpha)?;
        writeln!(f, "{:<7} {:<12} {:<24} correction", "alice", "helpers", "state before")?;
        for r in &self.rows {
            let h: Vec<String> = r.helpers.iter().map(|h| h.to_string()).collect();
            writeln!(f, "{:<7} {:<12} {:<24} {}", r.alice.to_string(), h.join(","), r.before.to_string(), r.correction)?;
        }
        Ok(())
    }
}

type Key = (LogicalBellOutcome, Vec<HelperOutcome>);

fn branch_amplitudes(secret: &InputSecret, recoverer: Recoverer, alpha: f64) -> Result<Vec<(Key, [C64; 2])>> {
    let s = input_state(secret, &build_channel(alpha)?)?;
    let mut out = Vec::new();
    for ab in alice_branches(&s)? {
        // Unnormalized all the way down, so amplitudes are linear in (λ, η).
        for hb in helper_branches(&ab.raw, recoverer)? {
            out.push(((ab.outcome, hb.outcome.clone()), recoverer_amplitudes(&hb.raw, recoverer)?));
        }
    }
    Ok(out)
}

/// Every (Alice, helper) branch with its state and the unique correction.
pub fn derive_table(recoverer: Recoverer, alpha: f64) -> Result<CorrectionTable> {
    let (o, l) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
    let col0 = branch_amplitudes(&InputSecret { lambda: l, eta: o }, recoverer, alpha)?;
    let col1 = branch_amplitudes(&InputSecret { lambda: o, eta: l }, recoverer, alpha)?;
    let mut rows = Vec::new();
    let keys: std::collections::BTreeSet<&Key> = col0.iter().chain(&col1).map(|(k, _)| k).collect();
    for key in keys {
        let get = |col: &[(Key, [C64; 2])]| col.iter().find(|(k, _)| k == key).map(|(_, v)| *v).unwrap_or([o, o]);
        let (u, v) = (get(&col0), get(&col1));
        let (nu, nv) = (u[0].norm_sqr() + u[1].norm_sqr(), v[0].norm_sqr() + v[1].norm_sqr());
        if nu + nv < 1e-24 {
            continue;
        }
        if (nu - nv).abs() > 1e-9 * (nu + nv) {
            return Err(HybridError::CorrectionSearch(format!("{} {:?}: branch probability depends on the secret", key.0, key.1)));
        }
        // Fix the global phase so the first nonzero entry is positive.
        let lead = [u[0], v[0], u[1], v[1]].into_iter().find(|z| z.norm() > 1e-12).unwrap_or(l);
        let k = nu.sqrt() * lead / lead.norm();
        let before = Transform([[u[0] / k, v[0] / k], [u[1] / k, v[1] / k]]);
        let found: Vec<Correction> = Correction::ALL.into_iter().filter(|&c| before.undone_by(c, SNAP)).collect();
        let [correction] = found[..] else {
            return Err(HybridError::CorrectionSearch(format!("{} {:?}: {} candidate corrections for {before}", key.0, key.1, found.len())));
        };
        rows.push(CorrectionRow { alice: key.0, helpers: key.1.clone(), before, correction });
    }
    Ok(CorrectionTable { recoverer, alpha, rows })
}

/// The published rows (Alice outcome φL+ only).
pub fn printed_rows(recoverer: Recoverer) -> Vec<CorrectionRow> {
    use HelperOutcome::{Bell, Logical};
    use LogicalBellOutcome::*;
    let id = Transform::from_real([[1.0, 0.0], [0.0, 1.0]]);
    let z = Transform::from_real([[1.0, 0.0], [0.0, -1.0]]);
    let x = Transform::from_real([[0.0, 1.0], [1.0, 0.0]]);
    let iy = Transform::from_real([[0.0, 1.0], [-1.0, 0.0]]);
    let row = |helpers, before, correction| CorrectionRow { alice: PhiPlus, helpers, before, correction };
    match recoverer {
        Recoverer::Diana => vec![
            row(vec![Logical(0), Logical(0)], id, Correction::I),
            row(vec![Logical(1), Logical(1)], z, Correction::Z),
        ],
        // Charlie's case has the same structure with (B, D) measured.
        Recoverer::Bob | Recoverer::Charlie => vec![
            row(vec![Bell(PhiPlus)], z, Correction::Z),
            row(vec![Bell(PhiMinus)], id, Correction::I),
            row(vec![Bell(PsiPlus)], x, Correction::X),
            row(vec![Bell(PsiMinus)], iy, Correction::IY),
        ],
    }
}
