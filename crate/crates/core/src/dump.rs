//! JSON state dump.
//!
//! ```json
//! {"alpha": 1.0,
//!  "modes": [{"name": "a.pol", "kind": "polarization"}, {"name": "a1", "kind": "coherent"}],
//!  "terms": [{"re": 0.5, "im": 0.0, "labels": ["+", {"a": [1, 1], "b": [0, 1]}]}]}
//! ```
//!
//! Floats use shortest round-trip formatting, so dump → load is bit exact.

use num_complex::Complex64 as C64;
use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::{HybridError, Result};
use crate::label::{CoherentLabel, Label, PolLabel};
use crate::state::{HybridState, Mode, ModeRegistry, Term};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum LabelDump {
    Pol(String),
    Coh { a: [i64; 2], b: [i64; 2] },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct TermDump {
    re: f64,
    im: f64,
    labels: Vec<LabelDump>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateDump {
    alpha: f64,
    modes: Vec<Mode>,
    terms: Vec<TermDump>,
}

fn ratio(r: Rational64) -> [i64; 2] {
    [*r.numer(), *r.denom()]
}

fn unratio(r: [i64; 2]) -> Result<Rational64> {
    if r[1] == 0 {
        return Err(HybridError::Dump("zero denominator".into()));
    }
    Ok(Rational64::new(r[0], r[1]))
}

impl From<&HybridState> for StateDump {
    fn from(s: &HybridState) -> Self {
        let terms = s
            .terms()
            .iter()
            .map(|t| TermDump {
                re: t.amplitude.re,
                im: t.amplitude.im,
                labels: t
                    .labels
                    .iter()
                    .map(|l| match l {
                        Label::Pol(p) => LabelDump::Pol(p.symbol().to_string()),
                        Label::Coh(c) => LabelDump::Coh { a: ratio(c.rational_part()), b: ratio(c.sqrt2_part()) },
                    })
                    .collect(),
            })
            .collect();
        Self { alpha: s.alpha(), modes: s.registry().modes().to_vec(), terms }
    }
}

impl TryFrom<StateDump> for HybridState {
    type Error = HybridError;

    fn try_from(d: StateDump) -> Result<Self> {
        let registry = ModeRegistry::new(d.modes)?;
        let terms = d
            .terms
            .into_iter()
            .map(|t| {
                let labels = t
                    .labels
                    .into_iter()
                    .map(|l| match l {
                        LabelDump::Pol(s) if s == "+" => Ok(Label::Pol(PolLabel::Plus)),
                        LabelDump::Pol(s) if s == "-" => Ok(Label::Pol(PolLabel::Minus)),
                        LabelDump::Pol(s) => Err(HybridError::Dump(format!("bad polarization label {s:?}"))),
                        LabelDump::Coh { a, b } => Ok(Label::Coh(CoherentLabel::new(unratio(a)?, unratio(b)?))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Term::new(C64::new(t.re, t.im), labels))
            })
            .collect::<Result<Vec<_>>>()?;
        HybridState::new(registry, terms, d.alpha)
    }
}

pub fn to_json(s: &HybridState) -> String {
    serde_json::to_string_pretty(&StateDump::from(s)).expect("dump is plain data")
}

pub fn from_json(text: &str) -> Result<HybridState> {
    let d: StateDump = serde_json::from_str(text).map_err(|e| HybridError::Dump(e.to_string()))?;
    HybridState::try_from(d)
}
