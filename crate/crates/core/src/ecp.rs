//! Entanglement concentration of the non-maximal Omega-type hybrid state.
//!
//! Four logical hybrid qubits a–d (polarization mode `x.pol` plus a coherent
//! mode) start in
//!
//! ```text
//! |Ω′⟩ = ζ|++++⟩|α,α,α,α⟩ + β|+--+⟩|α,-α,-α,α⟩ + γ|-++-⟩|-α,α,α,-α⟩ - δ|----⟩|-α,-α,-α,-α⟩
//! ```
//!
//! Charlie and Diana mix c and d with a two-mode ancilla, keep the
//! no-click events, split the amplified modes on fresh vacuum ports and
//! discard one output by photon counting. Alice repeats the trick with a
//! single-mode ancilla. On success the state is the maximal |Ω⟩ (equal
//! weights, same sign pattern) with probability P = 4(N₁N₂ζβδγ)².

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64 as C64;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{HybridError, Result};
use crate::label::{CoherentLabel, Label, PolLabel};
use crate::optics::{
    apply_beamsplitter, ideal_discard_norm_ratio, measure_photon_parity_discard, photon_count_branches, postselect_vacuum, FidelityMode,
    MeasurementRecord, Outcome,
};
use crate::state::{HybridState, Mode, ModeRegistry, Term};

/// Tolerance on ζ² + β² + γ² + δ² = 1.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

/// Polarization modes of the four logical qubits.
pub const POL_MODES: [&str; 4] = ["a.pol", "b.pol", "c.pol", "d.pol"];
/// Coherent modes of |Ω′⟩ as prepared.
pub const INPUT_CS_MODES: [&str; 4] = ["a1", "b", "c1", "d1"];
/// Coherent modes carrying the concentrated state.
pub const OUTPUT_CS_MODES: [&str; 4] = ["a3", "b", "c3", "d3"];

/// Polarization / coherent-sign pattern shared by |Ω′⟩ and |Ω⟩.
const PATTERN: [([PolLabel; 4], [i64; 4]); 4] = {
    use PolLabel::{Minus as M, Plus as P};
    [
        ([P, P, P, P], [1, 1, 1, 1]),
        ([P, M, M, P], [1, -1, -1, 1]),
        ([M, P, P, M], [-1, 1, 1, -1]),
        ([M, M, M, M], [-1, -1, -1, -1]),
    ]
};

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ECPParams {
    pub zeta: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub alpha: f64,
}

impl ECPParams {
    /// Validated parameters: every coefficient nonzero, unit norm, α > 0.
    pub fn new(zeta: f64, beta: f64, gamma: f64, delta: f64, alpha: f64) -> Result<Self> {
        let p = Self::allow_degenerate(zeta, beta, gamma, delta, alpha)?;
        if [zeta, beta, gamma, delta].contains(&0.0) {
            return Err(HybridError::InvalidParams("coefficients must be nonzero".into()));
        }
        Ok(p)
    }

    /// Like [`ECPParams::new`] but zero coefficients are allowed (they give P = 0).
    pub fn allow_degenerate(zeta: f64, beta: f64, gamma: f64, delta: f64, alpha: f64) -> Result<Self> {
        let c = [zeta, beta, gamma, delta];
        if c.iter().any(|x| !x.is_finite()) {
            return Err(HybridError::InvalidParams("non-finite coefficient".into()));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(HybridError::InvalidParams(format!("alpha must be positive, got {alpha}")));
        }
        let n: f64 = c.iter().map(|x| x * x).sum();
        if (n - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(HybridError::InvalidParams(format!("ζ²+β²+γ²+δ² = {n}, expected 1")));
        }
        Ok(Self { zeta, beta, gamma, delta, alpha })
    }

    pub fn equal(alpha: f64) -> Result<Self> {
        Self::new(0.5, 0.5, 0.5, 0.5, alpha)
    }

    /// Coefficients uniform on the unit 3-sphere (random signs included),
    /// α uniform on `alpha`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, alpha: std::ops::Range<f64>) -> Self {
        loop {
            let c: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            let n = c.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !(0.1..=1.0).contains(&n) || c.iter().any(|x| x.abs() < 1e-6) {
                continue;
            }
            let [z, b, g, d] = c.map(|x| x / n);
            if let Ok(p) = Self::new(z, b, g, d, rng.random_range(alpha.clone())) {
                return p;
            }
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.zeta * self.beta * self.gamma * self.delta == 0.0
    }

    /// N₁ as printed, the normalizer of the two-mode ancilla.
    pub fn n1(&self) -> f64 {
        let Self { zeta: z, beta: b, gamma: g, delta: d, alpha: a } = *self;
        let e2 = (-2.0 * a * a).exp();
        let e4 = (-4.0 * a * a).exp();
        let inv_sq = z * z + b * b + g * g + d * d + 2.0 * (z * b + z * g + d * b + g * d) * e2 + 2.0 * (g * b + d * z) * e4;
        inv_sq.powf(-0.5)
    }

    /// N₂⁻², the inverse squared normalizer of the single-mode ancilla; zero
    /// when ζβ = δγ = 0.
    pub fn n2_inv_sq(&self) -> f64 {
        let Self { zeta: z, beta: b, gamma: g, delta: d, alpha: a } = *self;
        z * z * b * b + d * d * g * g + 2.0 * z * b * d * g * (-2.0 * a * a).exp()
    }

    pub fn n2(&self) -> f64 {
        self.n2_inv_sq().powf(-0.5)
    }
}

/// Spherical angles for the coefficients.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleParams {
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
}

impl Default for AngleParams {
    /// θ₁ = θ₂ = π/4, θ₃ = 3π/8.
    fn default() -> Self {
        use std::f64::consts::{FRAC_PI_4, PI};
        Self { theta1: FRAC_PI_4, theta2: FRAC_PI_4, theta3: 3.0 * PI / 8.0 }
    }
}

/// (sin θ, cos θ), exact at multiples of π/2 so that grid zeros are exact.
fn sin_cos(theta: f64) -> (f64, f64) {
    let k = theta / FRAC_PI_2;
    let r = k.round();
    if (k - r).abs() < 1e-12 {
        match (r as i64).rem_euclid(4) {
            0 => (0.0, 1.0),
            1 => (1.0, 0.0),
            2 => (0.0, -1.0),
            _ => (-1.0, 0.0),
        }
    } else {
        theta.sin_cos()
    }
}

impl AngleParams {
    pub fn new(theta1: f64, theta2: f64, theta3: f64) -> Self {
        Self { theta1, theta2, theta3 }
    }

    /// (ζ, β, γ, δ) = (cos θ₃, sin θ₃ cos θ₂, sin θ₃ sin θ₂ sin θ₁, sin θ₃ sin θ₂ cos θ₁).
    pub fn coefficients(&self) -> [f64; 4] {
        let (s1, c1) = sin_cos(self.theta1);
        let (s2, c2) = sin_cos(self.theta2);
        let (s3, c3) = sin_cos(self.theta3);
        [c3, s3 * c2, s3 * s2 * s1, s3 * s2 * c1]
    }

    pub fn to_params(&self, alpha: f64) -> Result<ECPParams> {
        let [z, b, g, d] = self.coefficients();
        ECPParams::allow_degenerate(z, b, g, d, alpha)
    }
}

fn coh(x: i64) -> Label {
    Label::Coh(CoherentLabel::from_ints(x, 0))
}

fn omega_like(alpha: f64, cs_modes: [&str; 4], amps: [f64; 4]) -> HybridState {
    let modes = POL_MODES.iter().map(|m| Mode::pol(*m)).chain(cs_modes.iter().map(|m| Mode::coh(*m))).collect();
    let registry = ModeRegistry::new(modes).expect("distinct mode names");
    let terms = PATTERN
        .iter()
        .zip(amps)
        .map(|((pol, cs), a)| {
            let labels = pol.iter().map(|p| Label::Pol(*p)).chain(cs.iter().map(|&x| coh(x))).collect();
            Term::new(a, labels)
        })
        .collect();
    HybridState::new(registry, terms, alpha).expect("valid labels")
}

/// |Ω′⟩ on the input modes; amplitudes (ζ, β, γ, -δ).
pub fn build_nonmax_omega(p: &ECPParams) -> HybridState {
    omega_like(p.alpha, INPUT_CS_MODES, [p.zeta, p.beta, p.gamma, -p.delta])
}

/// The maximal |Ω⟩ on the output modes, the concentration target.
pub fn build_omega_target(alpha: f64) -> HybridState {
    omega_like(alpha, OUTPUT_CS_MODES, [0.5, 0.5, 0.5, -0.5])
}

/// N₁(ζ|-α,α⟩ + β|α,α⟩ + γ|-α,-α⟩ + δ|α,-α⟩) on (e1, f1).
pub fn build_two_mode_ancilla(p: &ECPParams) -> HybridState {
    let registry = ModeRegistry::new(vec![Mode::coh("e1"), Mode::coh("f1")]).expect("distinct");
    let n1 = p.n1();
    let terms = vec![
        Term::new(n1 * p.zeta, vec![coh(-1), coh(1)]),
        Term::new(n1 * p.beta, vec![coh(1), coh(1)]),
        Term::new(n1 * p.gamma, vec![coh(-1), coh(-1)]),
        Term::new(n1 * p.delta, vec![coh(1), coh(-1)]),
    ];
    HybridState::new(registry, terms, p.alpha).expect("valid labels")
}

/// N₂(ζβ|-α⟩ + δγ|α⟩) on g1.
pub fn build_single_mode_ancilla(p: &ECPParams) -> Result<HybridState> {
    let inv = p.n2_inv_sq();
    if !(inv > 0.0) {
        return Err(HybridError::ZeroNorm);
    }
    let n2 = inv.powf(-0.5);
    let registry = ModeRegistry::new(vec![Mode::coh("g1")]).expect("single mode");
    let terms = vec![Term::new(n2 * p.zeta * p.beta, vec![coh(-1)]), Term::new(n2 * p.delta * p.gamma, vec![coh(1)])];
    HybridState::new(registry, terms, p.alpha)
}

/// P = 4(N₁N₂ζβδγ)², zero for degenerate coefficients.
pub fn success_probability_closed_form(p: &ECPParams) -> f64 {
    let prod = p.zeta * p.beta * p.delta * p.gamma;
    if prod == 0.0 {
        return 0.0;
    }
    4.0 * (p.n1() * p.n2() * prod).powi(2)
}

/// Independent semantics for the two detector kinds. Ideal vacuum plus
/// exact parity is the configuration in which parity correction alone can
/// be checked against the ideal output.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PipelineMode {
    pub vacuum: FidelityMode,
    pub parity: FidelityMode,
}

impl PipelineMode {
    pub const IDEAL: Self = Self { vacuum: FidelityMode::Ideal, parity: FidelityMode::Ideal };
    pub const EXACT: Self = Self { vacuum: FidelityMode::Exact, parity: FidelityMode::Exact };

    pub fn is_ideal(&self) -> bool {
        *self == Self::IDEAL
    }
}

impl From<FidelityMode> for PipelineMode {
    fn from(fm: FidelityMode) -> Self {
        Self { vacuum: fm, parity: fm }
    }
}

#[derive(Clone, Debug)]
enum Step {
    Tensor(HybridState),
    /// Beamsplitter on (m1, m2) with outputs renamed; `fresh` adds m2 as a vacuum port first.
    Beamsplitter { m1: &'static str, m2: &'static str, out1: &'static str, out2: &'static str, fresh: bool },
    Vacuum(&'static str),
    Parity { mode: &'static str, partner: &'static str },
}

impl Step {
    fn name(&self) -> String {
        match self {
            Step::Tensor(s) => format!("tensor {}", s.registry().names().collect::<Vec<_>>().join(",")),
            Step::Beamsplitter { m1, m2, .. } => format!("beamsplitter {m1},{m2}"),
            Step::Vacuum(m) => format!("vacuum {m}"),
            Step::Parity { mode, .. } => format!("parity-discard {mode}"),
        }
    }
}

fn stage_one(p: &ECPParams) -> Vec<Step> {
    vec![
        Step::Tensor(build_two_mode_ancilla(p)),
        Step::Beamsplitter { m1: "c1", m2: "e1", out1: "c2", out2: "e2", fresh: false },
        Step::Beamsplitter { m1: "d1", m2: "f1", out1: "d2", out2: "f2", fresh: false },
        Step::Vacuum("e2"),
        Step::Vacuum("f2"),
        Step::Beamsplitter { m1: "c2", m2: "c4", out1: "c3", out2: "c4", fresh: true },
        Step::Beamsplitter { m1: "d2", m2: "d4", out1: "d3", out2: "d4", fresh: true },
        Step::Parity { mode: "c4", partner: "c3" },
        Step::Parity { mode: "d4", partner: "d3" },
    ]
}

fn stage_two(anc: HybridState) -> Vec<Step> {
    vec![
        Step::Tensor(anc),
        Step::Beamsplitter { m1: "a1", m2: "g1", out1: "a2", out2: "g2", fresh: false },
        Step::Vacuum("g2"),
        Step::Beamsplitter { m1: "a2", m2: "a4", out1: "a3", out2: "a4", fresh: true },
        Step::Parity { mode: "a4", partner: "a3" },
    ]
}

/// One stage of a sampled run.
#[derive(Clone, Debug)]
pub struct StageSnapshot {
    pub name: String,
    /// Normalized state after the stage.
    pub state: HybridState,
    pub record: Option<MeasurementRecord>,
}

/// One leaf of the pipeline: a full assignment of parity outcomes.
#[derive(Clone, Debug)]
pub struct PipelineLeaf {
    /// (mode, outcome, zero photons) for every parity discard.
    pub parities: Vec<(String, Outcome, bool)>,
    /// Probability of this parity assignment given the vacuum events.
    pub parity_weight: f64,
    /// Product of the vacuum acceptance probabilities along this path.
    pub vacuum_probability: f64,
    /// Normalized output; `None` when a post-selection had probability 0.
    pub state: Option<HybridState>,
}

enum Chooser<'a> {
    Enumerate,
    Sample(&'a mut dyn RngCore),
}

struct Walk<'a> {
    mode: PipelineMode,
    chooser: Chooser<'a>,
    trace: Vec<StageSnapshot>,
    leaves: Vec<PipelineLeaf>,
}

impl Walk<'_> {
    fn record(&mut self, name: String, state: &HybridState, record: Option<MeasurementRecord>) {
        if matches!(self.chooser, Chooser::Sample(_)) {
            self.trace.push(StageSnapshot { name, state: state.clone(), record });
        }
    }

    fn run(&mut self, mut s: HybridState, steps: &[Step], mut leaf: PipelineLeaf, rest: &dyn Fn() -> Vec<Step>) -> Result<()> {
        for (k, step) in steps.iter().enumerate() {
            match step {
                Step::Tensor(t) => s = s.tensor(t)?,
                Step::Beamsplitter { m1, m2, out1, out2, fresh } => {
                    if *fresh {
                        s = s.with_vacuum_mode(m2)?;
                    }
                    s = apply_beamsplitter(&s, m1, m2)?;
                    if m1 != out1 {
                        s = s.rename_mode(m1, out1)?;
                    }
                    if m2 != out2 {
                        s = s.rename_mode(m2, out2)?;
                    }
                }
                Step::Vacuum(m) => {
                    let r = postselect_vacuum(&s, m, self.mode.vacuum)?;
                    leaf.vacuum_probability *= r.probability;
                    self.record(step.name(), &r.state, Some(r.record));
                    if r.probability == 0.0 || r.state.is_zero() {
                        leaf.vacuum_probability = 0.0;
                        leaf.state = None;
                        self.leaves.push(leaf);
                        return Ok(());
                    }
                    s = r.state;
                    continue;
                }
                Step::Parity { mode, partner } => {
                    let fm = self.mode.parity;
                    match (&mut self.chooser, fm) {
                        (Chooser::Enumerate, FidelityMode::Exact) => {
                            for b in photon_count_branches(&s, mode, Some(partner))? {
                                let mut next = leaf.clone();
                                next.parity_weight *= b.probability;
                                next.parities.push((mode.to_string(), b.outcome, b.zero_photons));
                                self.run(b.state, &steps[k + 1..], next, rest)?;
                            }
                            return Ok(());
                        }
                        (Chooser::Sample(rng), FidelityMode::Exact) => {
                            let (next, rec) = measure_photon_parity_discard(&s, mode, Some(partner), fm, Some(&mut **rng))?;
                            leaf.parity_weight *= rec.branch_probability;
                            leaf.parities.push((mode.to_string(), rec.outcome, rec.zero_photons));
                            s = next;
                            self.record(step.name(), &s, Some(rec));
                        }
                        (_, FidelityMode::Ideal) => {
                            leaf.vacuum_probability *= ideal_discard_norm_ratio(&s, mode)?;
                            let (next, rec) = measure_photon_parity_discard(&s, mode, Some(partner), fm, None)?;
                            leaf.parities.push((mode.to_string(), rec.outcome, rec.zero_photons));
                            s = next;
                            self.record(step.name(), &s, Some(rec));
                        }
                    }
                    continue;
                }
            }
            self.record(step.name(), &s, None);
        }
        let tail = rest();
        if tail.is_empty() {
            leaf.state = Some(s);
            self.leaves.push(leaf);
            Ok(())
        } else {
            self.run(s, &tail, leaf, &Vec::new)
        }
    }
}

fn walk(p: &ECPParams, mode: PipelineMode, chooser: Chooser<'_>) -> Result<(Vec<PipelineLeaf>, Vec<StageSnapshot>)> {
    let omega = build_nonmax_omega(p).normalize()?;
    let root = PipelineLeaf { parities: Vec::new(), parity_weight: 1.0, vacuum_probability: 1.0, state: None };
    let mut w = Walk { mode, chooser, trace: Vec::new(), leaves: Vec::new() };
    w.record("omega-prime".into(), &omega, None);
    match build_single_mode_ancilla(p) {
        Ok(anc) => {
            let second = move || stage_two(anc.clone());
            w.run(omega, &stage_one(p), root, &second)?;
        }
        // ζβ = δγ = 0: Alice has no ancilla to prepare and nothing survives
        Err(HybridError::ZeroNorm) => {
            w.leaves.push(PipelineLeaf { vacuum_probability: 0.0, ..root });
        }
        Err(e) => return Err(e),
    }
    Ok((w.leaves, w.trace))
}

#[derive(Clone, Debug)]
pub struct ECPResult {
    pub params: ECPParams,
    pub mode: PipelineMode,
    pub success_probability_ideal: f64,
    pub success_probability_closed_form: f64,
    /// Product of the vacuum acceptance probabilities along the sampled path
    /// (non-ideal modes only).
    pub success_probability_exact: Option<f64>,
    /// Normalized output; `None` when the post-selection chain has probability 0.
    pub final_state: Option<HybridState>,
    pub stage_trace: Vec<StageSnapshot>,
    /// Fidelity of `final_state` with the maximal target.
    pub fidelity: Option<f64>,
    pub parities: Vec<(String, Outcome, bool)>,
}

fn ideal_leaf(p: &ECPParams) -> Result<(PipelineLeaf, Vec<StageSnapshot>)> {
    let mut dummy = NoRng;
    let (mut leaves, trace) = walk(p, PipelineMode::IDEAL, Chooser::Sample(&mut dummy))?;
    Ok((leaves.pop().expect("ideal walk yields one leaf"), trace))
}

/// Runs the concentration sequence once.
///
/// Non-ideal modes need `rng` for the photon-count samples; ideal mode never
/// touches it.
pub fn run_ecp(p: &ECPParams, mode: impl Into<PipelineMode>, rng: Option<&mut dyn RngCore>) -> Result<ECPResult> {
    let mode = mode.into();
    let (ideal, ideal_trace) = ideal_leaf(p)?;
    let closed = success_probability_closed_form(p);
    let target = build_omega_target(p.alpha);
    let fid = |s: &Option<HybridState>| s.as_ref().map(|s| s.fidelity(&target)).transpose();
    if mode.is_ideal() {
        return Ok(ECPResult {
            params: *p,
            mode,
            success_probability_ideal: ideal.vacuum_probability,
            success_probability_closed_form: closed,
            success_probability_exact: None,
            fidelity: fid(&ideal.state)?,
            final_state: ideal.state,
            stage_trace: ideal_trace,
            parities: ideal.parities,
        });
    }
    let needs_rng = mode.parity == FidelityMode::Exact;
    let (leaf, trace) = match (rng, needs_rng) {
        (Some(r), _) => {
            let (mut leaves, trace) = walk(p, mode, Chooser::Sample(r))?;
            (leaves.pop().expect("sampled walk yields one leaf"), trace)
        }
        (None, false) => {
            let mut dummy = NoRng;
            let (mut leaves, trace) = walk(p, mode, Chooser::Sample(&mut dummy))?;
            (leaves.pop().expect("sampled walk yields one leaf"), trace)
        }
        (None, true) => return Err(HybridError::MissingRng),
    };
    Ok(ECPResult {
        params: *p,
        mode,
        success_probability_ideal: ideal.vacuum_probability,
        success_probability_closed_form: closed,
        success_probability_exact: Some(leaf.vacuum_probability),
        fidelity: fid(&leaf.state)?,
        final_state: leaf.state,
        stage_trace: trace,
        parities: leaf.parities,
    })
}

/// Deterministic average over every photon-count branch.
#[derive(Clone, Debug)]
pub struct BranchAverage {
    pub mode: PipelineMode,
    /// Σ_leaves parity weight × vacuum acceptance.
    pub success_probability: f64,
    /// Ideal-mode output the branches are compared against.
    pub reference: Option<HybridState>,
    /// Success-weighted mean fidelity with `reference`.
    pub mean_fidelity: f64,
    pub min_fidelity: f64,
    pub leaves: Vec<PipelineLeaf>,
}

/// Enumerates all photon-count outcomes of the pipeline in `mode`.
pub fn branch_average(p: &ECPParams, mode: impl Into<PipelineMode>) -> Result<BranchAverage> {
    let mode = mode.into();
    let (ideal, _) = ideal_leaf(p)?;
    let (leaves, _) = walk(p, mode, Chooser::Enumerate)?;
    let mut success = 0.0;
    let mut fsum = 0.0;
    let mut fmin = f64::INFINITY;
    for leaf in &leaves {
        let w = leaf.parity_weight * leaf.vacuum_probability;
        success += w;
        if let (Some(s), Some(r)) = (&leaf.state, &ideal.state) {
            let f = s.fidelity(r)?;
            fsum += w * f;
            fmin = fmin.min(f);
        }
    }
    let mean_fidelity = if success > 0.0 { fsum / success } else { f64::NAN };
    Ok(BranchAverage {
        mode,
        success_probability: success,
        reference: ideal.state,
        mean_fidelity,
        min_fidelity: if fmin.is_finite() { fmin } else { f64::NAN },
        leaves,
    })
}

/// Placeholder generator for walks that never sample.
struct NoRng;

impl RngCore for NoRng {
    fn next_u32(&mut self) -> u32 {
        unreachable!("ideal-mode photon counting never samples")
    }
    fn next_u64(&mut self) -> u64 {
        unreachable!("ideal-mode photon counting never samples")
    }
    fn fill_bytes(&mut self, _: &mut [u8]) {
        unreachable!("ideal-mode photon counting never samples")
    }
}

impl ECPResult {
    /// Snapshot immediately after the named stage.
    pub fn stage(&self, name: &str) -> Option<&StageSnapshot> {
        self.stage_trace.iter().find(|s| s.name == name)
    }
}

/// Amplitude of every term of `s` divided by the amplitude of the matching
/// term in `reference` — a constant ratio means equality up to normalization.
pub fn amplitude_ratios(s: &HybridState, reference: &HybridState) -> Result<Vec<C64>> {
    let aligned = s.aligned_to(reference.registry())?;
    if aligned.terms().len() != reference.terms().len() {
        return Err(HybridError::RegistryMismatch(format!(
            "{} terms vs {} in the reference",
            aligned.terms().len(),
            reference.terms().len()
        )));
    }
    aligned
        .terms()
        .iter()
        .zip(reference.terms())
        .map(|(a, b)| {
            if a.labels != b.labels {
                Err(HybridError::RegistryMismatch("label sets differ".into()))
            } else {
                Ok(a.amplitude / b.amplitude)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const EQ_P_ALPHA1: f64 = 0.08541568116806825;

    #[test]
    fn params_validation() {
        assert!(ECPParams::new(0.5, 0.5, 0.5, 0.5, 1.0).is_ok());
        assert!(ECPParams::new(1.0, 0.0, 0.0, 0.0, 1.0).is_err());
        assert!(ECPParams::allow_degenerate(1.0, 0.0, 0.0, 0.0, 1.0).is_ok());
        assert!(ECPParams::new(0.5, 0.5, 0.5, 0.6, 1.0).is_err());
        assert!(ECPParams::new(0.5, 0.5, 0.5, 0.5, 0.0).is_err());
    }

    #[test]
    fn angle_map_is_normalized_and_exact_on_quadrants() {
        let c = AngleParams::new(0.3, 1.1, 2.0).coefficients();
        assert!((c.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-15);
        for j in [0.0, 1.0, 2.0] {
            let t = j * FRAC_PI_2;
            let c = AngleParams::new(t, 0.7, 0.9).coefficients();
            assert_eq!(c[2] * c[3], 0.0);
        }
        // grid point 90 of a 181-point [0, π] grid
        let t = 90.0 * std::f64::consts::PI / 180.0;
        assert_eq!(sin_cos(t), (1.0, 0.0));
    }

    #[test]
    fn nonmax_omega_is_normalized_and_reduces_to_target() {
        let p = ECPParams::new(0.1, 0.7, 0.5, (1.0f64 - 0.75).sqrt(), 0.8).unwrap();
        assert!((build_nonmax_omega(&p).norm_sqr() - 1.0).abs() < 1e-12);
        let eq = ECPParams::equal(1.3).unwrap();
        let s = build_nonmax_omega(&eq);
        let t = build_omega_target(1.3).rename_mode("a3", "a1").unwrap().rename_mode("c3", "c1").unwrap();
        let t = t.rename_mode("d3", "d1").unwrap();
        assert!((s.fidelity(&t).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn ancilla_normalizers() {
        let p = ECPParams::equal(1.0).unwrap();
        let e = (-2.0f64).exp();
        assert!((p.n1() - 1.0 / (1.0 + e)).abs() < 1e-12);
        assert!((p.n1() - 0.8808).abs() < 1e-4);
        assert!((build_two_mode_ancilla(&p).norm_sqr() - 1.0).abs() < 1e-12);
        assert!((p.n2().powi(2) - 8.0 / (1.0 + e)).abs() < 1e-12);
        assert!((p.n2().powi(2) - 7.0464).abs() < 1e-4);
        assert!((build_single_mode_ancilla(&p).unwrap().norm_sqr() - 1.0).abs() < 1e-12);
        let big = ECPParams::new(0.1, 0.7, 0.5, 0.5, 8.0).unwrap();
        assert!((big.n1() - 1.0).abs() < 1e-12);
        let lim = (0.1f64 * 0.7).powi(2) + (0.5f64 * 0.5).powi(2);
        assert!((big.n2() - lim.powf(-0.5)).abs() < 1e-12);
    }

    #[test]
    fn closed_form_reference_values() {
        let e = (-2.0f64).exp();
        let p = success_probability_closed_form(&ECPParams::equal(1.0).unwrap());
        assert!((p - 1.0 / (8.0 * (1.0 + e).powi(3))).abs() < 1e-15);
        assert!((p - EQ_P_ALPHA1).abs() < 1e-15);
        let r = AngleParams::default().to_params(1.0).unwrap();
        assert!((success_probability_closed_form(&r) - 0.0730439516855928).abs() < 1e-13);
        let d = ECPParams::allow_degenerate(1.0, 0.0, 0.0, 0.0, 1.0).unwrap();
        assert_eq!(success_probability_closed_form(&d), 0.0);
    }

    #[test]
    fn ideal_run_reference_point() {
        let r = run_ecp(&ECPParams::equal(1.0).unwrap(), FidelityMode::Ideal, None).unwrap();
        assert!((r.success_probability_ideal - EQ_P_ALPHA1).abs() < 1e-12);
        assert!((r.fidelity.unwrap() - 1.0).abs() < 1e-12);
        let r3 = run_ecp(&ECPParams::equal(3.0).unwrap(), FidelityMode::Ideal, None).unwrap();
        assert!((r3.success_probability_ideal - 0.125).abs() < 1e-6);
    }

    #[test]
    fn degenerate_params_give_zero() {
        for c in [[1.0, 0.0, 0.0, 0.0], [0.0, 0.6, 0.8, 0.0], [0.6, 0.0, 0.0, 0.8], [0.5, 0.5, 0.5f64.sqrt(), 0.0]] {
            let p = ECPParams::allow_degenerate(c[0], c[1], c[2], c[3], 1.0).unwrap();
            let r = run_ecp(&p, FidelityMode::Ideal, None).unwrap();
            assert_eq!(r.success_probability_ideal, 0.0, "{c:?}");
            assert_eq!(r.success_probability_closed_form, 0.0);
        }
    }

    /// Printed ket as (amplitude, polarization pattern, labels in units of α
    /// with 2 meaning √2).
    fn ket(alpha: f64, cs: &[&str], rows: &[(f64, &str, &[i64])]) -> HybridState {
        let modes = POL_MODES.iter().map(|m| Mode::pol(*m)).chain(cs.iter().map(|m| Mode::coh(*m))).collect();
        let reg = ModeRegistry::new(modes).unwrap();
        let terms = rows
            .iter()
            .map(|(a, pol, cs)| {
                let p = pol.chars().map(|c| Label::Pol(if c == '+' { PolLabel::Plus } else { PolLabel::Minus }));
                let c = cs.iter().map(|&x| match x {
                    2 => Label::Coh(CoherentLabel::sqrt2()),
                    -2 => Label::Coh(-CoherentLabel::sqrt2()),
                    x => coh(x),
                });
                Term::new(*a, p.chain(c).collect())
            })
            .collect();
        HybridState::new(reg, terms, alpha).unwrap()
    }

    fn assert_proportional(s: &HybridState, reference: &HybridState) {
        let r = amplitude_ratios(s, reference).unwrap_or_else(|e| panic!("{e}\n{s}\nvs\n{reference}"));
        for x in &r {
            assert!((x - r[0]).norm() < 1e-12 * r[0].norm(), "{r:?}");
        }
    }

    #[test]
    fn intermediate_states_match_printed_kets() {
        let p = ECPParams::new(0.3, 0.5, 0.4, 0.5f64.sqrt(), 1.1).unwrap();
        let (z, b, g, d) = (p.zeta, p.beta, p.gamma, p.delta);
        let r = run_ecp(&p, FidelityMode::Ideal, None).unwrap();

        let sixteen = ket(
            p.alpha,
            &["a1", "b", "c2", "d2", "e2", "f2"],
            &[
                (z * z, "++++", &[1, 1, 0, 2, 2, 0]),
                (z * b, "+--+", &[1, -1, -2, 2, 0, 0]),
                (g * z, "-++-", &[-1, 1, 0, 0, 2, -2]),
                (-z * d, "----", &[-1, -1, -2, 0, 0, -2]),
                (b * z, "++++", &[1, 1, 2, 2, 0, 0]),
                (b * b, "+--+", &[1, -1, 0, 2, -2, 0]),
                (b * g, "-++-", &[-1, 1, 2, 0, 0, -2]),
                (-d * b, "----", &[-1, -1, 0, 0, -2, -2]),
                (g * z, "++++", &[1, 1, 0, 0, 2, 2]),
                (b * g, "+--+", &[1, -1, -2, 0, 0, 2]),
                // d2 = (-α - α)/√2 = -√2α
                (g * g, "-++-", &[-1, 1, 0, -2, 2, 0]),
                (-d * g, "----", &[-1, -1, -2, -2, 0, 0]),
                (z * d, "++++", &[1, 1, 2, 0, 0, 2]),
                (b * d, "+--+", &[1, -1, 0, 0, -2, 2]),
                (d * g, "-++-", &[-1, 1, 2, -2, 0, 0]),
                (-d * d, "----", &[-1, -1, 0, -2, -2, 0]),
            ],
        );
        // the two beamsplitters are stages 2 and 3 (after omega-prime and the tensor)
        assert_proportional(&r.stage_trace[3].state, &sixteen);

        let four = ket(
            p.alpha,
            &["a1", "b", "c2", "d2"],
            &[
                (z * b, "+--+", &[1, -1, -2, 2]),
                (b * z, "++++", &[1, 1, 2, 2]),
                (-d * g, "----", &[-1, -1, -2, -2]),
                (d * g, "-++-", &[-1, 1, 2, -2]),
            ],
        );
        assert_proportional(&r.stage("vacuum f2").unwrap().state, &four);

        let after_cd = ket(
            p.alpha,
            &["a1", "b", "c3", "d3"],
            &[(z * b, "+--+", &[1, -1, -1, 1]), (b * z, "++++", &[1, 1, 1, 1]), (-d * g, "----", &[-1, -1, -1, -1]), (d * g, "-++-", &[-1, 1, 1, -1])],
        );
        assert_proportional(&r.stage("parity-discard d4").unwrap().state, &after_cd);

        // amplification checkpoint: a2 carries ±√2 right before the last beamsplitter
        let pre = ket(
            p.alpha,
            &["a2", "b", "c3", "d3"],
            &[(1.0, "+--+", &[2, -1, -1, 1]), (1.0, "++++", &[2, 1, 1, 1]), (1.0, "-++-", &[-2, 1, 1, -1]), (-1.0, "----", &[-2, -1, -1, -1])],
        );
        let vac_g = r.stage("vacuum g2").unwrap();
        assert_proportional(&vac_g.state, &pre);
        for l in vac_g.state.labels_of("a2").unwrap() {
            assert_eq!(l.as_coh().unwrap().abs(), CoherentLabel::sqrt2());
        }
    }

    #[test]
    fn exact_mode_needs_rng_ideal_does_not() {
        let p = ECPParams::equal(1.0).unwrap();
        assert_eq!(run_ecp(&p, FidelityMode::Exact, None).unwrap_err(), HybridError::MissingRng);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = run_ecp(&p, FidelityMode::Exact, Some(&mut rng)).unwrap();
        assert!(r.success_probability_exact.is_some());
        // exact vacuum with ideal counting is deterministic
        let vac_only = PipelineMode { vacuum: FidelityMode::Exact, parity: FidelityMode::Ideal };
        assert!(matches!(run_ecp(&p, vac_only, None), Err(HybridError::NonuniformMagnitude(_))));
    }

    #[test]
    fn parity_correction_restores_ideal_output() {
        let mode = PipelineMode { vacuum: FidelityMode::Ideal, parity: FidelityMode::Exact };
        for alpha in [0.5, 1.0, 2.0] {
            let avg = branch_average(&ECPParams::equal(alpha).unwrap(), mode).unwrap();
            assert_eq!(avg.leaves.len(), 8);
            assert!((avg.min_fidelity - 1.0).abs() < 1e-10);
            let w: f64 = avg.leaves.iter().map(|l| l.parity_weight).sum();
            assert!((w - 1.0).abs() < 1e-12);
            let ideal = success_probability_closed_form(&ECPParams::equal(alpha).unwrap());
            assert!((avg.success_probability - ideal).abs() < 1e-12);
        }
    }

    #[test]
    fn sampled_exact_runs_are_reproducible() {
        let p = ECPParams::new(0.3, 0.5, 0.4, 0.5f64.sqrt(), 0.9).unwrap();
        let a = run_ecp(&p, FidelityMode::Exact, Some(&mut ChaCha8Rng::seed_from_u64(11))).unwrap();
        let b = run_ecp(&p, FidelityMode::Exact, Some(&mut ChaCha8Rng::seed_from_u64(11))).unwrap();
        assert_eq!(a.parities, b.parities);
        assert_eq!(a.success_probability_exact, b.success_probability_exact);
        assert_eq!(a.final_state, b.final_state);
    }

    #[test]
    fn random_params_match_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let v: [f64; 4] = std::array::from_fn(|_| rng.random_range(0.05..1.0));
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let p = ECPParams::new(v[0] / n, v[1] / n, v[2] / n, v[3] / n, rng.random_range(0.3..3.0)).unwrap();
            let r = run_ecp(&p, FidelityMode::Ideal, None).unwrap();
            assert!((r.success_probability_ideal - r.success_probability_closed_form).abs() < 1e-10);
            assert!((r.fidelity.unwrap() - 1.0).abs() < 1e-10);
        }
    }
}
