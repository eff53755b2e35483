//! Hierarchical quantum information splitting over the Omega-type channel.
//!
//! Alice holds the secret λ|0_L⟩ + η|1_L⟩ on qubit A0 and qubit A of
//!
//! ```text
//! |Ω⟩ = ½(|0000⟩ + |0110⟩ + |1001⟩ - |1111⟩)_ABCD = (|0⟩_A|ψ₀⟩ + |1⟩_A|ψ₁⟩)/√2,
//! |ψ₀⟩ = (|000⟩ + |110⟩)/√2,   |ψ₁⟩ = (|001⟩ - |111⟩)/√2   (on BCD).
//! ```
//!
//! After her logical Bell measurement the secret is split over B, C, D.
//! Diana (high power) recovers it once Bob *or* Charlie reports a
//! computational-basis result; Bob or Charlie (low power) need a joint Bell
//! measurement by the other two agents.
//!
//! All measurements are projections in the orthonormal logical basis, so
//! the protocol is exact at every α.

pub mod bell;
pub mod tables;

use std::fmt;

use num_complex::Complex64 as C64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ecp::{build_omega_target, OUTPUT_CS_MODES, POL_MODES};
use crate::error::{HybridError, Result};
use crate::exec::Execution;
use crate::logical::{logical_amplitudes, logical_state, reduced_density_logical, split_logical_checked, DensityMatrix, LogicalQubit};
use crate::state::{HybridState, NORM_TOLERANCE};

pub use bell::{bell_branches, logical_bell_state, verify_bell_decomposition, BellAudit, LogicalBellOutcome};
pub use tables::{derive_table, printed_rows, Correction, CorrectionRow, CorrectionTable, Transform};

/// Tolerance on |λ|² + |η|² = 1.
pub const SECRET_TOLERANCE: f64 = 1e-12;
/// Recovered fidelity must be 1 within this.
pub const FIDELITY_TOLERANCE: f64 = 1e-10;

/// Alice's secret qubit A0.
pub fn secret_qubit() -> LogicalQubit {
    LogicalQubit::new("a0.pol", "a0")
}

/// Channel qubits A, B, C, D, on the modes the concentration sequence outputs.
pub fn channel_qubits() -> [LogicalQubit; 4] {
    std::array::from_fn(|k| LogicalQubit::new(POL_MODES[k], OUTPUT_CS_MODES[k]))
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputSecret {
    pub lambda: C64,
    pub eta: C64,
}

impl InputSecret {
    pub fn new(lambda: C64, eta: C64) -> Result<Self> {
        let n = lambda.norm_sqr() + eta.norm_sqr();
        if !((n - 1.0).abs() <= SECRET_TOLERANCE) {
            return Err(HybridError::InvalidParams(format!("|λ|²+|η|² = {n}, expected 1")));
        }
        Ok(Self { lambda, eta })
    }

    /// Accepts |λ|²+|η|² within `tol` of 1 and rescales onto the unit sphere.
    pub fn normalized(lambda: C64, eta: C64, tol: f64) -> Result<Self> {
        let n = lambda.norm_sqr() + eta.norm_sqr();
        if !((n - 1.0).abs() <= tol) {
            return Err(HybridError::InvalidParams(format!("|λ|²+|η|² = {n}, expected 1 within {tol:e}")));
        }
        let s = n.sqrt();
        Ok(Self { lambda: lambda / s, eta: eta / s })
    }

    /// Haar-random secret: |λ|² uniform on [0, 1], independent uniform phases.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let u: f64 = rng.random();
        let (p, q): (f64, f64) = (rng.random_range(0.0..std::f64::consts::TAU), rng.random_range(0.0..std::f64::consts::TAU));
        Self { lambda: C64::from_polar(u.sqrt(), p), eta: C64::from_polar((1.0 - u).sqrt(), q) }
    }

    pub fn state(&self, alpha: f64, q: &LogicalQubit) -> Result<HybridState> {
        logical_state(alpha, std::slice::from_ref(q), &[self.lambda, self.eta])
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Recoverer {
    Diana,
    Bob,
    Charlie,
}

impl Recoverer {
    pub const ALL: [Self; 3] = [Self::Diana, Self::Bob, Self::Charlie];

    /// The qubit the recoverer ends up holding.
    pub fn qubit(self) -> LogicalQubit {
        let [_, b, c, d] = channel_qubits();
        match self {
            Self::Diana => d,
            Self::Bob => b,
            Self::Charlie => c,
        }
    }
}

impl fmt::Display for Recoverer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Diana => "diana",
            Self::Bob => "bob",
            Self::Charlie => "charlie",
        })
    }
}

impl std::str::FromStr for Recoverer {
    type Err = HybridError;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|r| r.to_string() == s)
            .ok_or_else(|| HybridError::InvalidParams(format!("unknown recoverer {s:?}")))
    }
}

/// A helper's announcement: a logical-basis bit or a joint Bell outcome.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HelperOutcome {
    Logical(u8),
    Bell(LogicalBellOutcome),
}

impl fmt::Display for HelperOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Logical(b) => write!(f, "{b}_L"),
            Self::Bell(o) => write!(f, "{o}"),
        }
    }
}

impl std::str::FromStr for HelperOutcome {
    type Err = HybridError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "0_L" => Ok(Self::Logical(0)),
            "1_L" => Ok(Self::Logical(1)),
            _ => s.parse().map(Self::Bell),
        }
    }
}

impl Serialize for HelperOutcome {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for HelperOutcome {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The maximal Omega-type channel on qubits A–D.
pub fn build_channel(alpha: f64) -> Result<HybridState> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(HybridError::InvalidParams(format!("alpha must be positive, got {alpha}")));
    }
    Ok(build_omega_target(alpha))
}

/// |ψ⟩_in ⊗ channel.
pub fn input_state(secret: &InputSecret, channel: &HybridState) -> Result<HybridState> {
    secret.state(channel.alpha(), &secret_qubit())?.tensor(channel)
}

/// An unnormalized measurement branch and its probability.
#[derive(Clone, Debug)]
pub struct Branch<O> {
    pub outcome: O,
    pub probability: f64,
    /// Unnormalized post-measurement state (measured qubits removed).
    pub raw: HybridState,
}

impl<O> Branch<O> {
    pub fn state(&self) -> Result<HybridState> {
        self.raw.normalize()
    }
}

/// Alice's logical Bell measurement on (A0, A), all four branches.
pub fn alice_branches(s: &HybridState) -> Result<Vec<Branch<LogicalBellOutcome>>> {
    let total = s.norm_sqr();
    if !(total > NORM_TOLERANCE) {
        return Err(HybridError::ZeroNorm);
    }
    let [a, ..] = channel_qubits();
    Ok(bell_branches(s, &secret_qubit(), &a)?
        .into_iter()
        .map(|(outcome, raw)| Branch { outcome, probability: raw.norm_sqr() / total, raw })
        .collect())
}

/// Index drawn from `probs`, never landing on a zero-probability entry.
fn sample_index(probs: &[f64], rng: &mut dyn RngCore) -> usize {
    let total: f64 = probs.iter().sum();
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (k, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        last = k;
        acc += p;
        if u < acc {
            return k;
        }
    }
    last
}

/// Samples Alice's outcome; returns (outcome, normalized BCD state, its
/// probability, the full outcome distribution).
pub fn alice_bell_measurement(s: &HybridState, rng: &mut dyn RngCore) -> Result<(LogicalBellOutcome, HybridState, f64, Vec<f64>)> {
    let branches = alice_branches(s)?;
    let probs: Vec<f64> = branches.iter().map(|b| b.probability).collect();
    let b = &branches[sample_index(&probs, rng)];
    Ok((b.outcome, b.state()?, b.probability, probs))
}

/// The helpers' measurements for `recoverer`, every branch with its joint
/// probability. Diana's helpers measure B then C in the logical basis; Bob's
/// helpers measure (C, D) and Charlie's (B, D) in the logical Bell basis.
pub fn helper_branches(collapsed: &HybridState, recoverer: Recoverer) -> Result<Vec<Branch<Vec<HelperOutcome>>>> {
    let total = collapsed.norm_sqr();
    if !(total > NORM_TOLERANCE) {
        return Err(HybridError::ZeroNorm);
    }
    let [_, b, c, d] = channel_qubits();
    let mut out = Vec::new();
    match recoverer {
        Recoverer::Diana => {
            let sb = split_logical_checked(collapsed, std::slice::from_ref(&b))?;
            for (xb, rest) in sb.branches.iter().enumerate() {
                if !(rest.norm_sqr() > NORM_TOLERANCE) {
                    continue;
                }
                let sc = split_logical_checked(rest, std::slice::from_ref(&c))?;
                for (xc, raw) in sc.branches.into_iter().enumerate() {
                    let p = raw.norm_sqr() / total;
                    if p > 0.0 {
                        out.push(Branch { outcome: vec![HelperOutcome::Logical(xb as u8), HelperOutcome::Logical(xc as u8)], probability: p, raw });
                    }
                }
            }
        }
        Recoverer::Bob | Recoverer::Charlie => {
            let (x, y) = if recoverer == Recoverer::Bob { (c, d) } else { (b, d) };
            for (o, raw) in bell_branches(collapsed, &x, &y)? {
                out.push(Branch { outcome: vec![HelperOutcome::Bell(o)], probability: raw.norm_sqr() / total, raw });
            }
        }
    }
    Ok(out)
}

/// Sampled helper measurements: (announcements, normalized recoverer state,
/// per-measurement outcome distributions).
pub fn helper_measurement(
    collapsed: &HybridState,
    recoverer: Recoverer,
    rng: &mut dyn RngCore,
) -> Result<(Vec<HelperOutcome>, HybridState, Vec<Vec<f64>>)> {
    match recoverer {
        Recoverer::Diana => {
            let [_, b, c, _] = channel_qubits();
            let sb = split_logical_checked(collapsed, std::slice::from_ref(&b))?;
            let pb: Vec<f64> = sb.branches.iter().map(|x| x.norm_sqr() / collapsed.norm_sqr()).collect();
            let xb = sample_index(&pb, rng);
            let rest = &sb.branches[xb];
            let sc = split_logical_checked(rest, std::slice::from_ref(&c))?;
            let pc: Vec<f64> = sc.branches.iter().map(|x| x.norm_sqr() / rest.norm_sqr()).collect();
            let xc = sample_index(&pc, rng);
            if xb != xc {
                return Err(HybridError::InconsistentHelpers(format!("Bob measured {xb}_L, Charlie {xc}_L")));
            }
            let state = sc.branches[xc].normalize()?;
            Ok((vec![HelperOutcome::Logical(xb as u8), HelperOutcome::Logical(xc as u8)], state, vec![pb, pc]))
        }
        Recoverer::Bob | Recoverer::Charlie => {
            let branches = helper_branches(collapsed, recoverer)?;
            let probs: Vec<f64> = branches.iter().map(|b| b.probability).collect();
            let b = &branches[sample_index(&probs, rng)];
            Ok((b.outcome.clone(), b.state()?, vec![probs]))
        }
    }
}

/// Run record of one protocol trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HQISTranscript {
    pub trial: u64,
    pub alice_outcome: LogicalBellOutcome,
    pub recoverer: Recoverer,
    pub helper_outcomes: Vec<HelperOutcome>,
    pub corrections: Vec<Correction>,
    pub fidelity: f64,
    /// Distribution of Alice's four outcomes.
    pub branch_probabilities: Vec<f64>,
    /// Distribution of each helper measurement, conditioned on earlier results.
    pub helper_probabilities: Vec<Vec<f64>>,
    pub secret: InputSecret,
}

/// (helper announcements, correction, fidelity, helper distributions)
type Recovery = (Vec<HelperOutcome>, Correction, f64, Vec<Vec<f64>>);

fn recover(
    collapsed: &HybridState,
    alice: LogicalBellOutcome,
    recoverer: Recoverer,
    table: &CorrectionTable,
    secret: &InputSecret,
    rng: &mut dyn RngCore,
) -> Result<Recovery> {
    let (helpers, held, probs) = helper_measurement(collapsed, recoverer, rng)?;
    let correction = table.lookup(alice, &helpers).ok_or_else(|| {
        HybridError::CorrectionSearch(format!("no table row for {alice} with helpers {helpers:?}"))
    })?;
    let q = recoverer.qubit();
    let fixed = correction.apply(&held, &q)?;
    let fidelity = fixed.fidelity(&secret.state(collapsed.alpha(), &q)?)?;
    Ok((helpers, correction, fidelity, probs))
}

/// Diana's recovery after Alice's announcement (Bob and Charlie measure in
/// the logical basis).
pub fn diana_recovery(collapsed: &HybridState, alice: LogicalBellOutcome, secret: &InputSecret, rng: &mut dyn RngCore) -> Result<HQISTranscript> {
    single_recovery(collapsed, alice, Recoverer::Diana, secret, rng)
}

/// Bob's recovery after a joint (C, D) logical Bell measurement.
pub fn bob_recovery(collapsed: &HybridState, alice: LogicalBellOutcome, secret: &InputSecret, rng: &mut dyn RngCore) -> Result<HQISTranscript> {
    single_recovery(collapsed, alice, Recoverer::Bob, secret, rng)
}

/// Charlie's recovery after a joint (B, D) logical Bell measurement.
pub fn charlie_recovery(collapsed: &HybridState, alice: LogicalBellOutcome, secret: &InputSecret, rng: &mut dyn RngCore) -> Result<HQISTranscript> {
    single_recovery(collapsed, alice, Recoverer::Charlie, secret, rng)
}

fn single_recovery(
    collapsed: &HybridState,
    alice: LogicalBellOutcome,
    recoverer: Recoverer,
    secret: &InputSecret,
    rng: &mut dyn RngCore,
) -> Result<HQISTranscript> {
    let table = derive_table(recoverer, collapsed.alpha())?;
    let (helper_outcomes, c, fidelity, helper_probabilities) = recover(collapsed, alice, recoverer, &table, secret, rng)?;
    Ok(HQISTranscript {
        trial: 0,
        alice_outcome: alice,
        recoverer,
        helper_outcomes,
        corrections: vec![c],
        fidelity,
        branch_probabilities: Vec::new(),
        helper_probabilities,
        secret: *secret,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum SecretChoice {
    Fixed(InputSecret),
    /// A fresh Haar-random secret per trial, drawn from the trial's stream.
    Random,
}

#[derive(Clone, Debug)]
pub struct ProtocolConfig {
    pub secret: SecretChoice,
    pub recoverer: Recoverer,
    pub alpha: f64,
    pub seed: u64,
    pub trials: u64,
    /// Channel to use instead of the ideal |Ω⟩, e.g. a concentration output.
    pub channel: Option<HybridState>,
    pub execution: Execution,
}

impl ProtocolConfig {
    pub fn new(secret: SecretChoice, recoverer: Recoverer, alpha: f64, seed: u64, trials: u64) -> Self {
        Self { secret, recoverer, alpha, seed, trials, channel: None, execution: Execution::default() }
    }
}

/// Generator for one trial: the seed's ChaCha8 stream number `trial`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Runs `trials` independent protocol instances. Output is ordered by trial
/// and identical for sequential and parallel execution.
pub fn run_protocol(cfg: &ProtocolConfig) -> Result<Vec<HQISTranscript>> {
    if cfg.trials == 0 {
        return Err(HybridError::InvalidParams("trials must be at least 1".into()));
    }
    let channel = match &cfg.channel {
        Some(ch) => ch.aligned_to(build_channel(ch.alpha())?.registry())?.normalize()?,
        None => build_channel(cfg.alpha)?,
    };
    let table = derive_table(cfg.recoverer, channel.alpha())?;
    let trials: Vec<u64> = (0..cfg.trials).collect();
    cfg.execution
        .map(&trials, |&trial| {
            let mut rng = trial_rng(cfg.seed, trial);
            let secret = match &cfg.secret {
                SecretChoice::Fixed(s) => *s,
                SecretChoice::Random => InputSecret::random(&mut rng),
            };
            let s = input_state(&secret, &channel)?;
            let (alice, collapsed, _, dist) = alice_bell_measurement(&s, &mut rng)?;
            let (helper_outcomes, c, fidelity, helper_probabilities) = recover(&collapsed, alice, cfg.recoverer, &table, &secret, &mut rng)?;
            Ok(HQISTranscript {
                trial,
                alice_outcome: alice,
                recoverer: cfg.recoverer,
                helper_outcomes,
                corrections: vec![c],
                fidelity,
                branch_probabilities: dist,
                helper_probabilities,
                secret,
            })
        })
        .into_iter()
        .collect()
}

/// Evidence for the access structure among the agents.
#[derive(Clone, Debug)]
pub struct HierarchyWitness {
    /// Bob's logical reduced state after Alice's announcement but before
    /// any helper announcement, per Alice outcome.
    pub bob_before_helpers: Vec<(LogicalBellOutcome, DensityMatrix)>,
    /// max |ρ - 𝕀/2| entry over all Alice outcomes.
    pub bob_max_deviation_from_mixed: f64,
    /// Branches of Diana's case where Bob's and Charlie's bits agree / total
    /// branches with nonzero probability.
    pub diana_case_helpers_agree: usize,
    pub diana_case_branches: usize,
    /// Recovered fidelity for every (Alice, helper) branch of Bob's case.
    pub bob_min_fidelity_after_helpers: f64,
}

/// Enumerates every branch for a given secret and checks the hierarchy.
pub fn hierarchy_witness(secret: &InputSecret, alpha: f64) -> Result<HierarchyWitness> {
    let channel = build_channel(alpha)?;
    let s = input_state(secret, &channel)?;
    let bob = Recoverer::Bob.qubit();
    let table = derive_table(Recoverer::Bob, alpha)?;
    let mut bob_before_helpers = Vec::new();
    let mut dev: f64 = 0.0;
    let (mut agree, mut total) = (0, 0);
    let mut fmin = f64::INFINITY;
    for ab in alice_branches(&s)? {
        let collapsed = ab.state()?;
        let rho = reduced_density_logical(&collapsed, std::slice::from_ref(&bob))?;
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 0.5 } else { 0.0 };
                dev = dev.max((rho[(i, j)] - C64::new(want, 0.0)).norm());
            }
        }
        bob_before_helpers.push((ab.outcome, rho));
        for hb in helper_branches(&collapsed, Recoverer::Diana)? {
            total += 1;
            if hb.outcome[0] == hb.outcome[1] {
                agree += 1;
            }
        }
        for hb in helper_branches(&collapsed, Recoverer::Bob)? {
            if hb.probability <= 0.0 {
                continue;
            }
            let c = table.lookup(ab.outcome, &hb.outcome).expect("total table");
            let f = c.apply(&hb.state()?, &bob)?.fidelity(&secret.state(alpha, &bob)?)?;
            fmin = fmin.min(f);
        }
    }
    Ok(HierarchyWitness {
        bob_before_helpers,
        bob_max_deviation_from_mixed: dev,
        diana_case_helpers_agree: agree,
        diana_case_branches: total,
        bob_min_fidelity_after_helpers: fmin,
    })
}

/// Logical amplitudes of a single recoverer qubit.
pub fn recoverer_amplitudes(s: &HybridState, recoverer: Recoverer) -> Result<[C64; 2]> {
    let v = logical_amplitudes(s, std::slice::from_ref(&recoverer.qubit()))?;
    Ok([v[0], v[1]])
}
