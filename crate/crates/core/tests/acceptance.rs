//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
//!
//! Run with `cargo test -p hybrid-core --test acceptance`.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use hybrid_core::ecp::{branch_average, run_ecp, ECPParams, PipelineMode};
use hybrid_core::exec::Execution;
use hybrid_core::hqis::{
    derive_table, hierarchy_witness, printed_rows, run_protocol, verify_bell_decomposition, InputSecret, ProtocolConfig, Recoverer, SecretChoice,
};
use hybrid_core::optics::FidelityMode;
use hybrid_core::sweep::{local_maxima, reference_report, sweep, SweepParam, SweepSpec, DEFAULT_ALPHAS, DEFAULT_POINTS};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20240611;
const DRAWS: usize = 1000;
const P_TOL: f64 = 1e-10;
const F_TOL: f64 = 1e-10;
const RESIDUAL_TOL: f64 = 1e-12;
const RUNTIME_LIMIT: Duration = Duration::from_secs(5);
const LARGE_ALPHA_TOL: f64 = 1e-6;
const HQIS_TRIALS: u64 = 100;
const EQUIPROB_TRIALS: u64 = 10_000;

struct Check {
    id: u8,
    name: &'static str,
    pass: bool,
    detail: Vec<String>,
}

impl Check {
    fn new(id: u8, name: &'static str) -> Self {
        Self { id, name, pass: true, detail: Vec::new() }
    }

    /// Records a sub-check.
    fn sub(&mut self, ok: bool, what: impl Into<String>) {
        self.pass &= ok;
        self.detail.push(format!("{} {}", if ok { "ok  " } else { "FAIL" }, what.into()));
    }

    fn note(&mut self, what: impl Into<String>) {
        self.detail.push(format!("     {}", what.into()));
    }

    fn fail_on(&mut self, e: hybrid_core::HybridError) {
        self.sub(false, format!("error: {e}"));
    }
}

fn draws() -> Vec<ECPParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    (0..DRAWS).map(|_| ECPParams::random(&mut rng, 0.3..3.0)).collect()
}

/// 1 and 2 share the same draws and the same pipeline runs.
fn formula_and_concentration() -> (Check, Check) {
    let mut c1 = Check::new(1, "formula reproduction");
    let mut c2 = Check::new(2, "concentration correctness");
    let params = draws();
    let start = Instant::now();
    let runs = Execution::default().map(&params, |p| run_ecp(p, FidelityMode::Ideal, None));
    let elapsed = start.elapsed();
    let (mut dp, mut df, mut errors) = (0.0f64, 0.0f64, 0);
    for (p, r) in params.iter().zip(&runs) {
        match r {
            Ok(r) => {
                let closed = 4.0 * (p.n1() * p.n2() * p.zeta * p.beta * p.delta * p.gamma).powi(2);
                dp = dp.max((r.success_probability_ideal - closed).abs());
                df = df.max((1.0 - r.fidelity.unwrap_or(f64::NAN)).abs());
                if r.fidelity.is_none() {
                    df = f64::INFINITY;
                }
            }
            Err(_) => errors += 1,
        }
    }
    c1.sub(errors == 0, format!("{errors} pipeline errors over {DRAWS} draws, α ∈ [0.3, 3)"));
    c1.sub(dp < P_TOL, format!("max |P_sim - 4(N1 N2 ζβδγ)²| = {dp:.3e} (< {P_TOL:e})"));
    c1.sub(elapsed < RUNTIME_LIMIT, format!("runtime {:.3} s (< {} s)", elapsed.as_secs_f64(), RUNTIME_LIMIT.as_secs()));
    c2.sub(errors == 0 && df < F_TOL, format!("max |1 - F(final, Ω)| = {df:.3e} (< {F_TOL:e})"));
    (c1, c2)
}

fn reference_point() -> Check {
    let mut c = Check::new(3, "reference point");
    let want = 1.0 / (8.0 * (1.0 + (-2.0f64).exp()).powi(3));
    let check = |c: &mut Check, alpha: f64, want: f64, tol: f64| match ECPParams::equal(alpha).and_then(|p| run_ecp(&p, FidelityMode::Ideal, None)) {
        Ok(r) => {
            let d = (r.success_probability_ideal - want).abs().max((r.success_probability_closed_form - want).abs());
            c.sub(d < tol, format!("equal coefficients α = {alpha}: P_sim = {:.16}, P_closed = {:.16}, target {want:.16}, |Δ| = {d:.3e} (< {tol:e})", r.success_probability_ideal, r.success_probability_closed_form));
        }
        Err(e) => c.fail_on(e),
    };
    check(&mut c, 1.0, want, P_TOL);
    check(&mut c, 3.0, 0.125, LARGE_ALPHA_TOL);
    c
}

fn sweep_structure() -> Check {
    let mut c = Check::new(4, "sweep structure");
    let step = PI / (DEFAULT_POINTS - 1) as f64;
    let (quarter, three_quarter, half) = ((DEFAULT_POINTS - 1) / 4, 3 * (DEFAULT_POINTS - 1) / 4, (DEFAULT_POINTS - 1) / 2);
    for param in [SweepParam::Theta1, SweepParam::Theta2, SweepParam::Theta3] {
        let rows = match sweep(&SweepSpec::one_d(param).with_alphas(&[1.0])) {
            Ok(r) => r,
            Err(e) => {
                c.fail_on(e);
                continue;
            }
        };
        let p: Vec<f64> = rows.iter().map(|r| r.p_closed).collect();
        let zeros = [0, half, DEFAULT_POINTS - 1].iter().all(|&j| rows[j].p_closed == 0.0 && rows[j].p_sim == 0.0);
        c.sub(zeros, format!("{param:?}: P_closed = P_sim = 0 exactly at θ ∈ {{0, π/2, π}}"));
        let agree = rows.iter().map(|r| (r.p_closed - r.p_sim).abs()).fold(0.0, f64::max);
        c.sub(agree < P_TOL, format!("{param:?}: max |P_closed - P_sim| = {agree:.3e}"));
        let argmax = |lo: usize, hi: usize| (lo..=hi).max_by(|&i, &j| p[i].total_cmp(&p[j])).unwrap();
        let (m1, m2) = (argmax(0, half), argmax(half, DEFAULT_POINTS - 1));
        let maxima = local_maxima(&p);
        if param == SweepParam::Theta3 {
            c.note(format!("{param:?}: argmax per half at grid {m1}, {m2} (not asserted); local maxima {maxima:?}"));
            continue;
        }
        for (m, target, label) in [(m1, quarter, "π/4"), (m2, three_quarter, "3π/4")] {
            c.sub(
                m.abs_diff(target) <= 1,
                format!("{param:?}: grid argmax at {m} (θ = {:.4}), target {label} = grid {target}, {} step(s) off", m as f64 * step, m.abs_diff(target)),
            );
        }
    }
    match reference_report(&DEFAULT_ALPHAS) {
        Ok(rows) => {
            let shown: Vec<String> = rows.iter().map(|r| format!("α={}: {:.10}", r.alpha, r.p_closed)).collect();
            c.sub(rows.len() == 3 && rows.iter().all(|r| r.p_closed.is_finite()), format!("P at reference angles (π/4, π/4, 3π/8): {}", shown.join(", ")));
        }
        Err(e) => c.fail_on(e),
    }
    c
}

fn exact_vs_ideal() -> Check {
    let mut c = Check::new(5, "exact-vs-ideal convergence");
    let alphas = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0];
    let mut gp = Vec::new();
    let mut gf = Vec::new();
    for &a in &alphas {
        let res = ECPParams::equal(a).and_then(|p| Ok((branch_average(&p, PipelineMode::EXACT)?, run_ecp(&p, FidelityMode::Ideal, None)?)));
        match res {
            Ok((ex, id)) => {
                gp.push((ex.success_probability - id.success_probability_ideal).abs());
                gf.push(1.0 - ex.mean_fidelity);
            }
            Err(e) => c.fail_on(e),
        }
    }
    let decreasing = |v: &[f64]| v.len() == alphas.len() && v.windows(2).all(|w| w[1] < w[0]);
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", ");
    c.sub(decreasing(&gp), format!("|P_exact - P_ideal| over α = {alphas:?}: [{}] strictly decreasing", fmt(&gp)));
    c.sub(decreasing(&gf), format!("1 - F(exact, ideal) over α = {alphas:?}: [{}] strictly decreasing", fmt(&gf)));

    // Exact photon-number resolution with the compensating flip on odd counts.
    let mode = PipelineMode { vacuum: FidelityMode::Ideal, parity: FidelityMode::Exact };
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 5);
    let mut params: Vec<ECPParams> = alphas.iter().map(|&a| ECPParams::equal(a).unwrap()).collect();
    params.extend((0..24).map(|_| ECPParams::random(&mut rng, 0.3..3.0)));
    for p in &params {
        match branch_average(p, mode) {
            Ok(b) => worst = worst.max(1.0 - b.min_fidelity),
            Err(e) => c.fail_on(e),
        }
    }
    c.sub(worst < F_TOL, format!("parity-corrected output vs ideal output, every branch, {} parameter sets: max 1 - F = {worst:.3e}", params.len()));
    c
}

fn hqis_correctness() -> Check {
    let mut c = Check::new(6, "HQIS correctness");
    for r in Recoverer::ALL {
        let cfg = ProtocolConfig::new(SecretChoice::Random, r, 1.0, SEED, HQIS_TRIALS);
        match run_protocol(&cfg) {
            Ok(ts) => {
                let worst = ts.iter().map(|t| (1.0 - t.fidelity).abs()).fold(0.0, f64::max);
                c.sub(ts.len() as u64 == HQIS_TRIALS && worst < F_TOL, format!("{r}: {} trials, random secrets, max |1 - F| = {worst:.3e}", ts.len()));
            }
            Err(e) => c.fail_on(e),
        }
    }
    for (r, label) in [(Recoverer::Diana, "Diana rows (I, Z)"), (Recoverer::Bob, "Bob rows (Z, I, X, iY)"), (Recoverer::Charlie, "Charlie rows (as Bob)")] {
        match derive_table(r, 1.0) {
            Ok(t) => {
                let bad = t.mismatches(&printed_rows(r));
                c.sub(bad.is_empty(), format!("derived table contains printed {label}: {}", if bad.is_empty() { "yes".into() } else { bad.join("; ") }));
            }
            Err(e) => c.fail_on(e),
        }
    }
    let cfg = ProtocolConfig::new(SecretChoice::Random, Recoverer::Diana, 1.0, SEED + 6, EQUIPROB_TRIALS);
    match run_protocol(&cfg) {
        Ok(ts) => {
            let n = ts.len() as f64;
            let sigma = (n * 0.25 * 0.75).sqrt();
            let mut counts = [0usize; 4];
            for t in &ts {
                counts[hybrid_core::hqis::LogicalBellOutcome::ALL.iter().position(|&o| o == t.alice_outcome).unwrap()] += 1;
            }
            let dev = counts.iter().map(|&k| (k as f64 - n / 4.0).abs() / sigma).fold(0.0, f64::max);
            c.sub(dev <= 3.0, format!("Alice outcome counts over {} trials: {counts:?}, max deviation {dev:.2}σ (≤ 3σ)", ts.len()));
        }
        Err(e) => c.fail_on(e),
    }
    c
}

fn hierarchy() -> Check {
    let mut c = Check::new(7, "hierarchy witness");
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 7);
    let secrets: Vec<InputSecret> = (0..16).map(|_| InputSecret::random(&mut rng)).collect();
    let (mut dev, mut agree, mut total) = (0.0f64, 0, 0);
    for s in &secrets {
        for alpha in [0.5, 1.0, 2.0] {
            match hierarchy_witness(s, alpha) {
                Ok(w) => {
                    dev = dev.max(w.bob_max_deviation_from_mixed);
                    agree += w.diana_case_helpers_agree;
                    total += w.diana_case_branches;
                }
                Err(e) => c.fail_on(e),
            }
        }
    }
    c.sub(dev < F_TOL, format!("Bob's logical ρ before helper announcements: max |ρ - 𝕀/2| = {dev:.3e}"));
    c.sub(total > 0 && agree == total, format!("Diana's case: Bob and Charlie agree in {agree}/{total} branches"));
    c
}

fn bell_audit() -> Check {
    let mut c = Check::new(8, "Bell-decomposition audit");
    for alpha in [0.5, 1.0, 2.0] {
        match verify_bell_decomposition(alpha) {
            Ok(a) => {
                c.sub(a.max_residual() < RESIDUAL_TOL, format!("α = {alpha}: max residual {:.3e} (< {RESIDUAL_TOL:e})", a.max_residual()));
                c.sub(a.all_weights_half_inverse_normalizers(), format!("α = {alpha}: every weight is 1/(2N±)"));
                let differ: Vec<String> = a.identities.iter().filter(|i| !i.matches_printed_pairs).map(|i| format!("{}[{:?}]", i.logical, i.convention)).collect();
                let worst = a.identities.iter().map(|i| i.printed_residual).fold(0.0, f64::max);
                c.note(format!("α = {alpha}: unweighted printed form residual up to {worst:.3e}; printed pairs differ for {}", differ.join(", ")));
            }
            Err(e) => c.fail_on(e),
        }
    }
    c
}

fn main() {
    let (c1, c2) = formula_and_concentration();
    let checks = [c1, c2, reference_point(), sweep_structure(), exact_vs_ideal(), hqis_correctness(), hierarchy(), bell_audit()];
    let mut failed = 0;
    for c in &checks {
        println!("{} {}. {}", if c.pass { "PASS" } else { "FAIL" }, c.id, c.name);
        for d in &c.detail {
            println!("       {d}");
        }
        failed += usize::from(!c.pass);
    }
    println!("\nacceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
