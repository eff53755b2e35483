//! `hybrid` — concentration runs, sweeps and the splitting protocol.
//!
//! Exit codes: 0 success, 2 invalid input (including usage errors and
//! unwritable outputs), 3 numerical or verification failure.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hybrid_core::dump;
use hybrid_core::ecp::{run_ecp, AngleParams, ECPParams, ECPResult};
use hybrid_core::hqis::{derive_table, printed_rows, run_protocol, verify_bell_decomposition, InputSecret, ProtocolConfig, Recoverer, SecretChoice, FIDELITY_TOLERANCE};
use hybrid_core::optics::FidelityMode;
use hybrid_core::sweep::{reference_report, sweep, write_csv, Axis, SweepParam, SweepSpec, DEFAULT_ALPHAS, DEFAULT_POINTS};
use hybrid_core::HybridError;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

const SECRET_TOLERANCE: f64 = 1e-9;

#[derive(Parser)]
#[command(name = "hybrid", version, about = "Hybrid Omega-state concentration and hierarchical information splitting")]
struct Cli {
    /// Directory that relative --output paths (and default file names) resolve against.
    #[arg(long, global = true, env = "HYBRID_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Entanglement concentration.
    #[command(subcommand)]
    Ecp(EcpCommand),
    /// Hierarchical quantum information splitting.
    #[command(subcommand)]
    Hqis(HqisCommand),
}

#[derive(Subcommand)]
enum EcpCommand {
    /// One run of the concentration sequence.
    Run(EcpRun),
    /// Success probability over an angle grid, as CSV.
    Sweep(EcpSweep),
}

#[derive(Subcommand)]
enum HqisCommand {
    /// Seeded protocol trials, one transcript per trial.
    Run(HqisRun),
    /// Derived correction tables, checked against the published rows.
    Tables(HqisTables),
    /// Logical-Bell / quasi-Bell decomposition audit.
    BellAudit(BellAuditArgs),
}

#[derive(Copy, Clone, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Copy, Clone, ValueEnum)]
enum ReportFormat {
    Text,
    Json,
}

#[derive(Copy, Clone, ValueEnum)]
enum Mode {
    Ideal,
    Exact,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("params").required(true).args(["angles", "zeta"]))]
struct EcpRun {
    /// Coherent amplitude α > 0.
    #[arg(long)]
    alpha: f64,
    /// θ₁,θ₂,θ₃ in radians, e.g. π/4,π/4,3π/8 = 0.7853981634,0.7853981634,1.1780972451.
    #[arg(long, value_parser = triple, allow_negative_numbers = true, conflicts_with_all = ["zeta", "beta", "gamma", "delta"])]
    angles: Option<[f64; 3]>,
    #[arg(long, allow_negative_numbers = true, requires_all = ["beta", "gamma", "delta"])]
    zeta: Option<f64>,
    #[arg(long, allow_negative_numbers = true, requires = "zeta")]
    beta: Option<f64>,
    #[arg(long, allow_negative_numbers = true, requires = "zeta")]
    gamma: Option<f64>,
    #[arg(long, allow_negative_numbers = true, requires = "zeta")]
    delta: Option<f64>,
    /// `ideal`: label-based post-selection; `exact`: vacuum projector and photon counting.
    #[arg(long, value_enum, default_value = "ideal")]
    mode: Mode,
    /// Seed for photon-count sampling in exact mode.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Writes the final state as JSON here.
    #[arg(long)]
    dump_state: Option<PathBuf>,
}

#[derive(Args)]
struct EcpSweep {
    /// One or two of theta1, theta2, theta3, alpha; the second varies fastest.
    #[arg(long = "axis", default_value = "theta1", value_delimiter = ',')]
    axes: Vec<String>,
    /// Points per angle axis on [0, π].
    #[arg(long, default_value_t = DEFAULT_POINTS)]
    points: usize,
    /// α values (outermost loop) when α is not an axis.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_ALPHAS)]
    alphas: Vec<f64>,
    /// Range of an α axis.
    #[arg(long, value_parser = pair, default_value = "0.3,3")]
    alpha_range: [f64; 2],
    /// Fixed θ₁,θ₂,θ₃ for the angles not swept.
    #[arg(long, value_parser = triple, allow_negative_numbers = true)]
    base: Option<[f64; 3]>,
    /// CSV destination; stdout when omitted and no output directory is set.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct HqisRun {
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    lambda_re: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    lambda_im: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    eta_re: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    eta_im: f64,
    /// Draw a fresh random secret per trial instead.
    #[arg(long, conflicts_with_all = ["lambda_re", "lambda_im", "eta_re", "eta_im"])]
    random_secret: bool,
    #[arg(long, value_enum)]
    recoverer: RecovererArg,
    #[arg(long, default_value_t = 1)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Use the output of an ideal concentration run with these θ₁,θ₂,θ₃ as the channel.
    #[arg(long, value_parser = triple, allow_negative_numbers = true)]
    concentrate: Option<[f64; 3]>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Copy, Clone, ValueEnum)]
enum RecovererArg {
    Diana,
    Bob,
    Charlie,
}

impl From<RecovererArg> for Recoverer {
    fn from(r: RecovererArg) -> Self {
        match r {
            RecovererArg::Diana => Recoverer::Diana,
            RecovererArg::Bob => Recoverer::Bob,
            RecovererArg::Charlie => Recoverer::Charlie,
        }
    }
}

#[derive(Args)]
struct HqisTables {
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, value_enum, default_value = "text")]
    format: ReportFormat,
}

#[derive(Args)]
struct BellAuditArgs {
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, value_enum, default_value = "text")]
    format: ReportFormat,
}

fn floats<const N: usize>(s: &str) -> Result<[f64; N], String> {
    let v: Vec<f64> = s.split(',').map(|x| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"))).collect::<Result<_, _>>()?;
    v.try_into().map_err(|v: Vec<f64>| format!("expected {N} comma-separated numbers, got {}", v.len()))
}

fn triple(s: &str) -> Result<[f64; 3], String> {
    floats(s)
}

fn pair(s: &str) -> Result<[f64; 2], String> {
    floats(s)
}

/// A failure with its exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    fn numerical(message: impl Into<String>) -> Self {
        Self { code: 3, message: message.into() }
    }
}

impl From<HybridError> for Failure {
    fn from(e: HybridError) -> Self {
        match e {
            HybridError::InvalidParams(_) | HybridError::UnknownMode(_) | HybridError::Dump(_) => Self::input(e.to_string()),
            _ => Self::numerical(e.to_string()),
        }
    }
}

type CmdResult = Result<(), Failure>;

/// Where output goes: relative paths land in the output directory; without
/// --output, `default_name` in that directory (if given), else stdout.
fn resolve(output: Option<&Path>, dir: Option<&Path>, default_name: Option<&str>) -> Option<PathBuf> {
    match (output, dir) {
        (Some(p), Some(d)) if p.is_relative() => Some(d.join(p)),
        (Some(p), _) => Some(p.to_path_buf()),
        (None, Some(d)) => default_name.map(|n| d.join(n)),
        (None, None) => None,
    }
}

fn emit(path: Option<PathBuf>, text: &str) -> CmdResult {
    match path {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(|e| Failure::input(format!("{}: {e}", parent.display())))?;
            }
            fs::write(&p, text).map_err(|e| Failure::input(format!("{}: {e}", p.display())))
        }
        None => io::stdout().write_all(text.as_bytes()).map_err(|e| Failure::input(e.to_string())),
    }
}

fn ecp_params(a: &EcpRun) -> Result<ECPParams, Failure> {
    match (&a.angles, a.zeta, a.beta, a.gamma, a.delta) {
        (Some(t), ..) => Ok(AngleParams::new(t[0], t[1], t[2]).to_params(a.alpha)?),
        (None, Some(z), Some(b), Some(g), Some(d)) => Ok(ECPParams::allow_degenerate(z, b, g, d, a.alpha)?),
        _ => Err(Failure::input("give --angles or all of --zeta --beta --gamma --delta")),
    }
}

fn ecp_json(r: &ECPResult) -> serde_json::Value {
    let stages: Vec<_> = r.stage_trace.iter().map(|s| json!({ "name": s.name, "record": s.record })).collect();
    json!({
        "params": r.params,
        "mode": r.mode,
        "P_closed": r.success_probability_closed_form,
        "P_sim": r.success_probability_ideal,
        "P_exact": r.success_probability_exact,
        "fidelity": r.fidelity,
        "parities": r.parities,
        "stages": stages,
    })
}

fn cmd_ecp_run(a: &EcpRun, dir: Option<&Path>) -> CmdResult {
    let p = ecp_params(a)?;
    let fm = match a.mode {
        Mode::Ideal => FidelityMode::Ideal,
        Mode::Exact => FidelityMode::Exact,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let r = run_ecp(&p, fm, Some(&mut rng))?;
    let text = match a.format {
        Format::Json => serde_json::to_string_pretty(&ecp_json(&r)).expect("plain data") + "\n",
        Format::Csv => format!(
            "zeta,beta,gamma,delta,alpha,P_closed,P_sim,fidelity\n{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            p.zeta, p.beta, p.gamma, p.delta, p.alpha, r.success_probability_closed_form, r.success_probability_ideal, r.fidelity.unwrap_or(f64::NAN)
        ),
        Format::Text => {
            let mut t = format!(
                "zeta = {}  beta = {}  gamma = {}  delta = {}  alpha = {}  mode = {}\nP_closed = {:.16e}\nP_sim    = {:.16e}\n",
                p.zeta, p.beta, p.gamma, p.delta, p.alpha, fm, r.success_probability_closed_form, r.success_probability_ideal
            );
            if let Some(pe) = r.success_probability_exact {
                t += &format!("P_exact  = {pe:.16e}  (sampled branch, vacuum acceptance)\n");
            }
            match r.fidelity {
                Some(f) => t += &format!("fidelity = {f:.16}\n"),
                None => t += "fidelity = n/a (post-selection chain has probability 0)\n",
            }
            for (m, o, z) in &r.parities {
                t += &format!("parity {m}: {o:?}{}\n", if *z { " (no photons)" } else { "" });
            }
            t
        }
    };
    emit(resolve(a.output.as_deref(), dir, None), &text)?;
    if let Some(path) = &a.dump_state {
        let s = r.final_state.as_ref().ok_or_else(|| Failure::numerical("no final state to dump"))?;
        emit(resolve(Some(path), dir, None), &dump::to_json(s))?;
    }
    Ok(())
}

fn cmd_ecp_sweep(a: &EcpSweep, dir: Option<&Path>) -> CmdResult {
    let params: Vec<SweepParam> = a.axes.iter().map(|s| s.parse()).collect::<Result<_, _>>()?;
    if a.points < 2 {
        return Err(Failure::input("--points must be at least 2"));
    }
    let axes = params
        .iter()
        .map(|&p| match p {
            SweepParam::Alpha => Axis::linspace(p, a.alpha_range[0], a.alpha_range[1], a.points),
            _ => Axis::linspace(p, 0.0, std::f64::consts::PI, a.points),
        })
        .collect();
    let base = a.base.as_ref().map(|b| AngleParams::new(b[0], b[1], b[2])).unwrap_or_default();
    let spec = SweepSpec { axes, base, alphas: a.alphas.clone() };
    let rows = sweep(&spec)?;
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf).map_err(|e| Failure::input(e.to_string()))?;
    let name = format!("sweep_{}.csv", a.axes.join("_"));
    emit(resolve(a.output.as_deref(), dir, Some(&name)), std::str::from_utf8(&buf).expect("ascii"))?;
    if a.axes.len() == 1 && params[0] != SweepParam::Alpha {
        // P at the reference angles, for reading the α ordering side by side.
        for r in reference_report(&a.alphas)? {
            eprintln!("reference angles, alpha = {}: P = {:.16e}", r.alpha, r.p_closed);
        }
    }
    Ok(())
}

fn cmd_hqis_run(a: &HqisRun, dir: Option<&Path>) -> CmdResult {
    let secret = if a.random_secret {
        SecretChoice::Random
    } else {
        SecretChoice::Fixed(InputSecret::normalized(C64::new(a.lambda_re, a.lambda_im), C64::new(a.eta_re, a.eta_im), SECRET_TOLERANCE)?)
    };
    let mut cfg = ProtocolConfig::new(secret, a.recoverer.into(), a.alpha, a.seed, a.trials);
    if let Some(t) = &a.concentrate {
        let p = AngleParams::new(t[0], t[1], t[2]).to_params(a.alpha)?;
        let r = run_ecp(&p, FidelityMode::Ideal, None)?;
        cfg.channel = Some(r.final_state.ok_or_else(|| Failure::numerical("concentration failed: success probability 0"))?);
    }
    let ts = run_protocol(&cfg)?;
    let text = match a.format {
        Format::Json => serde_json::to_string_pretty(&ts).expect("plain data") + "\n",
        Format::Csv => {
            let mut t = String::from("trial,alice_outcome,recoverer,helper_outcomes,corrections,fidelity\n");
            for x in &ts {
                let h: Vec<String> = x.helper_outcomes.iter().map(|h| h.to_string()).collect();
                let c: Vec<String> = x.corrections.iter().map(|c| c.to_string()).collect();
                t += &format!("{},{},{},{},{},{:.16e}\n", x.trial, x.alice_outcome, x.recoverer, h.join(" "), c.join(" "), x.fidelity);
            }
            t
        }
        Format::Text => ts
            .iter()
            .map(|t| {
                let h: Vec<String> = t.helper_outcomes.iter().map(|h| h.to_string()).collect();
                let c: Vec<String> = t.corrections.iter().map(|c| c.to_string()).collect();
                format!("trial {:>4}  alice {}  helpers {:<12} correction {:<3} fidelity {:.16}\n", t.trial, t.alice_outcome, h.join(","), c.join(","), t.fidelity)
            })
            .collect(),
    };
    emit(resolve(a.output.as_deref(), dir, None), &text)?;
    let bad = ts.iter().filter(|t| (t.fidelity - 1.0).abs() > FIDELITY_TOLERANCE).count();
    if bad > 0 {
        return Err(Failure::numerical(format!("{bad} of {} transcripts have fidelity off 1 by more than {FIDELITY_TOLERANCE:e}", ts.len())));
    }
    Ok(())
}

fn cmd_hqis_tables(a: &HqisTables) -> CmdResult {
    let mut out = String::new();
    let mut tables = Vec::new();
    let mut mismatches = Vec::new();
    for r in Recoverer::ALL {
        let t = derive_table(r, a.alpha)?;
        mismatches.extend(t.mismatches(&printed_rows(r)).into_iter().map(|m| format!("{r}: {m}")));
        out += &format!("{t}\n");
        tables.push(t);
    }
    let verdict = if mismatches.is_empty() { "published rows: all match".to_string() } else { format!("published rows: MISMATCH\n{}", mismatches.join("\n")) };
    let text = match a.format {
        ReportFormat::Json => serde_json::to_string_pretty(&json!({ "tables": tables, "mismatches": mismatches })).expect("plain data") + "\n",
        ReportFormat::Text => format!("{out}{verdict}\n"),
    };
    emit(None, &text)?;
    if mismatches.is_empty() {
        Ok(())
    } else {
        Err(Failure::numerical("derived tables disagree with the published rows"))
    }
}

fn cmd_bell_audit(a: &BellAuditArgs) -> CmdResult {
    let audit = verify_bell_decomposition(a.alpha)?;
    let text = match a.format {
        ReportFormat::Json => {
            let ids: Vec<_> = audit
                .identities
                .iter()
                .map(|i| {
                    json!({
                        "logical": i.logical,
                        "convention": format!("{:?}", i.convention),
                        "residual": i.residual,
                        "weights_are_half_inverse_normalizers": i.weights_are_half_inverse_normalizers,
                        "matches_printed_pairs": i.matches_printed_pairs,
                        "printed_residual": i.printed_residual,
                    })
                })
                .collect();
            serde_json::to_string_pretty(&json!({ "alpha": audit.alpha, "n_plus": audit.n_plus, "n_minus": audit.n_minus, "identities": ids })).expect("plain data") + "\n"
        }
        ReportFormat::Text => format!("{audit}\n"),
    };
    emit(None, &text)?;
    if audit.max_residual() >= 1e-12 || !audit.all_weights_half_inverse_normalizers() {
        return Err(Failure::numerical(format!("decomposition residual {:.3e}", audit.max_residual())));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let dir = cli.output_dir.as_deref();
    let res = match &cli.command {
        Command::Ecp(EcpCommand::Run(a)) => cmd_ecp_run(a, dir),
        Command::Ecp(EcpCommand::Sweep(a)) => cmd_ecp_sweep(a, dir),
        Command::Hqis(HqisCommand::Run(a)) => cmd_hqis_run(a, dir),
        Command::Hqis(HqisCommand::Tables(a)) => cmd_hqis_tables(a),
        Command::Hqis(HqisCommand::BellAudit(a)) => cmd_bell_audit(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
