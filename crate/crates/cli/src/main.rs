//! Command-line driver tying the library modules into reproducible runs.
//!
//! All parameters come from an optional flat key=value config file plus
//! repeated `--set key=value` overrides; identical configurations produce
//! bit-identical output files.  Exit codes: 0 success, 1 identity failure,
//! 2 configuration error, 3 numerical failure.

mod config;
mod verify;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde::Serialize;

use schwinger_core::anomaly::{compute_ca, compute_ca_prime, AnomalyEstimate, LimitSchedule};
use schwinger_core::assembly::{build_full_hamiltonian, gauge_invariance_full, AssemblyOptions};
use schwinger_core::fock::{enumerate_all_charges, enumerate_basis, ChargeFilter, SectorHandle};
use schwinger_core::gauge::{
    verify_chirality_shift, verify_gauge_invariance, GaugeCheckReport, GaugeDirection,
    GaugeObservable, GaugeUnitary,
};
use schwinger_core::operators::{
    axial_counterterm, build_coulomb, build_hd0_reg, build_hda_reg, build_j0_mode, build_j1_mode,
    build_q, build_q5_naive, build_q5_reg, energy_counterterm,
};
use schwinger_core::sparse::CsrMatrix;
use schwinger_core::Error;

use config::RunConfig;

#[derive(Parser)]
#[command(name = "schwinger", about = "Gauge-invariant fermion quantization on a circle")]
struct Cli {
    /// Flat key=value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one configuration entry; repeatable, applied in order.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Dump the truncated basis, one state per line.
    Basis,
    /// Dump an operator matrix as `row col re im` lines.
    Op,
    /// Tabulate an iterated-limit anomaly constant as CSV.
    Anomaly,
    /// Report the large-gauge identities as JSON.
    GaugeCheck,
    /// Run the full identity suite and report JSON; exit 1 on any failure.
    Verify,
    /// Lowest eigenvalues of the assembled Hamiltonian as CSV.
    Spectrum,
}

/// Failure classes mapped onto process exit codes.
pub enum Failure {
    Config(String),
    Identity(String),
    Solver(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Identity(_) => 1,
            Failure::Config(_) => 2,
            Failure::Solver(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Identity(m) | Failure::Solver(m) => m,
        }
    }
}

/// Configuration-shaped core errors exit 2, numerical ones exit 3.
pub fn core_failure(e: Error) -> Failure {
    match e {
        Error::InvalidParams(_) | Error::OutOfWindow { .. } | Error::GaugeTruncated { .. } => {
            Failure::Config(e.to_string())
        }
        Error::SolverConvergence { .. }
        | Error::QuadratureTolerance { .. }
        | Error::Extrapolation { .. }
        | Error::Internal(_) => Failure::Solver(e.to_string()),
    }
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("SCHWINGER_THREADS") {
        match threads.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("ignoring SCHWINGER_THREADS={threads}: expected a positive integer"),
        }
    }
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.exit_code())
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let config =
        RunConfig::load(cli.config.as_deref(), &cli.set).map_err(Failure::Config)?;
    let outcome = match cli.command {
        Command::Basis => cmd_basis(&config)?,
        Command::Op => cmd_op(&config)?,
        Command::Anomaly => cmd_anomaly(&config)?,
        Command::GaugeCheck => cmd_gauge_check(&config)?,
        Command::Verify => verify::cmd_verify(&config)?,
        Command::Spectrum => cmd_spectrum(&config)?,
    };
    if config.out.is_empty() {
        print!("{}", outcome.text);
    } else {
        std::fs::write(&config.out, &outcome.text)
            .map_err(|e| Failure::Config(format!("cannot write {}: {e}", config.out)))?;
    }
    match outcome.failed_identity {
        None => Ok(()),
        Some(what) => Err(Failure::Identity(what)),
    }
}

/// Text to emit plus an optional identity failure to signal after emitting.
pub struct Outcome {
    pub text: String,
    pub failed_identity: Option<String>,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Outcome { text, failed_identity: None }
    }
}

pub fn make_sector(config: &RunConfig) -> Result<SectorHandle, Failure> {
    let params = config.params();
    let sector = match config.charge {
        ChargeFilter::Any => enumerate_all_charges(&params),
        ChargeFilter::Fixed(q) => enumerate_basis(&params, q),
    }
    .map_err(core_failure)?;
    Ok(Arc::new(sector))
}

fn cmd_basis(config: &RunConfig) -> Result<Outcome, Failure> {
    let sector = make_sector(config)?;
    let window = sector.window();
    let mut text = format!(
        "# basis n_cut={} max_particles={} charge={} dim={}\n",
        config.n_cut,
        config.max_particles,
        config.charge_name(),
        sector.dim()
    );
    for state in sector.states() {
        let join = |modes: Vec<i32>| {
            modes.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(",")
        };
        writeln!(
            text,
            "F:{};A:{}",
            join(state.fermion_modes(window)),
            join(state.antifermion_modes(window))
        )
        .unwrap();
    }
    Ok(Outcome::ok(text))
}

fn dump_matrix(header: &str, provenance: &str, mat: &CsrMatrix) -> String {
    let mut text = format!(
        "{header} dim={} nnz={}\n# provenance: {provenance}\nrow col re im\n",
        mat.nrows(),
        mat.nnz()
    );
    for (r, c, v) in mat.iter() {
        writeln!(text, "{r} {c} {:.16e} {:.16e}", v.re, v.im).unwrap();
    }
    text
}

fn cmd_op(config: &RunConfig) -> Result<Outcome, Failure> {
    let sector = make_sector(config)?;
    let params = config.params();
    let which = if config.which.is_empty() { "q" } else { config.which.as_str() };
    let op = match which {
        "q" => build_q(&sector),
        "q5-naive" => build_q5_naive(&sector),
        "q5-reg" => build_q5_reg(&sector, &params).map_err(core_failure)?,
        "hd0-reg" => build_hd0_reg(&sector, &params).map_err(core_failure)?,
        "hda-reg" => build_hda_reg(&sector, &params).map_err(core_failure)?,
        "j0" => build_j0_mode(&sector, &params, config.mode_m).map_err(core_failure)?,
        "j1" => build_j1_mode(&sector, &params, config.mode_m).map_err(core_failure)?,
        "coulomb" => build_coulomb(&sector, &params, config.m_max()).map_err(core_failure)?,
        "gamma-forward" | "gamma-inverse" => {
            let direction = if which == "gamma-forward" {
                GaugeDirection::Forward
            } else {
                GaugeDirection::Inverse
            };
            let gamma = GaugeUnitary::new(&sector, direction);
            let header = format!("# op which={which} {}", config.echo_params());
            let provenance = format!("large gauge transformation ({direction:?})");
            return Ok(Outcome::ok(dump_matrix(&header, &provenance, &gamma.matrix())));
        }
        other => {
            return Err(Failure::Config(format!(
                "unknown operator '{other}' (q | q5-naive | q5-reg | hd0-reg | hda-reg | \
                 j0 | j1 | coulomb | gamma-forward | gamma-inverse)"
            )))
        }
    };
    let header = format!("# op which={which} mode_m={} {}", config.mode_m, config.echo_params());
    Ok(Outcome::ok(dump_matrix(&header, op.provenance(), op.matrix())))
}

fn anomaly_csv(title: &str, estimate: &AnomalyEstimate, closed_form: f64) -> String {
    let mut text = format!(
        "{title}\n# value={:.16e} closed_form={:.16e} abs_err={:.16e}\ntheta,eps,estimate,extrapolant\n",
        estimate.value,
        closed_form,
        (estimate.value - closed_form).abs()
    );
    for row in &estimate.table {
        writeln!(
            text,
            "{:.16e},{:.16e},{:.16e},{:.16e}",
            row.theta, row.eps, row.estimate, row.extrapolant
        )
        .unwrap();
    }
    text
}

fn cmd_anomaly(config: &RunConfig) -> Result<Outcome, Failure> {
    let which = if config.which.is_empty() { "ca" } else { config.which.as_str() };
    let schedule = LimitSchedule::default();
    let (estimate, closed_form) = match which {
        "ca" => (
            compute_ca(config.a, config.l, config.profile, &schedule).map_err(core_failure)?,
            axial_counterterm(config.a, config.l),
        ),
        "ca-prime" => (
            compute_ca_prime(config.a, config.l, config.profile, &schedule)
                .map_err(core_failure)?,
            energy_counterterm(config.a, config.l),
        ),
        other => {
            return Err(Failure::Config(format!(
                "unknown anomaly constant '{other}' (ca | ca-prime)"
            )))
        }
    };
    let title = format!(
        "# anomaly which={which} a={:.16e} l={:.16e} profile={}",
        config.a,
        config.l,
        config.profile_name()
    );
    Ok(Outcome::ok(anomaly_csv(&title, &estimate, closed_form)))
}

#[derive(Serialize)]
struct CheckEntry {
    #[serde(flatten)]
    report: GaugeCheckReport,
    tolerance: f64,
    passed: bool,
}

#[derive(Serialize)]
struct GaugeCheckOutput {
    params: String,
    coupling_mode: String,
    checks: Vec<CheckEntry>,
    flow: schwinger_core::assembly::GaugeFlowReport,
    passed: bool,
}

fn cmd_gauge_check(config: &RunConfig) -> Result<Outcome, Failure> {
    const EXACT: f64 = 0.0;
    const INVARIANCE_TOL: f64 = 1e-10;
    let sector = make_sector(config)?;
    let params = config.params();

    let mut checks = Vec::new();
    for direction in [GaugeDirection::Forward, GaugeDirection::Inverse] {
        let report = verify_chirality_shift(&sector, direction);
        let passed = report.residual <= EXACT;
        checks.push(CheckEntry { report, tolerance: EXACT, passed });
    }
    for observable in [GaugeObservable::AxialChargeReg, GaugeObservable::CoupledHamiltonian] {
        let report =
            verify_gauge_invariance(&sector, &params, observable).map_err(core_failure)?;
        let passed = report.residual <= INVARIANCE_TOL;
        checks.push(CheckEntry { report, tolerance: INVARIANCE_TOL, passed });
    }
    let flow =
        gauge_invariance_full(&params, &sector, config.coupling_mode).map_err(core_failure)?;

    let passed = checks.iter().all(|c| c.passed) && flow.matched;
    let output = GaugeCheckOutput {
        params: config.echo_params(),
        coupling_mode: config.coupling_mode.to_string(),
        checks,
        flow,
        passed,
    };
    let text = serde_json::to_string_pretty(&output)
        .map_err(|e| Failure::Solver(format!("serialization failed: {e}")))?
        + "\n";
    let failed_identity =
        (!passed).then(|| "gauge-check found failing identities (see report)".to_string());
    Ok(Outcome { text, failed_identity })
}

fn cmd_spectrum(config: &RunConfig) -> Result<Outcome, Failure> {
    let params = config.params();
    let sector = match config.charge {
        ChargeFilter::Fixed(0) => make_sector(config)?,
        _ => {
            return Err(Failure::Config(
                "spectrum acts on the zero-charge sector; set charge=0".into(),
            ))
        }
    };
    let options = AssemblyOptions {
        boundary: config.boundary,
        coupling: config.coupling_mode,
        kinetic: config.kinetic,
    };
    let h = build_full_hamiltonian(&params, &sector, config.m_max(), options)
        .map_err(core_failure)?;
    if config.k_eigs > h.dim() {
        return Err(Failure::Config(format!(
            "k_eigs={} exceeds the Hamiltonian dimension {}",
            config.k_eigs,
            h.dim()
        )));
    }
    let pairs = h.spectrum(config.k_eigs).map_err(core_failure)?;
    let mut text = format!(
        "# spectrum {} m_grid={} m_max={} boundary={} coupling={} kinetic={} dim={}\nindex,eigenvalue,residual\n",
        config.echo_params(),
        config.m_grid,
        config.m_max(),
        config.boundary,
        config.coupling_mode,
        config.kinetic,
        h.dim()
    );
    for (i, pair) in pairs.iter().enumerate() {
        writeln!(text, "{i},{:.16e},{:.16e}", pair.value, pair.residual).unwrap();
    }
    Ok(Outcome::ok(text))
}
