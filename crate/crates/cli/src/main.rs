use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use vqcfd::driver::{output, reports};
use vqcfd::{load_calibration, run_vqcfd, Error, ExperimentConfig};

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

/// Variational ground states of the discretized nonlinear Schrödinger
/// equation.
#[derive(Parser)]
#[command(name = "vqcfd", version)]
struct Cli {
    /// More log output (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    /// Only errors.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML) or a `manifest.json` from an earlier run.
    config: PathBuf,
    /// Output directory.
    #[arg(short, long, default_value = "out")]
    out: PathBuf,
    /// Replaces the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write traces, summary and manifest.
    Run(Common),
    /// Imaginary-time reference ground state.
    GroundState(Common),
    /// MPS encoding of the potential: spectra, bond profile, error vs κ.
    EncodePotential(Common),
    /// Gate counts of the Hadamard-test circuits after transpilation.
    TranspileReport(Common),
    /// Check a calibration snapshot and the channels built from it.
    NoiseValidate {
        /// Snapshot file or `bundled:<name>`.
        calibration: String,
        #[arg(long)]
        reset_error: Option<f64>,
        /// Write the report as JSON here.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Config(Error),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } | Error::Calibration { .. } => Failure::Config(e),
            e => Failure::Runtime(e.to_string()),
        }
    }
}

fn load(common: &Common) -> Result<ExperimentConfig, Failure> {
    let mut cfg = ExperimentConfig::load(&common.config).map_err(Failure::Config)?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn write_json<T: serde::Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("{}: {e}", dir.display())))?;
    let p = dir.join(name);
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Runtime(e.to_string()))?;
    std::fs::write(&p, text).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display())))
}

fn run(common: &Common) -> Result<(), Failure> {
    let cfg = load(common)?;
    info!("running {} ({} executions)", cfg.name, cfg.executions);
    let exp = match run_vqcfd(&cfg) {
        Ok(e) => e,
        Err(e @ Error::Config { .. }) => return Err(Failure::Config(e)),
        Err(e) => {
            output::write_failure(&cfg, &e.to_string(), &common.out)?;
            return Err(Failure::Runtime(e.to_string()));
        }
    };
    output::write_outputs(&exp, &common.out)?;
    let s = &exp.summary;
    println!(
        "run {}: E = {:.6} (E_GS = {:.6}), fidelity {:.6}",
        s.selected_run, s.final_energy, s.ground_energy, s.final_fidelity
    );
    if let Some(f) = s.final_fidelity_noiseless {
        println!("noiseless-ansatz fidelity {f:.6}");
    }
    if let Some(f) = s.final_f_double_prime {
        println!("F'' {f:.6}");
    }
    match exp.failure {
        Some(m) => Err(Failure::Runtime(m)),
        None => Ok(()),
    }
}

fn ground_state(common: &Common) -> Result<(), Failure> {
    let cfg = load(common)?;
    let gs = reports::ground_state(&cfg)?;
    reports::write_ground_state(&cfg, &gs, &common.out)?;
    println!(
        "E_GS = {:.12} (mu = {:.12}, residual {:.2e}, {} steps)",
        gs.energy, gs.chemical_potential, gs.residual, gs.iterations
    );
    Ok(())
}

fn encode_potential(common: &Common) -> Result<(), Failure> {
    let cfg = load(common)?;
    let sweep = reports::encoding_sweep(&cfg)?;
    reports::write_encoding(&sweep, &common.out)?;
    for r in &sweep.reports {
        println!(
            "kappa {}: bonds {:?}, reconstruction error {:.3e}",
            r.kappa, r.bond_dims, r.reconstruction_error
        );
    }
    Ok(())
}

fn transpile_report(common: &Common) -> Result<(), Failure> {
    let cfg = load(common)?;
    let report = reports::transpile_report(&cfg)?;
    for c in &report.circuits {
        println!(
            "{}: {} qubits on {:?}, {} swaps, depth {}, {:?}",
            c.name, c.logical_width, c.region, c.swaps, c.depth, c.counts
        );
    }
    write_json(&common.out, "transpile_report.json", &report)
}

fn noise_validate(calibration: &str, reset_error: Option<f64>, out: Option<&Path>) -> Result<(), Failure> {
    let snap = load_calibration(calibration).map_err(Failure::Config)?;
    let r = reports::noise_report(&snap, reset_error)?;
    println!(
        "{}: {} qubits, T1 {:.1} us, T2 {:.1} us, readout {:.4}, {:?}",
        r.name, r.num_qubits, r.mean_t1_us, r.mean_t2_us, r.mean_readout, r.mean_errors
    );
    if r.clamped > 0 {
        warn!("{} gates have relaxation above the reported error", r.clamped);
    }
    println!("worst CPTP deviation {:.2e}", r.worst_cptp_deviation);
    if let Some(dir) = out {
        write_json(dir, "noise_report.json", &r)?;
    }
    if r.cptp {
        Ok(())
    } else {
        Err(Failure::Runtime("channels are not CPTP".into()))
    }
}

fn init_threads() {
    let Ok(v) = std::env::var("VQCFD_THREADS") else {
        return;
    };
    match v.parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                warn!("VQCFD_THREADS ignored: {e}");
            }
        }
        _ => warn!("VQCFD_THREADS={v} is not a positive integer"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => "error",
        (_, 0) => "warn",
        (_, 1) => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    init_threads();
    let result = match &cli.command {
        Command::Run(c) => run(c),
        Command::GroundState(c) => ground_state(c),
        Command::EncodePotential(c) => encode_potential(c),
        Command::TranspileReport(c) => transpile_report(c),
        Command::NoiseValidate {
            calibration,
            reset_error,
            out,
        } => noise_validate(calibration, *reset_error, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("runtime error: {m}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
