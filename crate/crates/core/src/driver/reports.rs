//! Auxiliary reports: reference ground state, potential encoding sweep,
//! transpilation statistics and calibration checks.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use super::config::ExperimentConfig;
use super::initial_theta;
use crate::backend::NoisyBackend;
use crate::error::{Error, Result};
use crate::mps::{encode_potential, encoding_report, EncodingReport};
use crate::noise::{load_calibration, CalibrationSnapshot, GateNoise, NoiseModel, CPTP_TOL};
use crate::qnpu::{interaction_circuit, kinetic_circuit, potential_circuit, Qnpu};
use crate::reference::{imaginary_time_ground_state, GroundState};
use crate::simulator::{Circuit, Gate, GateKind};

fn write_file(dir: &Path, name: &str, text: &str) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let p = dir.join(name);
    fs::write(&p, text).map_err(|e| Error::io(&p, e))
}

/// One gate per line, preceded by the width.
pub fn circuit_text(c: &Circuit) -> String {
    let mut out = format!("# {} qubits, {} gates, depth {}\n", c.width(), c.len(), c.depth());
    for g in c.gates() {
        let _ = writeln!(out, "{g}");
    }
    out
}

pub fn ground_state(config: &ExperimentConfig) -> Result<GroundState> {
    imaginary_time_ground_state(&config.grid_problem()?, &config.reference)
}

/// `ground_state.csv` (`k,x,V,psi`) and `ground_state.json`.
pub fn write_ground_state(config: &ExperimentConfig, gs: &GroundState, dir: &Path) -> Result<()> {
    let problem = config.grid_problem()?;
    let mut csv = String::from("k,x,V,psi\n");
    for (k, ((x, v), a)) in problem
        .grid()
        .iter()
        .zip(problem.potential())
        .zip(gs.psi.amplitudes())
        .enumerate()
    {
        let _ = writeln!(csv, "{k},{x:.12e},{v:.12e},{:.12e}", a.re);
    }
    write_file(dir, "ground_state.csv", &csv)?;
    write_file(dir, "ground_state.json", &serde_json::to_string_pretty(gs)?)
}

#[derive(Clone, Debug, Serialize)]
pub struct EncodingSweep {
    pub potential: Vec<f64>,
    /// One entry per `κ = 1..=n`.
    pub reports: Vec<EncodingReport>,
    pub kappa: u32,
    pub circuit: Circuit,
}

pub fn encoding_sweep(config: &ExperimentConfig) -> Result<EncodingSweep> {
    let problem = config.grid_problem()?;
    let potential = problem.potential().to_vec();
    let reports = (1..=problem.n() as u32)
        .map(|k| encoding_report(&potential, k))
        .collect::<Result<Vec<_>>>()?;
    let circuit = encode_potential(&problem, config.kappa)?;
    Ok(EncodingSweep {
        potential,
        reports,
        kappa: config.kappa,
        circuit,
    })
}

/// `error_vs_kappa.csv`, `bond_profile.csv`, `spectra.csv` and
/// `circuit.txt`.
pub fn write_encoding(sweep: &EncodingSweep, dir: &Path) -> Result<()> {
    let mut err = String::from("kappa,truncation_error,reconstruction_error\n");
    let mut bonds = String::from("kappa,bond,dim\n");
    for r in &sweep.reports {
        let _ = writeln!(err, "{},{:.12e},{:.12e}", r.kappa, r.truncation_error, r.reconstruction_error);
        for (b, d) in r.bond_dims.iter().enumerate() {
            let _ = writeln!(bonds, "{},{b},{d}", r.kappa);
        }
    }
    let mut spectra = String::from("bond,index,singular_value\n");
    if let Some(full) = sweep.reports.last() {
        for (b, s) in full.spectra.iter().enumerate() {
            for (i, v) in s.iter().enumerate() {
                let _ = writeln!(spectra, "{b},{i},{v:.12e}");
            }
        }
    }
    write_file(dir, "error_vs_kappa.csv", &err)?;
    write_file(dir, "bond_profile.csv", &bonds)?;
    write_file(dir, "spectra.csv", &spectra)?;
    write_file(dir, "circuit.txt", &circuit_text(&sweep.circuit))
}

#[derive(Clone, Debug, Serialize)]
pub struct CircuitReport {
    pub name: String,
    pub logical_width: usize,
    pub logical_counts: BTreeMap<String, usize>,
    pub region: Vec<usize>,
    pub final_layout: Vec<usize>,
    pub swaps: usize,
    pub counts: BTreeMap<String, usize>,
    pub depth: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct TranspileReport {
    pub calibration: String,
    pub theta: Vec<f64>,
    pub circuits: Vec<CircuitReport>,
}

/// Transpiles the three Hadamard-test circuits at the initial parameters
/// against the configured calibration.
pub fn transpile_report(config: &ExperimentConfig) -> Result<TranspileReport> {
    let noise = config
        .noise
        .as_ref()
        .ok_or_else(|| Error::config("noise", "transpile-report needs a noise block"))?;
    let snapshot = load_calibration(&noise.calibration)?;
    let mut backend = NoisyBackend::new(&snapshot)?;
    if let Some(l) = &noise.layout {
        backend = backend.with_layout(l.clone())?;
    }
    let theta = initial_theta(config);
    let spec = config.spec(theta.clone())?;
    let qnpu = Qnpu::with_kappa(&config.grid_problem()?, config.kappa)?;
    let mut named = vec![("kinetic", kinetic_circuit(&spec)?)];
    if let Some(v) = qnpu.potential_state() {
        named.push(("potential", potential_circuit(&spec, v)?));
    }
    named.push(("interaction", interaction_circuit(&spec)?));
    let circuits = named
        .into_iter()
        .map(|(name, c)| {
            let c = c.without_measurements();
            let t = backend.transpile(&c)?;
            Ok(CircuitReport {
                name: name.into(),
                logical_width: c.width(),
                logical_counts: c.count_ops(),
                region: t.region.clone(),
                final_layout: t.final_layout.clone(),
                swaps: t.swaps,
                depth: t.circuit.depth(),
                counts: t.counts,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TranspileReport {
        calibration: noise.calibration.clone(),
        theta,
        circuits,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct NoiseReport {
    pub name: String,
    pub synthetic: bool,
    pub num_qubits: usize,
    pub mean_t1_us: f64,
    pub mean_t2_us: f64,
    pub mean_errors: BTreeMap<String, f64>,
    pub mean_readout: f64,
    pub gates: Vec<GateNoise>,
    pub clamped: usize,
    /// Largest trace-preservation or Choi-positivity violation.
    pub worst_cptp_deviation: f64,
    pub cptp: bool,
}

/// Builds the noise model of a snapshot and checks every channel.
pub fn noise_report(snapshot: &CalibrationSnapshot, reset_error: Option<f64>) -> Result<NoiseReport> {
    let mut model = NoiseModel::from_snapshot(snapshot)?;
    if let Some(p) = reset_error {
        model = model.with_reset_error(p)?;
    }
    let mut worst: f64 = 0.0;
    for g in model.gate_noise() {
        let kind = match g.name.as_str() {
            "sx" => GateKind::SX,
            "x" => GateKind::X,
            "cx" => GateKind::CX,
            _ => continue,
        };
        if let Some(ch) = model.gate_channel(&Gate::new(kind, g.qubits.clone())) {
            worst = worst.max(ch.trace_deviation()).max(-ch.min_choi_eigenvalue());
        }
    }
    if let Some(ch) = model.reset_channel() {
        worst = worst.max(ch.trace_deviation()).max(-ch.min_choi_eigenvalue());
    }
    let mut mean_errors = BTreeMap::new();
    for name in &snapshot.basis {
        if let Some(e) = snapshot.mean_gate_error(name) {
            mean_errors.insert(name.clone(), e);
        }
    }
    let mean_readout = snapshot
        .qubits
        .iter()
        .map(|q| 0.5 * (q.readout.p01 + q.readout.p10))
        .sum::<f64>()
        / snapshot.qubits.len() as f64;
    let gates = model.gate_noise().to_vec();
    Ok(NoiseReport {
        name: snapshot.name.clone(),
        synthetic: snapshot.synthetic,
        num_qubits: snapshot.num_qubits(),
        mean_t1_us: snapshot.mean_t1_us(),
        mean_t2_us: snapshot.mean_t2_us(),
        mean_errors,
        mean_readout,
        clamped: gates.iter().filter(|g| g.clamped).count(),
        gates,
        worst_cptp_deviation: worst,
        cptp: worst < CPTP_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(extra: &str) -> ExperimentConfig {
        ExperimentConfig::from_toml_str(&format!(
            r#"
            mode = "noiseless"
            executions = 1
            shots = "exact"
            [problem]
            n = 2
            g = 10.0
            v0 = 100.0
            [ansatz]
            kind = "real_amplitude"
            layers = 1
            initial_theta = [0.1, 0.2, 0.3, 0.4]
            {extra}
            "#
        ))
        .unwrap()
    }

    #[test]
    fn quadratic_encoding_is_exact_at_kappa_two() {
        let s = encoding_sweep(&config("")).unwrap();
        assert_eq!(s.reports.len(), 2);
        assert!(s.reports[1].reconstruction_error < 1e-12);
        assert_eq!(s.reports[0].bond_dims, vec![2]);
    }

    #[test]
    fn transpile_report_needs_noise() {
        assert!(matches!(transpile_report(&config("")), Err(Error::Config { .. })));
        let cfg = config("[noise]\ncalibration = \"bundled:kolkata-like\"");
        let r = transpile_report(&cfg).unwrap();
        let names: Vec<_> = r.circuits.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["kinetic", "potential", "interaction"]);
        assert_eq!(r.circuits[2].logical_width, 7);
    }

    #[test]
    fn bundled_snapshots_are_cptp() {
        for name in crate::noise::calibration::BUNDLED {
            let snap = CalibrationSnapshot::bundled(name).unwrap();
            let r = noise_report(&snap, Some(0.01)).unwrap();
            assert!(r.cptp, "{name}: {}", r.worst_cptp_deviation);
            assert!(r.gates.iter().all(|g| g.name != "cx" || !g.clamped));
        }
    }

    #[test]
    fn ground_state_files() {
        let cfg = config("");
        let gs = ground_state(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_ground_state(&cfg, &gs, dir.path()).unwrap();
        let csv = fs::read_to_string(dir.path().join("ground_state.csv")).unwrap();
        assert_eq!(csv.lines().count(), 5);
    }
}
