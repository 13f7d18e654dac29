use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ansatz::{AnsatzKind, AnsatzSpec};
use crate::error::{Error, Result};
use crate::optimizer::OptimizerConfig;
use crate::problem::{GridProblem, Shots};
use crate::reference::ImaginaryTimeConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Noiseless,
    Noisy,
    PretrainedEval,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    /// `R` independent optimizations from the same start; the lowest final
    /// cost is selected.
    #[serde(alias = "best_of_R")]
    BestOfR,
    /// One optimization whose cost is the mean of `R` executions.
    AverageCost,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub n: usize,
    pub g: f64,
    pub v0: f64,
    #[serde(default)]
    pub a: f64,
    #[serde(default = "one")]
    pub b: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzConfig {
    pub kind: AnsatzKind,
    #[serde(default)]
    pub layers: usize,
    /// Starting parameters; drawn from `[−π, π]` with the experiment seed
    /// when absent. Required for `pretrained_eval`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_theta: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    /// Snapshot file, or `bundled:<name>`.
    pub calibration: String,
    /// Physical qubits for logical qubits `0, 1, …`; picked from the
    /// calibration when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout: Option<Vec<usize>>,
    /// Probability that a qubit starts in `|1⟩`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reset_error: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub mode: Mode,
    #[serde(default = "default_averaging")]
    pub averaging: Averaging,
    /// `R`.
    pub executions: usize,
    /// `M` per circuit, or `"exact"`.
    pub shots: Shots,
    /// Evaluate the direct estimator at every iteration.
    #[serde(default = "yes")]
    pub direct_path: bool,
    /// Bond-dimension exponent of the potential encoding.
    #[serde(default = "default_kappa")]
    pub kappa: u32,
    pub problem: ProblemConfig,
    pub ansatz: AnsatzConfig,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseConfig>,
    #[serde(default)]
    pub reference: ImaginaryTimeConfig,
}

fn default_name() -> String {
    "experiment".into()
}

fn default_averaging() -> Averaging {
    Averaging::BestOfR
}

fn yes() -> bool {
    true
}

fn default_kappa() -> u32 {
    2
}

/// Statevector runs hold the `3n + 1`-qubit interaction circuit.
const MAX_N_IDEAL: usize = 8;
/// Density-matrix runs are capped at 12 qubits.
const MAX_N_NOISY: usize = 3;

impl ExperimentConfig {
    /// Parses and validates a TOML document.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let field = toml_field(&e).unwrap_or_else(|| "<document>".into());
            Error::config(field, e.message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a TOML config, or the `config` object of a run manifest
    /// (`.json`).
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if path.extension().is_some_and(|e| e == "json") {
            let v: serde_json::Value = serde_json::from_str(&text)?;
            let cfg_value = v
                .get("config")
                .cloned()
                .ok_or_else(|| Error::config("config", "manifest has no config object"))?;
            let cfg: ExperimentConfig = serde_json::from_value(cfg_value)
                .map_err(|e| Error::config("config", e.to_string()))?;
            cfg.validate()?;
            return Ok(cfg);
        }
        Self::from_toml_str(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.problem;
        if p.n < 2 {
            return Err(Error::config("problem.n", "must be at least 2"));
        }
        let cap = if self.noise.is_some() { MAX_N_NOISY } else { MAX_N_IDEAL };
        if p.n > cap {
            return Err(Error::config(
                "problem.n",
                format!("at most {cap} for this mode (circuits need 3n + 1 qubits)"),
            ));
        }
        if !p.g.is_finite() {
            return Err(Error::config("problem.g", "must be finite"));
        }
        if !p.v0.is_finite() {
            return Err(Error::config("problem.v0", "must be finite"));
        }
        if !(p.b > p.a && p.a.is_finite() && p.b.is_finite()) {
            return Err(Error::config("problem.b", "interval must satisfy a < b"));
        }
        if self.executions == 0 {
            return Err(Error::config("executions", "must be at least 1"));
        }
        if self.kappa == 0 {
            return Err(Error::config("kappa", "must be at least 1"));
        }
        if self.ansatz.kind == AnsatzKind::RealAmplitude && self.ansatz.layers == 0 {
            return Err(Error::config("ansatz.layers", "real_amplitude needs at least one layer"));
        }
        let count = AnsatzSpec::parameter_count(self.ansatz.kind, p.n, self.ansatz.layers);
        if let Some(t) = &self.ansatz.initial_theta {
            if t.len() != count {
                return Err(Error::config(
                    "ansatz.initial_theta",
                    format!("expected {count} values, got {}", t.len()),
                ));
            }
            if t.iter().any(|v| !v.is_finite()) {
                return Err(Error::config("ansatz.initial_theta", "values must be finite"));
            }
        }
        self.optimizer.validate().map_err(|e| match e {
            Error::Config { field, message } => Error::config(format!("optimizer.{field}"), message),
            other => other,
        })?;
        if let Some(t) = self.reference.tau {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::config("reference.tau", "must be positive"));
            }
        }
        if self.reference.max_steps == 0 {
            return Err(Error::config("reference.max_steps", "must be at least 1"));
        }
        match (self.mode, &self.noise) {
            (Mode::Noisy, None) => {
                return Err(Error::config("noise", "noisy mode needs a [noise] table"))
            }
            (Mode::PretrainedEval, _) if self.ansatz.initial_theta.is_none() => {
                return Err(Error::config(
                    "ansatz.initial_theta",
                    "pretrained_eval needs the parameters to evaluate",
                ))
            }
            _ => {}
        }
        if let Some(nc) = &self.noise {
            if let Some(r) = nc.reset_error {
                if !(0.0..=1.0).contains(&r) {
                    return Err(Error::config("noise.reset_error", "must be a probability"));
                }
            }
            if let Some(l) = &nc.layout {
                if l.len() < 3 * p.n + 1 {
                    return Err(Error::config(
                        "noise.layout",
                        format!("needs {} qubits for the widest circuit", 3 * p.n + 1),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn grid_problem(&self) -> Result<GridProblem> {
        let p = &self.problem;
        GridProblem::new(p.n, p.a, p.b, p.v0, p.g)
    }

    pub fn parameter_count(&self) -> usize {
        AnsatzSpec::parameter_count(self.ansatz.kind, self.problem.n, self.ansatz.layers)
    }

    pub fn spec(&self, theta: Vec<f64>) -> Result<AnsatzSpec> {
        AnsatzSpec::new(self.ansatz.kind, self.problem.n, self.ansatz.layers, theta)
    }
}

fn toml_field(e: &toml::de::Error) -> Option<String> {
    // messages from serde carry the key in backticks for unknown or missing
    // fields
    let msg = e.message();
    for marker in ["missing field `", "unknown field `"] {
        if let Some(i) = msg.find(marker) {
            let rest = &msg[i + marker.len()..];
            return rest.find('`').map(|j| rest[..j].to_string());
        }
    }
    None
}
