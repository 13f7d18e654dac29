//! Files written for an experiment: `traces.jsonl`, `summary.csv`,
//! `summary.json` and `manifest.json`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde_json::json;

use super::config::ExperimentConfig;
use super::Experiment;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str =
    "run,iteration,E_vqcfd,E_direct,delta,E_K_raw,E_P_raw,E_I_raw,fidelity,f_prime,f_double_prime";

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.12e}")).unwrap_or_default()
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

/// One CSV row per record, in run-then-iteration order.
pub fn summary_csv(exp: &Experiment) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for t in &exp.traces {
        for r in &t.records {
            out.push_str(&format!(
                "{},{},{:.12e},{},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{}\n",
                r.run,
                r.iteration,
                r.vqcfd.total,
                opt(r.direct.map(|d| d.total)),
                opt(r.delta),
                r.vqcfd.raw_k,
                r.vqcfd.raw_p,
                r.vqcfd.raw_i,
                r.fidelity,
                r.f_prime,
                opt(r.f_double_prime),
            ));
        }
    }
    out
}

pub fn manifest(exp: &Experiment) -> serde_json::Value {
    json!({
        "version": env!("CARGO_PKG_VERSION"),
        "config": exp.config,
        "backend": exp.backend,
        "seed": exp.config.seed,
        "run_seeds": exp.run_seeds,
        "initial_theta": exp.initial_theta,
        "ground_energy": exp.reference.energy,
        "failure": exp.failure,
    })
}

/// Manifest of a run that failed before producing traces.
pub fn write_failure(config: &ExperimentConfig, message: &str, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let p = dir.join("manifest.json");
    let text = to_json(&json!({
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "seed": config.seed,
        "failure": message,
    }))?;
    fs::write(&p, text).map_err(|e| Error::io(&p, e))
}

/// Writes all output files into `dir`, creating it if needed.
pub fn write_outputs(exp: &Experiment, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, text: &str| {
        let p = dir.join(name);
        fs::write(&p, text).map_err(|e| Error::io(&p, e))
    };
    let p = dir.join("traces.jsonl");
    let mut w = BufWriter::new(File::create(&p).map_err(|e| Error::io(&p, e))?);
    for t in &exp.traces {
        for r in &t.records {
            let line = serde_json::to_string(r)?;
            writeln!(w, "{line}").map_err(|e| Error::io(&p, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(&p, e))?;
    write("summary.csv", &summary_csv(exp))?;
    write(
        "summary.json",
        &to_json(&json!({
            "summary": exp.summary,
            "reference": exp.reference,
            "runs": exp.traces.iter().map(|t| json!({
                "run": t.run,
                "evaluations": t.records.len(),
                "best_iteration": t.best_iteration,
                "best_cost": t.best_cost,
                "stop": t.stop,
                "selected": t.selected,
            })).collect::<Vec<_>>(),
        }))?,
    )?;
    write("manifest.json", &to_json(&manifest(exp))?)
}
