//! Full experiments: repeated optimizations or cost averaging, the direct
//! estimator alongside, fidelities against the reference ground state, and
//! the statistics over executions.

pub mod config;
pub mod output;
pub mod reports;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::ansatz::{random_theta, AnsatzSpec};
use crate::backend::{Backend, IdealBackend, NoisyBackend, PreparedState};
use crate::direct::{direct_from_stats, direct_stats};
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::noise::load_calibration;
use crate::optimizer::{minimize, OptimizerConfig, StopReason};
use crate::problem::{classical_energy, EnergyBreakdown, GridProblem};
use crate::qnpu::Qnpu;
use crate::reference::{imaginary_time_ground_state, GroundState};
use crate::rng::derive_seed;

pub use config::{AnsatzConfig, Averaging, ExperimentConfig, Mode, NoiseConfig, ProblemConfig};

const STREAM_THETA0: u64 = 0;
const STREAM_RUN: u64 = 1;
const STREAM_EXECUTION: u64 = 3;
const STREAM_PRETRAINED: u64 = 4;

/// Everything measured at one parameter vector in one execution.
#[derive(Clone, Debug, Serialize)]
pub struct IterationRecord {
    pub run: usize,
    pub iteration: usize,
    pub theta: Vec<f64>,
    pub vqcfd: EnergyBreakdown,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direct: Option<EnergyBreakdown>,
    /// `E_VQCFD − E_Direct`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Functional value of the noiseless trial state.
    pub exact: EnergyBreakdown,
    /// Value handed to the optimizer (the mean over executions when costs
    /// are averaged).
    pub cost: f64,
    /// Overlap of the prepared state with the ground state.
    pub fidelity: f64,
    pub f_prime: f64,
    /// `1 − ⟨ψ(θ)|ρ_noisy(θ)|ψ(θ)⟩`, noisy runs only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_double_prime: Option<f64>,
    /// Overlap of the noiseless trial state with the ground state, noisy
    /// runs only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fidelity_noiseless: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunTrace {
    pub run: usize,
    pub records: Vec<IterationRecord>,
    /// Index into `records` of the lowest cost seen.
    pub best_iteration: usize,
    pub best_cost: f64,
    pub stop: StopReason,
    /// Marks the execution reported as the result.
    pub selected: bool,
}

impl RunTrace {
    pub fn best(&self) -> &IterationRecord {
        &self.records[self.best_iteration]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Statistics {
    /// RMS deviation of all `Δ_{r,j}` about their mean.
    pub sigma: f64,
    pub mean_delta: f64,
    /// Per iteration, RMS deviation of the `R` execution energies about
    /// their mean.
    pub sigma_prime: Vec<f64>,
    /// Mean of the execution energies per iteration.
    pub mean_energy: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub statistics: Statistics,
    pub selected_run: usize,
    pub best_cost: f64,
    pub best_theta: Vec<f64>,
    /// Functional value of the selected noiseless trial state.
    pub final_energy: f64,
    pub ground_energy: f64,
    pub final_fidelity: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_fidelity_noiseless: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_f_double_prime: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReferenceSummary {
    pub energy: f64,
    pub chemical_potential: f64,
    pub residual: f64,
    pub iterations: usize,
    pub tau: f64,
    pub psi: Vec<f64>,
}

impl From<&GroundState> for ReferenceSummary {
    fn from(gs: &GroundState) -> Self {
        ReferenceSummary {
            energy: gs.energy,
            chemical_potential: gs.chemical_potential,
            residual: gs.residual,
            iterations: gs.iterations,
            tau: gs.tau,
            psi: gs.psi.amplitudes().iter().map(|a| a.re).collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub backend: String,
    pub initial_theta: Vec<f64>,
    pub run_seeds: Vec<u64>,
    pub reference: ReferenceSummary,
    pub traces: Vec<RunTrace>,
    pub summary: Summary,
    /// Set when an execution stopped on an error; traces hold what was
    /// measured up to that point.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

/// Shared, read-only context of one experiment.
struct Context<'a> {
    config: &'a ExperimentConfig,
    problem: GridProblem,
    qnpu: Qnpu,
    backend: Box<dyn Backend>,
    ground: Vec<C64>,
}

impl Context<'_> {
    /// State-level quantities at `spec`: exact energy, fidelities, F″.
    fn state_metrics(&self, spec: &AnsatzSpec) -> Result<(EnergyBreakdown, f64, Option<f64>, Option<f64>)> {
        let psi = spec.state_of()?;
        let exact = classical_energy(&self.problem, &psi)?;
        let f_ideal = crate::reference::fidelity(&self.ground, psi.amplitudes())?;
        if !self.backend.is_noisy() {
            return Ok((exact, f_ideal, None, None));
        }
        let prepared = self.backend.prepare(&spec.build()?)?;
        let f = prepared.fidelity_with(&self.ground)?;
        let same = prepared.fidelity_with(psi.amplitudes())?;
        Ok((exact, f, Some(1.0 - same), Some(f_ideal)))
    }

    /// Executions `0..count` at one parameter vector: one simulation, then
    /// independent sampling per execution.
    fn evaluate(
        &self,
        spec: &AnsatzSpec,
        seeds: &[u64],
    ) -> Result<Vec<(EnergyBreakdown, Option<EnergyBreakdown>)>> {
        let stats = self.qnpu.ancilla_stats(spec, self.backend.as_ref())?;
        let dstats = if self.config.direct_path {
            Some(direct_stats(spec, self.backend.as_ref())?)
        } else {
            None
        };
        seeds
            .iter()
            .map(|&s| {
                let v = self.qnpu.breakdown(&stats, self.config.shots, s);
                let d = match &dstats {
                    Some(ds) => Some(direct_from_stats(&self.problem, ds, self.config.shots, s)?),
                    None => None,
                };
                Ok((v, d))
            })
            .collect()
    }

    #[allow(clippy::too_many_arguments)]
    fn record(
        &self,
        run: usize,
        iteration: usize,
        theta: &[f64],
        vqcfd: EnergyBreakdown,
        direct: Option<EnergyBreakdown>,
        cost: f64,
        metrics: &(EnergyBreakdown, f64, Option<f64>, Option<f64>),
    ) -> IterationRecord {
        IterationRecord {
            run,
            iteration,
            theta: theta.to_vec(),
            vqcfd,
            delta: direct.map(|d| vqcfd.total - d.total),
            direct,
            exact: metrics.0,
            cost,
            fidelity: metrics.1,
            f_prime: 1.0 - metrics.1,
            f_double_prime: metrics.2,
            fidelity_noiseless: metrics.3,
        }
    }
}

fn build_backend(config: &ExperimentConfig) -> Result<Box<dyn Backend>> {
    let noise = match (&config.noise, config.mode) {
        (Some(n), Mode::Noisy | Mode::PretrainedEval) => n,
        _ => return Ok(Box::new(IdealBackend)),
    };
    let snapshot = load_calibration(&noise.calibration)?;
    let mut b = NoisyBackend::new(&snapshot)?;
    if let Some(l) = &noise.layout {
        b = b.with_layout(l.clone())?;
    }
    if let Some(p) = noise.reset_error {
        b = b.with_reset_error(p)?;
    }
    Ok(Box::new(b))
}

/// Initial parameters: the configured ones, or uniform draws from the
/// experiment seed.
pub fn initial_theta(config: &ExperimentConfig) -> Vec<f64> {
    match &config.ansatz.initial_theta {
        Some(t) => t.clone(),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &[STREAM_THETA0]));
            random_theta(config.parameter_count(), &mut rng)
        }
    }
}

/// Runs the configured experiment and returns `R` traces.
pub fn run_vqcfd(config: &ExperimentConfig) -> Result<Experiment> {
    config.validate()?;
    let problem = config.grid_problem()?;
    let gs = imaginary_time_ground_state(&problem, &config.reference)?;
    let ctx = Context {
        config,
        qnpu: Qnpu::with_kappa(&problem, config.kappa)?,
        backend: build_backend(config)?,
        ground: gs.psi.amplitudes().to_vec(),
        problem,
    };
    let theta0 = initial_theta(config);
    let r = config.executions;
    let run_seeds: Vec<u64> = (0..r)
        .map(|i| derive_seed(config.seed, &[STREAM_RUN, i as u64, config.optimizer.seed]))
        .collect();
    let mut traces = match (config.mode, config.averaging) {
        (Mode::PretrainedEval, _) => pretrained(&ctx, &theta0)?,
        (_, Averaging::BestOfR) => run_seeds
            .par_iter()
            .enumerate()
            .map(|(i, &s)| best_of_r_run(&ctx, i, s, &theta0))
            .collect::<Result<Vec<_>>>()?,
        (_, Averaging::AverageCost) => average_cost(&ctx, run_seeds[0], &theta0)?,
    };
    let failure = traces.iter().find_map(|t| match &t.stop {
        StopReason::CostFailed(m) => Some(format!("run {}: {m}", t.run)),
        StopReason::NonFiniteCost => Some(format!("run {}: non-finite cost", t.run)),
        _ => None,
    });
    if traces.iter().any(|t| t.records.is_empty()) {
        return Err(Error::invalid(failure.unwrap_or_else(|| "an execution produced no evaluations".into())));
    }
    let selected = traces
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.best_cost.total_cmp(&b.1.best_cost))
        .map(|(i, _)| i)
        .expect("R ≥ 1");
    traces[selected].selected = true;
    let best = traces[selected].best().clone();
    let summary = Summary {
        statistics: statistics(&traces),
        selected_run: selected,
        best_cost: traces[selected].best_cost,
        best_theta: best.theta.clone(),
        final_energy: best.exact.total,
        ground_energy: gs.energy,
        final_fidelity: best.fidelity,
        final_fidelity_noiseless: best.fidelity_noiseless,
        final_f_double_prime: best.f_double_prime,
    };
    Ok(Experiment {
        config: config.clone(),
        backend: ctx.backend.label(),
        initial_theta: theta0,
        run_seeds,
        reference: ReferenceSummary::from(&gs),
        traces,
        summary,
        failure,
    })
}

fn optimizer_config(ctx: &Context, seed: u64) -> OptimizerConfig {
    OptimizerConfig {
        seed,
        ..ctx.config.optimizer.clone()
    }
}

fn best_index(records: &[IterationRecord]) -> usize {
    records
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.cost.total_cmp(&b.1.cost))
        .map_or(0, |(i, _)| i)
}

fn best_of_r_run(ctx: &Context, run: usize, seed: u64, theta0: &[f64]) -> Result<RunTrace> {
    let mut records = Vec::new();
    let result = minimize(
        |theta, eval_seed| {
            let spec = ctx.config.spec(theta.to_vec())?;
            let (v, d) = ctx.evaluate(&spec, &[eval_seed])?.remove(0);
            let metrics = ctx.state_metrics(&spec)?;
            let j = records.len();
            records.push(ctx.record(run, j, theta, v, d, v.total, &metrics));
            Ok(v.total)
        },
        theta0,
        &optimizer_config(ctx, seed),
    )?;
    let best_iteration = best_index(&records);
    Ok(RunTrace {
        run,
        best_cost: records.get(best_iteration).map_or(f64::NAN, |r| r.cost),
        best_iteration,
        records,
        stop: result.stop,
        selected: false,
    })
}

fn average_cost(ctx: &Context, seed: u64, theta0: &[f64]) -> Result<Vec<RunTrace>> {
    let r = ctx.config.executions;
    let mut per_run: Vec<Vec<IterationRecord>> = vec![Vec::new(); r];
    let result = minimize(
        |theta, eval_seed| {
            let spec = ctx.config.spec(theta.to_vec())?;
            let seeds: Vec<u64> = (0..r)
                .map(|i| derive_seed(eval_seed, &[STREAM_EXECUTION, i as u64]))
                .collect();
            let values = ctx.evaluate(&spec, &seeds)?;
            let mean = values.iter().map(|(v, _)| v.total).sum::<f64>() / r as f64;
            let metrics = ctx.state_metrics(&spec)?;
            let j = per_run[0].len();
            for (i, (v, d)) in values.into_iter().enumerate() {
                per_run[i].push(ctx.record(i, j, theta, v, d, mean, &metrics));
            }
            Ok(mean)
        },
        theta0,
        &optimizer_config(ctx, seed),
    )?;
    Ok(per_run
        .into_iter()
        .enumerate()
        .map(|(i, records)| {
            let best_iteration = best_index(&records);
            RunTrace {
                run: i,
                best_cost: records.get(best_iteration).map_or(f64::NAN, |r| r.cost),
                best_iteration,
                records,
                stop: result.stop.clone(),
                selected: false,
            }
        })
        .collect())
}

fn pretrained(ctx: &Context, theta: &[f64]) -> Result<Vec<RunTrace>> {
    let spec = ctx.config.spec(theta.to_vec())?;
    let seeds: Vec<u64> = (0..ctx.config.executions)
        .map(|i| derive_seed(ctx.config.seed, &[STREAM_PRETRAINED, i as u64]))
        .collect();
    let values = ctx.evaluate(&spec, &seeds)?;
    let metrics = ctx.state_metrics(&spec)?;
    Ok(values
        .into_iter()
        .enumerate()
        .map(|(i, (v, d))| RunTrace {
            run: i,
            records: vec![ctx.record(i, 0, theta, v, d, v.total, &metrics)],
            best_iteration: 0,
            best_cost: v.total,
            stop: StopReason::Converged,
            selected: false,
        })
        .collect())
}

/// `√(mean((x − mean x)²))`.
fn rms_deviation(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64).sqrt()
}

/// `σ` over all recorded `Δ_{r,j}` and `σ′_j` over executions at each
/// iteration reached by every trace.
pub fn statistics(traces: &[RunTrace]) -> Statistics {
    let deltas: Vec<f64> = traces
        .iter()
        .flat_map(|t| t.records.iter().filter_map(|r| r.delta))
        .collect();
    let mean_delta = if deltas.is_empty() {
        0.0
    } else {
        deltas.iter().sum::<f64>() / deltas.len() as f64
    };
    let common = traces.iter().map(|t| t.records.len()).min().unwrap_or(0);
    let mut sigma_prime = Vec::with_capacity(common);
    let mut mean_energy = Vec::with_capacity(common);
    for j in 0..common {
        let e: Vec<f64> = traces.iter().map(|t| t.records[j].vqcfd.total).collect();
        mean_energy.push(e.iter().sum::<f64>() / e.len() as f64);
        sigma_prime.push(rms_deviation(&e));
    }
    Statistics {
        sigma: rms_deviation(&deltas),
        mean_delta,
        sigma_prime,
        mean_energy,
    }
}

/// Convenience for callers holding a prepared state.
pub fn prepared_fidelity(state: &PreparedState, target: &[C64]) -> Result<f64> {
    state.fidelity_with(target)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(extra: &str) -> ExperimentConfig {
        ExperimentConfig::from_toml_str(&format!(
            r#"
seed = 7
mode = "noiseless"
executions = 3
shots = 2000
{extra}
[problem]
n = 2
g = 10.0
v0 = 100.0
[ansatz]
kind = "real_amplitude"
layers = 1
[optimizer]
max_iterations = 25
"#
        ))
        .unwrap()
    }

    #[test]
    fn same_seed_same_traces() {
        let c = small("");
        let a = run_vqcfd(&c).unwrap();
        let b = run_vqcfd(&c).unwrap();
        assert_eq!(output::summary_csv(&a), output::summary_csv(&b));
        assert_eq!(a.traces.len(), 3);
        assert_eq!(a.traces.iter().filter(|t| t.selected).count(), 1);
        for t in &a.traces {
            assert_eq!(t.records[0].theta, a.initial_theta);
            assert!(t.records.len() <= 25);
        }
    }

    #[test]
    fn direct_path_does_not_perturb_optimizer() {
        let with = run_vqcfd(&small("")).unwrap();
        let without = run_vqcfd(&small("direct_path = false")).unwrap();
        for (a, b) in with.traces.iter().zip(&without.traces) {
            let ta: Vec<_> = a.records.iter().map(|r| (r.theta.clone(), r.cost)).collect();
            let tb: Vec<_> = b.records.iter().map(|r| (r.theta.clone(), r.cost)).collect();
            assert_eq!(ta, tb);
            assert!(b.records.iter().all(|r| r.direct.is_none()));
        }
    }

    #[test]
    fn average_cost_shares_theta() {
        let e = run_vqcfd(&small("averaging = \"average_cost\"")).unwrap();
        let n = e.traces[0].records.len();
        for t in &e.traces {
            assert_eq!(t.records.len(), n);
            for (r, r0) in t.records.iter().zip(&e.traces[0].records) {
                assert_eq!(r.theta, r0.theta);
                assert_eq!(r.cost, r0.cost);
            }
        }
        let mean: f64 = e.traces.iter().map(|t| t.records[0].vqcfd.total).sum::<f64>() / 3.0;
        assert!((mean - e.traces[0].records[0].cost).abs() < 1e-9);
        assert_eq!(e.summary.statistics.sigma_prime.len(), n);
    }

    #[test]
    fn statistics_match_hand_computation() {
        let e = run_vqcfd(&small("")).unwrap();
        let d: Vec<f64> = e.traces.iter().flat_map(|t| t.records.iter().map(|r| r.delta.unwrap())).collect();
        let m = d.iter().sum::<f64>() / d.len() as f64;
        let s = (d.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / d.len() as f64).sqrt();
        assert!((e.summary.statistics.sigma - s).abs() < 1e-12);
        // identical start and shots → equal noiseless state metrics at j = 0
        let f0 = e.traces[0].records[0].fidelity;
        assert!(e.traces.iter().all(|t| t.records[0].fidelity == f0));
    }

    #[test]
    fn writes_all_outputs() {
        let e = run_vqcfd(&small("")).unwrap();
        let dir = tempfile::tempdir().unwrap();
        output::write_outputs(&e, dir.path()).unwrap();
        let csv = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert!(csv.starts_with(output::CSV_HEADER));
        let rows: usize = e.traces.iter().map(|t| t.records.len()).sum();
        assert_eq!(csv.lines().count(), rows + 1);
        let jsonl = std::fs::read_to_string(dir.path().join("traces.jsonl")).unwrap();
        assert_eq!(jsonl.lines().count(), rows);
        let m: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(m["seed"], 7);
        let back: ExperimentConfig = serde_json::from_value(m["config"].clone()).unwrap();
        assert_eq!(back, e.config);
    }

    #[test]
    fn pretrained_reports_noiseless_and_noisy() {
        let c = ExperimentConfig::from_toml_str(
            r#"
mode = "pretrained_eval"
executions = 2
shots = "exact"
[problem]
n = 2
g = 10.0
v0 = 100.0
[ansatz]
kind = "real_amplitude"
layers = 1
initial_theta = [0.1, 0.2, 0.3, 0.4]
[noise]
calibration = "bundled:kolkata-like"
"#,
        )
        .unwrap();
        let e = run_vqcfd(&c).unwrap();
        let r = &e.traces[0].records[0];
        let fdd = r.f_double_prime.unwrap();
        assert!(fdd > 0.0 && fdd < 0.2, "{fdd}");
        assert!(r.fidelity_noiseless.is_some());
        assert!(r.vqcfd.total.abs() < r.exact.total.abs() * 1.05);
    }
}
