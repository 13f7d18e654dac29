//! Derivative-free minimization with linear interpolation models on a
//! simplex and a shrinking trust region (COBYLA without constraints).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::derive_seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    /// Budget of cost evaluations.
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_rho_begin")]
    pub rho_begin: f64,
    #[serde(default = "default_rho_end")]
    pub rho_end: f64,
    /// Base of the per-evaluation seeds handed to the cost.
    #[serde(default)]
    pub seed: u64,
}

fn default_max_iterations() -> usize {
    200
}

fn default_rho_begin() -> f64 {
    0.5
}

fn default_rho_end() -> f64 {
    1e-4
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            max_iterations: default_max_iterations(),
            rho_begin: default_rho_begin(),
            rho_end: default_rho_end(),
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::config("max_iterations", "must be at least 1"));
        }
        if !(self.rho_end > 0.0 && self.rho_end.is_finite()) {
            return Err(Error::config("rho_end", "must be positive"));
        }
        if !(self.rho_begin > self.rho_end && self.rho_begin.is_finite()) {
            return Err(Error::config("rho_begin", "must exceed rho_end"));
        }
        Ok(())
    }
}

/// One cost evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub iteration: usize,
    pub theta: Vec<f64>,
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Trust radius reached `rho_end`.
    Converged,
    BudgetExhausted,
    NonFiniteCost,
    CostFailed(String),
}

#[derive(Clone, Debug, Serialize)]
pub struct OptimizeResult {
    pub theta: Vec<f64>,
    pub cost: f64,
    pub trace: Vec<Evaluation>,
    pub rho: f64,
    pub stop: StopReason,
}

impl OptimizeResult {
    /// Running minimum of the trace.
    pub fn best_so_far(&self) -> Vec<f64> {
        let mut best = f64::INFINITY;
        self.trace
            .iter()
            .map(|e| {
                best = best.min(e.cost);
                best
            })
            .collect()
    }
}

struct Stop(StopReason);

struct State<'a, F> {
    cost: F,
    config: &'a OptimizerConfig,
    trace: Vec<Evaluation>,
}

impl<F: FnMut(&[f64], u64) -> Result<f64>> State<'_, F> {
    fn eval(&mut self, x: &DVector<f64>) -> std::result::Result<f64, Stop> {
        if self.trace.len() >= self.config.max_iterations {
            return Err(Stop(StopReason::BudgetExhausted));
        }
        let it = self.trace.len();
        let seed = derive_seed(self.config.seed, &[it as u64]);
        let theta: Vec<f64> = x.iter().copied().collect();
        let value = (self.cost)(&theta, seed).map_err(|e| Stop(StopReason::CostFailed(e.to_string())))?;
        self.trace.push(Evaluation {
            iteration: it,
            theta,
            cost: value,
        });
        if !value.is_finite() {
            return Err(Stop(StopReason::NonFiniteCost));
        }
        Ok(value)
    }
}

/// Simplex around the best point `x0`: row `j` of `sim` is the offset of
/// vertex `j`, `fval[j]` its cost.
struct Simplex {
    x0: DVector<f64>,
    f0: f64,
    sim: DMatrix<f64>,
    fval: Vec<f64>,
    simi: DMatrix<f64>,
}

impl Simplex {
    fn refresh_inverse(&mut self) {
        if let Some(inv) = self.sim.clone().try_inverse() {
            self.simi = inv;
        }
    }

    /// Moves the base point to vertex `k`.
    fn rebase_to(&mut self, k: usize) {
        let dk = self.sim.row(k).into_owned();
        self.x0 += dk.transpose();
        for j in 0..self.sim.nrows() {
            if j != k {
                let r = self.sim.row(j) - &dk;
                self.sim.set_row(j, &r);
            }
        }
        self.sim.set_row(k, &(-dk));
        std::mem::swap(&mut self.f0, &mut self.fval[k]);
        self.refresh_inverse();
    }

    fn rebase_to_best(&mut self) {
        let (k, fk) = self
            .fval
            .iter()
            .enumerate()
            .fold((usize::MAX, self.f0), |acc, (j, &f)| if f < acc.1 { (j, f) } else { acc });
        if k != usize::MAX && fk < self.f0 {
            self.rebase_to(k);
        }
    }

    fn gradient(&self) -> DVector<f64> {
        let df = DVector::from_iterator(self.fval.len(), self.fval.iter().map(|f| f - self.f0));
        &self.simi * df
    }

    fn replace(&mut self, j: usize, d: &DVector<f64>, f: f64) {
        self.sim.set_row(j, &d.transpose());
        self.fval[j] = f;
        self.refresh_inverse();
    }
}

const ALPHA: f64 = 0.25;
const BETA: f64 = 2.1;
const GAMMA: f64 = 0.5;

/// Minimizes `cost` from `theta0`. The cost receives the point and a seed
/// unique to the evaluation, derived from `config.seed`. The best point
/// seen is returned along with every evaluation made.
pub fn minimize<F>(cost: F, theta0: &[f64], config: &OptimizerConfig) -> Result<OptimizeResult>
where
    F: FnMut(&[f64], u64) -> Result<f64>,
{
    config.validate()?;
    if theta0.is_empty() {
        return Err(Error::invalid("optimization needs at least one parameter"));
    }
    let mut state = State {
        cost,
        config,
        trace: Vec::new(),
    };
    let mut rho = config.rho_begin;
    let stop = run(&mut state, theta0, &mut rho);
    let best = state
        .trace
        .iter()
        .filter(|e| e.cost.is_finite())
        .min_by(|a, b| a.cost.total_cmp(&b.cost));
    let (theta, value) = match best {
        Some(e) => (e.theta.clone(), e.cost),
        None => (theta0.to_vec(), f64::NAN),
    };
    Ok(OptimizeResult {
        theta,
        cost: value,
        trace: state.trace,
        rho,
        stop,
    })
}

fn run<F: FnMut(&[f64], u64) -> Result<f64>>(
    state: &mut State<'_, F>,
    theta0: &[f64],
    rho: &mut f64,
) -> StopReason {
    match iterate(state, theta0, rho) {
        Ok(()) => StopReason::Converged,
        Err(Stop(r)) => r,
    }
}

fn iterate<F: FnMut(&[f64], u64) -> Result<f64>>(
    state: &mut State<'_, F>,
    theta0: &[f64],
    rho: &mut f64,
) -> std::result::Result<(), Stop> {
    let n = theta0.len();
    let rho_end = state.config.rho_end;
    let x0 = DVector::from_column_slice(theta0);
    let f0 = state.eval(&x0)?;
    let mut s = Simplex {
        x0,
        f0,
        sim: DMatrix::identity(n, n) * *rho,
        fval: vec![f64::INFINITY; n],
        simi: DMatrix::identity(n, n) / *rho,
    };
    for j in 0..n {
        let mut x = s.x0.clone();
        x[j] += *rho;
        s.fval[j] = state.eval(&x)?;
        // later vertices are placed around the moved base
        if s.fval[j] < s.f0 {
            s.x0[j] += *rho;
            std::mem::swap(&mut s.f0, &mut s.fval[j]);
            s.sim[(j, j)] = -*rho;
            for k in 0..j {
                s.sim[(k, j)] -= *rho;
            }
        }
    }
    s.refresh_inverse();
    let mut geometry_due = false;
    loop {
        s.rebase_to_best();
        let parsig = ALPHA * *rho;
        let pareta = BETA * *rho;
        let veta: Vec<f64> = (0..n).map(|j| s.sim.row(j).norm()).collect();
        let vsig: Vec<f64> = (0..n).map(|j| 1.0 / s.simi.column(j).norm()).collect();
        let far = (0..n)
            .filter(|&j| veta[j] > pareta)
            .max_by(|&a, &b| veta[a].total_cmp(&veta[b]));
        let flat = (0..n)
            .filter(|&j| vsig[j] < parsig)
            .min_by(|&a, &b| vsig[a].total_cmp(&vsig[b]));
        let acceptable = far.is_none() && flat.is_none();

        if geometry_due && !acceptable {
            // replace the worst-placed vertex by a point orthogonal to the
            // opposite face
            let j = far.or(flat).expect("unacceptable simplex");
            let mut d = s.simi.column(j).into_owned() * (GAMMA * *rho * vsig[j]);
            let g = s.gradient();
            if g.dot(&d) > 0.0 {
                d = -d;
            }
            let f = state.eval(&(&s.x0 + &d))?;
            s.replace(j, &d, f);
            geometry_due = false;
            continue;
        }

        let g = s.gradient();
        let gnorm = g.norm();
        let mut improved = false;
        if gnorm > 0.0 && gnorm.is_finite() {
            let d = &g * (-*rho / gnorm);
            let predicted = *rho * gnorm;
            let f = state.eval(&(&s.x0 + &d))?;
            let actual = s.f0 - f;
            improved = actual > 0.1 * predicted;
            let sigma = d.transpose() * &s.simi;
            let weight = |j: usize, dist: f64| sigma[j].abs() * (dist / *rho).max(1.0).powi(2);
            if f < s.f0 {
                let j = (0..n)
                    .max_by(|&a, &b| {
                        let da = (s.sim.row(a).transpose() - &d).norm();
                        let db = (s.sim.row(b).transpose() - &d).norm();
                        weight(a, da).total_cmp(&weight(b, db))
                    })
                    .expect("n ≥ 1");
                s.replace(j, &d, f);
            } else {
                let j = (0..n)
                    .max_by(|&a, &b| weight(a, veta[a]).total_cmp(&weight(b, veta[b])))
                    .expect("n ≥ 1");
                if weight(j, veta[j]) > 1.0 {
                    s.replace(j, &d, f);
                }
            }
        }
        if improved {
            continue;
        }
        if !acceptable {
            geometry_due = true;
            continue;
        }
        if *rho <= 1.5 * rho_end {
            *rho = rho_end;
            return Ok(());
        }
        *rho *= 0.5;
        if *rho <= 1.5 * rho_end {
            *rho = rho_end;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(x: &[f64], _: u64) -> Result<f64> {
        Ok(x.iter().map(|v| v * v).sum())
    }

    fn rosenbrock(x: &[f64], _: u64) -> Result<f64> {
        Ok(100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2))
    }

    #[test]
    fn sphere_converges() {
        let r = minimize(sphere, &[3.0, -2.0], &OptimizerConfig::default()).unwrap();
        assert!(r.cost < 1e-6, "{r:?}");
        assert!(r.theta.iter().map(|v| v * v).sum::<f64>().sqrt() < 1e-3);
        assert!(r.trace.len() <= 200);
        assert_eq!(r.stop, StopReason::Converged);
    }

    #[test]
    fn rosenbrock_converges() {
        let cfg = OptimizerConfig {
            max_iterations: 20_000,
            rho_begin: 0.5,
            rho_end: 1e-8,
            seed: 0,
        };
        let r = minimize(rosenbrock, &[-1.2, 1.0], &cfg).unwrap();
        assert!((r.theta[0] - 1.0).abs() < 1e-3 && (r.theta[1] - 1.0).abs() < 1e-3, "{:?} {} {}", r.theta, r.trace.len(), r.cost);
    }

    #[test]
    fn best_so_far_is_monotone_and_trace_replays() {
        let r = minimize(rosenbrock, &[0.0, 0.0], &OptimizerConfig::default()).unwrap();
        let b = r.best_so_far();
        assert!(b.windows(2).all(|w| w[1] <= w[0]));
        for e in &r.trace {
            assert_eq!(rosenbrock(&e.theta, 0).unwrap(), e.cost);
        }
        assert_eq!(*b.last().unwrap(), r.cost);
    }

    #[test]
    fn non_finite_cost_aborts_with_trace() {
        let mut calls = 0;
        let r = minimize(
            |x: &[f64], _| {
                calls += 1;
                Ok(if calls == 4 { f64::NAN } else { x[0] * x[0] })
            },
            &[1.0, 2.0],
            &OptimizerConfig::default(),
        )
        .unwrap();
        assert_eq!(r.stop, StopReason::NonFiniteCost);
        assert_eq!(r.trace.len(), 4);
        assert!(r.cost.is_finite());
    }

    #[test]
    fn seeds_are_per_evaluation() {
        let mut seen = Vec::new();
        let cfg = OptimizerConfig {
            max_iterations: 10,
            seed: 3,
            ..Default::default()
        };
        minimize(|x: &[f64], s| { seen.push(s); sphere(x, s) }, &[1.0], &cfg).unwrap();
        let mut d = seen.clone();
        d.dedup();
        assert_eq!(d.len(), seen.len());
        assert!(OptimizerConfig { rho_begin: 1e-5, ..Default::default() }.validate().is_err());
        assert!(OptimizerConfig { max_iterations: 0, ..Default::default() }.validate().is_err());
    }
}
