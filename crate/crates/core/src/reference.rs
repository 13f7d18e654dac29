//! Classical ground truth: imaginary-time (normalized gradient-flow)
//! ground state of the discretized functional, and state fidelities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::problem::{classical_energy, GridProblem, WaveVector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImaginaryTimeConfig {
    /// Euler step; `None` picks `0.5 / (2/δ² + max V + 2g/δ)`.
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

fn default_tol() -> f64 {
    1e-12
}

fn default_max_steps() -> usize {
    1_000_000
}

impl Default for ImaginaryTimeConfig {
    fn default() -> Self {
        ImaginaryTimeConfig {
            tau: None,
            tol: default_tol(),
            max_steps: default_max_steps(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GroundState {
    pub psi: WaveVector,
    /// Value of the energy functional, equal to `classical_energy(ψ).total`.
    pub energy: f64,
    /// Nonlinear eigenvalue `μ` of `H_eff ψ = μ ψ`.
    pub chemical_potential: f64,
    /// `‖H_eff ψ − μ ψ‖`.
    pub residual: f64,
    pub iterations: usize,
    pub tau: f64,
}

/// Step size that keeps explicit Euler stable for every normalized state.
pub fn default_tau(problem: &GridProblem) -> f64 {
    let d = problem.delta();
    let vmax = problem.potential().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    0.5 / (2.0 / (d * d) + vmax + 2.0 * problem.g().abs() / d)
}

/// `H_eff ψ` with `H_eff = −(1/2δ²)·stencil + V + 2(g/δ)|ψ|²`, the
/// derivative of the energy functional with respect to `ψ*`.
pub fn effective_hamiltonian_apply(problem: &GridProblem, psi: &[f64]) -> Vec<f64> {
    let len = psi.len();
    let d = problem.delta();
    let kin = 1.0 / (2.0 * d * d);
    let gd = 2.0 * problem.g() / d;
    let v = problem.potential();
    (0..len)
        .map(|k| {
            let lap = psi[(k + 1) % len] - 2.0 * psi[k] + psi[(k + len - 1) % len];
            -kin * lap + (v[k] + gd * psi[k] * psi[k]) * psi[k]
        })
        .collect()
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

/// Iterates `ψ ← normalize(ψ − τ H_eff[ψ] ψ)` from the uniform state until
/// the functional changes by less than `tol` between steps.
pub fn imaginary_time_ground_state(
    problem: &GridProblem,
    config: &ImaginaryTimeConfig,
) -> Result<GroundState> {
    let tau = config.tau.unwrap_or_else(|| default_tau(problem));
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::invalid("imaginary-time step must be positive"));
    }
    let len = problem.grid_len();
    let mut psi = vec![1.0 / (len as f64).sqrt(); len];
    // a tilt breaks the symmetry of the uniform start when it is stationary
    // for the linear part but not the ground state
    if problem.potential().iter().any(|&v| v != problem.potential()[0]) {
        for (k, p) in psi.iter_mut().enumerate() {
            *p *= 1.0 + 1e-3 * (k as f64 / len as f64);
        }
        normalize(&mut psi);
    }
    let energy = |psi: &[f64]| functional(problem, psi);
    let mut e = energy(&psi);
    let mut last_change = f64::INFINITY;
    for step in 1..=config.max_steps {
        let h = effective_hamiltonian_apply(problem, &psi);
        for (p, hp) in psi.iter_mut().zip(&h) {
            *p -= tau * hp;
        }
        normalize(&mut psi);
        let e_new = energy(&psi);
        if step > 5 && e_new > e + 1e-9 * e.abs().max(1.0) {
            return Err(Error::invalid(format!(
                "energy rose at step {step} (tau = {tau:e} too large)"
            )));
        }
        last_change = (e_new - e).abs();
        e = e_new;
        if !e.is_finite() {
            return Err(Error::invalid("imaginary-time iteration diverged; reduce tau"));
        }
        if last_change < config.tol {
            return finish(problem, psi, step, tau);
        }
    }
    Err(Error::NoConvergence {
        steps: config.max_steps,
        last_change,
    })
}

fn functional(problem: &GridProblem, psi: &[f64]) -> f64 {
    let len = psi.len();
    let d = problem.delta();
    let mut kin = 0.0;
    let mut pot = 0.0;
    let mut quart = 0.0;
    for k in 0..len {
        kin += psi[k] * psi[(k + 1) % len];
        let p = psi[k] * psi[k];
        pot += p * problem.potential()[k];
        quart += p * p;
    }
    (1.0 - kin) / (d * d) + pot + problem.g() / d * quart
}

fn finish(problem: &GridProblem, mut psi: Vec<f64>, iterations: usize, tau: f64) -> Result<GroundState> {
    // fix the global sign so the largest amplitude is positive
    let lead = psi.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
    if lead < 0.0 {
        psi.iter_mut().for_each(|x| *x = -*x);
    }
    let h = effective_hamiltonian_apply(problem, &psi);
    let mu: f64 = psi.iter().zip(&h).map(|(a, b)| a * b).sum();
    let residual = psi
        .iter()
        .zip(&h)
        .map(|(p, hp)| (hp - mu * p).powi(2))
        .sum::<f64>()
        .sqrt();
    let wave = WaveVector::from_real(&psi)?;
    let energy = classical_energy(problem, &wave)?.total;
    Ok(GroundState {
        psi: wave,
        energy,
        chemical_potential: mu,
        residual,
        iterations,
        tau,
    })
}

/// `|⟨a|b⟩|²`.
pub fn fidelity(a: &[C64], b: &[C64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "states of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(crate::linalg::inner(a, b).norm_sqr().min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn re(v: &WaveVector) -> Vec<f64> {
        v.amplitudes().iter().map(|a| a.re).collect()
    }

    #[test]
    fn free_particle_is_uniform() {
        let p = GridProblem::unit_interval(3, 0.0, 0.0).unwrap();
        let gs = imaginary_time_ground_state(&p, &Default::default()).unwrap();
        assert!(gs.energy.abs() < 1e-12);
        let u = WaveVector::uniform(8).unwrap();
        assert!((fidelity(gs.psi.amplitudes(), u.amplitudes()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn linear_problem_matches_dense_eigensolver() {
        let p = GridProblem::unit_interval(4, 1.0, 0.0).unwrap();
        let len = 16;
        let d = p.delta();
        let mut h = DMatrix::<f64>::zeros(len, len);
        for k in 0..len {
            h[(k, k)] = 1.0 / (d * d) + p.potential()[k];
            h[(k, (k + 1) % len)] -= 0.5 / (d * d);
            h[(k, (k + len - 1) % len)] -= 0.5 / (d * d);
        }
        let eig = h.symmetric_eigen();
        let (i0, e0) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &e)| if e < acc.1 { (i, e) } else { acc });
        let v0: Vec<C64> = eig.eigenvectors.column(i0).iter().map(|&x| C64::new(x, 0.0)).collect();
        let gs = imaginary_time_ground_state(&p, &Default::default()).unwrap();
        assert!((gs.energy - e0).abs() < 1e-8, "{} vs {e0}", gs.energy);
        assert!((fidelity(gs.psi.amplitudes(), &v0).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn strong_coupling_is_nearly_uniform() {
        let p = GridProblem::unit_interval(2, 1.0, 5000.0).unwrap();
        let gs = imaginary_time_ground_state(&p, &Default::default()).unwrap();
        let u = WaveVector::uniform(4).unwrap();
        assert!(fidelity(gs.psi.amplitudes(), u.amplitudes()).unwrap() > 0.99);
    }

    #[test]
    fn energy_is_the_functional_and_stationary() {
        for g in [10.0, 500.0] {
            let p = GridProblem::unit_interval(3, 20.0, g).unwrap();
            let gs = imaginary_time_ground_state(&p, &Default::default()).unwrap();
            let e = classical_energy(&p, &gs.psi).unwrap();
            assert!((gs.energy - e.total).abs() < 1e-9);
            assert!((gs.chemical_potential - (e.total + e.interaction)).abs() < 1e-6);
            assert!(gs.residual < 1e-3 * gs.chemical_potential.abs().max(1.0), "{}", gs.residual);
            // no nearby normalized perturbation has lower energy
            let base = re(&gs.psi);
            for k in 0..base.len() {
                for s in [-1e-3, 1e-3] {
                    let mut v = base.clone();
                    v[k] += s;
                    normalize(&mut v);
                    assert!(functional(&p, &v) >= gs.energy - 1e-9);
                }
            }
        }
    }

    #[test]
    fn energy_decreases_along_the_flow() {
        let p = GridProblem::unit_interval(3, 50.0, 100.0).unwrap();
        let tau = default_tau(&p);
        let mut psi: Vec<f64> = (0..8).map(|k| 1.0 + k as f64).collect();
        normalize(&mut psi);
        let mut energies = Vec::new();
        for _ in 0..200 {
            let h = effective_hamiltonian_apply(&p, &psi);
            psi.iter_mut().zip(&h).for_each(|(a, b)| *a -= tau * b);
            normalize(&mut psi);
            energies.push(functional(&p, &psi));
        }
        assert!(energies[5..].windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn fidelity_cases() {
        let a = vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let b = vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
        let m: Vec<C64> = a.iter().map(|x| -x).collect();
        assert_eq!(fidelity(&a, &a).unwrap(), 1.0);
        assert_eq!(fidelity(&a, &b).unwrap(), 0.0);
        assert_eq!(fidelity(&a, &m).unwrap(), 1.0);
        assert!(fidelity(&a, &a[..1]).is_err());
    }

    #[test]
    fn divergent_step_is_reported() {
        let p = GridProblem::unit_interval(2, 1.0, 5000.0).unwrap();
        let cfg = ImaginaryTimeConfig {
            tau: Some(1.0),
            max_steps: 1000,
            ..Default::default()
        };
        assert!(imaginary_time_ground_state(&p, &cfg).is_err());
    }
}
