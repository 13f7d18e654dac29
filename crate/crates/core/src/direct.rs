//! Ancilla-free energy estimator: grid probabilities give the potential
//! and interaction terms, probabilities after a QFT give the kinetic term.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::ansatz::AnsatzSpec;
use crate::backend::Backend;
use crate::circuits::append_qft;
use crate::error::{Error, Result};
use crate::problem::{EnergyBreakdown, EnergyMethod, GridProblem, Shots};
use crate::rng::derive_seed;
use crate::simulator::sampling::multinomial;
use crate::simulator::Circuit;

/// Eigenvalues `Δ_k = 2^{2n}(cos(2πk/2^n) − 1)` of the periodic
/// second-difference operator scaled by `N²`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LaplaceSpectrum {
    pub values: Vec<f64>,
}

pub fn laplace_spectrum(n: usize) -> Result<LaplaceSpectrum> {
    if n == 0 || n > 30 {
        return Err(Error::invalid(format!("n = {n} out of range")));
    }
    let len = 1usize << n;
    let scale = (len * len) as f64;
    let values = (0..len)
        .map(|k| {
            if k == 0 {
                0.0
            } else {
                scale * ((2.0 * PI * k as f64 / len as f64).cos() - 1.0)
            }
        })
        .collect();
    Ok(LaplaceSpectrum { values })
}

/// Bare trial-state circuit with every data qubit measured.
pub fn density_circuit(spec: &AnsatzSpec) -> Result<Circuit> {
    let mut c = spec.build()?;
    c.set_name("direct_density");
    for q in 0..spec.n {
        c.measure(q);
    }
    Ok(c)
}

/// Trial state followed by a QFT, every qubit measured.
pub fn momentum_circuit(spec: &AnsatzSpec) -> Result<Circuit> {
    let mut c = spec.build()?;
    c.set_name("direct_momentum");
    let qubits: Vec<usize> = (0..spec.n).collect();
    append_qft(&mut c, &qubits);
    for q in 0..spec.n {
        c.measure(q);
    }
    Ok(c)
}

fn sampled(dist: &[f64], shots: Shots, seed: u64) -> Vec<f64> {
    match shots {
        Shots::Exact => dist.to_vec(),
        Shots::Finite(m) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            multinomial(dist, m, &mut rng)
                .into_iter()
                .map(|c| c as f64 / m as f64)
                .collect()
        }
    }
}

/// Exact grid and momentum distributions of the ansatz state on `backend`.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectStats {
    pub density: Vec<f64>,
    pub momentum: Vec<f64>,
}

pub fn direct_stats(spec: &AnsatzSpec, backend: &dyn Backend) -> Result<DirectStats> {
    let all: Vec<usize> = (0..spec.n).collect();
    Ok(DirectStats {
        density: backend.distribution(&density_circuit(spec)?, &all)?,
        momentum: backend.distribution(&momentum_circuit(spec)?, &all)?,
    })
}

/// Samples both distributions (seeds derived from `seed`) and forms the
/// energy.
pub fn direct_from_stats(
    problem: &GridProblem,
    stats: &DirectStats,
    shots: Shots,
    seed: u64,
) -> Result<EnergyBreakdown> {
    let density = sampled(&stats.density, shots, derive_seed(seed, &[10]));
    let momentum = sampled(&stats.momentum, shots, derive_seed(seed, &[11]));
    energy_from_distributions(problem, &density, &momentum, shots)
}

/// Energy from measured grid and momentum distributions:
/// `E_P = Σ p_k V_k`, `E_I = (g/δ) Σ p_k²`,
/// `E_K = −(1/(δN)²) Σ p′_k Δ_k`.
pub fn energy_from_distributions(
    problem: &GridProblem,
    density: &[f64],
    momentum: &[f64],
    shots: Shots,
) -> Result<EnergyBreakdown> {
    let len = problem.grid_len();
    if density.len() != len || momentum.len() != len {
        return Err(Error::invalid("distribution length does not match the grid"));
    }
    let spectrum = laplace_spectrum(problem.n())?;
    let dn = problem.delta() * len as f64;
    let kinetic: f64 = -momentum
        .iter()
        .zip(&spectrum.values)
        .map(|(p, d)| p * d)
        .sum::<f64>()
        / (dn * dn);
    let potential: f64 = density.iter().zip(problem.potential()).map(|(p, v)| p * v).sum();
    let quartic: f64 = density.iter().map(|p| p * p).sum();
    let delta = problem.delta();
    let norm = problem.potential_norm();
    let raw_p = if norm > 0.0 { potential / norm } else { 0.0 };
    let raw_k = 1.0 - kinetic * delta * delta;
    let mut e = EnergyBreakdown::from_raw(problem, raw_k, raw_p, quartic, EnergyMethod::Direct, shots);
    e.kinetic = kinetic;
    e.potential = potential;
    e.total = e.kinetic + e.potential + e.interaction;
    Ok(e)
}

/// Direct-measurement energy of the ansatz state; the two circuits get
/// independent seeds derived from `seed`.
pub fn direct_energy(
    problem: &GridProblem,
    spec: &AnsatzSpec,
    shots: Shots,
    seed: u64,
    backend: &dyn Backend,
) -> Result<EnergyBreakdown> {
    if spec.n != problem.n() {
        return Err(Error::invalid(format!(
            "ansatz on {} qubits for a {}-qubit grid",
            spec.n,
            problem.n()
        )));
    }
    direct_from_stats(problem, &direct_stats(spec, backend)?, shots, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{random_theta, AnsatzKind};
    use crate::backend::IdealBackend;
    use crate::circuits::qft;
    use crate::linalg::{c, CMatrix};
    use crate::problem::classical_energy;
    use rand::SeedableRng;

    #[test]
    fn spectrum_values() {
        let s = laplace_spectrum(2).unwrap();
        let want = [0.0, -16.0, -32.0, -16.0];
        for (a, b) in s.values.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        for n in 1..=6 {
            let s = laplace_spectrum(n).unwrap().values;
            let len = s.len();
            assert_eq!(s[0], 0.0);
            for k in 1..len {
                assert!(s[k] <= 0.0);
                assert!((s[k] - s[len - k]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn qft_diagonalizes_the_stencil() {
        for n in 1..=4 {
            let len = 1usize << n;
            let f = qft(n).unwrap().unitary().unwrap();
            let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                len,
                laplace_spectrum(n).unwrap().values.into_iter().map(|v| c(v, 0.0)),
            ));
            let got = f.adjoint() * d * &f;
            // Δ_k is N²/2 times the stencil eigenvalue 2(cos(2πk/N) − 1)
            let scale = (len * len) as f64 / 2.0;
            let mut want = CMatrix::zeros(len, len);
            for k in 0..len {
                want[(k, k)] += c(-2.0 * scale, 0.0);
                want[(k, (k + 1) % len)] += c(scale, 0.0);
                want[(k, (k + len - 1) % len)] += c(scale, 0.0);
            }
            assert!(crate::linalg::max_abs_diff(&got, &want) < 1e-9 * scale.max(1.0), "n={n}");
        }
    }

    #[test]
    fn trivial_states() {
        let p = GridProblem::unit_interval(2, 1.0, 1.0).unwrap();
        let uni = AnsatzSpec::hadamard_ry(2, vec![0.0; 2]).unwrap();
        let e = direct_energy(&p, &uni, Shots::Exact, 0, &IdealBackend).unwrap();
        assert!(e.kinetic.abs() < 1e-10);
        let e0 = AnsatzSpec::real_amplitude(2, 0, vec![0.0; 2]).unwrap();
        let e = direct_energy(&p, &e0, Shots::Exact, 0, &IdealBackend).unwrap();
        assert!((e.kinetic - 16.0).abs() < 1e-10);
        assert_eq!(e.method, EnergyMethod::Direct);
    }

    #[test]
    fn matches_classical_energy_on_random_states() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for n in 2..=4 {
            let p = GridProblem::unit_interval(n, 3.0, 11.0).unwrap();
            for kind in [AnsatzKind::RealAmplitude, AnsatzKind::HadamardRy] {
                for _ in 0..5 {
                    let layers = if kind == AnsatzKind::RealAmplitude { 2 } else { 0 };
                    let count = AnsatzSpec::parameter_count(kind, n, layers);
                    let s = AnsatzSpec::new(kind, n, layers, random_theta(count, &mut rng)).unwrap();
                    let got = direct_energy(&p, &s, Shots::Exact, 0, &IdealBackend).unwrap();
                    let want = classical_energy(&p, &s.state_of().unwrap()).unwrap();
                    assert!(got.max_component_deviation(&want) < 1e-9);
                }
            }
        }
    }
}
