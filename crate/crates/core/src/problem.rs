//! The discretized nonlinear Schrödinger problem: grid, potential and the
//! classical energy functional every estimator is checked against.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::C64;

/// Normalization tolerance for exactly constructed states.
pub const NORM_TOL: f64 = 1e-12;
/// Normalization tolerance for states that went through a long simulation.
pub const SIM_NORM_TOL: f64 = 1e-9;

/// A discretized instance on `N = 2^n` periodic grid points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridProblem {
    n: usize,
    a: f64,
    b: f64,
    v0: f64,
    g: f64,
    potential: Vec<f64>,
}

impl GridProblem {
    /// Quadratic potential `V0 (x − x0)²` centred at `x0 = (b − a)/2`.
    pub fn new(n: usize, a: f64, b: f64, v0: f64, g: f64) -> Result<Self> {
        check_geometry(n, a, b)?;
        if !v0.is_finite() || !g.is_finite() {
            return Err(Error::invalid("V0 and g must be finite"));
        }
        let big_n = 1usize << n;
        let delta = (b - a) / big_n as f64;
        let x0 = (b - a) / 2.0;
        let potential = (0..big_n)
            .map(|k| {
                let x = a + delta * k as f64;
                v0 * (x - x0) * (x - x0)
            })
            .collect();
        Ok(GridProblem {
            n,
            a,
            b,
            v0,
            g,
            potential,
        })
    }

    /// Unit interval, the default geometry.
    pub fn unit_interval(n: usize, v0: f64, g: f64) -> Result<Self> {
        Self::new(n, 0.0, 1.0, v0, g)
    }

    /// Arbitrary sampled potential `V_k`. `v0` is recorded as NaN.
    pub fn with_potential(n: usize, a: f64, b: f64, potential: Vec<f64>, g: f64) -> Result<Self> {
        check_geometry(n, a, b)?;
        if potential.len() != 1 << n {
            return Err(Error::invalid(format!(
                "potential has {} samples, expected {}",
                potential.len(),
                1usize << n
            )));
        }
        if potential.iter().any(|v| !v.is_finite()) || !g.is_finite() {
            return Err(Error::invalid("potential samples and g must be finite"));
        }
        Ok(GridProblem {
            n,
            a,
            b,
            v0: f64::NAN,
            g,
            potential,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of grid points.
    pub fn grid_len(&self) -> usize {
        1 << self.n
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn v0(&self) -> f64 {
        self.v0
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn delta(&self) -> f64 {
        (self.b - self.a) / self.grid_len() as f64
    }

    pub fn x0(&self) -> f64 {
        (self.b - self.a) / 2.0
    }

    pub fn grid(&self) -> Vec<f64> {
        let d = self.delta();
        (0..self.grid_len()).map(|k| self.a + d * k as f64).collect()
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    /// Euclidean norm of the sampled potential.
    pub fn potential_norm(&self) -> f64 {
        self.potential.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Same instance with a different nonlinearity.
    pub fn with_g(&self, g: f64) -> Self {
        GridProblem { g, ..self.clone() }
    }
}

fn check_geometry(n: usize, a: f64, b: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    if n > 30 {
        return Err(Error::invalid("n above 30 is not supported"));
    }
    if !(a.is_finite() && b.is_finite() && b > a) {
        return Err(Error::invalid(format!("interval [{a}, {b}] is empty")));
    }
    Ok(())
}

/// Normalized grid amplitudes `ψ_k = √δ f(x_k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveVector {
    amplitudes: Vec<C64>,
}

impl WaveVector {
    /// Wraps amplitudes that are already normalized within `tol`.
    pub fn new(amplitudes: Vec<C64>, tol: f64) -> Result<Self> {
        if amplitudes.is_empty() || !amplitudes.len().is_power_of_two() {
            return Err(Error::invalid("wave vector length must be a power of two"));
        }
        let norm2: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > tol {
            return Err(Error::invalid(format!(
                "wave vector is not normalized (|ψ|² = {norm2})"
            )));
        }
        Ok(WaveVector { amplitudes })
    }

    /// Normalizes arbitrary non-zero amplitudes.
    pub fn normalized(mut amplitudes: Vec<C64>) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::invalid("cannot normalize a zero vector"));
        }
        for a in &mut amplitudes {
            *a /= norm;
        }
        Ok(WaveVector { amplitudes })
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::normalized(values.iter().map(|&v| C64::new(v, 0.0)).collect())
    }

    pub fn uniform(len: usize) -> Result<Self> {
        Self::from_real(&vec![1.0; len])
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn into_inner(self) -> Vec<C64> {
        self.amplitudes
    }
}

/// Shot budget of an estimate; `Exact` reads expectation values directly
/// from the simulated state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shots {
    Exact,
    Finite(u64),
}

impl Shots {
    pub fn is_exact(&self) -> bool {
        matches!(self, Shots::Exact)
    }
}

impl Serialize for Shots {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Shots::Exact => s.serialize_str("exact"),
            Shots::Finite(m) => s.serialize_u64(*m),
        }
    }
}

impl<'de> Deserialize<'de> for Shots {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Count(i64),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Count(m) if m >= 1 => Ok(Shots::Finite(m as u64)),
            Raw::Count(m) => Err(serde::de::Error::custom(format!(
                "shot count must be at least 1, got {m}"
            ))),
            Raw::Word(w) if w == "exact" || w == "inf" => Ok(Shots::Exact),
            Raw::Word(w) => Err(serde::de::Error::custom(format!(
                "expected a shot count or \"exact\", got {w:?}"
            ))),
        }
    }
}

/// How an [`EnergyBreakdown`] was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyMethod {
    HadamardShots,
    HadamardExact,
    Direct,
    Classical,
}

/// Energy components plus the dimensionless raw values they were scaled from.
///
/// The raw values are `⟨E_K⟩δ²`-style ancilla quantities: `raw_k` is the
/// real nearest-neighbour overlap `Re Σ ψ*_k ψ_{k+1}`, `raw_p = E_P/𝒩` and
/// `raw_i = E_I δ/g`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub raw_k: f64,
    pub raw_p: f64,
    pub raw_i: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub interaction: f64,
    pub total: f64,
    pub method: EnergyMethod,
    pub shots: Shots,
}

impl EnergyBreakdown {
    /// Scales raw ancilla-level values into energies.
    pub fn from_raw(
        problem: &GridProblem,
        raw_k: f64,
        raw_p: f64,
        raw_i: f64,
        method: EnergyMethod,
        shots: Shots,
    ) -> Self {
        let delta = problem.delta();
        let kinetic = (1.0 - raw_k) / (delta * delta);
        let potential = problem.potential_norm() * raw_p;
        let interaction = problem.g() / delta * raw_i;
        EnergyBreakdown {
            raw_k,
            raw_p,
            raw_i,
            kinetic,
            potential,
            interaction,
            total: kinetic + potential + interaction,
            method,
            shots,
        }
    }

    /// Largest absolute difference over the scaled components and the total.
    pub fn max_component_deviation(&self, other: &EnergyBreakdown) -> f64 {
        [
            (self.kinetic - other.kinetic).abs(),
            (self.potential - other.potential).abs(),
            (self.interaction - other.interaction).abs(),
            (self.total - other.total).abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Exact energy functional on the periodic grid:
/// `E_P = Σ|ψ_k|²V_k`, `E_I = (g/δ)Σ|ψ_k|⁴` and
/// `E_K = −(1/2δ²) Σ ψ*_k(ψ_{k+1} − 2ψ_k + ψ_{k−1})`.
pub fn classical_energy(problem: &GridProblem, psi: &WaveVector) -> Result<EnergyBreakdown> {
    let amps = psi.amplitudes();
    if amps.len() != problem.grid_len() {
        return Err(Error::invalid(format!(
            "wave vector has {} points, grid has {}",
            amps.len(),
            problem.grid_len()
        )));
    }
    let norm2: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    if (norm2 - 1.0).abs() > SIM_NORM_TOL {
        return Err(Error::invalid(format!(
            "wave vector is not normalized (|ψ|² = {norm2})"
        )));
    }
    let len = amps.len();
    let delta = problem.delta();
    let mut stencil = C64::new(0.0, 0.0);
    let mut neighbour = C64::new(0.0, 0.0);
    for k in 0..len {
        let next = amps[(k + 1) % len];
        let prev = amps[(k + len - 1) % len];
        stencil += amps[k].conj() * (next - 2.0 * amps[k] + prev);
        neighbour += amps[k].conj() * next;
    }
    let kinetic = -stencil.re / (2.0 * delta * delta);
    let potential: f64 = amps
        .iter()
        .zip(problem.potential())
        .map(|(a, v)| a.norm_sqr() * v)
        .sum();
    let quartic: f64 = amps.iter().map(|a| a.norm_sqr().powi(2)).sum();
    let interaction = problem.g() / delta * quartic;
    let pnorm = problem.potential_norm();
    Ok(EnergyBreakdown {
        raw_k: neighbour.re,
        raw_p: if pnorm > 0.0 { potential / pnorm } else { 0.0 },
        raw_i: quartic,
        kinetic,
        potential,
        interaction,
        total: kinetic + potential + interaction,
        method: EnergyMethod::Classical,
        shots: Shots::Exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn grid_geometry_for_two_qubits() {
        let p = GridProblem::unit_interval(2, 1.0, 10.0).unwrap();
        assert_eq!(p.delta(), 0.25);
        assert_eq!(p.grid(), vec![0.0, 0.25, 0.5, 0.75]);
        assert_eq!(p.x0(), 0.5);
        assert_eq!(p.potential(), &[0.25, 0.0625, 0.0, 0.0625]);
        assert_abs_diff_eq!(p.potential_norm(), 0.0703125f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn zero_potential_has_zero_norm() {
        let p = GridProblem::unit_interval(2, 0.0, 10.0).unwrap();
        assert!(p.potential().iter().all(|&v| v == 0.0));
        assert_eq!(p.potential_norm(), 0.0);
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(GridProblem::new(0, 0.0, 1.0, 1.0, 1.0).is_err());
        assert!(GridProblem::new(2, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(GridProblem::new(2, 1.0, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn uniform_state_energies() {
        let p = GridProblem::unit_interval(2, 1.0, 5000.0).unwrap();
        let e = classical_energy(&p, &WaveVector::uniform(4).unwrap()).unwrap();
        assert_abs_diff_eq!(e.kinetic, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.interaction, 5000.0, epsilon = 1e-9);
        assert_abs_diff_eq!(e.potential, 0.09375, epsilon = 1e-15);
    }

    #[test]
    fn basis_state_energies() {
        let p = GridProblem::unit_interval(2, 1.0, 5000.0).unwrap();
        let e = classical_energy(&p, &WaveVector::from_real(&[1.0, 0.0, 0.0, 0.0]).unwrap()).unwrap();
        assert_abs_diff_eq!(e.kinetic, 16.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.interaction, 20000.0, epsilon = 1e-9);
        assert_abs_diff_eq!(e.potential, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(e.total, 20016.25, epsilon = 1e-9);
    }

    #[test]
    fn rejects_unnormalized() {
        let p = GridProblem::unit_interval(1, 1.0, 1.0).unwrap();
        let w = WaveVector {
            amplitudes: vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)],
        };
        assert!(classical_energy(&p, &w).is_err());
        assert!(WaveVector::new(vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)], NORM_TOL).is_err());
    }

    /// Dense periodic second-difference Hamiltonian, built independently of
    /// the stencil loop above.
    fn dense_linear_hamiltonian(p: &GridProblem) -> Vec<Vec<f64>> {
        let len = p.grid_len();
        let d2 = p.delta() * p.delta();
        let mut h = vec![vec![0.0; len]; len];
        for k in 0..len {
            h[k][k] += 1.0 / d2 + p.potential()[k];
            h[k][(k + 1) % len] -= 0.5 / d2;
            h[k][(k + len - 1) % len] -= 0.5 / d2;
        }
        h
    }

    #[test]
    fn matches_dense_quadratic_form() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let p = GridProblem::unit_interval(3, 2.5, 37.0).unwrap();
        let h = dense_linear_hamiltonian(&p);
        for _ in 0..20 {
            let raw: Vec<C64> = (0..8)
                .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let psi = WaveVector::normalized(raw).unwrap();
            let a = psi.amplitudes();
            let mut quad = C64::new(0.0, 0.0);
            for i in 0..8 {
                for j in 0..8 {
                    quad += a[i].conj() * h[i][j] * a[j];
                }
            }
            let nonlinear: f64 = a.iter().map(|x| x.norm_sqr().powi(2)).sum::<f64>() * p.g() / p.delta();
            let e = classical_energy(&p, &psi).unwrap();
            assert_abs_diff_eq!(e.total, quad.re + nonlinear, epsilon = 1e-10);
            assert_abs_diff_eq!(e.kinetic + e.potential, quad.re, epsilon = 1e-10);
        }
    }

    fn arb_state(len: usize) -> impl Strategy<Value = WaveVector> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), len)
            .prop_filter("non-zero", |v| v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3))
            .prop_map(|v| {
                WaveVector::normalized(v.into_iter().map(|(re, im)| C64::new(re, im)).collect())
                    .unwrap()
            })
    }

    proptest! {
        #[test]
        fn kinetic_is_non_negative(psi in arb_state(8)) {
            let p = GridProblem::unit_interval(3, 1.0, 1.0).unwrap();
            let e = classical_energy(&p, &psi).unwrap();
            prop_assert!(e.kinetic >= -1e-9);
        }

        #[test]
        fn global_phase_invariance(psi in arb_state(8), phase in 0.0f64..6.3) {
            let p = GridProblem::unit_interval(3, 3.0, 7.0).unwrap();
            let rotated = WaveVector::normalized(
                psi.amplitudes().iter().map(|a| a * C64::from_polar(1.0, phase)).collect(),
            ).unwrap();
            let a = classical_energy(&p, &psi).unwrap();
            let b = classical_energy(&p, &rotated).unwrap();
            prop_assert!(a.max_component_deviation(&b) < 1e-9);
        }

        #[test]
        fn linear_in_g_and_v0(psi in arb_state(4), scale in 0.1f64..10.0) {
            let p = GridProblem::unit_interval(2, 2.0, 3.0).unwrap();
            let q = GridProblem::unit_interval(2, 2.0 * scale, 3.0 * scale).unwrap();
            let a = classical_energy(&p, &psi).unwrap();
            let b = classical_energy(&q, &psi).unwrap();
            prop_assert!((b.interaction - scale * a.interaction).abs() < 1e-9 * (1.0 + b.interaction.abs()));
            prop_assert!((b.potential - scale * a.potential).abs() < 1e-9 * (1.0 + b.potential.abs()));
        }
    }
}
