//! Hadamard-test circuits that read the kinetic, potential and interaction
//! energies of an ansatz state off a single ancilla.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ansatz::AnsatzSpec;
use crate::backend::Backend;
use crate::circuits::{append_increment, RegisterLayout};
use crate::error::{Error, Result};
use crate::mps::encode_potential;
use crate::problem::{EnergyBreakdown, EnergyMethod, GridProblem, Shots};
use crate::rng::derive_seed;
use crate::simulator::sampling::multinomial;
use crate::simulator::Circuit;

/// Bond-dimension exponent used for the potential-state circuit.
pub const DEFAULT_KAPPA: u32 = 2;

/// `Re Σ ψ*_k ψ_{k+1}` on the ancilla: controlled cyclic increment between
/// two Hadamards. Width `2n − 1`.
pub fn kinetic_circuit(spec: &AnsatzSpec) -> Result<Circuit> {
    let n = spec.n;
    let layout = RegisterLayout::kinetic(n)?;
    let mut c = layout.circuit("kinetic");
    let anc = layout.ancilla;
    let data: Vec<usize> = layout.primary.clone().collect();
    let adder: Vec<usize> = layout.adder.clone().unwrap_or_default().collect();
    c.h(anc);
    spec.append_to(&mut c, &data, None)?;
    append_increment(&mut c, &data, &adder, Some(anc))?;
    c.h(anc).measure(anc);
    Ok(c)
}

/// `Σ |ψ_k|² V_k/𝒩` on the ancilla: the potential state is prepared on a
/// second register under ancilla control, then XOR-ed with the trial
/// register. Width `2n + 1`.
pub fn potential_circuit(spec: &AnsatzSpec, v_hat: &Circuit) -> Result<Circuit> {
    let n = spec.n;
    if v_hat.width() != n {
        return Err(Error::invalid(format!(
            "potential circuit has {} qubits, ansatz has {n}",
            v_hat.width()
        )));
    }
    let layout = RegisterLayout::potential(n)?;
    let mut c = layout.circuit("potential");
    let anc = layout.ancilla;
    let a: Vec<usize> = layout.primary.clone().collect();
    let b: Vec<usize> = layout.secondary.clone().expect("two registers").collect();
    c.h(anc);
    spec.append_to(&mut c, &a, None)?;
    let mut placed = Circuit::new(c.width());
    placed.append_mapped(v_hat, &b)?;
    c.append_at(&placed.controlled(anc)?, 0)?;
    for i in 0..n {
        c.ccx(anc, a[i], b[i]);
    }
    c.h(anc).measure(anc);
    Ok(c)
}

/// `Σ ψ_k⁴` on the ancilla for real states: two controlled copies of the
/// trial state XOR-ed with a third. Width `3n + 1`. The two Toffolis
/// sharing controls are merged as `CX(b,t)·CCX(anc,a,b)·CX(b,t)`.
pub fn interaction_circuit(spec: &AnsatzSpec) -> Result<Circuit> {
    let n = spec.n;
    let layout = RegisterLayout::interaction(n)?;
    let mut c = layout.circuit("interaction");
    let anc = layout.ancilla;
    let a: Vec<usize> = layout.primary.clone().collect();
    let b: Vec<usize> = layout.secondary.clone().expect("three registers").collect();
    let t: Vec<usize> = layout.tertiary.clone().expect("three registers").collect();
    c.h(anc);
    spec.append_to(&mut c, &a, None)?;
    spec.append_controlled_on_zero(&mut c, &b, anc)?;
    spec.append_controlled_on_zero(&mut c, &t, anc)?;
    for i in 0..n {
        c.cx(b[i], t[i]);
        c.ccx(anc, a[i], b[i]);
        c.cx(b[i], t[i]);
    }
    c.h(anc).measure(anc);
    Ok(c)
}

/// `⟨Z⟩` from a one-bit distribution, exact or estimated from `M` draws as
/// `(count₀ − count₁)/M`.
pub fn raw_from_distribution(dist: [f64; 2], shots: Shots, seed: u64) -> f64 {
    match shots {
        Shots::Exact => dist[0] - dist[1],
        Shots::Finite(m) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let counts = multinomial(&dist, m, &mut rng);
            (counts[0] as f64 - counts[1] as f64) / m as f64
        }
    }
}

/// Ancilla `⟨Z⟩` of `circuit`, exact or sampled.
pub fn ancilla_value(
    backend: &dyn Backend,
    circuit: &Circuit,
    shots: Shots,
    seed: u64,
) -> Result<f64> {
    Ok(raw_from_distribution(ancilla_distribution(backend, circuit)?, shots, seed))
}

fn ancilla_distribution(backend: &dyn Backend, circuit: &Circuit) -> Result<[f64; 2]> {
    let d = backend.distribution(circuit, &[0])?;
    Ok([d[0], d[1]])
}

/// Ancilla bit distributions of the three circuits for one parameter
/// vector; terms that vanish identically (zero potential, `g = 0`) are
/// `None`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AncillaStats {
    pub kinetic: [f64; 2],
    pub potential: Option<[f64; 2]>,
    pub interaction: Option<[f64; 2]>,
}

/// Energy estimator for one problem, holding the compiled potential state.
#[derive(Clone, Debug)]
pub struct Qnpu {
    problem: GridProblem,
    v_hat: Option<Circuit>,
}

impl Qnpu {
    pub fn new(problem: &GridProblem) -> Result<Self> {
        Self::with_kappa(problem, DEFAULT_KAPPA)
    }

    /// `kappa` sets the bond dimension `2^κ` of the potential encoding. A
    /// zero potential needs no circuit.
    pub fn with_kappa(problem: &GridProblem, kappa: u32) -> Result<Self> {
        let v_hat = if problem.potential_norm() > 0.0 {
            Some(encode_potential(problem, kappa)?)
        } else {
            None
        };
        Ok(Qnpu {
            problem: problem.clone(),
            v_hat,
        })
    }

    pub fn problem(&self) -> &GridProblem {
        &self.problem
    }

    pub fn potential_state(&self) -> Option<&Circuit> {
        self.v_hat.as_ref()
    }

    fn check(&self, spec: &AnsatzSpec) -> Result<()> {
        if spec.n != self.problem.n() {
            return Err(Error::invalid(format!(
                "ansatz on {} qubits for a {}-qubit grid",
                spec.n,
                self.problem.n()
            )));
        }
        Ok(())
    }

    /// Runs the three circuits on `backend`.
    pub fn ancilla_stats(&self, spec: &AnsatzSpec, backend: &dyn Backend) -> Result<AncillaStats> {
        self.check(spec)?;
        let kinetic = ancilla_distribution(backend, &kinetic_circuit(spec)?)?;
        let potential = match &self.v_hat {
            Some(v) => Some(ancilla_distribution(backend, &potential_circuit(spec, v)?)?),
            None => None,
        };
        let interaction = if self.problem.g() != 0.0 {
            Some(ancilla_distribution(backend, &interaction_circuit(spec)?)?)
        } else {
            None
        };
        Ok(AncillaStats {
            kinetic,
            potential,
            interaction,
        })
    }

    /// Samples each circuit's ancilla (seeds derived from `seed`) and
    /// scales the values into energies.
    pub fn breakdown(&self, stats: &AncillaStats, shots: Shots, seed: u64) -> EnergyBreakdown {
        let raw_k = raw_from_distribution(stats.kinetic, shots, derive_seed(seed, &[0]));
        let raw_p = stats
            .potential
            .map_or(0.0, |d| raw_from_distribution(d, shots, derive_seed(seed, &[1])));
        let raw_i = stats
            .interaction
            .map_or(0.0, |d| raw_from_distribution(d, shots, derive_seed(seed, &[2])));
        let method = if shots.is_exact() {
            EnergyMethod::HadamardExact
        } else {
            EnergyMethod::HadamardShots
        };
        EnergyBreakdown::from_raw(&self.problem, raw_k, raw_p, raw_i, method, shots)
    }

    /// Runs the three circuits and estimates the energy.
    pub fn estimate(
        &self,
        spec: &AnsatzSpec,
        shots: Shots,
        seed: u64,
        backend: &dyn Backend,
    ) -> Result<EnergyBreakdown> {
        Ok(self.breakdown(&self.ancilla_stats(spec, backend)?, shots, seed))
    }
}

/// One-shot form of [`Qnpu::estimate`].
pub fn estimate_energy(
    problem: &GridProblem,
    spec: &AnsatzSpec,
    shots: Shots,
    seed: u64,
    backend: &dyn Backend,
) -> Result<EnergyBreakdown> {
    Qnpu::new(problem)?.estimate(spec, shots, seed, backend)
}
