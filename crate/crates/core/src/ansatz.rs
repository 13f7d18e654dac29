//! Parameterized trial-state circuits.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{WaveVector, SIM_NORM_TOL};
use crate::simulator::{run_statevector, Circuit, Gate, GateKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnsatzKind {
    /// `l` layers of an RY column plus an ascending CX chain, then a final
    /// RY column.
    RealAmplitude,
    /// One H followed by one RY per qubit.
    HadamardRy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnsatzSpec {
    pub kind: AnsatzKind,
    pub n: usize,
    /// Layer count; ignored by `hadamard_ry`.
    #[serde(default)]
    pub layers: usize,
    pub theta: Vec<f64>,
}

impl AnsatzSpec {
    pub fn new(kind: AnsatzKind, n: usize, layers: usize, theta: Vec<f64>) -> Result<Self> {
        let spec = AnsatzSpec {
            kind,
            n,
            layers,
            theta,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn real_amplitude(n: usize, layers: usize, theta: Vec<f64>) -> Result<Self> {
        Self::new(AnsatzKind::RealAmplitude, n, layers, theta)
    }

    pub fn hadamard_ry(n: usize, theta: Vec<f64>) -> Result<Self> {
        Self::new(AnsatzKind::HadamardRy, n, 0, theta)
    }

    /// `n(l+1)` for the layered ansatz, `n` for `hadamard_ry`.
    pub fn parameter_count(kind: AnsatzKind, n: usize, layers: usize) -> usize {
        match kind {
            AnsatzKind::RealAmplitude => n * (layers + 1),
            AnsatzKind::HadamardRy => n,
        }
    }

    /// Same structure, new parameters.
    pub fn with_theta(&self, theta: Vec<f64>) -> Result<Self> {
        Self::new(self.kind, self.n, self.layers, theta)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("ansatz needs at least one qubit"));
        }
        let want = Self::parameter_count(self.kind, self.n, self.layers);
        if self.theta.len() != want {
            return Err(Error::invalid(format!(
                "{:?} ansatz with n={} l={} takes {want} parameters, got {}",
                self.kind,
                self.n,
                self.layers,
                self.theta.len()
            )));
        }
        if self.theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("ansatz parameters must be finite"));
        }
        Ok(())
    }

    /// Appends the ansatz on `qubits` (length `n`), optionally conditioned
    /// on `control`.
    pub fn append_to(&self, c: &mut Circuit, qubits: &[usize], control: Option<usize>) -> Result<()> {
        self.validate()?;
        if qubits.len() != self.n {
            return Err(Error::invalid(format!(
                "ansatz on {} qubits placed on a {}-qubit register",
                self.n,
                qubits.len()
            )));
        }
        let body = self.build()?;
        let body = match control {
            Some(ctl) => {
                let map: Vec<usize> = qubits.to_vec();
                let mut placed = Circuit::new(c.width());
                placed.append_mapped(&body, &map)?;
                placed.controlled(ctl)?
            }
            None => {
                let mut placed = Circuit::new(c.width());
                placed.append_mapped(&body, qubits)?;
                placed
            }
        };
        c.append_at(&body, 0)
    }

    /// Controlled ansatz for a register known to be in `|0…0⟩`: only the
    /// rotations carry the control, since the entanglers act trivially on
    /// the untouched register. Equal to the fully controlled ansatz on that
    /// input.
    pub fn append_controlled_on_zero(&self, c: &mut Circuit, qubits: &[usize], control: usize) -> Result<()> {
        self.validate()?;
        if qubits.len() != self.n {
            return Err(Error::invalid(format!(
                "ansatz on {} qubits placed on a {}-qubit register",
                self.n,
                qubits.len()
            )));
        }
        if qubits.contains(&control) {
            return Err(Error::invalid("control inside the ansatz register"));
        }
        let n = self.n;
        match self.kind {
            AnsatzKind::RealAmplitude => {
                for layer in 0..=self.layers {
                    for q in 0..n {
                        c.push(Gate::new(GateKind::RY(self.theta[layer * n + q]), vec![qubits[q]]).controlled(control))?;
                    }
                    if layer < self.layers {
                        for q in 0..n - 1 {
                            c.cx(qubits[q], qubits[q + 1]);
                        }
                    }
                }
            }
            AnsatzKind::HadamardRy => {
                for q in 0..n {
                    let m = GateKind::RY(self.theta[q]).matrix().expect("fixed gate") * GateKind::H.matrix().expect("fixed gate");
                    c.push(Gate::unitary(m, vec![qubits[q]], "ry·h").controlled(control))?;
                }
            }
        }
        Ok(())
    }

    /// The trial-state circuit on qubits `0..n`.
    pub fn build(&self) -> Result<Circuit> {
        self.validate()?;
        let n = self.n;
        let mut c = Circuit::named(n, format!("{:?}", self.kind).to_lowercase());
        match self.kind {
            AnsatzKind::RealAmplitude => {
                for layer in 0..self.layers {
                    for q in 0..n {
                        c.ry(self.theta[layer * n + q], q);
                    }
                    for q in 0..n - 1 {
                        c.cx(q, q + 1);
                    }
                }
                for q in 0..n {
                    c.ry(self.theta[self.layers * n + q], q);
                }
            }
            AnsatzKind::HadamardRy => {
                for q in 0..n {
                    c.h(q).ry(self.theta[q], q);
                }
            }
        }
        Ok(c)
    }

    /// Grid amplitudes prepared by the ansatz.
    pub fn state_of(&self) -> Result<WaveVector> {
        let sv = run_statevector(&self.build()?)?;
        WaveVector::new(sv.into_amplitudes(), SIM_NORM_TOL)
    }
}

/// Parameters drawn uniformly from `[−π, π]`.
pub fn random_theta(count: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..count).map(|_| rng.random_range(-PI..=PI)).collect()
}
