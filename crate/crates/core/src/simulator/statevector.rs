use super::circuit::Circuit;
use super::gate::{Gate, GateKind};
use super::kernel::{apply_matrix, bit_of};
use super::sampling::BornState;
use crate::error::{Error, Result};
use crate::linalg::{inner, norm, C64, ONE, ZERO};

/// Default qubit cap of the statevector engine.
pub const STATEVECTOR_CAP: usize = 26;

/// Pure state on `width` qubits, qubit 0 the most significant index bit.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    width: usize,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn zero(width: usize) -> Result<Self> {
        Self::zero_with_cap(width, STATEVECTOR_CAP)
    }

    fn zero_with_cap(width: usize, cap: usize) -> Result<Self> {
        if width > cap {
            return Err(Error::TooManyQubits {
                engine: "statevector",
                width,
                cap,
            });
        }
        let mut amps = vec![ZERO; 1 << width];
        amps[0] = ONE;
        Ok(StateVector { width, amps })
    }

    /// Wraps amplitudes of unit norm (within 1e-9).
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        if amps.is_empty() || !amps.len().is_power_of_two() {
            return Err(Error::invalid("amplitude count must be a power of two"));
        }
        let nrm = norm(&amps);
        if (nrm - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("state norm {nrm} is not 1")));
        }
        Ok(StateVector {
            width: amps.len().trailing_zeros() as usize,
            amps,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amps)
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        if self.width != other.width {
            return Err(Error::invalid("fidelity between states of different width"));
        }
        Ok(inner(&self.amps, &other.amps).norm_sqr())
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.width)?;
        match gate.kind {
            GateKind::Measure => Err(Error::Unsupported(
                "mid-circuit measurement in the statevector engine".into(),
            )),
            GateKind::Reset => Err(Error::Unsupported(
                "reset in the statevector engine".into(),
            )),
            _ => {
                let (m, t, c) = gate.kernel_form().expect("unitary gate");
                apply_matrix(&mut self.amps, self.width, &t, &c, &m);
                Ok(())
            }
        }
    }

    /// Applies a measurement-free circuit of the same width.
    pub fn evolve(&mut self, circuit: &Circuit) -> Result<()> {
        if circuit.width() != self.width {
            return Err(Error::invalid(format!(
                "circuit width {} does not match state width {}",
                circuit.width(),
                self.width
            )));
        }
        if !circuit.measurements_terminal() {
            return Err(Error::Unsupported(
                "statevector engine only supports terminal measurements".into(),
            ));
        }
        for g in circuit.gates() {
            if g.kind == GateKind::Measure {
                continue;
            }
            self.apply_gate(g)?;
        }
        Ok(())
    }

    /// `⟨Z⟩` of one qubit.
    pub fn expectation_z(&self, qubit: usize) -> Result<f64> {
        if qubit >= self.width {
            return Err(Error::QubitOutOfRange {
                qubit,
                width: self.width,
            });
        }
        let b = bit_of(self.width, qubit);
        Ok(self
            .amps
            .iter()
            .enumerate()
            .map(|(i, a)| if i & b == 0 { a.norm_sqr() } else { -a.norm_sqr() })
            .sum())
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }
}

impl BornState for StateVector {
    fn width(&self) -> usize {
        self.width
    }

    fn diagonal(&self) -> Vec<f64> {
        self.probabilities()
    }
}

/// `U_circuit |0…0⟩`; terminal measurements are ignored.
pub fn run_statevector(circuit: &Circuit) -> Result<StateVector> {
    run_statevector_with_cap(circuit, STATEVECTOR_CAP)
}

pub fn run_statevector_with_cap(circuit: &Circuit, cap: usize) -> Result<StateVector> {
    let mut sv = StateVector::zero_with_cap(circuit.width(), cap)?;
    sv.evolve(circuit)?;
    Ok(sv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{kron, CMatrix};
    use rand::{Rng, SeedableRng};
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn hadamard_on_one_qubit() {
        let mut c = Circuit::new(1);
        c.h(0);
        let s = run_statevector(&c).unwrap();
        assert!((s.amplitudes()[0].re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((s.amplitudes()[1].re - FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn bell_state() {
        let mut c = Circuit::new(2);
        c.h(0).cx(0, 1);
        let s = run_statevector(&c).unwrap();
        let a = s.amplitudes();
        assert!((a[0].re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((a[3].re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(a[1].norm() < 1e-15 && a[2].norm() < 1e-15);
    }

    #[test]
    fn expectation_z_of_basis_and_plus() {
        let mut c = Circuit::new(1);
        assert_eq!(run_statevector(&c).unwrap().expectation_z(0).unwrap(), 1.0);
        c.x(0);
        assert_eq!(run_statevector(&c).unwrap().expectation_z(0).unwrap(), -1.0);
        let mut c = Circuit::new(1);
        c.h(0);
        assert!(run_statevector(&c).unwrap().expectation_z(0).unwrap().abs() < 1e-15);
        assert!(run_statevector(&c).unwrap().expectation_z(1).is_err());
    }

    /// Matrix of `gate` on `width` qubits built from Kronecker products and
    /// explicit controlled blocks, independent of the kernel.
    fn kron_oracle(width: usize, gate: &Gate) -> CMatrix {
        let support = gate.support();
        let local = gate.full_matrix().unwrap();
        let k = support.len();
        let dim = 1 << width;
        let mut out = CMatrix::zeros(dim, dim);
        for col in 0..dim {
            for row in 0..dim {
                let rest_mask: usize = (0..width)
                    .filter(|q| !support.contains(q))
                    .map(|q| 1 << (width - 1 - q))
                    .sum();
                if row & rest_mask != col & rest_mask {
                    continue;
                }
                let local_idx = |i: usize| {
                    (0..k).fold(0, |acc, t| {
                        (acc << 1) | ((i >> (width - 1 - support[t])) & 1)
                    })
                };
                out[(row, col)] = local[(local_idx(row), local_idx(col))];
            }
        }
        out
    }

    #[test]
    fn random_circuit_matches_kronecker_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let mut c = Circuit::new(3);
            for _ in 0..5 {
                let q: Vec<usize> = {
                    let mut v = vec![0, 1, 2];
                    for i in (1..3).rev() {
                        v.swap(i, rng.random_range(0..=i));
                    }
                    v
                };
                let t = rng.random_range(-3.0..3.0);
                match rng.random_range(0..8) {
                    0 => c.h(q[0]),
                    1 => c.sx(q[0]),
                    2 => c.ry(t, q[0]),
                    3 => c.rz(t, q[0]),
                    4 => c.cx(q[0], q[1]),
                    5 => c.cphase(t, q[0], q[1]),
                    6 => c.swap(q[0], q[1]),
                    _ => c.ccx(q[0], q[1], q[2]),
                };
            }
            let mut u = CMatrix::identity(8, 8);
            for g in c.gates() {
                u = kron_oracle(3, g) * u;
            }
            let s = run_statevector(&c).unwrap();
            for i in 0..8 {
                assert!((s.amplitudes()[i] - u[(i, 0)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn kron_oracle_agrees_on_simple_product() {
        let g = Gate::new(GateKind::H, vec![1]);
        let h = GateKind::H.matrix().unwrap();
        let id = CMatrix::identity(2, 2);
        let expected = kron(&kron(&id, &h), &id);
        assert!(crate::linalg::max_abs_diff(&kron_oracle(3, &g), &expected) < 1e-15);
    }

    #[test]
    fn norm_preserved_over_long_circuit() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let mut c = Circuit::new(6);
        for _ in 0..2000 {
            let a = rng.random_range(0..6);
            let b = (a + rng.random_range(1..6)) % 6;
            match rng.random_range(0..4) {
                0 => c.ry(rng.random_range(-3.0..3.0), a),
                1 => c.rz(rng.random_range(-3.0..3.0), a),
                2 => c.h(a),
                _ => c.cx(a, b),
            };
        }
        assert!((run_statevector(&c).unwrap().norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn cap_and_reset_are_enforced() {
        assert!(run_statevector_with_cap(&Circuit::new(5), 4).is_err());
        let mut c = Circuit::new(1);
        c.reset(0);
        assert!(run_statevector(&c).is_err());
        let mut c = Circuit::new(1);
        c.measure(0).h(0);
        assert!(run_statevector(&c).is_err());
    }
}
