use super::circuit::Circuit;
use super::gate::{Gate, GateKind};
use super::kernel::{apply_matrix, bit_of};
use super::sampling::BornState;
use super::statevector::StateVector;
use crate::error::{Error, Result};
use crate::linalg::{row_major, CMatrix, C64, ONE, ZERO};
use crate::noise::{Channel, NoiseModel};

/// Default qubit cap of the density-matrix engine (a 4096 × 4096 matrix).
pub const DENSITY_CAP: usize = 12;

/// Mixed state on `width` qubits.
///
/// Entries are stored row-major, which makes `ρ` a vector over `2·width`
/// qubits: row qubit `q` sits at position `q`, column qubit `q` at
/// `width + q`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    width: usize,
    data: Vec<C64>,
}

impl DensityMatrix {
    pub fn zero(width: usize) -> Result<Self> {
        Self::zero_with_cap(width, DENSITY_CAP)
    }

    fn zero_with_cap(width: usize, cap: usize) -> Result<Self> {
        if width > cap {
            return Err(Error::TooManyQubits {
                engine: "density matrix",
                width,
                cap,
            });
        }
        let mut data = vec![ZERO; 1 << (2 * width)];
        data[0] = ONE;
        Ok(DensityMatrix { width, data })
    }

    pub fn from_pure(state: &StateVector) -> Result<Self> {
        let width = state.width();
        if width > DENSITY_CAP {
            return Err(Error::TooManyQubits {
                engine: "density matrix",
                width,
                cap: DENSITY_CAP,
            });
        }
        let a = state.amplitudes();
        let mut data = Vec::with_capacity(a.len() * a.len());
        for x in a {
            for y in a {
                data.push(x * y.conj());
            }
        }
        Ok(DensityMatrix { width, data })
    }

    /// Wraps a dense matrix after checking the density-matrix invariants.
    pub fn from_matrix(m: &CMatrix) -> Result<Self> {
        if !m.is_square() || !m.nrows().is_power_of_two() {
            return Err(Error::invalid("density matrix must be square of power-of-two size"));
        }
        let rho = DensityMatrix {
            width: m.nrows().trailing_zeros() as usize,
            data: row_major(m),
        };
        rho.check_invariants()?;
        Ok(rho)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    fn dim(&self) -> usize {
        1 << self.width
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.dim() + col]
    }

    pub fn to_matrix(&self) -> CMatrix {
        CMatrix::from_row_slice(self.dim(), self.dim(), &self.data)
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.entry(i, i)).sum()
    }

    pub fn purity(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn fidelity_with_pure(&self, psi: &[C64]) -> Result<f64> {
        if psi.len() != self.dim() {
            return Err(Error::invalid("state and density matrix differ in width"));
        }
        let d = self.dim();
        let mut acc = ZERO;
        for (i, pi) in psi.iter().enumerate() {
            let row = &self.data[i * d..(i + 1) * d];
            let r: C64 = row.iter().zip(psi).map(|(x, y)| x * y).sum();
            acc += pi.conj() * r;
        }
        Ok(acc.re)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.to_matrix()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Hermitian and unit trace within 1e-9, smallest eigenvalue ≥ −1e-8.
    pub fn check_invariants(&self) -> Result<()> {
        let d = self.dim();
        let mut herm: f64 = 0.0;
        for i in 0..d {
            for j in 0..i {
                herm = herm.max((self.entry(i, j) - self.entry(j, i).conj()).norm());
            }
        }
        if herm > 1e-9 {
            return Err(Error::invalid(format!("density matrix not Hermitian ({herm:.3e})")));
        }
        let tr = self.trace();
        if (tr - ONE).norm() > 1e-9 {
            return Err(Error::invalid(format!("density matrix trace {tr}")));
        }
        let lmin = self.min_eigenvalue();
        if lmin < -1e-8 {
            return Err(Error::invalid(format!("density matrix eigenvalue {lmin:.3e}")));
        }
        Ok(())
    }

    pub fn expectation_z(&self, qubit: usize) -> Result<f64> {
        if qubit >= self.width {
            return Err(Error::QubitOutOfRange {
                qubit,
                width: self.width,
            });
        }
        let b = bit_of(self.width, qubit);
        Ok((0..self.dim())
            .map(|i| {
                let p = self.entry(i, i).re;
                if i & b == 0 {
                    p
                } else {
                    -p
                }
            })
            .sum())
    }

    fn check_qubits(&self, qubits: &[usize]) -> Result<()> {
        for (i, &q) in qubits.iter().enumerate() {
            if q >= self.width {
                return Err(Error::QubitOutOfRange {
                    qubit: q,
                    width: self.width,
                });
            }
            if qubits[..i].contains(&q) {
                return Err(Error::invalid(format!("qubit {q} repeated")));
            }
        }
        Ok(())
    }

    /// Applies a superoperator (bit order `[rows…, cols…]`) on `qubits`.
    fn apply_superop(&mut self, superop: &CMatrix, qubits: &[usize]) {
        let mut targets = qubits.to_vec();
        targets.extend(qubits.iter().map(|q| q + self.width));
        apply_matrix(&mut self.data, 2 * self.width, &targets, &[], &row_major(superop));
    }

    pub fn apply_channel(&mut self, channel: &Channel, qubits: &[usize]) -> Result<()> {
        self.check_qubits(qubits)?;
        if channel.arity() != qubits.len() {
            return Err(Error::invalid(format!(
                "{}-qubit channel applied to {} qubits",
                channel.arity(),
                qubits.len()
            )));
        }
        self.apply_superop(channel.superop(), qubits);
        Ok(())
    }

    /// Ideal gate action; MEASURE dephases, RESET resets to `|0⟩`.
    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.width)?;
        match gate.kind {
            GateKind::Measure => self.apply_superop(Channel::dephase().superop(), &gate.qubits),
            GateKind::Reset => self.apply_superop(Channel::reset().superop(), &gate.qubits),
            _ => {
                let (m, t, c) = gate.kernel_form().expect("unitary gate");
                apply_matrix(&mut self.data, 2 * self.width, &t, &c, &m);
                let conj: Vec<C64> = m.iter().map(|z| z.conj()).collect();
                let tc: Vec<usize> = t.iter().map(|q| q + self.width).collect();
                let cc: Vec<usize> = c.iter().map(|q| q + self.width).collect();
                apply_matrix(&mut self.data, 2 * self.width, &tc, &cc, &conj);
            }
        }
        Ok(())
    }
}

impl BornState for DensityMatrix {
    fn width(&self) -> usize {
        self.width
    }

    fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.entry(i, i).re.max(0.0)).collect()
    }
}

/// Superoperator of a gate followed by its noise, over `gate.support()`.
fn gate_superop(gate: &Gate, noise: Option<&NoiseModel>) -> Result<CMatrix> {
    let ideal = match gate.kind {
        GateKind::Measure => Channel::dephase().superop().clone(),
        GateKind::Reset => {
            let mut s = Channel::reset().superop().clone();
            if let Some(flip) = noise.and_then(|n| n.reset_channel()) {
                s = flip.superop() * s;
            }
            return Ok(s);
        }
        _ => {
            let u = gate.full_matrix().expect("unitary gate");
            u.kronecker(&u.map(|z| z.conj()))
        }
    };
    Ok(match noise.and_then(|n| n.gate_channel(gate)) {
        Some(ch) => ch.superop() * ideal,
        None => ideal,
    })
}

/// Density-matrix evolution of `|0…0⟩⟨0…0|` through `circuit`, each gate
/// followed by its channel from `noise`.
pub fn run_density(circuit: &Circuit, noise: Option<&NoiseModel>) -> Result<DensityMatrix> {
    run_density_with_cap(circuit, noise, DENSITY_CAP)
}

pub fn run_density_with_cap(
    circuit: &Circuit,
    noise: Option<&NoiseModel>,
    cap: usize,
) -> Result<DensityMatrix> {
    let width = circuit.width();
    let mut rho = DensityMatrix::zero_with_cap(width, cap)?;
    if let Some(flip) = noise.and_then(|n| n.reset_channel()) {
        for q in 0..width {
            rho.apply_channel(&flip, &[q])?;
        }
    }
    // Consecutive single-qubit operations on a qubit are fused into one
    // 4 × 4 superoperator before touching the state.
    let mut pending: Vec<Option<CMatrix>> = vec![None; width];
    let flush = |rho: &mut DensityMatrix, pending: &mut Vec<Option<CMatrix>>, q: usize| {
        if let Some(s) = pending[q].take() {
            rho.apply_superop(&s, &[q]);
        }
    };
    for gate in circuit.gates() {
        gate.validate(width)?;
        let support = gate.support();
        let s = gate_superop(gate, noise)?;
        if support.len() == 1 {
            let q = support[0];
            pending[q] = Some(match pending[q].take() {
                Some(prev) => s * prev,
                None => s,
            });
            continue;
        }
        for &q in &support {
            flush(&mut rho, &mut pending, q);
        }
        rho.apply_superop(&s, &support);
    }
    for q in 0..width {
        flush(&mut rho, &mut pending, q);
    }
    Ok(rho)
}
