//! Quantum channels stored as superoperators.
//!
//! A channel on `k` qubits is the `4^k × 4^k` matrix `S = Σ K ⊗ K̄` acting on
//! the row-major vectorization of `ρ`, so its index bits are ordered
//! `[row qubits…, column qubits…]`.

use crate::error::{Error, Result};
use crate::linalg::{c, from_rows, CMatrix, C64, ONE, ZERO};
use crate::simulator::gate::{pauli_y, pauli_z, GateKind};

/// Kraus completeness tolerance used by every constructor.
pub const CPTP_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    arity: usize,
    superop: CMatrix,
}

impl Channel {
    pub fn identity(arity: usize) -> Self {
        let d = 1 << (2 * arity);
        Channel {
            arity,
            superop: CMatrix::identity(d, d),
        }
    }

    /// Builds `Σ K ⊗ K̄` after checking `Σ K†K = I`.
    pub fn from_kraus(kraus: &[CMatrix]) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::invalid("empty Kraus set"))?;
        let d = first.nrows();
        if !d.is_power_of_two() || d < 2 {
            return Err(Error::invalid(format!("Kraus dimension {d}")));
        }
        if kraus.iter().any(|k| k.shape() != (d, d)) {
            return Err(Error::invalid("Kraus operators of mixed shapes"));
        }
        let deviation = kraus_completeness_deviation(kraus);
        if deviation > CPTP_TOL {
            return Err(Error::NotCptp { deviation });
        }
        let mut superop = CMatrix::zeros(d * d, d * d);
        for k in kraus {
            superop += k.kronecker(&k.map(|z| z.conj()));
        }
        Ok(Channel {
            arity: d.trailing_zeros() as usize,
            superop,
        })
    }

    pub fn from_unitary(u: &CMatrix) -> Result<Self> {
        Self::from_kraus(std::slice::from_ref(u))
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn superop(&self) -> &CMatrix {
        &self.superop
    }

    /// `other ∘ self`: apply `self` first.
    pub fn then(&self, other: &Channel) -> Result<Channel> {
        if self.arity != other.arity {
            return Err(Error::invalid("composing channels of different arity"));
        }
        Ok(Channel {
            arity: self.arity,
            superop: &other.superop * &self.superop,
        })
    }

    /// `self ⊗ other`, `self` on the leading qubits.
    pub fn tensor(&self, other: &Channel) -> Channel {
        let (ka, kb) = (self.arity, other.arity);
        let raw = self.superop.kronecker(&other.superop);
        // raw bit order: [ra, ca, rb, cb]; wanted: [ra, rb, ca, cb]
        let total = 2 * (ka + kb);
        let dim = 1 << total;
        let field = |idx: usize, start: usize, len: usize| (idx >> (total - start - len)) & ((1 << len) - 1);
        let remap = |old: usize| {
            let ra = field(old, 0, ka);
            let ca = field(old, ka, ka);
            let rb = field(old, 2 * ka, kb);
            let cb = field(old, 2 * ka + kb, kb);
            (((((ra << kb) | rb) << ka) | ca) << kb) | cb
        };
        let mut superop = CMatrix::zeros(dim, dim);
        for i in 0..dim {
            let ni = remap(i);
            for j in 0..dim {
                let v = raw[(i, j)];
                if v != ZERO {
                    superop[(ni, remap(j))] = v;
                }
            }
        }
        Channel {
            arity: ka + kb,
            superop,
        }
    }

    /// Choi matrix `J = Σ_ij |i⟩⟨j| ⊗ E(|i⟩⟨j|)` (input index major).
    pub fn choi(&self) -> CMatrix {
        let d = 1 << self.arity;
        let mut j = CMatrix::zeros(d * d, d * d);
        for i in 0..d {
            for jj in 0..d {
                for a in 0..d {
                    for b in 0..d {
                        j[(i * d + a, jj * d + b)] = self.superop[(a * d + b, i * d + jj)];
                    }
                }
            }
        }
        j
    }

    /// Canonical Kraus operators recovered from the Choi spectrum.
    pub fn kraus_operators(&self) -> Vec<CMatrix> {
        let d = 1 << self.arity;
        let eig = self.choi().symmetric_eigen();
        let mut out = Vec::new();
        for (idx, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda <= 1e-14 {
                continue;
            }
            let v = eig.eigenvectors.column(idx);
            let s = lambda.sqrt();
            let mut k = CMatrix::zeros(d, d);
            for i in 0..d {
                for a in 0..d {
                    k[(a, i)] = v[i * d + a] * s;
                }
            }
            out.push(k);
        }
        out
    }

    /// Largest deviation from trace preservation, `max |Tr_out S − I|`.
    pub fn trace_deviation(&self) -> f64 {
        let d = 1 << self.arity;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let mut t = ZERO;
                for a in 0..d {
                    t += self.superop[(a * d + a, i * d + j)];
                }
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((t - target).norm());
            }
        }
        worst
    }

    pub fn min_choi_eigenvalue(&self) -> f64 {
        self.choi()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Fails unless the channel is trace preserving and completely positive.
    pub fn check_cptp(&self, tol: f64) -> Result<()> {
        let deviation = self.trace_deviation().max(-self.min_choi_eigenvalue());
        if deviation > tol {
            return Err(Error::NotCptp { deviation });
        }
        Ok(())
    }

    /// `E(ρ)` for a dense density matrix.
    pub fn apply_dense(&self, rho: &CMatrix) -> CMatrix {
        let d = rho.nrows();
        let v = crate::linalg::row_major(rho);
        let out = &self.superop * nalgebra::DVector::from_vec(v);
        CMatrix::from_row_slice(d, d, out.as_slice())
    }

    /// Process fidelity `|Tr U†K|²/d²` summed over Kraus operators.
    pub fn process_fidelity(&self, target: &CMatrix) -> f64 {
        let d = target.nrows() as f64;
        let su = target.kronecker(&target.map(|z| z.conj()));
        let t: C64 = su
            .iter()
            .zip(self.superop.iter())
            .map(|(a, b)| a.conj() * b)
            .sum();
        t.re / (d * d)
    }

    /// Average gate fidelity with respect to `target`.
    pub fn average_gate_fidelity(&self, target: &CMatrix) -> f64 {
        let d = target.nrows() as f64;
        (d * self.process_fidelity(target) + 1.0) / (d + 1.0)
    }

    pub fn amplitude_damping(gamma: f64) -> Result<Self> {
        check_probability("gamma", gamma)?;
        Self::from_kraus(&[
            from_rows(2, &[ONE, ZERO, ZERO, c((1.0 - gamma).sqrt(), 0.0)]),
            from_rows(2, &[ZERO, c(gamma.sqrt(), 0.0), ZERO, ZERO]),
        ])
    }

    pub fn phase_damping(lambda: f64) -> Result<Self> {
        check_probability("lambda", lambda)?;
        Self::from_kraus(&[
            from_rows(2, &[ONE, ZERO, ZERO, c((1.0 - lambda).sqrt(), 0.0)]),
            from_rows(2, &[ZERO, ZERO, ZERO, c(lambda.sqrt(), 0.0)]),
        ])
    }

    /// Amplitude damping `γ = 1 − e^{−τ/T1}` followed by pure dephasing with
    /// `1/Tφ = 1/T2 − 1/(2T1)`. Times share one unit.
    pub fn thermal_relaxation(t1: f64, t2: f64, tau: f64) -> Result<Self> {
        if !(t1 > 0.0) || !(t2 > 0.0) {
            return Err(Error::invalid(format!("T1={t1}, T2={t2} must be positive")));
        }
        if t2 > 2.0 * t1 * (1.0 + 1e-12) {
            return Err(Error::invalid(format!("T2={t2} exceeds 2·T1={}", 2.0 * t1)));
        }
        if !(tau >= 0.0) {
            return Err(Error::invalid(format!("duration {tau} is negative")));
        }
        let gamma = -(-tau / t1).exp_m1();
        let rate_phi = (1.0 / t2 - 0.5 / t1).max(0.0);
        let lambda = -(-2.0 * tau * rate_phi).exp_m1();
        Self::amplitude_damping(gamma)?.then(&Self::phase_damping(lambda)?)
    }

    /// `ρ → (1−p)ρ + p·Tr(ρ)·I/d` on `arity` qubits, `0 ≤ p ≤ d²/(d²−1)`.
    pub fn depolarizing(p: f64, arity: usize) -> Result<Self> {
        let d = (1usize << arity) as f64;
        let pmax = d * d / (d * d - 1.0);
        if !(0.0..=pmax + 1e-12).contains(&p) {
            return Err(Error::invalid(format!(
                "depolarizing parameter {p} outside [0, {pmax}]"
            )));
        }
        let paulis = pauli_strings(arity);
        let n = paulis.len() as f64;
        let kraus: Vec<CMatrix> = paulis
            .into_iter()
            .enumerate()
            .map(|(i, pm)| {
                let w = if i == 0 { 1.0 - p + p / n } else { p / n };
                pm * c(w.max(0.0).sqrt(), 0.0)
            })
            .collect();
        Self::from_kraus(&kraus)
    }

    /// Flips the qubit with probability `p`.
    pub fn bit_flip(p: f64) -> Result<Self> {
        check_probability("p", p)?;
        let x = GateKind::X.matrix().unwrap();
        Self::from_kraus(&[
            CMatrix::identity(2, 2) * c((1.0 - p).sqrt(), 0.0),
            x * c(p.sqrt(), 0.0),
        ])
    }

    /// Unconditional reset to `|0⟩`.
    pub fn reset() -> Self {
        Self::amplitude_damping(1.0)
            .expect("valid")
            .then(&Self::dephase())
            .expect("same arity")
    }

    /// Removes all coherences in the computational basis.
    pub fn dephase() -> Self {
        Self::phase_damping(1.0).expect("valid")
    }
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("{name}={p} outside [0, 1]")));
    }
    Ok(())
}

/// `Σ K†K − I`, largest absolute entry.
pub fn kraus_completeness_deviation(kraus: &[CMatrix]) -> f64 {
    let d = kraus[0].nrows();
    let mut sum = CMatrix::zeros(d, d);
    for k in kraus {
        sum += k.adjoint() * k;
    }
    crate::linalg::max_abs_diff(&sum, &CMatrix::identity(d, d))
}

/// All `4^k` Pauli strings, identity first.
fn pauli_strings(arity: usize) -> Vec<CMatrix> {
    let single = [
        CMatrix::identity(2, 2),
        GateKind::X.matrix().unwrap(),
        pauli_y(),
        pauli_z(),
    ];
    let mut out = vec![CMatrix::identity(1, 1)];
    for _ in 0..arity {
        out = out
            .iter()
            .flat_map(|p| single.iter().map(move |s| p.kronecker(s)))
            .collect();
    }
    out
}
