//! Unitary synthesis: single-qubit Euler decompositions, controlled
//! single-qubit gates, and the quantum Shannon decomposition for anything
//! larger.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, C64, ONE, ZERO};
use crate::simulator::{Gate, GateKind};

const EPS: f64 = 1e-12;

/// `U = e^{iα} RZ(φ) RY(θ) RZ(λ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Zyz {
    pub alpha: f64,
    pub phi: f64,
    pub theta: f64,
    pub lambda: f64,
}

pub fn zyz(u: &CMatrix) -> Zyz {
    assert_eq!(u.shape(), (2, 2));
    let det = u[(0, 0)] * u[(1, 1)] - u[(0, 1)] * u[(1, 0)];
    let alpha = det.arg() / 2.0;
    let ph = C64::from_polar(1.0, -alpha);
    let v00 = u[(0, 0)] * ph;
    let v10 = u[(1, 0)] * ph;
    let v11 = u[(1, 1)] * ph;
    let theta = 2.0 * v10.norm().atan2(v00.norm());
    let (sum, diff) = if v00.norm() < 1e-10 {
        (0.0, 2.0 * v10.arg())
    } else if v10.norm() < 1e-10 {
        (2.0 * v11.arg(), 0.0)
    } else {
        (2.0 * v11.arg(), 2.0 * v10.arg())
    };
    Zyz {
        alpha,
        phi: (sum + diff) / 2.0,
        theta,
        lambda: (sum - diff) / 2.0,
    }
}

/// Reduces an angle modulo 4π into `(−2π, 2π]`.
fn wrap(t: f64) -> f64 {
    let mut t = t % (4.0 * PI);
    if t > 2.0 * PI {
        t -= 4.0 * PI;
    } else if t <= -2.0 * PI {
        t += 4.0 * PI;
    }
    t
}

/// True when `RZ(t)` is the identity up to global phase.
fn trivial_rz(t: f64) -> bool {
    let r = t.rem_euclid(2.0 * PI);
    r < 1e-11 || 2.0 * PI - r < 1e-11
}

fn push_rz(out: &mut Vec<Gate>, t: f64, q: usize) {
    if !trivial_rz(t) {
        out.push(Gate::new(GateKind::RZ(wrap(t)), vec![q]));
    }
}

/// Single-qubit unitary as RZ/SX/X gates (equal up to global phase).
pub fn one_qubit_basis(u: &CMatrix, q: usize) -> Vec<Gate> {
    let Zyz {
        phi, theta, lambda, ..
    } = zyz(u);
    let mut out = Vec::new();
    if theta.abs() < 1e-11 {
        push_rz(&mut out, phi + lambda, q);
    } else if (theta - FRAC_PI_2).abs() < 1e-11 {
        push_rz(&mut out, lambda - FRAC_PI_2, q);
        out.push(Gate::new(GateKind::SX, vec![q]));
        push_rz(&mut out, phi + FRAC_PI_2, q);
    } else if (theta - PI).abs() < 1e-11 {
        push_rz(&mut out, lambda - FRAC_PI_2, q);
        out.push(Gate::new(GateKind::X, vec![q]));
        push_rz(&mut out, phi + FRAC_PI_2, q);
    } else {
        push_rz(&mut out, lambda, q);
        out.push(Gate::new(GateKind::SX, vec![q]));
        push_rz(&mut out, theta + PI, q);
        out.push(Gate::new(GateKind::SX, vec![q]));
        push_rz(&mut out, phi + PI, q);
    }
    out
}

fn one_qubit_gate(m: CMatrix, q: usize) -> Gate {
    Gate::unitary(m, vec![q], "u")
}

fn rz_gate(t: f64, q: usize) -> Gate {
    Gate::new(GateKind::RZ(t), vec![q])
}

fn ry_gate(t: f64, q: usize) -> Gate {
    Gate::new(GateKind::RY(t), vec![q])
}

fn cx_gate(a: usize, b: usize) -> Gate {
    Gate::new(GateKind::CX, vec![a, b])
}

/// Controlled single-qubit `U` via `A·X·B·X·C` with a phase on the control.
pub fn controlled_one_qubit(u: &CMatrix, control: usize, target: usize) -> Vec<Gate> {
    let Zyz {
        alpha,
        phi,
        theta,
        lambda,
    } = zyz(u);
    let mut out = vec![
        rz_gate((lambda - phi) / 2.0, target),
        cx_gate(control, target),
        rz_gate(-(phi + lambda) / 2.0, target),
        ry_gate(-theta / 2.0, target),
        cx_gate(control, target),
        ry_gate(theta / 2.0, target),
        rz_gate(phi, target),
    ];
    if alpha.abs() > EPS {
        out.push(rz_gate(alpha, control));
    }
    out
}

/// Toffoli as H, CX and RZ(±π/4).
pub fn toffoli(c1: usize, c2: usize, t: usize) -> Vec<Gate> {
    let mut circ = crate::simulator::Circuit::new(c1.max(c2).max(t) + 1);
    crate::circuits::append_toffoli(&mut circ, c1, c2, t);
    circ.gates().to_vec()
}

/// Controlled phase as RZ and two CX.
pub fn cphase(theta: f64, control: usize, target: usize) -> Vec<Gate> {
    vec![
        rz_gate(theta / 2.0, control),
        cx_gate(control, target),
        rz_gate(-theta / 2.0, target),
        cx_gate(control, target),
        rz_gate(theta / 2.0, target),
    ]
}

pub fn swap(a: usize, b: usize) -> Vec<Gate> {
    vec![cx_gate(a, b), cx_gate(b, a), cx_gate(a, b)]
}

/// Gray code of `i`.
fn gray(i: usize) -> usize {
    i ^ (i >> 1)
}

/// Rotation on `target` whose angle is `angles[j]` when the `controls`
/// (first = most significant) hold value `j`, as alternating rotations
/// and CX gates.
pub fn multiplexed_rotation(
    axis_y: bool,
    angles: &[f64],
    controls: &[usize],
    target: usize,
) -> Vec<Gate> {
    let m = controls.len();
    assert_eq!(angles.len(), 1 << m);
    let rot = |t: f64| if axis_y { ry_gate(t, target) } else { rz_gate(t, target) };
    let spread = angles
        .iter()
        .fold(0.0f64, |acc, a| acc.max((a - angles[0]).abs()));
    if spread < EPS {
        return if angles[0].abs() < EPS {
            Vec::new()
        } else {
            vec![rot(angles[0])]
        };
    }
    let count = 1usize << m;
    // θ_i = 2^{−m} Σ_j (−1)^{popcount(j & g_i)} α_j
    let theta: Vec<f64> = (0..count)
        .map(|i| {
            let g = gray(i);
            angles
                .iter()
                .enumerate()
                .map(|(j, a)| if (j & g).count_ones().is_multiple_of(2) { *a } else { -*a })
                .sum::<f64>()
                / count as f64
        })
        .collect();
    let mut out = Vec::with_capacity(2 * count);
    for i in 0..count {
        if theta[i].abs() > EPS {
            out.push(rot(theta[i]));
        }
        let changed = gray(i) ^ gray((i + 1) % count);
        let bit = changed.trailing_zeros() as usize;
        out.push(cx_gate(controls[m - 1 - bit], target));
    }
    out
}

/// Orthonormal completion of the columns of `x` whose norm is above
/// `tol`; the other columns are replaced.
fn orthonormal_columns(mut x: CMatrix, keep: &[bool]) -> CMatrix {
    let dim = x.nrows();
    let mut basis: Vec<nalgebra::DVector<C64>> = Vec::new();
    for (j, &k) in keep.iter().enumerate() {
        if k {
            let mut v = x.column(j).into_owned();
            for b in &basis {
                let p = b.dotc(&v);
                v -= b * p;
            }
            let n = v.norm();
            v /= c(n, 0.0);
            x.set_column(j, &v);
            basis.push(v);
        }
    }
    let mut e = 0;
    for (j, &k) in keep.iter().enumerate() {
        if k {
            continue;
        }
        loop {
            let mut v = nalgebra::DVector::from_element(dim, ZERO);
            v[e] = ONE;
            e += 1;
            for _ in 0..2 {
                for b in &basis {
                    let p = b.dotc(&v);
                    v -= b * p;
                }
            }
            let n = v.norm();
            if n > 1e-6 {
                v /= c(n, 0.0);
                x.set_column(j, &v);
                basis.push(v);
                break;
            }
        }
    }
    x
}

/// Cosine–sine decomposition on the most significant qubit:
/// `U = diag(L0, L1) · [[C, −S], [S, C]] · diag(R0, R1)`.
struct Csd {
    l0: CMatrix,
    l1: CMatrix,
    r0: CMatrix,
    r1: CMatrix,
    theta: Vec<f64>,
}

fn csd(u: &CMatrix) -> Csd {
    let m = u.nrows() / 2;
    let u00 = u.view((0, 0), (m, m)).into_owned();
    let u01 = u.view((0, m), (m, m)).into_owned();
    let u10 = u.view((m, 0), (m, m)).into_owned();
    let u11 = u.view((m, m), (m, m)).into_owned();
    let svd = u00.svd(true, true);
    let l0 = svd.u.expect("u");
    let r0 = svd.v_t.expect("v_t");
    let cvals: Vec<f64> = svd.singular_values.iter().map(|s| s.min(1.0)).collect();
    let x = &u10 * r0.adjoint();
    let svals: Vec<f64> = (0..m).map(|j| x.column(j).norm()).collect();
    let keep: Vec<bool> = svals.iter().map(|&s| s > 1e-13).collect();
    let l1 = orthonormal_columns(x.clone(), &keep);
    let theta: Vec<f64> = (0..m)
        .map(|j| {
            let s = l1.column(j).dotc(&x.column(j)).re;
            s.atan2(cvals[j])
        })
        .collect();
    let sm = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(m, theta.iter().map(|&t| c(t.sin(), 0.0))));
    let cm = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(m, theta.iter().map(|&t| c(t.cos(), 0.0))));
    let r1 = &cm * l1.adjoint() * &u11 - &sm * l0.adjoint() * &u01;
    Csd {
        l0,
        l1,
        r0,
        r1,
        theta,
    }
}

/// `diag(A, B) = (I ⊗ V)(D ⊕ D†)(I ⊗ W)`; returns `(V, phases of D, W)`.
fn demultiplex(a: &CMatrix, b: &CMatrix) -> (CMatrix, Vec<f64>, CMatrix) {
    let prod = a * b.adjoint();
    let schur = prod.schur();
    let (v, t) = schur.unpack();
    let m = a.nrows();
    let phases: Vec<f64> = (0..m).map(|i| t[(i, i)].arg() / 2.0).collect();
    let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        m,
        phases.iter().map(|&p| C64::from_polar(1.0, p)),
    ));
    let w = d * v.adjoint() * b;
    (v, phases, w)
}

/// Quantum Shannon decomposition of `u` on `qubits` (first = most
/// significant) into single-qubit unitaries and CX.
pub fn shannon(u: &CMatrix, qubits: &[usize]) -> Result<Vec<Gate>> {
    let k = qubits.len();
    if u.nrows() != 1 << k || !u.is_square() {
        return Err(Error::invalid("matrix size does not match qubit count"));
    }
    let mut out = Vec::new();
    shannon_into(u, qubits, &mut out);
    Ok(out)
}

fn shannon_into(u: &CMatrix, qubits: &[usize], out: &mut Vec<Gate>) {
    if qubits.len() == 1 {
        out.push(one_qubit_gate(u.clone(), qubits[0]));
        return;
    }
    let head = qubits[0];
    let rest = &qubits[1..];
    let d = csd(u);
    // applied right to left: R, then CS, then L
    demultiplexed(&d.r0, &d.r1, head, rest, out);
    let ry: Vec<f64> = d.theta.iter().map(|t| 2.0 * t).collect();
    out.extend(multiplexed_rotation(true, &ry, rest, head));
    demultiplexed(&d.l0, &d.l1, head, rest, out);
}

fn demultiplexed(a: &CMatrix, b: &CMatrix, head: usize, rest: &[usize], out: &mut Vec<Gate>) {
    let diff = crate::linalg::max_abs_diff(a, b);
    if diff < 1e-12 {
        shannon_into(a, rest, out);
        return;
    }
    let (v, phases, w) = demultiplex(a, b);
    shannon_into(&w, rest, out);
    let rz: Vec<f64> = phases.iter().map(|p| -2.0 * p).collect();
    out.extend(multiplexed_rotation(false, &rz, rest, head));
    shannon_into(&v, rest, out);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::phase_invariant_distance;
    use crate::simulator::Circuit;
    use rand::{Rng, SeedableRng};

    fn circuit_of(width: usize, gates: &[Gate]) -> Circuit {
        let mut c = Circuit::new(width);
        for g in gates {
            c.push(g.clone()).unwrap();
        }
        c
    }

    /// Haar-ish random unitary from the QR of a complex Gaussian matrix.
    fn random_unitary(dim: usize, rng: &mut impl Rng) -> CMatrix {
        let m = CMatrix::from_fn(dim, dim, |_, _| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        m.qr().q()
    }

    #[test]
    fn zyz_reconstructs() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let u = random_unitary(2, &mut rng);
            let z = zyz(&u);
            let rebuilt = crate::simulator::gate::rz_matrix(z.phi)
                * crate::simulator::gate::ry_matrix(z.theta)
                * crate::simulator::gate::rz_matrix(z.lambda)
                * C64::from_polar(1.0, z.alpha);
            assert!(crate::linalg::max_abs_diff(&rebuilt, &u) < 1e-10);
        }
    }

    #[test]
    fn one_qubit_sequences_match() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let mut cases: Vec<CMatrix> = (0..100).map(|_| random_unitary(2, &mut rng)).collect();
        for k in [GateKind::H, GateKind::X, GateKind::SX, GateKind::RY(0.7), GateKind::RZ(0.3), GateKind::RY(PI)] {
            cases.push(k.matrix().unwrap());
        }
        cases.push(CMatrix::identity(2, 2));
        for u in cases {
            let gates = one_qubit_basis(&u, 0);
            let got = circuit_of(1, &gates).unitary().unwrap();
            assert!(phase_invariant_distance(&got, &u) < 1e-10, "{u}");
        }
        assert_eq!(one_qubit_basis(&GateKind::H.matrix().unwrap(), 0).len(), 3);
    }

    #[test]
    fn controlled_one_qubit_matches() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let u = random_unitary(2, &mut rng);
            let got = circuit_of(2, &controlled_one_qubit(&u, 0, 1)).unitary().unwrap();
            let want = Gate::unitary(u, vec![1], "u").controlled(0).full_matrix().unwrap();
            assert!(phase_invariant_distance(&got, &want) < 1e-10);
        }
    }

    #[test]
    fn cphase_and_swap_match() {
        let got = circuit_of(2, &cphase(0.77, 0, 1)).unitary().unwrap();
        assert!(phase_invariant_distance(&got, &GateKind::CPhase(0.77).matrix().unwrap()) < 1e-12);
        let got = circuit_of(2, &swap(0, 1)).unitary().unwrap();
        assert!(phase_invariant_distance(&got, &GateKind::Swap.matrix().unwrap()) < 1e-12);
    }

    #[test]
    fn multiplexed_rotations_match_block_diagonal() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for m in 1..=3 {
            for axis_y in [true, false] {
                let angles: Vec<f64> = (0..1 << m).map(|_| rng.random_range(-3.0..3.0)).collect();
                let controls: Vec<usize> = (1..=m).collect();
                let got = circuit_of(m + 1, &multiplexed_rotation(axis_y, &angles, &controls, 0))
                    .unitary()
                    .unwrap();
                let dim = 1 << (m + 1);
                let half = dim / 2;
                let mut want = CMatrix::zeros(dim, dim);
                for (j, &a) in angles.iter().enumerate() {
                    let r = if axis_y {
                        crate::simulator::gate::ry_matrix(a)
                    } else {
                        crate::simulator::gate::rz_matrix(a)
                    };
                    for x in 0..2 {
                        for y in 0..2 {
                            want[(x * half + j, y * half + j)] = r[(x, y)];
                        }
                    }
                }
                assert!(crate::linalg::max_abs_diff(&got, &want) < 1e-10);
            }
        }
    }

    #[test]
    fn shannon_reproduces_random_unitaries() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for k in 1..=4 {
            for _ in 0..5 {
                let u = random_unitary(1 << k, &mut rng);
                let qubits: Vec<usize> = (0..k).collect();
                let got = circuit_of(k, &shannon(&u, &qubits).unwrap()).unitary().unwrap();
                assert!(phase_invariant_distance(&got, &u) < 1e-9, "k={k}");
            }
        }
    }

    #[test]
    fn shannon_handles_controlled_and_permutation_matrices() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        let inner = random_unitary(4, &mut rng);
        let g = Gate::unitary(inner, vec![1, 2], "v").controlled(0);
        let full = g.full_matrix().unwrap();
        let got = circuit_of(3, &shannon(&full, &[0, 1, 2]).unwrap()).unitary().unwrap();
        assert!(phase_invariant_distance(&got, &full) < 1e-9);
        let ccx = GateKind::CCX.matrix().unwrap();
        let got = circuit_of(3, &shannon(&ccx, &[0, 1, 2]).unwrap()).unitary().unwrap();
        assert!(phase_invariant_distance(&got, &ccx) < 1e-9);
        let sw = GateKind::Swap.matrix().unwrap();
        let got = circuit_of(2, &shannon(&sw, &[1, 0]).unwrap()).unitary().unwrap();
        assert!(phase_invariant_distance(&got, &sw) < 1e-9);
    }
}
