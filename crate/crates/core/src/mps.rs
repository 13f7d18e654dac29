//! Matrix-product-state encoding of the sampled potential and its
//! compilation into a staircase of unitaries preparing `V/𝒩`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix};
use crate::problem::GridProblem;
use crate::simulator::{Circuit, Gate};

type RMatrix = DMatrix<f64>;

/// Singular values below this are treated as zero.
pub const SINGULAR_CUTOFF: f64 = 1e-14;
/// Isometry tolerance for the left-canonical check.
pub const CANONICAL_TOL: f64 = 1e-10;

/// Normalized real amplitudes over `n` binary indices; index bit `j`
/// (most significant first) is the physical index of site `j`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BinaryTensor {
    pub n: usize,
    data: Vec<f64>,
    norm: f64,
}

impl BinaryTensor {
    pub fn flatten(&self) -> &[f64] {
        &self.data
    }

    /// Norm of the input before normalization.
    pub fn input_norm(&self) -> f64 {
        self.norm
    }

    /// Entry at physical indices `(i_1, …, i_n)`.
    pub fn get(&self, indices: &[u8]) -> f64 {
        let k = indices.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
        self.data[k]
    }
}

/// `V / ‖V‖` viewed as an `n`-index binary tensor.
pub fn tensorize(values: &[f64]) -> Result<BinaryTensor> {
    if values.is_empty() || !values.len().is_power_of_two() || values.len() < 2 {
        return Err(Error::invalid("tensorize needs 2^n ≥ 2 samples"));
    }
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::invalid("cannot encode a zero vector"));
    }
    Ok(BinaryTensor {
        n: values.len().trailing_zeros() as usize,
        data: values.iter().map(|v| v / norm).collect(),
        norm,
    })
}

/// One site: `data[(a_left·2 + i)·right + a_right]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SiteTensor {
    pub left: usize,
    pub right: usize,
    pub data: Vec<f64>,
}

impl SiteTensor {
    /// The `(left·2) × right` matrix with rows `(a_left, i)`.
    pub fn matrix(&self) -> RMatrix {
        RMatrix::from_row_slice(2 * self.left, self.right, &self.data)
    }

    fn from_matrix(m: &RMatrix) -> Self {
        let (rows, right) = m.shape();
        let mut data = Vec::with_capacity(rows * right);
        for i in 0..rows {
            for j in 0..right {
                data.push(m[(i, j)]);
            }
        }
        SiteTensor {
            left: rows / 2,
            right,
            data,
        }
    }

    /// Largest entry of `MᵀM − I`.
    pub fn isometry_deviation(&self) -> f64 {
        let m = self.matrix();
        let g = m.transpose() * &m;
        (g - RMatrix::identity(self.right, self.right)).amax()
    }
}

/// Left-canonical MPS with bond cap `ν = 2^κ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Mps {
    pub kappa: u32,
    pub sites: Vec<SiteTensor>,
    /// Full singular-value spectrum at every bond, before truncation.
    pub spectra: Vec<Vec<f64>>,
    /// Root-sum-square of the discarded singular values.
    pub truncation_error: f64,
}

impl Mps {
    pub fn n(&self) -> usize {
        self.sites.len()
    }

    /// `r_1 … r_{n−1}`.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites[..self.sites.len() - 1].iter().map(|s| s.right).collect()
    }

    /// Contracted amplitudes over `2^n` basis states.
    pub fn contract(&self) -> Vec<f64> {
        // rows: physical prefix, columns: current bond
        let mut acc = RMatrix::from_element(1, 1, 1.0);
        for site in &self.sites {
            let m = site.matrix();
            let (p, l) = acc.shape();
            let mut next = RMatrix::zeros(p * 2, site.right);
            for row in 0..p {
                for i in 0..2 {
                    for r in 0..site.right {
                        let mut s = 0.0;
                        for a in 0..l {
                            s += acc[(row, a)] * m[(a * 2 + i, r)];
                        }
                        next[(row * 2 + i, r)] = s;
                    }
                }
            }
            acc = next;
        }
        acc.column(0).iter().copied().collect()
    }

    /// Every site except the last is an isometry within `tol`.
    pub fn is_left_canonical(&self, tol: f64) -> bool {
        self.sites[..self.sites.len() - 1]
            .iter()
            .all(|s| s.isometry_deviation() <= tol)
    }
}

/// Flips each column so its largest-magnitude entry is positive; the same
/// flip goes to the matching row of `vt`.
fn fix_signs(u: &mut RMatrix, vt: &mut RMatrix) {
    for k in 0..u.ncols() {
        let col = u.column(k);
        let (imax, _) = col
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |best, (i, &x)| if x.abs() > best.1 + 1e-12 { (i, x.abs()) } else { best });
        if col[imax] < 0.0 {
            u.column_mut(k).neg_mut();
            vt.row_mut(k).neg_mut();
        }
    }
}

/// Left-to-right truncated SVD sweep keeping at most `2^κ` singular values
/// per bond.
pub fn mps_decompose(tensor: &BinaryTensor, kappa: u32) -> Result<Mps> {
    if kappa == 0 {
        return Err(Error::invalid("κ must be at least 1"));
    }
    let n = tensor.n;
    let cap = 1usize << kappa.min(30);
    let mut sites = Vec::with_capacity(n);
    let mut spectra = Vec::with_capacity(n.saturating_sub(1));
    let mut discarded2 = 0.0;
    let mut left = 1usize;
    // remaining: (left·2) × 2^{n−j−1}
    let mut rest = RMatrix::from_row_slice(2, tensor.data.len() / 2, &tensor.data);
    for _ in 0..n - 1 {
        let svd = rest.clone().svd(true, true);
        let mut u = svd.u.expect("u requested");
        let mut vt = svd.v_t.expect("v_t requested");
        // nalgebra does not promise ordering
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
        u = RMatrix::from_fn(u.nrows(), order.len(), |r, k| u[(r, order[k])]);
        vt = RMatrix::from_fn(order.len(), vt.ncols(), |k, col| vt[(order[k], col)]);
        let rank = sv.iter().filter(|&&s| s > SINGULAR_CUTOFF).count().max(1);
        let keep = rank.min(cap);
        discarded2 += sv[keep..].iter().map(|s| s * s).sum::<f64>();
        spectra.push(sv.clone());
        let mut uk = u.columns(0, keep).into_owned();
        let mut vk = vt.rows(0, keep).into_owned();
        fix_signs(&mut uk, &mut vk);
        sites.push(SiteTensor::from_matrix(&uk));
        let carried = RMatrix::from_diagonal(&nalgebra::DVector::from_vec(sv[..keep].to_vec())) * vk;
        let cols = carried.ncols() / 2;
        // (keep × 2·cols) → (keep·2 × cols)
        rest = RMatrix::from_fn(keep * 2, cols, |r, col| carried[(r / 2, (r % 2) * cols + col)]);
        left = keep;
    }
    debug_assert_eq!(rest.shape(), (left * 2, 1));
    sites.push(SiteTensor::from_matrix(&rest));
    Ok(Mps {
        kappa,
        sites,
        spectra,
        truncation_error: discarded2.sqrt(),
    })
}

/// Extends the orthonormal columns of `m` to a full orthogonal matrix.
fn complete_orthonormal(m: &RMatrix) -> RMatrix {
    let dim = m.nrows();
    let mut cols: Vec<nalgebra::DVector<f64>> = m.column_iter().map(|c| c.into_owned()).collect();
    let mut e = 0;
    while cols.len() < dim {
        let mut v = nalgebra::DVector::zeros(dim);
        v[e] = 1.0;
        e += 1;
        for _ in 0..2 {
            for q in &cols {
                let p = q.dot(&v);
                v -= q * p;
            }
        }
        let nv = v.norm();
        if nv > 1e-8 {
            cols.push(v / nv);
        }
    }
    RMatrix::from_columns(&cols)
}

fn ceil_log2(x: usize) -> usize {
    x.next_power_of_two().trailing_zeros() as usize
}

/// A compiled block: a unitary on a contiguous qubit range.
#[derive(Clone, Debug, PartialEq)]
pub struct StaircaseBlock {
    pub first_qubit: usize,
    pub unitary: CMatrix,
}

/// Unitary blocks, in application order, preparing the MPS state from
/// `|0…0⟩` (site `j` on qubit `j − 1`).
pub fn staircase_blocks(mps: &Mps) -> Result<Vec<StaircaseBlock>> {
    if !mps.is_left_canonical(CANONICAL_TOL) {
        return Err(Error::invalid("MPS is not left-canonical"));
    }
    let n = mps.n();
    // pad bonds to powers of two: extra columns complete the isometry,
    // the next site gets zero rows for the new bond values
    let mut mats: Vec<RMatrix> = mps.sites.iter().map(|s| s.matrix()).collect();
    let last = mats[n - 1].norm();
    if last == 0.0 {
        return Err(Error::invalid("MPS has zero norm"));
    }
    mats[n - 1] /= last;
    let mut bits = vec![0usize; n + 1];
    for j in 0..n - 1 {
        let r = mats[j].ncols();
        let padded = 1 << ceil_log2(r);
        bits[j + 1] = ceil_log2(r);
        if padded > r {
            let full = complete_orthonormal(&mats[j]);
            mats[j] = full.columns(0, padded).into_owned();
            let next = &mats[j + 1];
            let mut grown = RMatrix::zeros(padded * 2, next.ncols());
            grown.rows_mut(0, next.nrows()).copy_from(next);
            mats[j + 1] = grown;
        }
    }
    // block j acts on qubits [j−1−b_{j−1}, j−1]; its first r'_j columns
    // are the padded site matrix
    let mut blocks: Vec<(usize, RMatrix)> = Vec::with_capacity(n);
    for j in 1..=n {
        let m = &mats[j - 1];
        let first = j - 1 - bits[j - 1];
        blocks.push((first, complete_orthonormal(m)));
    }
    // merge the rising prefix: block j−1 lives inside block j when the bond
    // grows by one qubit
    let mut merged: Vec<(usize, RMatrix)> = Vec::new();
    for (j, (first, u)) in blocks.into_iter().enumerate() {
        match merged.last_mut() {
            Some((pf, pu)) if *pf == first && pu.nrows() * 2 == u.nrows() => {
                let embedded = pu.kronecker(&RMatrix::identity(2, 2));
                *pu = embedded * u;
            }
            _ => merged.push((first, u)),
        }
        let _ = j;
    }
    // application order: last site first
    Ok(merged
        .into_iter()
        .rev()
        .map(|(first, u)| StaircaseBlock {
            first_qubit: first,
            unitary: u.map(|x| c(x, 0.0)),
        })
        .collect())
}

/// Circuit on `n` qubits whose `|0…0⟩` image equals the contracted MPS
/// (normalized).
pub fn mps_to_circuit(mps: &Mps) -> Result<Circuit> {
    let blocks = staircase_blocks(mps)?;
    let mut c = Circuit::named(mps.n(), "potential-encoder");
    for (i, b) in blocks.iter().enumerate() {
        let k = b.unitary.nrows().trailing_zeros() as usize;
        let qubits: Vec<usize> = (b.first_qubit..b.first_qubit + k).collect();
        c.push(Gate::unitary(b.unitary.clone(), qubits, format!("mps{i}")))?;
    }
    Ok(c)
}

/// `V̂` with `⟨k|V̂|0⟩ = V_k/𝒩`.
pub fn encode_potential(problem: &GridProblem, kappa: u32) -> Result<Circuit> {
    if problem.potential_norm() == 0.0 {
        return Err(Error::invalid("zero potential cannot be encoded"));
    }
    let t = tensorize(problem.potential())?;
    mps_to_circuit(&mps_decompose(&t, kappa)?)
}

/// Bond profile and errors of an encoding at one `κ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EncodingReport {
    pub kappa: u32,
    pub bond_dims: Vec<usize>,
    pub truncation_error: f64,
    pub reconstruction_error: f64,
    pub spectra: Vec<Vec<f64>>,
}

pub fn encoding_report(values: &[f64], kappa: u32) -> Result<EncodingReport> {
    let t = tensorize(values)?;
    let mps = mps_decompose(&t, kappa)?;
    let rec = mps.contract();
    let err = rec
        .iter()
        .zip(t.flatten())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(EncodingReport {
        kappa,
        bond_dims: mps.bond_dims(),
        truncation_error: mps.truncation_error,
        reconstruction_error: err,
        spectra: mps.spectra.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::is_unitary;
    use crate::simulator::run_statevector;
    use rand::{Rng, SeedableRng};

    fn l2(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    }

    fn quadratic(n: usize, v0: f64) -> Vec<f64> {
        GridProblem::unit_interval(n, v0, 1.0).unwrap().potential().to_vec()
    }

    #[test]
    fn tensorize_cases() {
        let t = tensorize(&[3.0; 8]).unwrap();
        assert!(t.flatten().iter().all(|&x| (x - 8f64.powf(-0.5)).abs() < 1e-15));
        let t = tensorize(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(t.get(&[0, 0]), 1.0);
        assert_eq!(t.get(&[1, 0]), 0.0);
        let v = quadratic(3, 1.0);
        let t = tensorize(&v).unwrap();
        let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        for (a, b) in t.flatten().iter().zip(&v) {
            assert!((a * nv - b).abs() < 1e-15);
        }
        assert_eq!(t.get(&[1, 1, 0]), t.flatten()[6]);
        assert!(tensorize(&[0.0; 4]).is_err());
        assert!(tensorize(&[1.0; 3]).is_err());
    }

    #[test]
    fn constant_function_has_unit_bonds() {
        let mps = mps_decompose(&tensorize(&[1.0; 16]).unwrap(), 2).unwrap();
        assert_eq!(mps.bond_dims(), vec![1, 1, 1]);
        let c = mps_to_circuit(&mps).unwrap();
        assert!(c.gates().iter().all(|g| g.qubits.len() == 1));
        assert_eq!(c.len(), 4);
    }

    /// Largest rank of any unfolding, by dense SVD.
    fn unfolding_ranks(v: &[f64]) -> Vec<usize> {
        let n = v.len().trailing_zeros() as usize;
        (1..n)
            .map(|j| {
                let m = RMatrix::from_row_slice(1 << j, v.len() >> j, v);
                m.singular_values().iter().filter(|&&s| s > 1e-12).count()
            })
            .collect()
    }

    #[test]
    fn quadratic_has_rank_at_most_three() {
        for n in 2..=6 {
            let ranks = unfolding_ranks(&quadratic(n, 2.5));
            assert!(ranks.iter().all(|&r| r <= 3), "{ranks:?}");
        }
    }

    #[test]
    fn quadratic_exact_at_nu_four() {
        for n in 2..=6 {
            let v = quadratic(n, 1.7);
            let t = tensorize(&v).unwrap();
            let mps = mps_decompose(&t, 2).unwrap();
            assert!(l2(&mps.contract(), t.flatten()) < 1e-12);
            assert!(mps.is_left_canonical(1e-10));
        }
    }

    #[test]
    fn random_tensor_full_rank_is_exact() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let v: Vec<f64> = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
        let t = tensorize(&v).unwrap();
        let mps = mps_decompose(&t, 3).unwrap();
        assert!(l2(&mps.contract(), t.flatten()) < 1e-12);
        assert_eq!(mps.truncation_error, 0.0);
    }

    #[test]
    fn truncation_error_is_discarded_weight() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        for n in 3..=6 {
            let v: Vec<f64> = (0..1 << n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let t = tensorize(&v).unwrap();
            let mut prev = f64::INFINITY;
            for kappa in 1..n as u32 {
                let mps = mps_decompose(&t, kappa).unwrap();
                let err = l2(&mps.contract(), t.flatten());
                assert!((err - mps.truncation_error).abs() < 1e-10);
                assert!(err <= prev + 1e-12);
                prev = err;
                assert!(mps.bond_dims().iter().all(|&r| r <= 1 << kappa));
            }
        }
    }

    #[test]
    fn kappa_one_on_quadratic_matches_svd_bound() {
        for n in [3, 5] {
            let r = encoding_report(&quadratic(n, 1.0), 1).unwrap();
            assert!((r.reconstruction_error - r.truncation_error).abs() < 1e-10);
        }
        assert!(encoding_report(&quadratic(5, 1.0), 1).unwrap().truncation_error > 1e-6);
    }

    #[test]
    fn circuit_amplitudes_match_normalized_potential() {
        for n in 2..=5 {
            let p = GridProblem::unit_interval(n, 1.0, 1.0).unwrap();
            let c = encode_potential(&p, 2).unwrap();
            let s = run_statevector(&c).unwrap();
            let norm = p.potential_norm();
            for (a, v) in s.amplitudes().iter().zip(p.potential()) {
                assert!((a.re - v / norm).abs() < 1e-9 && a.im.abs() < 1e-12);
            }
            for g in c.gates() {
                if let crate::simulator::GateKind::Unitary { matrix, .. } = &g.kind {
                    assert!(is_unitary(matrix, 1e-10));
                    assert!(g.qubits.len() <= 3);
                }
            }
        }
    }

    #[test]
    fn random_two_qubit_vector_uses_one_block() {
        let v = [0.3, -0.5, 0.7, 0.1];
        let mps = mps_decompose(&tensorize(&v).unwrap(), 1).unwrap();
        let c = mps_to_circuit(&mps).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.gates()[0].qubits, vec![0, 1]);
        let s = run_statevector(&c).unwrap();
        let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        for (a, x) in s.amplitudes().iter().zip(v) {
            assert!((a.re - x / nv).abs() < 1e-12);
        }
    }

    #[test]
    fn random_state_with_truncation_compiles_to_normalized_mps() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let v: Vec<f64> = (0..32).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mps = mps_decompose(&tensorize(&v).unwrap(), 1).unwrap();
        let target = mps.contract();
        let nt = target.iter().map(|x| x * x).sum::<f64>().sqrt();
        let s = run_statevector(&mps_to_circuit(&mps).unwrap()).unwrap();
        for (a, x) in s.amplitudes().iter().zip(&target) {
            assert!((a.re - x / nt).abs() < 1e-10);
        }
    }

    #[test]
    fn non_canonical_rejected() {
        let mut mps = mps_decompose(&tensorize(&quadratic(3, 1.0)).unwrap(), 2).unwrap();
        mps.sites[0].data[0] *= 2.0;
        assert!(mps_to_circuit(&mps).is_err());
    }

    #[test]
    fn zero_potential_rejected() {
        let p = GridProblem::unit_interval(3, 0.0, 1.0).unwrap();
        assert!(encode_potential(&p, 2).is_err());
    }
}
