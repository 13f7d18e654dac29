//! Small dense complex linear-algebra helpers shared by the simulators,
//! the synthesis passes and the tests.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Build a square matrix from row-major entries.
pub fn from_rows(dim: usize, rows: &[C64]) -> CMatrix {
    assert_eq!(rows.len(), dim * dim);
    CMatrix::from_row_slice(dim, dim, rows)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn dagger(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

/// Kronecker product `a ⊗ b`; `a` owns the most significant index bits.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Largest absolute entry of `m†m − I`.
pub fn unitarity_deviation(m: &CMatrix) -> f64 {
    let prod = m.adjoint() * m;
    max_abs_diff(&prod, &identity(m.nrows()))
}

pub fn is_unitary(m: &CMatrix, tol: f64) -> bool {
    m.is_square() && unitarity_deviation(m) <= tol
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Distance between two matrices after removing the best global phase.
pub fn phase_invariant_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    let overlap: C64 = a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum();
    let phase = if overlap.norm() > 1e-300 {
        overlap / overlap.norm()
    } else {
        ONE
    };
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x * phase - y).norm())
        .fold(0.0, f64::max)
}

/// Row-major copy of the entries, the layout used by the simulation kernels.
pub fn row_major(m: &CMatrix) -> Vec<C64> {
    let (r, cols) = m.shape();
    let mut out = Vec::with_capacity(r * cols);
    for i in 0..r {
        for j in 0..cols {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// Vector 2-norm of a complex slice.
pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// `⟨a|b⟩`.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Permutation matrix sending basis state `j` to `perm(j)`.
pub fn permutation_matrix(dim: usize, perm: impl Fn(usize) -> usize) -> CMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    for j in 0..dim {
        m[(perm(j), j)] = ONE;
    }
    m
}
