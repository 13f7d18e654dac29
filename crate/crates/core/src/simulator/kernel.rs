//! In-place application of small dense matrices to amplitude vectors.

use crate::linalg::C64;

#[inline]
pub(crate) fn bit_of(nqubits: usize, q: usize) -> usize {
    1 << (nqubits - 1 - q)
}

/// Applies the row-major `2^k × 2^k` matrix `m` to `targets` (first target
/// is the most significant bit of the matrix index) on every basis state
/// whose `controls` are all set.
pub(crate) fn apply_matrix(
    amps: &mut [C64],
    nqubits: usize,
    targets: &[usize],
    controls: &[usize],
    m: &[C64],
) {
    debug_assert_eq!(amps.len(), 1 << nqubits);
    let k = targets.len();
    let dim = 1 << k;
    debug_assert_eq!(m.len(), dim * dim);
    let ctrl_mask: usize = controls.iter().map(|&q| bit_of(nqubits, q)).sum();
    let tgt_bits: Vec<usize> = targets.iter().map(|&q| bit_of(nqubits, q)).collect();
    let tgt_mask: usize = tgt_bits.iter().sum();
    let select = ctrl_mask | tgt_mask;

    if k == 1 {
        let b = tgt_bits[0];
        let (m00, m01, m10, m11) = (m[0], m[1], m[2], m[3]);
        for i in 0..amps.len() {
            if i & select != ctrl_mask {
                continue;
            }
            let a0 = amps[i];
            let a1 = amps[i | b];
            amps[i] = m00 * a0 + m01 * a1;
            amps[i | b] = m10 * a0 + m11 * a1;
        }
        return;
    }

    let offsets: Vec<usize> = (0..dim)
        .map(|j| {
            (0..k)
                .filter(|&t| j & (1 << (k - 1 - t)) != 0)
                .map(|t| tgt_bits[t])
                .sum()
        })
        .collect();
    let mut buf = vec![C64::new(0.0, 0.0); dim];
    for i in 0..amps.len() {
        if i & select != ctrl_mask {
            continue;
        }
        for (j, off) in offsets.iter().enumerate() {
            buf[j] = amps[i | off];
        }
        for (r, off) in offsets.iter().enumerate() {
            let row = &m[r * dim..(r + 1) * dim];
            amps[i | off] = row.iter().zip(&buf).map(|(x, y)| x * y).sum();
        }
    }
}
