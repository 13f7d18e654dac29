use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use super::kernel::bit_of;
use crate::error::{Error, Result};

/// States with a computational-basis Born distribution.
pub trait BornState {
    fn width(&self) -> usize;

    /// Probabilities of all `2^width` basis states.
    fn diagonal(&self) -> Vec<f64>;

    /// Marginal distribution of `qubits`; the first listed qubit is the
    /// most significant bit of the outcome index.
    fn marginal(&self, qubits: &[usize]) -> Result<Vec<f64>> {
        let width = self.width();
        check_qubits(qubits, width)?;
        let m = qubits.len();
        let mut out = vec![0.0; 1 << m];
        for (i, p) in self.diagonal().into_iter().enumerate() {
            let mut j = 0;
            for &q in qubits {
                j = (j << 1) | usize::from(i & bit_of(width, q) != 0);
            }
            out[j] += p;
        }
        let total: f64 = out.iter().sum();
        if total > 0.0 {
            out.iter_mut().for_each(|p| *p /= total);
        }
        debug_assert!(m <= width);
        Ok(out)
    }
}

fn check_qubits(qubits: &[usize], width: usize) -> Result<()> {
    for (i, &q) in qubits.iter().enumerate() {
        if q >= width {
            return Err(Error::QubitOutOfRange { qubit: q, width });
        }
        if qubits[..i].contains(&q) {
            return Err(Error::invalid(format!("qubit {q} sampled twice")));
        }
    }
    Ok(())
}

/// Per-qubit readout errors: `p01` is the probability of reading 0 when the
/// qubit was prepared in `|1⟩`, `p10` of reading 1 from `|0⟩`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub p01: f64,
    pub p10: f64,
}

impl ConfusionMatrix {
    pub fn new(p01: f64, p10: f64) -> Result<Self> {
        for (name, p) in [("p01", p01), ("p10", p10)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!("{name}={p} outside [0, 1]")));
            }
        }
        Ok(ConfusionMatrix { p01, p10 })
    }

    pub fn ideal() -> Self {
        ConfusionMatrix::default()
    }
}

/// Folds readout errors into an outcome distribution over `confusion.len()`
/// bits (first entry ↔ most significant bit).
pub fn apply_readout(dist: &[f64], confusion: &[ConfusionMatrix]) -> Vec<f64> {
    let m = confusion.len();
    assert_eq!(dist.len(), 1 << m);
    let mut cur = dist.to_vec();
    for (pos, cm) in confusion.iter().enumerate() {
        let b = 1 << (m - 1 - pos);
        for i in 0..cur.len() {
            if i & b != 0 {
                continue;
            }
            let (p0, p1) = (cur[i], cur[i | b]);
            cur[i] = (1.0 - cm.p10) * p0 + cm.p01 * p1;
            cur[i | b] = cm.p10 * p0 + (1.0 - cm.p01) * p1;
        }
    }
    cur
}

/// Multinomial counts drawn as a chain of conditional binomials.
pub fn multinomial(dist: &[f64], shots: u64, rng: &mut ChaCha8Rng) -> Vec<u64> {
    let mut counts = vec![0u64; dist.len()];
    let mut left = shots;
    let mut mass = 1.0;
    for (i, &p) in dist.iter().enumerate() {
        if left == 0 {
            break;
        }
        if i + 1 == dist.len() || mass <= 0.0 {
            counts[i] = left;
            break;
        }
        let q = (p / mass).clamp(0.0, 1.0);
        let k = Binomial::new(left, q).expect("valid binomial").sample(rng);
        counts[i] = k;
        left -= k;
        mass -= p;
    }
    counts
}

/// Outcome counts of a sampling run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotResult {
    pub qubits: Vec<usize>,
    pub shots: u64,
    /// Bitstring (first listed qubit first) → occurrences.
    pub counts: BTreeMap<String, u64>,
}

impl ShotResult {
    fn from_counts(qubits: &[usize], counts: &[u64]) -> Self {
        let m = qubits.len();
        let mut map = BTreeMap::new();
        for (i, &c) in counts.iter().enumerate() {
            if c > 0 {
                map.insert(format!("{i:0m$b}"), c);
            }
        }
        ShotResult {
            qubits: qubits.to_vec(),
            shots: counts.iter().sum(),
            counts: map,
        }
    }

    pub fn count(&self, bits: &str) -> u64 {
        self.counts.get(bits).copied().unwrap_or(0)
    }

    pub fn frequency(&self, bits: &str) -> f64 {
        self.count(bits) as f64 / self.shots as f64
    }

    /// Counts indexed by outcome integer.
    pub fn dense_counts(&self) -> Vec<u64> {
        let mut out = vec![0; 1 << self.qubits.len()];
        for (k, &v) in &self.counts {
            out[usize::from_str_radix(k, 2).expect("bitstring key")] = v;
        }
        out
    }

    /// `(count₀ − count₁)/M` for the qubit at position `pos` of `qubits`.
    pub fn z_estimate(&self, pos: usize) -> f64 {
        let mut diff: i64 = 0;
        for (k, &v) in &self.counts {
            if k.as_bytes()[pos] == b'0' {
                diff += v as i64;
            } else {
                diff -= v as i64;
            }
        }
        diff as f64 / self.shots as f64
    }
}

/// Draws `shots` measurements of `qubits`, flipping bits through the
/// per-qubit `readout` confusion matrices (one per listed qubit).
pub fn sample(
    state: &dyn BornState,
    qubits: &[usize],
    shots: u64,
    seed: u64,
    readout: Option<&[ConfusionMatrix]>,
) -> Result<ShotResult> {
    if shots == 0 {
        return Err(Error::invalid("shot count must be at least 1"));
    }
    let mut dist = state.marginal(qubits)?;
    if let Some(cm) = readout {
        if cm.len() != qubits.len() {
            return Err(Error::invalid(format!(
                "{} confusion matrices for {} qubits",
                cm.len(),
                qubits.len()
            )));
        }
        dist = apply_readout(&dist, cm);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let counts = multinomial(&dist, shots, &mut rng);
    Ok(ShotResult::from_counts(qubits, &counts))
}

/// Exact `⟨Z⟩` of one qubit.
pub fn expectation_z(state: &dyn BornState, qubit: usize) -> Result<f64> {
    let m = state.marginal(&[qubit])?;
    Ok(m[0] - m[1])
}
