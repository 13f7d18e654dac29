use std::collections::{BTreeSet, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::noise::{CalibrationSnapshot, NoiseModel};

/// Basis gates every transpiled circuit is expressed in.
pub const BASIS: [&str; 4] = ["rz", "sx", "x", "cx"];

/// Physical device: qubit count and undirected coupling map.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeviceTarget {
    num_qubits: usize,
    coupling: Vec<[usize; 2]>,
    adjacency: Vec<Vec<usize>>,
}

impl DeviceTarget {
    pub fn new(num_qubits: usize, edges: &[[usize; 2]]) -> Result<Self> {
        let mut set = BTreeSet::new();
        for &[a, b] in edges {
            for q in [a, b] {
                if q >= num_qubits {
                    return Err(Error::QubitOutOfRange {
                        qubit: q,
                        width: num_qubits,
                    });
                }
            }
            if a == b {
                return Err(Error::invalid(format!("self-loop on qubit {a}")));
            }
            set.insert([a.min(b), a.max(b)]);
        }
        let coupling: Vec<[usize; 2]> = set.into_iter().collect();
        let mut adjacency = vec![Vec::new(); num_qubits];
        for &[a, b] in &coupling {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for n in &mut adjacency {
            n.sort_unstable();
        }
        Ok(DeviceTarget {
            num_qubits,
            coupling,
            adjacency,
        })
    }

    /// Linear chain `0–1–…–(n−1)`.
    pub fn line(n: usize) -> Self {
        let edges: Vec<[usize; 2]> = (1..n).map(|i| [i - 1, i]).collect();
        Self::new(n, &edges).expect("valid line")
    }

    /// All-to-all coupling.
    pub fn full(n: usize) -> Self {
        let edges: Vec<[usize; 2]> = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| [a, b]))
            .collect();
        Self::new(n, &edges).expect("valid graph")
    }

    pub fn from_snapshot(snapshot: &CalibrationSnapshot) -> Result<Self> {
        Self::new(snapshot.num_qubits(), &snapshot.coupling)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn coupling(&self) -> &[[usize; 2]] {
        &self.coupling
    }

    pub fn neighbors(&self, q: usize) -> &[usize] {
        &self.adjacency[q]
    }

    pub fn coupled(&self, a: usize, b: usize) -> bool {
        self.adjacency
            .get(a)
            .is_some_and(|n| n.binary_search(&b).is_ok())
    }

    pub fn is_connected(&self) -> bool {
        self.num_qubits <= 1 || self.bfs_order(0).len() == self.num_qubits
    }

    fn bfs_order(&self, start: usize) -> Vec<usize> {
        let mut seen = vec![false; self.num_qubits];
        let mut order = vec![start];
        seen[start] = true;
        let mut i = 0;
        while i < order.len() {
            for &n in &self.adjacency[order[i]] {
                if !seen[n] {
                    seen[n] = true;
                    order.push(n);
                }
            }
            i += 1;
        }
        order
    }

    /// Shortest coupling path from `a` to `b`, both ends included.
    pub fn shortest_path(&self, a: usize, b: usize) -> Option<Vec<usize>> {
        let mut prev = vec![usize::MAX; self.num_qubits];
        prev[a] = a;
        let mut queue = VecDeque::from([a]);
        while let Some(q) = queue.pop_front() {
            if q == b {
                let mut path = vec![b];
                let mut cur = b;
                while cur != a {
                    cur = prev[cur];
                    path.push(cur);
                }
                path.reverse();
                return Some(path);
            }
            for &n in &self.adjacency[q] {
                if prev[n] == usize::MAX {
                    prev[n] = q;
                    queue.push_back(n);
                }
            }
        }
        None
    }

    /// All-pairs hop counts; `usize::MAX` between disconnected qubits.
    pub fn distances(&self) -> Vec<Vec<usize>> {
        (0..self.num_qubits)
            .map(|a| {
                let mut d = vec![usize::MAX; self.num_qubits];
                d[a] = 0;
                let mut queue = VecDeque::from([a]);
                while let Some(q) = queue.pop_front() {
                    for &n in &self.adjacency[q] {
                        if d[n] == usize::MAX {
                            d[n] = d[q] + 1;
                            queue.push_back(n);
                        }
                    }
                }
                d
            })
            .collect()
    }

    /// Sub-device on `physical`, relabelled `0..len` in the given order.
    pub fn restrict(&self, physical: &[usize]) -> Result<DeviceTarget> {
        let mut local = vec![usize::MAX; self.num_qubits];
        for (i, &p) in physical.iter().enumerate() {
            if p >= self.num_qubits {
                return Err(Error::QubitOutOfRange {
                    qubit: p,
                    width: self.num_qubits,
                });
            }
            if local[p] != usize::MAX {
                return Err(Error::invalid(format!("qubit {p} listed twice")));
            }
            local[p] = i;
        }
        let edges: Vec<[usize; 2]> = self
            .coupling
            .iter()
            .filter(|[a, b]| local[*a] != usize::MAX && local[*b] != usize::MAX)
            .map(|[a, b]| [local[*a], local[*b]])
            .collect();
        DeviceTarget::new(physical.len(), &edges)
    }

    /// Connected set of `k` qubits minimizing `cost`, grown greedily from
    /// every starting qubit.
    pub fn best_region(&self, k: usize, cost: impl Fn(&[usize]) -> f64) -> Result<Vec<usize>> {
        if k == 0 || k > self.num_qubits {
            return Err(Error::invalid(format!(
                "cannot place {k} qubits on a {}-qubit device",
                self.num_qubits
            )));
        }
        let mut best: Option<(f64, Vec<usize>)> = None;
        for start in 0..self.num_qubits {
            let mut region = vec![start];
            while region.len() < k {
                let mut frontier: Vec<usize> = region
                    .iter()
                    .flat_map(|&q| self.adjacency[q].iter().copied())
                    .filter(|q| !region.contains(q))
                    .collect();
                frontier.sort_unstable();
                frontier.dedup();
                let pick = frontier.into_iter().min_by(|&a, &b| {
                    let mut ra = region.clone();
                    ra.push(a);
                    let mut rb = region.clone();
                    rb.push(b);
                    cost(&ra).total_cmp(&cost(&rb))
                });
                match pick {
                    Some(q) => region.push(q),
                    None => break,
                }
            }
            if region.len() < k {
                continue;
            }
            let cst = cost(&region);
            if best.as_ref().is_none_or(|(b, _)| cst < *b) {
                best = Some((cst, region));
            }
        }
        best.map(|(_, r)| r).ok_or_else(|| {
            Error::Disconnected(format!("no connected region of {k} qubits"))
        })
    }

    /// Region chosen by breadth-first growth from qubit 0.
    pub fn default_region(&self, k: usize) -> Result<Vec<usize>> {
        self.best_region(k, |_| 0.0)
    }

    /// Region minimizing the mean CX, SX and readout error under `noise`.
    pub fn noise_aware_region(&self, k: usize, noise: &NoiseModel) -> Result<Vec<usize>> {
        self.best_region(k, |region| region_error(region, noise))
    }
}

/// Mean two-qubit error on coupled pairs plus mean single-qubit and
/// readout error over `region`.
pub fn region_error(region: &[usize], noise: &NoiseModel) -> f64 {
    let mut cx = (0.0, 0usize);
    let mut sx = (0.0, 0usize);
    for g in noise.gate_noise() {
        if !g.qubits.iter().all(|q| region.contains(q)) {
            continue;
        }
        match g.name.as_str() {
            "cx" => {
                cx.0 += g.error;
                cx.1 += 1;
            }
            "sx" => {
                sx.0 += g.error;
                sx.1 += 1;
            }
            _ => {}
        }
    }
    let readout: f64 = region
        .iter()
        .map(|&q| {
            let r = noise.readout(q);
            (r.p01 + r.p10) / 2.0
        })
        .sum::<f64>()
        / region.len() as f64;
    let mean = |(s, n): (f64, usize)| if n == 0 { 0.0 } else { s / n as f64 };
    mean(cx) + mean(sx) + readout
}
