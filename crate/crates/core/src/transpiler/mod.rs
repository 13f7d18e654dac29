//! Rewriting circuits into the device basis `{RZ, SX, X, CX}` and onto a
//! coupling map.

pub mod synthesis;
pub mod target;

use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::noise::NoiseModel;
use crate::simulator::{Circuit, Gate, GateKind};

pub use target::{region_error, DeviceTarget, BASIS};

/// Rewrites `circuit` into RZ, SX, X and CX (measurements and resets pass
/// through). Adjacent single-qubit gates are merged before synthesis.
pub fn rebase(circuit: &Circuit) -> Result<Circuit> {
    let mut out = Circuit::named(circuit.width(), circuit.name());
    for r in circuit.registers() {
        out.add_register(r.name.clone(), r.start, r.len)?;
    }
    let mut pending: Vec<Option<CMatrix>> = vec![None; circuit.width()];
    for gate in circuit.gates() {
        lower(gate, &mut pending, &mut out)?;
    }
    for q in 0..circuit.width() {
        flush(q, &mut pending, &mut out)?;
    }
    Ok(out)
}

fn flush(q: usize, pending: &mut [Option<CMatrix>], out: &mut Circuit) -> Result<()> {
    if let Some(m) = pending[q].take() {
        for g in synthesis::one_qubit_basis(&m, q) {
            out.push(g)?;
        }
    }
    Ok(())
}

fn lower(gate: &Gate, pending: &mut [Option<CMatrix>], out: &mut Circuit) -> Result<()> {
    let support = gate.support();
    match (&gate.kind, support.len()) {
        (GateKind::Measure | GateKind::Reset, _) => {
            if !gate.controls.is_empty() {
                return Err(Error::Unsupported(format!("controlled {}", gate.kind.name())));
            }
            flush(gate.qubits[0], pending, out)?;
            out.push(gate.clone())?;
        }
        (_, 1) => {
            let m = gate
                .full_matrix()
                .ok_or_else(|| Error::Unsupported(gate.kind.name().to_string()))?;
            let q = support[0];
            pending[q] = Some(match pending[q].take() {
                Some(prev) => m * prev,
                None => m,
            });
        }
        (GateKind::CX, 2) if gate.controls.is_empty() => {
            flush(support[0], pending, out)?;
            flush(support[1], pending, out)?;
            out.push(gate.clone())?;
        }
        _ => {
            for g in decompose(gate)? {
                lower(&g, pending, out)?;
            }
        }
    }
    Ok(())
}

/// One step of lowering towards single-qubit gates and CX.
fn decompose(gate: &Gate) -> Result<Vec<Gate>> {
    let q = &gate.qubits;
    let plain = gate.controls.is_empty();
    Ok(match &gate.kind {
        GateKind::CX if gate.controls.len() == 1 => {
            synthesis::toffoli(gate.controls[0], q[0], q[1])
        }
        GateKind::CCX if plain => synthesis::toffoli(q[0], q[1], q[2]),
        GateKind::CPhase(t) if plain => synthesis::cphase(*t, q[0], q[1]),
        GateKind::Swap if plain => synthesis::swap(q[0], q[1]),
        kind if gate.controls.len() == 1 && kind.arity() == Some(1) && q.len() == 1 => {
            let m = kind
                .matrix()
                .ok_or_else(|| Error::Unsupported(kind.name().to_string()))?;
            synthesis::controlled_one_qubit(&m, gate.controls[0], q[0])
        }
        GateKind::Unitary { matrix, .. } if plain && q.len() == 1 => {
            vec![Gate::unitary(matrix.as_ref().clone(), q.clone(), "u")]
        }
        _ => {
            let m = gate
                .full_matrix()
                .ok_or_else(|| Error::Unsupported(gate.kind.name().to_string()))?;
            synthesis::shannon(&m, &gate.support())?
        }
    })
}

/// Circuit placed on a device together with the qubit permutation
/// introduced by routing.
#[derive(Clone, Debug, Serialize)]
pub struct Routed {
    pub circuit: Circuit,
    /// `initial_layout[l]` is the physical qubit holding logical `l`
    /// before the first gate.
    pub initial_layout: Vec<usize>,
    /// Physical qubit holding logical `l` after the last gate.
    pub final_layout: Vec<usize>,
    pub swaps: usize,
}

/// Two-qubit gates ahead of the current one that steer SWAP choice.
const LOOKAHEAD: usize = 12;
const LOOKAHEAD_DECAY: f64 = 0.7;

/// Logical qubit pairs of the two-qubit gates, in order.
fn interaction_pairs(circuit: &Circuit) -> Result<Vec<(usize, usize)>> {
    circuit
        .gates()
        .iter()
        .filter_map(|g| {
            let s = g.support();
            match s.len() {
                0 | 1 => None,
                2 => Some(Ok((s[0], s[1]))),
                k => Some(Err(Error::Unsupported(format!(
                    "routing a {k}-qubit {} gate",
                    g.kind.name()
                )))),
            }
        })
        .collect()
}

/// SWAP (physical pair) bringing gate `pairs[i]` one hop closer, chosen to
/// minimize the decayed distance of the gates that follow.
fn pick_swap(
    target: &DeviceTarget,
    dist: &[Vec<usize>],
    l2p: &[usize],
    pairs: &[(usize, usize)],
    i: usize,
) -> (usize, usize) {
    let (pa, pb) = (l2p[pairs[i].0], l2p[pairs[i].1]);
    let here = dist[pa][pb];
    let mut best: Option<(f64, (usize, usize))> = None;
    for (moving, other) in [(pa, pb), (pb, pa)] {
        for &y in target.neighbors(moving) {
            if dist[y][other] >= here {
                continue;
            }
            let moved = |p: usize| {
                if p == moving {
                    y
                } else if p == y {
                    moving
                } else {
                    p
                }
            };
            let mut score = 0.0;
            let mut w = 1.0;
            for &(a, b) in pairs[i + 1..].iter().take(LOOKAHEAD) {
                w *= LOOKAHEAD_DECAY;
                score += w * dist[moved(l2p[a])][moved(l2p[b])] as f64;
            }
            let key = (moving.min(y), moving.max(y));
            if best.as_ref().is_none_or(|(s, k)| score < *s - 1e-12 || (score <= *s + 1e-12 && key < *k)) {
                best = Some((score, key));
            }
        }
    }
    best.expect("a neighbour closer to the partner exists on a connected path").1
}

/// Maps `circuit` onto `target` starting from `layout`, inserting SWAPs
/// (as three CX) until every two-qubit gate acts on a coupled pair. Each
/// SWAP shortens the blocked gate by one hop; among those, the one that
/// best serves the next few gates wins. Gates on three or more qubits must
/// be lowered first.
pub fn route(circuit: &Circuit, target: &DeviceTarget, layout: &[usize]) -> Result<Routed> {
    let w = circuit.width();
    let p = target.num_qubits();
    if layout.len() != w {
        return Err(Error::invalid(format!(
            "layout has {} entries for a {w}-qubit circuit",
            layout.len()
        )));
    }
    if w > p {
        return Err(Error::invalid(format!(
            "circuit of {w} qubits does not fit a {p}-qubit device"
        )));
    }
    let mut p2l: Vec<Option<usize>> = vec![None; p];
    for (l, &q) in layout.iter().enumerate() {
        if q >= p {
            return Err(Error::QubitOutOfRange { qubit: q, width: p });
        }
        if p2l[q].replace(l).is_some() {
            return Err(Error::invalid(format!("physical qubit {q} used twice")));
        }
    }
    let pairs = interaction_pairs(circuit)?;
    let dist = target.distances();
    let mut l2p = layout.to_vec();
    let mut out = Circuit::named(p, circuit.name());
    let mut last_cx: Vec<Option<(usize, usize)>> = vec![None; p];
    let mut swaps = 0;
    let mut next_pair = 0;
    for gate in circuit.gates() {
        let support = gate.support();
        if support.len() == 2 {
            loop {
                let (a, b) = (l2p[support[0]], l2p[support[1]]);
                if dist[a][b] == usize::MAX {
                    return Err(Error::Disconnected(format!(
                        "no path between physical qubits {a} and {b}"
                    )));
                }
                if dist[a][b] == 1 {
                    break;
                }
                let (x, y) = pick_swap(target, &dist, &l2p, &pairs, next_pair);
                // orient the SWAP so its first CX can cancel a preceding one
                let (x, y) = if last_cx[x] == Some((y, x)) && last_cx[y] == Some((y, x)) {
                    (y, x)
                } else {
                    (x, y)
                };
                out.cx(x, y).cx(y, x).cx(x, y);
                last_cx[x] = Some((x, y));
                last_cx[y] = Some((x, y));
                swaps += 1;
                p2l.swap(x, y);
                for (q, l) in [(x, p2l[x]), (y, p2l[y])] {
                    if let Some(l) = l {
                        l2p[l] = q;
                    }
                }
            }
            next_pair += 1;
        }
        let mapped = Gate {
            kind: gate.kind.clone(),
            qubits: gate.qubits.iter().map(|&q| l2p[q]).collect(),
            controls: gate.controls.iter().map(|&q| l2p[q]).collect(),
        };
        let touched = mapped.support();
        let cx = (matches!(mapped.kind, GateKind::CX) && mapped.controls.is_empty())
            .then(|| (mapped.qubits[0], mapped.qubits[1]));
        for &q in &touched {
            last_cx[q] = cx;
        }
        out.push(mapped)?;
    }
    Ok(Routed {
        circuit: out,
        initial_layout: layout.to_vec(),
        final_layout: l2p,
        swaps,
    })
}

/// Removes pairs of identical CX gates with nothing in between on either
/// qubit.
pub fn cancel_cx_pairs(circuit: &Circuit) -> Result<Circuit> {
    let gates = circuit.gates();
    let mut live = vec![true; gates.len()];
    let mut stacks: Vec<Vec<usize>> = vec![Vec::new(); circuit.width()];
    for (i, g) in gates.iter().enumerate() {
        let support = g.support();
        if matches!(g.kind, GateKind::CX) && g.controls.is_empty() {
            let (a, b) = (g.qubits[0], g.qubits[1]);
            if let (Some(&j), Some(&k)) = (stacks[a].last(), stacks[b].last()) {
                if j == k && gates[j].kind == GateKind::CX && gates[j].controls.is_empty() && gates[j].qubits == g.qubits {
                    live[j] = false;
                    live[i] = false;
                    stacks[a].pop();
                    stacks[b].pop();
                    continue;
                }
            }
        }
        for q in support {
            stacks[q].push(i);
        }
    }
    let mut out = Circuit::named(circuit.width(), circuit.name());
    for r in circuit.registers() {
        out.add_register(r.name.clone(), r.start, r.len)?;
    }
    for (g, keep) in gates.iter().zip(live) {
        if keep {
            out.push(g.clone())?;
        }
    }
    Ok(out)
}

/// CX count of routing `pairs` from `layout`, weighted by `edge_cost`.
fn routing_cost(
    pairs: &[(usize, usize)],
    target: &DeviceTarget,
    dist: &[Vec<usize>],
    layout: &[usize],
    edge_cost: &dyn Fn(usize, usize) -> f64,
) -> f64 {
    let mut l2p = layout.to_vec();
    let mut p2l: Vec<Option<usize>> = vec![None; target.num_qubits()];
    for (l, &q) in layout.iter().enumerate() {
        p2l[q] = Some(l);
    }
    let mut cost = 0.0;
    for i in 0..pairs.len() {
        let (a, b) = pairs[i];
        while dist[l2p[a]][l2p[b]] > 1 {
            let (x, y) = pick_swap(target, dist, &l2p, pairs, i);
            cost += 3.0 * edge_cost(x, y);
            p2l.swap(x, y);
            for (q, l) in [(x, p2l[x]), (y, p2l[y])] {
                if let Some(l) = l {
                    l2p[l] = q;
                }
            }
        }
        cost += edge_cost(l2p[a], l2p[b]);
    }
    cost
}

/// Widest circuit for which every initial placement is tried.
const EXHAUSTIVE_LAYOUT_MAX: usize = 7;

/// Initial placement of the logical qubits of `circuit` on `target`
/// (same width) with the lowest routed cost; identity beyond
/// [`EXHAUSTIVE_LAYOUT_MAX`] qubits.
pub fn choose_layout(
    circuit: &Circuit,
    target: &DeviceTarget,
    edge_cost: &dyn Fn(usize, usize) -> f64,
) -> Result<Vec<usize>> {
    let w = circuit.width();
    let identity: Vec<usize> = (0..w).collect();
    if w > EXHAUSTIVE_LAYOUT_MAX || w != target.num_qubits() {
        return Ok(identity);
    }
    let pairs = interaction_pairs(circuit)?;
    if pairs.is_empty() {
        return Ok(identity);
    }
    let dist = target.distances();
    if dist.iter().flatten().any(|&d| d == usize::MAX) {
        return Err(Error::Disconnected("routing target is not connected".into()));
    }
    let mut best = (routing_cost(&pairs, target, &dist, &identity, edge_cost), identity.clone());
    let mut perm = identity;
    // Heap's algorithm over all placements
    let mut c = vec![0usize; w];
    let mut i = 0;
    while i < w {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            let cost = routing_cost(&pairs, target, &dist, &perm, edge_cost);
            if cost < best.0 - 1e-12 {
                best = (cost, perm.clone());
            }
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(best.1)
}

/// Result of [`transpile`]: a basis circuit over a compact region of the
/// device, indexed `0..region.len()`.
#[derive(Clone, Debug, Serialize)]
pub struct Transpiled {
    pub circuit: Circuit,
    /// Physical device qubits backing local indices `0..len`.
    pub region: Vec<usize>,
    /// Local index holding logical `l` after the last gate.
    pub final_layout: Vec<usize>,
    pub swaps: usize,
    pub counts: BTreeMap<String, usize>,
}

impl Transpiled {
    /// Physical device qubit holding logical `l` at the end.
    pub fn physical(&self, l: usize) -> usize {
        self.region[self.final_layout[l]]
    }
}

/// Initial placements keyed by region and two-qubit gate sequence, so
/// circuits differing only in angles are placed once.
type PlacementKey = (Vec<usize>, Vec<(usize, usize)>);

#[derive(Debug, Default)]
pub struct LayoutCache {
    entries: Mutex<HashMap<PlacementKey, Vec<usize>>>,
}

impl LayoutCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("layout cache").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Rebases `circuit` and routes it within a region: `layout` when given,
/// else one picked by [`DeviceTarget::noise_aware_region`] when `noise` is
/// given, breadth-first otherwise. The placement inside the region is the
/// one with the lowest routed CX cost (weighted by CX error under
/// `noise`); CX pairs left adjacent by routing are cancelled.
pub fn transpile(
    circuit: &Circuit,
    target: &DeviceTarget,
    layout: Option<&[usize]>,
    noise: Option<&NoiseModel>,
) -> Result<Transpiled> {
    transpile_cached(circuit, target, layout, noise, None)
}

/// [`transpile`] reusing placements from `cache`.
pub fn transpile_cached(
    circuit: &Circuit,
    target: &DeviceTarget,
    layout: Option<&[usize]>,
    noise: Option<&NoiseModel>,
    cache: Option<&LayoutCache>,
) -> Result<Transpiled> {
    let w = circuit.width();
    let region = match layout {
        Some(l) => l.to_vec(),
        None => match noise {
            Some(n) => target.noise_aware_region(w, n)?,
            None => target.default_region(w)?,
        },
    };
    let local = target.restrict(&region)?;
    if !local.is_connected() {
        return Err(Error::Disconnected(format!(
            "layout {region:?} is not connected on the device"
        )));
    }
    let rebased = rebase(circuit)?;
    let cx_error: HashMap<(usize, usize), f64> = noise
        .map(|n| {
            n.gate_noise()
                .iter()
                .filter(|g| g.name == "cx")
                .map(|g| ((g.qubits[0], g.qubits[1]), g.error))
                .collect()
        })
        .unwrap_or_default();
    let edge_cost = |a: usize, b: usize| {
        let (pa, pb) = (region[a], region[b]);
        let e = cx_error.get(&(pa, pb)).or_else(|| cx_error.get(&(pb, pa)));
        e.map_or(1.0, |e| -(1.0 - e).ln())
    };
    let place = || choose_layout(&rebased, &local, &edge_cost);
    let initial = match cache {
        Some(cache) => {
            let key = (region.clone(), interaction_pairs(&rebased)?);
            let hit = cache.entries.lock().expect("layout cache").get(&key).cloned();
            match hit {
                Some(l) => l,
                None => {
                    let l = place()?;
                    cache.entries.lock().expect("layout cache").insert(key, l.clone());
                    l
                }
            }
        }
        None => place()?,
    };
    let routed = route(&rebased, &local, &initial)?;
    let mut circuit = routed.circuit;
    for _ in 0..4 {
        let before = circuit.len();
        circuit = rebase(&cancel_cx_pairs(&circuit)?)?;
        if circuit.len() >= before {
            break;
        }
    }
    let counts = circuit.count_ops();
    Ok(Transpiled {
        circuit,
        region,
        final_layout: routed.final_layout,
        swaps: routed.swaps,
        counts,
    })
}

/// Amplitudes of a routed state re-indexed by logical qubit; qubits beyond
/// `final_layout` must be in `|0⟩`.
pub fn to_logical_order(amps: &[crate::linalg::C64], final_layout: &[usize]) -> Vec<crate::linalg::C64> {
    let p = amps.len().trailing_zeros() as usize;
    let w = final_layout.len();
    let mut out = vec![crate::linalg::ZERO; 1 << w];
    for (x, a) in out.iter_mut().enumerate() {
        let mut idx = 0usize;
        for (l, &q) in final_layout.iter().enumerate() {
            if x >> (w - 1 - l) & 1 == 1 {
                idx |= 1 << (p - 1 - q);
            }
        }
        *a = amps[idx];
    }
    out
}
