use std::collections::BTreeMap;

use serde::Serialize;

use super::gate::{Gate, GateKind};
use super::kernel::apply_matrix;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64, ONE, ZERO};

/// Named contiguous qubit span inside a circuit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Register {
    pub name: String,
    pub start: usize,
    pub len: usize,
}

impl Register {
    pub fn qubits(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len
    }
}

/// Ordered gate list over `width` qubits.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Circuit {
    width: usize,
    name: String,
    registers: Vec<Register>,
    gates: Vec<Gate>,
}

/// Largest width for which [`Circuit::unitary`] builds a dense matrix.
pub const DENSE_UNITARY_CAP: usize = 12;

impl Circuit {
    pub fn new(width: usize) -> Self {
        Circuit {
            width,
            ..Default::default()
        }
    }

    pub fn named(width: usize, name: impl Into<String>) -> Self {
        Circuit {
            width,
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn set_name(&mut self, name: impl Into<String>) {
        self.name = name.into();
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn register(&self, name: &str) -> Option<&Register> {
        self.registers.iter().find(|r| r.name == name)
    }

    pub fn add_register(&mut self, name: impl Into<String>, start: usize, len: usize) -> Result<()> {
        let name = name.into();
        if start + len > self.width {
            return Err(Error::invalid(format!(
                "register {name} [{start}, {}) exceeds width {}",
                start + len,
                self.width
            )));
        }
        for r in &self.registers {
            if start < r.start + r.len && r.start < start + len {
                return Err(Error::invalid(format!(
                    "register {name} overlaps register {}",
                    r.name
                )));
            }
        }
        self.registers.push(Register { name, start, len });
        Ok(())
    }

    pub fn push(&mut self, gate: Gate) -> Result<&mut Self> {
        gate.validate(self.width)?;
        self.gates.push(gate);
        Ok(self)
    }

    fn one(&mut self, kind: GateKind, q: usize) -> &mut Self {
        self.push(Gate::new(kind, vec![q])).expect("invalid single-qubit gate");
        self
    }

    fn two(&mut self, kind: GateKind, a: usize, b: usize) -> &mut Self {
        self.push(Gate::new(kind, vec![a, b])).expect("invalid two-qubit gate");
        self
    }

    // The builder helpers panic on out-of-range qubits; they are meant for
    // circuit constructors whose indices are correct by construction. Use
    // `push` to get a `Result`.
    pub fn h(&mut self, q: usize) -> &mut Self {
        self.one(GateKind::H, q)
    }

    pub fn x(&mut self, q: usize) -> &mut Self {
        self.one(GateKind::X, q)
    }

    pub fn sx(&mut self, q: usize) -> &mut Self {
        self.one(GateKind::SX, q)
    }

    pub fn ry(&mut self, theta: f64, q: usize) -> &mut Self {
        self.one(GateKind::RY(theta), q)
    }

    pub fn rz(&mut self, theta: f64, q: usize) -> &mut Self {
        self.one(GateKind::RZ(theta), q)
    }

    pub fn cx(&mut self, control: usize, target: usize) -> &mut Self {
        self.two(GateKind::CX, control, target)
    }

    pub fn cphase(&mut self, theta: f64, control: usize, target: usize) -> &mut Self {
        self.two(GateKind::CPhase(theta), control, target)
    }

    pub fn swap(&mut self, a: usize, b: usize) -> &mut Self {
        self.two(GateKind::Swap, a, b)
    }

    pub fn ccx(&mut self, c1: usize, c2: usize, target: usize) -> &mut Self {
        self.push(Gate::new(GateKind::CCX, vec![c1, c2, target]))
            .expect("invalid ccx");
        self
    }

    pub fn measure(&mut self, q: usize) -> &mut Self {
        self.one(GateKind::Measure, q)
    }

    pub fn reset(&mut self, q: usize) -> &mut Self {
        self.one(GateKind::Reset, q)
    }

    /// Appends `other` with its qubit `i` mapped to `map[i]`.
    pub fn append_mapped(&mut self, other: &Circuit, map: &[usize]) -> Result<()> {
        if map.len() < other.width {
            return Err(Error::invalid(format!(
                "qubit map of length {} for circuit of width {}",
                map.len(),
                other.width
            )));
        }
        for g in &other.gates {
            let mut g = g.clone();
            g.qubits.iter_mut().for_each(|q| *q = map[*q]);
            g.controls.iter_mut().for_each(|q| *q = map[*q]);
            self.push(g)?;
        }
        Ok(())
    }

    /// Appends `other` shifted by `offset` qubits.
    pub fn append_at(&mut self, other: &Circuit, offset: usize) -> Result<()> {
        let map: Vec<usize> = (0..other.width).map(|q| q + offset).collect();
        self.append_mapped(other, &map)
    }

    /// Every gate conditioned on `control`; the width grows to fit it.
    pub fn controlled(&self, control: usize) -> Result<Circuit> {
        if self
            .gates
            .iter()
            .any(|g| g.qubits.contains(&control) || g.controls.contains(&control))
        {
            return Err(Error::invalid(format!(
                "control qubit {control} overlaps the circuit span"
            )));
        }
        let mut out = Circuit::named(self.width.max(control + 1), format!("c-{}", self.name));
        out.registers = self.registers.clone();
        for g in &self.gates {
            if !g.is_unitary() {
                return Err(Error::Unsupported(format!("controlled {}", g.kind.name())));
            }
            out.push(g.controlled(control))?;
        }
        Ok(out)
    }

    /// Inverse of a unitary circuit.
    pub fn inverse(&self) -> Result<Circuit> {
        let mut out = Circuit::named(self.width, format!("{}-inv", self.name));
        out.registers = self.registers.clone();
        for g in self.gates.iter().rev() {
            let kind = match &g.kind {
                GateKind::H | GateKind::X | GateKind::CX | GateKind::CCX | GateKind::Swap => {
                    g.kind.clone()
                }
                GateKind::SX => {
                    // SX† = RZ(π)·SX·RZ(π) up to phase; emitted as a dense gate
                    // to stay exact.
                    let m = GateKind::SX.matrix().unwrap().adjoint();
                    GateKind::Unitary {
                        matrix: m.into(),
                        label: "sxdg".into(),
                    }
                }
                GateKind::RY(t) => GateKind::RY(-t),
                GateKind::RZ(t) => GateKind::RZ(-t),
                GateKind::CPhase(t) => GateKind::CPhase(-t),
                GateKind::Unitary { matrix, label } => GateKind::Unitary {
                    matrix: matrix.adjoint().into(),
                    label: format!("{label}-inv"),
                },
                k => return Err(Error::Unsupported(format!("inverse of {}", k.name()))),
            };
            out.gates.push(Gate {
                kind,
                qubits: g.qubits.clone(),
                controls: g.controls.clone(),
            });
        }
        Ok(out)
    }

    /// Gate counts keyed by kind name, controlled gates prefixed with `c`.
    pub fn count_ops(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for g in &self.gates {
            let key = format!("{}{}", "c".repeat(g.controls.len()), g.kind.name());
            *out.entry(key).or_insert(0) += 1;
        }
        out
    }

    /// Number of gates acting on two or more qubits.
    pub fn multi_qubit_count(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| g.is_unitary() && g.support().len() > 1)
            .count()
    }

    /// Circuit depth counting every gate as one layer on its support.
    pub fn depth(&self) -> usize {
        let mut level = vec![0usize; self.width];
        for g in &self.gates {
            let s = g.support();
            let d = s.iter().map(|&q| level[q]).max().unwrap_or(0) + 1;
            for q in s {
                level[q] = d;
            }
        }
        level.into_iter().max().unwrap_or(0)
    }

    /// True when no gate follows a measurement on the same qubit.
    pub fn measurements_terminal(&self) -> bool {
        let mut measured = vec![false; self.width];
        for g in &self.gates {
            let touched = g.support();
            if touched.iter().any(|&q| measured[q]) {
                return false;
            }
            if g.kind == GateKind::Measure {
                measured[g.qubits[0]] = true;
            }
        }
        true
    }

    /// Qubits measured by the circuit, in gate order.
    pub fn measured_qubits(&self) -> Vec<usize> {
        self.gates
            .iter()
            .filter(|g| g.kind == GateKind::Measure)
            .map(|g| g.qubits[0])
            .collect()
    }

    /// Copy without measurements.
    pub fn without_measurements(&self) -> Circuit {
        let mut out = self.clone();
        out.gates.retain(|g| g.kind != GateKind::Measure);
        out
    }

    /// Dense unitary of a measurement-free circuit (qubit 0 most significant).
    pub fn unitary(&self) -> Result<CMatrix> {
        if self.width > DENSE_UNITARY_CAP {
            return Err(Error::TooManyQubits {
                engine: "dense unitary",
                width: self.width,
                cap: DENSE_UNITARY_CAP,
            });
        }
        let dim = 1usize << self.width;
        let forms = self
            .gates
            .iter()
            .map(|g| {
                g.kernel_form().ok_or_else(|| {
                    Error::Unsupported(format!("{} in a dense unitary", g.kind.name()))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut u = CMatrix::zeros(dim, dim);
        let mut col = vec![ZERO; dim];
        for j in 0..dim {
            col.iter_mut().for_each(|a| *a = ZERO);
            col[j] = ONE;
            for (m, t, c) in &forms {
                apply_matrix(&mut col, self.width, t, c, m);
            }
            for (i, a) in col.iter().enumerate() {
                u[(i, j)] = *a;
            }
        }
        Ok(u)
    }

    /// Pretty gate listing, one gate per line.
    pub fn listing(&self) -> String {
        let mut s = String::new();
        for g in &self.gates {
            s.push_str(&g.to_string());
            s.push('\n');
        }
        s
    }
}

/// Statevector amplitudes of `|0…0⟩` under a dense matrix, for oracles.
pub fn first_column(u: &CMatrix) -> Vec<C64> {
    u.column(0).iter().copied().collect()
}
