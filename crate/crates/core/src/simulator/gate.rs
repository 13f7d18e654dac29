use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::sync::Arc;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{c, from_rows, CMatrix, C64, I, ONE, ZERO};

/// Gate kinds understood by both simulation engines.
#[derive(Clone, Debug, PartialEq)]
pub enum GateKind {
    H,
    X,
    SX,
    RY(f64),
    RZ(f64),
    /// `qubits = [control, target]`
    CX,
    /// `qubits = [control, control, target]`
    CCX,
    /// `qubits = [control, target]`, phase `e^{iθ}` on `|11⟩`.
    CPhase(f64),
    Swap,
    Measure,
    Reset,
    /// Dense unitary on `qubits`, `qubits[0]` the most significant index bit.
    Unitary { matrix: Arc<CMatrix>, label: String },
}

impl GateKind {
    pub fn name(&self) -> &str {
        match self {
            GateKind::H => "h",
            GateKind::X => "x",
            GateKind::SX => "sx",
            GateKind::RY(_) => "ry",
            GateKind::RZ(_) => "rz",
            GateKind::CX => "cx",
            GateKind::CCX => "ccx",
            GateKind::CPhase(_) => "cphase",
            GateKind::Swap => "swap",
            GateKind::Measure => "measure",
            GateKind::Reset => "reset",
            GateKind::Unitary { .. } => "unitary",
        }
    }

    /// Number of qubits the kind acts on, `None` for dense unitaries.
    pub fn arity(&self) -> Option<usize> {
        match self {
            GateKind::H
            | GateKind::X
            | GateKind::SX
            | GateKind::RY(_)
            | GateKind::RZ(_)
            | GateKind::Measure
            | GateKind::Reset => Some(1),
            GateKind::CX | GateKind::CPhase(_) | GateKind::Swap => Some(2),
            GateKind::CCX => Some(3),
            GateKind::Unitary { .. } => None,
        }
    }

    pub fn angle(&self) -> Option<f64> {
        match self {
            GateKind::RY(t) | GateKind::RZ(t) | GateKind::CPhase(t) => Some(*t),
            _ => None,
        }
    }

    pub fn is_unitary(&self) -> bool {
        !matches!(self, GateKind::Measure | GateKind::Reset)
    }

    /// Matrix of the kind over its own qubits.
    pub fn matrix(&self) -> Option<CMatrix> {
        let h = FRAC_1_SQRT_2;
        let m = match self {
            GateKind::H => from_rows(2, &[c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)]),
            GateKind::X => from_rows(2, &[ZERO, ONE, ONE, ZERO]),
            GateKind::SX => from_rows(
                2,
                &[c(0.5, 0.5), c(0.5, -0.5), c(0.5, -0.5), c(0.5, 0.5)],
            ),
            GateKind::RY(t) => ry_matrix(*t),
            GateKind::RZ(t) => rz_matrix(*t),
            GateKind::CX => {
                let mut m = CMatrix::identity(4, 4);
                m[(2, 2)] = ZERO;
                m[(3, 3)] = ZERO;
                m[(2, 3)] = ONE;
                m[(3, 2)] = ONE;
                m
            }
            GateKind::CCX => {
                let mut m = CMatrix::identity(8, 8);
                m[(6, 6)] = ZERO;
                m[(7, 7)] = ZERO;
                m[(6, 7)] = ONE;
                m[(7, 6)] = ONE;
                m
            }
            GateKind::CPhase(t) => {
                let mut m = CMatrix::identity(4, 4);
                m[(3, 3)] = C64::from_polar(1.0, *t);
                m
            }
            GateKind::Swap => {
                let mut m = CMatrix::zeros(4, 4);
                m[(0, 0)] = ONE;
                m[(1, 2)] = ONE;
                m[(2, 1)] = ONE;
                m[(3, 3)] = ONE;
                m
            }
            GateKind::Unitary { matrix, .. } => (**matrix).clone(),
            GateKind::Measure | GateKind::Reset => return None,
        };
        Some(m)
    }
}

pub fn ry_matrix(theta: f64) -> CMatrix {
    let (s, co) = (theta / 2.0).sin_cos();
    from_rows(2, &[c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0)])
}

pub fn rz_matrix(theta: f64) -> CMatrix {
    from_rows(
        2,
        &[
            C64::from_polar(1.0, -theta / 2.0),
            ZERO,
            ZERO,
            C64::from_polar(1.0, theta / 2.0),
        ],
    )
}

/// Pauli-Y, used by channel construction.
pub fn pauli_y() -> CMatrix {
    from_rows(2, &[ZERO, -I, I, ZERO])
}

pub fn pauli_z() -> CMatrix {
    from_rows(2, &[ONE, ZERO, ZERO, -ONE])
}

/// A gate instance: a kind applied to `qubits`, conditioned on every qubit
/// in `controls` being `|1⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    pub controls: Vec<usize>,
}

impl Gate {
    pub fn new(kind: GateKind, qubits: Vec<usize>) -> Self {
        Gate {
            kind,
            qubits,
            controls: Vec::new(),
        }
    }

    pub fn unitary(matrix: CMatrix, qubits: Vec<usize>, label: impl Into<String>) -> Self {
        Gate::new(
            GateKind::Unitary {
                matrix: Arc::new(matrix),
                label: label.into(),
            },
            qubits,
        )
    }

    /// Controls followed by the kind's own qubits; the order used by
    /// [`Gate::full_matrix`].
    pub fn support(&self) -> Vec<usize> {
        let mut all = self.controls.clone();
        all.extend_from_slice(&self.qubits);
        all
    }

    pub fn max_qubit(&self) -> Option<usize> {
        self.qubits.iter().chain(&self.controls).copied().max()
    }

    pub fn is_unitary(&self) -> bool {
        self.kind.is_unitary()
    }

    /// Structural checks against a circuit width.
    pub fn validate(&self, width: usize) -> Result<()> {
        if let Some(k) = self.kind.arity() {
            if self.qubits.len() != k {
                return Err(Error::invalid(format!(
                    "{} expects {k} qubits, got {}",
                    self.kind.name(),
                    self.qubits.len()
                )));
            }
        }
        if let GateKind::Unitary { matrix, .. } = &self.kind {
            if matrix.nrows() != 1 << self.qubits.len() || !matrix.is_square() {
                return Err(Error::invalid(format!(
                    "unitary of shape {:?} on {} qubits",
                    matrix.shape(),
                    self.qubits.len()
                )));
            }
        }
        if !self.kind.is_unitary() && !self.controls.is_empty() {
            return Err(Error::Unsupported(format!(
                "controlled {}",
                self.kind.name()
            )));
        }
        let support = self.support();
        for (i, &q) in support.iter().enumerate() {
            if q >= width {
                return Err(Error::QubitOutOfRange { qubit: q, width });
            }
            if support[..i].contains(&q) {
                return Err(Error::invalid(format!(
                    "qubit {q} used twice by {}",
                    self.kind.name()
                )));
            }
        }
        Ok(())
    }

    /// Adds a control qubit, folding X/CX into CX/CCX where possible.
    pub fn controlled(&self, control: usize) -> Gate {
        match (&self.kind, self.controls.is_empty()) {
            (GateKind::X, true) => Gate::new(GateKind::CX, vec![control, self.qubits[0]]),
            (GateKind::CX, true) => Gate::new(
                GateKind::CCX,
                vec![control, self.qubits[0], self.qubits[1]],
            ),
            _ => {
                let mut g = self.clone();
                g.controls.insert(0, control);
                g
            }
        }
    }

    /// Kernel form: matrix on `targets`, conditioned on `controls`.
    pub(crate) fn kernel_form(&self) -> Option<(Vec<C64>, Vec<usize>, Vec<usize>)> {
        let mut controls = self.controls.clone();
        let (m, targets) = match &self.kind {
            GateKind::CX => {
                controls.push(self.qubits[0]);
                (GateKind::X.matrix()?, vec![self.qubits[1]])
            }
            GateKind::CCX => {
                controls.extend_from_slice(&self.qubits[..2]);
                (GateKind::X.matrix()?, vec![self.qubits[2]])
            }
            GateKind::CPhase(t) => {
                controls.push(self.qubits[0]);
                let mut m = CMatrix::identity(2, 2);
                m[(1, 1)] = C64::from_polar(1.0, *t);
                (m, vec![self.qubits[1]])
            }
            kind => (kind.matrix()?, self.qubits.clone()),
        };
        Some((crate::linalg::row_major(&m), targets, controls))
    }

    /// Dense matrix over [`Gate::support`], controls as leading bits.
    pub fn full_matrix(&self) -> Option<CMatrix> {
        let base = self.kind.matrix()?;
        let nc = self.controls.len();
        if nc == 0 {
            return Some(base);
        }
        let d = base.nrows();
        let total = d << nc;
        let mut m = CMatrix::identity(total, total);
        let off = total - d;
        m.view_mut((off, off), (d, d)).copy_from(&base);
        Some(m)
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match &self.kind {
            GateKind::Unitary { label, .. } if !label.is_empty() => label.as_str(),
            k => k.name(),
        };
        for _ in &self.controls {
            write!(f, "c")?;
        }
        write!(f, "{name}")?;
        if let Some(t) = self.kind.angle() {
            write!(f, "({t:.6})")?;
        }
        let qs: Vec<String> = self.support().iter().map(|q| q.to_string()).collect();
        write!(f, " {}", qs.join(","))
    }
}

impl Serialize for Gate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Gate", 5)?;
        st.serialize_field("kind", self.kind.name())?;
        st.serialize_field("qubits", &self.qubits)?;
        st.serialize_field("controls", &self.controls)?;
        st.serialize_field("angle", &self.kind.angle())?;
        match &self.kind {
            GateKind::Unitary { matrix, label } => {
                let rows: Vec<Vec<[f64; 2]>> = (0..matrix.nrows())
                    .map(|i| {
                        (0..matrix.ncols())
                            .map(|j| [matrix[(i, j)].re, matrix[(i, j)].im])
                            .collect()
                    })
                    .collect();
                st.serialize_field("label", label)?;
                st.serialize_field("matrix", &rows)?;
            }
            _ => {
                st.skip_field("label")?;
                st.skip_field("matrix")?;
            }
        }
        st.end()
    }
}
