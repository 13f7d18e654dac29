//! Reusable circuit builders: Toffoli decomposition, cyclic increment,
//! quantum Fourier transform and register layouts.

use std::f64::consts::PI;
use std::ops::Range;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::simulator::Circuit;

/// Qubit spans of a Hadamard-test circuit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RegisterLayout {
    pub width: usize,
    pub ancilla: usize,
    pub primary: Range<usize>,
    pub secondary: Option<Range<usize>>,
    pub tertiary: Option<Range<usize>>,
    pub adder: Option<Range<usize>>,
}

impl RegisterLayout {
    /// Ancilla, one `n`-qubit register and `n − 2` adder ancillas: `2n − 1`.
    pub fn kinetic(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("kinetic circuit needs n ≥ 2"));
        }
        Ok(RegisterLayout {
            width: 2 * n - 1,
            ancilla: 0,
            primary: 1..n + 1,
            secondary: None,
            tertiary: None,
            adder: Some(n + 1..2 * n - 1),
        })
    }

    /// Ancilla and two `n`-qubit registers: `2n + 1`.
    pub fn potential(n: usize) -> Result<Self> {
        check_n(n)?;
        Ok(RegisterLayout {
            width: 2 * n + 1,
            ancilla: 0,
            primary: 1..n + 1,
            secondary: Some(n + 1..2 * n + 1),
            tertiary: None,
            adder: None,
        })
    }

    /// Ancilla and three `n`-qubit registers: `3n + 1`.
    pub fn interaction(n: usize) -> Result<Self> {
        check_n(n)?;
        Ok(RegisterLayout {
            width: 3 * n + 1,
            ancilla: 0,
            primary: 1..n + 1,
            secondary: Some(n + 1..2 * n + 1),
            tertiary: Some(2 * n + 1..3 * n + 1),
            adder: None,
        })
    }

    /// Empty circuit of the layout's width with named registers.
    pub fn circuit(&self, name: &str) -> Circuit {
        let mut c = Circuit::named(self.width, name);
        let spans = [
            ("ancilla", Some(self.ancilla..self.ancilla + 1)),
            ("primary", Some(self.primary.clone())),
            ("secondary", self.secondary.clone()),
            ("tertiary", self.tertiary.clone()),
            ("adder", self.adder.clone()),
        ];
        for (name, span) in spans {
            if let Some(r) = span.filter(|r| !r.is_empty()) {
                c.add_register(name, r.start, r.len()).expect("disjoint by construction");
            }
        }
        c
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("register size must be at least 1"));
    }
    Ok(())
}

/// Appends the seven-CX Toffoli network over `{H, CX, RZ(±π/4)}`
/// (`T = RZ(π/4)` up to phase).
pub fn append_toffoli(c: &mut Circuit, c1: usize, c2: usize, t: usize) {
    let q = PI / 4.0;
    c.h(t)
        .cx(c2, t)
        .rz(-q, t)
        .cx(c1, t)
        .rz(q, t)
        .cx(c2, t)
        .rz(-q, t)
        .cx(c1, t)
        .rz(q, c2)
        .rz(q, t)
        .h(t)
        .cx(c1, c2)
        .rz(q, c1)
        .rz(-q, c2)
        .cx(c1, c2);
}

/// Toffoli decomposed into H, CX and RZ(±π/4); equals CCX up to a global
/// phase, controls on qubits 0 and 1.
pub fn toffoli_decomposed() -> Circuit {
    let mut c = Circuit::named(3, "toffoli");
    append_toffoli(&mut c, 0, 1, 2);
    c
}

/// Appends `|k⟩ → |k + 1 mod 2^n⟩` on `data` (first qubit most
/// significant), using `ancillas` (at least `n − 2`, returned to `|0⟩`) for
/// the carry prefix. With `control`, the increment happens only when the
/// control is set.
pub fn append_increment(
    c: &mut Circuit,
    data: &[usize],
    ancillas: &[usize],
    control: Option<usize>,
) -> Result<()> {
    let n = data.len();
    if n == 0 {
        return Err(Error::invalid("empty data register"));
    }
    if n >= 2 && ancillas.len() < n - 2 {
        return Err(Error::invalid(format!(
            "increment on {n} qubits needs {} ancillas, got {}",
            n - 2,
            ancillas.len()
        )));
    }
    // prefix(j) is set when every data bit below position j is 1 (and the
    // control holds); prefix(n−1) is the control itself.
    let prefix = |j: usize| -> Option<usize> {
        if j == n - 1 {
            control
        } else {
            Some(ancillas[n - 2 - j])
        }
    };
    let and_into = |c: &mut Circuit, src: Option<usize>, d: usize, target: usize| match src {
        Some(s) => {
            c.ccx(s, d, target);
        }
        None => {
            c.cx(d, target);
        }
    };
    if n >= 3 {
        for j in (1..=n - 2).rev() {
            and_into(c, prefix(j + 1), data[j + 1], prefix(j).unwrap());
        }
    }
    for j in 0..n.saturating_sub(1) {
        and_into(c, prefix(j + 1), data[j + 1], data[j]);
        if j + 2 < n {
            and_into(c, prefix(j + 2), data[j + 2], prefix(j + 1).unwrap());
        }
    }
    match control {
        Some(ctl) => c.cx(ctl, data[n - 1]),
        None => c.x(data[n - 1]),
    };
    Ok(())
}

/// Cyclic increment on qubits `0..n` with ancillas `n..2n−2`.
pub fn cyclic_adder(n: usize) -> Result<Circuit> {
    if n < 2 {
        return Err(Error::invalid("cyclic adder needs n ≥ 2"));
    }
    let mut c = Circuit::named(2 * n - 2, "cyclic-adder");
    c.add_register("data", 0, n)?;
    if n > 2 {
        c.add_register("ancilla", n, n - 2)?;
    }
    let data: Vec<usize> = (0..n).collect();
    let anc: Vec<usize> = (n..2 * n - 2).collect();
    append_increment(&mut c, &data, &anc, None)?;
    Ok(c)
}

/// Appends the QFT `|j⟩ → N^{-1/2} Σ_k e^{2πi jk/N} |k⟩` on `qubits`,
/// including the final bit-reversal swaps.
pub fn append_qft(c: &mut Circuit, qubits: &[usize]) {
    let n = qubits.len();
    for q in 0..n {
        c.h(qubits[q]);
        for m in q + 1..n {
            let angle = 2.0 * PI / (1u64 << (m - q + 1)) as f64;
            c.cphase(angle, qubits[m], qubits[q]);
        }
    }
    for q in 0..n / 2 {
        c.swap(qubits[q], qubits[n - 1 - q]);
    }
}

pub fn qft(n: usize) -> Result<Circuit> {
    check_n(n)?;
    let mut c = Circuit::named(n, "qft");
    append_qft(&mut c, &(0..n).collect::<Vec<_>>());
    Ok(c)
}

/// Every gate of `circuit` conditioned on `control`.
pub fn controlled(circuit: &Circuit, control: usize) -> Result<Circuit> {
    circuit.controlled(control)
}
