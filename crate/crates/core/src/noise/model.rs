use std::collections::HashMap;

use log::info;
use serde::Serialize;

use super::calibration::CalibrationSnapshot;
use super::channel::Channel;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::simulator::{ConfusionMatrix, Gate};

/// Depolarizing strength chosen for one calibrated gate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GateNoise {
    pub name: String,
    pub qubits: Vec<usize>,
    pub duration_ns: f64,
    pub error: f64,
    /// Average gate infidelity of the relaxation part alone.
    pub relaxation_infidelity: f64,
    pub depolarizing: f64,
    pub clamped: bool,
}

/// Per-gate channels and per-qubit readout errors for a device.
#[derive(Clone, Debug, Default)]
pub struct NoiseModel {
    num_qubits: usize,
    channels: HashMap<(String, Vec<usize>), Channel>,
    gates: Vec<GateNoise>,
    readout: Vec<ConfusionMatrix>,
    reset_error: Option<f64>,
}

/// Depolarizing parameter `p` such that relaxation (process fidelity
/// `f_relax`) followed by `p`-depolarizing on `d`-dimensional space has
/// average gate infidelity `error`; `None` when relaxation alone is worse.
pub fn depolarizing_for_error(error: f64, f_relax: f64, d: f64) -> Option<f64> {
    let f_target = ((d + 1.0) * (1.0 - error) - 1.0) / d;
    let p = (f_relax - f_target) / (f_relax - 1.0 / (d * d));
    (p >= 0.0).then_some(p)
}

impl NoiseModel {
    /// Noise-free model (ideal readout) on `num_qubits` qubits.
    pub fn ideal(num_qubits: usize) -> Self {
        NoiseModel {
            num_qubits,
            readout: vec![ConfusionMatrix::ideal(); num_qubits],
            ..Default::default()
        }
    }

    /// Thermal relaxation for the gate duration on every acted qubit,
    /// followed by depolarizing noise calibrated to the gate error.
    pub fn from_snapshot(snapshot: &CalibrationSnapshot) -> Result<Self> {
        snapshot.validate()?;
        let mut model = NoiseModel {
            num_qubits: snapshot.num_qubits(),
            readout: snapshot
                .qubits
                .iter()
                .map(|q| ConfusionMatrix::new(q.readout.p01, q.readout.p10))
                .collect::<Result<_>>()?,
            ..Default::default()
        };
        for g in &snapshot.gates {
            let tau_us = g.duration_ns * 1e-3;
            let mut relax: Option<Channel> = None;
            for &q in &g.qubits {
                let qc = &snapshot.qubits[q];
                let ch = Channel::thermal_relaxation(qc.t1_us, qc.t2_us, tau_us)?;
                relax = Some(match relax {
                    Some(r) => r.tensor(&ch),
                    None => ch,
                });
            }
            let relax = relax.expect("gate acts on at least one qubit");
            let k = g.qubits.len();
            let dim = 1usize << k;
            let d = dim as f64;
            let id = CMatrix::identity(dim, dim);
            let f_relax = relax.process_fidelity(&id);
            let relax_infid = 1.0 - (d * f_relax + 1.0) / (d + 1.0);
            let (p, clamped) = match depolarizing_for_error(g.error, f_relax, d) {
                Some(p) => (p.min(d * d / (d * d - 1.0)), false),
                None => {
                    info!(
                        "{} on {:?}: relaxation infidelity {:.3e} exceeds the reported error {:.3e}; depolarizing set to 0",
                        g.name, g.qubits, relax_infid, g.error
                    );
                    (0.0, true)
                }
            };
            let channel = Channel::depolarizing(p, k)?.then(&relax)?;
            model
                .channels
                .insert((g.name.clone(), g.qubits.clone()), channel);
            model.gates.push(GateNoise {
                name: g.name.clone(),
                qubits: g.qubits.clone(),
                duration_ns: g.duration_ns,
                error: g.error,
                relaxation_infidelity: relax_infid,
                depolarizing: p,
                clamped,
            });
        }
        Ok(model)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    /// Enables a bit flip with probability `p` on every qubit reset,
    /// including the initial one.
    pub fn with_reset_error(mut self, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(format!("reset error {p} outside [0, 1]")));
        }
        self.reset_error = (p > 0.0).then_some(p);
        Ok(self)
    }

    pub fn reset_error(&self) -> Option<f64> {
        self.reset_error
    }

    pub fn reset_channel(&self) -> Option<Channel> {
        self.reset_error.map(|p| Channel::bit_flip(p).expect("validated probability"))
    }

    /// Noise applied after `gate`, over `gate.support()`; `None` for gates
    /// without calibration data (virtual RZ, for instance).
    pub fn gate_channel(&self, gate: &Gate) -> Option<&Channel> {
        if !gate.controls.is_empty() {
            return None;
        }
        self.channels
            .get(&(gate.kind.name().to_string(), gate.qubits.clone()))
    }

    pub fn gate_noise(&self) -> &[GateNoise] {
        &self.gates
    }

    pub fn readout(&self, qubit: usize) -> ConfusionMatrix {
        self.readout.get(qubit).copied().unwrap_or_default()
    }

    pub fn readout_for(&self, qubits: &[usize]) -> Vec<ConfusionMatrix> {
        qubits.iter().map(|&q| self.readout(q)).collect()
    }

    /// Model over the physical qubits `physical`, relabelled `0..len`.
    pub fn restrict(&self, physical: &[usize]) -> Result<NoiseModel> {
        let local: HashMap<usize, usize> = physical
            .iter()
            .enumerate()
            .map(|(i, &p)| (p, i))
            .collect();
        if local.len() != physical.len() {
            return Err(Error::invalid("repeated qubit in restriction"));
        }
        if let Some(&p) = physical.iter().find(|&&p| p >= self.num_qubits) {
            return Err(Error::QubitOutOfRange {
                qubit: p,
                width: self.num_qubits,
            });
        }
        let map = |qs: &[usize]| qs.iter().map(|q| local.get(q).copied()).collect::<Option<Vec<_>>>();
        let mut out = NoiseModel {
            num_qubits: physical.len(),
            readout: physical.iter().map(|&p| self.readout(p)).collect(),
            reset_error: self.reset_error,
            ..Default::default()
        };
        for ((name, qs), ch) in &self.channels {
            if let Some(lq) = map(qs) {
                out.channels.insert((name.clone(), lq), ch.clone());
            }
        }
        for g in &self.gates {
            if let Some(lq) = map(&g.qubits) {
                out.gates.push(GateNoise {
                    qubits: lq,
                    ..g.clone()
                });
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::channel::CPTP_TOL;
    use crate::simulator::{Circuit, GateKind};

    #[test]
    fn every_bundled_channel_is_cptp_and_hits_error() {
        let snap = CalibrationSnapshot::bundled("kolkata-like").unwrap();
        let model = NoiseModel::from_snapshot(&snap).unwrap();
        for g in model.gate_noise() {
            let gate = if g.qubits.len() == 1 {
                Gate::new(GateKind::SX, g.qubits.clone())
            } else {
                Gate::new(GateKind::CX, g.qubits.clone())
            };
            let gate = Gate {
                kind: if g.name == "x" { GateKind::X } else { gate.kind },
                ..gate
            };
            let ch = model.gate_channel(&gate).unwrap();
            ch.check_cptp(CPTP_TOL).unwrap();
            if !g.clamped {
                let d = (1usize << g.qubits.len()) as f64;
                let id = CMatrix::identity(d as usize, d as usize);
                let infid = 1.0 - ch.average_gate_fidelity(&id);
                assert!((infid - g.error).abs() < 1e-12, "{g:?}");
            }
        }
    }

    #[test]
    fn clamps_when_relaxation_dominates() {
        let snap = CalibrationSnapshot::from_json(
            r#"{"qubits":[{"t1_us":1.0,"t2_us":1.0,"readout":{"p01":0,"p10":0}}],
                "gates":[{"name":"sx","qubits":[0],"duration_ns":500,"error":1e-4}],
                "coupling":[],"basis":["sx","rz"]}"#,
        )
        .unwrap();
        let model = NoiseModel::from_snapshot(&snap).unwrap();
        assert!(model.gate_noise()[0].clamped);
        assert_eq!(model.gate_noise()[0].depolarizing, 0.0);
    }

    #[test]
    fn rz_is_noise_free_and_restriction_relabels() {
        let snap = CalibrationSnapshot::bundled("kolkata-like").unwrap();
        let model = NoiseModel::from_snapshot(&snap).unwrap();
        assert!(model.gate_channel(&Gate::new(GateKind::RZ(0.3), vec![0])).is_none());
        let sub = model.restrict(&[4, 7, 10]).unwrap();
        assert_eq!(sub.num_qubits(), 3);
        assert!(sub.gate_channel(&Gate::new(GateKind::CX, vec![0, 1])).is_some());
        assert!(sub.gate_channel(&Gate::new(GateKind::CX, vec![1, 0])).is_some());
        assert!(sub.gate_channel(&Gate::new(GateKind::CX, vec![0, 2])).is_none());
        assert_eq!(sub.readout(1), model.readout(7));
    }

    #[test]
    fn heavy_depolarizing_on_x_mixes_qubit() {
        let snap = CalibrationSnapshot::from_json(
            r#"{"qubits":[{"t1_us":1e12,"t2_us":1e12,"readout":{"p01":0,"p10":0}}],
                "gates":[{"name":"x","qubits":[0],"duration_ns":0,"error":0.5}],
                "coupling":[],"basis":["x"]}"#,
        )
        .unwrap();
        let model = NoiseModel::from_snapshot(&snap).unwrap();
        assert!((model.gate_noise()[0].depolarizing - 1.0).abs() < 1e-9);
        let mut c = Circuit::new(1);
        c.x(0);
        let rho = crate::simulator::run_density(&c, Some(&model)).unwrap();
        assert!((rho.entry(0, 0).re - 0.5).abs() < 1e-9);
        assert!((rho.entry(1, 1).re - 0.5).abs() < 1e-9);
    }

    #[test]
    fn ideal_model_equals_pure_simulation() {
        let mut c = Circuit::new(2);
        c.h(0).cx(0, 1).sx(1);
        let model = NoiseModel::ideal(2);
        let a = crate::simulator::run_density(&c, Some(&model)).unwrap();
        let b = crate::simulator::run_density(&c, None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn reset_error_flips_initial_state() {
        let model = NoiseModel::ideal(1).with_reset_error(0.1).unwrap();
        let rho = crate::simulator::run_density(&Circuit::new(1), Some(&model)).unwrap();
        assert!((rho.entry(1, 1).re - 0.1).abs() < 1e-12);
    }
}
