use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const KOLKATA_LIKE: &str = include_str!("../../data/kolkata_like.json");
const MUMBAI_LIKE: &str = include_str!("../../data/mumbai_like.json");

/// Names accepted by [`load_calibration`] with a `bundled:` prefix.
pub const BUNDLED: [&str; 2] = ["kolkata-like", "mumbai-like"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Readout {
    pub p01: f64,
    pub p10: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitCalibration {
    pub t1_us: f64,
    pub t2_us: f64,
    pub readout: Readout,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateCalibration {
    pub name: String,
    pub qubits: Vec<usize>,
    pub duration_ns: f64,
    pub error: f64,
}

/// Device calibration data: relaxation times, gate durations and errors,
/// readout confusion, coupling map and basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSnapshot {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub synthetic: bool,
    #[serde(default)]
    pub timestamp: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub qubits: Vec<QubitCalibration>,
    pub gates: Vec<GateCalibration>,
    pub coupling: Vec<[usize; 2]>,
    pub basis: Vec<String>,
}

impl CalibrationSnapshot {
    pub fn from_json(text: &str) -> Result<Self> {
        let snap: CalibrationSnapshot =
            serde_json::from_str(text).map_err(|e| Error::calibration("<document>", e.to_string()))?;
        snap.validate()?;
        Ok(snap)
    }

    pub fn bundled(name: &str) -> Result<Self> {
        let text = match name {
            "kolkata-like" => KOLKATA_LIKE,
            "mumbai-like" => MUMBAI_LIKE,
            other => {
                return Err(Error::calibration(
                    "<name>",
                    format!("no bundled snapshot `{other}` (have {BUNDLED:?})"),
                ))
            }
        };
        Self::from_json(text)
    }

    pub fn num_qubits(&self) -> usize {
        self.qubits.len()
    }

    /// Checks the physical invariants, naming the first offending field.
    pub fn validate(&self) -> Result<()> {
        if self.qubits.is_empty() {
            return Err(Error::calibration("qubits", "no qubits"));
        }
        let nq = self.qubits.len();
        for (i, q) in self.qubits.iter().enumerate() {
            if !(q.t1_us > 0.0 && q.t1_us.is_finite()) {
                return Err(Error::calibration(format!("qubits[{i}].t1_us"), format!("{} must be positive", q.t1_us)));
            }
            if !(q.t2_us > 0.0 && q.t2_us.is_finite()) {
                return Err(Error::calibration(format!("qubits[{i}].t2_us"), format!("{} must be positive", q.t2_us)));
            }
            if q.t2_us > 2.0 * q.t1_us {
                return Err(Error::calibration(
                    format!("qubits[{i}].t2_us"),
                    format!("T2={} exceeds 2·T1={}", q.t2_us, 2.0 * q.t1_us),
                ));
            }
            for (f, p) in [("p01", q.readout.p01), ("p10", q.readout.p10)] {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::calibration(format!("qubits[{i}].readout.{f}"), format!("{p} outside [0, 1]")));
                }
            }
        }
        for (i, g) in self.gates.iter().enumerate() {
            if g.qubits.is_empty() || g.qubits.iter().any(|&q| q >= nq) {
                return Err(Error::calibration(format!("gates[{i}].qubits"), format!("{:?} not on a {nq}-qubit device", g.qubits)));
            }
            if !(0.0..1.0).contains(&g.error) {
                return Err(Error::calibration(format!("gates[{i}].error"), format!("{} outside [0, 1)", g.error)));
            }
            if !(g.duration_ns >= 0.0 && g.duration_ns.is_finite()) {
                return Err(Error::calibration(format!("gates[{i}].duration_ns"), format!("{} must be non-negative", g.duration_ns)));
            }
            if !self.basis.iter().any(|b| b == &g.name) {
                return Err(Error::calibration(format!("gates[{i}].name"), format!("`{}` is not in the basis", g.name)));
            }
        }
        for (i, e) in self.coupling.iter().enumerate() {
            if e[0] >= nq || e[1] >= nq || e[0] == e[1] {
                return Err(Error::calibration(format!("coupling[{i}]"), format!("{e:?} invalid on {nq} qubits")));
            }
        }
        Ok(())
    }

    pub fn gate(&self, name: &str, qubits: &[usize]) -> Option<&GateCalibration> {
        self.gates.iter().find(|g| g.name == name && g.qubits == qubits)
    }

    pub fn mean_t1_us(&self) -> f64 {
        mean(self.qubits.iter().map(|q| q.t1_us))
    }

    pub fn mean_t2_us(&self) -> f64 {
        mean(self.qubits.iter().map(|q| q.t2_us))
    }

    /// Mean error of the calibrated gates called `name`.
    pub fn mean_gate_error(&self, name: &str) -> Option<f64> {
        let errs: Vec<f64> = self.gates.iter().filter(|g| g.name == name).map(|g| g.error).collect();
        (!errs.is_empty()).then(|| mean(errs.into_iter()))
    }
}

fn mean(it: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = it.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

/// Reads a snapshot from a JSON file, or a bundled one via `bundled:<name>`.
pub fn load_calibration(path: impl AsRef<Path>) -> Result<CalibrationSnapshot> {
    let path = path.as_ref();
    if let Some(name) = path.to_str().and_then(|s| s.strip_prefix("bundled:")) {
        return CalibrationSnapshot::bundled(name);
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    CalibrationSnapshot::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "qubits": [{"t1_us": 50.0, "t2_us": 40.0, "readout": {"p01": 0.02, "p10": 0.01}}],
        "gates": [{"name": "sx", "qubits": [0], "duration_ns": 35.0, "error": 3e-4}],
        "coupling": [],
        "basis": ["rz", "sx", "x", "cx"]
    }"#;

    #[test]
    fn bundled_snapshot_means() {
        let s = load_calibration("bundled:kolkata-like").unwrap();
        assert!(s.synthetic);
        assert_eq!(s.num_qubits(), 27);
        assert_eq!(s.coupling.len(), 28);
        assert!((s.mean_t1_us() - 100.0).abs() < 1e-9);
        assert!((s.mean_t2_us() - 85.0).abs() < 1e-9);
        assert!((s.mean_gate_error("sx").unwrap() - 2.625e-4).abs() < 1e-15);
        assert!((s.mean_gate_error("cx").unwrap() - 9.616e-3).abs() < 1e-13);
        assert!(load_calibration("bundled:mumbai-like").is_ok());
        assert!(load_calibration("bundled:nowhere").is_err());
    }

    #[test]
    fn minimal_snapshot_parses() {
        let s = CalibrationSnapshot::from_json(MINIMAL).unwrap();
        assert_eq!(s.num_qubits(), 1);
        assert!(s.gate("sx", &[0]).is_some());
    }

    #[test]
    fn t2_above_twice_t1_rejected_with_field() {
        let bad = MINIMAL.replace("\"t2_us\": 40.0", "\"t2_us\": 125.0");
        match CalibrationSnapshot::from_json(&bad) {
            Err(Error::Calibration { field, .. }) => assert_eq!(field, "qubits[0].t2_us"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_field_and_bad_json_rejected() {
        let bad = MINIMAL.replace("\"t1_us\": 50.0,", "");
        let err = CalibrationSnapshot::from_json(&bad).unwrap_err().to_string();
        assert!(err.contains("t1_us"), "{err}");
        assert!(CalibrationSnapshot::from_json("{").is_err());
        let bad = MINIMAL.replace("3e-4", "1.5");
        assert!(CalibrationSnapshot::from_json(&bad).is_err());
    }

    #[test]
    fn reads_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("snap.json");
        std::fs::write(&p, MINIMAL).unwrap();
        assert!(load_calibration(&p).is_ok());
        assert!(matches!(load_calibration(dir.path().join("none.json")), Err(Error::Io { .. })));
    }
}
