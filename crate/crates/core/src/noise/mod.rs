//! Calibration-driven noise: thermal relaxation plus calibrated
//! depolarizing noise per gate, and readout confusion.

pub mod calibration;
pub mod channel;
pub mod model;

pub use calibration::{load_calibration, CalibrationSnapshot, GateCalibration, QubitCalibration, Readout};
pub use channel::{Channel, CPTP_TOL};
pub use model::{depolarizing_for_error, GateNoise, NoiseModel};
pub use crate::simulator::ConfusionMatrix;
