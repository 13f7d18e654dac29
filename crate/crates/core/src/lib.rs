//! Variational ground-state search for the discretized nonlinear
//! Schrödinger equation, with circuit-level simulation, noise modelling and
//! classical reference solvers.

pub mod ansatz;
pub mod backend;
pub mod circuits;
pub mod direct;
pub mod driver;
pub mod error;
pub mod linalg;
pub mod mps;
pub mod noise;
pub mod optimizer;
pub mod problem;
pub mod qnpu;
pub mod reference;
pub mod rng;
pub mod simulator;
pub mod transpiler;

pub use ansatz::{AnsatzKind, AnsatzSpec};
pub use backend::{Backend, IdealBackend, NoisyBackend, PreparedState};
pub use direct::direct_energy;
pub use driver::{run_vqcfd, Experiment, ExperimentConfig, IterationRecord, RunTrace, Summary};
pub use error::{Error, Result};
pub use noise::{load_calibration, CalibrationSnapshot, NoiseModel};
pub use optimizer::{minimize, OptimizerConfig, OptimizeResult, StopReason};
pub use qnpu::{estimate_energy, Qnpu};
pub use reference::{imaginary_time_ground_state, GroundState, ImaginaryTimeConfig};
pub use transpiler::{transpile, DeviceTarget, Transpiled};
pub use problem::{classical_energy, EnergyBreakdown, EnergyMethod, GridProblem, Shots, WaveVector};
