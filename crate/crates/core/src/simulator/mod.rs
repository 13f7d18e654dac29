//! Gate-level simulation: statevector and density-matrix engines and
//! finite-shot sampling.

pub mod circuit;
pub mod density;
pub mod gate;
mod kernel;
pub mod sampling;
pub mod statevector;

pub use circuit::{Circuit, Register};
pub use density::{run_density, run_density_with_cap, DensityMatrix, DENSITY_CAP};
pub use gate::{Gate, GateKind};
pub use sampling::{expectation_z, sample, BornState, ConfusionMatrix, ShotResult};
pub use statevector::{run_statevector, run_statevector_with_cap, StateVector, STATEVECTOR_CAP};
