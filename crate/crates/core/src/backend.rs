//! Execution engines behind the energy estimators: ideal statevector
//! simulation, or density-matrix simulation of the transpiled circuit under
//! a device noise model.

use std::collections::HashMap;
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};
use crate::noise::{CalibrationSnapshot, NoiseModel};
use crate::simulator::sampling::apply_readout;
use crate::simulator::{run_density, run_statevector, BornState, Circuit, DensityMatrix};
use crate::transpiler::{transpile_cached, DeviceTarget, LayoutCache, Transpiled};

/// State prepared by a circuit, in logical qubit order.
#[derive(Clone, Debug)]
pub enum PreparedState {
    Pure(Vec<C64>),
    Mixed(DensityMatrix),
}

impl PreparedState {
    /// `|⟨ψ|φ⟩|²` for a pure state, `⟨ψ|ρ|ψ⟩` for a mixed one.
    pub fn fidelity_with(&self, psi: &[C64]) -> Result<f64> {
        match self {
            PreparedState::Pure(phi) => {
                if phi.len() != psi.len() {
                    return Err(Error::invalid("states differ in dimension"));
                }
                Ok(crate::linalg::inner(psi, phi).norm_sqr())
            }
            PreparedState::Mixed(rho) => rho.fidelity_with_pure(psi),
        }
    }
}

/// Something that runs circuits and reports measured-bit statistics.
pub trait Backend: Send + Sync {
    fn label(&self) -> String;

    /// Distribution of the bits read from `qubits` (first = most
    /// significant) at the end of `circuit`, readout error included.
    fn distribution(&self, circuit: &Circuit, qubits: &[usize]) -> Result<Vec<f64>>;

    /// State left by `circuit` (measurements ignored).
    fn prepare(&self, circuit: &Circuit) -> Result<PreparedState>;

    fn is_noisy(&self) -> bool {
        false
    }
}

/// Noise-free statevector simulation.
#[derive(Clone, Copy, Debug, Default)]
pub struct IdealBackend;

impl Backend for IdealBackend {
    fn label(&self) -> String {
        "statevector".into()
    }

    fn distribution(&self, circuit: &Circuit, qubits: &[usize]) -> Result<Vec<f64>> {
        run_statevector(&circuit.without_measurements())?.marginal(qubits)
    }

    fn prepare(&self, circuit: &Circuit) -> Result<PreparedState> {
        Ok(PreparedState::Pure(
            run_statevector(&circuit.without_measurements())?.into_amplitudes(),
        ))
    }
}

/// Density-matrix simulation on a calibrated device: circuits are
/// transpiled onto a connected region, every basis gate is followed by its
/// calibrated channel and readout confusion is applied to the measured bits.
pub struct NoisyBackend {
    name: String,
    target: DeviceTarget,
    noise: NoiseModel,
    layout: Option<Vec<usize>>,
    regions: Mutex<HashMap<usize, Vec<usize>>>,
    placements: LayoutCache,
}

impl NoisyBackend {
    pub fn new(snapshot: &CalibrationSnapshot) -> Result<Self> {
        Ok(NoisyBackend {
            name: snapshot.name.clone(),
            target: DeviceTarget::from_snapshot(snapshot)?,
            noise: NoiseModel::from_snapshot(snapshot)?,
            layout: None,
            regions: Mutex::new(HashMap::new()),
            placements: LayoutCache::new(),
        })
    }

    /// Places logical qubit `l` of every circuit on `layout[l]`; circuits
    /// narrower than the layout use its leading entries.
    pub fn with_layout(mut self, layout: Vec<usize>) -> Result<Self> {
        for w in 1..=layout.len() {
            let sub = self.target.restrict(&layout[..w])?;
            if !sub.is_connected() {
                return Err(Error::Disconnected(format!(
                    "layout prefix {:?} is not connected",
                    &layout[..w]
                )));
            }
        }
        self.layout = Some(layout);
        Ok(self)
    }

    pub fn with_reset_error(mut self, p: f64) -> Result<Self> {
        self.noise = self.noise.with_reset_error(p)?;
        Ok(self)
    }

    pub fn target(&self) -> &DeviceTarget {
        &self.target
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    /// Physical region used for circuits of `width` qubits.
    pub fn region(&self, width: usize) -> Result<Vec<usize>> {
        if let Some(l) = &self.layout {
            if width > l.len() {
                return Err(Error::invalid(format!(
                    "layout of {} qubits cannot host a {width}-qubit circuit",
                    l.len()
                )));
            }
            return Ok(l[..width].to_vec());
        }
        let mut cache = self.regions.lock().expect("region cache");
        if let Some(r) = cache.get(&width) {
            return Ok(r.clone());
        }
        let r = self.target.noise_aware_region(width, &self.noise)?;
        cache.insert(width, r.clone());
        Ok(r)
    }

    pub fn transpile(&self, circuit: &Circuit) -> Result<Transpiled> {
        let region = self.region(circuit.width())?;
        transpile_cached(circuit, &self.target, Some(&region), Some(&self.noise), Some(&self.placements))
    }

    fn simulate(&self, circuit: &Circuit) -> Result<(Transpiled, NoiseModel, DensityMatrix)> {
        let t = self.transpile(&circuit.without_measurements())?;
        let local = self.noise.restrict(&t.region)?;
        let rho = run_density(&t.circuit, Some(&local))?;
        Ok((t, local, rho))
    }
}

impl Backend for NoisyBackend {
    fn label(&self) -> String {
        format!("density:{}", self.name)
    }

    fn distribution(&self, circuit: &Circuit, qubits: &[usize]) -> Result<Vec<f64>> {
        let (t, local, rho) = self.simulate(circuit)?;
        let mapped: Vec<usize> = qubits
            .iter()
            .map(|&q| t.final_layout.get(q).copied())
            .collect::<Option<_>>()
            .ok_or_else(|| Error::invalid("measured qubit outside the circuit"))?;
        let dist = rho.marginal(&mapped)?;
        Ok(apply_readout(&dist, &local.readout_for(&mapped)))
    }

    fn prepare(&self, circuit: &Circuit) -> Result<PreparedState> {
        let (t, _, rho) = self.simulate(circuit)?;
        let w = circuit.width();
        let p = rho.width();
        let index = |x: usize| {
            let mut idx = 0usize;
            for (l, &q) in t.final_layout.iter().enumerate() {
                if x >> (w - 1 - l) & 1 == 1 {
                    idx |= 1 << (p - 1 - q);
                }
            }
            idx
        };
        let dim = 1 << w;
        let m = CMatrix::from_fn(dim, dim, |r, c| rho.entry(index(r), index(c)));
        Ok(PreparedState::Mixed(DensityMatrix::from_matrix(&m)?))
    }

    fn is_noisy(&self) -> bool {
        true
    }
}
