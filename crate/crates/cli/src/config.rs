//! Run configuration. Frequencies are cyclic (GHz or MHz), times in µs or
//! ns as named. Every section is optional and defaults to the reference
//! link; unknown keys are rejected.

use std::path::Path;

use anyhow::Result;
use qlink::cascade::{CascadeScenario, ChannelParams, DeviceParams, Mechanisms};
use qlink::design::{uniform_grid, DesignObjectiveSpec, DeviceDesign, GEffModel, MonteCarloSpec, Qubit};
use qlink::resonator::CoupledResonatorParams;
use qlink::tomo::ReadoutModel;
use qlink::units::{ghz, mhz, to_ghz, to_mhz, us};
use serde::{Deserialize, Serialize};

/// Configuration bundled with the binary; identical to `configs/default.toml`.
pub const DEFAULT_CONFIG: &str = include_str!("../configs/default.toml");

/// Malformed or schema-violating configuration.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct SchemaError(pub String);

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub devices: Devices,
    pub channel: Channel,
    pub waveform: Waveform,
    pub protocol: ProtocolConfig,
    pub sweep: Sweep,
    pub tomography: Tomography,
    pub design: Design,
    pub monte_carlo: MonteCarlo,
    pub sensitivity: Sensitivity,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, SchemaError> {
        toml::from_str(text).map_err(|e| SchemaError(e.to_string()))
    }

    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::from_toml(DEFAULT_CONFIG)?),
            Some(p) => {
                let text =
                    std::fs::read_to_string(p).map_err(|e| SchemaError(format!("cannot read {}: {e}", p.display())))?;
                Ok(Self::from_toml(&text)?)
            }
        }
    }

    /// Canonical TOML text of the resolved configuration.
    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Replaces every seed in the configuration.
    pub fn override_seed(&mut self, seed: u64) {
        self.tomography.seed = seed;
        self.monte_carlo.seed = seed;
    }

    pub fn scenario(&self) -> Result<CascadeScenario> {
        let w = &self.waveform;
        Ok(CascadeScenario {
            sender: self.devices.sender.params()?,
            receiver: self.devices.receiver.params()?,
            channel: ChannelParams::new(self.channel.loss, self.channel.absorption_efficiency)?,
            mechanisms: Mechanisms {
                relaxation: self.protocol.relaxation,
                dephasing: self.protocol.dephasing,
            },
            kappa_ph: mhz(w.kappa_ph_mhz),
            window: w.window,
            samples: w.samples,
            delay: w.delay_ns,
            output_step: w.output_step_ns,
        })
    }
}

/// Sender and receiver node parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Devices {
    pub sender: Device,
    pub receiver: Device,
}

impl Default for Devices {
    fn default() -> Self {
        let s = CascadeScenario::reference();
        Self {
            sender: Device::from_params(&s.sender),
            receiver: Device::from_params(&s.receiver),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Device {
    pub alpha_mhz: f64,
    pub kappa_mhz: f64,
    pub t1_ge_us: f64,
    pub t1_ef_us: f64,
    pub t2_ge_us: f64,
    pub t2_ef_us: f64,
}

impl Device {
    fn from_params(d: &DeviceParams) -> Self {
        Self {
            alpha_mhz: to_mhz(d.alpha),
            kappa_mhz: to_mhz(d.kappa),
            t1_ge_us: d.t1_ge * 1e-3,
            t1_ef_us: d.t1_ef * 1e-3,
            t2_ge_us: d.t2_ge * 1e-3,
            t2_ef_us: d.t2_ef * 1e-3,
        }
    }

    fn params(&self) -> Result<DeviceParams> {
        Ok(DeviceParams::new(
            mhz(self.alpha_mhz),
            mhz(self.kappa_mhz),
            us(self.t1_ge_us),
            us(self.t1_ef_us),
            us(self.t2_ge_us),
            us(self.t2_ef_us),
        )?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Channel {
    pub loss: f64,
    pub absorption_efficiency: f64,
}

impl Default for Channel {
    fn default() -> Self {
        let c = CascadeScenario::reference().channel;
        Self {
            loss: c.loss,
            absorption_efficiency: c.absorption_efficiency,
        }
    }
}

/// Photon shape and simulation grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Waveform {
    pub kappa_ph_mhz: f64,
    /// Half window in units of `1/κ_ph`.
    pub window: f64,
    pub samples: usize,
    pub delay_ns: f64,
    pub output_step_ns: f64,
}

impl Default for Waveform {
    fn default() -> Self {
        let s = CascadeScenario::reference();
        Self {
            kappa_ph_mhz: to_mhz(s.kappa_ph),
            window: s.window,
            samples: s.samples,
            delay_ns: s.delay,
            output_step_ns: s.output_step,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BudgetProtocol {
    Transfer,
    Bell,
}

/// Decoherence switches and the protocol decomposed by `budget`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    pub relaxation: bool,
    pub dephasing: bool,
    pub budget: BudgetProtocol,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            relaxation: true,
            dephasing: true,
            budget: BudgetProtocol::Transfer,
        }
    }
}

/// Inclusive uniform grid in MHz.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    fn new(start: f64, stop: f64, step: f64) -> Self {
        Self { start, stop, step }
    }

    fn angular(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0) || !(self.stop >= self.start) || !self.start.is_finite() || !self.stop.is_finite() {
            return Err(SchemaError(format!(
                "grid {}..{} step {} is not increasing",
                self.start, self.stop, self.step
            ))
            .into());
        }
        Ok(uniform_grid(self.start, self.stop, self.step)
            .into_iter()
            .map(mhz)
            .collect())
    }
}

/// Single transfer resonator for `gamma-f`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sweep {
    pub omega_r_ghz: f64,
    pub omega_f_ghz: f64,
    pub j_mhz: f64,
    pub kappa_mhz: f64,
    pub g_mhz: f64,
    pub g_eff_mhz: f64,
    pub photon_mhz: Grid,
}

impl Default for Sweep {
    fn default() -> Self {
        Self {
            omega_r_ghz: 9.5,
            omega_f_ghz: 9.5,
            j_mhz: 50.0,
            kappa_mhz: 120.0,
            g_mhz: 220.0,
            g_eff_mhz: 10.0,
            photon_mhz: Grid::new(9100.0, 9900.0, 1.0),
        }
    }
}

impl Sweep {
    pub fn resonator(&self) -> Result<CoupledResonatorParams> {
        Ok(CoupledResonatorParams::from_cyclic(
            self.omega_r_ghz,
            self.omega_f_ghz,
            self.j_mhz,
            self.kappa_mhz,
            self.g_mhz,
        )?)
    }

    pub fn photon_grid(&self) -> Result<Vec<f64>> {
        self.photon_mhz.angular()
    }
}

/// Finite-shot tomography with a triangular IQ readout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tomography {
    pub enabled: bool,
    pub shots: usize,
    pub calibration_shots: usize,
    pub seed: u64,
    /// Distance between blob centres in units of the blob width.
    pub separation: f64,
    pub sigma: f64,
}

impl Default for Tomography {
    fn default() -> Self {
        Self {
            enabled: true,
            shots: 100_000,
            calibration_shots: 20_000,
            seed: 0,
            separation: 5.0,
            sigma: 1.0,
        }
    }
}

impl Tomography {
    pub fn readout(&self) -> ReadoutModel {
        ReadoutModel::triangle(self.separation, self.sigma)
    }
}

/// Bandwidth objective over a `κ`–`J` grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Design {
    pub omega_r_ghz: f64,
    pub omega_f_ghz: f64,
    pub g_mhz: f64,
    pub drive_mhz: f64,
    pub qubit_ghz: f64,
    pub alpha_mhz: f64,
    pub threshold_mhz: f64,
    pub kappa_mhz: Grid,
    pub j_mhz: Grid,
    pub photon_mhz: Grid,
    pub g_eff_model: GEffModel,
}

impl Default for Design {
    fn default() -> Self {
        let r = DesignObjectiveSpec::reference();
        Self {
            omega_r_ghz: to_ghz(r.omega_r),
            omega_f_ghz: to_ghz(r.omega_f),
            g_mhz: to_mhz(r.g),
            drive_mhz: to_mhz(r.drive),
            qubit_ghz: to_ghz(r.qubit.omega_eg),
            alpha_mhz: to_mhz(r.qubit.alpha),
            threshold_mhz: to_mhz(r.threshold),
            kappa_mhz: Grid::new(40.0, 200.0, 5.0),
            j_mhz: Grid::new(20.0, 100.0, 5.0),
            photon_mhz: Grid::new(9100.0, 9900.0, 1.0),
            g_eff_model: r.g_eff_model,
        }
    }
}

impl Design {
    pub fn spec(&self) -> Result<DesignObjectiveSpec> {
        let spec = DesignObjectiveSpec {
            omega_r: ghz(self.omega_r_ghz),
            omega_f: ghz(self.omega_f_ghz),
            g: mhz(self.g_mhz),
            drive: mhz(self.drive_mhz),
            qubit: Qubit {
                omega_eg: ghz(self.qubit_ghz),
                alpha: mhz(self.alpha_mhz),
            },
            threshold: mhz(self.threshold_mhz),
            kappas: self.kappa_mhz.angular()?,
            js: self.j_mhz.angular()?,
            freq_grid: self.photon_mhz.angular()?,
            g_eff_model: self.g_eff_model,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Nominal device for the Monte Carlo study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NominalDevice {
    pub omega_r_ghz: f64,
    pub omega_f_ghz: f64,
    pub j_mhz: f64,
    pub kappa_mhz: f64,
    pub g_mhz: f64,
    pub qubit_ghz: f64,
    pub alpha_mhz: f64,
}

impl NominalDevice {
    fn from_design(d: &DeviceDesign) -> Self {
        let r = &d.resonator;
        Self {
            omega_r_ghz: to_ghz(r.omega_r),
            omega_f_ghz: to_ghz(r.omega_f),
            j_mhz: to_mhz(r.j),
            kappa_mhz: to_mhz(r.kappa),
            g_mhz: to_mhz(r.g),
            qubit_ghz: to_ghz(d.qubit.omega_eg),
            alpha_mhz: to_mhz(d.qubit.alpha),
        }
    }

    fn design(&self) -> Result<DeviceDesign> {
        Ok(DeviceDesign::from_cyclic(
            self.omega_r_ghz,
            self.omega_f_ghz,
            self.j_mhz,
            self.kappa_mhz,
            self.g_mhz,
            self.qubit_ghz,
            self.alpha_mhz,
        )?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarlo {
    pub samples: usize,
    pub seed: u64,
    pub sigma_inner_mhz: f64,
    pub sigma_outer_mhz: f64,
    pub rel_sigma_kappa: f64,
    pub rel_sigma_j: f64,
    pub threshold_mhz: f64,
    pub drive_cap_mhz: f64,
    pub photon_mhz: Grid,
    pub g_eff_model: GEffModel,
    pub sender: NominalDevice,
    pub receiver: NominalDevice,
}

impl Default for MonteCarlo {
    fn default() -> Self {
        let r = MonteCarloSpec::reference();
        Self {
            samples: r.samples,
            seed: r.seed,
            sigma_inner_mhz: to_mhz(r.sigma_inner),
            sigma_outer_mhz: to_mhz(r.sigma_outer),
            rel_sigma_kappa: r.rel_sigma_kappa,
            rel_sigma_j: r.rel_sigma_j,
            threshold_mhz: to_mhz(r.threshold),
            drive_cap_mhz: to_mhz(r.drive_cap),
            photon_mhz: Grid::new(9000.0, 9800.0, 1.0),
            g_eff_model: r.g_eff_model,
            sender: NominalDevice::from_design(&r.sender),
            receiver: NominalDevice::from_design(&r.receiver),
        }
    }
}

impl MonteCarlo {
    pub fn spec(&self) -> Result<MonteCarloSpec> {
        let spec = MonteCarloSpec {
            sender: self.sender.design()?,
            receiver: self.receiver.design()?,
            sigma_inner: mhz(self.sigma_inner_mhz),
            sigma_outer: mhz(self.sigma_outer_mhz),
            rel_sigma_kappa: self.rel_sigma_kappa,
            rel_sigma_j: self.rel_sigma_j,
            samples: self.samples,
            threshold: mhz(self.threshold_mhz),
            drive_cap: mhz(self.drive_cap_mhz),
            freq_grid: self.photon_mhz.angular()?,
            g_eff_model: self.g_eff_model,
            seed: self.seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Relative spreads of `J` (rows) and `κ` (columns) for `sensitivity`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sensitivity {
    pub rel_j: Vec<f64>,
    pub rel_kappa: Vec<f64>,
}

impl Default for Sensitivity {
    fn default() -> Self {
        let g = vec![0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5];
        Self {
            rel_j: g.clone(),
            rel_kappa: g,
        }
    }
}
