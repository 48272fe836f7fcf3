//! Resonator design: bandwidth objective and `(κ, J)` sweeps, Monte Carlo
//! fabrication yield and sensitivity maps.

mod bandwidth;
mod yield_mc;

pub use bandwidth::{bandwidth, sweep_design, uniform_grid, Band, DesignMap, DesignObjectiveSpec, GEffModel, Qubit};
pub use yield_mc::{
    monte_carlo_yield, sensitivity_map, DeviceDesign, DeviceSample, MonteCarloSpec, RateCurve, SampleRecord,
    SensitivityMap, YieldReport,
};
