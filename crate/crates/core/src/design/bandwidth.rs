use rayon::prelude::*;
use serde::Serialize;

use crate::drive::{dress, first_order_g_eff_factor, DrivenQutritParams};
use crate::error::{invalid, Result};
use crate::resonator::{diagonalize, gamma_f, CoupledResonatorParams, EigenmodeDecomposition, EmissionContext};
use crate::units;

/// Mapping from drive amplitude to the effective `|f0⟩–|g1⟩` coupling.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GEffModel {
    /// `g (Ω/√2) α / |δ(δ − α)|`.
    #[default]
    FirstOrder,
    /// `g |⟨g̃|b|f̃⟩|` from exact diagonalisation of the driven qutrit.
    Dressed,
}

/// Transmon parameters entering the drive mapping, rad/ns.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Qubit {
    pub omega_eg: f64,
    pub alpha: f64,
}

impl GEffModel {
    /// `g_eff` for drive amplitude `omega` with the photon at `omega_ph`.
    pub fn g_eff(&self, g: f64, qubit: &Qubit, omega: f64, omega_ph: f64) -> Result<f64> {
        let p = DrivenQutritParams::for_photon(qubit.omega_eg, qubit.alpha, omega, omega_ph)?;
        Ok(g * match self {
            GEffModel::FirstOrder => first_order_g_eff_factor(&p),
            GEffModel::Dressed => dress(&p)?.g_eff_factor,
        })
    }
}

/// Uniform grid from `start` to `stop` inclusive with spacing close to `step`.
pub fn uniform_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step).round().max(0.0) as usize;
    (0..=n)
        .map(|k| start + (stop - start) * k as f64 / n.max(1) as f64)
        .collect()
}

/// Largest contiguous frequency interval with `Γ_f` above threshold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Band {
    /// Lower and upper edges, rad/ns, interpolated between grid points.
    pub lower: f64,
    pub upper: f64,
}

impl Band {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn width_mhz(&self) -> f64 {
        units::to_mhz(self.width())
    }
}

/// Finest accepted frequency-grid spacing for band edges, MHz.
pub const MAX_GRID_STEP_MHZ: f64 = 1.0;

pub(crate) fn check_grid(grid: &[f64], linewidth: f64) -> Result<()> {
    if grid.len() < 2 || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("frequency grid must be increasing with at least two points"));
    }
    let step = grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    if step > units::mhz(MAX_GRID_STEP_MHZ) * (1.0 + 1e-9) {
        return Err(invalid(format!(
            "frequency grid too coarse: {:.3} MHz spacing resolves band edges worse than {MAX_GRID_STEP_MHZ} MHz",
            units::to_mhz(step)
        )));
    }
    if grid[grid.len() - 1] - grid[0] < 3.0 * linewidth * (1.0 - 1e-9) {
        return Err(invalid("frequency grid must span at least three resonator linewidths"));
    }
    Ok(())
}

pub(crate) fn rate_curve(d: &EigenmodeDecomposition, g_eff: f64, grid: &[f64]) -> Vec<f64> {
    grid.iter()
        .map(|&w| {
            EmissionContext::new(d, g_eff, w)
                .and_then(|c| gamma_f(d, &c))
                .unwrap_or(0.0)
        })
        .collect()
}

/// Largest contiguous run of `rates ≥ threshold`, edges interpolated.
pub(crate) fn largest_band(grid: &[f64], rates: &[f64], threshold: f64) -> Option<Band> {
    let above: Vec<bool> = rates.iter().map(|r| *r >= threshold).collect();
    let edge = |i: usize, j: usize| {
        // Threshold crossing between samples i (below) and j (above) or reverse.
        let (r0, r1) = (rates[i], rates[j]);
        let t = ((threshold - r0) / (r1 - r0)).clamp(0.0, 1.0);
        grid[i] + t * (grid[j] - grid[i])
    };
    let mut best: Option<Band> = None;
    let mut k = 0;
    while k < grid.len() {
        if !above[k] {
            k += 1;
            continue;
        }
        let start = k;
        while k + 1 < grid.len() && above[k + 1] {
            k += 1;
        }
        let lower = if start == 0 { grid[0] } else { edge(start - 1, start) };
        let upper = if k + 1 == grid.len() { grid[k] } else { edge(k, k + 1) };
        let b = Band { lower, upper };
        if best.is_none_or(|x| b.width() > x.width()) {
            best = Some(b);
        }
        k += 1;
    }
    best
}

/// Largest contiguous band with `Γ_f ≥ threshold` (rates in 1/ns) on a
/// frequency grid in rad/ns, for a fixed `g_eff`. The ac Stark shift is
/// not included. Returns `None` if `Γ_f` never reaches the threshold.
pub fn bandwidth(p: &CoupledResonatorParams, g_eff: f64, threshold: f64, grid: &[f64]) -> Result<Option<Band>> {
    p.validate()?;
    if !(threshold > 0.0) {
        return Err(invalid("threshold must be positive"));
    }
    check_grid(grid, p.kappa)?;
    let d = diagonalize(p);
    Ok(largest_band(grid, &rate_curve(&d, g_eff, grid), threshold))
}

/// Bandwidth objective over a `(κ, J)` grid at fixed circuit and drive.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DesignObjectiveSpec {
    pub omega_r: f64,
    pub omega_f: f64,
    pub g: f64,
    /// Drive amplitude `Ω`, rad/ns.
    pub drive: f64,
    pub qubit: Qubit,
    /// `Γ_th` in 1/ns.
    pub threshold: f64,
    pub kappas: Vec<f64>,
    pub js: Vec<f64>,
    /// Photon-frequency grid (rad/ns).
    pub freq_grid: Vec<f64>,
    pub g_eff_model: GEffModel,
}

impl DesignObjectiveSpec {
    /// `ω_r/2π = ω_f/2π = 9.5 GHz`, `g/2π = 220 MHz`, `Ω/2π = 1 GHz`,
    /// `Γ_th/2π = 8 MHz`, κ over 40–200 MHz and J over 20–100 MHz in 5 MHz
    /// steps, photon grid 9.1–9.9 GHz at 1 MHz. The qubit is the reference
    /// sender transmon (7.982 GHz, α/2π = 356 MHz).
    pub fn reference() -> Self {
        Self {
            omega_r: units::ghz(9.5),
            omega_f: units::ghz(9.5),
            g: units::mhz(220.0),
            drive: units::ghz(1.0),
            qubit: Qubit {
                omega_eg: units::ghz(7.982),
                alpha: units::mhz(356.0),
            },
            threshold: units::mhz(8.0),
            kappas: uniform_grid(40.0, 200.0, 5.0).into_iter().map(units::mhz).collect(),
            js: uniform_grid(20.0, 100.0, 5.0).into_iter().map(units::mhz).collect(),
            freq_grid: uniform_grid(9100.0, 9900.0, 1.0).into_iter().map(units::mhz).collect(),
            g_eff_model: GEffModel::FirstOrder,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kappas.is_empty() || self.js.is_empty() || self.freq_grid.is_empty() {
            return Err(invalid("design grids must be non-empty"));
        }
        if !(self.threshold > 0.0) {
            return Err(invalid("threshold must be positive"));
        }
        Ok(())
    }

    /// `g_eff` with the drive set for a photon at the band centre.
    pub fn g_eff(&self, d: &EigenmodeDecomposition) -> Result<f64> {
        self.g_eff_model.g_eff(self.g, &self.qubit, self.drive, d.band_center())
    }
}

/// Bandwidth map over `(κ, J)` and its maximiser.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DesignMap {
    pub kappas_mhz: Vec<f64>,
    pub js_mhz: Vec<f64>,
    /// `widths_mhz[i][j]` for `κ_i`, `J_j`.
    pub widths_mhz: Vec<Vec<f64>>,
    pub best_kappa_mhz: f64,
    pub best_j_mhz: f64,
    pub best_width_mhz: f64,
}

/// Sweeps the bandwidth objective; ties go to the smaller κ, then the
/// smaller J.
pub fn sweep_design(spec: &DesignObjectiveSpec) -> Result<DesignMap> {
    spec.validate()?;
    let cells: Vec<(usize, usize)> = (0..spec.kappas.len())
        .flat_map(|i| (0..spec.js.len()).map(move |j| (i, j)))
        .collect();
    let widths: Vec<f64> = cells
        .par_iter()
        .map(|&(i, j)| {
            let p = CoupledResonatorParams::new(spec.omega_r, spec.omega_f, spec.js[j], spec.kappas[i], spec.g)?;
            let d = diagonalize(&p);
            let g_eff = spec.g_eff(&d)?;
            Ok(bandwidth(&p, g_eff, spec.threshold, &spec.freq_grid)?.map_or(0.0, |b| b.width_mhz()))
        })
        .collect::<Result<_>>()?;
    let nj = spec.js.len();
    let mut best = (0, 0, f64::NEG_INFINITY);
    for (k, &(i, j)) in cells.iter().enumerate() {
        if widths[k] > best.2 {
            best = (i, j, widths[k]);
        }
    }
    Ok(DesignMap {
        kappas_mhz: spec.kappas.iter().map(|k| units::to_mhz(*k)).collect(),
        js_mhz: spec.js.iter().map(|j| units::to_mhz(*j)).collect(),
        widths_mhz: widths.chunks(nj).map(|c| c.to_vec()).collect(),
        best_kappa_mhz: units::to_mhz(spec.kappas[best.0]),
        best_j_mhz: units::to_mhz(spec.js[best.1]),
        best_width_mhz: best.2,
    })
}
