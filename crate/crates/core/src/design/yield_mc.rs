use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use super::bandwidth::{check_grid, largest_band, rate_curve, uniform_grid, Band, GEffModel, Qubit};
use crate::error::{invalid, Result};
use crate::resonator::{diagonalize, CoupledResonatorParams, EigenmodeDecomposition};
use crate::units;

/// One transfer resonator with its transmon, angular units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DeviceDesign {
    pub resonator: CoupledResonatorParams,
    pub qubit: Qubit,
}

impl DeviceDesign {
    /// Frequencies in GHz, couplings, decay and anharmonicity in MHz.
    pub fn from_cyclic(
        omega_r_ghz: f64,
        omega_f_ghz: f64,
        j_mhz: f64,
        kappa_mhz: f64,
        g_mhz: f64,
        omega_eg_ghz: f64,
        alpha_mhz: f64,
    ) -> Result<Self> {
        Ok(Self {
            resonator: CoupledResonatorParams::from_cyclic(omega_r_ghz, omega_f_ghz, j_mhz, kappa_mhz, g_mhz)?,
            qubit: Qubit {
                omega_eg: units::ghz(omega_eg_ghz),
                alpha: units::mhz(alpha_mhz),
            },
        })
    }
}

/// Fabrication-variation study of a sender/receiver pair.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonteCarloSpec {
    pub sender: DeviceDesign,
    pub receiver: DeviceDesign,
    /// Standard deviation of the inner resonator frequency `ω_r`, rad/ns.
    pub sigma_inner: f64,
    /// Standard deviation of the outer resonator frequency `ω_f`, rad/ns.
    pub sigma_outer: f64,
    pub rel_sigma_kappa: f64,
    pub rel_sigma_j: f64,
    pub samples: usize,
    /// `Γ_th` in 1/ns.
    pub threshold: f64,
    /// Upper bound on the drive amplitude `Ω`, rad/ns.
    pub drive_cap: f64,
    /// Common photon-frequency grid, rad/ns.
    pub freq_grid: Vec<f64>,
    pub g_eff_model: GEffModel,
    pub seed: u64,
}

impl MonteCarloSpec {
    /// Measured device pair with σ = 10/20 MHz on `ω_r`/`ω_f`, 1% on κ and
    /// J, 2000 samples, `Γ_th/2π = 4 MHz`, `Ω/2π ≤ 750 MHz`, and a
    /// 9.0–9.8 GHz grid at 1 MHz.
    pub fn reference() -> Self {
        Self {
            sender: DeviceDesign::from_cyclic(9.393, 9.380, 44.0, 120.0, 159.0, 7.982, 356.0).expect("valid nominal"),
            receiver: DeviceDesign::from_cyclic(9.348, 9.341, 58.0, 137.0, 142.0, 8.199, 352.0).expect("valid nominal"),
            sigma_inner: units::mhz(10.0),
            sigma_outer: units::mhz(20.0),
            rel_sigma_kappa: 0.01,
            rel_sigma_j: 0.01,
            samples: 2000,
            threshold: units::mhz(4.0),
            drive_cap: units::mhz(750.0),
            freq_grid: uniform_grid(9000.0, 9800.0, 1.0).into_iter().map(units::mhz).collect(),
            g_eff_model: GEffModel::FirstOrder,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(invalid("Monte Carlo needs at least one sample"));
        }
        let sigmas = [
            self.sigma_inner,
            self.sigma_outer,
            self.rel_sigma_kappa,
            self.rel_sigma_j,
        ];
        if sigmas.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(invalid("sigmas must be finite and non-negative"));
        }
        if !(self.threshold > 0.0) || !(self.drive_cap >= 0.0) {
            return Err(invalid("threshold must be positive and the drive cap non-negative"));
        }
        self.sender.resonator.validate()?;
        self.receiver.resonator.validate()?;
        check_grid(
            &self.freq_grid,
            self.sender.resonator.kappa.max(self.receiver.resonator.kappa),
        )
    }
}

/// Outcome of one device in one sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DeviceSample {
    pub resonator: CoupledResonatorParams,
    /// Chosen drive amplitude, rad/ns.
    pub drive: f64,
    pub g_eff: f64,
    /// Largest above-threshold band, if any.
    pub band: Option<Band>,
}

/// Per-sample record.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SampleRecord {
    pub index: usize,
    /// `None` when a perturbed κ is non-positive.
    pub sender: Option<DeviceSample>,
    pub receiver: Option<DeviceSample>,
    pub matched: bool,
}

/// Mean and standard deviation of `Γ_f` over samples, 1/ns.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateCurve {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct YieldReport {
    pub matching_probability: f64,
    pub matches: usize,
    pub samples: usize,
    pub records: Vec<SampleRecord>,
    /// Photon-frequency grid, rad/ns.
    pub freq_grid: Vec<f64>,
    pub sender_curve: RateCurve,
    pub receiver_curve: RateCurve,
}

impl YieldReport {
    /// Binomial standard error `√(p(1−p)/N)`.
    pub fn standard_error(&self) -> f64 {
        let p = self.matching_probability;
        (p * (1.0 - p) / self.samples as f64).sqrt()
    }
}

/// Standard-normal draws per device, in the order `ω_r, ω_f, κ, J`.
type Draws = [f64; 4];

fn sample_draws(seed: u64, index: usize) -> [Draws; 2] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let mut d = [[0.0; 4]; 2];
    for dev in d.iter_mut() {
        for z in dev.iter_mut() {
            *z = StandardNormal.sample(&mut rng);
        }
    }
    d
}

/// Perturbed resonator; `None` if κ is not positive. A negative J is
/// folded onto `|J|`, which describes the same circuit.
fn perturb(spec: &MonteCarloSpec, nominal: &CoupledResonatorParams, z: &Draws) -> Option<CoupledResonatorParams> {
    let kappa = nominal.kappa * (1.0 + spec.rel_sigma_kappa * z[2]);
    if !(kappa > 0.0) {
        return None;
    }
    Some(CoupledResonatorParams {
        omega_r: nominal.omega_r + spec.sigma_inner * z[0],
        omega_f: nominal.omega_f + spec.sigma_outer * z[1],
        kappa,
        j: (nominal.j * (1.0 + spec.rel_sigma_j * z[3])).abs(),
        g: nominal.g,
    })
}

const DRIVE_BISECTIONS: usize = 60;

/// Largest `Ω ≤ cap` with `g_eff(Ω) < min(κ₋, κ₊)/4` at the band centre.
fn choose_drive(model: GEffModel, g: f64, qubit: &Qubit, d: &EigenmodeDecomposition, cap: f64) -> Result<(f64, f64)> {
    let limit = 0.25 * d.kappa_minus.min(d.kappa_plus);
    let wc = d.band_center();
    let geff = |om: f64| model.g_eff(g, qubit, om, wc);
    let at_cap = geff(cap)?;
    if at_cap < limit {
        return Ok((cap, at_cap));
    }
    let (mut lo, mut hi) = (0.0, cap);
    for _ in 0..DRIVE_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if geff(mid)? < limit {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, geff(lo)?))
}

struct DeviceEval {
    sample: DeviceSample,
    above: Vec<bool>,
    rates: Vec<f64>,
}

fn evaluate_device(spec: &MonteCarloSpec, dev: &DeviceDesign, z: &Draws) -> Result<Option<DeviceEval>> {
    let Some(p) = perturb(spec, &dev.resonator, z) else {
        return Ok(None);
    };
    let d = diagonalize(&p);
    let (drive, g_eff) = choose_drive(spec.g_eff_model, p.g, &dev.qubit, &d, spec.drive_cap)?;
    let rates = rate_curve(&d, g_eff, &spec.freq_grid);
    let above = rates.iter().map(|r| *r >= spec.threshold).collect();
    Ok(Some(DeviceEval {
        sample: DeviceSample {
            resonator: p,
            drive,
            g_eff,
            band: largest_band(&spec.freq_grid, &rates, spec.threshold),
        },
        above,
        rates,
    }))
}

fn run_sample(spec: &MonteCarloSpec, index: usize) -> Result<(SampleRecord, Option<Vec<f64>>, Option<Vec<f64>>)> {
    let z = sample_draws(spec.seed, index);
    let tx = evaluate_device(spec, &spec.sender, &z[0])?;
    let rx = evaluate_device(spec, &spec.receiver, &z[1])?;
    let matched = match (&tx, &rx) {
        (Some(a), Some(b)) => a.above.iter().zip(&b.above).any(|(x, y)| *x && *y),
        _ => false,
    };
    let record = SampleRecord {
        index,
        sender: tx.as_ref().map(|e| e.sample),
        receiver: rx.as_ref().map(|e| e.sample),
        matched,
    };
    Ok((record, tx.map(|e| e.rates), rx.map(|e| e.rates)))
}

fn mean_std<'a>(curves: impl Iterator<Item = &'a Vec<f64>>, len: usize) -> RateCurve {
    let curves: Vec<&Vec<f64>> = curves.collect();
    let nf = curves.len().max(1) as f64;
    let mut mean = vec![0.0; len];
    for c in &curves {
        for k in 0..len {
            mean[k] += c[k] / nf;
        }
    }
    let std = if curves.len() > 1 {
        (0..len)
            .map(|k| (curves.iter().map(|c| (c[k] - mean[k]).powi(2)).sum::<f64>() / (nf - 1.0)).sqrt())
            .collect()
    } else {
        vec![0.0; len]
    };
    RateCurve { mean, std }
}

/// Matching probability under independent Gaussian fabrication errors.
/// Sample `i` draws from ChaCha8 stream `i` of the master seed, so the
/// report does not depend on the thread count.
pub fn monte_carlo_yield(spec: &MonteCarloSpec) -> Result<YieldReport> {
    spec.validate()?;
    let out: Vec<_> = (0..spec.samples)
        .into_par_iter()
        .map(|i| run_sample(spec, i))
        .collect::<Result<_>>()?;
    let len = spec.freq_grid.len();
    let matches = out.iter().filter(|o| o.0.matched).count();
    Ok(YieldReport {
        matching_probability: matches as f64 / spec.samples as f64,
        matches,
        samples: spec.samples,
        sender_curve: mean_std(out.iter().filter_map(|o| o.1.as_ref()), len),
        receiver_curve: mean_std(out.iter().filter_map(|o| o.2.as_ref()), len),
        records: out.into_iter().map(|o| o.0).collect(),
        freq_grid: spec.freq_grid.clone(),
    })
}

/// Matching probability over relative variations of J and κ.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SensitivityMap {
    pub rel_j: Vec<f64>,
    pub rel_kappa: Vec<f64>,
    /// `probability[i][k]` for `rel_j[i]`, `rel_kappa[k]`.
    pub probability: Vec<Vec<f64>>,
}

/// Sweeps the relative J and κ sigmas with the frequency sigmas of `spec`.
/// Every cell reuses the same per-sample normal draws.
pub fn sensitivity_map(spec: &MonteCarloSpec, rel_j: &[f64], rel_kappa: &[f64]) -> Result<SensitivityMap> {
    if rel_j.is_empty() || rel_kappa.is_empty() {
        return Err(invalid("sensitivity grids must be non-empty"));
    }
    if rel_j.iter().chain(rel_kappa).any(|v| !(0.0..=0.5).contains(v)) {
        return Err(invalid("relative variations must lie in [0, 0.5]"));
    }
    spec.validate()?;
    let mut probability = Vec::with_capacity(rel_j.len());
    for &rj in rel_j {
        let row = rel_kappa
            .iter()
            .map(|&rk| {
                let s = MonteCarloSpec {
                    rel_sigma_j: rj,
                    rel_sigma_kappa: rk,
                    ..spec.clone()
                };
                let hits = (0..s.samples)
                    .into_par_iter()
                    .map(|i| run_sample(&s, i).map(|o| o.0.matched as usize))
                    .collect::<Result<Vec<_>>>()?;
                Ok(hits.iter().sum::<usize>() as f64 / s.samples as f64)
            })
            .collect::<Result<Vec<_>>>()?;
        probability.push(row);
    }
    Ok(SensitivityMap {
        rel_j: rel_j.to_vec(),
        rel_kappa: rel_kappa.to_vec(),
        probability,
    })
}
