use std::io::Write;

use serde::Serialize;

use super::waveform::{PhotonWaveform, WaveformShape};
use crate::error::{invalid, Error, Result};
use crate::qcore::SampledSignal;
use crate::units;

/// Floor on the unemitted fraction `1 − ∫ψ²` in the generic shaping rate.
pub const RATE_DENOMINATOR_FLOOR: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Direction {
    Emit,
    Absorb,
}

/// Drive coupling `g_eff(t) ≥ 0` (rad/ns) sampled on a uniform grid (ns).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PulseSchedule {
    times: Vec<f64>,
    g_eff: Vec<f64>,
    direction: Direction,
    delay: f64,
    kappa_eff: f64,
}

impl PulseSchedule {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn g_eff(&self) -> &[f64] {
        &self.g_eff
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn delay(&self) -> f64 {
        self.delay
    }

    pub fn kappa_eff(&self) -> f64 {
        self.kappa_eff
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn peak(&self) -> f64 {
        self.g_eff.iter().copied().fold(0.0, f64::max)
    }

    /// Linear interpolation, holding the end values outside the grid.
    pub fn signal(&self) -> SampledSignal {
        SampledSignal::from_times(&self.times, self.g_eff.clone()).expect("schedule grid is uniform by construction")
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.signal().eval(t)
    }

    /// CSV with columns `time_ns,g_eff_mhz` (cyclic).
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "time_ns,g_eff_mhz")?;
        for (t, g) in self.times.iter().zip(&self.g_eff) {
            writeln!(w, "{:.11e},{:.11e}", t, units::to_mhz(*g))?;
        }
        Ok(())
    }
}

/// Generic shaping rate `Γ(t) = |ψ|² / max(1 − ∫_{t0}^{t}|ψ|², floor)`.
pub fn instantaneous_rate(target: &PhotonWaveform) -> Vec<f64> {
    target
        .power()
        .iter()
        .zip(target.emitted_fraction())
        .map(|(p, f)| p / (1.0 - f).max(RATE_DENOMINATOR_FLOOR))
        .collect()
}

/// Drive schedule `g_eff(t) = ½√(κ_eff Γ(t))` that makes a single-pole
/// cavity of linewidth `kappa_eff` emit `target`. For the sech target the
/// rate is the closed form `Γ = κ_ph(1 + tanh κ_ph t)`, which needs no
/// floor; other envelopes use [`instantaneous_rate`].
pub fn emission_schedule(target: &PhotonWaveform, kappa_eff: f64) -> Result<PulseSchedule> {
    if !(kappa_eff > 0.0) || !kappa_eff.is_finite() {
        return Err(invalid("kappa_eff must be positive"));
    }
    let rate: Vec<f64> = match target.shape() {
        WaveformShape::Sech => {
            let k = target.kappa_ph();
            let closed: Vec<f64> = target.times().iter().map(|&t| k * (1.0 + (k * t).tanh())).collect();
            debug_assert!(closed_form_consistent(target, &closed));
            closed
        }
        WaveformShape::Sampled => instantaneous_rate(target),
    };
    let g_eff: Vec<f64> = rate.iter().map(|r| 0.5 * (kappa_eff * r).sqrt()).collect();
    let peak = g_eff.iter().copied().fold(0.0, f64::max);
    let limit = 0.25 * kappa_eff;
    if peak > limit {
        return Err(Error::Adiabaticity { peak, limit });
    }
    if g_eff.iter().any(|g| !g.is_finite()) {
        return Err(invalid("non-finite shaping rate"));
    }
    Ok(PulseSchedule {
        times: target.times().to_vec(),
        g_eff,
        direction: Direction::Emit,
        delay: 0.0,
        kappa_eff,
    })
}

fn closed_form_consistent(target: &PhotonWaveform, closed: &[f64]) -> bool {
    let generic = instantaneous_rate(target);
    let frac = target.emitted_fraction();
    generic
        .iter()
        .zip(closed)
        .zip(frac)
        .filter(|(_, f)| 1.0 - f > 0.05)
        .all(|((g, c), _)| (g - c).abs() <= 1e-3 * c + 1e-12)
}

/// Time reverse of the emission schedule, shifted by `delay`:
/// `g_abs(t) = g_emit(delay − t)`.
pub fn absorption_schedule(target: &PhotonWaveform, kappa_eff: f64, delay: f64) -> Result<PulseSchedule> {
    if !delay.is_finite() {
        return Err(invalid("delay must be finite"));
    }
    let e = emission_schedule(target, kappa_eff)?;
    let times: Vec<f64> = e.times.iter().rev().map(|t| delay - t).collect();
    let g_eff: Vec<f64> = e.g_eff.iter().rev().copied().collect();
    Ok(PulseSchedule {
        times,
        g_eff,
        direction: Direction::Absorb,
        delay,
        kappa_eff,
    })
}

/// Receiver `|f⟩` population as a function of the absorption delay.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DelayScan {
    pub delays: Vec<f64>,
    pub populations: Vec<f64>,
    pub best_delay: f64,
    pub best_population: f64,
}

/// Scans the absorption delay and returns the delay maximising the
/// receiver `|f⟩` population after an emission from `|f⟩`. Ties go to the
/// smaller delay.
pub fn optimize_delay(scenario: &crate::cascade::CascadeScenario, delays: &[f64]) -> Result<DelayScan> {
    if delays.len() < 2 {
        return Err(invalid("delay scan needs at least two points"));
    }
    let span =
        delays.iter().copied().fold(f64::NEG_INFINITY, f64::max) - delays.iter().copied().fold(f64::INFINITY, f64::min);
    if span < 4.0 / scenario.kappa_ph - 1e-9 {
        return Err(invalid("delay scan must cover at least 4/kappa_ph"));
    }
    use rayon::prelude::*;
    let populations: Vec<f64> = delays
        .par_iter()
        .map(|&d| {
            let mut s = scenario.clone();
            s.delay = d;
            crate::cascade::receiver_f_population(&s)
        })
        .collect::<Result<_>>()?;
    let (mut best, mut best_p) = (delays[0], f64::NEG_INFINITY);
    let mut order: Vec<usize> = (0..delays.len()).collect();
    order.sort_by(|&a, &b| delays[a].total_cmp(&delays[b]));
    for &i in &order {
        if populations[i] > best_p {
            best_p = populations[i];
            best = delays[i];
        }
    }
    let min = populations.iter().copied().fold(f64::INFINITY, f64::min);
    if best_p - min < 1e-3 {
        return Err(Error::NonInformative(format!(
            "receiver population varies by {:.1e} over the scan",
            best_p - min
        )));
    }
    Ok(DelayScan {
        delays: delays.to_vec(),
        populations,
        best_delay: best,
        best_population: best_p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drive::target_waveform;
    use crate::units::mhz;

    #[test]
    fn sech_schedule_properties() {
        let w = target_waveform(mhz(2.0), 5.0, 2001).unwrap();
        let e = emission_schedule(&w, mhz(150.0)).unwrap();
        assert!(e.g_eff()[0] < 1e-2 * e.peak());
        assert!(e.peak() <= mhz(150.0) / 4.0);
        let a = absorption_schedule(&w, mhz(150.0), 0.0).unwrap();
        for (k, t) in a.times().iter().enumerate() {
            assert!((a.g_eff()[k] - e.eval(-t)).abs() < 1e-12 * e.peak());
        }
    }

    #[test]
    fn plateau_scales_with_bandwidth() {
        let k = mhz(2.0);
        let a = emission_schedule(&target_waveform(k, 8.0, 801).unwrap(), mhz(150.0)).unwrap();
        let b = emission_schedule(&target_waveform(0.5 * k, 8.0, 801).unwrap(), mhz(150.0)).unwrap();
        // g ∝ √Γ, so the squared plateau halves.
        let ra = a.g_eff().last().unwrap().powi(2);
        let rb = b.g_eff().last().unwrap().powi(2);
        assert!((rb / ra - 0.5).abs() < 1e-6);
    }

    #[test]
    fn adiabatic_bound_enforced() {
        let w = target_waveform(mhz(50.0), 5.0, 501).unwrap();
        assert!(matches!(
            emission_schedule(&w, mhz(150.0)),
            Err(Error::Adiabaticity { .. })
        ));
    }
}
