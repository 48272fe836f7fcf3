use serde::Serialize;

use crate::error::{dims, invalid, Result};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum WaveformShape {
    /// `ψ(t) = √(κ_ph/2) sech(κ_ph t)`.
    Sech,
    /// Arbitrary sampled envelope.
    Sampled,
}

/// Single-photon wave packet sampled on a uniform grid (ns); the envelope is
/// in `√(1/ns)` so that `∫|ψ|² dt = 1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhotonWaveform {
    times: Vec<f64>,
    envelope: Vec<C64>,
    kappa_ph: f64,
    shape: WaveformShape,
}

impl PhotonWaveform {
    /// Wraps an arbitrary envelope on uniform sample times. `kappa_ph` is the
    /// bandwidth parameter used for window bookkeeping.
    pub fn from_samples(times: Vec<f64>, envelope: Vec<C64>, kappa_ph: f64) -> Result<Self> {
        if times.len() != envelope.len() || times.len() < 3 {
            return Err(dims("waveform needs matching times and samples (>= 3)"));
        }
        let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
        if !(dt > 0.0) {
            return Err(invalid("waveform times must increase"));
        }
        for (k, t) in times.iter().enumerate() {
            if (t - (times[0] + dt * k as f64)).abs() > 1e-9 * dt.max(1.0) {
                return Err(invalid("waveform times must be uniform"));
            }
        }
        if !(kappa_ph > 0.0) {
            return Err(invalid("kappa_ph must be positive"));
        }
        Ok(Self {
            times,
            envelope,
            kappa_ph,
            shape: WaveformShape::Sampled,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn envelope(&self) -> &[C64] {
        &self.envelope
    }

    pub fn kappa_ph(&self) -> f64 {
        self.kappa_ph
    }

    pub fn shape(&self) -> WaveformShape {
        self.shape
    }

    pub fn dt(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    /// Trapezoidal `∫|ψ|² dt` over the stored window.
    pub fn norm(&self) -> f64 {
        trapezoid(&self.power(), self.dt())
    }

    pub fn power(&self) -> Vec<f64> {
        self.envelope.iter().map(|z| z.norm_sqr()).collect()
    }

    /// Running trapezoidal integral of `|ψ|²` from the window start.
    pub fn emitted_fraction(&self) -> Vec<f64> {
        let p = self.power();
        let dt = self.dt();
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(p.len());
        out.push(0.0);
        for w in p.windows(2) {
            acc += 0.5 * (w[0] + w[1]) * dt;
            out.push(acc);
        }
        out
    }
}

pub(crate) fn trapezoid(y: &[f64], dt: f64) -> f64 {
    if y.len() < 2 {
        return 0.0;
    }
    let inner: f64 = y[1..y.len() - 1].iter().sum();
    dt * (inner + 0.5 * (y[0] + y[y.len() - 1]))
}

/// Largest tolerated `1 − ∫|ψ|²` from truncating the sech tails.
const MAX_NORM_DEFICIT: f64 = 1e-3;

/// Sech target `√(κ_ph/2) sech(κ_ph t)` on `samples` points spanning
/// `[−window/κ_ph, window/κ_ph]`.
pub fn target_waveform(kappa_ph: f64, window: f64, samples: usize) -> Result<PhotonWaveform> {
    if !(kappa_ph > 0.0) || !kappa_ph.is_finite() {
        return Err(invalid("kappa_ph must be positive"));
    }
    if samples < 3 {
        return Err(invalid("at least 3 samples required"));
    }
    let deficit = 1.0 - window.tanh();
    if !(window > 0.0) || deficit > MAX_NORM_DEFICIT {
        return Err(invalid(format!(
            "window {window} truncates {deficit:.2e} of the photon (max {MAX_NORM_DEFICIT:e})"
        )));
    }
    if window < 5.0 {
        log::warn!("waveform window {window} below 5/kappa_ph; truncation {deficit:.1e}");
    }
    let half = window / kappa_ph;
    let dt = 2.0 * half / (samples - 1) as f64;
    let amp = (0.5 * kappa_ph).sqrt();
    let times: Vec<f64> = (0..samples).map(|k| -half + dt * k as f64).collect();
    let envelope = times
        .iter()
        .map(|&t| C64::new(amp / (kappa_ph * t).cosh(), 0.0))
        .collect();
    Ok(PhotonWaveform {
        times,
        envelope,
        kappa_ph,
        shape: WaveformShape::Sech,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::mhz;

    #[test]
    fn sech_peak_and_norm() {
        let k = mhz(2.0);
        let w = target_waveform(k, 6.0, 4001).unwrap();
        let peak = w.envelope().iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!((peak - (k / 2.0).sqrt()).abs() < 1e-15);
        assert!((w.norm() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn short_window_rejected() {
        assert!(target_waveform(mhz(2.0), 2.0, 101).is_err());
        assert!(target_waveform(mhz(2.0), 5.0, 101).is_ok());
    }
}
