use std::io::Write;

use rustfft::FftPlanner;
use serde::Serialize;

use crate::cascade::EmissionRecord;
use crate::error::{invalid, Error, Result};
use crate::C64;

/// Role of a recorded waveform in the loss and absorption estimators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordSource {
    /// Emitted by the sender, measured after the link.
    Tx,
    /// Emitted by the receiver device on its own line, the loss reference.
    Rx,
    /// Output with the receiver absorbing.
    Abs,
    /// Output with the receiver drive off.
    Ref,
}

/// Line field `⟨a_out⟩(t)` on a uniform grid, in `√(1/ns)`, with an
/// optional incoherent power that adds to `|⟨a_out⟩|²` in energy
/// integrals (the unabsorbed bypass part of the loss channel).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WaveformRecord {
    pub times: Vec<f64>,
    pub field: Vec<C64>,
    pub incoherent_power: Option<Vec<f64>>,
    pub source: RecordSource,
}

impl WaveformRecord {
    pub fn new(times: Vec<f64>, field: Vec<C64>, source: RecordSource) -> Result<Self> {
        if times.len() != field.len() || times.len() < 2 {
            return Err(invalid(
                "record needs matching times and field with at least two samples",
            ));
        }
        let dt = times[1] - times[0];
        if !(dt > 0.0) {
            return Err(invalid("record times must increase"));
        }
        if times
            .windows(2)
            .any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1.0))
        {
            return Err(invalid("record grid must be uniform"));
        }
        if times.iter().any(|t| !t.is_finite()) || field.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(invalid("record contains non-finite samples"));
        }
        Ok(Self {
            times,
            field,
            incoherent_power: None,
            source,
        })
    }

    /// Collective output of a cascade run plus its bypass power.
    pub fn from_emission(rec: &EmissionRecord, source: RecordSource) -> Result<Self> {
        let mut r = Self::new(rec.times.clone(), rec.a_out.clone(), source)?;
        r.incoherent_power = Some(rec.a_bypass.iter().map(|z| z.norm_sqr()).collect());
        Ok(r)
    }

    pub fn dt(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    /// Trapezoidal `∫(|⟨a_out⟩|² + incoherent) dt`.
    pub fn energy(&self) -> f64 {
        let mut p: Vec<f64> = self.field.iter().map(|z| z.norm_sqr()).collect();
        if let Some(extra) = &self.incoherent_power {
            for (a, b) in p.iter_mut().zip(extra) {
                *a += b;
            }
        }
        crate::drive::trapezoid(&p, self.dt())
    }

    /// Copy with the field and incoherent power scaled by `s` in amplitude.
    pub fn scaled(&self, s: f64) -> Self {
        let mut r = self.clone();
        for z in &mut r.field {
            *z *= s;
        }
        if let Some(p) = &mut r.incoherent_power {
            for x in p {
                *x *= s * s;
            }
        }
        r
    }

    /// CSV with columns `time_ns,re,im`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "time_ns,re,im")?;
        for (t, z) in self.times.iter().zip(&self.field) {
            writeln!(w, "{t:.11e},{:.11e},{:.11e}", z.re, z.im)?;
        }
        Ok(())
    }
}

fn ratio(num: &WaveformRecord, den: &WaveformRecord) -> Result<f64> {
    let d = den.energy();
    if !(d > 0.0) {
        return Err(Error::NonInformative("reference record carries no energy".into()));
    }
    Ok(num.energy() / d)
}

/// Propagation loss `L = 1 − E_tx/E_rx`.
pub fn photon_loss(tx: &WaveformRecord, rx: &WaveformRecord) -> Result<f64> {
    if !(tx.energy() > 0.0) {
        return Err(Error::NonInformative("transmitted record carries no energy".into()));
    }
    Ok(1.0 - ratio(tx, rx)?)
}

/// Absorption efficiency `η = 1 − E_abs/E_ref`.
pub fn absorption_efficiency(abs: &WaveformRecord, reference: &WaveformRecord) -> Result<f64> {
    Ok(1.0 - ratio(abs, reference)?)
}

/// Field divided by `√P_g`, compensating for residual excited population
/// before emission.
pub fn normalize_pg(record: &WaveformRecord, p_g: f64) -> Result<WaveformRecord> {
    if !(p_g > 0.0 && p_g <= 1.0) {
        return Err(invalid("ground population must lie in (0, 1]"));
    }
    Ok(record.scaled(1.0 / p_g.sqrt()))
}

/// Fourier amplitudes of a record, normalised to a unit peak.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Spectrum {
    /// Cyclic frequency offsets from the frame, MHz, ascending.
    pub freqs_mhz: Vec<f64>,
    pub amplitude: Vec<f64>,
    pub peak_mhz: f64,
    pub bin_mhz: f64,
}

impl Spectrum {
    /// CSV with columns `freq_mhz,amplitude`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "freq_mhz,amplitude")?;
        for (f, a) in self.freqs_mhz.iter().zip(&self.amplitude) {
            writeln!(w, "{f:.11e},{a:.11e}")?;
        }
        Ok(())
    }
}

/// Minimum record length accepted by [`spectrum`].
pub const MIN_SPECTRUM_SAMPLES: usize = 64;

/// DFT of the complex envelope, zero padded to at least four times its
/// length (next power of two), with a centred frequency axis. An envelope
/// `e^{−i2πδt}`, a photon `δ` above the frame frequency, peaks at `+δ`.
pub fn spectrum(record: &WaveformRecord) -> Result<Spectrum> {
    let n = record.field.len();
    if n < MIN_SPECTRUM_SAMPLES {
        return Err(invalid(format!(
            "spectrum needs at least {MIN_SPECTRUM_SAMPLES} samples, got {n}"
        )));
    }
    let m = (4 * n).next_power_of_two();
    let mut buf = vec![C64::new(0.0, 0.0); m];
    buf[..n].copy_from_slice(&record.field);
    FftPlanner::new().plan_fft_inverse(m).process(&mut buf);
    let df_ghz = 1.0 / (m as f64 * record.dt());
    let half = m / 2;
    let mut freqs = Vec::with_capacity(m);
    let mut amp = Vec::with_capacity(m);
    for k in 0..m {
        let idx = (k + half) % m;
        let f = (k as f64 - half as f64) * df_ghz * 1e3;
        freqs.push(f);
        amp.push(buf[idx].norm());
    }
    let (imax, max) = amp
        .iter()
        .copied()
        .enumerate()
        .fold((0, 0.0), |b, (i, a)| if a > b.1 { (i, a) } else { b });
    if max > 0.0 {
        for a in &mut amp {
            *a /= max;
        }
    }
    Ok(Spectrum {
        peak_mhz: freqs[imax],
        freqs_mhz: freqs,
        amplitude: amp,
        bin_mhz: df_ghz * 1e3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(amp: f64) -> WaveformRecord {
        let t: Vec<f64> = (0..100).map(|k| k as f64).collect();
        let f = t
            .iter()
            .map(|x| C64::new(amp * (-(x - 50.0).powi(2) / 200.0).exp(), 0.0))
            .collect();
        WaveformRecord::new(t, f, RecordSource::Tx).unwrap()
    }

    #[test]
    fn loss_trivial_cases() {
        assert!(photon_loss(&rec(1.0), &rec(1.0)).unwrap().abs() < 1e-15);
        assert!((photon_loss(&rec(0.71f64.sqrt()), &rec(1.0)).unwrap() - 0.29).abs() < 1e-10);
        assert!((absorption_efficiency(&rec(0.0), &rec(1.0)).unwrap() - 1.0).abs() < 1e-15);
        assert!(absorption_efficiency(&rec(1.0), &rec(1.0)).unwrap().abs() < 1e-15);
        assert!(photon_loss(&rec(1.0), &rec(0.0)).is_err());
    }

    #[test]
    fn normalization() {
        let r = rec(1.0);
        assert_eq!(normalize_pg(&r, 1.0).unwrap(), r);
        let n = normalize_pg(&r, 0.85).unwrap();
        assert!((n.energy() / r.energy() - 1.0 / 0.85).abs() < 1e-12);
        assert!(normalize_pg(&r, 0.0).is_err());
    }

    #[test]
    fn non_uniform_grid_rejected() {
        let t = vec![0.0, 1.0, 3.0];
        assert!(WaveformRecord::new(t, vec![C64::new(0.0, 0.0); 3], RecordSource::Ref).is_err());
    }
}
