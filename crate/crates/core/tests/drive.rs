use nalgebra::{Matrix3, Vector3};
use proptest::prelude::*;
use qlink::cascade::{
    receiver_f_population, run_emission, run_transfer, CascadeScenario, ChannelParams, RECEIVER_QUTRIT,
};
use qlink::drive::{
    absorption_schedule, dress, emission_schedule, first_order_g_eff_factor, optimize_delay, target_waveform,
    DrivenQutritParams, PhotonWaveform,
};
use qlink::metrics::{spectrum, RecordSource, WaveformRecord};
use qlink::qcore::{basis_ket, CVector};
use qlink::units::{ghz, mhz};
use qlink::{Error, C64};

fn transmon(omega: f64) -> DrivenQutritParams {
    DrivenQutritParams::for_photon(ghz(7.982), mhz(356.0), omega, ghz(9.5)).unwrap()
}

/// `|⟨g̃|b|f̃⟩|` from Rayleigh–Schrödinger perturbation theory carried to
/// second order in the drive for the dressed `g` and `f` states.
fn second_order_factor(p: &DrivenQutritParams) -> f64 {
    let d = p.detuning();
    let e = [0.0, d, 2.0 * d - p.alpha];
    let c = 0.5 * p.omega;
    let v = Matrix3::new(0.0, c, 0.0, c, 0.0, c * 2f64.sqrt(), 0.0, c * 2f64.sqrt(), 0.0);
    let state = |n: usize| {
        let mut psi = Vector3::zeros();
        psi[n] = 1.0;
        for m in 0..3 {
            if m != n {
                psi[m] += v[(m, n)] / (e[n] - e[m]);
            }
        }
        for m in 0..3 {
            if m == n {
                continue;
            }
            let mut s = 0.0;
            for k in 0..3 {
                if k != n {
                    s += v[(m, k)] * v[(k, n)] / ((e[n] - e[m]) * (e[n] - e[k]));
                }
            }
            s -= v[(n, n)] * v[(m, n)] / (e[n] - e[m]).powi(2);
            psi[m] += s;
        }
        psi[n] -= 0.5
            * (0..3)
                .filter(|&m| m != n)
                .map(|m| (v[(m, n)] / (e[n] - e[m])).powi(2))
                .sum::<f64>();
        psi.normalize()
    };
    let b = Matrix3::new(0.0, 1.0, 0.0, 0.0, 0.0, 2f64.sqrt(), 0.0, 0.0, 0.0);
    (state(0).transpose() * b * state(2))[(0, 0)].abs()
}

#[test]
fn small_drive_matches_perturbation_series() {
    let d0 = transmon(0.0).detuning();
    for ratio in [0.002, 0.005, 0.01] {
        let p = transmon(ratio * d0);
        let exact = dress(&p).unwrap().g_eff_factor;
        let pert = second_order_factor(&p);
        assert!((exact / pert - 1.0).abs() < 0.01, "Ω/δ = {ratio}: {exact} vs {pert}");
        assert!((first_order_g_eff_factor(&p) / pert - 1.0).abs() < 0.01);
    }
}

#[test]
fn stark_shift_is_quadratic() {
    let p0 = transmon(0.0);
    let base = dress(&p0).unwrap().delta_fg_tilde;
    let d0 = p0.detuning();
    let pts: Vec<(f64, f64)> = (0..11)
        .map(|k| {
            let r = 0.001 * 10f64.powf(k as f64 / 10.0);
            let shift = (dress(&transmon(r * d0)).unwrap().delta_fg_tilde - base).abs();
            (r.ln(), shift.ln())
        })
        .collect();
    let n = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0 / n, a.1 + p.1 / n));
    let (num, den) = pts.iter().fold((0.0, 0.0), |a, p| {
        (a.0 + (p.0 - mx) * (p.1 - my), a.1 + (p.0 - mx).powi(2))
    });
    let slope = num / den;
    assert!((slope - 2.0).abs() < 0.05, "exponent {slope}");
}

#[test]
fn dressing_is_continuous_in_drive() {
    // A jump shows up as a departure from the local linear trend between
    // adjacent points spaced by ΔΩ/Ω = 1e-3.
    let mut om = mhz(10.0);
    let mut hist = Vec::new();
    while om < mhz(1000.0) {
        hist.push(dress(&transmon(om)).unwrap());
        om *= 1.001;
    }
    for w in hist.windows(3) {
        let jump = |f: &dyn Fn(&qlink::drive::DressedQutrit) -> f64| {
            (f(&w[2]) - 2.0 * f(&w[1]) + f(&w[0])).abs() / f(&w[1]).abs()
        };
        assert!(jump(&|d| d.g_eff_factor) < 1e-3);
        assert!(jump(&|d| d.delta_fg_tilde) < 1e-3);
    }
}

#[test]
fn near_resonant_drive_sets_guard_flag() {
    // Drive 20 MHz below the ge transition with Ω/2π = 10 MHz.
    let p = DrivenQutritParams::new(ghz(7.982), mhz(356.0), mhz(10.0), ghz(7.962)).unwrap();
    let d = dress(&p).unwrap();
    assert!(!d.detuning_guard_ok);
}

#[test]
fn sech_target_peak_and_norm() {
    let k = mhz(2.0);
    let w = target_waveform(k, 6.0, 4001).unwrap();
    let peak = w.envelope().iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert!((peak - (0.5 * k).sqrt()).abs() < 1e-12);
    assert!((w.norm() - 1.0).abs() < 1e-4);
    assert!(matches!(target_waveform(k, 2.0, 4001), Err(Error::InvalidInput(_))));
}

#[test]
fn sech_spectrum_width_matches_fourier_pair() {
    let k = mhz(2.0);
    let w = target_waveform(k, 12.0, 8001).unwrap();
    let rec = WaveformRecord::new(w.times().to_vec(), w.envelope().to_vec(), RecordSource::Ref).unwrap();
    let s = spectrum(&rec).unwrap();
    // |F(ν)|² ∝ sech²(π²ν/κ) for ψ ∝ sech(κt); half power at
    // cosh x = √2.
    let analytic = 2.0 * (2f64.sqrt()).acosh() * k / (std::f64::consts::PI * std::f64::consts::PI);
    let analytic_mhz = analytic * 1e3;
    let power: Vec<f64> = s.amplitude.iter().map(|a| a * a).collect();
    let above: Vec<usize> = (0..power.len()).filter(|&k| power[k] >= 0.5).collect();
    let (lo, hi) = (above[0], *above.last().unwrap());
    let cross = |i: usize, j: usize| {
        let t = (0.5 - power[i]) / (power[j] - power[i]);
        s.freqs_mhz[i] + t * (s.freqs_mhz[j] - s.freqs_mhz[i])
    };
    let fwhm = cross(hi, hi + 1) - cross(lo - 1, lo);
    assert!(
        (fwhm / analytic_mhz - 1.0).abs() < 0.02,
        "FWHM {fwhm} MHz vs {analytic_mhz} MHz"
    );
}

#[test]
fn emission_schedule_closed_form_properties() {
    let w = target_waveform(mhz(2.0), 8.0, 2001).unwrap();
    let s = emission_schedule(&w, mhz(150.0)).unwrap();
    assert!(s.g_eff()[0] < 1e-3 * s.peak());
    assert!(s.g_eff()[..1000].windows(2).all(|p| p[0] <= p[1]));
    assert!(s.g_eff().iter().all(|g| *g >= 0.0 && g.is_finite()));
    let half = target_waveform(mhz(1.0), 8.0, 2001).unwrap();
    let h = emission_schedule(&half, mhz(150.0)).unwrap();
    // Γ = 4g²/κ_eff; the late-time plateau is 2κ_ph.
    let plateau = |s: &qlink::drive::PulseSchedule| 4.0 * s.g_eff().last().unwrap().powi(2) / mhz(150.0);
    assert!((plateau(&h) / plateau(&s) - 0.5).abs() < 1e-6);
}

#[test]
fn non_adiabatic_schedule_is_rejected() {
    let w = target_waveform(mhz(20.0), 6.0, 2001).unwrap();
    assert!(matches!(
        emission_schedule(&w, mhz(100.0)),
        Err(Error::Adiabaticity { .. })
    ));
}

#[test]
fn sampled_envelope_uses_generic_rate() {
    let sech = target_waveform(mhz(2.0), 6.0, 4001).unwrap();
    let sampled = PhotonWaveform::from_samples(sech.times().to_vec(), sech.envelope().to_vec(), mhz(2.0)).unwrap();
    let a = emission_schedule(&sech, mhz(150.0)).unwrap();
    let b = emission_schedule(&sampled, mhz(150.0)).unwrap();
    let fracs = sech.emitted_fraction();
    for k in 0..a.g_eff().len() {
        if fracs[k] < 0.9 {
            assert!((a.g_eff()[k] / b.g_eff()[k] - 1.0).abs() < 1e-3);
        }
    }
}

#[test]
fn absorption_is_time_reversed_emission() {
    let w = target_waveform(mhz(2.0), 6.0, 2001).unwrap();
    let e = emission_schedule(&w, mhz(200.0)).unwrap();
    let a = absorption_schedule(&w, mhz(200.0), 0.0).unwrap();
    for (t, g) in a.times().iter().zip(a.g_eff()) {
        assert!((g - e.eval(-t)).abs() <= 1e-12 * e.peak());
    }
    let shifted = absorption_schedule(&w, mhz(200.0), 30.0).unwrap();
    assert!((shifted.eval(40.0) - a.eval(10.0)).abs() < 1e-12);
}

fn superposition() -> CVector {
    (basis_ket(3, 0) + basis_ket(3, 2)) / C64::new(2f64.sqrt(), 0.0)
}

#[test]
fn emitted_field_follows_target() {
    let s = CascadeScenario::reference().idealized();
    let model = s.model(false).unwrap();
    let rec = run_emission(&model, &superposition()).unwrap();
    let flux = rec.flux();
    assert!((flux - 0.25).abs() < 1e-3, "coherent flux {flux}");
    let target = target_waveform(s.kappa_ph, s.window, s.samples).unwrap();
    let norm = flux.sqrt();
    let dt = rec.times[1] - rec.times[0];
    let mut overlap = C64::new(0.0, 0.0);
    for (t, a) in rec.times.iter().zip(&rec.a_out) {
        let psi = (0.5 * target.kappa_ph()).sqrt() / (target.kappa_ph() * t).cosh();
        overlap += a / norm * psi * dt;
    }
    assert!(overlap.norm_sqr() >= 0.99, "overlap {}", overlap.norm_sqr());
}

#[test]
fn emission_is_complete() {
    let model = CascadeScenario::reference().idealized().model(false).unwrap();
    let rec = run_emission(&model, &basis_ket(3, 2)).unwrap();
    assert!(rec.sender_populations.last().unwrap()[2] <= 1e-3);
    assert!(rec.photons_out() >= 0.999, "photons out {}", rec.photons_out());
}

#[test]
fn matched_absorption_captures_photon() {
    let s = CascadeScenario::reference().idealized();
    let p = receiver_f_population(&s).unwrap();
    assert!(p >= 0.99, "receiver f population {p}");
    for delay in [-10.0 / s.kappa_ph, 10.0 / s.kappa_ph] {
        let mut w = s.clone();
        w.delay = delay;
        let q = receiver_f_population(&w).unwrap();
        assert!(q < 0.05, "delay {delay:.0} ns: {q}");
    }
}

#[test]
fn emit_then_absorb_transfers_state() {
    let model = CascadeScenario::reference().idealized().model(true).unwrap();
    let plus = (basis_ket(2, 0) + basis_ket(2, 1)) / C64::new(2f64.sqrt(), 0.0);
    let rho = run_transfer(&model, &plus)
        .unwrap()
        .partial_trace(&[RECEIVER_QUTRIT])
        .unwrap();
    // Fidelity up to the protocol's fixed phase: |ρ_eg| carries it.
    let f = 0.5 * (rho.matrix()[(0, 0)].re + rho.matrix()[(1, 1)].re) + rho.matrix()[(1, 0)].norm();
    assert!(1.0 - f < 1e-2, "infidelity {}", 1.0 - f);
}

fn delay_grid(s: &CascadeScenario) -> Vec<f64> {
    (-4..=4).map(|k| 0.5 * k as f64 / s.kappa_ph).collect()
}

#[test]
fn delay_optimum_is_symmetric_unimodal_and_eta_independent() {
    let s = CascadeScenario::reference().idealized();
    let delays = delay_grid(&s);
    let step = delays[1] - delays[0];
    let scan = optimize_delay(&s, &delays).unwrap();
    assert!(
        scan.best_delay.abs() <= step + 1e-9,
        "optimum at {} ns",
        scan.best_delay
    );
    let best = scan.populations.iter().cloned().fold(f64::MIN, f64::max);
    let peak = scan.populations.iter().position(|p| *p == best).unwrap();
    for k in 1..=peak {
        assert!(scan.populations[k] >= scan.populations[k - 1]);
    }
    for k in peak + 1..scan.populations.len() {
        assert!(scan.populations[k] <= scan.populations[k - 1]);
    }
    let mut lossy = s.clone();
    lossy.channel = ChannelParams::from_eta(0.675).unwrap();
    let other = optimize_delay(&lossy, &delays).unwrap();
    assert!((other.best_delay - scan.best_delay).abs() <= step + 1e-9);
}

#[test]
fn short_delay_scan_is_rejected() {
    let s = CascadeScenario::reference().idealized();
    assert!(optimize_delay(&s, &[0.0, 1.0 / s.kappa_ph]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dressed_factor_is_bounded(om in 0.0f64..1500.0, wph in 9.0f64..10.0) {
        let p = DrivenQutritParams::for_photon(ghz(7.982), mhz(356.0), mhz(om), ghz(wph)).unwrap();
        if let Ok(d) = dress(&p) {
            prop_assert!(d.g_eff_factor >= 0.0 && d.g_eff_factor <= 2f64.sqrt() + 1e-12);
        }
    }
}
