use proptest::prelude::*;
use qlink::cascade::{CascadeScenario, ChannelParams, DeviceParams, Mechanisms};
use qlink::drive::target_waveform;
use qlink::metrics::{
    absorption_efficiency, absorption_records, error_budget, loss_records, normalize_pg, photon_loss, spectrum,
    Protocol, RecordSource, WaveformRecord,
};
use qlink::units::mhz;
use qlink::{Error, C64};

fn sech_record(shift_ns: f64, detune_mhz: f64) -> WaveformRecord {
    let k = mhz(2.0);
    let t: Vec<f64> = (0..4001).map(|i| -800.0 + 0.4 * i as f64).collect();
    let f = t
        .iter()
        .map(|&x| {
            let env = (0.5 * k).sqrt() / (k * (x - shift_ns)).cosh();
            C64::from_polar(env, -2.0 * std::f64::consts::PI * detune_mhz * 1e-3 * x)
        })
        .collect();
    WaveformRecord::new(t, f, RecordSource::Tx).unwrap()
}

#[test]
fn loss_estimator_closed_cases() {
    let rx = sech_record(0.0, 0.0);
    assert_eq!(photon_loss(&rx, &rx).unwrap(), 0.0);
    let tx = rx.scaled((1.0f64 - 0.29).sqrt());
    assert!((photon_loss(&tx, &rx).unwrap() - 0.29).abs() < 1e-10);
    let zero = rx.scaled(0.0);
    assert!(matches!(photon_loss(&rx, &zero), Err(Error::NonInformative(_))));
    assert!(photon_loss(&zero, &rx).is_err());
}

#[test]
fn absorption_estimator_closed_cases() {
    let r = sech_record(0.0, 0.0);
    assert_eq!(absorption_efficiency(&r.scaled(0.0), &r).unwrap(), 1.0);
    assert_eq!(absorption_efficiency(&r, &r).unwrap(), 0.0);
    assert!(absorption_efficiency(&r, &r.scaled(0.0)).is_err());
}

#[test]
fn non_uniform_record_is_rejected() {
    let t = vec![0.0, 1.0, 2.5];
    let f = vec![C64::new(0.0, 0.0); 3];
    assert!(WaveformRecord::new(t, f, RecordSource::Ref).is_err());
}

#[test]
fn simulated_loss_is_recovered() {
    let mut s = CascadeScenario::reference();
    s.channel = ChannelParams::new(0.29, 1.0).unwrap();
    let (tx, rx) = loss_records(&s).unwrap();
    let l = photon_loss(&tx, &rx).unwrap();
    assert!((l - 0.29).abs() < 1e-6, "recovered loss {l}");
}

#[test]
fn simulated_absorption_efficiency_at_optimal_delay() {
    let (abs, reference) = absorption_records(&CascadeScenario::reference()).unwrap();
    let eta = absorption_efficiency(&abs, &reference).unwrap();
    assert!((0.93..=0.97).contains(&eta), "absorption efficiency {eta}");
}

#[test]
fn population_normalisation() {
    let r = sech_record(0.0, 0.0);
    assert_eq!(normalize_pg(&r, 1.0).unwrap(), r);
    let n = normalize_pg(&r, 0.85).unwrap();
    assert!((n.energy() / r.energy() - 1.0 / 0.85).abs() < 1e-12);
    assert!(normalize_pg(&r, 0.0).is_err());
    assert!(normalize_pg(&r, 1.2).is_err());
}

#[test]
fn imbalance_correction_follows_population_ratio() {
    // Sender and receiver prepared with ground populations 0.96 and 0.875:
    // the raw records carry those weights on top of a 29% link loss.
    let (pg_tx, pg_rx): (f64, f64) = (0.96, 0.875);
    let base = sech_record(0.0, 0.0);
    let tx = base.scaled((pg_tx * (1.0f64 - 0.29)).sqrt());
    let rx = base.scaled(pg_rx.sqrt());
    let raw = photon_loss(&tx, &rx).unwrap();
    let fixed = photon_loss(&normalize_pg(&tx, pg_tx).unwrap(), &normalize_pg(&rx, pg_rx).unwrap()).unwrap();
    assert!((fixed - 0.29).abs() < 1e-12);
    let predicted = (1.0 - raw) / (1.0 - fixed);
    assert!((predicted - pg_tx / pg_rx).abs() < 1e-12);
}

#[test]
fn spectrum_peaks_at_carrier_offset() {
    let s0 = spectrum(&sech_record(0.0, 0.0)).unwrap();
    assert!(s0.peak_mhz.abs() <= s0.bin_mhz);
    let s1 = spectrum(&sech_record(0.0, 10.0)).unwrap();
    assert!(
        (s1.peak_mhz - s0.peak_mhz - 10.0).abs() <= s1.bin_mhz,
        "peak {} MHz",
        s1.peak_mhz
    );
}

#[test]
fn spectrum_matches_analytic_sech_transform() {
    let k = mhz(2.0);
    let w = target_waveform(k, 12.0, 8001).unwrap();
    let r = WaveformRecord::new(w.times().to_vec(), w.envelope().to_vec(), RecordSource::Ref).unwrap();
    let s = spectrum(&r).unwrap();
    // ψ ∝ sech(κt) ⇒ |F(ν)| ∝ sech(π²ν/κ) with ν cyclic.
    let mut worst: f64 = 0.0;
    for (f, a) in s.freqs_mhz.iter().zip(&s.amplitude) {
        let x = std::f64::consts::PI.powi(2) * f * 1e-3 / k;
        worst = worst.max((a - 1.0 / x.cosh()).abs());
    }
    assert!(worst < 0.02, "max deviation {worst}");
}

#[test]
fn spectrum_is_time_shift_invariant() {
    let base = sech_record(0.0, 3.0);
    let pad = vec![C64::new(0.0, 0.0); 100];
    let n = base.times.len() + pad.len();
    let t: Vec<f64> = (0..n).map(|i| 0.4 * i as f64).collect();
    let early = [base.field.clone(), pad.clone()].concat();
    let late = [pad, base.field].concat();
    let a = spectrum(&WaveformRecord::new(t.clone(), early, RecordSource::Tx).unwrap()).unwrap();
    let b = spectrum(&WaveformRecord::new(t, late, RecordSource::Tx).unwrap()).unwrap();
    let worst = a
        .amplitude
        .iter()
        .zip(&b.amplitude)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-10, "max deviation {worst}");
}

#[test]
fn short_record_has_no_spectrum() {
    let t: Vec<f64> = (0..32).map(|k| k as f64).collect();
    let r = WaveformRecord::new(t, vec![C64::new(1.0, 0.0); 32], RecordSource::Tx).unwrap();
    assert!(spectrum(&r).is_err());
}

#[test]
fn coherent_ideal_link_has_negligible_budget() {
    let mut s = CascadeScenario::reference().idealized();
    s.sender = DeviceParams::coherent(s.sender.alpha, s.sender.kappa);
    s.receiver = DeviceParams::coherent(s.receiver.alpha, s.receiver.kappa);
    s.mechanisms = Mechanisms::NONE;
    let b = error_budget(&s, Protocol::Transfer).unwrap();
    assert!(b.total_infidelity < 0.01);
    for c in [b.photon_loss, b.absorption, b.energy_relaxation, b.dephasing] {
        assert!(c.abs() < 0.01);
    }
}

#[test]
fn reference_budget_is_nearly_additive() {
    let b = error_budget(&CascadeScenario::reference(), Protocol::Transfer).unwrap();
    assert!(b.residual.abs() < 0.03, "residual {}", b.residual);
    assert!(b.contributions_consistent());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn estimators_are_scale_invariant(a in 0.1f64..1.0, b in 0.1f64..1.0, s in 0.01f64..100.0) {
        let base = sech_record(0.0, 0.0);
        let (x, y) = (base.scaled(a), base.scaled(b));
        let l0 = photon_loss(&x, &y).unwrap();
        let l1 = photon_loss(&x.scaled(s), &y.scaled(s)).unwrap();
        prop_assert!((l0 - l1).abs() < 1e-12);
        let e0 = absorption_efficiency(&x, &y).unwrap();
        let e1 = absorption_efficiency(&x.scaled(s), &y.scaled(s)).unwrap();
        prop_assert!((e0 - e1).abs() < 1e-12);
    }
}
