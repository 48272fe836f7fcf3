//! Subcommand implementations. Each writes its artifacts into the output
//! directory; `main` adds the resolved config and the manifest.

use std::io::Write;

use anyhow::Result;
use qlink::cascade::{receiver_f_population, run_emission, run_sequence, CascadeScenario};
use qlink::design::{monte_carlo_yield, sensitivity_map, sweep_design, DeviceSample, SampleRecord};
use qlink::metrics::{
    absorption_efficiency, absorption_records, bell_run, error_budget, spectrum, superposition_input, transfer_process,
    Protocol, RecordSource, WaveformRecord,
};
use qlink::qcore::{basis_ket, DensityMatrix};
use qlink::resonator::{diagonalize, gamma_f, EmissionContext};
use qlink::tomo::{
    bell_fidelity, bell_phase, calibrate, cardinal_states, process_fidelity, process_tomography, reconstruct_states,
    synth_shots, IQShot, MleOptions, ProcessMatrix, TomographyRun,
};
use qlink::units::{mhz, to_ghz, to_mhz};
use serde::Serialize;

use crate::config::{BudgetProtocol, RunConfig, Tomography};
use crate::output::{num, OutputDir};

/// `Γ_f/2π` across the photon-frequency grid of `[sweep]`.
pub fn gamma_f_curve(cfg: &RunConfig, out: &mut OutputDir) -> Result<()> {
    let p = cfg.sweep.resonator()?;
    let d = diagonalize(&p);
    let g_eff = mhz(cfg.sweep.g_eff_mhz);
    let grid = cfg.sweep.photon_grid()?;
    let rates = grid
        .iter()
        .map(|w| Ok(gamma_f(&d, &EmissionContext::new(&d, g_eff, *w)?)?))
        .collect::<Result<Vec<f64>>>()?;
    out.write_csv("gamma_f.csv", |w| {
        writeln!(w, "freq_ghz,gamma_f_mhz")?;
        for (f, r) in grid.iter().zip(&rates) {
            writeln!(w, "{},{}", num(to_ghz(*f)), num(to_mhz(*r)))?;
        }
        Ok(())
    })?;
    #[derive(Serialize)]
    struct Summary {
        omega_minus_ghz: f64,
        omega_plus_ghz: f64,
        kappa_minus_mhz: f64,
        kappa_plus_mhz: f64,
        peak_gamma_f_mhz: f64,
    }
    out.write_json(
        "result.json",
        &Summary {
            omega_minus_ghz: to_ghz(d.omega_minus),
            omega_plus_ghz: to_ghz(d.omega_plus),
            kappa_minus_mhz: to_mhz(d.kappa_minus),
            kappa_plus_mhz: to_mhz(d.kappa_plus),
            peak_gamma_f_mhz: to_mhz(rates.iter().copied().fold(0.0, f64::max)),
        },
    )
}

/// Sender emission with the receiver drive off.
pub fn emit(cfg: &RunConfig, out: &mut OutputDir) -> Result<()> {
    let s = cfg.scenario()?;
    let model = s.model(false)?;
    let single = run_emission(&model, &basis_ket(3, 2))?;
    let coherent = run_sequence(&model, &superposition_input(), &basis_ket(3, 0))?;
    let field = WaveformRecord::from_emission(&coherent, RecordSource::Tx)?;
    let spec = spectrum(&field)?;
    out.write_csv("emission.csv", |w| single.write_csv(w))?;
    out.write_csv("field.csv", |w| field.write_csv(w))?;
    out.write_csv("spectrum.csv", |w| spec.write_csv(w))?;
    if let Some(sched) = &model.config().sender_schedule {
        out.write_csv("schedule.csv", |w| sched.write_csv(w))?;
    }
    #[derive(Serialize)]
    struct Summary {
        photons_emitted: f64,
        sender_f_residual: f64,
        coherent_flux: f64,
        spectrum_peak_mhz: f64,
    }
    out.write_json(
        "result.json",
        &Summary {
            photons_emitted: single.photons_out(),
            sender_f_residual: single.sender_populations.last().map_or(f64::NAN, |p| p[2]),
            coherent_flux: field.energy(),
            spectrum_peak_mhz: spec.peak_mhz,
        },
    )
}

/// Receiver absorption at the configured delay.
pub fn absorb(cfg: &RunConfig, out: &mut OutputDir) -> Result<()> {
    let s = cfg.scenario()?;
    let (abs, reference) = absorption_records(&s)?;
    out.write_csv("absorbed.csv", |w| abs.write_csv(w))?;
    out.write_csv("reference.csv", |w| reference.write_csv(w))?;
    if let Some(sched) = &s.model(true)?.config().receiver_schedule {
        out.write_csv("schedule.csv", |w| sched.write_csv(w))?;
    }
    #[derive(Serialize)]
    struct Summary {
        delay_ns: f64,
        absorption_efficiency: f64,
        receiver_f_population: f64,
    }
    out.write_json(
        "result.json",
        &Summary {
            delay_ns: s.delay,
            absorption_efficiency: absorption_efficiency(&abs, &reference)?,
            receiver_f_population: receiver_f_population(&s)?,
        },
    )
}

fn tomography_run(t: &Tomography) -> Result<TomographyRun> {
    let readout = t.readout();
    let pure = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let mut refs: [Vec<IQShot>; 3] = Default::default();
    for (k, p) in pure.iter().enumerate() {
        refs[k] = synth_shots(*p, &readout, t.calibration_shots, t.seed.wrapping_add(k as u64))?;
    }
    Ok(TomographyRun {
        readout,
        calibration: calibrate(&refs, t.seed)?,
        shots_per_setting: t.shots,
        seed: t.seed,
        mle: MleOptions::default(),
    })
}

#[derive(Serialize)]
struct ChiEntry {
    row: usize,
    col: usize,
    re: f64,
    im: f64,
}

fn chi_entries(chi: &ProcessMatrix) -> Vec<ChiEntry> {
    chi.components()
        .into_iter()
        .map(|(row, col, re, im)| ChiEntry { row, col, re, im })
        .collect()
}

#[derive(Serialize)]
struct TomographySummary {
    shots_per_setting: usize,
    seed: u64,
    fidelity: f64,
    clipped_settings: usize,
}

/// State transfer of the six cardinal states.
pub fn transfer(cfg: &RunConfig, out: &mut OutputDir) -> Result<()> {
    let model = cfg.scenario()?.model(true)?;
    let res = transfer_process(&model)?;
    let tomography = if cfg.tomography.enabled {
        let run = tomography_run(&cfg.tomography)?;
        let rec = reconstruct_states(&res.receiver_states, &run)?;
        let chi = process_tomography(&cardinal_states(), &rec.states)?;
        Some(TomographySummary {
            shots_per_setting: run.shots_per_setting,
            seed: run.seed,
            fidelity: process_fidelity(&chi, &ProcessMatrix::identity()),
            clipped_settings: rec.clipped_settings,
        })
    } else {
        None
    };
    #[derive(Serialize)]
    struct Summary {
        #[serde(flatten)]
        transfer: qlink::metrics::TransferSummary,
        chi: Vec<ChiEntry>,
        tomography: Option<TomographySummary>,
    }
    out.write_json(
        "result.json",
        &Summary {
            transfer: res.summary()?,
            chi: chi_entries(&res.chi),
            tomography,
        },
    )
}

fn bell_fidelity_of(two_qutrit: &DensityMatrix) -> Result<f64> {
    let (q, _) = two_qutrit.project_levels(&[vec![0, 1], vec![0, 1]])?;
    Ok(bell_fidelity(&q, bell_phase(&q)?)?)
}

/// Remote entanglement.
pub fn bell(cfg: &RunConfig, out: &mut OutputDir) -> Result<()> {
    let model = cfg.scenario()?.model(true)?;
    let res = bell_run(&model)?;
    let tomography = if cfg.tomography.enabled {
        let run = tomography_run(&cfg.tomography)?;
        let rec = reconstruct_states(std::slice::from_ref(&res.qutrit_state), &run)?;
        Some(TomographySummary {
            shots_per_setting: run.shots_per_setting,
            seed: run.seed,
            fidelity: bell_fidelity_of(&rec.states[0])?,
            clipped_settings: rec.clipped_settings,
        })
    } else {
        None
    };
    #[derive(Serialize)]
    struct Summary {
        #[serde(flatten)]
        bell: qlink::metrics::BellSummary,
        tomography: Option<TomographySummary>,
    }
    out.write_json(
        "result.json",
        &Summary {
            bell: res.summary(),
            tomography,
        },
    )
}

/// Ablation ladder of the configured protocol.
pub fn budget(cfg: &RunConfig, out: &mut OutputDir) -> Result<()> {
    let protocol = match cfg.protocol.budget {
        BudgetProtocol::Transfer => Protocol::Transfer,
        BudgetProtocol::Bell => Protocol::Bell,
    };
    let scenario: CascadeScenario = cfg.scenario()?;
    out.write_json("result.json", &error_budget(&scenario, protocol)?)
}

/// Bandwidth map over the design grid.
pub fn design_sweep(cfg: &RunConfig, out: &mut OutputDir) -> Result<()> {
    let map = sweep_design(&cfg.design.spec()?)?;
    out.write_csv("design_map.csv", |w| {
        writeln!(w, "kappa_mhz,j_mhz,width_mhz")?;
        for (i, k) in map.kappas_mhz.iter().enumerate() {
            for (j, jj) in map.js_mhz.iter().enumerate() {
                writeln!(w, "{},{},{}", num(*k), num(*jj), num(map.widths_mhz[i][j]))?;
            }
        }
        Ok(())
    })?;
    #[derive(Serialize)]
    struct Summary {
        best_kappa_mhz: f64,
        best_j_mhz: f64,
        best_width_mhz: f64,
    }
    out.write_json(
        "result.json",
        &Summary {
            best_kappa_mhz: map.best_kappa_mhz,
            best_j_mhz: map.best_j_mhz,
            best_width_mhz: map.best_width_mhz,
        },
    )
}

fn device_fields(d: &Option<DeviceSample>) -> String {
    match d {
        None => ",,,,,,,".to_string(),
        Some(s) => {
            let r = &s.resonator;
            let (lo, hi) = s.band.map_or((String::new(), String::new()), |b| {
                (num(to_ghz(b.lower)), num(to_ghz(b.upper)))
            });
            format!(
                "{},{},{},{},{},{},{},{}",
                num(to_ghz(r.omega_r)),
                num(to_ghz(r.omega_f)),
                num(to_mhz(r.j)),
                num(to_mhz(r.kappa)),
                num(to_mhz(s.drive)),
                num(to_mhz(s.g_eff)),
                lo,
                hi
            )
        }
    }
}

fn write_samples(w: &mut Vec<u8>, records: &[SampleRecord]) -> std::io::Result<()> {
    let cols = "omega_r_ghz,omega_f_ghz,j_mhz,kappa_mhz,drive_mhz,g_eff_mhz,band_lower_ghz,band_upper_ghz";
    let tx: Vec<String> = cols.split(',').map(|c| format!("tx_{c}")).collect();
    let rx: Vec<String> = cols.split(',').map(|c| format!("rx_{c}")).collect();
    writeln!(w, "index,matched,{},{}", tx.join(","), rx.join(","))?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{}",
            r.index,
            u8::from(r.matched),
            device_fields(&r.sender),
            device_fields(&r.receiver)
        )?;
    }
    Ok(())
}

/// Fabrication-variation Monte Carlo.
pub fn monte_carlo(cfg: &RunConfig, out: &mut OutputDir) -> Result<()> {
    let report = monte_carlo_yield(&cfg.monte_carlo.spec()?)?;
    out.write_csv("samples.csv", |w| write_samples(w, &report.records))?;
    out.write_csv("rate_curves.csv", |w| {
        writeln!(w, "freq_ghz,tx_mean_mhz,tx_std_mhz,rx_mean_mhz,rx_std_mhz")?;
        let (tx, rx) = (&report.sender_curve, &report.receiver_curve);
        for (k, f) in report.freq_grid.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{}",
                num(to_ghz(*f)),
                num(to_mhz(tx.mean[k])),
                num(to_mhz(tx.std[k])),
                num(to_mhz(rx.mean[k])),
                num(to_mhz(rx.std[k]))
            )?;
        }
        Ok(())
    })?;
    #[derive(Serialize)]
    struct Summary {
        matching_probability: f64,
        standard_error: f64,
        matches: usize,
        samples: usize,
    }
    out.write_json(
        "result.json",
        &Summary {
            matching_probability: report.matching_probability,
            standard_error: report.standard_error(),
            matches: report.matches,
            samples: report.samples,
        },
    )
}

/// Matching probability over relative `J` and `κ` spreads.
pub fn sensitivity(cfg: &RunConfig, out: &mut OutputDir) -> Result<()> {
    let s = &cfg.sensitivity;
    let map = sensitivity_map(&cfg.monte_carlo.spec()?, &s.rel_j, &s.rel_kappa)?;
    out.write_csv("sensitivity.csv", |w| {
        writeln!(w, "rel_j,rel_kappa,probability")?;
        for (i, j) in map.rel_j.iter().enumerate() {
            for (k, kk) in map.rel_kappa.iter().enumerate() {
                writeln!(w, "{},{},{}", num(*j), num(*kk), num(map.probability[i][k]))?;
            }
        }
        Ok(())
    })?;
    out.write_json("result.json", &map)
}
