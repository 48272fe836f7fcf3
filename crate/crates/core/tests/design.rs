use qlink::design::{
    bandwidth, monte_carlo_yield, sensitivity_map, sweep_design, uniform_grid, DesignObjectiveSpec, GEffModel,
    MonteCarloSpec,
};
use qlink::resonator::{diagonalize, CoupledResonatorParams};
use qlink::units::mhz;

fn grid_mhz(start: f64, stop: f64, step: f64) -> Vec<f64> {
    uniform_grid(start, stop, step).into_iter().map(mhz).collect()
}

fn design_params(kappa: f64, j: f64) -> CoupledResonatorParams {
    CoupledResonatorParams::from_cyclic(9.5, 9.5, j, kappa, 220.0).unwrap()
}

fn g_eff_at(spec: &DesignObjectiveSpec, p: &CoupledResonatorParams) -> f64 {
    spec.g_eff(&diagonalize(p)).unwrap()
}

#[test]
fn unreachable_threshold_gives_no_band() {
    let spec = DesignObjectiveSpec::reference();
    let p = design_params(120.0, 50.0);
    let band = bandwidth(&p, g_eff_at(&spec, &p), mhz(1e4), &spec.freq_grid).unwrap();
    assert!(band.is_none());
}

#[test]
fn doubling_coupling_equals_quartering_threshold() {
    let spec = DesignObjectiveSpec::reference();
    let p = design_params(120.0, 50.0);
    let g = g_eff_at(&spec, &p);
    let a = bandwidth(&p, 2.0 * g, mhz(8.0), &spec.freq_grid).unwrap().unwrap();
    let b = bandwidth(&p, g, mhz(2.0), &spec.freq_grid).unwrap().unwrap();
    assert!((a.lower - b.lower).abs() < 1e-12 && (a.upper - b.upper).abs() < 1e-12);
}

#[test]
fn coarse_or_narrow_grids_are_rejected() {
    let p = design_params(120.0, 50.0);
    assert!(bandwidth(&p, mhz(20.0), mhz(8.0), &grid_mhz(9100.0, 9900.0, 2.0)).is_err());
    assert!(bandwidth(&p, mhz(20.0), mhz(8.0), &grid_mhz(9400.0, 9600.0, 1.0)).is_err());
    assert!(bandwidth(&p, mhz(20.0), mhz(8.0), &grid_mhz(9300.0, 9700.0, 1.0)).is_ok());
}

#[test]
fn band_edges_sit_at_threshold() {
    let spec = DesignObjectiveSpec::reference();
    let p = design_params(120.0, 50.0);
    let g = g_eff_at(&spec, &p);
    let band = bandwidth(&p, g, mhz(8.0), &spec.freq_grid).unwrap().unwrap();
    let d = diagonalize(&p);
    for edge in [band.lower, band.upper] {
        let ctx = qlink::resonator::EmissionContext::new(&d, g, edge).unwrap();
        let rate = qlink::resonator::gamma_f(&d, &ctx).unwrap();
        assert!((rate / mhz(8.0) - 1.0).abs() < 1e-3, "rate at edge {rate}");
    }
}

#[test]
fn uncoupled_column_is_zero() {
    let mut spec = DesignObjectiveSpec::reference();
    spec.js = grid_mhz(0.0, 20.0, 5.0);
    let map = sweep_design(&spec).unwrap();
    assert!(map.widths_mhz.iter().all(|row| row[0] == 0.0));
    assert!(map.widths_mhz.iter().any(|row| row[4] > 0.0));
}

#[test]
fn optimum_is_stable_under_refinement() {
    let coarse = sweep_design(&DesignObjectiveSpec::reference()).unwrap();
    let mut fine_spec = DesignObjectiveSpec::reference();
    fine_spec.kappas = grid_mhz(40.0, 200.0, 2.5);
    fine_spec.js = grid_mhz(20.0, 100.0, 2.5);
    fine_spec.freq_grid = grid_mhz(9100.0, 9900.0, 0.5);
    let fine = sweep_design(&fine_spec).unwrap();
    assert!((fine.best_kappa_mhz - coarse.best_kappa_mhz).abs() <= 5.0 + 1e-9);
    assert!((fine.best_j_mhz - coarse.best_j_mhz).abs() <= 5.0 + 1e-9);
    // Shared cells agree to the frequency resolution.
    for (i, row) in coarse.widths_mhz.iter().enumerate() {
        for (j, w) in row.iter().enumerate() {
            assert!((fine.widths_mhz[2 * i][2 * j] - w).abs() < 1.0);
        }
    }
}

#[test]
fn ties_break_toward_small_parameters() {
    let mut spec = DesignObjectiveSpec::reference();
    spec.threshold = mhz(1e4);
    let map = sweep_design(&spec).unwrap();
    assert_eq!(map.best_width_mhz, 0.0);
    assert_eq!((map.best_kappa_mhz, map.best_j_mhz), (40.0, 20.0));
}

#[test]
fn width_is_continuous_in_kappa() {
    let spec = DesignObjectiveSpec::reference();
    let width = |k: f64| {
        let p = design_params(k, 50.0);
        bandwidth(&p, g_eff_at(&spec, &p), spec.threshold, &spec.freq_grid)
            .unwrap()
            .unwrap()
            .width_mhz()
    };
    let (a, b) = (width(120.0), width(121.2));
    assert!((b / a - 1.0).abs() < 0.05, "{a} → {b} MHz");
}

#[test]
fn dressed_model_is_selectable() {
    let mut spec = DesignObjectiveSpec::reference();
    let p = design_params(120.0, 50.0);
    let first = g_eff_at(&spec, &p);
    spec.g_eff_model = GEffModel::Dressed;
    let exact = g_eff_at(&spec, &p);
    assert!(exact > 0.0 && exact != first);
}

fn small_mc(samples: usize, seed: u64) -> MonteCarloSpec {
    MonteCarloSpec {
        samples,
        seed,
        ..MonteCarloSpec::reference()
    }
}

#[test]
fn nominal_devices_always_match() {
    let spec = MonteCarloSpec {
        sigma_inner: 0.0,
        sigma_outer: 0.0,
        rel_sigma_kappa: 0.0,
        rel_sigma_j: 0.0,
        ..small_mc(50, 3)
    };
    let r = monte_carlo_yield(&spec).unwrap();
    assert_eq!(r.matching_probability, 1.0);
    assert!(r.sender_curve.std.iter().all(|s| *s < 1e-12));
}

#[test]
fn report_is_reproducible_and_thread_independent() {
    let spec = small_mc(300, 17);
    let a = monte_carlo_yield(&spec).unwrap();
    let b = rayon::ThreadPoolBuilder::new()
        .num_threads(3)
        .build()
        .unwrap()
        .install(|| monte_carlo_yield(&spec).unwrap());
    assert_eq!(a, b);
    let c = monte_carlo_yield(&small_mc(300, 18)).unwrap();
    assert_ne!(a.records, c.records);
}

#[test]
fn report_probability_and_curves_are_consistent() {
    let r = monte_carlo_yield(&small_mc(400, 5)).unwrap();
    let matches = r.records.iter().filter(|s| s.matched).count();
    assert_eq!(matches, r.matches);
    assert!((0.0..=1.0).contains(&r.matching_probability));
    assert_eq!(r.sender_curve.mean.len(), r.freq_grid.len());
    assert!(r.receiver_curve.mean.iter().all(|m| *m >= 0.0));
    for s in &r.records {
        let tx = s.sender.unwrap();
        let lim = 0.25 * {
            let d = diagonalize(&tx.resonator);
            d.kappa_minus.min(d.kappa_plus)
        };
        assert!(tx.g_eff < lim && tx.drive <= mhz(750.0) + 1e-12);
    }
}

#[test]
fn wider_frequency_spread_lowers_yield() {
    let mut prev = f64::INFINITY;
    for scale in [1.0, 2.0, 4.0] {
        let base = small_mc(2000, 9);
        let spec = MonteCarloSpec {
            sigma_inner: base.sigma_inner * scale,
            sigma_outer: base.sigma_outer * scale,
            ..base
        };
        let p = monte_carlo_yield(&spec).unwrap().matching_probability;
        assert!(p < prev, "scale {scale}: {p} after {prev}");
        prev = p;
    }
}

#[test]
fn yield_spread_matches_binomial_error() {
    let ps: Vec<f64> = (0..20)
        .map(|s| {
            monte_carlo_yield(&small_mc(2000, 1000 + s))
                .unwrap()
                .matching_probability
        })
        .collect();
    let mean = ps.iter().sum::<f64>() / 20.0;
    let sd = (ps.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / 19.0).sqrt();
    let theory = (mean * (1.0 - mean) / 2000.0).sqrt();
    assert!(sd < 2.0 * theory && sd > 0.5 * theory, "empirical {sd} vs {theory}");
}

#[test]
fn sensitivity_is_monotone_and_anchored() {
    let spec = small_mc(2000, 21);
    let grid = [0.01, 0.1, 0.2, 0.3];
    let m = sensitivity_map(&spec, &grid, &grid).unwrap();
    for i in 0..grid.len() {
        for k in 1..grid.len() {
            assert!(
                m.probability[i][k] <= m.probability[i][k - 1],
                "row {i}: {:?}",
                m.probability[i]
            );
            assert!(m.probability[k][i] <= m.probability[k - 1][i], "column {i}");
        }
    }
    let base = monte_carlo_yield(&spec).unwrap().matching_probability;
    assert!((m.probability[0][0] - base).abs() < 1e-12);
    assert!(sensitivity_map(&spec, &[0.6], &[0.01]).is_err());
}
