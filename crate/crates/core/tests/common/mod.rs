//! Shared oracles for the integration tests.
#![allow(dead_code)]

use qlink::qcore::{
    destroy, evolve, ket_bra, CMatrix, CVector, CollapseChannel, DensityMatrix, EvolveOptions, Generator, Operator,
    SpaceLayout, TimeGrid,
};
use qlink::resonator::CoupledResonatorParams;
use qlink::C64;

/// Decay rate of the emitter `|f⟩` population (1/ns) from a brute-force
/// Lindblad simulation of emitter, inner mode and outer mode, in the frame
/// of the photon frequency `omega_ph`. The emitter exchanges its
/// excitation with the inner mode at `g_eff`; only the outer mode decays.
/// The rate is the least-squares slope of `ln P_f` while `P_f` falls from
/// 0.8 to 0.2.
pub fn decay_fit_rate(p: &CoupledResonatorParams, g_eff: f64, omega_ph: f64, gamma_guess: f64) -> f64 {
    let layout = SpaceLayout::from_pairs(&[("emitter", 2), ("inner", 2), ("outer", 2)]).unwrap();
    let emb = |k: usize, m: &CMatrix| Operator::embed(&layout, k, m).unwrap();
    let a = emb(1, &destroy(2));
    let c = emb(2, &destroy(2));
    let sm = emb(0, &ket_bra(2, 0, 1));
    let n = |o: &Operator| o.dagger().compose(o).unwrap();
    let h = n(&a)
        .scale_re(p.omega_r - omega_ph)
        .add(&n(&c).scale_re(p.omega_f - omega_ph))
        .unwrap()
        .add(
            &a.dagger()
                .compose(&c)
                .unwrap()
                .add(&c.dagger().compose(&a).unwrap())
                .unwrap()
                .scale_re(p.j),
        )
        .unwrap()
        .add(
            &sm.compose(&a.dagger())
                .unwrap()
                .add(&sm.dagger().compose(&a).unwrap())
                .unwrap()
                .scale_re(g_eff),
        )
        .unwrap();
    let mut g = Generator::new(layout.clone());
    g.add_static_hamiltonian(h).unwrap();
    g.add_collapse(CollapseChannel::new(c, p.kappa).unwrap()).unwrap();
    let mut ket = CVector::zeros(8);
    ket[4] = C64::new(1.0, 0.0);
    let rho0 = DensityMatrix::pure(layout.clone(), &ket).unwrap();
    let pf = emb(0, &ket_bra(2, 1, 1));
    let t_end = 2.5 / gamma_guess;
    let grid = TimeGrid::uniform(0.0, t_end, 2001).unwrap();
    let tr = evolve(&rho0, &g, &grid, &[pf], &EvolveOptions::default()).unwrap();
    let pts: Vec<(f64, f64)> = tr
        .times
        .iter()
        .zip(&tr.expectations[0])
        .filter(|(_, v)| v.re <= 0.8 && v.re >= 0.2)
        .map(|(t, v)| (*t, v.re.ln()))
        .collect();
    assert!(pts.len() > 20, "fit window too short");
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (sx / m, sy / m);
    let (num, den) = pts.iter().fold((0.0, 0.0), |a, p| {
        (a.0 + (p.0 - mx) * (p.1 - my), a.1 + (p.0 - mx).powi(2))
    });
    -num / den
}

fn random_hermitian(rng: &mut rand_chacha::ChaCha8Rng, d: usize) -> CMatrix {
    use rand::Rng;
    let a = CMatrix::from_fn(d, d, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    (&a + a.adjoint()) * C64::new(0.5, 0.0)
}

/// Final state of a driven, damped qutrit integrated with RK4 step `h`.
fn driven_qutrit_final_state(h: f64) -> CMatrix {
    use rand::SeedableRng;
    let l = SpaceLayout::single("q", 3).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let mut g = Generator::new(l.clone());
    g.add_static_hamiltonian(Operator::new(l.clone(), random_hermitian(&mut rng, 3)).unwrap())
        .unwrap();
    g.add_hamiltonian(
        qlink::qcore::Coefficient::Function {
            f: std::sync::Arc::new(|t: f64| (0.7 * t).cos()),
            bound: 1.0,
        },
        Operator::new(l.clone(), random_hermitian(&mut rng, 3)).unwrap(),
    )
    .unwrap();
    g.add_collapse(CollapseChannel::new(Operator::new(l.clone(), destroy(3)).unwrap(), 0.3).unwrap())
        .unwrap();
    let a = random_hermitian(&mut rng, 3);
    let m = &a * a.adjoint();
    let t = m.trace();
    let rho0 = DensityMatrix::new(l, m / t).unwrap();
    let grid = TimeGrid::uniform(0.0, 4.0, 2).unwrap();
    let opts = EvolveOptions {
        step: qlink::qcore::StepControl::MaxStep(h),
        ..Default::default()
    };
    evolve(&rho0, &g, &grid, &[], &opts).unwrap().final_state.into_matrix()
}

/// Ratio of final-state errors at steps `0.2` and `0.1` against an `h/64`
/// reference; a fourth-order scheme gives about 16.
pub fn fourth_order_error_ratio() -> f64 {
    let reference = driven_qutrit_final_state(0.2 / 64.0);
    let e1 = (driven_qutrit_final_state(0.2) - &reference).norm();
    let e2 = (driven_qutrit_final_state(0.1) - &reference).norm();
    e1 / e2
}
