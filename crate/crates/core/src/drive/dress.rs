use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use serde::Serialize;

use crate::error::{invalid, Error, Result};

/// Driven transmon in the frame rotating at the drive frequency, angular
/// units. `alpha` is the anharmonicity magnitude (positive), so the bare
/// frame energies are `0`, `δ` and `2δ − α` with `δ = ω_eg − ω_d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DrivenQutritParams {
    pub omega_eg: f64,
    pub alpha: f64,
    /// Drive amplitude `Ω` in `(Ω/2)(b + b†)`.
    pub omega: f64,
    pub omega_d: f64,
}

impl DrivenQutritParams {
    pub fn new(omega_eg: f64, alpha: f64, omega: f64, omega_d: f64) -> Result<Self> {
        if ![omega_eg, alpha, omega, omega_d].iter().all(|v| v.is_finite()) {
            return Err(invalid("drive parameters must be finite"));
        }
        if omega < 0.0 {
            return Err(invalid("drive amplitude must be non-negative"));
        }
        Ok(Self {
            omega_eg,
            alpha,
            omega,
            omega_d,
        })
    }

    /// Drive tuned so that the bare `|f0⟩–|g1⟩` transition emits at
    /// `omega_ph`: `ω_d = 2ω_eg − α − ω_ph`.
    pub fn for_photon(omega_eg: f64, alpha: f64, omega: f64, omega_ph: f64) -> Result<Self> {
        Self::new(omega_eg, alpha, omega, 2.0 * omega_eg - alpha - omega_ph)
    }

    pub fn detuning(&self) -> f64 {
        self.omega_eg - self.omega_d
    }

    fn hamiltonian(&self, omega: f64) -> Matrix3<f64> {
        let d = self.detuning();
        let c = 0.5 * omega;
        let s2 = std::f64::consts::SQRT_2;
        Matrix3::new(0.0, c, 0.0, c, d, c * s2, 0.0, c * s2, 2.0 * d - self.alpha)
    }
}

/// Drive-dressed qutrit quantities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DressedQutrit {
    /// `|⟨g̃|b|f̃⟩|` from exact diagonalisation.
    pub g_eff_factor: f64,
    /// First-order perturbative value of the same matrix element.
    pub g_eff_factor_first_order: f64,
    /// Dressed `f`–`g` splitting in the drive frame, rad/ns.
    pub delta_fg_tilde: f64,
    /// Stark-shifted `g`–`e` transition frequency, rad/ns.
    pub omega_eg_tilde: f64,
    /// False when the drive comes within `10 Ω` of the `ge` or `ef`
    /// transition.
    pub detuning_guard_ok: bool,
}

impl DressedQutrit {
    /// Frequency of the photon emitted on the dressed `|f0⟩–|g1⟩`
    /// transition for drive frequency `omega_d`.
    pub fn photon_frequency(&self, omega_d: f64) -> f64 {
        omega_d + self.delta_fg_tilde
    }
}

/// First-order perturbative `|⟨g̃|b|f̃⟩| = (Ω/√2) α / |δ(δ − α)|`.
pub fn first_order_g_eff_factor(p: &DrivenQutritParams) -> f64 {
    let d = p.detuning();
    let den = d * (d - p.alpha);
    if den == 0.0 {
        return f64::INFINITY;
    }
    (p.omega / std::f64::consts::SQRT_2 * p.alpha / den).abs()
}

/// Continuation steps used to follow the dressed states from `Ω = 0`.
const TRACKING_STEPS: usize = 64;

/// Dresses the qutrit by exact diagonalisation of the 3-level frame
/// Hamiltonian. Eigenstates are followed adiabatically from the bare states
/// at `Ω = 0`, assigning at every step the permutation with the largest
/// total overlap with the previous step.
pub fn dress(p: &DrivenQutritParams) -> Result<DressedQutrit> {
    let d = p.detuning();
    let ge = d.abs();
    let ef = (d - p.alpha).abs();
    let guard = p.omega == 0.0 || (ge >= 10.0 * p.omega && ef >= 10.0 * p.omega);
    if !guard {
        log::warn!(
            "drive within 10 Omega of a qutrit transition (|delta_ge| = {ge:.4}, |delta_ef| = {ef:.4}, Omega = {:.4} rad/ns)",
            p.omega
        );
    }
    let bare = [0.0, d, 2.0 * d - p.alpha];
    if (bare[0] - bare[1]).abs() < 1e-12 || (bare[1] - bare[2]).abs() < 1e-12 || (bare[0] - bare[2]).abs() < 1e-12 {
        if p.omega > 0.0 {
            return Err(Error::StateTracking("degenerate bare levels".into()));
        }
    }
    let mut vecs = [Vector3::x(), Vector3::y(), Vector3::z()];
    let mut energies = bare;
    if p.omega > 0.0 {
        for s in 1..=TRACKING_STEPS {
            let om = p.omega * s as f64 / TRACKING_STEPS as f64;
            let eig = SymmetricEigen::new(p.hamiltonian(om));
            let cols: Vec<Vector3<f64>> = (0..3).map(|k| eig.eigenvectors.column(k).into()).collect();
            let (best, runner_up) = best_permutation(&vecs, &cols);
            if runner_up > 0.0 && (best.1 - runner_up).abs() < 0.01 * best.1 {
                return Err(Error::StateTracking(format!(
                    "overlap scores {:.4} and {runner_up:.4} within 1% at Omega = {om:.4} rad/ns",
                    best.1
                )));
            }
            for k in 0..3 {
                let mut v = cols[best.0[k]];
                if v.dot(&vecs[k]) < 0.0 {
                    v = -v;
                }
                vecs[k] = v;
                energies[k] = eig.eigenvalues[best.0[k]];
            }
        }
    }
    let b = Matrix3::new(0.0, 1.0, 0.0, 0.0, 0.0, std::f64::consts::SQRT_2, 0.0, 0.0, 0.0);
    let g_eff_factor = (vecs[0].transpose() * b * vecs[2])[(0, 0)].abs();
    Ok(DressedQutrit {
        g_eff_factor,
        g_eff_factor_first_order: first_order_g_eff_factor(p),
        delta_fg_tilde: energies[2] - energies[0],
        omega_eg_tilde: p.omega_d + energies[1] - energies[0],
        detuning_guard_ok: guard,
    })
}

/// Best assignment `perm[k]` of eigenvector columns to tracked states by
/// summed squared overlap, with the score of the runner-up permutation.
fn best_permutation(prev: &[Vector3<f64>; 3], cols: &[Vector3<f64>]) -> (([usize; 3], f64), f64) {
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut scored: Vec<([usize; 3], f64)> = PERMS
        .iter()
        .map(|p| {
            let s: f64 = (0..3).map(|k| prev[k].dot(&cols[p[k]]).powi(2)).sum();
            (*p, s)
        })
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1));
    (scored[0], scored[1].1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{ghz, mhz};

    fn qubit(omega: f64) -> DrivenQutritParams {
        DrivenQutritParams::for_photon(ghz(7.982), mhz(356.0), omega, ghz(9.5)).unwrap()
    }

    #[test]
    fn undriven_limit() {
        let p = qubit(0.0);
        let d = dress(&p).unwrap();
        assert_eq!(d.g_eff_factor, 0.0);
        assert_eq!(d.omega_eg_tilde, p.omega_eg);
        let bare_fg = 2.0 * p.omega_eg - p.alpha - 2.0 * p.omega_d;
        assert!((d.delta_fg_tilde - bare_fg).abs() <= 1e-14 * bare_fg.abs());
        assert!((d.photon_frequency(p.omega_d) - ghz(9.5)).abs() < 1e-12);
    }

    #[test]
    fn small_drive_matches_first_order() {
        let p0 = qubit(0.0);
        let p = qubit(0.01 * p0.detuning());
        let d = dress(&p).unwrap();
        assert!((d.g_eff_factor / d.g_eff_factor_first_order - 1.0).abs() < 0.01);
        assert!(d.g_eff_factor <= std::f64::consts::SQRT_2);
    }

    #[test]
    fn negative_amplitude_rejected() {
        assert!(DrivenQutritParams::new(1.0, 0.1, -1.0, 0.5).is_err());
    }
}
