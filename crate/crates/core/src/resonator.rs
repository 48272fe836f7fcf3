//! Transfer resonator (inner mode `a`, frequency `ω_r`) coupled with
//! strength `J` to a Purcell filter (outer mode `f`, frequency `ω_f`) that
//! decays at rate `κ` into the transmission line.
//!
//! The 2×2 mode matrix `[[ω_r, J], [J, ω_f]]` rotates into eigenmodes `a∓`
//! with `a = X a₋ + Y a₊` and `f = −Z a₋ + W a₊`, where `X, Y, Z, W ≥ 0`
//! for `J ≥ 0` and `X = W`, `Y = Z`. The eigenmodes share the filter loss:
//! `κ₋ = κZ²`, `κ₊ = κW²`, and their line couplings carry signs
//! `s₋ = −√κ Z`, `s₊ = √κ W` that set the cross-damping between them.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::units;
use crate::C64;

/// Circuit parameters in angular units (rad/ns).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoupledResonatorParams {
    pub omega_r: f64,
    pub omega_f: f64,
    pub j: f64,
    pub kappa: f64,
    /// Qubit to inner-resonator coupling.
    pub g: f64,
}

impl CoupledResonatorParams {
    pub fn new(omega_r: f64, omega_f: f64, j: f64, kappa: f64, g: f64) -> Result<Self> {
        let p = Self {
            omega_r,
            omega_f,
            j,
            kappa,
            g,
        };
        p.validate()?;
        Ok(p)
    }

    /// Builds from cyclic values: frequencies in GHz, couplings and decay in
    /// MHz.
    pub fn from_cyclic(omega_r_ghz: f64, omega_f_ghz: f64, j_mhz: f64, kappa_mhz: f64, g_mhz: f64) -> Result<Self> {
        Self::new(
            units::ghz(omega_r_ghz),
            units::ghz(omega_f_ghz),
            units::mhz(j_mhz),
            units::mhz(kappa_mhz),
            units::mhz(g_mhz),
        )
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.omega_r, self.omega_f, self.j, self.kappa, self.g];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(invalid("resonator parameters must be finite"));
        }
        if !(self.kappa > 0.0) {
            return Err(invalid("filter decay kappa must be positive"));
        }
        if self.j < 0.0 || self.g < 0.0 {
            return Err(invalid("couplings J and g must be non-negative"));
        }
        if !(self.omega_r > 0.0 && self.omega_f > 0.0) {
            return Err(invalid("resonator frequencies must be positive"));
        }
        Ok(())
    }
}

/// Eigenmodes of the coupled pair, angular units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EigenmodeDecomposition {
    pub omega_minus: f64,
    pub omega_plus: f64,
    pub kappa_minus: f64,
    pub kappa_plus: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub w: f64,
    /// Outer-mode decay the eigenmode rates derive from.
    pub kappa: f64,
}

impl EigenmodeDecomposition {
    /// Signed line coupling of `a₋`.
    pub fn s_minus(&self) -> f64 {
        -self.kappa.sqrt() * self.z
    }

    /// Signed line coupling of `a₊`.
    pub fn s_plus(&self) -> f64 {
        self.kappa.sqrt() * self.w
    }

    /// Rebuilds `(ω_r, ω_f, J)` from the eigenmodes.
    pub fn reconstruct(&self) -> (f64, f64, f64) {
        let (vm, vp) = ([self.x, -self.z], [self.y, self.w]);
        let m = |i: usize, j: usize| self.omega_minus * vm[i] * vm[j] + self.omega_plus * vp[i] * vp[j];
        (m(0, 0), m(1, 1), m(0, 1))
    }

    /// Centre of the two-pole band, `(ω₋ + ω₊)/2`.
    pub fn band_center(&self) -> f64 {
        0.5 * (self.omega_minus + self.omega_plus)
    }
}

/// Closed-form diagonalisation on the canonical branch: `ω₊ ≥ ω₋`,
/// `X ≥ 0`, and `Z ≥ 0` whenever `J > 0`.
pub fn diagonalize(p: &CoupledResonatorParams) -> EigenmodeDecomposition {
    let mean = 0.5 * (p.omega_r + p.omega_f);
    let delta = p.omega_f - p.omega_r;
    let half = 0.5 * (delta * delta + 4.0 * p.j * p.j).sqrt();
    let (om, op) = (mean - half, mean + half);
    // Eigenvector of ω₋ as (inner, outer) amplitudes, picking the better
    // conditioned of the two equivalent row equations.
    let r1 = [p.j, om - p.omega_r];
    let r2 = [om - p.omega_f, p.j];
    let n1 = (r1[0] * r1[0] + r1[1] * r1[1]).sqrt();
    let n2 = (r2[0] * r2[0] + r2[1] * r2[1]).sqrt();
    let mut v = if n1 == 0.0 && n2 == 0.0 {
        // J = 0 and ω_r = ω_f: any basis diagonalises; keep the bare modes.
        [1.0, 0.0]
    } else if n1 >= n2 {
        [r1[0] / n1, r1[1] / n1]
    } else {
        [r2[0] / n2, r2[1] / n2]
    };
    if v[0] < 0.0 || (v[0] == 0.0 && v[1] > 0.0) {
        v = [-v[0], -v[1]];
    }
    let (x, z) = (v[0], -v[1]);
    let (y, w) = (z, x);
    EigenmodeDecomposition {
        omega_minus: om,
        omega_plus: op,
        kappa_minus: p.kappa * z * z,
        kappa_plus: p.kappa * w * w,
        x,
        y,
        z,
        w,
        kappa: p.kappa,
    }
}

/// Linear response `(R₋, R₊)` of the eigenmode amplitudes to a unit line
/// drive at frequency `omega`, in the frame rotating at `omega_d`
/// (`Δ± = ω± − ω_d`). Returns [`Error::Pole`] on an exact real pole.
pub fn response(d: &EigenmodeDecomposition, omega: f64, omega_d: f64) -> Result<(C64, C64)> {
    let dm = omega - (d.omega_minus - omega_d);
    let dp = omega - (d.omega_plus - omega_d);
    let det =
        (C64::new(dm, 0.5 * d.kappa_minus)) * C64::new(dp, 0.5 * d.kappa_plus) + 0.25 * d.kappa_minus * d.kappa_plus;
    if det.norm() == 0.0 || !det.norm().is_finite() {
        return Err(Error::Pole(omega));
    }
    let mi = C64::new(0.0, -1.0);
    Ok((mi * d.s_minus() * dp / det, mi * d.s_plus() * dm / det))
}

/// Effective `|f0⟩–|g1⟩` coupling and photon detunings `δ± = ω± − ω_ph`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EmissionContext {
    pub g_eff: f64,
    pub delta_minus: f64,
    pub delta_plus: f64,
}

impl EmissionContext {
    pub fn new(d: &EigenmodeDecomposition, g_eff: f64, omega_ph: f64) -> Result<Self> {
        if !(g_eff >= 0.0) || !g_eff.is_finite() {
            return Err(invalid("g_eff must be finite and non-negative"));
        }
        Ok(Self {
            g_eff,
            delta_minus: d.omega_minus - omega_ph,
            delta_plus: d.omega_plus - omega_ph,
        })
    }
}

/// Photon emission rate of the driven qutrit into the line (1/ns):
///
/// `Γ_f = 4 g_eff² (X s₋ δ₊ + Y s₊ δ₋)² / (4δ₊²δ₋² + (κ₋δ₊ + κ₊δ₋)²)`.
///
/// The emitter drives the inner mode, so both eigenmode paths add
/// coherently; the result equals `g_eff² |X R₋ + Y R₊|²` evaluated at the
/// photon frequency (see [`gamma_f_golden`]).
pub fn gamma_f(d: &EigenmodeDecomposition, ctx: &EmissionContext) -> Result<f64> {
    // With no path from the inner mode to the line the rate vanishes
    // identically, including on the real pole of the dark mode.
    if d.x * d.s_minus() == 0.0 && d.y * d.s_plus() == 0.0 {
        return Ok(0.0);
    }
    let (dm, dp) = (ctx.delta_minus, ctx.delta_plus);
    let num = d.x * d.s_minus() * dp + d.y * d.s_plus() * dm;
    let cross = d.kappa_minus * dp + d.kappa_plus * dm;
    let den = 4.0 * dp * dp * dm * dm + cross * cross;
    if den == 0.0 {
        return Err(Error::Pole(dm.min(dp)));
    }
    let g = 4.0 * ctx.g_eff * ctx.g_eff * num * num / den;
    debug_assert!(
        gamma_f_golden(d, ctx).map_or(true, |h| (g - h).abs() <= 1e-8 * g.abs().max(1e-300) + 1e-300),
        "closed and golden-rule emission rates disagree"
    );
    Ok(g)
}

/// Golden-rule evaluation `g_eff² |X R₋(ω) + Y R₊(ω)|²` of the emission
/// rate, with the response evaluated at the photon frequency.
pub fn gamma_f_golden(d: &EigenmodeDecomposition, ctx: &EmissionContext) -> Result<f64> {
    // In the frame of the drive, ω − Δ± = −δ±; pick ω_d = ω₋ for conditioning.
    let omega_d = d.omega_minus;
    let omega = -ctx.delta_minus;
    let (rm, rp) = response(d, omega, omega_d)?;
    Ok(ctx.g_eff * ctx.g_eff * (rm * d.x + rp * d.y).norm_sqr())
}

/// Reflection coefficient of the two-mode chain at absolute frequency
/// `omega`: `S11 = 1 + s₋R₋ + s₊R₊`.
pub fn s11_modes(d: &EigenmodeDecomposition, omega: f64) -> Result<C64> {
    let (rm, rp) = response(d, omega, 0.0)?;
    Ok(C64::new(1.0, 0.0) + rm * d.s_minus() + rp * d.s_plus())
}

/// Reflection coefficient with the qubit state entering as a dispersive pull
/// `dispersive_shift` on `ω_r` before diagonalisation.
pub fn s11(p: &CoupledResonatorParams, omega: f64, dispersive_shift: f64) -> Result<C64> {
    let mut q = *p;
    q.omega_r += dispersive_shift;
    q.validate()?;
    s11_modes(&diagonalize(&q), omega)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn symmetric_splitting() {
        let p = CoupledResonatorParams::from_cyclic(9.5, 9.5, 50.0, 120.0, 220.0).unwrap();
        let d = diagonalize(&p);
        assert_relative_eq!(units::to_ghz(d.omega_minus), 9.45, epsilon = 1e-12);
        assert_relative_eq!(units::to_ghz(d.omega_plus), 9.55, epsilon = 1e-12);
        let h = 0.5f64.sqrt();
        for v in [d.x, d.y, d.z, d.w] {
            assert_relative_eq!(v, h, epsilon = 1e-12);
        }
        assert_relative_eq!(units::to_mhz(d.kappa_minus), 60.0, epsilon = 1e-9);
        assert_relative_eq!(units::to_mhz(d.kappa_plus), 60.0, epsilon = 1e-9);
    }

    #[test]
    fn uncoupled_inner_mode_is_dark() {
        let p = CoupledResonatorParams::from_cyclic(9.4, 9.5, 0.0, 120.0, 220.0).unwrap();
        let d = diagonalize(&p);
        assert_relative_eq!(d.omega_minus, p.omega_r, epsilon = 1e-12);
        assert_relative_eq!(d.omega_plus, p.omega_f, epsilon = 1e-12);
        assert_eq!(d.kappa_minus, 0.0);
        assert_eq!(d.x, 1.0);
        let ctx = EmissionContext::new(&d, units::mhz(10.0), units::ghz(9.45)).unwrap();
        assert_eq!(gamma_f(&d, &ctx).unwrap(), 0.0);
    }

    #[test]
    fn exact_pole_is_flagged() {
        let p = CoupledResonatorParams::from_cyclic(9.4, 9.5, 0.0, 120.0, 220.0).unwrap();
        let d = diagonalize(&p);
        assert!(matches!(response(&d, d.omega_minus, 0.0), Err(Error::Pole(_))));
        let (rm, rp) = response(&d, d.omega_minus + 1e-3, 0.0).unwrap();
        assert!(rm.norm().is_finite() && rp.norm().is_finite());
    }

    #[test]
    fn rejects_invalid_params() {
        assert!(CoupledResonatorParams::from_cyclic(9.4, 9.5, 10.0, 0.0, 1.0).is_err());
        assert!(CoupledResonatorParams::from_cyclic(9.4, 9.5, -1.0, 10.0, 1.0).is_err());
        assert!(CoupledResonatorParams::from_cyclic(-9.4, 9.5, 1.0, 10.0, 1.0).is_err());
    }
}
