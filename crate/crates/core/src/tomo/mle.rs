use nalgebra::{DMatrix, DVector};

use crate::error::{dims, invalid, Error, Result};
use crate::qcore::{kron, CMatrix, CVector, DensityMatrix, SpaceLayout};
use crate::C64;

/// A projective measurement in the computational basis preceded by a
/// pre-rotation `U`. Outcome `k` has effect `U†|k⟩⟨k|U`.
#[derive(Clone, Debug, PartialEq)]
pub struct TomographySetting {
    pub label: String,
    pub rotation: CMatrix,
}

impl TomographySetting {
    pub fn new(label: impl Into<String>, rotation: CMatrix) -> Result<Self> {
        let d = rotation.nrows();
        if d == 0 || rotation.ncols() != d {
            return Err(dims("pre-rotation must be square"));
        }
        let err = (&rotation * rotation.adjoint() - CMatrix::identity(d, d)).norm();
        if err > 1e-10 {
            return Err(invalid(format!("pre-rotation is not unitary (error {err:.2e})")));
        }
        Ok(Self {
            label: label.into(),
            rotation,
        })
    }

    pub fn dim(&self) -> usize {
        self.rotation.nrows()
    }

    /// Effect vectors `u_k = U†|k⟩`, so that `E_k = |u_k⟩⟨u_k|`.
    pub fn effect_vectors(&self) -> Vec<CVector> {
        let ud = self.rotation.adjoint();
        (0..self.dim()).map(|k| ud.column(k).into_owned()).collect()
    }
}

/// Rotation by `theta` about the axis at azimuth `phi` (0 for X, π/2 for
/// Y) inside the two-level subspace `{i, j}` of a qutrit.
pub fn qutrit_rotation(i: usize, j: usize, phi: f64, theta: f64) -> CMatrix {
    let mut u = CMatrix::identity(3, 3);
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let off = C64::new(0.0, -s) * C64::from_polar(1.0, -phi);
    u[(i, i)] = C64::from(c);
    u[(j, j)] = C64::from(c);
    u[(i, j)] = off;
    u[(j, i)] = C64::new(0.0, -s) * C64::from_polar(1.0, phi);
    u
}

/// The nine single-qutrit settings: identity, π/2 rotations about X and Y
/// in the ge and ef subspaces, a ge π pulse, and the ge π pulse followed
/// by X or Y ef π/2 rotations, and by an ef π pulse.
pub fn qutrit_settings() -> Vec<TomographySetting> {
    use std::f64::consts::{FRAC_PI_2, PI};
    let x = 0.0;
    let y = FRAC_PI_2;
    let ge = |phi, th| qutrit_rotation(0, 1, phi, th);
    let ef = |phi, th| qutrit_rotation(1, 2, phi, th);
    let list = [
        ("I", CMatrix::identity(3, 3)),
        ("X90ge", ge(x, FRAC_PI_2)),
        ("Y90ge", ge(y, FRAC_PI_2)),
        ("X180ge", ge(x, PI)),
        ("X90ef", ef(x, FRAC_PI_2)),
        ("Y90ef", ef(y, FRAC_PI_2)),
        ("X180ge-X90ef", ef(x, FRAC_PI_2) * ge(x, PI)),
        ("X180ge-Y90ef", ef(y, FRAC_PI_2) * ge(x, PI)),
        ("X180ge-X180ef", ef(x, PI) * ge(x, PI)),
    ];
    list.into_iter()
        .map(|(l, u)| TomographySetting::new(l, u).expect("rotations are unitary"))
        .collect()
}

/// All 81 products of single-qutrit settings, first factor outermost.
pub fn two_qutrit_settings() -> Vec<TomographySetting> {
    let single = qutrit_settings();
    let mut out = Vec::with_capacity(81);
    for a in &single {
        for b in &single {
            out.push(
                TomographySetting::new(format!("{}|{}", a.label, b.label), kron(&a.rotation, &b.rotation))
                    .expect("products of unitaries are unitary"),
            );
        }
    }
    out
}

/// Outcome probabilities `⟨u_k|ρ|u_k⟩` of a setting.
pub fn outcome_probabilities(rho: &CMatrix, setting: &TomographySetting) -> Result<Vec<f64>> {
    if rho.nrows() != setting.dim() {
        return Err(dims(format!(
            "state of dimension {} measured with a {}-outcome setting",
            rho.nrows(),
            setting.dim()
        )));
    }
    Ok(setting
        .effect_vectors()
        .iter()
        .map(|u| (u.adjoint() * rho * u)[(0, 0)].re)
        .collect())
}

/// Whether the effects of `settings` span the Hermitian operators on a
/// `dim`-dimensional space.
pub fn informationally_complete(settings: &[TomographySetting], dim: usize) -> bool {
    let rows: Vec<Vec<f64>> = settings
        .iter()
        .filter(|s| s.dim() == dim)
        .flat_map(|s| s.effect_vectors())
        .map(|u| hermitian_coordinates(&u))
        .collect();
    if rows.len() < dim * dim {
        return false;
    }
    let a = DMatrix::from_fn(rows.len(), dim * dim, |r, c| rows[r][c]);
    let sv = a.singular_values();
    let max = sv.max();
    sv.iter().filter(|s| **s > 1e-9 * max).count() == dim * dim
}

/// Real coordinates of `|u⟩⟨u|` in the basis of diagonal, symmetric and
/// antisymmetric matrix units.
fn hermitian_coordinates(u: &CVector) -> Vec<f64> {
    let d = u.len();
    let mut v = Vec::with_capacity(d * d);
    for i in 0..d {
        v.push(u[i].norm_sqr());
    }
    for i in 0..d {
        for j in i + 1..d {
            let z = u[i] * u[j].conj();
            v.push(z.re);
            v.push(z.im);
        }
    }
    v
}

/// Stopping rule and iteration cap for [`mle_state`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MleOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 20_000,
        }
    }
}

/// Maximum-likelihood state for multinomial outcome counts.
///
/// The state is parameterised as `ρ = TT†/Tr(TT†)` with `T` lower
/// triangular with a real diagonal. A warm-up of diluted iterations
/// `T ← (I + εR)T`, `R = Σ (n_k/N p_k) E_k`, is followed by damped Newton
/// steps on the real parameters of `T`. Iteration stops when the norm of
/// the log-likelihood gradient with respect to those parameters drops
/// below the tolerance, or when successive steps no longer raise the
/// likelihood at working precision.
pub fn mle_state(
    counts: &[Vec<f64>],
    settings: &[TomographySetting],
    dim: usize,
    opts: &MleOptions,
) -> Result<DensityMatrix> {
    let layout = match dim {
        3 => SpaceLayout::single("qutrit", 3)?,
        9 => SpaceLayout::from_pairs(&[("qutrit-a", 3), ("qutrit-b", 3)])?,
        _ => return Err(invalid(format!("tomography dimension must be 3 or 9, got {dim}"))),
    };
    if counts.len() != settings.len() {
        return Err(dims(format!(
            "{} count vectors for {} settings",
            counts.len(),
            settings.len()
        )));
    }
    if settings.iter().any(|s| s.dim() != dim) {
        return Err(dims("setting dimension differs from target dimension"));
    }
    if !informationally_complete(settings, dim) {
        return Err(Error::NonInformative(
            "tomography settings are not informationally complete".into(),
        ));
    }
    let mut effects: Vec<(f64, CVector)> = Vec::new();
    for (c, s) in counts.iter().zip(settings) {
        if c.len() != dim {
            return Err(dims(format!(
                "setting {} has {} outcomes, expected {dim}",
                s.label,
                c.len()
            )));
        }
        if c.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(invalid("counts must be finite and non-negative"));
        }
        for (n, u) in c.iter().zip(s.effect_vectors()) {
            if *n > 0.0 {
                effects.push((*n, u));
            }
        }
    }
    let total: f64 = effects.iter().map(|(n, _)| n).sum();
    if total <= 0.0 {
        return Err(Error::NonInformative("no counts".into()));
    }
    for e in &mut effects {
        e.0 /= total;
    }
    let lik = Likelihood { effects, dim };

    let finish = |t: &CMatrix| {
        let rho = t * t.adjoint();
        let rho = (&rho + rho.adjoint()).scale(0.5 / rho.trace().re);
        DensityMatrix::new(layout.clone(), rho)
    };

    let id = CMatrix::identity(dim, dim);
    let mut t = id.scale(1.0 / (dim as f64).sqrt());
    let mut eps = 1.0;
    let (mut r, mut ll) = lik.r_operator(&t);
    let mut iterations = 0;
    while iterations < opts.max_iterations.min(WARM_UP) {
        iterations += 1;
        loop {
            let cand = triangular_factor(&((&id + r.scale(eps)) * &t));
            let (rc, lc) = lik.r_operator(&cand);
            if lc >= ll || eps < 1e-12 {
                t = cand;
                r = rc;
                ll = lc;
                eps = (eps * 2.0).min(1e6);
                break;
            }
            eps *= 0.5;
        }
        if lik.gradient(&t).1.norm() < opts.tolerance {
            return finish(&t);
        }
    }

    let mut x = lik.pack(&t);
    let mut mu = 1e-6;
    let mut stalled = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        let (ll0, g) = lik.gradient(&lik.unpack(&x));
        if g.norm() < opts.tolerance {
            return finish(&lik.unpack(&x));
        }
        let a = lik.neg_hessian(&x);
        let scale = a.diagonal().amax().max(1e-12);
        let mut advanced = false;
        for _ in 0..40 {
            let m = &a + DMatrix::identity(x.len(), x.len()).scale(mu * scale);
            if let Some(ch) = m.cholesky() {
                let step = ch.solve(&g);
                let cand = &x + &step;
                let tc = lik.unpack(&cand);
                let (_, lc) = lik.r_operator(&tc);
                if lc >= ll0 {
                    stalled = if lc - ll0 <= STALL_GAIN * ll0.abs().max(1.0) {
                        stalled + 1
                    } else {
                        0
                    };
                    x = lik.pack(&triangular_factor(&tc));
                    mu = (mu / 3.0).max(1e-14);
                    advanced = true;
                    break;
                }
            }
            mu *= 4.0;
        }
        if !advanced || stalled >= STALL_STEPS {
            // No ascent left at working precision: near a rank-deficient
            // optimum the gradient can stay above tolerance while the
            // likelihood no longer changes.
            return finish(&lik.unpack(&x));
        }
    }
    Err(Error::NonConvergence {
        method: "maximum-likelihood tomography",
        iterations: opts.max_iterations,
    })
}

const WARM_UP: usize = 200;
/// Relative log-likelihood gain below which a Newton step counts as stalled.
const STALL_GAIN: f64 = 1e-14;
/// Consecutive stalled steps that end the Newton phase.
const STALL_STEPS: usize = 10;

struct Likelihood {
    effects: Vec<(f64, CVector)>,
    dim: usize,
}

impl Likelihood {
    /// `R` and the normalised log-likelihood at `ρ = TT†/Tr(TT†)`.
    fn r_operator(&self, t: &CMatrix) -> (CMatrix, f64) {
        let d = self.dim;
        let s = t.norm_squared();
        let mut r = CMatrix::zeros(d, d);
        let mut ll = 0.0;
        for (f, u) in &self.effects {
            let w = t.adjoint() * u;
            let p = (w.norm_squared() / s).max(1e-300);
            ll += f * p.ln();
            r.gerc(C64::from(f / p), u, u, C64::from(1.0));
        }
        (r, ll)
    }

    /// Log-likelihood and its gradient with respect to the packed
    /// parameters of `T`.
    fn gradient(&self, t: &CMatrix) -> (f64, DVector<f64>) {
        let (r, ll) = self.r_operator(t);
        let g = ((r - CMatrix::identity(self.dim, self.dim)) * t).unscale(t.norm_squared());
        let mut v = Vec::with_capacity(self.dim * self.dim);
        for i in 0..self.dim {
            v.push(2.0 * g[(i, i)].re);
            for j in 0..i {
                v.push(2.0 * g[(i, j)].re);
                v.push(2.0 * g[(i, j)].im);
            }
        }
        (ll, DVector::from_vec(v))
    }

    /// Negative Hessian by central differences of the analytic gradient.
    fn neg_hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let n = x.len();
        let h = 1e-6 * x.amax().max(1e-3);
        let mut a = DMatrix::zeros(n, n);
        for k in 0..n {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += h;
            xm[k] -= h;
            let gp = self.gradient(&self.unpack(&xp)).1;
            let gm = self.gradient(&self.unpack(&xm)).1;
            a.set_column(k, &((gm - gp) / (2.0 * h)));
        }
        (&a + a.transpose()).scale(0.5)
    }

    fn pack(&self, t: &CMatrix) -> DVector<f64> {
        let mut v = Vec::with_capacity(self.dim * self.dim);
        for i in 0..self.dim {
            v.push(t[(i, i)].re);
            for j in 0..i {
                v.push(t[(i, j)].re);
                v.push(t[(i, j)].im);
            }
        }
        DVector::from_vec(v)
    }

    fn unpack(&self, x: &DVector<f64>) -> CMatrix {
        let mut t = CMatrix::zeros(self.dim, self.dim);
        let mut k = 0;
        for i in 0..self.dim {
            t[(i, i)] = C64::from(x[k]);
            k += 1;
            for j in 0..i {
                t[(i, j)] = C64::new(x[k], x[k + 1]);
                k += 2;
            }
        }
        t
    }
}

/// Lower-triangular `L` with a non-negative real diagonal and `LL† ∝ TT†`,
/// scaled to unit Frobenius norm.
fn triangular_factor(t: &CMatrix) -> CMatrix {
    let mut l = t.adjoint().qr().r().adjoint();
    for j in 0..l.ncols() {
        let d = l[(j, j)];
        if d.norm() > 0.0 {
            let phase = d.conj() / d.norm();
            for i in 0..l.nrows() {
                l[(i, j)] *= phase;
            }
        }
    }
    let n = l.norm();
    l.unscale(n)
}
