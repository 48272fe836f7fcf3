use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{dims, invalid, Error, Result};

/// One integrated readout record in the IQ plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IQShot {
    pub i: f64,
    pub q: f64,
}

/// Gaussian blob of a prepared state: mean and covariance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Blob {
    pub mean: [f64; 2],
    pub cov: [[f64; 2]; 2],
}

impl Blob {
    /// Isotropic blob of standard deviation `sigma`.
    pub fn isotropic(mean: [f64; 2], sigma: f64) -> Self {
        Self {
            mean,
            cov: [[sigma * sigma, 0.0], [0.0, sigma * sigma]],
        }
    }

    /// Lower Cholesky factor `[l00, l10, l11]`.
    fn cholesky(&self) -> Result<[f64; 3]> {
        let [[a, b], [c, d]] = self.cov;
        if (b - c).abs() > 1e-12 * (a.abs() + d.abs()) {
            return Err(invalid("blob covariance must be symmetric"));
        }
        let det = a * d - b * c;
        if !(a > 0.0) || !(det > 0.0) || !det.is_finite() {
            return Err(invalid("blob covariance must be positive definite"));
        }
        let l00 = a.sqrt();
        let l10 = b / l00;
        Ok([l00, l10, (d - l10 * l10).sqrt()])
    }
}

/// Readout response: one blob per qutrit level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReadoutModel {
    pub blobs: [Blob; 3],
}

impl ReadoutModel {
    /// Blobs of width `sigma` on an equilateral triangle of side `separation`.
    pub fn triangle(separation: f64, sigma: f64) -> Self {
        let r = separation / 3f64.sqrt();
        let at = |k: f64| {
            let a = std::f64::consts::FRAC_PI_2 + k * 2.0 * std::f64::consts::FRAC_PI_3;
            Blob::isotropic([r * a.cos(), r * a.sin()], sigma)
        };
        Self {
            blobs: [at(0.0), at(1.0), at(2.0)],
        }
    }
}

/// Samples `n` shots: the level is drawn from `populations`, then the IQ
/// point from that level's blob.
pub fn synth_shots(populations: [f64; 3], model: &ReadoutModel, n: usize, seed: u64) -> Result<Vec<IQShot>> {
    let s: f64 = populations.iter().sum();
    if (s - 1.0).abs() > 1e-9 || populations.iter().any(|p| !(*p >= -1e-12)) {
        return Err(invalid("populations must be non-negative and sum to 1"));
    }
    let sampler = IqSampler::new(model)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cum = [populations[0], populations[0] + populations[1]];
    Ok((0..n)
        .map(|_| {
            let u: f64 = rng.random();
            let k = if u < cum[0] {
                0
            } else if u < cum[1] {
                1
            } else {
                2
            };
            sampler.draw(&mut rng, k)
        })
        .collect())
}

/// Per-level Cholesky factors for Gaussian IQ sampling.
pub(crate) struct IqSampler {
    means: [[f64; 2]; 3],
    chol: [[f64; 3]; 3],
}

impl IqSampler {
    pub(crate) fn new(model: &ReadoutModel) -> Result<Self> {
        let mut chol = [[0.0; 3]; 3];
        for (c, b) in chol.iter_mut().zip(&model.blobs) {
            *c = b.cholesky()?;
        }
        Ok(Self {
            means: model.blobs.map(|b| b.mean),
            chol,
        })
    }

    pub(crate) fn draw<R: Rng>(&self, rng: &mut R, level: usize) -> IQShot {
        let z0: f64 = rng.sample(StandardNormal);
        let z1: f64 = rng.sample(StandardNormal);
        let [l00, l10, l11] = self.chol[level];
        let m = self.means[level];
        IQShot {
            i: m[0] + l00 * z0,
            q: m[1] + l10 * z0 + l11 * z1,
        }
    }
}

/// Nearest-centre (1-NN) classifier over the three level centres.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Classifier {
    pub centers: [[f64; 2]; 3],
}

impl Classifier {
    pub fn classify(&self, s: &IQShot) -> usize {
        let d = |c: &[f64; 2]| (s.i - c[0]).powi(2) + (s.q - c[1]).powi(2);
        let mut best = 0;
        for k in 1..3 {
            if d(&self.centers[k]) < d(&self.centers[best]) {
                best = k;
            }
        }
        best
    }

    /// Fraction of shots assigned to each level.
    pub fn fractions(&self, shots: &[IQShot]) -> [f64; 3] {
        let mut c = [0usize; 3];
        for s in shots {
            c[self.classify(s)] += 1;
        }
        let n = shots.len().max(1) as f64;
        [c[0] as f64 / n, c[1] as f64 / n, c[2] as f64 / n]
    }
}

/// `R[i][j] = P(assigned j | prepared i)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AssignmentMatrix {
    pub r: [[f64; 3]; 3],
}

impl AssignmentMatrix {
    pub fn new(r: [[f64; 3]; 3]) -> Result<Self> {
        for row in &r {
            if row.iter().any(|x| !(0.0..=1.0).contains(x)) {
                return Err(invalid("assignment probabilities must lie in [0, 1]"));
            }
            if (row.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(invalid("assignment rows must sum to 1"));
            }
        }
        Ok(Self { r })
    }

    pub fn identity() -> Self {
        Self {
            r: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    fn matrix(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.r[i][j])
    }

    /// 2-norm condition number.
    pub fn condition_number(&self) -> f64 {
        let sv = self.matrix().singular_values();
        let max = sv.iter().copied().fold(0.0, f64::max);
        let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
        if min == 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    /// Measured distribution `m_j = Σ_i p_i R[i][j]` for true populations.
    pub fn propagate(&self, p: [f64; 3]) -> [f64; 3] {
        let v = self.matrix().transpose() * Vector3::from(p);
        [v[0], v[1], v[2]]
    }
}

/// Classifier and assignment matrix from reference measurements.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Calibration {
    pub classifier: Classifier,
    pub assignment: AssignmentMatrix,
}

/// Minimum reference shots per prepared level.
pub const MIN_CALIBRATION_SHOTS: usize = 1000;
const EM_MAX_ITER: usize = 100;
/// Centres closer than this fraction of the blob width are coincident.
const COINCIDENT_FRACTION: f64 = 0.1;
/// Convergence threshold on the change of the per-shot log-likelihood.
const EM_TOL: f64 = 1e-3;

/// Fits a two-component Gaussian mixture (k-means initialised EM) to each
/// prepared level's shots, takes the heavier component's mean as the level
/// centre, and estimates the assignment matrix by classifying the same
/// shots with the nearest-centre rule.
pub fn calibrate(reference: &[Vec<IQShot>; 3], seed: u64) -> Result<Calibration> {
    let mut centers = [[0.0; 2]; 3];
    let mut spread: f64 = 0.0;
    for (k, shots) in reference.iter().enumerate() {
        if shots.len() < MIN_CALIBRATION_SHOTS {
            return Err(invalid(format!(
                "level {k} has {} reference shots, need {MIN_CALIBRATION_SHOTS}",
                shots.len()
            )));
        }
        let fit = fit_gmm2(shots, seed.wrapping_add(k as u64))?;
        let major = if fit.weights[0] >= fit.weights[1] { 0 } else { 1 };
        centers[k] = if fit.resolved() {
            fit.means[major]
        } else {
            // A unimodal blob split in two: its centre is the mixture mean.
            let [w0, w1] = fit.weights;
            [0, 1].map(|a| (w0 * fit.means[0][a] + w1 * fit.means[1][a]) / (w0 + w1))
        };
        spread = spread.max((fit.covs[major][0][0] + fit.covs[major][1][1]).sqrt());
    }
    for a in 0..3 {
        for b in a + 1..3 {
            let d = ((centers[a][0] - centers[b][0]).powi(2) + (centers[a][1] - centers[b][1]).powi(2)).sqrt();
            if d < COINCIDENT_FRACTION * spread {
                return Err(Error::NonInformative(format!(
                    "levels {a} and {b} give coincident centres"
                )));
            }
        }
    }
    let classifier = Classifier { centers };
    let mut r = [[0.0; 3]; 3];
    for (k, shots) in reference.iter().enumerate() {
        r[k] = classifier.fractions(shots);
    }
    Ok(Calibration {
        classifier,
        assignment: AssignmentMatrix::new(r)?,
    })
}

struct Gmm2 {
    weights: [f64; 2],
    means: [[f64; 2]; 2],
    covs: [[[f64; 2]; 2]; 2],
}

impl Gmm2 {
    /// Ashman's separation `D = √2 |μ₀ − μ₁| / √(σ₀² + σ₁²)` along the
    /// line joining the means; `D > 2` marks two resolved modes.
    fn resolved(&self) -> bool {
        let d = [self.means[1][0] - self.means[0][0], self.means[1][1] - self.means[0][1]];
        let dist2 = d[0] * d[0] + d[1] * d[1];
        if dist2 == 0.0 {
            return false;
        }
        let proj = |c: &[[f64; 2]; 2]| {
            (d[0] * (c[0][0] * d[0] + c[0][1] * d[1]) + d[1] * (c[1][0] * d[0] + c[1][1] * d[1])) / dist2
        };
        let s2 = proj(&self.covs[0]) + proj(&self.covs[1]);
        2.0 * dist2 / s2 > 4.0
    }
}

fn fit_gmm2(x: &[IQShot], seed: u64) -> Result<Gmm2> {
    let n = x.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // k-means++ seeding followed by Lloyd iterations.
    let first = x[rng.random_range(0..n)];
    let d2: Vec<f64> = x
        .iter()
        .map(|s| (s.i - first.i).powi(2) + (s.q - first.q).powi(2))
        .collect();
    let total: f64 = d2.iter().sum();
    let mut u = rng.random::<f64>() * total;
    let mut second = x[n - 1];
    for (s, d) in x.iter().zip(&d2) {
        u -= d;
        if u <= 0.0 {
            second = *s;
            break;
        }
    }
    let mut m = [[first.i, first.q], [second.i, second.q]];
    let mut labels = vec![0usize; n];
    for _ in 0..50 {
        let mut sums = [[0.0; 2]; 2];
        let mut counts = [0usize; 2];
        for (l, s) in labels.iter_mut().zip(x) {
            let d0 = (s.i - m[0][0]).powi(2) + (s.q - m[0][1]).powi(2);
            let d1 = (s.i - m[1][0]).powi(2) + (s.q - m[1][1]).powi(2);
            *l = usize::from(d1 < d0);
            sums[*l][0] += s.i;
            sums[*l][1] += s.q;
            counts[*l] += 1;
        }
        let mut moved: f64 = 0.0;
        for c in 0..2 {
            if counts[c] > 0 {
                let nm = [sums[c][0] / counts[c] as f64, sums[c][1] / counts[c] as f64];
                moved = moved.max((nm[0] - m[c][0]).abs() + (nm[1] - m[c][1]).abs());
                m[c] = nm;
            }
        }
        if moved == 0.0 {
            break;
        }
    }
    let mut g = Gmm2 {
        weights: [0.5, 0.5],
        means: m,
        covs: [[[0.0; 2]; 2]; 2],
    };
    for c in 0..2 {
        let members: Vec<&IQShot> = x
            .iter()
            .zip(&labels)
            .filter(|(_, l)| **l == c)
            .map(|(s, _)| s)
            .collect();
        let cnt = members.len().max(1) as f64;
        g.weights[c] = (members.len() as f64 / n as f64).max(1e-3);
        let mut cov = [[0.0; 2]; 2];
        for s in &members {
            let d = [s.i - m[c][0], s.q - m[c][1]];
            for a in 0..2 {
                for b in 0..2 {
                    cov[a][b] += d[a] * d[b] / cnt;
                }
            }
        }
        g.covs[c] = regularize(cov);
    }
    let mut last_ll = f64::NEG_INFINITY;
    let mut resp = vec![[0.0f64; 2]; n];
    for _ in 0..EM_MAX_ITER {
        let mut ll = 0.0;
        for (r, s) in resp.iter_mut().zip(x) {
            let p0 = g.weights[0] * gauss(s, &g.means[0], &g.covs[0]);
            let p1 = g.weights[1] * gauss(s, &g.means[1], &g.covs[1]);
            let t = (p0 + p1).max(1e-300);
            *r = [p0 / t, p1 / t];
            ll += t.ln();
        }
        ll /= n as f64;
        for c in 0..2 {
            let nk: f64 = resp.iter().map(|r| r[c]).sum::<f64>().max(1e-12);
            let mean = [
                resp.iter().zip(x).map(|(r, s)| r[c] * s.i).sum::<f64>() / nk,
                resp.iter().zip(x).map(|(r, s)| r[c] * s.q).sum::<f64>() / nk,
            ];
            let mut cov = [[0.0; 2]; 2];
            for (r, s) in resp.iter().zip(x) {
                let d = [s.i - mean[0], s.q - mean[1]];
                for a in 0..2 {
                    for b in 0..2 {
                        cov[a][b] += r[c] * d[a] * d[b] / nk;
                    }
                }
            }
            g.weights[c] = nk / n as f64;
            g.means[c] = mean;
            g.covs[c] = regularize(cov);
        }
        if (ll - last_ll).abs() < EM_TOL {
            return Ok(g);
        }
        last_ll = ll;
    }
    Err(Error::NonConvergence {
        method: "Gaussian-mixture EM",
        iterations: EM_MAX_ITER,
    })
}

fn regularize(mut c: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let scale = (c[0][0] + c[1][1]).max(1e-300);
    c[0][0] += 1e-9 * scale;
    c[1][1] += 1e-9 * scale;
    c
}

fn gauss(s: &IQShot, m: &[f64; 2], c: &[[f64; 2]; 2]) -> f64 {
    let det = c[0][0] * c[1][1] - c[0][1] * c[1][0];
    let (dx, dy) = (s.i - m[0], s.q - m[1]);
    let q = (c[1][1] * dx * dx - (c[0][1] + c[1][0]) * dx * dy + c[0][0] * dy * dy) / det;
    (-0.5 * q).exp() / (std::f64::consts::TAU * det.sqrt())
}

/// Corrected populations and whether they had to be projected back onto
/// the probability simplex.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrectedPopulations {
    pub populations: Vec<f64>,
    pub clipped: bool,
}

const MAX_CONDITION: f64 = 1e12;

/// Inverts the assignment map, `p = (Rᵀ)⁻¹ m`, projecting onto the simplex
/// if a component leaves `[0, 1]`.
pub fn correct(r: &AssignmentMatrix, measured: [f64; 3]) -> Result<CorrectedPopulations> {
    correct_joint(&[*r], &measured)
}

/// Joint correction for several simultaneously read qutrits with
/// independent assignment errors, `R = R₁ ⊗ R₂ ⊗ …`.
pub fn correct_joint(rs: &[AssignmentMatrix], measured: &[f64]) -> Result<CorrectedPopulations> {
    if rs.is_empty() {
        return Err(invalid("no assignment matrices"));
    }
    let mut full = DMatrix::<f64>::identity(1, 1);
    for r in rs {
        if r.condition_number() > MAX_CONDITION {
            return Err(Error::Singular("assignment matrix is singular".into()));
        }
        full = full.kronecker(&DMatrix::from_fn(3, 3, |i, j| r.r[i][j]));
    }
    if measured.len() != full.nrows() {
        return Err(dims(format!(
            "{} measured probabilities for {} outcomes",
            measured.len(),
            full.nrows()
        )));
    }
    let rt = full.transpose();
    let p = rt
        .lu()
        .solve(&DVector::from_column_slice(measured))
        .ok_or_else(|| Error::Singular("assignment matrix is singular".into()))?;
    let p: Vec<f64> = p.iter().copied().collect();
    if p.iter().all(|x| (0.0..=1.0).contains(x)) {
        Ok(CorrectedPopulations {
            populations: p,
            clipped: false,
        })
    } else {
        Ok(CorrectedPopulations {
            populations: project_to_simplex(&p),
            clipped: true,
        })
    }
}

/// Euclidean projection onto `{p : p ≥ 0, Σp = 1}`.
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, x) in u.iter().enumerate() {
        cum += x;
        let t = (cum - 1.0) / (k + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}
