use nalgebra::SymmetricEigen;

use super::operator::{CMatrix, CVector, Operator};
use super::space::SpaceLayout;
use crate::error::{dims, invalid, Error, Result};
use crate::C64;

/// Accepted deviation of `Tr ρ` from one.
pub const TRACE_TOL: f64 = 1e-8;
/// Accepted largest entry of `|ρ − ρ†|`.
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Accepted most negative eigenvalue.
pub const POSITIVITY_TOL: f64 = 1e-8;

/// Density matrix on a [`SpaceLayout`].
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    layout: SpaceLayout,
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validated constructor: Hermitian, unit trace and positive within the
    /// module tolerances.
    pub fn new(layout: SpaceLayout, matrix: CMatrix) -> Result<Self> {
        let rho = Self::from_matrix_unchecked(layout, matrix)?;
        rho.validate(TRACE_TOL, HERMITICITY_TOL, POSITIVITY_TOL)?;
        Ok(rho)
    }

    /// Wraps a matrix after a shape check only. Used for intermediate
    /// integration states, which are validated at output times.
    pub fn from_matrix_unchecked(layout: SpaceLayout, matrix: CMatrix) -> Result<Self> {
        let d = layout.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(dims(format!(
                "{}x{} matrix on a {d}-dimensional layout",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { layout, matrix })
    }

    /// `|ψ⟩⟨ψ|` for a ket normalised on entry.
    pub fn pure(layout: SpaceLayout, ket: &CVector) -> Result<Self> {
        if ket.len() != layout.dim() {
            return Err(dims(format!(
                "ket of length {} on a {}-dimensional layout",
                ket.len(),
                layout.dim()
            )));
        }
        let n = ket.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(invalid("ket has zero or non-finite norm"));
        }
        let k = ket / C64::new(n, 0.0);
        Self::new(layout, &k * k.adjoint())
    }

    /// Product state in factor order.
    pub fn product(states: &[DensityMatrix]) -> Result<Self> {
        let ops: Vec<Operator> = states
            .iter()
            .map(|s| Operator::new(s.layout.clone(), s.matrix.clone()))
            .collect::<Result<_>>()?;
        let t = super::operator::tensor(&ops)?;
        let layout = t.layout().clone();
        Self::new(layout, t.into_matrix())
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut e: f64 = 0.0;
        for i in 0..d {
            for j in i..d {
                e = e.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        e
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let h = (&self.matrix + self.matrix.adjoint()) * C64::new(0.5, 0.0);
        let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// Checks the trace, Hermiticity and positivity invariants.
    pub fn validate(&self, trace_tol: f64, herm_tol: f64, pos_tol: f64) -> Result<()> {
        if !self.matrix.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite entries".into()));
        }
        let tr = self.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > trace_tol {
            return Err(Error::InvalidState(format!("trace {tr} deviates from 1")));
        }
        let h = self.hermiticity_error();
        if h > herm_tol {
            return Err(Error::InvalidState(format!("Hermiticity error {h:e}")));
        }
        let m = self.min_eigenvalue();
        if m < -pos_tol {
            return Err(Error::InvalidState(format!("negative eigenvalue {m:e}")));
        }
        Ok(())
    }

    /// `Tr(O ρ)`.
    pub fn expectation(&self, op: &Operator) -> Result<C64> {
        if op.layout() != &self.layout {
            return Err(dims("operator and state layouts differ"));
        }
        Ok((op.matrix() * &self.matrix).trace())
    }

    /// `⟨ψ|ρ|ψ⟩` for a normalised ket.
    pub fn fidelity_pure(&self, ket: &CVector) -> Result<f64> {
        if ket.len() != self.dim() {
            return Err(dims("ket and state dimensions differ"));
        }
        let n2 = ket.norm_squared();
        Ok(((ket.adjoint() * &self.matrix * ket)[(0, 0)].re) / n2)
    }

    /// Reduced state on the kept factors, listed in layout order.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let keep = self.layout.normalize_keep(keep)?;
        let out_layout = self.layout.subsystem(&keep)?;
        let n = self.layout.len();
        let traced: Vec<usize> = (0..n).filter(|k| !keep.contains(k)).collect();
        let d = self.dim();
        let dk = out_layout.dim();
        let digits: Vec<Vec<usize>> = (0..d).map(|i| self.layout.digits(i)).collect();
        let reduced_index: Vec<usize> = digits
            .iter()
            .map(|dg| {
                let sub: Vec<usize> = keep.iter().map(|&k| dg[k]).collect();
                out_layout.flat_index(&sub)
            })
            .collect();
        let mut m = CMatrix::zeros(dk, dk);
        for r in 0..d {
            for s in 0..d {
                if traced.iter().all(|&k| digits[r][k] == digits[s][k]) {
                    m[(reduced_index[r], reduced_index[s])] += self.matrix[(r, s)];
                }
            }
        }
        Ok(DensityMatrix {
            layout: out_layout,
            matrix: m,
        })
    }

    /// Restricts every factor to the listed levels and renormalises. Returns
    /// the projected state and the population weight that was kept.
    pub fn project_levels(&self, levels: &[Vec<usize>]) -> Result<(DensityMatrix, f64)> {
        let f = self.layout.factors();
        if levels.len() != f.len() {
            return Err(dims("one level list per factor required"));
        }
        for (lv, &d) in levels.iter().zip(f) {
            if lv.is_empty() || lv.iter().any(|&x| x >= d) {
                return Err(invalid("level index out of range"));
            }
        }
        let layout = SpaceLayout::new(levels.iter().map(Vec::len).collect(), self.layout.labels().to_vec())?;
        let dn = layout.dim();
        let map: Vec<usize> = (0..dn)
            .map(|i| {
                let dg = layout.digits(i);
                let full: Vec<usize> = dg.iter().zip(levels).map(|(&x, lv)| lv[x]).collect();
                self.layout.flat_index(&full)
            })
            .collect();
        let mut m = CMatrix::from_fn(dn, dn, |i, j| self.matrix[(map[i], map[j])]);
        let w = m.trace().re;
        if !(w > 1e-12) {
            return Err(Error::NonInformative("projected subspace carries no population".into()));
        }
        m /= C64::new(w, 0.0);
        Ok((DensityMatrix { layout, matrix: m }, w))
    }
}
