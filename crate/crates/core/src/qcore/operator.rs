use nalgebra::{DMatrix, DVector};

use super::space::SpaceLayout;
use crate::error::{dims, invalid, Result};
use crate::C64;

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Dense square operator acting on a [`SpaceLayout`].
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    layout: SpaceLayout,
    matrix: CMatrix,
}

impl Operator {
    pub fn new(layout: SpaceLayout, matrix: CMatrix) -> Result<Self> {
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

    pub fn identity(layout: &SpaceLayout) -> Self {
        let d = layout.dim();
        Self {
            layout: layout.clone(),
            matrix: CMatrix::identity(d, d),
        }
    }

    pub fn zeros(layout: &SpaceLayout) -> Self {
        let d = layout.dim();
        Self {
            layout: layout.clone(),
            matrix: CMatrix::zeros(d, d),
        }
    }

    /// Lifts `local`, acting on factor `factor`, to the full layout by
    /// tensoring identities on every other factor.
    pub fn embed(layout: &SpaceLayout, factor: usize, local: &CMatrix) -> Result<Self> {
        let f = layout.factors();
        if factor >= f.len() {
            return Err(invalid(format!("factor {factor} out of range")));
        }
        if local.nrows() != f[factor] || local.ncols() != f[factor] {
            return Err(dims(format!(
                "local operator is {}x{}, factor {factor} has dimension {}",
                local.nrows(),
                local.ncols(),
                f[factor]
            )));
        }
        let mut m = CMatrix::identity(1, 1);
        for (k, &d) in f.iter().enumerate() {
            m = if k == factor {
                m.kronecker(local)
            } else {
                m.kronecker(&CMatrix::identity(d, d))
            };
        }
        Self::new(layout.clone(), m)
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

    pub fn dagger(&self) -> Self {
        Self {
            layout: self.layout.clone(),
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            layout: self.layout.clone(),
            matrix: &self.matrix * s,
        }
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn add(&self, other: &Operator) -> Result<Self> {
        self.same_layout(other)?;
        Ok(Self {
            layout: self.layout.clone(),
            matrix: &self.matrix + &other.matrix,
        })
    }

    pub fn sub(&self, other: &Operator) -> Result<Self> {
        self.same_layout(other)?;
        Ok(Self {
            layout: self.layout.clone(),
            matrix: &self.matrix - &other.matrix,
        })
    }

    /// Operator product `self · other`.
    pub fn compose(&self, other: &Operator) -> Result<Self> {
        self.same_layout(other)?;
        Ok(Self {
            layout: self.layout.clone(),
            matrix: &self.matrix * &other.matrix,
        })
    }

    /// Largest entry of `|A − A†|`.
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

    pub fn is_finite(&self) -> bool {
        self.matrix.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub(crate) fn same_layout(&self, other: &Operator) -> Result<()> {
        if self.layout != other.layout {
            return Err(dims("operator layouts differ"));
        }
        Ok(())
    }
}

/// Kronecker product of the listed operators in order; the layout is the
/// concatenation of the factor layouts.
pub fn tensor(ops: &[Operator]) -> Result<Operator> {
    let (first, rest) = ops
        .split_first()
        .ok_or_else(|| invalid("tensor product of an empty list"))?;
    let mut layout = first.layout.clone();
    let mut m = first.matrix.clone();
    for op in rest {
        layout = layout.tensor(&op.layout)?;
        m = m.kronecker(&op.matrix);
    }
    Operator::new(layout, m)
}

/// Kronecker product of two matrices.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Truncated annihilation operator on `n` levels.
pub fn destroy(n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |i, j| {
        if j == i + 1 {
            C64::new((j as f64).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// `|i⟩⟨j|` on `n` levels.
pub fn ket_bra(n: usize, i: usize, j: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    m[(i, j)] = C64::new(1.0, 0.0);
    m
}

/// Computational basis vector `|i⟩` on `n` levels.
pub fn basis_ket(n: usize, i: usize) -> CVector {
    let mut v = CVector::zeros(n);
    v[i] = C64::new(1.0, 0.0);
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn identity_tensor_identity() {
        let a = Operator::identity(&SpaceLayout::single("a", 2).unwrap());
        let b = Operator::identity(&SpaceLayout::single("b", 3).unwrap());
        let t = tensor(&[a, b]).unwrap();
        assert_eq!(t.matrix(), &CMatrix::identity(6, 6));
        assert_eq!(t.layout().factors(), &[2, 3]);
    }

    #[test]
    fn sigma_z_tensor_identity() {
        let z = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.0), c(-1.0)]));
        let a = Operator::new(SpaceLayout::single("a", 2).unwrap(), z).unwrap();
        let b = Operator::identity(&SpaceLayout::single("b", 2).unwrap());
        let t = tensor(&[a, b]).unwrap();
        let expect = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.0), c(1.0), c(-1.0), c(-1.0)]));
        assert_eq!(t.matrix(), &expect);
    }

    #[test]
    fn embedding_matches_index_formula() {
        let layout = SpaceLayout::from_pairs(&[("q", 3), ("c", 2)]).unwrap();
        let b = destroy(3);
        let op = Operator::embed(&layout, 0, &b).unwrap();
        for r in 0..6 {
            for s in 0..6 {
                let (qr, cr) = (r / 2, r % 2);
                let (qs, cs) = (s / 2, s % 2);
                let expect = if cr == cs { b[(qr, qs)] } else { c(0.0) };
                assert_eq!(op.matrix()[(r, s)], expect);
            }
        }
        let cav = Operator::embed(&layout, 1, &destroy(2)).unwrap();
        for r in 0..6 {
            for s in 0..6 {
                let expect = if r / 2 == s / 2 && r % 2 == 0 && s % 2 == 1 {
                    c(1.0)
                } else {
                    c(0.0)
                };
                assert_eq!(cav.matrix()[(r, s)], expect);
            }
        }
    }

    #[test]
    fn empty_tensor_is_error() {
        assert!(tensor(&[]).is_err());
    }

    #[test]
    fn destroy_matrix_elements() {
        let b = destroy(3);
        assert_eq!(b[(0, 1)], c(1.0));
        assert!((b[(1, 2)].re - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(b[(1, 0)], c(0.0));
    }
}
