//! Triplet storage used inside the integrator. Operators in the cascade
//! model have a handful of entries per column, which makes the dense
//! products the dominant cost; the public API stays dense.

use super::operator::CMatrix;
use crate::C64;

#[derive(Clone, Debug, Default)]
pub(crate) struct Triplets {
    pub entries: Vec<(usize, usize, C64)>,
}

impl Triplets {
    pub fn from_dense(m: &CMatrix) -> Self {
        let mut entries = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let z = m[(i, j)];
                if z.re != 0.0 || z.im != 0.0 {
                    entries.push((i, j, z));
                }
            }
        }
        Self { entries }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `out += s · A · rho` for column-major `d × d` buffers.
    pub fn left_mul_acc(&self, s: C64, rho: &[C64], out: &mut [C64], d: usize) {
        for &(i, j, v) in &self.entries {
            let w = v * s;
            for l in 0..d {
                out[l * d + i] += w * rho[l * d + j];
            }
        }
    }

    /// `out += A · rho · A†`.
    pub fn sandwich_acc(&self, rho: &[C64], out: &mut [C64], d: usize) {
        for &(i, k, a) in &self.entries {
            for &(j, m, b) in &self.entries {
                out[j * d + i] += a * rho[m * d + k] * b.conj();
            }
        }
    }

    /// `out += A† · x`.
    pub fn adjoint_left_mul_acc(&self, s: C64, x: &[C64], out: &mut [C64], d: usize) {
        for &(i, j, v) in &self.entries {
            let w = v.conj() * s;
            for l in 0..d {
                out[l * d + j] += w * x[l * d + i];
            }
        }
    }

    /// `out += x · A†`.
    pub fn right_adjoint_mul_acc(&self, x: &[C64], out: &mut [C64], d: usize) {
        for &(i, j, v) in &self.entries {
            let w = v.conj();
            for r in 0..d {
                out[i * d + r] += x[j * d + r] * w;
            }
        }
    }

    /// `Tr(A · rho)`.
    pub fn trace_with(&self, rho: &[C64], d: usize) -> C64 {
        self.entries.iter().map(|&(i, j, v)| v * rho[i * d + j]).sum()
    }
}
