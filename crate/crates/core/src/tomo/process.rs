use nalgebra::SymmetricEigen;

use crate::error::{dims, Error, Result};
use crate::qcore::{kron, CMatrix, CVector, DensityMatrix};
use crate::C64;

/// Labels of the cardinal input states, in the order of [`cardinal_states`].
pub const CARDINAL_LABELS: [&str; 6] = ["g", "e", "+", "-", "+i", "-i"];

/// The six cardinal qubit states over `{|g⟩, |e⟩}`.
pub fn cardinal_states() -> Vec<CVector> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let v = |a: C64, b: C64| CVector::from_vec(vec![a, b]);
    vec![
        v(C64::from(1.0), C64::from(0.0)),
        v(C64::from(0.0), C64::from(1.0)),
        v(C64::from(h), C64::from(h)),
        v(C64::from(h), C64::from(-h)),
        v(C64::from(h), C64::new(0.0, h)),
        v(C64::from(h), C64::new(0.0, -h)),
    ]
}

fn paulis() -> [CMatrix; 4] {
    let m = |a: [C64; 4]| CMatrix::from_row_slice(2, 2, &a);
    let (o, l, i) = (C64::from(0.0), C64::from(1.0), C64::new(0.0, 1.0));
    [m([l, o, o, l]), m([o, l, l, o]), m([o, -i, i, o]), m([l, o, o, -l])]
}

/// Qubit process matrix in the Pauli basis `{I, X, Y, Z}`:
/// `E(ρ) = Σ χ_mn P_m ρ P_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProcessMatrix {
    pub chi: CMatrix,
}

impl ProcessMatrix {
    /// `χ` of the identity channel.
    pub fn identity() -> Self {
        let mut chi = CMatrix::zeros(4, 4);
        chi[(0, 0)] = C64::from(1.0);
        Self { chi }
    }

    pub fn trace(&self) -> f64 {
        self.chi.trace().re
    }

    /// `‖Σ χ_mn P_n P_m − I‖_F`, zero for a trace-preserving map.
    pub fn trace_preservation_error(&self) -> f64 {
        let p = paulis();
        let mut s = CMatrix::zeros(2, 2);
        for m in 0..4 {
            for n in 0..4 {
                s += &p[n] * &p[m] * self.chi[(m, n)];
            }
        }
        (s - CMatrix::identity(2, 2)).norm()
    }

    /// Applies the map to a qubit density matrix.
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let p = paulis();
        let mut out = CMatrix::zeros(2, 2);
        for m in 0..4 {
            for n in 0..4 {
                out += &p[m] * rho * &p[n] * self.chi[(m, n)];
            }
        }
        out
    }

    /// Nearest positive semidefinite `χ` with unit trace, obtained by
    /// clipping negative eigenvalues. Diagnostic only: the result need not
    /// be exactly trace preserving.
    pub fn positivity_projected(&self) -> Self {
        let h = (&self.chi + self.chi.adjoint()).scale(0.5);
        let eig = SymmetricEigen::new(h);
        let vals = eig.eigenvalues.map(|v| v.max(0.0));
        let s: f64 = vals.iter().sum();
        let d = CMatrix::from_diagonal(&vals.map(|v| C64::from(v / s)));
        let v = &eig.eigenvectors;
        Self {
            chi: v * d * v.adjoint(),
        }
    }

    /// Rows `m, n, re, im` of the matrix elements.
    pub fn components(&self) -> Vec<(usize, usize, f64, f64)> {
        let mut out = Vec::with_capacity(16);
        for m in 0..4 {
            for n in 0..4 {
                let z = self.chi[(m, n)];
                out.push((m, n, z.re, z.im));
            }
        }
        out
    }
}

/// Reconstructs `χ` by linear inversion from qubit input kets and the
/// corresponding outputs. Outputs of dimension 3 are projected onto the
/// `{g, e}` subspace and renormalised first.
pub fn process_tomography(inputs: &[CVector], outputs: &[DensityMatrix]) -> Result<ProcessMatrix> {
    if inputs.len() != outputs.len() || inputs.len() < 4 {
        return Err(dims(format!(
            "{} inputs and {} outputs; need matching sets of at least 4",
            inputs.len(),
            outputs.len()
        )));
    }
    let k = inputs.len();
    let mut a = CMatrix::zeros(4, k);
    let mut b = CMatrix::zeros(4, k);
    for (c, (ket, out)) in inputs.iter().zip(outputs).enumerate() {
        if ket.len() != 2 {
            return Err(dims("process inputs must be qubit kets"));
        }
        let rin = ket * ket.adjoint();
        a.set_column(c, &vectorize(&rin));
        let q = qubit_block(out)?;
        b.set_column(c, &vectorize(&q));
    }
    let sv = a.singular_values();
    if sv.min() < 1e-9 * sv.max() {
        return Err(Error::Singular("input states do not span the qubit operators".into()));
    }
    // Least-squares superoperator S with vec(out) = S vec(in).
    let pinv = a
        .clone()
        .pseudo_inverse(1e-12)
        .map_err(|e| Error::Singular(e.to_string()))?;
    let s = b * pinv;
    // vec(P_m ρ P_n†) = (conj(P_n) ⊗ P_m) vec(ρ).
    let p = paulis();
    let mut basis = CMatrix::zeros(16, 16);
    for m in 0..4 {
        for n in 0..4 {
            let e = kron(&p[n].map(|z| z.conj()), &p[m]);
            basis.set_column(m * 4 + n, &vectorize(&e));
        }
    }
    let x = basis
        .lu()
        .solve(&vectorize(&s))
        .ok_or_else(|| Error::Singular("Pauli basis change".into()))?;
    Ok(ProcessMatrix {
        chi: CMatrix::from_fn(4, 4, |m, n| x[m * 4 + n]),
    })
}

fn vectorize(m: &CMatrix) -> CVector {
    CVector::from_column_slice(m.as_slice())
}

fn qubit_block(rho: &DensityMatrix) -> Result<CMatrix> {
    match rho.dim() {
        2 => Ok(rho.matrix().clone()),
        3 => {
            let q = rho.matrix().view((0, 0), (2, 2)).into_owned();
            let t = q.trace().re;
            if t <= 1e-12 {
                return Err(Error::NonInformative(
                    "output has no weight in the qubit subspace".into(),
                ));
            }
            Ok(q.unscale(t))
        }
        d => Err(dims(format!(
            "process outputs must be qubit or qutrit states, got dimension {d}"
        ))),
    }
}

/// `F_p = Tr(χ_ideal χ)`.
pub fn process_fidelity(chi: &ProcessMatrix, ideal: &ProcessMatrix) -> f64 {
    (&ideal.chi * &chi.chi).trace().re
}

/// `(|eg⟩ + e^{iφ}|ge⟩)/√2` in the basis `gg, ge, eg, ee`, sender first.
pub fn bell_target(phase: f64) -> CVector {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = CVector::zeros(4);
    v[2] = C64::from(h);
    v[1] = C64::from_polar(h, phase);
    v
}

/// Phase `φ` maximising the overlap with [`bell_target`].
pub fn bell_phase(rho: &DensityMatrix) -> Result<f64> {
    if rho.dim() != 4 {
        return Err(dims("Bell phase requires a two-qubit state"));
    }
    Ok(rho.matrix()[(1, 2)].arg())
}

/// `F_Bell = ⟨Φ|ρ|Φ⟩` for `Φ = bell_target(phase)`.
pub fn bell_fidelity(rho: &DensityMatrix, phase: f64) -> Result<f64> {
    if rho.dim() != 4 {
        return Err(dims("Bell fidelity requires a two-qubit state"));
    }
    let v = bell_target(phase);
    Ok((v.adjoint() * rho.matrix() * &v)[(0, 0)].re)
}
