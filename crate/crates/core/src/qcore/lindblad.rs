use super::operator::{CMatrix, Operator};
use super::state::DensityMatrix;
use crate::error::{dims, invalid, Result};
use crate::C64;

/// Jump operator `L = √rate · O` entering the dissipator
/// `D[L]ρ = LρL† − {L†L, ρ}/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct CollapseChannel {
    operator: Operator,
}

impl CollapseChannel {
    /// Scales `op` by `√rate`; `rate` is in 1/ns (or rad/ns).
    pub fn new(op: Operator, rate: f64) -> Result<Self> {
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(invalid(format!("channel rate {rate} must be finite and >= 0")));
        }
        Self::from_scaled(op.scale_re(rate.sqrt()))
    }

    /// Wraps an operator that already carries the `√rate` factor.
    pub fn from_scaled(op: Operator) -> Result<Self> {
        if !op.is_finite() {
            return Err(invalid("channel operator has non-finite entries"));
        }
        Ok(Self { operator: op })
    }

    pub fn operator(&self) -> &Operator {
        &self.operator
    }
}

/// Dense evaluation of `−i[H, ρ] + Σ_k D[L_k]ρ`.
pub fn lindblad_rhs(h: &Operator, channels: &[CollapseChannel], rho: &DensityMatrix) -> Result<CMatrix> {
    if h.layout() != rho.layout() {
        return Err(dims("Hamiltonian and state layouts differ"));
    }
    let r = rho.matrix();
    let mi = C64::new(0.0, -1.0);
    let hm = h.matrix();
    let mut out = (hm * r - r * hm) * mi;
    for ch in channels {
        if ch.operator.layout() != rho.layout() {
            return Err(dims("channel and state layouts differ"));
        }
        let l = ch.operator.matrix();
        let ld = l.adjoint();
        let ldl = &ld * l;
        out += l * r * &ld - (&ldl * r + r * &ldl) * C64::new(0.5, 0.0);
    }
    Ok(out)
}
