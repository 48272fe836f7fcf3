use std::io::Write;

use serde::Serialize;

use super::model::{CascadeModel, RECEIVER_QUTRIT, SENDER_QUTRIT};
use crate::drive::PulseSchedule;
use crate::error::{dims, invalid, Result};
use crate::qcore::{basis_ket, evolve, CMatrix, CVector, DensityMatrix, EvolveOptions, Operator, StepControl};
use crate::C64;

/// Time traces of one protocol run. Fields are in `√(1/ns)`.
#[derive(Clone, Debug)]
pub struct EmissionRecord {
    pub times: Vec<f64>,
    /// Collective line field `√(ηκ_tx)⟨a_tx⟩ + √κ_rx⟨a_rx⟩` past the receiver.
    pub a_out: Vec<C64>,
    /// Field that reaches the receiver but is not absorbed in the
    /// `η = (1 − L)η_abs` factorisation: `√((1−L)(1−η_abs)κ_tx)⟨a_tx⟩`.
    pub a_bypass: Vec<C64>,
    pub a_tx: Vec<C64>,
    pub a_rx: Vec<C64>,
    /// Photon-number flux `⟨L†L⟩` of the collective output `L`, 1/ns.
    pub photon_flux: Vec<f64>,
    /// Number flux into the unabsorbed part of the loss channel, 1/ns.
    pub bypass_photon_flux: Vec<f64>,
    /// `[P_g, P_e, P_f]` of the sender qutrit at each time.
    pub sender_populations: Vec<[f64; 3]>,
    pub receiver_populations: Vec<[f64; 3]>,
    pub final_state: DensityMatrix,
}

impl EmissionRecord {
    /// Trapezoidal `∫|⟨a_out⟩|² dt`.
    pub fn flux(&self) -> f64 {
        trapezoid_power(&self.times, &self.a_out)
    }

    /// Trapezoidal `∫⟨L†L⟩ dt`: photons leaving through the collective
    /// output.
    pub fn photons_out(&self) -> f64 {
        trapezoid_real(&self.times, &self.photon_flux)
    }

    /// CSV with time, field quadratures and qutrit populations.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "time_ns,a_out_re,a_out_im,bypass_re,bypass_im,tx_pg,tx_pe,tx_pf,rx_pg,rx_pe,rx_pf"
        )?;
        for k in 0..self.times.len() {
            let (s, r) = (self.sender_populations[k], self.receiver_populations[k]);
            writeln!(
                w,
                "{:.11e},{:.11e},{:.11e},{:.11e},{:.11e},{:.11e},{:.11e},{:.11e},{:.11e},{:.11e},{:.11e}",
                self.times[k],
                self.a_out[k].re,
                self.a_out[k].im,
                self.a_bypass[k].re,
                self.a_bypass[k].im,
                s[0],
                s[1],
                s[2],
                r[0],
                r[1],
                r[2]
            )?;
        }
        Ok(())
    }
}

pub(crate) fn trapezoid_power(times: &[f64], field: &[C64]) -> f64 {
    times
        .windows(2)
        .zip(field.windows(2))
        .map(|(t, f)| 0.5 * (t[1] - t[0]) * (f[0].norm_sqr() + f[1].norm_sqr()))
        .sum()
}

pub(crate) fn trapezoid_real(times: &[f64], y: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(y.windows(2))
        .map(|(t, f)| 0.5 * (t[1] - t[0]) * (f[0] + f[1]))
        .sum()
}

/// Ideal `π` rotation about `x` in the `e`–`f` subspace.
pub fn pi_ef() -> CMatrix {
    let z = C64::new(0.0, 0.0);
    let mi = C64::new(0.0, -1.0);
    let one = C64::new(1.0, 0.0);
    CMatrix::from_row_slice(3, 3, &[one, z, z, z, z, mi, z, mi, z])
}

fn apply_local(model: &CascadeModel, rho: &DensityMatrix, factor: usize, u: &CMatrix) -> Result<DensityMatrix> {
    let big = Operator::embed(model.layout(), factor, u)?;
    let m = big.matrix() * rho.matrix() * big.matrix().adjoint();
    DensityMatrix::from_matrix_unchecked(model.layout().clone(), m)
}

/// Normalised qutrit ket; qubit kets are embedded in `{g, e}`.
fn qutrit_ket(v: &CVector) -> Result<CVector> {
    let v = match v.len() {
        3 => v.clone(),
        2 => CVector::from_vec(vec![v[0], v[1], C64::new(0.0, 0.0)]),
        _ => return Err(dims("qutrit state must have 2 or 3 amplitudes")),
    };
    let n = v.norm();
    if !(n > 0.0) {
        return Err(invalid("qutrit state has zero norm"));
    }
    Ok(v / C64::new(n, 0.0))
}

/// Integrates the model from sender and receiver qutrit kets with both
/// cavities in vacuum.
pub fn run_sequence(model: &CascadeModel, sender: &CVector, receiver: &CVector) -> Result<EmissionRecord> {
    let s = qutrit_ket(sender)?;
    let r = qutrit_ket(receiver)?;
    let vac = basis_ket(2, 0);
    let ket = s.kronecker(&vac).kronecker(&r).kronecker(&vac);
    let rho0 = DensityMatrix::pure(model.layout().clone(), &ket)?;
    run_from(model, &rho0)
}

pub(crate) fn run_from(model: &CascadeModel, rho0: &DensityMatrix) -> Result<EmissionRecord> {
    let cfg = model.config();
    let eta = cfg.eta();
    let (k_tx, k_rx) = (cfg.sender.kappa, cfg.receiver.kappa);
    let c_tx = (eta * k_tx).sqrt();
    let c_rx = k_rx.sqrt();
    let c_by = (cfg.channel.bypass_fraction() * k_tx).sqrt();
    let out = model.a_tx.scale_re(c_tx).add(&model.a_rx.scale_re(c_rx))?;
    let n_out = out.dagger().compose(&out)?;
    let n_tx = model.a_tx.dagger().compose(&model.a_tx)?;
    let mut observers = vec![model.a_tx.clone(), model.a_rx.clone()];
    observers.extend(model.sender_projectors.iter().cloned());
    observers.extend(model.receiver_projectors.iter().cloned());
    observers.push(n_out);
    observers.push(n_tx);
    let opts = EvolveOptions {
        step: StepControl::RateBound(model.rate_bound()),
        ..Default::default()
    };
    let tr = evolve(rho0, model.generator(), &cfg.grid, &observers, &opts)?;
    let e = &tr.expectations;
    let n = tr.times.len();
    let pops = |o: usize, k: usize| [e[o][k].re, e[o + 1][k].re, e[o + 2][k].re];
    Ok(EmissionRecord {
        a_out: (0..n).map(|k| e[0][k] * c_tx + e[1][k] * c_rx).collect(),
        a_bypass: (0..n).map(|k| e[0][k] * c_by).collect(),
        a_tx: e[0].clone(),
        a_rx: e[1].clone(),
        photon_flux: e[8].iter().map(|z| z.re).collect(),
        bypass_photon_flux: e[9].iter().map(|z| z.re * c_by * c_by).collect(),
        sender_populations: (0..n).map(|k| pops(2, k)).collect(),
        receiver_populations: (0..n).map(|k| pops(5, k)).collect(),
        final_state: tr.final_state,
        times: tr.times,
    })
}

/// Emission from the sender prepared in `sender` with the receiver drive off.
pub fn run_emission(model: &CascadeModel, sender: &CVector) -> Result<EmissionRecord> {
    if model
        .config()
        .receiver_schedule
        .as_ref()
        .is_some_and(|s: &PulseSchedule| s.peak() > 0.0)
    {
        return Err(invalid("emission runs require the receiver drive to be off"));
    }
    run_sequence(model, sender, &basis_ket(3, 0))
}

/// State transfer: the qutrit input (normally a `g`/`e` qubit state) is
/// mapped `e → f` by an ideal `π_ef` at the sender, emitted, absorbed, and
/// mapped back by `π_ef` at the receiver. Returns the final composite state.
pub fn run_transfer(model: &CascadeModel, input: &CVector) -> Result<DensityMatrix> {
    let prepared = pi_ef() * qutrit_ket(input)?;
    let rec = run_sequence(model, &prepared, &basis_ket(3, 0))?;
    apply_local(model, &rec.final_state, RECEIVER_QUTRIT, &pi_ef())
}

/// Remote entanglement: the sender starts in `(|e⟩ + |f⟩)/√2`, so half an
/// excitation is emitted while `e` stays behind; after absorption and
/// `π_ef` at the receiver the qubits approach `(|eg⟩ + e^{iφ}|ge⟩)/√2`.
pub fn run_bell(model: &CascadeModel) -> Result<DensityMatrix> {
    let s = (basis_ket(3, 1) + basis_ket(3, 2)) / C64::new(2f64.sqrt(), 0.0);
    let rec = run_sequence(model, &s, &basis_ket(3, 0))?;
    apply_local(model, &rec.final_state, RECEIVER_QUTRIT, &pi_ef())
}

/// Receiver qubit state: trace out everything but the receiver qutrit and
/// project onto `{g, e}`. Also returns the retained population.
pub fn receiver_qubit_state(final_state: &DensityMatrix) -> Result<(DensityMatrix, f64)> {
    let q = final_state.partial_trace(&[RECEIVER_QUTRIT])?;
    q.project_levels(&[vec![0, 1]])
}

/// Two-qubit state of sender and receiver qutrits projected onto the
/// qubit subspace, with the retained population.
pub fn two_qubit_state(final_state: &DensityMatrix) -> Result<(DensityMatrix, f64)> {
    let q = final_state.partial_trace(&[SENDER_QUTRIT, RECEIVER_QUTRIT])?;
    q.project_levels(&[vec![0, 1], vec![0, 1]])
}

/// Serializable summary of a record for JSON export.
#[derive(Clone, Debug, Serialize)]
pub struct RecordSummary {
    pub flux: f64,
    pub final_sender_populations: [f64; 3],
    pub final_receiver_populations: [f64; 3],
}

impl From<&EmissionRecord> for RecordSummary {
    fn from(r: &EmissionRecord) -> Self {
        Self {
            flux: r.flux(),
            final_sender_populations: *r.sender_populations.last().expect("non-empty record"),
            final_receiver_populations: *r.receiver_populations.last().expect("non-empty record"),
        }
    }
}
