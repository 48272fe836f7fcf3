use rayon::prelude::*;
use serde::Serialize;

use crate::cascade::{run_bell, run_transfer, two_qubit_state, CascadeModel, RECEIVER_QUTRIT, SENDER_QUTRIT};
use crate::error::Result;
use crate::qcore::{CMatrix, DensityMatrix};
use crate::tomo::{bell_fidelity, bell_phase, cardinal_states, process_fidelity, process_tomography, ProcessMatrix};
use crate::C64;

/// Exact outcome of state transfer for the six cardinal inputs.
#[derive(Clone, Debug)]
pub struct TransferResult {
    /// Receiver qutrit states after the virtual-Z phase correction, in the
    /// order of [`crate::tomo::CARDINAL_LABELS`].
    pub receiver_states: Vec<DensityMatrix>,
    pub chi: ProcessMatrix,
    pub process_fidelity: f64,
    /// Virtual-Z angle removed from the receiver, rad.
    pub phase: f64,
    /// Mean receiver population outside `{g, e}`.
    pub leakage: f64,
}

/// Serializable digest of a [`TransferResult`].
#[derive(Clone, Debug, Serialize)]
pub struct TransferSummary {
    pub process_fidelity: f64,
    pub phase: f64,
    pub leakage: f64,
    pub state_fidelities: Vec<f64>,
}

impl TransferResult {
    /// Fidelity of each receiver qubit state to its cardinal input, after
    /// projection onto `{g, e}`.
    pub fn state_fidelities(&self) -> Result<Vec<f64>> {
        self.receiver_states
            .iter()
            .zip(cardinal_states())
            .map(|(r, k)| {
                let (q, _) = r.project_levels(&[vec![0, 1]])?;
                q.fidelity_pure(&k)
            })
            .collect()
    }

    pub fn summary(&self) -> Result<TransferSummary> {
        Ok(TransferSummary {
            process_fidelity: self.process_fidelity,
            phase: self.phase,
            leakage: self.leakage,
            state_fidelities: self.state_fidelities()?,
        })
    }
}

/// Phase rotation `diag(1, e^{−iθ}, 1)` on a qutrit state.
pub fn virtual_z(rho: &DensityMatrix, theta: f64) -> Result<DensityMatrix> {
    let mut z = CMatrix::identity(rho.dim(), rho.dim());
    z[(1, 1)] = C64::from_polar(1.0, -theta);
    DensityMatrix::from_matrix_unchecked(rho.layout().clone(), &z * rho.matrix() * z.adjoint())
}

/// Transfers the six cardinal states and reconstructs the process.
///
/// The map is linear in the input density matrix, so only `g`, `e`, `+`
/// and `+i` are integrated; `ρ(−) = ρ(g) + ρ(e) − ρ(+)` and likewise for
/// `−i`. The receiver phase is aligned by a virtual Z chosen so that the
/// `|+⟩` output has a real positive `ρ_eg`.
pub fn transfer_process(model: &CascadeModel) -> Result<TransferResult> {
    let inputs = cardinal_states();
    let run: Vec<DensityMatrix> = [0usize, 1, 2, 4]
        .par_iter()
        .map(|&k| run_transfer(model, &inputs[k])?.partial_trace(&[RECEIVER_QUTRIT]))
        .collect::<Result<_>>()?;
    let (g, e, p, pi) = (&run[0], &run[1], &run[2], &run[3]);
    let combo = |x: &DensityMatrix| {
        DensityMatrix::from_matrix_unchecked(g.layout().clone(), g.matrix() + e.matrix() - x.matrix())
    };
    let raw = vec![g.clone(), e.clone(), p.clone(), combo(p)?, pi.clone(), combo(pi)?];
    let phase = p.matrix()[(1, 0)].arg();
    let receiver_states: Vec<DensityMatrix> = raw.iter().map(|r| virtual_z(r, phase)).collect::<Result<_>>()?;
    for r in &receiver_states {
        r.validate(1e-6, 1e-8, 1e-6)?;
    }
    let leakage = receiver_states.iter().map(|r| r.matrix()[(2, 2)].re).sum::<f64>() / 6.0;
    let chi = process_tomography(&inputs, &receiver_states)?;
    let process_fidelity = process_fidelity(&chi, &ProcessMatrix::identity());
    Ok(TransferResult {
        receiver_states,
        chi,
        process_fidelity,
        phase,
        leakage,
    })
}

/// Exact outcome of the remote-entanglement protocol.
#[derive(Clone, Debug)]
pub struct BellResult {
    /// Sender and receiver qutrits (`9 × 9`).
    pub qutrit_state: DensityMatrix,
    /// Projection onto the two-qubit subspace, renormalised.
    pub qubit_state: DensityMatrix,
    /// Population retained by the projection.
    pub retained: f64,
    /// Target phase `φ` aligned to the state's own coherence.
    pub phase: f64,
    pub fidelity: f64,
}

/// Digest of a [`BellResult`] for JSON export.
#[derive(Clone, Debug, Serialize)]
pub struct BellSummary {
    pub fidelity: f64,
    pub phase: f64,
    pub retained: f64,
}

impl BellResult {
    pub fn summary(&self) -> BellSummary {
        BellSummary {
            fidelity: self.fidelity,
            phase: self.phase,
            retained: self.retained,
        }
    }
}

pub fn bell_run(model: &CascadeModel) -> Result<BellResult> {
    let fin = run_bell(model)?;
    let qutrit_state = fin.partial_trace(&[SENDER_QUTRIT, RECEIVER_QUTRIT])?;
    let (qubit_state, retained) = two_qubit_state(&fin)?;
    let phase = bell_phase(&qubit_state)?;
    let fidelity = bell_fidelity(&qubit_state, phase)?;
    Ok(BellResult {
        qutrit_state,
        qubit_state,
        retained,
        phase,
        fidelity,
    })
}
