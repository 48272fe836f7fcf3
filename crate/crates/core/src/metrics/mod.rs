//! Waveform estimators (propagation loss, absorption efficiency,
//! population normalisation, spectra), protocol fidelities and the
//! ablation error budget.

mod budget;
mod experiments;
mod fidelity;
mod waveform;

pub use budget::{error_budget, ErrorBudget, LadderStep, Protocol};
pub use experiments::{absorption_records, loss_records, superposition_input};
pub use fidelity::{bell_run, transfer_process, virtual_z, BellResult, BellSummary, TransferResult, TransferSummary};
pub use waveform::{
    absorption_efficiency, normalize_pg, photon_loss, spectrum, RecordSource, Spectrum, WaveformRecord,
};
