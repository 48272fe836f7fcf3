//! Simulated dispersive readout, assignment correction, qutrit state
//! tomography by maximum likelihood and qubit process tomography.

mod mle;
mod pipeline;
mod process;
mod readout;

pub use mle::{
    informationally_complete, mle_state, outcome_probabilities, qutrit_rotation, qutrit_settings, two_qutrit_settings,
    MleOptions, TomographySetting,
};
pub use pipeline::{reconstruct_states, Reconstruction, TomographyRun};
pub use process::{
    bell_fidelity, bell_phase, bell_target, cardinal_states, process_fidelity, process_tomography, ProcessMatrix,
    CARDINAL_LABELS,
};
pub use readout::{
    calibrate, correct, correct_joint, project_to_simplex, synth_shots, AssignmentMatrix, Blob, Calibration,
    Classifier, CorrectedPopulations, IQShot, ReadoutModel,
};
