//! Cascaded master equation for a sender and a receiver node linked by a
//! unidirectional transmission line, and the protocols run on it.
//!
//! Each node is a transmon qutrit (`g`, `e`, `f`) coupled through a drive
//! dressed `|f0⟩–|g1⟩` transition to a single-pole transfer resonator
//! truncated at one photon, giving the layout `[3, 2, 3, 2]`.

mod model;
mod protocols;
mod scenario;

pub use model::{
    build, CascadeConfig, CascadeModel, ChannelParams, DecoherenceRates, DeviceParams, Mechanisms, CHANNEL_COUNT,
    RECEIVER_CAVITY, RECEIVER_QUTRIT, SENDER_CAVITY, SENDER_QUTRIT,
};
pub use protocols::{
    pi_ef, receiver_qubit_state, run_bell, run_emission, run_sequence, run_transfer, two_qubit_state, EmissionRecord,
    RecordSummary,
};
pub use scenario::{receiver_f_population, CascadeScenario, REFERENCE_KAPPA_MHZ};
