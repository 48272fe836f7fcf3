//! Drive dressing of the transmon qutrit and photon wave-packet shaping.

mod dress;
mod schedule;
mod waveform;

pub use dress::{dress, first_order_g_eff_factor, DressedQutrit, DrivenQutritParams};
pub use schedule::{
    absorption_schedule, emission_schedule, instantaneous_rate, optimize_delay, DelayScan, Direction, PulseSchedule,
    RATE_DENOMINATOR_FLOOR,
};
pub(crate) use waveform::trapezoid;
pub use waveform::{target_waveform, PhotonWaveform, WaveformShape};
