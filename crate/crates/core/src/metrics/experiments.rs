use super::waveform::{RecordSource, WaveformRecord};
use crate::cascade::{run_sequence, CascadeScenario, ChannelParams};
use crate::error::Result;
use crate::qcore::{basis_ket, CVector};
use crate::C64;

/// Sender preparation `(|g⟩ + |f⟩)/√2` whose emission has a coherent field.
pub fn superposition_input() -> CVector {
    (basis_ket(3, 0) + basis_ket(3, 2)) / C64::new(2f64.sqrt(), 0.0)
}

fn emission(s: &CascadeScenario, receiver_on: bool, source: RecordSource) -> Result<WaveformRecord> {
    let model = s.model(receiver_on)?;
    let rec = run_sequence(&model, &superposition_input(), &basis_ket(3, 0))?;
    WaveformRecord::from_emission(&rec, source)
}

/// Loss measurement records: the sender photon after the lossy link (`tx`)
/// and the same emission through a lossless link (`rx`). Receiver drive off.
pub fn loss_records(s: &CascadeScenario) -> Result<(WaveformRecord, WaveformRecord)> {
    let tx = emission(s, false, RecordSource::Tx)?;
    let mut lossless = s.clone();
    lossless.channel = ChannelParams::new(0.0, s.channel.absorption_efficiency)?;
    let rx = emission(&lossless, false, RecordSource::Rx)?;
    Ok((tx, rx))
}

/// Absorption measurement records: line output with the receiver absorbing
/// at the scenario delay (`abs`) and with its drive off (`ref`).
pub fn absorption_records(s: &CascadeScenario) -> Result<(WaveformRecord, WaveformRecord)> {
    let abs = emission(s, true, RecordSource::Abs)?;
    let reference = emission(s, false, RecordSource::Ref)?;
    Ok((abs, reference))
}
