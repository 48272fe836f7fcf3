use serde::Serialize;

use super::model::{build, CascadeConfig, CascadeModel, ChannelParams, DeviceParams, Mechanisms};
use super::protocols::run_sequence;
use crate::drive::{absorption_schedule, emission_schedule, target_waveform};
use crate::error::Result;
use crate::qcore::{basis_ket, TimeGrid};
use crate::units;

/// High-level description of a link experiment from which drive schedules,
/// the time grid and the cascade model are derived.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CascadeScenario {
    pub sender: DeviceParams,
    pub receiver: DeviceParams,
    pub channel: ChannelParams,
    pub mechanisms: Mechanisms,
    /// Photon bandwidth parameter `κ_ph`, rad/ns.
    pub kappa_ph: f64,
    /// Schedule half-width in units of `1/κ_ph`.
    pub window: f64,
    /// Samples in each drive schedule.
    pub samples: usize,
    /// Absorption delay, ns.
    pub delay: f64,
    /// Spacing of recorded output times, ns.
    pub output_step: f64,
}

/// Cavity linewidths used for the reference sender and receiver, MHz.
pub const REFERENCE_KAPPA_MHZ: (f64, f64) = (150.0, 200.0);

impl CascadeScenario {
    /// Reference link: measured device anharmonicities and coherence times
    /// (Ramsey `T2*`), `L = 0.29`, `η_abs = 0.95`, `κ_ph/2π = 2 MHz`, a
    /// `±5/κ_ph` window and zero absorption delay.
    pub fn reference() -> Self {
        let (ktx, krx) = REFERENCE_KAPPA_MHZ;
        Self {
            sender: DeviceParams::from_cyclic(356.0, ktx, 20.0, 7.6, 22.0, 7.3).expect("valid sender"),
            receiver: DeviceParams::from_cyclic(352.0, krx, 18.0, 8.6, 15.0, 5.9).expect("valid receiver"),
            channel: ChannelParams::new(0.29, 0.95).expect("valid channel"),
            mechanisms: Mechanisms::ALL,
            kappa_ph: units::mhz(2.0),
            window: 5.0,
            samples: 2001,
            delay: 0.0,
            output_step: 1.0,
        }
    }

    /// Config with the sender drive on and the receiver drive on or off.
    pub fn config(&self, receiver_on: bool) -> Result<CascadeConfig> {
        let target = target_waveform(self.kappa_ph, self.window, self.samples)?;
        let tx = emission_schedule(&target, self.sender.kappa)?;
        let rx = absorption_schedule(&target, self.receiver.kappa, self.delay)?;
        let (t0, t1) = if receiver_on {
            (tx.start().min(rx.start()), tx.end().max(rx.end()))
        } else {
            (tx.start(), tx.end())
        };
        let n = ((t1 - t0) / self.output_step).ceil().max(1.0) as usize + 1;
        Ok(CascadeConfig {
            sender: self.sender,
            receiver: self.receiver,
            channel: self.channel,
            mechanisms: self.mechanisms,
            sender_schedule: Some(tx),
            receiver_schedule: receiver_on.then_some(rx),
            grid: TimeGrid::uniform(t0, t1, n)?,
        })
    }

    pub fn model(&self, receiver_on: bool) -> Result<CascadeModel> {
        build(&self.config(receiver_on)?)
    }

    /// Copy with coherent devices and a lossless channel.
    pub fn idealized(&self) -> Self {
        let mut s = self.clone();
        s.channel = ChannelParams::ideal();
        s.mechanisms = Mechanisms::NONE;
        s
    }
}

/// Receiver `|f⟩` population at the end of an emission from `|f⟩` followed
/// by absorption with the scenario's delay.
pub fn receiver_f_population(s: &CascadeScenario) -> Result<f64> {
    let model = s.model(true)?;
    let rec = run_sequence(&model, &basis_ket(3, 2), &basis_ket(3, 0))?;
    Ok(rec.receiver_populations.last().expect("non-empty")[2])
}
