use rayon::prelude::*;
use serde::Serialize;

use super::fidelity::{bell_run, transfer_process};
use crate::cascade::{CascadeScenario, ChannelParams, Mechanisms};
use crate::error::Result;

/// Protocol whose fidelity is decomposed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    /// Process fidelity of state transfer.
    Transfer,
    /// Bell-state fidelity of remote entanglement.
    Bell,
}

/// One rung of the ablation ladder.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LadderStep {
    pub label: &'static str,
    pub fidelity: f64,
}

/// Infidelity contributions from the ablation ladder.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorBudget {
    pub protocol: Protocol,
    pub ladder: Vec<LadderStep>,
    /// `1 − F` of the ideal run (adiabaticity and truncation).
    pub ideal_infidelity: f64,
    pub photon_loss: f64,
    pub absorption: f64,
    pub energy_relaxation: f64,
    pub dephasing: f64,
    /// Full-model infidelity minus the ideal infidelity and the four
    /// contributions.
    pub residual: f64,
    pub total_infidelity: f64,
}

/// Lower bound below which a contribution signals strong non-additivity.
pub const CONTRIBUTION_FLOOR: f64 = -0.005;

impl ErrorBudget {
    /// Whether every contribution is above [`CONTRIBUTION_FLOOR`].
    pub fn contributions_consistent(&self) -> bool {
        [
            self.photon_loss,
            self.absorption,
            self.energy_relaxation,
            self.dephasing,
        ]
        .iter()
        .all(|c| *c >= CONTRIBUTION_FLOOR)
    }
}

const LABELS: [&str; 6] = [
    "ideal",
    "propagation-loss",
    "loss+absorption",
    "loss+T1",
    "loss+Tphi",
    "full",
];

/// Ablation ladder on `base`: (i) ideal; (ii) propagation loss only,
/// `η = 1 − L`; (iii) full `η = (1 − L)η_abs`; (iv) `η` plus energy
/// relaxation; (v) `η` plus pure dephasing; (vi) everything. Contributions
/// are the stepwise drops (ii)−(i) for loss, (iii)−(ii) for absorption,
/// and (iv)−(iii), (v)−(iii) for relaxation and dephasing.
pub fn error_budget(base: &CascadeScenario, protocol: Protocol) -> Result<ErrorBudget> {
    let mut rungs = Vec::with_capacity(6);
    let with = |channel: ChannelParams, mechanisms: Mechanisms| {
        let mut s = base.clone();
        s.channel = channel;
        s.mechanisms = mechanisms;
        s
    };
    let ch = base.channel;
    let m = base.mechanisms;
    rungs.push(with(ChannelParams::ideal(), Mechanisms::NONE));
    rungs.push(with(ChannelParams::new(ch.loss, 1.0)?, Mechanisms::NONE));
    rungs.push(with(ch, Mechanisms::NONE));
    rungs.push(with(
        ch,
        Mechanisms {
            relaxation: m.relaxation,
            dephasing: false,
        },
    ));
    rungs.push(with(
        ch,
        Mechanisms {
            relaxation: false,
            dephasing: m.dephasing,
        },
    ));
    rungs.push(with(ch, m));
    let f: Vec<f64> = rungs
        .par_iter()
        .map(|s| {
            let model = s.model(true)?;
            match protocol {
                Protocol::Transfer => Ok(transfer_process(&model)?.process_fidelity),
                Protocol::Bell => Ok(bell_run(&model)?.fidelity),
            }
        })
        .collect::<Result<_>>()?;
    let ideal_infidelity = 1.0 - f[0];
    let photon_loss = f[0] - f[1];
    let absorption = f[1] - f[2];
    let energy_relaxation = f[2] - f[3];
    let dephasing = f[2] - f[4];
    let total_infidelity = 1.0 - f[5];
    let residual = total_infidelity - ideal_infidelity - photon_loss - absorption - energy_relaxation - dephasing;
    let b = ErrorBudget {
        protocol,
        ladder: LABELS
            .iter()
            .zip(&f)
            .map(|(l, x)| LadderStep { label: l, fidelity: *x })
            .collect(),
        ideal_infidelity,
        photon_loss,
        absorption,
        energy_relaxation,
        dephasing,
        residual,
        total_infidelity,
    };
    if !b.contributions_consistent() {
        log::warn!("error budget has a contribution below {CONTRIBUTION_FLOOR}: {b:?}");
    }
    Ok(b)
}
