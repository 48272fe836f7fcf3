use serde::Serialize;

use crate::drive::PulseSchedule;
use crate::error::{invalid, Result};
use crate::qcore::{destroy, ket_bra, CMatrix, Coefficient, Generator, Operator, SpaceLayout, TimeGrid};
use crate::units;
use crate::C64;

pub const SENDER_QUTRIT: usize = 0;
pub const SENDER_CAVITY: usize = 1;
pub const RECEIVER_QUTRIT: usize = 2;
pub const RECEIVER_CAVITY: usize = 3;

/// Number of jump operators in the model, including identically zero ones.
pub const CHANNEL_COUNT: usize = 10;

/// Per-node parameters: anharmonicity magnitude and single-pole resonator
/// linewidth in rad/ns, coherence times in ns. Infinite times switch the
/// corresponding process off.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DeviceParams {
    pub alpha: f64,
    pub kappa: f64,
    pub t1_ge: f64,
    pub t1_ef: f64,
    pub t2_ge: f64,
    pub t2_ef: f64,
}

/// Relaxation rates `1/T1` and pure dephasing rates `1/T2 − 1/(2T1)`, 1/ns.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecoherenceRates {
    pub gamma1_ge: f64,
    pub gamma1_ef: f64,
    pub gamma_phi_ge: f64,
    pub gamma_phi_ef: f64,
}

impl DeviceParams {
    pub fn new(alpha: f64, kappa: f64, t1_ge: f64, t1_ef: f64, t2_ge: f64, t2_ef: f64) -> Result<Self> {
        let d = Self {
            alpha,
            kappa,
            t1_ge,
            t1_ef,
            t2_ge,
            t2_ef,
        };
        d.validate()?;
        Ok(d)
    }

    /// Anharmonicity and linewidth in MHz, coherence times in µs.
    pub fn from_cyclic(
        alpha_mhz: f64,
        kappa_mhz: f64,
        t1_ge_us: f64,
        t1_ef_us: f64,
        t2_ge_us: f64,
        t2_ef_us: f64,
    ) -> Result<Self> {
        Self::new(
            units::mhz(alpha_mhz),
            units::mhz(kappa_mhz),
            units::us(t1_ge_us),
            units::us(t1_ef_us),
            units::us(t2_ge_us),
            units::us(t2_ef_us),
        )
    }

    /// Device without relaxation or dephasing.
    pub fn coherent(alpha: f64, kappa: f64) -> Self {
        let inf = f64::INFINITY;
        Self {
            alpha,
            kappa,
            t1_ge: inf,
            t1_ef: inf,
            t2_ge: inf,
            t2_ef: inf,
        }
    }

    /// Copy with shortened relaxation times; each `T2` shrinks by the same
    /// factor as its `T1`, so the ratio `T2/T1` is preserved.
    pub fn with_degraded_t1(&self, t1_ge: f64, t1_ef: f64) -> Result<Self> {
        let scale = |t2: f64, old: f64, new: f64| if old.is_infinite() { t2 } else { t2 * new / old };
        Self::new(
            self.alpha,
            self.kappa,
            t1_ge,
            t1_ef,
            scale(self.t2_ge, self.t1_ge, t1_ge),
            scale(self.t2_ef, self.t1_ef, t1_ef),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(invalid("anharmonicity must be positive"));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(invalid("resonator linewidth must be positive"));
        }
        for (name, t1, t2) in [("ge", self.t1_ge, self.t2_ge), ("ef", self.t1_ef, self.t2_ef)] {
            if !(t1 > 0.0) || !(t2 > 0.0) {
                return Err(invalid(format!("coherence times ({name}) must be positive")));
            }
            if t2 > 2.0 * t1 {
                return Err(invalid(format!(
                    "T2_{name} = {t2} ns exceeds 2 T1_{name} = {} ns",
                    2.0 * t1
                )));
            }
        }
        Ok(())
    }

    pub fn rates(&self) -> DecoherenceRates {
        let inv = |t: f64| if t.is_infinite() { 0.0 } else { 1.0 / t };
        DecoherenceRates {
            gamma1_ge: inv(self.t1_ge),
            gamma1_ef: inv(self.t1_ef),
            gamma_phi_ge: (inv(self.t2_ge) - 0.5 * inv(self.t1_ge)).max(0.0),
            gamma_phi_ef: (inv(self.t2_ef) - 0.5 * inv(self.t1_ef)).max(0.0),
        }
    }
}

/// Link efficiency `η = (1 − L) η_abs` from propagation loss `L` and
/// absorption efficiency `η_abs`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChannelParams {
    pub loss: f64,
    pub absorption_efficiency: f64,
}

impl ChannelParams {
    pub fn new(loss: f64, absorption_efficiency: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&loss) || !(0.0..=1.0).contains(&absorption_efficiency) {
            return Err(invalid("loss and absorption efficiency must lie in [0, 1]"));
        }
        Ok(Self {
            loss,
            absorption_efficiency,
        })
    }

    /// Lossless link with perfect absorption.
    pub fn ideal() -> Self {
        Self {
            loss: 0.0,
            absorption_efficiency: 1.0,
        }
    }

    /// Pure propagation loss with the given end-to-end efficiency.
    pub fn from_eta(eta: f64) -> Result<Self> {
        Self::new(1.0 - eta, 1.0)
    }

    pub fn eta(&self) -> f64 {
        (1.0 - self.loss) * self.absorption_efficiency
    }

    /// Fraction of the sender rate `κ_tx` that survives propagation but is
    /// not absorbed, `(1 − L)(1 − η_abs)`. It is part of the loss channel
    /// dynamically and is reported separately as a field on the line.
    pub fn bypass_fraction(&self) -> f64 {
        (1.0 - self.loss) * (1.0 - self.absorption_efficiency)
    }
}

/// Switches for the ablation ladder.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Mechanisms {
    pub relaxation: bool,
    pub dephasing: bool,
}

impl Mechanisms {
    pub const ALL: Mechanisms = Mechanisms {
        relaxation: true,
        dephasing: true,
    };
    pub const NONE: Mechanisms = Mechanisms {
        relaxation: false,
        dephasing: false,
    };
}

impl Default for Mechanisms {
    fn default() -> Self {
        Self::ALL
    }
}

/// Everything needed to build a [`CascadeModel`].
#[derive(Clone, Debug)]
pub struct CascadeConfig {
    pub sender: DeviceParams,
    pub receiver: DeviceParams,
    pub channel: ChannelParams,
    pub mechanisms: Mechanisms,
    /// Emission drive on the sender; `None` keeps it off.
    pub sender_schedule: Option<PulseSchedule>,
    /// Absorption drive on the receiver; `None` keeps it off.
    pub receiver_schedule: Option<PulseSchedule>,
    pub grid: TimeGrid,
}

impl CascadeConfig {
    pub fn eta(&self) -> f64 {
        self.channel.eta()
    }
}

/// Assembled generator with the operators needed to read out records.
#[derive(Clone, Debug)]
pub struct CascadeModel {
    pub(crate) config: CascadeConfig,
    pub(crate) generator: Generator,
    pub(crate) layout: SpaceLayout,
    pub(crate) a_tx: Operator,
    pub(crate) a_rx: Operator,
    pub(crate) sender_projectors: [Operator; 3],
    pub(crate) receiver_projectors: [Operator; 3],
    pub(crate) rate_bound: f64,
}

impl CascadeModel {
    pub fn config(&self) -> &CascadeConfig {
        &self.config
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn a_tx(&self) -> &Operator {
        &self.a_tx
    }

    pub fn a_rx(&self) -> &Operator {
        &self.a_rx
    }

    /// Fastest physical rate: `max{κ_tx, κ_rx, max g_eff, decoherence}`.
    pub fn rate_bound(&self) -> f64 {
        self.rate_bound
    }

    /// `H(t)` at time `t` (rad/ns).
    pub fn hamiltonian_at(&self, t: f64) -> Operator {
        self.generator.hamiltonian_at(t)
    }
}

pub(crate) fn layout() -> SpaceLayout {
    SpaceLayout::from_pairs(&[
        ("sender-qutrit", 3),
        ("sender-cavity", 2),
        ("receiver-qutrit", 3),
        ("receiver-cavity", 2),
    ])
    .expect("static layout")
}

/// Builds the generator
///
/// `H = Σ_μ [−(α_μ/2) b†b + (α_μ/2) b†b†bb]
///    + Σ_μ g_μ(t) (a_μ b_μ†b_μ† + h.c.)/√2
///    + (i/2)√(η κ_tx κ_rx)(a_tx† a_rx − a_rx† a_tx)`
///
/// with jump operators `√(ηκ_tx) a_tx + √κ_rx a_rx`, `√((1−η)κ_tx) a_tx`,
/// and per node `√γ1_ge |g⟩⟨e|`, `√γ1_ef |e⟩⟨f|`,
/// `√γφ_ge (|e⟩⟨e| − |g⟩⟨g|)`, `√γφ_ef (|f⟩⟨f| − |e⟩⟨e|)`.
///
/// The exchange term carries the sign for which the shared jump operator
/// feeds the sender output into the receiver and not the reverse.
pub fn build(config: &CascadeConfig) -> Result<CascadeModel> {
    config.sender.validate()?;
    config.receiver.validate()?;
    let eta = config.eta();
    if !(0.0..=1.0).contains(&eta) {
        return Err(invalid("eta must lie in [0, 1]"));
    }
    let l = layout();
    let c = |x: f64| C64::new(x, 0.0);
    let b = destroy(3);
    let a = destroy(2);
    let b_tx = Operator::embed(&l, SENDER_QUTRIT, &b)?;
    let b_rx = Operator::embed(&l, RECEIVER_QUTRIT, &b)?;
    let a_tx = Operator::embed(&l, SENDER_CAVITY, &a)?;
    let a_rx = Operator::embed(&l, RECEIVER_CAVITY, &a)?;
    let (k_tx, k_rx) = (config.sender.kappa, config.receiver.kappa);

    let mut g = Generator::new(l.clone());
    let mut h0 = CMatrix::zeros(l.dim(), l.dim());
    for (bq, dev) in [(&b_tx, &config.sender), (&b_rx, &config.receiver)] {
        let bd = bq.dagger();
        let n = bd.matrix() * bq.matrix();
        let nn = bd.matrix() * bd.matrix() * bq.matrix() * bq.matrix();
        h0 += n * c(-0.5 * dev.alpha) + nn * c(0.5 * dev.alpha);
    }
    let hop = a_tx.dagger().matrix() * a_rx.matrix();
    let exchange = (&hop - hop.adjoint()) * C64::new(0.0, 0.5 * (eta * k_tx * k_rx).sqrt());
    h0 += exchange;
    g.add_static_hamiltonian(Operator::new(l.clone(), h0)?)?;

    let mut max_g: f64 = 0.0;
    let sqrt2 = std::f64::consts::SQRT_2;
    for (sched, aq, bq) in [
        (&config.sender_schedule, &a_tx, &b_tx),
        (&config.receiver_schedule, &a_rx, &b_rx),
    ] {
        if let Some(s) = sched {
            let bd = bq.dagger();
            let m = aq.matrix() * bd.matrix() * bd.matrix();
            let term = (&m + m.adjoint()) * c(1.0 / sqrt2);
            g.add_hamiltonian(Coefficient::Sampled(s.signal()), Operator::new(l.clone(), term)?)?;
            max_g = max_g.max(s.peak());
        }
    }

    let collective = a_tx.scale_re((eta * k_tx).sqrt()).add(&a_rx.scale_re(k_rx.sqrt()))?;
    g.add_channel(vec![(Coefficient::Constant(1.0), collective)])?;
    g.add_channel(vec![(
        Coefficient::Constant(1.0),
        a_tx.scale_re(((1.0 - eta).max(0.0) * k_tx).sqrt()),
    )])?;

    let mut max_rate = k_tx.max(k_rx).max(max_g);
    let p = |i: usize, j: usize| ket_bra(3, i, j);
    for (factor, dev) in [(SENDER_QUTRIT, &config.sender), (RECEIVER_QUTRIT, &config.receiver)] {
        let r = dev.rates();
        let (g1ge, g1ef) = if config.mechanisms.relaxation {
            (r.gamma1_ge, r.gamma1_ef)
        } else {
            (0.0, 0.0)
        };
        let (gpge, gpef) = if config.mechanisms.dephasing {
            (r.gamma_phi_ge, r.gamma_phi_ef)
        } else {
            (0.0, 0.0)
        };
        max_rate = max_rate.max(g1ge).max(g1ef).max(gpge).max(gpef);
        let ops = [
            (p(0, 1), g1ge),
            (p(1, 2), g1ef),
            (p(1, 1) - p(0, 0), gpge),
            (p(2, 2) - p(1, 1), gpef),
        ];
        for (op, rate) in ops {
            let big = Operator::embed(&l, factor, &op)?.scale_re(rate.sqrt());
            g.add_channel(vec![(Coefficient::Constant(1.0), big)])?;
        }
    }
    debug_assert_eq!(g.channel_count(), CHANNEL_COUNT);

    let proj = |factor: usize, k: usize| Operator::embed(&l, factor, &p(k, k));
    Ok(CascadeModel {
        config: config.clone(),
        generator: g,
        layout: l.clone(),
        a_tx,
        a_rx,
        sender_projectors: [
            proj(SENDER_QUTRIT, 0)?,
            proj(SENDER_QUTRIT, 1)?,
            proj(SENDER_QUTRIT, 2)?,
        ],
        receiver_projectors: [
            proj(RECEIVER_QUTRIT, 0)?,
            proj(RECEIVER_QUTRIT, 1)?,
            proj(RECEIVER_QUTRIT, 2)?,
        ],
        rate_bound: max_rate,
    })
}
