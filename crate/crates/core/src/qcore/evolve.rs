use std::fmt;
use std::sync::Arc;

use super::lindblad::CollapseChannel;
use super::operator::{CMatrix, Operator};
use super::space::SpaceLayout;
use super::sparse::Triplets;
use super::state::DensityMatrix;
use crate::error::{dims, invalid, Error, Result};
use crate::C64;

/// Strictly increasing output times in ns.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(invalid("time grid is empty"));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(invalid("time grid has non-finite entries"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("time grid must be strictly increasing"));
        }
        Ok(Self { times })
    }

    /// `n` points spanning `[t0, t1]` inclusive.
    pub fn uniform(t0: f64, t1: f64, n: usize) -> Result<Self> {
        if n < 2 || !(t1 > t0) {
            return Err(invalid("uniform grid needs n >= 2 and t1 > t0"));
        }
        let dt = (t1 - t0) / (n - 1) as f64;
        Self::new((0..n).map(|k| t0 + dt * k as f64).collect())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Real samples on a uniform grid, linearly interpolated between samples and
/// held at the end values outside the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledSignal {
    t0: f64,
    dt: f64,
    values: Vec<f64>,
}

impl SampledSignal {
    pub fn new(t0: f64, dt: f64, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || !(dt > 0.0) || !t0.is_finite() {
            return Err(invalid("sampled signal needs samples and dt > 0"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("sampled signal has non-finite values"));
        }
        Ok(Self { t0, dt, values })
    }

    /// Builds from explicit sample times, which must be uniform.
    pub fn from_times(times: &[f64], values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() || times.len() < 2 {
            return Err(dims("sample times and values must match (>= 2 samples)"));
        }
        let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
        for (k, t) in times.iter().enumerate() {
            if (t - (times[0] + dt * k as f64)).abs() > 1e-9 * dt.max(1.0) {
                return Err(invalid("sample times are not uniform"));
            }
        }
        Self::new(times[0], dt, values)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.values.len();
        let x = (t - self.t0) / self.dt;
        if x <= 0.0 {
            return self.values[0];
        }
        let k = x.floor() as usize;
        if k + 1 >= n {
            return self.values[n - 1];
        }
        let f = x - k as f64;
        self.values[k] * (1.0 - f) + self.values[k + 1] * f
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Real time-dependent scalar multiplying a generator term.
#[derive(Clone)]
pub enum Coefficient {
    Constant(f64),
    Sampled(SampledSignal),
    /// Closed-form coefficient with a declared bound on `|f(t)|`, used for
    /// automatic step selection.
    Function {
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        bound: f64,
    },
}

impl Coefficient {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Coefficient::Constant(c) => *c,
            Coefficient::Sampled(s) => s.eval(t),
            Coefficient::Function { f, .. } => f(t),
        }
    }

    pub fn max_abs(&self) -> f64 {
        match self {
            Coefficient::Constant(c) => c.abs(),
            Coefficient::Sampled(s) => s.max_abs(),
            Coefficient::Function { bound, .. } => bound.abs(),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Coefficient::Constant(_))
    }
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant(c) => write!(f, "Constant({c})"),
            Coefficient::Sampled(s) => write!(f, "Sampled({} samples)", s.values.len()),
            Coefficient::Function { bound, .. } => write!(f, "Function(|f| <= {bound})"),
        }
    }
}

/// Time-dependent Lindblad generator: `H(t) = Σ_k c_k(t) H_k` and jump
/// operators `L_j(t) = Σ_k c_jk(t) L_jk`.
#[derive(Clone, Debug)]
pub struct Generator {
    layout: SpaceLayout,
    hamiltonian: Vec<(Coefficient, Operator)>,
    channels: Vec<Vec<(Coefficient, Operator)>>,
}

impl Generator {
    pub fn new(layout: SpaceLayout) -> Self {
        Self {
            layout,
            hamiltonian: Vec::new(),
            channels: Vec::new(),
        }
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    /// Adds `c(t) · op` to the Hamiltonian; `op` must be Hermitian.
    pub fn add_hamiltonian(&mut self, c: Coefficient, op: Operator) -> Result<()> {
        self.check(&op)?;
        if op.hermiticity_error() > 1e-12 * (1.0 + op.matrix().norm()) {
            return Err(invalid("Hamiltonian term is not Hermitian"));
        }
        self.hamiltonian.push((c, op));
        Ok(())
    }

    pub fn add_static_hamiltonian(&mut self, op: Operator) -> Result<()> {
        self.add_hamiltonian(Coefficient::Constant(1.0), op)
    }

    /// Adds a jump operator built from weighted terms.
    pub fn add_channel(&mut self, terms: Vec<(Coefficient, Operator)>) -> Result<()> {
        if terms.is_empty() {
            return Err(invalid("channel needs at least one term"));
        }
        for (_, op) in &terms {
            self.check(op)?;
        }
        self.channels.push(terms);
        Ok(())
    }

    pub fn add_collapse(&mut self, ch: CollapseChannel) -> Result<()> {
        self.add_channel(vec![(Coefficient::Constant(1.0), ch.operator().clone())])
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn hamiltonian_at(&self, t: f64) -> Operator {
        let mut m = CMatrix::zeros(self.layout.dim(), self.layout.dim());
        for (c, op) in &self.hamiltonian {
            m += op.matrix() * C64::new(c.eval(t), 0.0);
        }
        Operator::new(self.layout.clone(), m).expect("layout checked on insertion")
    }

    pub fn channels_at(&self, t: f64) -> Vec<CollapseChannel> {
        self.channels
            .iter()
            .map(|terms| {
                let mut m = CMatrix::zeros(self.layout.dim(), self.layout.dim());
                for (c, op) in terms {
                    m += op.matrix() * C64::new(c.eval(t), 0.0);
                }
                CollapseChannel::from_scaled(Operator::new(self.layout.clone(), m).expect("layout checked"))
                    .expect("finite by construction")
            })
            .collect()
    }

    /// Upper bound on the fastest rate in the generator: the largest
    /// Hamiltonian term norm and the largest channel rate `‖L‖²`.
    pub fn rate_bound(&self) -> f64 {
        let h = self
            .hamiltonian
            .iter()
            .map(|(c, op)| c.max_abs() * spectral_norm(op.matrix()))
            .fold(0.0, f64::max);
        let l = self
            .channels
            .iter()
            .map(|terms| {
                let s: f64 = terms
                    .iter()
                    .map(|(c, op)| c.max_abs() * spectral_norm(op.matrix()))
                    .sum();
                s * s
            })
            .fold(0.0, f64::max);
        h.max(l)
    }

    fn check(&self, op: &Operator) -> Result<()> {
        if op.layout() != &self.layout {
            return Err(dims("generator term layout differs"));
        }
        if !op.is_finite() {
            return Err(invalid("generator term has non-finite entries"));
        }
        Ok(())
    }
}

fn spectral_norm(m: &CMatrix) -> f64 {
    if m.iter().all(|z| z.norm() == 0.0) {
        return 0.0;
    }
    m.clone().singular_values().iter().fold(0.0, |a: f64, &s| a.max(s))
}

/// Step-size selection for the RK4 integrator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepControl {
    /// `h ≤ 1/(50 · rate_bound)` derived from the generator.
    Auto,
    /// `h ≤ 1/(50 · rate)` for a caller-supplied characteristic rate.
    RateBound(f64),
    /// Explicit upper bound on the step in ns.
    MaxStep(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolveOptions {
    pub step: StepControl,
    pub keep_snapshots: bool,
    /// Largest tolerated `|Tr ρ − 1|` at any output time.
    pub trace_tolerance: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            step: StepControl::Auto,
            keep_snapshots: false,
            trace_tolerance: 1e-6,
        }
    }
}

/// Integration output: `expectations[k][n] = Tr(O_k ρ(t_n))`.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub expectations: Vec<Vec<C64>>,
    pub snapshots: Option<Vec<DensityMatrix>>,
    pub final_state: DensityMatrix,
    /// Step size actually used, in ns.
    pub step: f64,
}

/// Steps per unit rate; the step bound is `1/(STEPS_PER_RATE · rate)`.
pub const STEPS_PER_RATE: f64 = 50.0;

struct Compiled {
    d: usize,
    k_const: Triplets,
    k_td: Vec<(Coefficient, Triplets)>,
    l_const: Vec<Triplets>,
    l_td: Vec<Vec<(Coefficient, Triplets)>>,
}

impl Compiled {
    fn new(g: &Generator) -> Self {
        let d = g.layout.dim();
        let mi = C64::new(0.0, -1.0);
        let mut k0 = CMatrix::zeros(d, d);
        let mut k_td = Vec::new();
        for (c, op) in &g.hamiltonian {
            match c {
                Coefficient::Constant(v) => k0 += op.matrix() * (mi * *v),
                _ => k_td.push((c.clone(), Triplets::from_dense(&(op.matrix() * mi)))),
            }
        }
        let mut l_const = Vec::new();
        let mut l_td = Vec::new();
        for terms in &g.channels {
            if terms.iter().all(|(c, _)| c.is_constant()) {
                let mut l = CMatrix::zeros(d, d);
                for (c, op) in terms {
                    l += op.matrix() * C64::new(c.eval(0.0), 0.0);
                }
                k0 -= (l.adjoint() * &l) * C64::new(0.5, 0.0);
                let t = Triplets::from_dense(&l);
                if !t.is_empty() {
                    l_const.push(t);
                }
            } else {
                l_td.push(
                    terms
                        .iter()
                        .map(|(c, op)| (c.clone(), Triplets::from_dense(op.matrix())))
                        .collect(),
                );
            }
        }
        Self {
            d,
            k_const: Triplets::from_dense(&k0),
            k_td,
            l_const,
            l_td,
        }
    }

    /// `out = Kρ + (Kρ)† + Σ LρL†` with `K = −iH − ½ Σ L†L`, the
    /// Lindbladian for Hermitian `ρ`.
    fn rhs(&self, t: f64, rho: &[C64], m: &mut [C64], tmp: &mut [C64], out: &mut [C64]) {
        let d = self.d;
        let one = C64::new(1.0, 0.0);
        m.fill(C64::new(0.0, 0.0));
        self.k_const.left_mul_acc(one, rho, m, d);
        for (c, op) in &self.k_td {
            let v = c.eval(t);
            if v != 0.0 {
                op.left_mul_acc(C64::new(v, 0.0), rho, m, d);
            }
        }
        out.fill(C64::new(0.0, 0.0));
        for l in &self.l_const {
            l.sandwich_acc(rho, out, d);
        }
        for terms in &self.l_td {
            let mut lt = Triplets::default();
            for (c, op) in terms {
                let v = c.eval(t);
                if v != 0.0 {
                    lt.entries.extend(op.entries.iter().map(|&(i, j, z)| (i, j, z * v)));
                }
            }
            if lt.is_empty() {
                continue;
            }
            tmp.fill(C64::new(0.0, 0.0));
            lt.left_mul_acc(one, rho, tmp, d);
            lt.adjoint_left_mul_acc(C64::new(-0.5, 0.0), tmp, m, d);
            lt.right_adjoint_mul_acc(tmp, out, d);
        }
        for j in 0..d {
            for i in 0..d {
                out[j * d + i] += m[j * d + i] + m[i * d + j].conj();
            }
        }
    }
}

/// Integrates the master equation with fixed-step classical RK4 and records
/// observer expectation values at every grid time. The state at `grid[0]` is
/// `rho0`; each interval is split into equal substeps no longer than the step
/// bound, with coefficients evaluated at the substep times.
pub fn evolve(
    rho0: &DensityMatrix,
    generator: &Generator,
    grid: &TimeGrid,
    observers: &[Operator],
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    if rho0.layout() != generator.layout() {
        return Err(dims("initial state and generator layouts differ"));
    }
    for o in observers {
        if o.layout() != generator.layout() {
            return Err(dims("observer layout differs"));
        }
    }
    let h_max = match opts.step {
        StepControl::Auto => bound_step(generator.rate_bound()),
        StepControl::RateBound(r) => {
            if !(r >= 0.0) {
                return Err(invalid("rate bound must be >= 0"));
            }
            bound_step(r)
        }
        StepControl::MaxStep(h) => {
            if !(h > 0.0) {
                return Err(invalid("maximum step must be positive"));
            }
            h
        }
    };
    let c = Compiled::new(generator);
    let obs: Vec<Triplets> = observers.iter().map(|o| Triplets::from_dense(o.matrix())).collect();
    let d = c.d;
    let n2 = d * d;
    let mut rho: Vec<C64> = rho0.matrix().as_slice().to_vec();
    let zero = C64::new(0.0, 0.0);
    let (mut k1, mut k2, mut k3, mut k4) = (vec![zero; n2], vec![zero; n2], vec![zero; n2], vec![zero; n2]);
    let (mut m, mut tmp, mut stage) = (vec![zero; n2], vec![zero; n2], vec![zero; n2]);

    let times = grid.times();
    let mut expectations: Vec<Vec<C64>> = vec![Vec::with_capacity(times.len()); obs.len()];
    let mut snapshots = opts.keep_snapshots.then(|| Vec::with_capacity(times.len()));
    let mut used_step: f64 = 0.0;

    let record = |rho: &[C64],
                  t: f64,
                  expectations: &mut Vec<Vec<C64>>,
                  snapshots: &mut Option<Vec<DensityMatrix>>|
     -> Result<()> {
        let tr: C64 = (0..d).map(|i| rho[i * d + i]).sum();
        if !(tr.re.is_finite() && tr.im.is_finite()) {
            return Err(Error::Divergence {
                time: t,
                reason: "non-finite state".into(),
            });
        }
        if (tr - C64::new(1.0, 0.0)).norm() > opts.trace_tolerance {
            return Err(Error::Divergence {
                time: t,
                reason: format!("trace drifted to {tr}"),
            });
        }
        if let Some(p) = (0..d)
            .map(|i| rho[i * d + i].re)
            .find(|p| *p < -opts.trace_tolerance || *p > 1.0 + opts.trace_tolerance)
        {
            return Err(Error::Divergence {
                time: t,
                reason: format!("population {p} outside [0, 1]"),
            });
        }
        for (k, o) in obs.iter().enumerate() {
            expectations[k].push(o.trace_with(rho, d));
        }
        if let Some(s) = snapshots.as_mut() {
            s.push(DensityMatrix::from_matrix_unchecked(
                generator.layout().clone(),
                CMatrix::from_column_slice(d, d, rho),
            )?);
        }
        Ok(())
    };

    record(&rho, times[0], &mut expectations, &mut snapshots)?;
    for w in times.windows(2) {
        let span = w[1] - w[0];
        let steps = ((span / h_max) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let h = span / steps as f64;
        used_step = used_step.max(h);
        for s in 0..steps {
            let t = w[0] + h * s as f64;
            c.rhs(t, &rho, &mut m, &mut tmp, &mut k1);
            for i in 0..n2 {
                stage[i] = rho[i] + k1[i] * (0.5 * h);
            }
            c.rhs(t + 0.5 * h, &stage, &mut m, &mut tmp, &mut k2);
            for i in 0..n2 {
                stage[i] = rho[i] + k2[i] * (0.5 * h);
            }
            c.rhs(t + 0.5 * h, &stage, &mut m, &mut tmp, &mut k3);
            for i in 0..n2 {
                stage[i] = rho[i] + k3[i] * h;
            }
            c.rhs(t + h, &stage, &mut m, &mut tmp, &mut k4);
            for i in 0..n2 {
                rho[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
            }
            hermitize(&mut rho, d);
        }
        record(&rho, w[1], &mut expectations, &mut snapshots)?;
    }
    let final_state =
        DensityMatrix::from_matrix_unchecked(generator.layout().clone(), CMatrix::from_column_slice(d, d, &rho))?;
    Ok(Trajectory {
        times: times.to_vec(),
        expectations,
        snapshots,
        final_state,
        step: used_step,
    })
}

/// Replaces `ρ` by `(ρ + ρ†)/2`. The compiled right-hand side is the
/// Lindbladian only on Hermitian arguments and amplifies an anti-Hermitian
/// rounding residue, so it is removed after every step.
fn hermitize(rho: &mut [C64], d: usize) {
    for j in 0..d {
        rho[j * d + j].im = 0.0;
        for i in j + 1..d {
            let a = 0.5 * (rho[j * d + i] + rho[i * d + j].conj());
            rho[j * d + i] = a;
            rho[i * d + j] = a.conj();
        }
    }
}

fn bound_step(rate: f64) -> f64 {
    if rate > 0.0 {
        1.0 / (STEPS_PER_RATE * rate)
    } else {
        f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{ket_bra, lindblad_rhs};

    fn two_level() -> SpaceLayout {
        SpaceLayout::single("q", 2).unwrap()
    }

    #[test]
    fn sampled_signal_interpolates_and_holds() {
        let s = SampledSignal::new(0.0, 1.0, vec![0.0, 2.0, 4.0]).unwrap();
        assert_eq!(s.eval(-5.0), 0.0);
        assert_eq!(s.eval(0.5), 1.0);
        assert_eq!(s.eval(1.75), 3.5);
        assert_eq!(s.eval(9.0), 4.0);
    }

    #[test]
    fn compiled_rhs_matches_dense_reference() {
        let l = SpaceLayout::from_pairs(&[("a", 3), ("b", 2)]).unwrap();
        let d = 6;
        let h = CMatrix::from_fn(d, d, |i, j| {
            let x = (i * 7 + j * 3) as f64 * 0.1;
            C64::new(x.cos() + (j * 7 + i * 3) as f64 * 0.0, 0.0)
        });
        let h = (&h + h.adjoint()) * C64::new(0.5, 0.0);
        let l1 = CMatrix::from_fn(d, d, |i, j| {
            C64::new(((i + 2 * j) % 3) as f64 * 0.2, (i as f64 - j as f64) * 0.05)
        });
        let l2 = CMatrix::from_fn(d, d, |i, j| C64::new(if i + 1 == j { 0.7 } else { 0.0 }, 0.0));
        let mut psi = CMatrix::from_fn(d, 1, |i, _| C64::new(1.0 + i as f64, 0.3 * i as f64));
        psi /= C64::new(psi.norm(), 0.0);
        let rho = DensityMatrix::new(l.clone(), &psi * psi.adjoint()).unwrap();

        let mut g = Generator::new(l.clone());
        g.add_hamiltonian(Coefficient::Constant(0.5), Operator::new(l.clone(), h.clone()).unwrap())
            .unwrap();
        g.add_hamiltonian(
            Coefficient::Function {
                f: Arc::new(|t| t * t),
                bound: 1.0,
            },
            Operator::new(l.clone(), h.clone()).unwrap(),
        )
        .unwrap();
        g.add_channel(vec![(
            Coefficient::Constant(1.0),
            Operator::new(l.clone(), l1.clone()).unwrap(),
        )])
        .unwrap();
        g.add_channel(vec![(
            Coefficient::Function {
                f: Arc::new(|t| 1.0 + t),
                bound: 2.0,
            },
            Operator::new(l.clone(), l2.clone()).unwrap(),
        )])
        .unwrap();

        let t = 0.7;
        let reference = lindblad_rhs(&g.hamiltonian_at(t), &g.channels_at(t), &rho).unwrap();
        let c = Compiled::new(&g);
        let n2 = d * d;
        let z = C64::new(0.0, 0.0);
        let (mut m, mut tmp, mut out) = (vec![z; n2], vec![z; n2], vec![z; n2]);
        c.rhs(t, rho.matrix().as_slice(), &mut m, &mut tmp, &mut out);
        let got = CMatrix::from_column_slice(d, d, &out);
        assert!((got - reference).norm() < 1e-12);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(TimeGrid::new(vec![0.0, 1.0, 1.0]).is_err());
        assert!(TimeGrid::new(vec![]).is_err());
        assert!(TimeGrid::uniform(1.0, 0.0, 3).is_err());
    }

    #[test]
    fn unstable_step_reports_divergence_time() {
        let l = two_level();
        let mut g = Generator::new(l.clone());
        let sm = Operator::new(l.clone(), ket_bra(2, 0, 1)).unwrap();
        g.add_collapse(CollapseChannel::new(sm, 1.0).unwrap()).unwrap();
        let rho = DensityMatrix::new(l.clone(), ket_bra(2, 1, 1)).unwrap();
        let grid = TimeGrid::new(vec![0.0, 1.0, 50.0]).unwrap();
        let opts = EvolveOptions {
            step: StepControl::MaxStep(100.0),
            ..Default::default()
        };
        match evolve(&rho, &g, &grid, &[], &opts) {
            Err(Error::Divergence { time, .. }) => assert_eq!(time, 50.0),
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}
