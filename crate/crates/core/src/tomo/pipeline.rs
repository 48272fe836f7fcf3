use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::mle::{mle_state, outcome_probabilities, qutrit_settings, two_qutrit_settings, MleOptions};
use super::readout::{correct_joint, Calibration, IqSampler, ReadoutModel};
use crate::error::{dims, Result};
use crate::qcore::DensityMatrix;

/// Finite-shot tomography through the simulated readout chain.
#[derive(Clone, Debug)]
pub struct TomographyRun {
    pub readout: ReadoutModel,
    pub calibration: Calibration,
    pub shots_per_setting: usize,
    pub seed: u64,
    pub mle: MleOptions,
}

/// Reconstructed states and the number of settings whose corrected
/// populations were projected onto the simplex.
#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub states: Vec<DensityMatrix>,
    pub clipped_settings: usize,
}

/// For each exact one- or two-qutrit state: samples IQ shots for every
/// tomography setting, classifies them, corrects the outcome frequencies
/// with the assignment matrix and reconstructs the state by maximum
/// likelihood. Settings are sampled in parallel, each from its own
/// seeded stream.
pub fn reconstruct_states(states: &[DensityMatrix], run: &TomographyRun) -> Result<Reconstruction> {
    let sampler = IqSampler::new(&run.readout)?;
    let mut out = Vec::with_capacity(states.len());
    let mut clipped_settings = 0;
    for (si, rho) in states.iter().enumerate() {
        let (settings, nq) = match rho.dim() {
            3 => (qutrit_settings(), 1),
            9 => (two_qutrit_settings(), 2),
            d => return Err(dims(format!("tomography expects dimension 3 or 9, got {d}"))),
        };
        let rs = vec![run.calibration.assignment; nq];
        let per_setting: Vec<Result<(Vec<f64>, bool)>> = settings
            .par_iter()
            .enumerate()
            .map(|(k, s)| {
                let p = outcome_probabilities(rho.matrix(), s)?;
                let stream = (si as u64) << 32 | k as u64;
                let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
                rng.set_stream(stream);
                let counts = sample_counts(&p, nq, &sampler, run, &mut rng);
                let n = run.shots_per_setting.max(1) as f64;
                let measured: Vec<f64> = counts.iter().map(|c| c / n).collect();
                let c = correct_joint(&rs, &measured)?;
                Ok((c.populations.iter().map(|p| p * n).collect(), c.clipped))
            })
            .collect();
        let mut counts = Vec::with_capacity(settings.len());
        for r in per_setting {
            let (c, clipped) = r?;
            clipped_settings += usize::from(clipped);
            counts.push(c);
        }
        out.push(mle_state(&counts, &settings, rho.dim(), &run.mle)?);
    }
    Ok(Reconstruction {
        states: out,
        clipped_settings,
    })
}

fn sample_counts(p: &[f64], nq: usize, sampler: &IqSampler, run: &TomographyRun, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut cum = Vec::with_capacity(p.len());
    let mut acc = 0.0;
    for x in p {
        acc += x.max(0.0);
        cum.push(acc);
    }
    let mut counts = vec![0.0; p.len()];
    for _ in 0..run.shots_per_setting {
        let u: f64 = rng.random::<f64>() * acc;
        let level = cum.iter().position(|c| u < *c).unwrap_or(p.len() - 1);
        let mut assigned = 0;
        let mut rem = level;
        let mut digits = vec![0; nq];
        for d in digits.iter_mut().rev() {
            *d = rem % 3;
            rem /= 3;
        }
        for d in digits {
            let shot = sampler.draw(rng, d);
            assigned = assigned * 3 + run.calibration.classifier.classify(&shot);
        }
        counts[assigned] += 1.0;
    }
    counts
}
