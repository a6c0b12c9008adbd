//! Monte Carlo evaluation over the eavesdropper's fading.
//!
//! Draws are grouped in fixed-size blocks, each with its own generator keyed
//! by `(seed, EVE, block)`. Samples land in a buffer indexed by draw number
//! and are summed serially afterwards, so splitting blocks across threads
//! changes nothing in the output.

use rayon::prelude::*;

use crate::channel::{EveStatistics, ScenarioChannels};
use crate::error::{domain, Result};
use crate::objective::{eve_mean_gain, rate_user, Noise};
use crate::rng::{stream_rng, streams};
use crate::CVec;

/// Draws per generator block.
pub const BLOCK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EsrEstimate {
    pub mean: f64,
    /// Sample standard deviation over `√n`.
    pub stderr: f64,
    pub n_samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectationCheck {
    pub mc_mean: f64,
    pub closed_form: f64,
    pub stderr: f64,
    pub z_score: f64,
}

/// Neumaier-compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Mean and standard error of `values` (`n ≥ 2`).
fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = compensated_sum(values.iter().copied()) / n;
    let ss = compensated_sum(values.iter().map(|v| (v - mean) * (v - mean)));
    (mean, (ss / (n - 1.0)).sqrt() / n.sqrt())
}

/// Fills `out[k]` with `f(draw k)` for the draws of `seed`.
fn fill_samples<F>(out: &mut [f64], es: &EveStatistics, seed: u64, parallel: bool, f: F)
where
    F: Fn(&CVec, &CVec) -> f64 + Sync,
{
    let run = |(block, chunk): (usize, &mut [f64])| {
        let mut rng = stream_rng(seed, streams::EVE, block as u64);
        for slot in chunk.iter_mut() {
            let (h_ae, h_ie) = es.draw(&mut rng);
            *slot = f(&h_ae, &h_ie);
        }
    };
    if parallel {
        out.par_chunks_mut(BLOCK).enumerate().for_each(run);
    } else {
        out.chunks_mut(BLOCK).enumerate().for_each(run);
    }
}

/// `|(h_ieᴴ Φ H_AI + h_aeᴴ) w|²` for one draw, given `x = Φ H_AI w`.
fn eve_gain_sample(x: &CVec, w: &CVec, h_ae: &CVec, h_ie: &CVec) -> f64 {
    let reflected = if x.is_empty() { Default::default() } else { h_ie.dotc(x) };
    (reflected + h_ae.dotc(w)).norm_sqr()
}

#[allow(clippy::too_many_arguments)]
fn esr_impl(
    phi: &CVec,
    w: &CVec,
    sc: &ScenarioChannels,
    es: &EveStatistics,
    noise: Noise,
    n: usize,
    seed: u64,
    parallel: bool,
) -> Result<EsrEstimate> {
    if n < 2 {
        return domain(format!("Monte Carlo needs at least 2 samples, got {n}"));
    }
    let r_u = rate_user(phi, w, sc, noise.user);
    let x = phi.component_mul(&(&sc.h_ai * w));
    let mut samples = vec![0.0; n];
    fill_samples(&mut samples, es, seed, parallel, |h_ae, h_ie| {
        let r_e = (1.0 + eve_gain_sample(&x, w, h_ae, h_ie) / noise.eve).log2();
        (r_u - r_e).max(0.0)
    });
    let (mean, stderr) = mean_stderr(&samples);
    Ok(EsrEstimate { mean, stderr, n_samples: n, seed })
}

/// Ergodic secrecy rate `E[(R_U − R_E)⁺]` from `n` eavesdropper draws,
/// evaluated on the rayon pool.
pub fn esr_estimate(
    phi: &CVec,
    w: &CVec,
    sc: &ScenarioChannels,
    es: &EveStatistics,
    noise: Noise,
    n: usize,
    seed: u64,
) -> Result<EsrEstimate> {
    esr_impl(phi, w, sc, es, noise, n, seed, true)
}

/// Single-threaded [`esr_estimate`]; the result is bit-identical.
pub fn esr_estimate_serial(
    phi: &CVec,
    w: &CVec,
    sc: &ScenarioChannels,
    es: &EveStatistics,
    noise: Noise,
    n: usize,
    seed: u64,
) -> Result<EsrEstimate> {
    esr_impl(phi, w, sc, es, noise, n, seed, false)
}

/// Compares the sample mean of the eavesdropper's received power with its
/// second-moment closed form.
pub fn expectation_oracle(
    phi: &CVec,
    w: &CVec,
    sc: &ScenarioChannels,
    es: &EveStatistics,
    n: usize,
    seed: u64,
) -> Result<ExpectationCheck> {
    if n < 2 {
        return domain(format!("Monte Carlo needs at least 2 samples, got {n}"));
    }
    let x = phi.component_mul(&(&sc.h_ai * w));
    let mut samples = vec![0.0; n];
    fill_samples(&mut samples, es, seed, true, |h_ae, h_ie| eve_gain_sample(&x, w, h_ae, h_ie));
    let (mc_mean, stderr) = mean_stderr(&samples);
    let closed_form = eve_mean_gain(phi, w, sc, es);
    let diff = mc_mean - closed_form;
    let z_score = if stderr > 0.0 {
        diff / stderr
    } else if diff.abs() <= 1e-12 * closed_form.abs().max(f64::MIN_POSITIVE) {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    };
    Ok(ExpectationCheck { mc_mean, closed_form, stderr, z_score })
}
