//! Ergodic capacity estimation.
//!
//! Two estimators are computed from the same SNR samples: the direct mean of
//! log2(1 + γ), and the integral (1/ln 2)∫(1 − F(s))/(1 + s) ds over the
//! empirical CDF. On a step-function CDF the integral can be evaluated
//! exactly interval by interval, and the two agree up to rounding, which
//! makes a cheap consistency check on every estimate.

use std::f64::consts::LN_2;

use rayon::prelude::*;

use crate::error::SimError;
use crate::linkmodel::LinkModel;
use crate::params::SystemConfig;
use crate::stochastics::{ChannelDraw, DrawSampler};

/// Draws per Monte Carlo chunk. Each chunk has its own substreams, so results
/// are a function of (seed, chunk size) and not of the thread count.
pub const CHUNK_SIZE: usize = 2048;

pub const MIN_SAMPLES: usize = 100;

/// Relative tolerance of the built-in MC vs CDF-integral self-check.
pub const SELF_CHECK_TOLERANCE: f64 = 1e-6;

const Z_95: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityEstimate {
    /// Ergodic capacity, bits/s/Hz.
    pub mean_bits: f64,
    pub std_err: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_samples: usize,
}

impl CapacityEstimate {
    fn from_mean(mean_bits: f64, std_err: f64, n_samples: usize) -> Self {
        CapacityEstimate {
            mean_bits,
            std_err,
            ci_low: mean_bits - Z_95 * std_err,
            ci_high: mean_bits + Z_95 * std_err,
            n_samples,
        }
    }

    pub fn ci_width(&self) -> f64 {
        self.ci_high - self.ci_low
    }
}

fn check_samples(gammas: &[f64]) -> Result<(), SimError> {
    if gammas.len() < 2 {
        return Err(SimError::TooFewSamples {
            min: 2,
            got: gammas.len(),
        });
    }
    if let Some((index, &value)) = gammas
        .iter()
        .enumerate()
        .find(|(_, g)| !(g.is_finite() && **g >= 0.0))
    {
        return Err(SimError::BadSnr { index, value });
    }
    Ok(())
}

/// Standard error of the mean of log2(1 + γ) around `mean`.
fn log_std_err(gammas: &[f64], mean: f64) -> f64 {
    let n = gammas.len() as f64;
    let ss: f64 = gammas
        .iter()
        .map(|g| {
            let d = g.ln_1p() / LN_2 - mean;
            d * d
        })
        .sum();
    (ss / (n - 1.0)).sqrt() / n.sqrt()
}

/// Mean of log2(1 + γ_i) with its standard error and 95% normal CI.
pub fn capacity_mc(gammas: &[f64]) -> Result<CapacityEstimate, SimError> {
    check_samples(gammas)?;
    let n = gammas.len();
    // Summing deviations from the first term keeps a constant sample exact.
    let shift = gammas[0].ln_1p() / LN_2;
    let dev = gammas.iter().map(|g| g.ln_1p() / LN_2 - shift).sum::<f64>();
    let mean = shift + dev / n as f64;
    Ok(CapacityEstimate::from_mean(mean, log_std_err(gammas, mean), n))
}

/// Step-function CDF of a set of SNR samples.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(samples: &[f64]) -> Result<Self, SimError> {
        check_samples(samples)?;
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(EmpiricalCdf { sorted })
    }

    pub fn sorted_values(&self) -> &[f64] {
        &self.sorted
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// F(s) = #{γ_i ≤ s} / N.
    pub fn at(&self, s: f64) -> f64 {
        self.sorted.partition_point(|&g| g <= s) as f64 / self.sorted.len() as f64
    }
}

/// (1/ln 2)·∫₀^∞ (1 − F(s))/(1 + s) ds on the empirical CDF.
///
/// Between consecutive order statistics γ₍ᵢ₎ ≤ s < γ₍ᵢ₊₁₎ the survival
/// function is (N − i)/N, and ∫ ds/(1 + s) over that interval is
/// ln(1 + γ₍ᵢ₊₁₎) − ln(1 + γ₍ᵢ₎), so the integral is a finite sum.
pub fn capacity_cdf_integral(cdf: &EmpiricalCdf) -> Result<CapacityEstimate, SimError> {
    check_samples(&cdf.sorted)?;
    let n = cdf.sorted.len();
    let mut prev_log = 0.0;
    let mut acc = 0.0;
    for (i, g) in cdf.sorted.iter().enumerate() {
        let log = g.ln_1p();
        acc += (n - i) as f64 * (log - prev_log);
        prev_log = log;
    }
    let mean = acc / (n as f64 * LN_2);
    Ok(CapacityEstimate::from_mean(
        mean,
        log_std_err(&cdf.sorted, mean),
        n,
    ))
}

/// Runs both estimators on `gammas` and fails if they disagree.
pub fn capacity_checked(gammas: &[f64]) -> Result<CapacityEstimate, SimError> {
    let mc = capacity_mc(gammas)?;
    let cdf = capacity_cdf_integral(&EmpiricalCdf::new(gammas)?)?;
    let scale = mc.mean_bits.abs().max(cdf.mean_bits.abs());
    if (mc.mean_bits - cdf.mean_bits).abs() > SELF_CHECK_TOLERANCE * scale {
        return Err(SimError::SelfCheck {
            mc: mc.mean_bits,
            cdf: cdf.mean_bits,
        });
    }
    Ok(mc)
}

/// Applies `f` to `n` channel draws, in draw order.
///
/// Chunks are generated in parallel on the current rayon pool; chunk `c`
/// always covers draws `c·CHUNK_SIZE..` with its own substreams.
pub fn map_draws<T, F>(cfg: &SystemConfig, n: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&ChannelDraw) -> T + Sync,
{
    let chunks = n.div_ceil(CHUNK_SIZE);
    let per_chunk: Vec<Vec<T>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = CHUNK_SIZE.min(n - c * CHUNK_SIZE);
            let mut sampler = DrawSampler::new(seed, c as u64);
            (0..len).map(|_| f(&sampler.draw(cfg))).collect()
        })
        .collect();
    per_chunk.into_iter().flatten().collect()
}

/// γ for each of `n` draws.
pub fn snr_samples(model: &LinkModel, n: usize, seed: u64) -> Vec<f64> {
    map_draws(model.config(), n, seed, |d| model.instantaneous_snr(d).gamma)
}

/// γ/ρ_s for each of `n` draws. In rho-controlled mode γ is exactly
/// `rho_linear() * gain`, so one set of gains serves a whole ρ_s grid.
pub fn gain_samples(model: &LinkModel, n: usize, seed: u64) -> Vec<f64> {
    map_draws(model.config(), n, seed, |d| model.coherent_gain(d))
}

/// Ergodic capacity of `cfg` from `n_samples` seeded channel draws.
pub fn estimate_capacity(
    cfg: &SystemConfig,
    n_samples: usize,
    seed: u64,
) -> Result<CapacityEstimate, SimError> {
    let model = LinkModel::new(cfg)?;
    if n_samples < MIN_SAMPLES {
        return Err(SimError::TooFewSamples {
            min: MIN_SAMPLES,
            got: n_samples,
        });
    }
    capacity_checked(&snr_samples(&model, n_samples, seed))
}
