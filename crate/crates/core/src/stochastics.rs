//! Seeded random variates for the stochastic part of the link.
//!
//! Every Monte Carlo chunk owns a fixed set of substreams, one per kind of
//! quantity, so turning one sampler on or off (say, continuous phases or
//! disabled misalignment) never shifts the sequence seen by the others.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::params::{Misalignment, MisalignmentParams, QuantBits, SystemConfig};

/// The quantities that draw from separate substreams within a chunk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamKind {
    Envelopes = 0,
    PhaseErrors = 1,
    Misalignment = 2,
    /// Symbols, noise and channel phases of the signal-level oracle.
    Signal = 3,
}

const KINDS_PER_CHUNK: u64 = 4;

/// Identifies one independent, reproducible random sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        RngStream {
            master_seed,
            stream_index,
        }
    }

    /// The stream a given chunk uses for one kind of quantity.
    pub fn for_chunk(master_seed: u64, chunk: u64, kind: StreamKind) -> Self {
        RngStream::new(master_seed, chunk * KINDS_PER_CHUNK + kind as u64)
    }

    pub fn rng(&self) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

/// One stochastic realization of the cascaded channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDraw {
    /// |f_m|, BS to RIS.
    pub f_env: Vec<f64>,
    /// |g_m|, RIS to user.
    pub g_env: Vec<f64>,
    /// Quantization errors Φ_m in radians.
    pub phase_err: Vec<f64>,
    /// Misalignment coefficient h_M.
    pub h_m: f64,
}

impl ChannelDraw {
    pub fn num_elements(&self) -> usize {
        self.f_env.len()
    }

    /// Σ|g_m|².
    pub fn g_energy(&self) -> f64 {
        self.g_env.iter().map(|g| g * g).sum()
    }
}

/// Modulus of a CN(0, 1) variate, i.e. Rayleigh with σ² = 1/2.
fn rayleigh<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    ((re * re + im * im) * 0.5).sqrt()
}

/// Envelopes (|f_m|, |g_m|) of `m` independent CN(0, 1) coefficients per hop.
pub fn sample_envelopes<R: Rng + ?Sized>(m: usize, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    let f = (0..m).map(|_| rayleigh(rng)).collect();
    let g = (0..m).map(|_| rayleigh(rng)).collect();
    (f, g)
}

/// Half-width π/2^b of the quantization error interval.
pub fn phase_error_half_width(bits: u32) -> f64 {
    PI / f64::from(bits).exp2()
}

/// Wraps an angle into (−π, π].
pub fn wrap_to_pi(angle: f64) -> f64 {
    let wrapped = (angle + PI).rem_euclid(TAU) - PI;
    if wrapped <= -PI {
        wrapped + TAU
    } else {
        wrapped
    }
}

/// Nearest phase in {0, 2π/2^b, …, (2^b − 1)2π/2^b} to `target`.
///
/// Returns `(theta, error)` with `error = theta − target` wrapped into
/// (−π, π]. Exact half-step ties go to the smaller grid index.
pub fn quantize_phase(target: f64, bits: u32) -> (f64, f64) {
    assert!(bits >= 1, "quantize_phase needs at least one bit");
    let levels = 1u64 << bits;
    let step = TAU / levels as f64;
    let target = target.rem_euclid(TAU);
    let pos = target / step;
    let lower = pos.floor();
    let frac = pos - lower;
    let lower = lower as u64 % levels;
    let index = if frac < 0.5 {
        lower
    } else if frac > 0.5 {
        (lower + 1) % levels
    } else {
        // tie between `lower` and its successor, which is 0 after the last level
        lower.min((lower + 1) % levels)
    };
    let theta = index as f64 * step;
    (theta, wrap_to_pi(theta - target))
}

/// Φ_m i.i.d. uniform on [−π/2^b, π/2^b]; all zeros when phases are continuous.
///
/// Each element uses one uniform u and Φ = (2u − 1)·π/2^b, so for a fixed
/// stream the errors at b + 1 bits are exactly half those at b bits.
pub fn sample_phase_errors<R: Rng + ?Sized>(m: usize, bits: QuantBits, rng: &mut R) -> Vec<f64> {
    match bits {
        QuantBits::Continuous => vec![0.0; m],
        QuantBits::Bits(b) => {
            let half = phase_error_half_width(b);
            (0..m)
                .map(|_| (2.0 * rng.random::<f64>() - 1.0) * half)
                .collect()
        }
    }
}

/// Inverse CDF of the misalignment coefficient: φ·u^(1/ζ) for u in (0, 1].
pub fn misalignment_from_uniform(params: &MisalignmentParams, u: f64) -> f64 {
    params.phi * u.powf(params.zeta.recip())
}

/// One draw of h_M with density ζ φ^(−ζ) x^(ζ−1) on (0, φ].
pub fn sample_misalignment<R: Rng + ?Sized>(params: &MisalignmentParams, rng: &mut R) -> f64 {
    let u = 1.0 - rng.random::<f64>();
    misalignment_from_uniform(params, u)
}

/// Generates the channel draws of one Monte Carlo chunk.
pub struct DrawSampler {
    envelopes: ChaCha12Rng,
    phases: ChaCha12Rng,
    misalignment: ChaCha12Rng,
}

impl DrawSampler {
    pub fn new(master_seed: u64, chunk: u64) -> Self {
        DrawSampler {
            envelopes: RngStream::for_chunk(master_seed, chunk, StreamKind::Envelopes).rng(),
            phases: RngStream::for_chunk(master_seed, chunk, StreamKind::PhaseErrors).rng(),
            misalignment: RngStream::for_chunk(master_seed, chunk, StreamKind::Misalignment).rng(),
        }
    }

    pub fn draw(&mut self, cfg: &SystemConfig) -> ChannelDraw {
        let m = cfg.num_elements;
        let (f_env, g_env) = sample_envelopes(m, &mut self.envelopes);
        let phase_err = sample_phase_errors(m, cfg.quant_bits, &mut self.phases);
        let h_m = match cfg.misalignment {
            Misalignment::Disabled => 1.0,
            Misalignment::Enabled(p) => sample_misalignment(&p, &mut self.misalignment),
        };
        ChannelDraw {
            f_env,
            g_env,
            phase_err,
            h_m,
        }
    }
}
