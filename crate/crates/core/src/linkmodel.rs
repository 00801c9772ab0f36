//! Instantaneous SNR of the RIS-cascaded link, plus a symbol-level simulator
//! of the received signal that serves as an independent check on it.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::ConfigError;
use crate::params::{LinkGains, QuantBits, SnrMode, SystemConfig};
use crate::stochastics::{quantize_phase, ChannelDraw, RngStream};

/// SNR of one channel draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrSample {
    pub gamma: f64,
    pub rho_s: f64,
}

/// A validated config with its deterministic gains precomputed.
#[derive(Debug, Clone)]
pub struct LinkModel {
    cfg: SystemConfig,
    gains: LinkGains,
}

impl LinkModel {
    pub fn new(cfg: &SystemConfig) -> Result<Self, ConfigError> {
        cfg.validate()?;
        Ok(LinkModel {
            cfg: cfg.clone(),
            gains: LinkGains::compute(cfg)?,
        })
    }

    pub fn config(&self) -> &SystemConfig {
        &self.cfg
    }

    pub fn gains(&self) -> &LinkGains {
        &self.gains
    }

    /// Total noise power at the user for a draw: β²·Σ|g_m|²·σ_r² + σ_u².
    pub fn noise_power(&self, draw: &ChannelDraw) -> f64 {
        let beta = self.cfg.amplification;
        beta * beta * draw.g_energy() * self.cfg.sigma_r_sq + self.cfg.sigma_u_sq
    }

    /// ρ_s = P_s·h_L² / (β²·Σ|g_m|²·σ_r² + σ_u²), or the configured
    /// constant in rho-controlled mode.
    pub fn effective_rho(&self, draw: &ChannelDraw) -> f64 {
        match self.cfg.snr_mode {
            SnrMode::RhoControlled => self.cfg.rho_linear(),
            SnrMode::Physical => {
                let h_l = self.gains.h_l;
                self.cfg.tx_power * h_l * h_l / self.noise_power(draw)
            }
        }
    }

    /// γ / ρ_s = β²·h_M²·|Σ |f_m||g_m| e^{jΦ_m}|².
    pub fn coherent_gain(&self, draw: &ChannelDraw) -> f64 {
        let beta = self.cfg.amplification;
        beta * beta * draw.h_m * draw.h_m * combined_power(draw)
    }

    pub fn instantaneous_snr(&self, draw: &ChannelDraw) -> SnrSample {
        let rho_s = self.effective_rho(draw);
        SnrSample {
            gamma: rho_s * self.coherent_gain(draw),
            rho_s,
        }
    }
}

/// |Σ |f_m||g_m| e^{jΦ_m}|², the squared modulus of the combined cascade.
pub fn combined_power(draw: &ChannelDraw) -> f64 {
    let (mut re, mut im) = (0.0, 0.0);
    for ((f, g), phi) in draw.f_env.iter().zip(&draw.g_env).zip(&draw.phase_err) {
        let a = f * g;
        let (s, c) = phi.sin_cos();
        re += a * c;
        im += a * s;
    }
    re * re + im * im
}

pub fn effective_rho(draw: &ChannelDraw, cfg: &SystemConfig) -> Result<f64, ConfigError> {
    Ok(LinkModel::new(cfg)?.effective_rho(draw))
}

pub fn instantaneous_snr(draw: &ChannelDraw, cfg: &SystemConfig) -> Result<SnrSample, ConfigError> {
    Ok(LinkModel::new(cfg)?.instantaneous_snr(draw))
}

/// One received sample split into its components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalRealization {
    pub y: Complex64,
    pub desired: Complex64,
    pub ris_noise: Complex64,
    pub user_noise: Complex64,
}

/// Symbol-level simulator of the received signal for one fixed channel draw.
///
/// The draw stores only envelopes and quantization errors, so the simulator
/// realizes channel phases consistent with it: for each element it picks a
/// grid phase θ_m, sets the alignment target to θ_m − Φ_m, and splits the
/// target between arg f_m and arg g_m at random. The RIS then re-derives its
/// phase through [`quantize_phase`], so the error it realizes is Φ_m.
///
/// The RIS adds independent CN(0, σ_r²) noise per element before
/// amplification. In rho-controlled mode, P_s is chosen so that the
/// configured ρ_s holds for this draw.
pub struct SignalSimulator {
    /// √P_s·h_L·h_M·β·Σ f_m g_m e^{jθ_m}
    desired_gain: Complex64,
    /// β·g_m·e^{jθ_m} per element
    ris_taps: Vec<Complex64>,
    sigma_r: f64,
    sigma_u: f64,
    rng: ChaCha12Rng,
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R, std_dev: f64) -> Complex64 {
    let scale = std_dev * std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * scale, im * scale)
}

impl SignalSimulator {
    /// Noise variances are allowed to be zero here so the noiseless signal
    /// can be inspected; every other field must be valid.
    pub fn new(draw: &ChannelDraw, cfg: &SystemConfig, stream: RngStream) -> Result<Self, ConfigError> {
        let gains = LinkGains::compute(cfg)?;
        let mut rng = stream.rng();
        let beta = cfg.amplification;

        let mut cascade = Complex64::new(0.0, 0.0);
        let mut ris_taps = Vec::with_capacity(draw.num_elements());
        for ((&f_abs, &g_abs), &phi) in draw.f_env.iter().zip(&draw.g_env).zip(&draw.phase_err) {
            let (target, bits) = match cfg.quant_bits {
                QuantBits::Bits(b) => {
                    let levels = 1u64 << b;
                    let grid = rng.random_range(0..levels) as f64 * TAU / levels as f64;
                    ((grid - phi).rem_euclid(TAU), Some(b))
                }
                QuantBits::Continuous => (rng.random::<f64>() * TAU, None),
            };
            let theta = match bits {
                Some(b) => quantize_phase(target, b).0,
                None => target,
            };
            let arg_f = rng.random::<f64>() * TAU;
            let arg_g = -target - arg_f;
            let f = Complex64::from_polar(f_abs, arg_f);
            let g = Complex64::from_polar(g_abs, arg_g);
            let rot = Complex64::from_polar(1.0, theta);
            cascade += f * g * rot;
            ris_taps.push(beta * g * rot);
        }

        let h_l = gains.h_l;
        let tx_power = match cfg.snr_mode {
            SnrMode::Physical => cfg.tx_power,
            SnrMode::RhoControlled => {
                let noise = beta * beta * draw.g_energy() * cfg.sigma_r_sq + cfg.sigma_u_sq;
                cfg.rho_linear() * noise / (h_l * h_l)
            }
        };
        let desired_gain = cascade * (tx_power.sqrt() * h_l * draw.h_m * beta);

        Ok(SignalSimulator {
            desired_gain,
            ris_taps,
            sigma_r: cfg.sigma_r_sq.sqrt(),
            sigma_u: cfg.sigma_u_sq.sqrt(),
            rng,
        })
    }

    /// Next received sample with a fresh unit-power QPSK symbol and noise.
    pub fn next_symbol(&mut self) -> SignalRealization {
        let quadrant = self.rng.random_range(0..4u8);
        let x = Complex64::from_polar(1.0, TAU * (f64::from(quadrant) + 0.5) / 4.0);
        let desired = self.desired_gain * x;
        let mut ris_noise = Complex64::new(0.0, 0.0);
        if self.sigma_r > 0.0 {
            for tap in &self.ris_taps {
                ris_noise += tap * complex_normal(&mut self.rng, self.sigma_r);
            }
        }
        let user_noise = if self.sigma_u > 0.0 {
            complex_normal(&mut self.rng, self.sigma_u)
        } else {
            Complex64::new(0.0, 0.0)
        };
        SignalRealization {
            y: desired + ris_noise + user_noise,
            desired,
            ris_noise,
            user_noise,
        }
    }

    /// Desired power over total noise power across `symbols` samples.
    pub fn empirical_snr(&mut self, symbols: usize) -> f64 {
        let (mut signal, mut noise) = (0.0, 0.0);
        for _ in 0..symbols {
            let s = self.next_symbol();
            signal += s.desired.norm_sqr();
            noise += (s.ris_noise + s.user_noise).norm_sqr();
        }
        signal / noise
    }
}

/// One received sample for `draw`.
pub fn simulate_received_signal(
    draw: &ChannelDraw,
    cfg: &SystemConfig,
    stream: RngStream,
) -> Result<SignalRealization, ConfigError> {
    Ok(SignalSimulator::new(draw, cfg, stream)?.next_symbol())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{Absorption, Misalignment, MisalignmentParams};
    use crate::stochastics::{DrawSampler, StreamKind};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn draw(f: &[f64], g: &[f64], phi: &[f64], h_m: f64) -> ChannelDraw {
        ChannelDraw {
            f_env: f.to_vec(),
            g_env: g.to_vec(),
            phase_err: phi.to_vec(),
            h_m,
        }
    }

    /// Unit path gain, so ρ_s in physical mode reduces to P_s / noise.
    fn unit_path(cfg: SystemConfig) -> SystemConfig {
        let mut cfg = SystemConfig {
            frequency: 1e9,
            d1: 1.0,
            d2: 1.0,
            absorption: Absorption::Gain(1.0),
            ..cfg
        };
        let g = 8.0 * std::f64::consts::PI.powi(3).sqrt() * cfg.frequency / crate::params::SPEED_OF_LIGHT;
        cfg.g1_dbi = 10.0 * g.log10();
        cfg.g2_dbi = cfg.g1_dbi;
        cfg
    }

    #[test]
    fn effective_rho_physical() {
        let cfg = unit_path(SystemConfig {
            snr_mode: SnrMode::Physical,
            tx_power: 1.0,
            amplification: 2.0,
            sigma_r_sq: 0.01,
            sigma_u_sq: 0.05,
            ..Default::default()
        });
        let d = draw(&[0.3], &[1.0], &[0.0], 1.0);
        // 1 / (4·1·0.01 + 0.05)
        assert_relative_eq!(effective_rho(&d, &cfg).unwrap(), 1.0 / 0.09, max_relative = 1e-12);

        let quiet = SystemConfig { sigma_r_sq: 0.0, sigma_u_sq: 1.0, tx_power: 3.5, ..cfg };
        assert_relative_eq!(effective_rho(&d, &quiet).unwrap(), 3.5, max_relative = 1e-12);
    }

    #[test]
    fn effective_rho_controlled_ignores_draw() {
        let cfg = SystemConfig { rho_db: 0.0, ..Default::default() };
        for g in [0.1, 1.0, 9.0] {
            assert_eq!(effective_rho(&draw(&[1.0], &[g], &[0.0], 0.1), &cfg).unwrap(), 1.0);
        }
    }

    #[test]
    fn snr_examples() {
        let cfg = SystemConfig { rho_db: 0.0, amplification: 2.0, ..Default::default() };
        let s = instantaneous_snr(&draw(&[1.0], &[1.0], &[0.0], 0.2), &cfg).unwrap();
        assert_relative_eq!(s.gamma, 4.0 * 0.04, max_relative = 1e-12);

        for phi in [0.3, -1.0, 2.5] {
            let t = instantaneous_snr(&draw(&[1.0], &[1.0], &[phi], 0.2), &cfg).unwrap();
            assert_relative_eq!(t.gamma, s.gamma, max_relative = 1e-12);
        }

        let unit = SystemConfig { amplification: 1.0, ..cfg };
        let two = instantaneous_snr(
            &draw(&[1.0, 1.0], &[1.0, 1.0], &[0.0, std::f64::consts::FRAC_PI_2], 1.0),
            &unit,
        )
        .unwrap();
        // |1 + j|²
        assert_relative_eq!(two.gamma, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn beta_scaling() {
        let d = draw(&[0.5, 1.2, 0.9], &[1.1, 0.4, 0.7], &[0.1, -0.2, 0.3], 0.15);
        let cfg = SystemConfig::default();
        let g1 = instantaneous_snr(&d, &cfg).unwrap().gamma;
        let g3 = instantaneous_snr(&d, &SystemConfig { amplification: 3.0 * cfg.amplification, ..cfg.clone() })
            .unwrap()
            .gamma;
        assert_relative_eq!(g3, 9.0 * g1, max_relative = 1e-12);

        // physical mode: σ_u² → 0 makes γ independent of β, σ_r² = 0 makes γ ∝ β²
        let phys = SystemConfig { snr_mode: SnrMode::Physical, ..cfg };
        let tiny_u = SystemConfig { sigma_u_sq: 1e-300, ..phys.clone() };
        let a = instantaneous_snr(&d, &tiny_u).unwrap().gamma;
        let b = instantaneous_snr(&d, &SystemConfig { amplification: 7.0, ..tiny_u }).unwrap().gamma;
        assert_relative_eq!(a, b, max_relative = 1e-12);

        let no_r = SystemConfig { sigma_r_sq: 0.0, ..phys };
        let a = instantaneous_snr(&d, &no_r).unwrap().gamma;
        let b = instantaneous_snr(&d, &SystemConfig { amplification: 5.0 * no_r.amplification, ..no_r })
            .unwrap()
            .gamma;
        assert_relative_eq!(b, 25.0 * a, max_relative = 1e-12);
    }

    #[test]
    fn noiseless_signal_is_pure_desired() {
        let cfg = SystemConfig {
            snr_mode: SnrMode::Physical,
            sigma_r_sq: 0.0,
            sigma_u_sq: 0.0,
            ..Default::default()
        };
        let d = DrawSampler::new(4, 0).draw(&cfg);
        let s = simulate_received_signal(&d, &cfg, RngStream::new(4, 3)).unwrap();
        assert_eq!(s.y, s.desired);
        assert_eq!(s.ris_noise, Complex64::new(0.0, 0.0));
        assert!(s.desired.norm() > 0.0);
    }

    #[test]
    fn empty_ris_gives_only_user_noise() {
        let cfg = SystemConfig { num_elements: 0, ..Default::default() };
        let d = DrawSampler::new(4, 0).draw(&cfg);
        let s = simulate_received_signal(&d, &cfg, RngStream::new(4, 3)).unwrap();
        assert_eq!(s.desired, Complex64::new(0.0, 0.0));
        assert_eq!(s.y, s.user_noise);
    }

    #[test]
    fn signal_components_sum_to_output() {
        let cfg = SystemConfig::default();
        let d = DrawSampler::new(9, 0).draw(&cfg);
        let mut sim = SignalSimulator::new(&d, &cfg, RngStream::for_chunk(9, 0, StreamKind::Signal)).unwrap();
        for _ in 0..100 {
            let s = sim.next_symbol();
            assert_eq!(s.y, s.desired + s.ris_noise + s.user_noise);
        }
    }

    #[test]
    fn empirical_snr_matches_default_draw() {
        let cfg = SystemConfig::default();
        let d = DrawSampler::new(2024, 0).draw(&cfg);
        let gamma = instantaneous_snr(&d, &cfg).unwrap().gamma;
        let mut sim = SignalSimulator::new(&d, &cfg, RngStream::for_chunk(2024, 0, StreamKind::Signal)).unwrap();
        let emp = sim.empirical_snr(100_000);
        assert!((emp / gamma - 1.0).abs() < 0.03, "empirical {emp} vs γ {gamma}");
    }

    #[test]
    fn physical_mode_uses_tx_power_in_simulator() {
        let cfg = SystemConfig {
            snr_mode: SnrMode::Physical,
            tx_power: 1e6,
            misalignment: Misalignment::Enabled(MisalignmentParams { phi: 0.5, zeta: 2.0 }),
            num_elements: 3,
            ..Default::default()
        };
        let d = DrawSampler::new(5, 0).draw(&cfg);
        let gamma = instantaneous_snr(&d, &cfg).unwrap().gamma;
        let emp = SignalSimulator::new(&d, &cfg, RngStream::new(5, 3)).unwrap().empirical_snr(100_000);
        assert!((emp / gamma - 1.0).abs() < 0.03, "empirical {emp} vs γ {gamma}");
    }

    proptest! {
        #[test]
        fn gamma_below_coherent_bound(
            elems in prop::collection::vec((0.0f64..3.0, 0.0f64..3.0, -3.2f64..3.2), 0..8),
            h_m in 0.0f64..1.0,
        ) {
            let cfg = SystemConfig::default();
            let d = ChannelDraw {
                f_env: elems.iter().map(|e| e.0).collect(),
                g_env: elems.iter().map(|e| e.1).collect(),
                phase_err: elems.iter().map(|e| e.2).collect(),
                h_m,
            };
            let aligned = ChannelDraw { phase_err: vec![0.0; elems.len()], ..d.clone() };
            let s = instantaneous_snr(&d, &cfg).unwrap();
            let bound = instantaneous_snr(&aligned, &cfg).unwrap().gamma;
            let sum: f64 = elems.iter().map(|e| e.0 * e.1).sum();
            let beta = cfg.amplification;
            prop_assert!(s.gamma >= 0.0);
            prop_assert!(s.gamma <= bound * (1.0 + 1e-12) + 1e-300);
            prop_assert!((bound - s.rho_s * beta * beta * h_m * h_m * sum * sum).abs() <= 1e-9 * bound.max(1e-300));
        }
    }
}
