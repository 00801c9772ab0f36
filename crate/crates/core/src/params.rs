//! Link configuration and the deterministic part of the model.
//!
//! Everything here is a pure function of a [`SystemConfig`]: the Friis
//! propagation gain, the molecular absorption gain, the misalignment shape
//! parameters derived from beam geometry, and the error function they need.
//!
//! Configurations are read from a flat `key = value` text format. Unset keys
//! fall back to the reference scenario in [`SystemConfig::default`].

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use crate::error::ConfigError;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Largest accepted quantization bit count.
pub const MAX_QUANT_BITS: u32 = 30;

/// How molecular absorption is specified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Absorption {
    /// Absorption coefficient κ(f) in 1/m.
    Coefficient(f64),
    /// Absorption gain h_A directly, in (0, 1].
    Gain(f64),
}

/// Phase-shifter resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuantBits {
    Bits(u32),
    /// Ideal phase shifters: no quantization error.
    Continuous,
}

impl fmt::Display for QuantBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuantBits::Bits(b) => write!(f, "{b}"),
            QuantBits::Continuous => f.write_str("continuous"),
        }
    }
}

/// Shape of the power-law misalignment coefficient h_M on [0, φ].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MisalignmentParams {
    /// Collected power fraction under perfect alignment.
    pub phi: f64,
    pub zeta: f64,
}

impl MisalignmentParams {
    pub fn new(phi: f64, zeta: f64) -> Result<Self, ConfigError> {
        let params = MisalignmentParams { phi, zeta };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.phi > 0.0 && self.phi <= 1.0) {
            return Err(ConfigError::invalid("phi", format!("{} not in (0, 1]", self.phi)));
        }
        if !(self.zeta > 0.0 && self.zeta.is_finite()) {
            return Err(ConfigError::invalid("zeta", format!("{} must be > 0", self.zeta)));
        }
        Ok(())
    }

    /// E[h_M^k] = ζ φ^k / (ζ + k).
    pub fn moment(&self, k: u32) -> f64 {
        self.zeta * self.phi.powi(k as i32) / (self.zeta + k as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Misalignment {
    /// h_M is fixed at 1.
    Disabled,
    Enabled(MisalignmentParams),
}

/// Beam geometry from which [`MisalignmentParams`] can be derived. All in metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MisalignmentGeometry {
    /// Radius of the user's effective area.
    pub a: f64,
    /// Beam footprint at the user.
    pub omega_bs: f64,
    /// Equivalent beam width.
    pub omega_e: f64,
    /// Standard deviation of the pointing displacement.
    pub sigma_s: f64,
}

impl MisalignmentGeometry {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (key, v) in [
            ("a_m", self.a),
            ("omega_bs_m", self.omega_bs),
            ("omega_e_m", self.omega_e),
            ("sigma_s_m", self.sigma_s),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::invalid(key, format!("{v} must be > 0")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnrMode {
    /// ρ_s is taken from `rho_db` and does not depend on the channel draw.
    RhoControlled,
    /// ρ_s is computed per draw from P_s, h_L and the realized Σ|g_m|².
    Physical,
}

impl fmt::Display for SnrMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SnrMode::RhoControlled => "rho_controlled",
            SnrMode::Physical => "physical",
        })
    }
}

/// Full parameterization of one link scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Carrier frequency, Hz.
    pub frequency: f64,
    /// BS to RIS distance, m.
    pub d1: f64,
    /// RIS to user distance, m.
    pub d2: f64,
    pub g1_dbi: f64,
    pub g2_dbi: f64,
    pub absorption: Absorption,
    pub num_elements: usize,
    /// Amplification gain β of the active RIS.
    pub amplification: f64,
    /// Active-RIS noise variance per element, W.
    pub sigma_r_sq: f64,
    /// Receiver noise variance, W.
    pub sigma_u_sq: f64,
    /// Transmit power P_s, W.
    pub tx_power: f64,
    pub quant_bits: QuantBits,
    pub misalignment: Misalignment,
    pub snr_mode: SnrMode,
    pub rho_db: f64,
}

impl Default for SystemConfig {
    /// The reference scenario: 0.3 THz, 15 m hops, 30 dBi antennas, M = 100,
    /// β = 2, σ_r² = 0.01, σ_u² = 0.05, h_A = 0.68, φ = 0.2, ζ = 0.52, b = 2.
    fn default() -> Self {
        SystemConfig {
            frequency: 0.3e12,
            d1: 15.0,
            d2: 15.0,
            g1_dbi: 30.0,
            g2_dbi: 30.0,
            absorption: Absorption::Gain(0.68),
            num_elements: 100,
            amplification: 2.0,
            sigma_r_sq: 0.01,
            sigma_u_sq: 0.05,
            tx_power: 1.0,
            quant_bits: QuantBits::Bits(2),
            misalignment: Misalignment::Enabled(MisalignmentParams { phi: 0.2, zeta: 0.52 }),
            snr_mode: SnrMode::RhoControlled,
            rho_db: 10.0,
        }
    }
}

fn positive(key: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::invalid(key, format!("{v} must be > 0")))
    }
}

impl SystemConfig {
    /// Checks every field invariant. Errors name the offending config key.
    pub fn validate(&self) -> Result<(), ConfigError> {
        positive("frequency_hz", self.frequency)?;
        positive("d1_m", self.d1)?;
        positive("d2_m", self.d2)?;
        for (key, v) in [("g1_dbi", self.g1_dbi), ("g2_dbi", self.g2_dbi), ("rho_db", self.rho_db)] {
            if !v.is_finite() {
                return Err(ConfigError::invalid(key, "must be finite"));
            }
        }
        match self.absorption {
            Absorption::Coefficient(k) => {
                if !(k >= 0.0 && k.is_finite()) {
                    return Err(ConfigError::invalid("kappa_per_m", format!("{k} must be >= 0")));
                }
            }
            Absorption::Gain(h) => {
                if !(h > 0.0 && h <= 1.0) {
                    return Err(ConfigError::invalid("h_a", format!("{h} not in (0, 1]")));
                }
            }
        }
        positive("beta", self.amplification)?;
        if !(self.sigma_r_sq >= 0.0 && self.sigma_r_sq.is_finite()) {
            return Err(ConfigError::invalid(
                "sigma_r_sq",
                format!("{} must be >= 0", self.sigma_r_sq),
            ));
        }
        positive("sigma_u_sq", self.sigma_u_sq)?;
        positive("tx_power_w", self.tx_power)?;
        if let QuantBits::Bits(b) = self.quant_bits {
            if b == 0 || b > MAX_QUANT_BITS {
                return Err(ConfigError::invalid(
                    "quant_bits",
                    format!("{b} not in 1..={MAX_QUANT_BITS}"),
                ));
            }
        }
        if let Misalignment::Enabled(p) = self.misalignment {
            p.validate()?;
        }
        Ok(())
    }

    /// Linear ρ_s for [`SnrMode::RhoControlled`].
    pub fn rho_linear(&self) -> f64 {
        db_to_linear(self.rho_db)
    }

    /// Upper end of the support of h_M (φ, or 1 when misalignment is off).
    pub fn misalignment_ceiling(&self) -> f64 {
        match self.misalignment {
            Misalignment::Disabled => 1.0,
            Misalignment::Enabled(p) => p.phi,
        }
    }

    /// Reads a config file. Keys absent from the file keep their defaults.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let entries = ConfigEntries::from_file(path)?;
        Self::from_entries(&entries)
    }

    pub fn from_entries(entries: &ConfigEntries) -> Result<Self, ConfigError> {
        let mut cfg = SystemConfig::default();
        let mut phi = 0.2;
        let mut zeta = 0.52;
        let mut misalignment_on = true;
        let mut geometry = [None; 4];

        if entries.get("h_a").is_some() && entries.get("kappa_per_m").is_some() {
            return Err(ConfigError::Conflict {
                first: "h_a".into(),
                second: "kappa_per_m".into(),
            });
        }

        for (key, entry) in &entries.map {
            let num = || entry.parse_f64(key);
            match key.as_str() {
                "frequency_hz" => cfg.frequency = num()?,
                "d1_m" => cfg.d1 = num()?,
                "d2_m" => cfg.d2 = num()?,
                "g1_dbi" => cfg.g1_dbi = num()?,
                "g2_dbi" => cfg.g2_dbi = num()?,
                "h_a" => cfg.absorption = Absorption::Gain(num()?),
                "kappa_per_m" => cfg.absorption = Absorption::Coefficient(num()?),
                "num_elements" => cfg.num_elements = entry.parse_usize(key)?,
                "beta" => cfg.amplification = num()?,
                "sigma_r_sq" => cfg.sigma_r_sq = num()?,
                "sigma_u_sq" => cfg.sigma_u_sq = num()?,
                "tx_power_w" => cfg.tx_power = num()?,
                "rho_db" => cfg.rho_db = num()?,
                "phi" => phi = num()?,
                "zeta" => zeta = num()?,
                "a_m" => geometry[0] = Some(num()?),
                "omega_bs_m" => geometry[1] = Some(num()?),
                "omega_e_m" => geometry[2] = Some(num()?),
                "sigma_s_m" => geometry[3] = Some(num()?),
                "quant_bits" => {
                    cfg.quant_bits = if entry.value.eq_ignore_ascii_case("continuous") {
                        QuantBits::Continuous
                    } else {
                        let b = entry.parse_usize(key)?;
                        QuantBits::Bits(u32::try_from(b).unwrap_or(u32::MAX))
                    }
                }
                "misalignment" => {
                    misalignment_on = match entry.value.to_ascii_lowercase().as_str() {
                        "disabled" | "off" => false,
                        "enabled" | "on" => true,
                        _ => return Err(entry.parse_error(key)),
                    }
                }
                "snr_mode" => {
                    cfg.snr_mode = match entry.value.to_ascii_lowercase().as_str() {
                        "rho_controlled" => SnrMode::RhoControlled,
                        "physical" => SnrMode::Physical,
                        _ => return Err(entry.parse_error(key)),
                    }
                }
                _ => {
                    return Err(ConfigError::UnknownKey {
                        line: entry.line,
                        key: key.clone(),
                    })
                }
            }
        }

        match geometry {
            [None, None, None, None] => {}
            [Some(a), Some(omega_bs), Some(omega_e), Some(sigma_s)] => {
                for key in ["phi", "zeta"] {
                    if entries.get(key).is_some() {
                        return Err(ConfigError::Conflict {
                            first: key.into(),
                            second: "a_m".into(),
                        });
                    }
                }
                let derived = derive_misalignment(&MisalignmentGeometry {
                    a,
                    omega_bs,
                    omega_e,
                    sigma_s,
                })?;
                phi = derived.phi;
                zeta = derived.zeta;
            }
            _ => {
                return Err(ConfigError::invalid(
                    "a_m",
                    "a_m, omega_bs_m, omega_e_m and sigma_s_m must be given together",
                ))
            }
        }

        cfg.misalignment = if misalignment_on {
            Misalignment::Enabled(MisalignmentParams { phi, zeta })
        } else {
            Misalignment::Disabled
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// One `key = value` line.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigEntry {
    pub line: usize,
    pub value: String,
}

impl ConfigEntry {
    fn parse_error(&self, key: &str) -> ConfigError {
        ConfigError::Parse {
            line: self.line,
            key: key.to_string(),
            value: self.value.clone(),
        }
    }

    fn parse_f64(&self, key: &str) -> Result<f64, ConfigError> {
        self.value.parse().map_err(|_| self.parse_error(key))
    }

    fn parse_usize(&self, key: &str) -> Result<usize, ConfigError> {
        self.value.parse().map_err(|_| self.parse_error(key))
    }
}

/// Raw key-value pairs of a config file, before interpretation.
///
/// Kept separate from [`SystemConfig`] so sweep scenarios can overlay their
/// own keys on a base file and validate the merged result.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigEntries {
    map: BTreeMap<String, ConfigEntry>,
}

impl ConfigEntries {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                text: content.to_string(),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(ConfigError::Syntax {
                    line,
                    text: content.to_string(),
                });
            }
            map.insert(
                key.to_string(),
                ConfigEntry {
                    line,
                    value: value.to_string(),
                },
            );
        }
        Ok(ConfigEntries { map })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|e| e.value.as_str())
    }

    /// Sets a key, replacing any previous value. Setting one absorption key
    /// clears the other so overlays can switch between them.
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        match key {
            "h_a" => {
                self.map.remove("kappa_per_m");
            }
            "kappa_per_m" => {
                self.map.remove("h_a");
            }
            _ => {}
        }
        self.map.insert(
            key.to_string(),
            ConfigEntry {
                line: 0,
                value: value.into(),
            },
        );
    }

    pub fn overlay(&self, other: &ConfigEntries) -> ConfigEntries {
        let mut merged = self.clone();
        for (k, e) in &other.map {
            merged.set(k, e.value.clone());
        }
        merged
    }
}

/// Deterministic propagation and absorption gains of the cascaded link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGains {
    pub h_p: f64,
    pub h_a: f64,
    /// h_P · h_A.
    pub h_l: f64,
    /// κ implied by h_A over the total path d1 + d2, 1/m.
    pub implied_kappa: f64,
}

impl LinkGains {
    pub fn compute(cfg: &SystemConfig) -> Result<Self, ConfigError> {
        let h_p = propagation_gain(cfg)?;
        let AbsorptionGain { gain, kappa } = absorption_gain(cfg)?;
        Ok(LinkGains {
            h_p,
            h_a: gain,
            h_l: h_p * gain,
            implied_kappa: kappa,
        })
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Friis gain of the two-hop link: c·√(G1·G2) / (8·√(π³)·f·d1·d2).
pub fn propagation_gain(cfg: &SystemConfig) -> Result<f64, ConfigError> {
    positive("frequency_hz", cfg.frequency)?;
    positive("d1_m", cfg.d1)?;
    positive("d2_m", cfg.d2)?;
    let g = (db_to_linear(cfg.g1_dbi) * db_to_linear(cfg.g2_dbi)).sqrt();
    Ok(SPEED_OF_LIGHT * g / (8.0 * PI.powi(3).sqrt() * cfg.frequency * cfg.d1 * cfg.d2))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsorptionGain {
    pub gain: f64,
    /// The coefficient used, or the one implied by a directly given gain.
    pub kappa: f64,
}

/// h_A = exp(−κ(d1 + d2)/2).
pub fn absorption_gain(cfg: &SystemConfig) -> Result<AbsorptionGain, ConfigError> {
    let path = cfg.d1 + cfg.d2;
    match cfg.absorption {
        Absorption::Coefficient(kappa) => {
            if !(kappa >= 0.0 && kappa.is_finite()) {
                return Err(ConfigError::invalid("kappa_per_m", format!("{kappa} must be >= 0")));
            }
            Ok(AbsorptionGain {
                gain: (-kappa * path / 2.0).exp(),
                kappa,
            })
        }
        Absorption::Gain(gain) => {
            if !(gain > 0.0 && gain <= 1.0) {
                return Err(ConfigError::invalid("h_a", format!("{gain} not in (0, 1]")));
            }
            // -0.0 for gain = 1
            let kappa = -2.0 * gain.ln() / path + 0.0;
            Ok(AbsorptionGain { gain, kappa })
        }
    }
}

/// φ = erf(l)² with l = √π·a/(√2·ω_BS), and ζ = ω_e²/(4σ_s²).
pub fn derive_misalignment(geom: &MisalignmentGeometry) -> Result<MisalignmentParams, ConfigError> {
    geom.validate()?;
    let l = PI.sqrt() * geom.a / (std::f64::consts::SQRT_2 * geom.omega_bs);
    let phi = erf(l).powi(2);
    let zeta = geom.omega_e.powi(2) / (4.0 * geom.sigma_s.powi(2));
    MisalignmentParams::new(phi, zeta)
}

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

/// Error function, absolute error below 1e-7 (in practice near 1e-15).
///
/// |x| ≤ 3 uses the all-positive series
/// erf(x) = 2/√π · e^{−x²} · Σ 2ⁿ x^{2n+1} / (1·3·…·(2n+1)),
/// which avoids the cancellation of the alternating Maclaurin series.
/// Beyond that, erfc comes from its continued fraction.
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let ax = x.abs();
    let value = if ax <= 3.0 {
        erf_series(ax)
    } else {
        1.0 - erfc_continued_fraction(ax)
    };
    value.copysign(x)
}

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    if x > 3.0 {
        erfc_continued_fraction(x)
    } else {
        1.0 - erf(x)
    }
}

fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= 2.0 * x2 / (2.0 * n + 1.0);
        sum += term;
        if term <= sum * 1e-17 {
            break;
        }
    }
    FRAC_2_SQRT_PI * (-x2).exp() * sum
}

fn erfc_continued_fraction(x: f64) -> f64 {
    // erfc(x) = e^{−x²}/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + …))))
    const DEPTH: usize = 80;
    let mut t = x;
    for k in (1..=DEPTH).rev() {
        t = x + (k as f64 / 2.0) / t;
    }
    (-x * x).exp() / (PI.sqrt() * t)
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // mpmath, 30 digits.
    const DEFAULT_PROPAGATION_GAIN: f64 = 9.9701601420462717015e-5;

    #[test]
    fn default_propagation_gain_matches_oracle() {
        let g = propagation_gain(&SystemConfig::default()).unwrap();
        assert_relative_eq!(g, DEFAULT_PROPAGATION_GAIN, max_relative = 1e-12);
    }

    #[test]
    fn unit_propagation_gain_when_balanced() {
        // Choose G1 = G2 so that c·G = 8√(π³)·f·d1·d2.
        let mut cfg = SystemConfig {
            frequency: 1e9,
            d1: 2.0,
            d2: 3.0,
            ..SystemConfig::default()
        };
        let g = 8.0 * PI.powi(3).sqrt() * cfg.frequency * cfg.d1 * cfg.d2 / SPEED_OF_LIGHT;
        cfg.g1_dbi = 10.0 * g.log10();
        cfg.g2_dbi = cfg.g1_dbi;
        assert_relative_eq!(propagation_gain(&cfg).unwrap(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn doubling_distance_halves_gain() {
        let cfg = SystemConfig::default();
        let far = SystemConfig { d1: 2.0 * cfg.d1, ..cfg.clone() };
        let ratio = propagation_gain(&far).unwrap() / propagation_gain(&cfg).unwrap();
        assert_relative_eq!(ratio, 0.5, max_relative = 1e-15);
    }

    #[test]
    fn propagation_gain_rejects_bad_geometry() {
        for cfg in [
            SystemConfig { frequency: 0.0, ..Default::default() },
            SystemConfig { d1: -1.0, ..Default::default() },
            SystemConfig { d2: 0.0, ..Default::default() },
        ] {
            assert!(propagation_gain(&cfg).is_err());
        }
    }

    #[test]
    fn absorption_examples() {
        let zero = SystemConfig { absorption: Absorption::Coefficient(0.0), ..Default::default() };
        assert_eq!(absorption_gain(&zero).unwrap().gain, 1.0);

        // κ·(d1+d2) = 2
        let one = SystemConfig { absorption: Absorption::Coefficient(2.0 / 30.0), ..Default::default() };
        assert_relative_eq!(absorption_gain(&one).unwrap().gain, (-1.0f64).exp(), max_relative = 1e-15);

        let implied = absorption_gain(&SystemConfig::default()).unwrap();
        assert_eq!(implied.gain, 0.68);
        assert_relative_eq!(implied.kappa, 0.025_710_832_054_132_311, max_relative = 1e-12);
    }

    #[test]
    fn absorption_rejects_out_of_range() {
        for a in [Absorption::Gain(0.0), Absorption::Gain(1.5), Absorption::Coefficient(-0.1)] {
            let cfg = SystemConfig { absorption: a, ..Default::default() };
            assert!(absorption_gain(&cfg).is_err());
            assert!(cfg.validate().is_err());
        }
    }

    #[test]
    fn link_gain_is_exact_product() {
        let cfg = SystemConfig::default();
        let g = LinkGains::compute(&cfg).unwrap();
        assert_eq!(g.h_l, g.h_p * g.h_a);
    }

    #[test]
    fn misalignment_from_geometry() {
        let unit = derive_misalignment(&MisalignmentGeometry {
            a: 1.0,
            omega_bs: 1.0,
            omega_e: 2.0,
            sigma_s: 1.0,
        })
        .unwrap();
        assert_eq!(unit.zeta, 1.0);
        // erf(√(π/2))², mpmath
        assert_relative_eq!(unit.phi, 0.853_186_128_923_578_7, max_relative = 1e-9);

        let wide = derive_misalignment(&MisalignmentGeometry {
            a: 100.0,
            omega_bs: 1.0,
            omega_e: 1.0,
            sigma_s: 1.0,
        })
        .unwrap();
        assert_eq!(wide.phi, 1.0);
    }

    #[test]
    fn misalignment_scale_invariance() {
        let base = MisalignmentGeometry { a: 0.3, omega_bs: 0.7, omega_e: 0.5, sigma_s: 0.2 };
        let p = derive_misalignment(&base).unwrap();
        for k in [0.01, 3.0, 1e4] {
            let scaled = MisalignmentGeometry { a: base.a * k, omega_bs: base.omega_bs * k, ..base };
            assert_relative_eq!(derive_misalignment(&scaled).unwrap().phi, p.phi, max_relative = 1e-13);
        }
    }

    #[test]
    fn erf_reference_values() {
        // mpmath, 30 digits
        let table = [
            (0.0, 0.0),
            (1e-3, 0.001_128_378_790_969_236_4),
            (0.1, 0.112_462_916_018_284_89),
            (0.5, 0.520_499_877_813_046_54),
            (1.0, 0.842_700_792_949_714_87),
            (-1.7, -0.983_790_458_590_774_56),
            (2.0, 0.995_322_265_018_952_73),
            (2.9, 0.999_958_902_121_900_54),
            (3.1, 0.999_988_351_342_632_80),
            (3.5, 0.999_999_256_901_627_66),
            (4.0, 0.999_999_984_582_742_1),
            (5.0, 0.999_999_999_998_462_54),
        ];
        for (x, want) in table {
            assert!((erf(x) - want).abs() < 1e-14, "erf({x}) = {} want {want}", erf(x));
        }
        assert_eq!(erf(40.0), 1.0);
        assert_eq!(erf(f64::INFINITY), 1.0);
        assert_eq!(erf(f64::NEG_INFINITY), -1.0);
    }

    #[test]
    fn erf_branches_meet() {
        let below = erf(3.0);
        let above = erf(3.0 + 1e-12);
        assert!((above - below).abs() < 1e-15);
        assert!((erfc(3.0) - erfc(3.0 + 1e-12)).abs() < 1e-15);
    }

    #[test]
    fn erf_is_odd_and_monotone() {
        let mut prev = -1.0;
        for i in -6000..=6000 {
            let x = i as f64 * 1e-3;
            let v = erf(x);
            assert_eq!(erf(-x), -v);
            assert!(v > -1.0 && v < 1.0 || x.abs() > 5.5);
            if x.abs() < 5.0 {
                assert!(v > prev, "not increasing at {x}");
            }
            prev = v;
        }
    }

    #[test]
    fn parse_defaults_file() {
        let text = "\
# reference scenario
frequency_hz = 0.3e12
d1_m = 15
d2_m = 15   # metres
g1_dbi = 30
g2_dbi = 30
h_a = 0.68
num_elements = 100
beta = 2
sigma_r_sq = 0.01
sigma_u_sq = 0.05
tx_power_w = 1
quant_bits = 2
phi = 0.2
zeta = 0.52
snr_mode = rho_controlled
rho_db = 10
";
        let cfg = SystemConfig::from_entries(&ConfigEntries::parse(text).unwrap()).unwrap();
        assert_eq!(cfg, SystemConfig::default());
    }

    #[test]
    fn parse_variants() {
        let cfg = SystemConfig::from_entries(
            &ConfigEntries::parse(
                "quant_bits = continuous\nmisalignment = disabled\nsnr_mode = physical\nkappa_per_m = 0.01",
            )
            .unwrap(),
        )
        .unwrap();
        assert_eq!(cfg.quant_bits, QuantBits::Continuous);
        assert_eq!(cfg.misalignment, Misalignment::Disabled);
        assert_eq!(cfg.snr_mode, SnrMode::Physical);
        assert_eq!(cfg.absorption, Absorption::Coefficient(0.01));

        let geo = SystemConfig::from_entries(
            &ConfigEntries::parse("a_m = 1\nomega_bs_m = 1\nomega_e_m = 2\nsigma_s_m = 1").unwrap(),
        )
        .unwrap();
        match geo.misalignment {
            Misalignment::Enabled(p) => assert_eq!(p.zeta, 1.0),
            Misalignment::Disabled => panic!(),
        }
    }

    #[test]
    fn parse_errors_name_the_key() {
        let cases = [
            ("sigma_u_sq = 0", "sigma_u_sq"),
            ("beta = -1", "beta"),
            ("quant_bits = 0", "quant_bits"),
            ("phi = 1.5", "phi"),
            ("zeta = 0", "zeta"),
            ("h_a = 0.5\nkappa_per_m = 0.1", "h_a"),
            ("num_elements = -3", "num_elements"),
            ("bogus = 1", "bogus"),
            ("a_m = 1", "a_m"),
            ("snr_mode = loud", "snr_mode"),
        ];
        for (text, key) in cases {
            let err = SystemConfig::from_entries(&ConfigEntries::parse(text).unwrap()).unwrap_err();
            assert_eq!(err.key(), Some(key), "{text}: {err}");
        }
        assert!(matches!(
            ConfigEntries::parse("just words"),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
    }

    #[test]
    fn overlay_switches_absorption_form() {
        let base = ConfigEntries::parse("h_a = 0.5").unwrap();
        let over = ConfigEntries::parse("kappa_per_m = 0").unwrap();
        let cfg = SystemConfig::from_entries(&base.overlay(&over)).unwrap();
        assert_eq!(cfg.absorption, Absorption::Coefficient(0.0));
    }
}
