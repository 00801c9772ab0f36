//! Single runs and parameter sweeps, with CSV output.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::capacity::{capacity_checked, estimate_capacity, gain_samples, CapacityEstimate, MIN_SAMPLES};
use crate::error::{ConfigError, SimError};
use crate::linkmodel::LinkModel;
use crate::params::{ConfigEntries, Misalignment, SnrMode, SystemConfig};

pub const CSV_HEADER: &str = "scenario,param_name,param_value,capacity_bits,std_err,ci_low,ci_high,n_samples,seed";

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_SAMPLES: usize = 100_000;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Sim(#[from] SimError),

    #[error("{0}")]
    Usage(String),

    #[error("cannot write {path}: {source}")]
    Io { path: String, source: io::Error },
}

impl From<ConfigError> for HarnessError {
    fn from(e: ConfigError) -> Self {
        HarnessError::Sim(SimError::Config(e))
    }
}

impl HarnessError {
    /// 2 for invalid input, 3 for a failed internal self-check, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Sim(SimError::SelfCheck { .. }) => 3,
            HarnessError::Sim(_) | HarnessError::Usage(_) => 2,
            HarnessError::Io { .. } => 1,
        }
    }
}

/// The config field a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    RhoDb,
    NumElements,
    QuantBits,
    Beta,
    Phi,
    Zeta,
}

impl SweepParam {
    /// Config-file key the parameter maps to.
    pub fn key(self) -> &'static str {
        match self {
            SweepParam::RhoDb => "rho_db",
            SweepParam::NumElements => "num_elements",
            SweepParam::QuantBits => "quant_bits",
            SweepParam::Beta => "beta",
            SweepParam::Phi => "phi",
            SweepParam::Zeta => "zeta",
        }
    }

    fn is_integer(self) -> bool {
        matches!(self, SweepParam::NumElements | SweepParam::QuantBits)
    }
}

impl FromStr for SweepParam {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "rho_db" => SweepParam::RhoDb,
            "num_elements" => SweepParam::NumElements,
            "quant_bits" => SweepParam::QuantBits,
            "beta" => SweepParam::Beta,
            "phi" => SweepParam::Phi,
            "zeta" => SweepParam::Zeta,
            _ => {
                return Err(HarnessError::Usage(format!(
                    "unknown sweep parameter `{s}` (expected rho_db, num_elements, quant_bits, beta, phi or zeta)"
                )))
            }
        })
    }
}

/// Parses `start:stop:step` (inclusive of `stop` when it lies on the grid)
/// or a comma-separated list.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, HarnessError> {
    let bad = || HarnessError::Usage(format!("invalid grid `{text}`"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let values = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let [start, stop, step] = parts[..] else {
            return Err(bad());
        };
        let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
        let span = (stop - start) / step;
        if !(step != 0.0 && span.is_finite() && span >= 0.0) || span > 1e7 {
            return Err(bad());
        }
        let count = (span + 1e-9).floor() as usize + 1;
        (0..count).map(|i| start + i as f64 * step).collect()
    } else {
        text.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(bad());
    }
    Ok(values)
}

/// A named set of config overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub overrides: ConfigEntries,
}

impl Scenario {
    pub fn new(name: &str, overrides: &[(&str, &str)]) -> Self {
        let mut entries = ConfigEntries::default();
        for (k, v) in overrides {
            entries.set(k, *v);
        }
        Scenario {
            name: name.to_string(),
            overrides: entries,
        }
    }
}

/// Named scenario presets.
///
/// `fig2`: two-bit vs continuous phases, each with and without misalignment.
/// `quantization`: 1, 2, 8 bits and continuous, misalignment as configured.
/// `base`: the config file unchanged.
pub fn scenario_preset(name: &str) -> Option<Vec<Scenario>> {
    Some(match name {
        "fig2" => vec![
            Scenario::new("b2_misaligned", &[("quant_bits", "2"), ("misalignment", "enabled")]),
            Scenario::new("continuous_misaligned", &[("quant_bits", "continuous"), ("misalignment", "enabled")]),
            Scenario::new("b2_aligned", &[("quant_bits", "2"), ("misalignment", "disabled")]),
            Scenario::new("continuous_aligned", &[("quant_bits", "continuous"), ("misalignment", "disabled")]),
        ],
        "quantization" => vec![
            Scenario::new("b1", &[("quant_bits", "1")]),
            Scenario::new("b2", &[("quant_bits", "2")]),
            Scenario::new("b8", &[("quant_bits", "8")]),
            Scenario::new("continuous", &[("quant_bits", "continuous")]),
        ],
        "base" => vec![Scenario::new("base", &[])],
        _ => return None,
    })
}

/// Parses a scenario file: one `name: key=value, key=value` per line.
pub fn parse_scenarios(text: &str) -> Result<Vec<Scenario>, HarnessError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |what: &str| HarnessError::Usage(format!("scenario line {}: {what}", idx + 1));
        let (name, rest) = line.split_once(':').ok_or_else(|| bad("expected `name: key=value, ...`"))?;
        let name = name.trim();
        if name.is_empty() || name.contains(',') || name.contains('"') {
            return Err(bad("invalid scenario name"));
        }
        let mut overrides = ConfigEntries::default();
        for pair in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = pair.split_once('=').ok_or_else(|| bad("expected key=value"))?;
            overrides.set(k.trim(), v.trim());
        }
        if out.iter().any(|s: &Scenario| s.name == name) {
            return Err(bad("duplicate scenario name"));
        }
        out.push(Scenario {
            name: name.to_string(),
            overrides,
        });
    }
    if out.is_empty() {
        return Err(HarnessError::Usage("scenario file defines no scenarios".into()));
    }
    Ok(out)
}

/// Resolves `--scenarios`: a preset name, or else a scenario file path.
pub fn load_scenarios(arg: &str) -> Result<Vec<Scenario>, HarnessError> {
    if let Some(s) = scenario_preset(arg) {
        return Ok(s);
    }
    let text = std::fs::read_to_string(arg)
        .map_err(|e| HarnessError::Usage(format!("`{arg}` is neither a preset nor a readable file: {e}")))?;
    parse_scenarios(&text)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub parameter: SweepParam,
    pub values: Vec<f64>,
    pub scenarios: Vec<Scenario>,
}

impl SweepSpec {
    /// ρ_s from −20 to 30 dB in 2 dB steps over the `fig2` scenarios.
    pub fn fig2() -> Self {
        SweepSpec {
            parameter: SweepParam::RhoDb,
            values: parse_grid("-20:30:2").expect("static grid"),
            scenarios: scenario_preset("fig2").expect("static preset"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub scenario: String,
    pub param_name: String,
    pub param_value: f64,
    pub estimate: CapacityEstimate,
    pub seed: u64,
}

fn value_string(param: SweepParam, value: f64) -> Result<String, HarnessError> {
    if param.is_integer() {
        if value.fract() != 0.0 || value < 0.0 || value > u32::MAX as f64 {
            return Err(HarnessError::Usage(format!(
                "{} needs non-negative integer values, got {value}",
                param.key()
            )));
        }
        Ok(format!("{}", value as u64))
    } else {
        Ok(format!("{value}"))
    }
}

fn scenario_configs(
    base: &ConfigEntries,
    spec: &SweepSpec,
    scenario: &Scenario,
) -> Result<Vec<SystemConfig>, HarnessError> {
    let merged = base.overlay(&scenario.overrides);
    spec.values
        .iter()
        .map(|&v| {
            let mut entries = merged.clone();
            entries.set(spec.parameter.key(), value_string(spec.parameter, v)?);
            Ok(SystemConfig::from_entries(&entries)?)
        })
        .collect()
}

/// Every (scenario, value) cell, in scenario-major grid order.
///
/// All cells share `seed`, so each one sees the same channel substreams and
/// differences between scenarios are not Monte Carlo noise. A rho_db sweep
/// in rho-controlled mode draws the channel once per scenario and rescales.
pub fn run_sweep(
    base: &ConfigEntries,
    spec: &SweepSpec,
    seed: u64,
    n_samples: usize,
) -> Result<Vec<SweepRow>, HarnessError> {
    if spec.values.is_empty() || spec.scenarios.is_empty() {
        return Err(HarnessError::Usage("sweep needs at least one value and one scenario".into()));
    }
    if n_samples < MIN_SAMPLES {
        return Err(SimError::TooFewSamples {
            min: MIN_SAMPLES,
            got: n_samples,
        }
        .into());
    }
    let configs: Vec<Vec<SystemConfig>> = spec
        .scenarios
        .iter()
        .map(|s| scenario_configs(base, spec, s))
        .collect::<Result<_, _>>()?;

    let mut rows = Vec::with_capacity(spec.values.len() * spec.scenarios.len());
    for (scenario, cfgs) in spec.scenarios.iter().zip(&configs) {
        let rescale = spec.parameter == SweepParam::RhoDb && cfgs[0].snr_mode == SnrMode::RhoControlled;
        let estimates: Vec<Result<CapacityEstimate, SimError>> = if rescale {
            let gains = gain_samples(&LinkModel::new(&cfgs[0])?, n_samples, seed);
            cfgs.par_iter()
                .map(|cfg| {
                    let rho = cfg.rho_linear();
                    let gammas: Vec<f64> = gains.iter().map(|g| rho * g).collect();
                    capacity_checked(&gammas)
                })
                .collect()
        } else {
            cfgs.par_iter()
                .map(|cfg| estimate_capacity(cfg, n_samples, seed))
                .collect()
        };
        for (&value, est) in spec.values.iter().zip(estimates) {
            rows.push(SweepRow {
                scenario: scenario.name.clone(),
                param_name: spec.parameter.key().to_string(),
                param_value: value,
                estimate: est?,
                seed,
            });
        }
    }
    Ok(rows)
}

/// Formats like C's `%.{digits}g`.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent format");
    let exp: i32 = exp.parse().expect("exponent digits");
    if exp < -4 || exp >= digits as i32 {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_csv<W: Write>(rows: &[SweepRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        let e = &r.estimate;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.scenario,
            r.param_name,
            format_sig(r.param_value, 9),
            format_sig(e.mean_bits, 9),
            format_sig(e.std_err, 9),
            format_sig(e.ci_low, 9),
            format_sig(e.ci_high, 9),
            e.n_samples,
            r.seed
        )?;
    }
    out.flush()
}

/// Writes the CSV, removing the file again if anything fails midway.
pub fn write_csv_file(rows: &[SweepRow], path: &Path) -> Result<(), HarnessError> {
    let io_err = |source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io_err)?;
    if let Err(e) = write_csv(rows, io::BufWriter::new(file)) {
        let _ = std::fs::remove_file(path);
        return Err(io_err(e));
    }
    Ok(())
}

/// Estimate plus the derived quantities worth showing for one config.
#[derive(Debug, Clone)]
pub struct SingleRun {
    pub config: SystemConfig,
    pub model: LinkModel,
    pub estimate: CapacityEstimate,
    pub seed: u64,
}

pub fn run_single(cfg: &SystemConfig, seed: u64, n_samples: usize) -> Result<SingleRun, HarnessError> {
    let model = LinkModel::new(cfg)?;
    let estimate = estimate_capacity(cfg, n_samples, seed)?;
    Ok(SingleRun {
        config: cfg.clone(),
        model,
        estimate,
        seed,
    })
}

impl SingleRun {
    pub fn report(&self) -> String {
        let g = self.model.gains();
        let c = &self.config;
        let e = &self.estimate;
        let mut s = String::new();
        let _ = writeln!(s, "propagation gain h_P   {}", format_sig(g.h_p, 9));
        let _ = writeln!(s, "absorption gain h_A    {}", format_sig(g.h_a, 9));
        let _ = writeln!(s, "path gain h_L          {}", format_sig(g.h_l, 9));
        let _ = writeln!(s, "absorption kappa       {} 1/m", format_sig(g.implied_kappa, 9));
        let _ = writeln!(s, "RIS elements           {}", c.num_elements);
        let _ = writeln!(s, "quantization bits      {}", c.quant_bits);
        match c.misalignment {
            Misalignment::Disabled => {
                let _ = writeln!(s, "misalignment           disabled");
            }
            Misalignment::Enabled(p) => {
                let _ = writeln!(s, "misalignment           phi={} zeta={}", p.phi, p.zeta);
            }
        }
        match c.snr_mode {
            SnrMode::RhoControlled => {
                let _ = writeln!(s, "rho_s mode             rho_controlled ({} dB)", c.rho_db);
            }
            SnrMode::Physical => {
                let _ = writeln!(s, "rho_s mode             physical (P_s = {} W)", c.tx_power);
            }
        }
        let _ = writeln!(s, "samples                {} (seed {})", e.n_samples, self.seed);
        let _ = writeln!(
            s,
            "ergodic capacity       {} bits/s/Hz  (std err {}, 95% CI [{}, {}])",
            format_sig(e.mean_bits, 9),
            format_sig(e.std_err, 9),
            format_sig(e.ci_low, 9),
            format_sig(e.ci_high, 9)
        );
        s
    }
}
