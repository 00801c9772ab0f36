//! Ergodic capacity of an active-RIS-aided terahertz link with discrete
//! phase shifts, beam misalignment, molecular absorption and active-RIS noise.
//!
//! - [`params`]: configuration and the deterministic link gains.
//! - [`stochastics`]: seeded channel, phase-error and misalignment samplers.
//! - [`linkmodel`]: instantaneous SNR and a symbol-level signal simulator.
//! - [`capacity`]: Monte Carlo and CDF-integral capacity estimators.
//! - [`harness`]: single runs, parameter sweeps and CSV output.

pub mod capacity;
pub mod error;
pub mod harness;
pub mod linkmodel;
pub mod params;
pub mod stochastics;

pub use capacity::{estimate_capacity, CapacityEstimate, EmpiricalCdf};
pub use error::{ConfigError, SimError};
pub use linkmodel::{LinkModel, SnrSample};
pub use params::{LinkGains, SystemConfig};
pub use stochastics::{ChannelDraw, RngStream};
