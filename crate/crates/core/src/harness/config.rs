//! Sweep configuration and its flat `key = value` text form.
//!
//! ```text
//! # comment
//! k_values = 100, 1000, 10000
//! power = 1
//! trials = 200
//! strategies = I, II, III
//! seed = 1
//! alpha_distribution = uniform
//! exponent_mode = theorem1
//! mc_samples = 10000
//! strategy1_length = formula
//! ```
//!
//! Every key is optional; unknown or repeated keys are rejected.

use std::collections::HashSet;
use std::str::FromStr;

use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::exponent::MIN_MC_SAMPLES;
use crate::fading::AlphaDistribution;
use crate::scheduler::Strategy;

/// How the realized throughput of a chosen design is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExponentMode {
    Theorem1,
    ExactMc,
}

impl ExponentMode {
    pub fn label(self) -> &'static str {
        match self {
            ExponentMode::Theorem1 => "theorem1",
            ExponentMode::ExactMc => "exact_mc",
        }
    }
}

impl FromStr for ExponentMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "theorem1" => Ok(ExponentMode::Theorem1),
            "exact_mc" => Ok(ExponentMode::ExactMc),
            other => Err(Error::Config(format!(
                "exponent_mode must be theorem1 or exact_mc, got {other:?}"
            ))),
        }
    }
}

/// Codeword length used by strategy I.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy1Length {
    /// `strategy1_codeword_length(K, E[log(1/α)])`.
    Formula,
    /// Per `K`, the `N ∈ 1..=50` with the best mean throughput over the trials.
    Empirical,
    Fixed(usize),
}

/// Upper end of the strategy I empirical length search.
pub const EMPIRICAL_MAX_LENGTH: usize = 50;

impl FromStr for Strategy1Length {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "formula" => Ok(Strategy1Length::Formula),
            "empirical" => Ok(Strategy1Length::Empirical),
            other => match other.parse::<usize>() {
                Ok(n) if n >= 1 => Ok(Strategy1Length::Fixed(n)),
                _ => Err(Error::Config(format!(
                    "strategy1_length must be formula, empirical or a positive integer, got {other:?}"
                ))),
            },
        }
    }
}

impl std::fmt::Display for Strategy1Length {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Strategy1Length::Formula => f.write_str("formula"),
            Strategy1Length::Empirical => f.write_str("empirical"),
            Strategy1Length::Fixed(n) => write!(f, "{n}"),
        }
    }
}

/// A Monte-Carlo experiment.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    /// Population sizes, strictly ascending.
    pub k_values: Vec<u64>,
    pub power: f64,
    /// Independent population draws per `K`.
    pub trials: usize,
    pub strategies: Vec<Strategy>,
    pub seed: u64,
    pub alpha_distribution: AlphaDistribution,
    pub exponent_mode: ExponentMode,
    /// Samples per exponent evaluation in `exact_mc` mode.
    pub mc_samples: usize,
    pub strategy1_length: Strategy1Length,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            k_values: vec![100, 1000, 10_000],
            power: 1.0,
            trials: 200,
            strategies: vec![Strategy::I, Strategy::II, Strategy::III],
            seed: 1,
            alpha_distribution: AlphaDistribution::Uniform,
            exponent_mode: ExponentMode::Theorem1,
            mc_samples: 10_000,
            strategy1_length: Strategy1Length::Formula,
        }
    }
}

const KEYS: [&str; 9] = [
    "k_values",
    "power",
    "trials",
    "strategies",
    "seed",
    "alpha_distribution",
    "exponent_mode",
    "mc_samples",
    "strategy1_length",
];

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

/// Parses a comma-separated list of population sizes; `1e4` style is accepted.
pub fn parse_k_list(value: &str) -> Result<Vec<u64>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            if let Ok(k) = s.parse::<u64>() {
                return Ok(k);
            }
            match s.parse::<f64>() {
                Ok(x) if x >= 1.0 && x.fract() == 0.0 && x <= u64::MAX as f64 => Ok(x as u64),
                _ => Err(Error::Config(format!("k_values: bad entry {s:?}"))),
            }
        })
        .collect()
}

/// Parses a comma-separated strategy list such as `I, II, optimal`.
pub fn parse_strategies(value: &str) -> Result<Vec<Strategy>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| Strategy::parse(s).ok_or_else(|| Error::Config(format!("unknown strategy {s:?}"))))
        .collect()
}

impl SweepConfig {
    /// Parses the text form on top of the defaults and validates the result.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = SweepConfig::default();
        let mut seen = HashSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            cfg.set(key.trim(), value.trim())?;
            if !seen.insert(key.trim().to_string()) {
                return Err(Error::Config(format!("line {}: duplicate key {}", lineno + 1, key.trim())));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one field from its text value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "k_values" => self.k_values = parse_k_list(value)?,
            "power" => self.power = parse_num(key, value)?,
            "trials" => self.trials = parse_num(key, value)?,
            "strategies" => self.strategies = parse_strategies(value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "alpha_distribution" => {
                self.alpha_distribution = match value {
                    "uniform" => AlphaDistribution::Uniform,
                    other => {
                        return Err(Error::Config(format!(
                            "alpha_distribution: only uniform is available from text, got {other:?}"
                        )))
                    }
                }
            }
            "exponent_mode" => self.exponent_mode = value.parse()?,
            "mc_samples" => self.mc_samples = parse_num(key, value)?,
            "strategy1_length" => self.strategy1_length = value.parse()?,
            other => {
                return Err(Error::Config(format!(
                    "unknown key {other:?} (expected one of {})",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_values.is_empty() {
            return Err(Error::Config("k_values must not be empty".into()));
        }
        if self.k_values[0] == 0 {
            return Err(Error::Config("k_values must be positive".into()));
        }
        if self.k_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("k_values must be strictly ascending".into()));
        }
        if !(self.power > 0.0 && self.power.is_finite()) {
            return Err(Error::Config(format!("power must be positive, got {}", self.power)));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.strategies.is_empty() {
            return Err(Error::Config("strategies must not be empty".into()));
        }
        let unique: HashSet<_> = self.strategies.iter().collect();
        if unique.len() != self.strategies.len() {
            return Err(Error::Config("strategies must not repeat".into()));
        }
        if self.exponent_mode == ExponentMode::ExactMc && self.mc_samples < MIN_MC_SAMPLES {
            return Err(Error::Config(format!(
                "mc_samples must be at least {MIN_MC_SAMPLES} in exact_mc mode"
            )));
        }
        self.alpha_distribution.check_support()?;
        Ok(())
    }

    /// The text form; `parse(to_text())` reproduces the configuration for
    /// the uniform law.
    pub fn to_text(&self) -> String {
        let ks: Vec<String> = self.k_values.iter().map(u64::to_string).collect();
        let ss: Vec<&str> = self.strategies.iter().map(|s| s.label()).collect();
        format!(
            "k_values = {}\npower = {}\ntrials = {}\nstrategies = {}\nseed = {}\n\
             alpha_distribution = {}\nexponent_mode = {}\nmc_samples = {}\nstrategy1_length = {}\n",
            ks.join(", "),
            self.power,
            self.trials,
            ss.join(", "),
            self.seed,
            self.alpha_distribution.name(),
            self.exponent_mode.label(),
            self.mc_samples,
            self.strategy1_length,
        )
    }

    /// JSON echo of every field.
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "k_values": self.k_values,
            "power": self.power,
            "trials": self.trials,
            "strategies": self.strategies.iter().map(|s| s.label()).collect::<Vec<_>>(),
            "seed": self.seed,
            "alpha_distribution": self.alpha_distribution.name(),
            "exponent_mode": self.exponent_mode.label(),
            "mc_samples": self.mc_samples,
            "strategy1_length": self.strategy1_length.to_string(),
        })
    }
}
