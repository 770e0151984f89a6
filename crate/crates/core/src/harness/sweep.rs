//! The sweep driver.
//!
//! Trial `t` at population size `K` draws its users from substream
//! `[K, t]` of the configured seed, and exact Monte-Carlo exponents for
//! strategy `s` use substream `[K, t, EXPONENT_TAG + s]`. Per-trial records
//! are kept in trial order and reduced with compensated sums, so serial and
//! parallel runs agree bit for bit.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExponentMode, Strategy1Length, SweepConfig, EMPIRICAL_MAX_LENGTH};
use crate::asymptotics::{alpha_moment, theorem4_value, Moment, ScalingLaw, MIN_LAW_USERS};
use crate::error::Result;
use crate::exponent::{
    exponent_exact_mc, frame_throughput, pe_upper_bound_with_hint, theorem1_value, LinkDesign,
};
use crate::fading::{sample_initial, AlphaDistribution, FadingParams};
use crate::rng::{substream, SimRng};
use crate::scheduler::{
    fixed_length_user_design, schedule_optimal, schedule_strategy1, schedule_strategy2,
    schedule_strategy3, strategy1_codeword_length, strategy3_threshold, Population,
    ScheduleOutcome, Strategy, UserState,
};
use crate::stats::{compensated_sum, mean_and_stderr};

/// Substream tag offset for exponent sampling.
pub const EXPONENT_TAG: u64 = 1 << 32;

/// Where trials run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Serial,
    /// On the current rayon pool.
    #[default]
    Parallel,
}

/// Aggregate for one `(K, strategy)` pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub k: u64,
    pub strategy: Strategy,
    pub mean_throughput: f64,
    pub stderr: f64,
    pub mean_u0sq: f64,
    pub mean_alpha: f64,
    /// Share of trials in which no user cleared the strategy III threshold.
    pub fallback_rate: f64,
    /// Asymptotic law for this strategy; `NaN` below `K = 16`.
    pub law_value: f64,
    /// `(log(P log K) - mean_throughput) / sqrt(log log log K)`; `NaN` below `K = 16`.
    pub gap: f64,
    /// Common codeword length used by strategy I.
    pub strategy1_length: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn row(&self, k: u64, strategy: Strategy) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.k == k && r.strategy == strategy)
    }
}

#[derive(Debug, Clone, Copy)]
struct TrialRecord {
    throughput: f64,
    u0sq: f64,
    alpha: f64,
    fallback: bool,
}

/// Draws `K` users with ids `0..K`, each with a Rayleigh `u0` and an α from
/// `distribution`.
pub fn draw_population<R: Rng + ?Sized>(
    k: u64,
    power: f64,
    distribution: &AlphaDistribution,
    rng: &mut R,
) -> Result<Population> {
    let users = (0..k)
        .map(|id| {
            let u0 = sample_initial(rng);
            let alpha = distribution.sample(rng);
            UserState { id, u0, alpha }
        })
        .collect();
    Population::new(users, power)
}

/// Throughput `R (1 - p_e)` of `design` on `user`, with `p_e` the
/// random-coding bound under the chosen exponent.
///
/// In `exact_mc` mode every exponent evaluation restarts from a clone of
/// `rng`, so all `ρ` share common random numbers.
pub fn realized_throughput(
    user: &UserState,
    design: &LinkDesign,
    mode: ExponentMode,
    mc_samples: usize,
    rng: &SimRng,
) -> Result<f64> {
    let n = design.length;
    let pe = match mode {
        ExponentMode::Theorem1 => {
            let exponent = |rho: f64| theorem1_value(rho, user.u0, user.alpha, n, design.power);
            pe_upper_bound_with_hint(design, exponent, Some(design.rho))
        }
        ExponentMode::ExactMc => {
            let params = FadingParams::new(user.alpha)?;
            let exponent = |rho: f64| {
                let mut local = rng.clone();
                exponent_exact_mc(rho, user.u0, &params, n, design.power, mc_samples, &mut local)
                    .map(|e| e.value)
                    .unwrap_or(0.0)
            };
            pe_upper_bound_with_hint(design, exponent, Some(design.rho))
        }
    };
    Ok(frame_throughput(design, pe))
}

fn strategy_index(s: Strategy) -> u64 {
    match s {
        Strategy::I => 0,
        Strategy::II => 1,
        Strategy::III => 2,
        Strategy::Optimal => 3,
    }
}

fn record(
    config: &SweepConfig,
    pop: &Population,
    outcome: &ScheduleOutcome,
    exponent_rng: &SimRng,
) -> Result<TrialRecord> {
    let user = pop.get(outcome.chosen_id).expect("chosen user belongs to the population");
    let throughput = match &outcome.design {
        Some(d) => realized_throughput(user, d, config.exponent_mode, config.mc_samples, exponent_rng)?,
        None => 0.0,
    };
    Ok(TrialRecord {
        throughput,
        u0sq: user.u0 * user.u0,
        alpha: user.alpha,
        fallback: outcome.fallback_used,
    })
}

fn map_trials<T, F>(trials: usize, exec: Execution, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    match exec {
        Execution::Serial => (0..trials as u64).map(f).collect(),
        Execution::Parallel => (0..trials as u64).into_par_iter().map(f).collect(),
    }
}

fn empirical_length(config: &SweepConfig, k: u64, exec: Execution) -> Result<usize> {
    let per_trial = map_trials(config.trials, exec, |t| {
        let mut rng = substream(config.seed, &[k, t]);
        let pop = draw_population(k, config.power, &config.alpha_distribution, &mut rng)?;
        let chosen = schedule_strategy1(&pop, 1).chosen_id;
        let user = *pop.get(chosen).expect("chosen user belongs to the population");
        let erng = substream(config.seed, &[k, t, EXPONENT_TAG + strategy_index(Strategy::I)]);
        (1..=EMPIRICAL_MAX_LENGTH)
            .map(|n| match fixed_length_user_design(&user, config.power, n) {
                Some(d) => realized_throughput(&user, &d, config.exponent_mode, config.mc_samples, &erng),
                None => Ok(0.0),
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    let mut best = (1, f64::NEG_INFINITY);
    for n in 1..=EMPIRICAL_MAX_LENGTH {
        let mean = compensated_sum(per_trial.iter().map(|v| v[n - 1]));
        if mean > best.1 {
            best = (n, mean);
        }
    }
    Ok(best.0)
}

/// Runs `config` on the current rayon pool.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    run_sweep_with(config, Execution::Parallel)
}

pub fn run_sweep_with(config: &SweepConfig, exec: Execution) -> Result<SweepResult> {
    config.validate()?;
    let dist = &config.alpha_distribution;
    let needs_moment = |m: Moment| -> Result<f64> { alpha_moment(dist, m) };
    let mean_log_inv = needs_moment(Moment::LogInv)?;
    let mean_sqrt_log_inv = needs_moment(Moment::SqrtLogInv)?;

    let mut rows = Vec::new();
    for &k in &config.k_values {
        let n1 = if config.strategies.contains(&Strategy::I) {
            Some(match config.strategy1_length {
                Strategy1Length::Formula => strategy1_codeword_length(k, mean_log_inv),
                Strategy1Length::Fixed(n) => n,
                Strategy1Length::Empirical => empirical_length(config, k, exec)?,
            })
        } else {
            None
        };
        let theta = strategy3_threshold(k);

        let trials = map_trials(config.trials, exec, |t| {
            let mut rng = substream(config.seed, &[k, t]);
            let pop = draw_population(k, config.power, dist, &mut rng)?;
            config
                .strategies
                .iter()
                .map(|&s| {
                    let outcome = match s {
                        Strategy::I => schedule_strategy1(&pop, n1.unwrap_or(1)),
                        Strategy::II => schedule_strategy2(&pop),
                        Strategy::III => schedule_strategy3(&pop, theta),
                        Strategy::Optimal => schedule_optimal(&pop),
                    };
                    let erng = substream(config.seed, &[k, t, EXPONENT_TAG + strategy_index(s)]);
                    record(config, &pop, &outcome, &erng)
                })
                .collect::<Result<Vec<TrialRecord>>>()
        })?;

        for (j, &s) in config.strategies.iter().enumerate() {
            let column: Vec<TrialRecord> = trials.iter().map(|r| r[j]).collect();
            let tput: Vec<f64> = column.iter().map(|r| r.throughput).collect();
            let (mean, stderr) = mean_and_stderr(&tput);
            let n = column.len() as f64;
            let law = ScalingLaw::for_strategy(s);
            let moment = match law.moment() {
                Some(Moment::LogInv) => mean_log_inv,
                Some(_) => mean_sqrt_log_inv,
                None => 0.0,
            };
            let gap = if k >= MIN_LAW_USERS {
                let lk = k as f64;
                (theorem4_value(lk, config.power) - mean) / lk.ln().ln().ln().sqrt()
            } else {
                f64::NAN
            };
            rows.push(SweepRow {
                k,
                strategy: s,
                mean_throughput: mean,
                stderr,
                mean_u0sq: compensated_sum(column.iter().map(|r| r.u0sq)) / n,
                mean_alpha: compensated_sum(column.iter().map(|r| r.alpha)) / n,
                fallback_rate: column.iter().filter(|r| r.fallback).count() as f64 / n,
                law_value: law.value_at(k, config.power, moment),
                gap,
                strategy1_length: if s == Strategy::I { n1 } else { None },
            });
        }
    }
    Ok(SweepResult { rows })
}
