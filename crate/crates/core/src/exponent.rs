//! Random-coding error exponent of the correlated fading channel with an
//! i.i.d. Gaussian codebook, the resulting frame-error bound, and per-frame
//! throughput.
//!
//! For a frame of `n` symbols starting from a known initial gain `u0`,
//!
//! ```text
//! E(ρ) = -(1/n) log E[ Π_i (1 + P u_i² / (1 + ρ))^(-ρ) | u0 ]
//! ```
//!
//! [`exponent_exact_mc`] estimates this by sampling traces of the chain;
//! [`exponent_theorem1`] is its large-`u0` leading term, in which the gain
//! decays deterministically as `u0 α^i`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::fading::{sample_trace, FadingParams};
use crate::rng::substream;

/// Minimum sample count accepted by the Monte-Carlo estimator.
pub const MIN_MC_SAMPLES: usize = 1000;

/// Below this initial magnitude the closed form is flagged as inaccurate.
pub const THEOREM1_ACCURACY_U0: f64 = 3.0;

/// A transmission design for one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkDesign {
    /// Rate in nats per channel use.
    pub rate: f64,
    /// Codeword length in channel uses.
    pub length: usize,
    /// Gallager parameter in `[0, 1]`.
    pub rho: f64,
    pub power: f64,
    /// Throughput in nats per channel use, never above `rate`.
    pub throughput: f64,
}

impl LinkDesign {
    pub fn new(rate: f64, length: usize, rho: f64, power: f64, throughput: f64) -> Result<Self> {
        ensure(rate > 0.0 && rate.is_finite(), "rate", rate, "finite rate > 0")?;
        ensure(length >= 1, "length", length as f64, "length >= 1")?;
        ensure((0.0..=1.0).contains(&rho), "rho", rho, "0 <= rho <= 1")?;
        ensure(power > 0.0 && power.is_finite(), "power", power, "finite power > 0")?;
        ensure(
            throughput >= 0.0 && throughput <= rate,
            "throughput",
            throughput,
            "0 <= throughput <= rate",
        )?;
        Ok(Self {
            rate,
            length,
            rho,
            power,
            throughput,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExponentMethod {
    ExactMc,
    Theorem1,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentEstimate {
    /// `E(ρ)` in nats per channel use.
    pub value: f64,
    /// Monte-Carlo standard error; zero for the closed form.
    pub std_error: f64,
    pub method: ExponentMethod,
    /// Set when the closed form is evaluated outside its large-gain regime.
    pub accuracy_warning: bool,
}

/// Streaming estimate of `log mean exp(x_j)` with the moments needed for a
/// delta-method standard error. Merging two accumulators is exact up to
/// floating-point reassociation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogMeanExp {
    count: u64,
    max: f64,
    sum: f64,
    sum_sq: f64,
}

impl Default for LogMeanExp {
    fn default() -> Self {
        Self {
            count: 0,
            max: f64::NEG_INFINITY,
            sum: 0.0,
            sum_sq: 0.0,
        }
    }
}

impl LogMeanExp {
    pub fn push(&mut self, x: f64) {
        if x > self.max {
            let scale = (self.max - x).exp();
            self.sum *= scale;
            self.sum_sq *= scale * scale;
            self.max = x;
        }
        let w = (x - self.max).exp();
        self.sum += w;
        self.sum_sq += w * w;
        self.count += 1;
    }

    pub fn merge(&mut self, other: &LogMeanExp) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let max = self.max.max(other.max);
        let a = (self.max - max).exp();
        let b = (other.max - max).exp();
        self.sum = self.sum * a + other.sum * b;
        self.sum_sq = self.sum_sq * a * a + other.sum_sq * b * b;
        self.max = max;
        self.count += other.count;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// `log((1/m) Σ exp(x_j))`.
    pub fn log_mean(&self) -> f64 {
        self.max + (self.sum / self.count as f64).ln()
    }

    /// Standard error of [`log_mean`](Self::log_mean) by the delta method.
    pub fn log_mean_stderr(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let m = self.count as f64;
        let mean = self.sum / m;
        let var = ((self.sum_sq / m - mean * mean) * m / (m - 1.0)).max(0.0);
        (var / m).sqrt() / mean
    }
}

fn check_exponent_args(rho: f64, u0: f64, n: usize, power: f64) -> Result<()> {
    ensure((0.0..=1.0).contains(&rho), "rho", rho, "0 <= rho <= 1")?;
    ensure(u0 >= 0.0 && u0.is_finite(), "u0", u0, "finite u0 >= 0")?;
    ensure(n >= 1, "n", n as f64, "n >= 1")?;
    ensure(power >= 0.0 && power.is_finite(), "power", power, "finite power >= 0")
}

fn log_integrand<R: Rng + ?Sized>(
    rho: f64,
    u0: f64,
    params: &FadingParams,
    n: usize,
    power: f64,
    rng: &mut R,
) -> f64 {
    let snr = power / (1.0 + rho);
    let trace = sample_trace(u0, None, n, params, rng).expect("arguments checked");
    -rho * trace
        .gains
        .iter()
        .map(|u| (snr * u * u).ln_1p())
        .sum::<f64>()
}

fn finish(acc: &LogMeanExp, n: usize) -> ExponentEstimate {
    ExponentEstimate {
        value: -acc.log_mean() / n as f64,
        std_error: acc.log_mean_stderr() / n as f64,
        method: ExponentMethod::ExactMc,
        accuracy_warning: false,
    }
}

fn exact_zero() -> ExponentEstimate {
    ExponentEstimate {
        value: 0.0,
        std_error: 0.0,
        method: ExponentMethod::ExactMc,
        accuracy_warning: false,
    }
}

/// Monte-Carlo estimate of `E(ρ)` conditioned on the initial gain `u0`.
pub fn exponent_exact_mc<R: Rng + ?Sized>(
    rho: f64,
    u0: f64,
    params: &FadingParams,
    n: usize,
    power: f64,
    samples: usize,
    rng: &mut R,
) -> Result<ExponentEstimate> {
    check_exponent_args(rho, u0, n, power)?;
    if samples < MIN_MC_SAMPLES {
        return Err(Error::TooFewSamples {
            requested: samples,
            minimum: MIN_MC_SAMPLES,
        });
    }
    if rho == 0.0 || power == 0.0 {
        return Ok(exact_zero());
    }
    let mut acc = LogMeanExp::default();
    for _ in 0..samples {
        acc.push(log_integrand(rho, u0, params, n, power, rng));
    }
    Ok(finish(&acc, n))
}

const MC_BLOCK: usize = 4096;

/// Per-block accumulators for the parallel estimator; block `b` draws from
/// substream `[b]` of `seed`.
pub fn exponent_mc_blocks(
    rho: f64,
    u0: f64,
    params: &FadingParams,
    n: usize,
    power: f64,
    samples: usize,
    seed: u64,
) -> Vec<LogMeanExp> {
    let blocks = samples.div_ceil(MC_BLOCK);
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(seed, &[b as u64]);
            let len = MC_BLOCK.min(samples - b * MC_BLOCK);
            let mut acc = LogMeanExp::default();
            for _ in 0..len {
                acc.push(log_integrand(rho, u0, params, n, power, &mut rng));
            }
            acc
        })
        .collect()
}

/// Parallel form of [`exponent_exact_mc`]: sample blocks run concurrently on
/// independent substreams and are merged in block order.
pub fn exponent_exact_mc_parallel(
    rho: f64,
    u0: f64,
    params: &FadingParams,
    n: usize,
    power: f64,
    samples: usize,
    seed: u64,
) -> Result<ExponentEstimate> {
    check_exponent_args(rho, u0, n, power)?;
    if samples < MIN_MC_SAMPLES {
        return Err(Error::TooFewSamples {
            requested: samples,
            minimum: MIN_MC_SAMPLES,
        });
    }
    if rho == 0.0 || power == 0.0 {
        return Ok(exact_zero());
    }
    let mut acc = LogMeanExp::default();
    for block in exponent_mc_blocks(rho, u0, params, n, power, samples, seed) {
        acc.merge(&block);
    }
    Ok(finish(&acc, n))
}

/// Large-`u0` closed form `(1/n) Σ_{i=1..n} ρ log(1 + P u0² α^{2i} / (1 + ρ))`.
/// The `O(1/sqrt(u0))` and `O(exp(-u0²))` corrections are not included.
pub fn exponent_theorem1(
    rho: f64,
    u0: f64,
    params: &FadingParams,
    n: usize,
    power: f64,
) -> Result<ExponentEstimate> {
    check_exponent_args(rho, u0, n, power)?;
    Ok(ExponentEstimate {
        value: theorem1_value(rho, u0, params.alpha(), n, power),
        std_error: 0.0,
        method: ExponentMethod::Theorem1,
        accuracy_warning: u0 < THEOREM1_ACCURACY_U0,
    })
}

pub(crate) fn theorem1_value(rho: f64, u0: f64, alpha: f64, n: usize, power: f64) -> f64 {
    if rho == 0.0 {
        return 0.0;
    }
    let decay = alpha * alpha;
    let mut snr = power * u0 * u0 / (1.0 + rho);
    let mut total = 0.0;
    for _ in 0..n {
        snr *= decay;
        total += snr.ln_1p();
    }
    rho * total / n as f64
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// `min(1, inf_{ρ∈[0,1]} exp(-N (E(ρ) - ρR)))`.
///
/// The maximizer of `E(ρ) - ρR` is located by golden-section search; the
/// endpoints are always compared against it.
pub fn pe_upper_bound<F: Fn(f64) -> f64>(design: &LinkDesign, exponent_at: F) -> f64 {
    pe_upper_bound_with_hint(design, exponent_at, None)
}

/// [`pe_upper_bound`] with an extra candidate `ρ`, typically the closed-form
/// optimum when the closed-form exponent is in use.
pub fn pe_upper_bound_with_hint<F: Fn(f64) -> f64>(
    design: &LinkDesign,
    exponent_at: F,
    rho_hint: Option<f64>,
) -> f64 {
    let gap = |rho: f64| exponent_at(rho) - rho * design.rate;
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let (mut fc, mut fd) = (gap(c), gap(d));
    while b - a > 1e-11 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = gap(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = gap(d);
        }
    }
    let mut best = fc.max(fd).max(gap(0.0)).max(gap(1.0));
    if let Some(h) = rho_hint {
        if (0.0..=1.0).contains(&h) {
            best = best.max(gap(h));
        }
    }
    (-(design.length as f64) * best).exp().min(1.0)
}

/// Throughput `R (1 - p_e)`.
pub fn frame_throughput(design: &LinkDesign, pe: f64) -> f64 {
    design.rate * (1.0 - pe.clamp(0.0, 1.0))
}
