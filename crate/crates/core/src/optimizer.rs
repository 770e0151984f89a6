//! Joint rate / codeword-length optimization for a single user.
//!
//! Under the large-gain exponent, the error-exponent gap at rate `R`,
//! length `N` is `ρ (β - log(1 + ρ))` with
//! `β = log(P u0²) + (N + 1) log α - R`, and the bound-based throughput is
//!
//! ```text
//! T(R, N) = R [1 - exp(-N max_ρ ρ (β - log(1 + ρ)))]
//! ```
//!
//! Its stationary point satisfies
//!
//! ```text
//! R = log(P u0²) + (2N + 1) log α - log(1 + ρ)
//! N = sqrt(log(1 + ρ N R) / (ρ log(1/α)))
//! ρ = x / (1 - x) if x = N log(1/α) < 1/2, else 1
//! ```
//!
//! which [`solve_operating_point`] finds by damped alternation.

use std::f64::consts::LN_2;

use serde::Serialize;

use crate::error::{ensure, Error, Result};
use crate::exponent::{frame_throughput, pe_upper_bound_with_hint, theorem1_value, LinkDesign};
use crate::Approximation;

/// `log 2 + 1/2`: at and above this `β` the optimal Gallager parameter is 1.
pub const RHO_ONE_BETA: f64 = LN_2 + 0.5;

/// Below `P u0² = 100` the asymptotic per-user throughput is flagged.
pub const ASYMPTOTIC_ACCURACY_SNR: f64 = 100.0;

/// Inputs of the single-user problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimalityInputs {
    pub u0: f64,
    /// Correlation coefficient in `(0, 1]`; `1` is the quasi-static channel.
    pub alpha: f64,
    pub power: f64,
}

impl OptimalityInputs {
    pub fn new(u0: f64, alpha: f64, power: f64) -> Result<Self> {
        ensure(u0 > 0.0 && u0.is_finite(), "u0", u0, "finite u0 > 0")?;
        ensure(alpha > 0.0 && alpha <= 1.0, "alpha", alpha, "0 < alpha <= 1")?;
        ensure(power > 0.0 && power.is_finite(), "power", power, "finite power > 0")?;
        Ok(Self { u0, alpha, power })
    }

    /// `log(P u0²)`.
    pub fn log_snr(&self) -> f64 {
        (self.power * self.u0 * self.u0).ln()
    }

    /// `log(1/α)`.
    pub fn decorrelation(&self) -> f64 {
        -self.alpha.ln()
    }
}

/// `β = log(P u0²) + (N + 1) log α - R`, in nats.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct BetaValue(pub f64);

impl BetaValue {
    pub fn at(inputs: &OptimalityInputs, rate: f64, length: f64) -> Self {
        BetaValue(inputs.log_snr() - (length + 1.0) * inputs.decorrelation() - rate)
    }
}

/// The Gallager parameter maximizing `ρ (β - log(1 + ρ))` over `[0, 1]`.
pub fn optimal_rho(beta: f64) -> f64 {
    if beta.is_nan() || beta <= 0.0 {
        return 0.0;
    }
    if beta >= RHO_ONE_BETA {
        return 1.0;
    }
    // log(1+ρ) + ρ/(1+ρ) is strictly increasing on [0, 1].
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if mid.ln_1p() + mid / (1.0 + mid) < beta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `max_ρ ρ (β - log(1 + ρ))` together with its maximizer.
pub fn exponent_gap(beta: f64) -> (f64, f64) {
    let rho = optimal_rho(beta);
    (rho * (beta - rho.ln_1p()), rho)
}

/// Optimal `ρ` expressed through the codeword length.
pub fn rho_from_length(length: f64, alpha: f64) -> f64 {
    let x = length * -alpha.ln();
    if x < 0.5 {
        x / (1.0 - x)
    } else {
        1.0
    }
}

/// Bound-based throughput `R [1 - exp(-N g(β))]` at an arbitrary `(R, N)`.
pub fn model_throughput(inputs: &OptimalityInputs, rate: f64, length: f64) -> f64 {
    if rate <= 0.0 {
        return 0.0;
    }
    let (gap, _) = exponent_gap(BetaValue::at(inputs, rate, length).0);
    rate * -(-length * gap).exp_m1()
}

/// Iteration controls shared by the fixed-point solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Absolute tolerance on the length update.
    pub tolerance: f64,
    /// Weight of the previous iterate in each damped update.
    pub damping: f64,
    pub inner_tolerance: f64,
    /// Length reported for the quasi-static channel (`α = 1`).
    pub length_cap: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            tolerance: 1e-9,
            damping: 0.5,
            inner_tolerance: 1e-10,
            length_cap: 1e6,
        }
    }
}

/// Rate adapted to a frozen codeword length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedLengthDesign {
    pub rate: f64,
    pub rho: f64,
    pub throughput: f64,
    pub iterations: usize,
}

/// Maximizes [`model_throughput`] over the rate with `N` frozen by iterating
/// the stationarity condition `R = L - log(1 + ρ) - log(1 + ρNR)/(ρN)`,
/// `ρ = optimal_rho(L - R)`, where `L = log(P u0²) + (N + 1) log α`.
pub fn optimize_rate_fixed_length(
    inputs: &OptimalityInputs,
    length: f64,
    opts: &SolverOptions,
) -> Result<FixedLengthDesign> {
    ensure(length > 0.0 && length.is_finite(), "length", length, "finite length > 0")?;
    let level = inputs.log_snr() - (length + 1.0) * inputs.decorrelation();
    if level <= 0.0 {
        return Err(Error::NoPositiveRate);
    }
    let update = |rate: f64| {
        let rho = optimal_rho(level - rate);
        if rho == 0.0 {
            // β <= 0: the stationarity map degenerates to L - R.
            level - rate
        } else {
            level - rho.ln_1p() - (rho * length * rate).ln_1p() / (rho * length)
        }
    };
    let floor = level * 1e-12;
    let mut rate = 0.5 * level;
    let mut weight = 1.0 - opts.damping;
    let mut prev_step = 0.0;
    for it in 1..=opts.max_iterations {
        let target = update(rate).max(floor);
        let step = target - rate;
        if step.abs() <= opts.inner_tolerance * rate.max(1.0) {
            let rate = target;
            let rho = optimal_rho(level - rate);
            return Ok(FixedLengthDesign {
                rate,
                rho,
                throughput: model_throughput(inputs, rate, length),
                iterations: it,
            });
        }
        if step * prev_step < 0.0 {
            weight *= 0.5;
        }
        prev_step = step;
        rate += weight * step;
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iterations,
    })
}

/// Residuals of the three stationarity equations at a solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedPointResiduals {
    pub rate: f64,
    pub length: f64,
    pub rho: f64,
}

/// Solution of the single-user problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperatingPoint {
    pub rate: f64,
    /// Real-valued (relaxed) codeword length, at least 1.
    pub length: f64,
    pub rho: f64,
    pub throughput: f64,
    pub iterations: usize,
    /// Set when the unconstrained stationary length fell below one symbol and
    /// the design was moved to `N = 1`.
    pub at_length_floor: bool,
    pub residuals: FixedPointResiduals,
    /// Best integer-length design among the two neighbours of `length`.
    pub rounded: LinkDesign,
    /// Throughput of `rounded` under the closed-form exponent and the
    /// frame-error bound; `None` on the quasi-static channel.
    pub rounded_bound_throughput: Option<f64>,
}

fn residuals(inputs: &OptimalityInputs, rate: f64, length: f64, rho: f64) -> FixedPointResiduals {
    let l = inputs.decorrelation();
    let rate_res = rate - (inputs.log_snr() - (2.0 * length + 1.0) * l - rho.ln_1p());
    let length_res = if rho > 0.0 && l > 0.0 {
        length - ((rho * length * rate).ln_1p() / (rho * l)).sqrt()
    } else {
        0.0
    };
    FixedPointResiduals {
        rate: rate_res.abs(),
        length: length_res.abs(),
        rho: (rho - rho_from_length(length, inputs.alpha)).abs(),
    }
}

/// Solves the stationarity system with default [`SolverOptions`].
pub fn solve_operating_point(inputs: &OptimalityInputs) -> Result<OperatingPoint> {
    solve_operating_point_with(inputs, &SolverOptions::default())
}

pub fn solve_operating_point_with(
    inputs: &OptimalityInputs,
    opts: &SolverOptions,
) -> Result<OperatingPoint> {
    let log_snr = inputs.log_snr();
    if inputs.alpha == 1.0 {
        // Quasi-static channel: capacity rate, no decorrelation penalty.
        let rate = log_snr;
        if rate <= 0.0 {
            return Err(Error::NoPositiveRate);
        }
        let length = opts.length_cap;
        let rounded = LinkDesign::new(rate, length.round().max(1.0) as usize, 0.0, inputs.power, rate)?;
        return Ok(OperatingPoint {
            rate,
            length,
            rho: 0.0,
            throughput: rate,
            iterations: 0,
            at_length_floor: false,
            residuals: FixedPointResiduals {
                rate: 0.0,
                length: 0.0,
                rho: 0.0,
            },
            rounded,
            rounded_bound_throughput: None,
        });
    }
    if log_snr <= 1.0 {
        return Err(Error::OutsideRegime {
            snr: inputs.power * inputs.u0 * inputs.u0,
        });
    }
    let l = inputs.decorrelation();
    let rate_at = |n: f64| {
        let rho = rho_from_length(n, inputs.alpha);
        (rho, log_snr - (2.0 * n + 1.0) * l - rho.ln_1p())
    };

    let mut length = (log_snr.ln() / l).sqrt();
    let mut weight = 1.0 - opts.damping;
    let mut prev_step = 0.0;
    let mut converged = None;
    for it in 1..=opts.max_iterations {
        let (rho, rate) = rate_at(length);
        if rate <= 0.0 {
            // Shorter frames raise the rate; back off.
            length *= 0.5;
            if length < 1e-9 {
                return Err(Error::NoPositiveRate);
            }
            continue;
        }
        // Resolve N inside log(1 + ρNR) with ρ, R held at this iterate.
        let mut inner = length;
        for _ in 0..200 {
            let next = ((rho * inner * rate).ln_1p() / (rho * l)).sqrt();
            let done = (next - inner).abs() <= opts.inner_tolerance;
            inner = next;
            if done {
                break;
            }
        }
        let step = inner - length;
        if step.abs() <= opts.tolerance {
            converged = Some((inner, it));
            break;
        }
        if step * prev_step < 0.0 {
            weight *= 0.5;
        }
        prev_step = step;
        length += weight * step;
    }
    let (length, iterations) = converged.ok_or(Error::NonConvergence {
        iterations: opts.max_iterations,
    })?;

    let (rate, rho, throughput, length, at_floor) = if length < 1.0 {
        let d = optimize_rate_fixed_length(inputs, 1.0, opts)?;
        (d.rate, d.rho, d.throughput, 1.0, true)
    } else {
        let (rho, rate) = rate_at(length);
        if rate <= 0.0 {
            return Err(Error::NoPositiveRate);
        }
        let t = throughput_closed_form(rate, length, rho, inputs).value;
        (rate, rho, t, length, false)
    };
    let residuals = if at_floor {
        FixedPointResiduals {
            rate: 0.0,
            length: 0.0,
            rho: 0.0,
        }
    } else {
        residuals(inputs, rate, length, rho)
    };
    let rounded = round_length(inputs, length, opts)?;
    let rounded_bound_throughput = Some(bound_throughput(inputs, &rounded));
    Ok(OperatingPoint {
        rate,
        length,
        rho,
        throughput,
        iterations,
        at_length_floor: at_floor,
        residuals,
        rounded,
        rounded_bound_throughput,
    })
}

/// Integer-length design at `length`, rate adapted; `None` without a positive rate.
pub fn fixed_length_design(
    inputs: &OptimalityInputs,
    length: usize,
    opts: &SolverOptions,
) -> Result<Option<LinkDesign>> {
    match optimize_rate_fixed_length(inputs, length as f64, opts) {
        Ok(d) => Ok(Some(LinkDesign::new(
            d.rate,
            length,
            d.rho,
            inputs.power,
            d.throughput.min(d.rate),
        )?)),
        Err(Error::NoPositiveRate) => Ok(None),
        Err(e) => Err(e),
    }
}

fn round_length(inputs: &OptimalityInputs, length: f64, opts: &SolverOptions) -> Result<LinkDesign> {
    let lo = (length.floor() as usize).max(1);
    let hi = (length.ceil() as usize).max(1);
    let mut best: Option<LinkDesign> = None;
    for n in [lo, hi] {
        if let Some(d) = fixed_length_design(inputs, n, opts)? {
            if best.is_none_or(|b| d.throughput > b.throughput) {
                best = Some(d);
            }
        }
    }
    best.ok_or(Error::NoPositiveRate)
}

/// Throughput of `design` under the closed-form exponent and the
/// frame-error bound.
pub fn bound_throughput(inputs: &OptimalityInputs, design: &LinkDesign) -> f64 {
    let n = design.length;
    let exponent = |rho: f64| theorem1_value(rho, inputs.u0, inputs.alpha, n, inputs.power);
    let pe = pe_upper_bound_with_hint(design, exponent, Some(design.rho));
    frame_throughput(design, pe)
}

/// Value of the stationary-point throughput expression, clamped at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedFormThroughput {
    pub value: f64,
    pub clamped: bool,
}

/// `(log(P u0² / (1 + ρ)) + (2N + 1) log α) (1 - 1/(1 + ρ N R))`.
pub fn throughput_closed_form(
    rate: f64,
    length: f64,
    rho: f64,
    inputs: &OptimalityInputs,
) -> ClosedFormThroughput {
    let first = inputs.log_snr() - rho.ln_1p() - (2.0 * length + 1.0) * inputs.decorrelation();
    let x = rho * length * rate;
    let value = first * (x / (1.0 + x));
    if value < 0.0 || first < 0.0 {
        ClosedFormThroughput {
            value: 0.0,
            clamped: true,
        }
    } else {
        ClosedFormThroughput {
            value,
            clamped: false,
        }
    }
}

/// Which regime of the optimal `ρ` the asymptotic formula assumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RhoBranch {
    /// `N log(1/α) >= 1/2`, so `ρ = 1`.
    RhoOne,
    /// `N log(1/α) -> 0`.
    RhoSmall,
}

/// Leading-order per-user throughput for large `u0`.
pub fn asymptotic_user_throughput(
    inputs: &OptimalityInputs,
    branch: RhoBranch,
) -> Result<Approximation> {
    ensure(
        inputs.alpha < 1.0,
        "alpha",
        inputs.alpha,
        "0 < alpha < 1",
    )?;
    let snr = inputs.power * inputs.u0 * inputs.u0;
    let l = inputs.decorrelation();
    let value = match branch {
        RhoBranch::RhoOne => {
            let s = (snr / 2.0).ln();
            if s <= 1.0 {
                return Err(Error::OutsideRegime { snr });
            }
            s - 2.0 * (l * s.ln()).sqrt()
        }
        RhoBranch::RhoSmall => {
            let s = snr.ln();
            if s <= 1.0 {
                return Err(Error::OutsideRegime { snr });
            }
            s - 2.0 * (l * s.ln()).cbrt()
        }
    };
    Ok(Approximation {
        value,
        low_accuracy: snr < ASYMPTOTIC_ACCURACY_SNR,
    })
}
