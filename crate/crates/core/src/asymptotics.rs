//! Large-`K` throughput laws and the statistics they depend on.
//!
//! With `X = log(1/α)`:
//!
//! * strategy I:   `log(P log K / 2) - 2 sqrt(E[X] log log log K)`
//! * strategy II:  `log(P log K / 2) - 2 E[sqrt X] sqrt(log log(P log K / 2))`
//! * strategy III and the quasi-static ceiling: `log(P log K)`
//!
//! Lower-order corrections are not included.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::fading::AlphaDistribution;
use crate::quadrature::integrate_to_infinity;
use crate::scheduler::Strategy;

/// Smallest population for which the laws are defined.
pub const MIN_LAW_USERS: u64 = 16;

/// `Γ(3/2) = sqrt(π)/2`.
pub const GAMMA_3_2: f64 = 0.886_226_925_452_758;
/// `Γ(4/3)`.
pub const GAMMA_4_3: f64 = 0.892_979_511_569_249_2;

/// Strategy I law.
pub fn theorem2_value(k: f64, p: f64, e_log_alpha_inv: f64) -> f64 {
    let lk = k.ln();
    (p * lk / 2.0).ln() - 2.0 * (e_log_alpha_inv * lk.ln().ln()).sqrt()
}

/// Strategy II law.
pub fn theorem3_value(k: f64, p: f64, e_sqrt_log_alpha_inv: f64) -> f64 {
    let s = (p * k.ln() / 2.0).ln();
    // log log(P log K / 2) is negative below K ≈ e^(2e); the correction is
    // taken as zero there.
    s - 2.0 * e_sqrt_log_alpha_inv * s.ln().max(0.0).sqrt()
}

/// Strategy III law, equal to the quasi-static ceiling.
pub fn theorem4_value(k: f64, p: f64) -> f64 {
    (p * k.ln()).ln()
}

/// Which law to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LawKind {
    StrategyI,
    StrategyII,
    StrategyIII,
    Max,
}

/// A throughput law for one strategy, with the moment of `log(1/α)` it needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingLaw {
    pub kind: LawKind,
}

impl ScalingLaw {
    pub fn for_strategy(strategy: Strategy) -> Self {
        let kind = match strategy {
            Strategy::I => LawKind::StrategyI,
            Strategy::II => LawKind::StrategyII,
            Strategy::III => LawKind::StrategyIII,
            Strategy::Optimal => LawKind::Max,
        };
        Self { kind }
    }

    /// The moment of `log(1/α)` entering the law, if any.
    pub fn moment(&self) -> Option<Moment> {
        match self.kind {
            LawKind::StrategyI => Some(Moment::LogInv),
            LawKind::StrategyII => Some(Moment::SqrtLogInv),
            LawKind::StrategyIII | LawKind::Max => None,
        }
    }

    /// Law value; `alpha_moment` is ignored by laws that do not use it.
    /// `NaN` below [`MIN_LAW_USERS`].
    pub fn value_at(&self, k: u64, p: f64, alpha_moment: f64) -> f64 {
        if k < MIN_LAW_USERS {
            return f64::NAN;
        }
        let k = k as f64;
        match self.kind {
            LawKind::StrategyI => theorem2_value(k, p, alpha_moment),
            LawKind::StrategyII => theorem3_value(k, p, alpha_moment),
            LawKind::StrategyIII | LawKind::Max => theorem4_value(k, p),
        }
    }
}

/// `E[log(1/α_max)]` over users with `u0² >= θ` when `K` users are drawn,
/// α uniform, counting an empty qualifying set as zero:
///
/// ```text
/// λ(K) = Σ_{n=1..K} (1/n) q^(K-n) (1 - q^n),   q = 1 - e^(-θ)
/// ```
///
/// Terms are summed from `n = K` downwards and the remainder is dropped once
/// it is provably below `1e-17` of the running sum, so the cost is about
/// `40 e^θ` terms rather than `K`.
pub fn e_log_alpha_max_inv_exact(k: u64, theta: f64) -> f64 {
    assert!(k >= 1, "k must be positive");
    let p = (-theta).exp();
    let log_q = (-p).ln_1p();
    let mut sum = 0.0;
    let mut comp = 0.0;
    for m in 0..k {
        let n = k - m;
        let qm = (m as f64 * log_q).exp();
        let term = qm * -((n as f64) * log_q).exp_m1() / n as f64;
        // Neumaier summation.
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
        if qm / p < 1e-17 * sum {
            break;
        }
    }
    sum + comp
}

/// Leading-order approximation `1/(K e^-θ) + e^(-K e^-θ) (θ - log K)`.
/// Flagged as inaccurate when `K e^-θ < 1`.
pub fn e_log_alpha_max_inv_approx(k: u64, theta: f64) -> crate::Approximation {
    let m = k as f64 * (-theta).exp();
    crate::Approximation {
        value: 1.0 / m + (-m).exp() * (theta - (k as f64).ln()),
        low_accuracy: m < 1.0,
    }
}

/// Moments of `X = log(1/α)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Moment {
    LogInv,
    SqrtLogInv,
    CbrtLogInv,
}

impl Moment {
    fn power(self) -> f64 {
        match self {
            Moment::LogInv => 1.0,
            Moment::SqrtLogInv => 0.5,
            Moment::CbrtLogInv => 1.0 / 3.0,
        }
    }
}

/// `E[X^p]`: closed form for uniform α, quadrature otherwise.
pub fn alpha_moment(distribution: &AlphaDistribution, which: Moment) -> Result<f64> {
    match distribution {
        AlphaDistribution::Uniform => Ok(match which {
            Moment::LogInv => 1.0,
            Moment::SqrtLogInv => GAMMA_3_2,
            Moment::CbrtLogInv => GAMMA_4_3,
        }),
        AlphaDistribution::Custom { .. } => alpha_moment_quadrature(distribution, which),
    }
}

/// `E[X^p] = ∫_0^∞ F(exp(-t^(1/p))) dt` by adaptive quadrature, for any law.
pub fn alpha_moment_quadrature(distribution: &AlphaDistribution, which: Moment) -> Result<f64> {
    distribution.check_support()?;
    let inv = 1.0 / which.power();
    let integral = integrate_to_infinity(
        |t| distribution.cdf((-t.powf(inv)).exp()),
        0.0,
        1e-14,
        1e-12,
        4000,
    );
    ensure(
        integral.value.is_finite() && integral.value > 0.0,
        "alpha_moment",
        integral.value,
        "finite positive moment",
    )?;
    Ok(integral.value)
}

/// Coefficient of `sqrt(log log log K)` separating the strategy I and II
/// laws: `2 (sqrt(E[X]) - E[sqrt X])`.
pub fn remark2_constant(distribution: &AlphaDistribution) -> Result<f64> {
    let m1 = alpha_moment_quadrature(distribution, Moment::LogInv)?;
    let mh = alpha_moment_quadrature(distribution, Moment::SqrtLogInv)?;
    Ok(2.0 * (m1.sqrt() - mh))
}
