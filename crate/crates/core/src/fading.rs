//! Time-correlated Rayleigh fading.
//!
//! The per-symbol channel of a user is a first-order complex Gauss–Markov
//! chain `h_i = α h_{i-1} + sqrt(1 - α²) w_i` with `w_i ~ CN(0, 1)`. Its
//! magnitude `u_i = |h_i|` is a Markov chain whose stationary law is the
//! unit-power Rayleigh density `2u exp(-u²)` and whose one-step kernel is the
//! Rician density returned by [`transition_density`].

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{ensure, Error, Result};

/// Parameters of one user's fading chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingParams {
    alpha: f64,
}

impl FadingParams {
    /// `alpha` is the per-symbol correlation coefficient, strictly inside (0, 1).
    pub fn new(alpha: f64) -> Result<Self> {
        ensure(alpha > 0.0 && alpha < 1.0, "alpha", alpha, "0 < alpha < 1")?;
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `1 - α²`, the innovation power of the complex chain.
    pub fn innovation_power(&self) -> f64 {
        (1.0 - self.alpha) * (1.0 + self.alpha)
    }
}

/// A sampled frame: the initial magnitude and the `n` per-symbol magnitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTrace {
    pub u0: f64,
    pub gains: Vec<f64>,
}

impl ChannelTrace {
    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }
}

/// Stationary Rayleigh density `2u exp(-u²)`, zero for negative `u`.
pub fn initial_density(u: f64) -> f64 {
    if u < 0.0 {
        0.0
    } else {
        2.0 * u * (-u * u).exp()
    }
}

/// Rayleigh CDF matching [`initial_density`].
pub fn initial_cdf(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else {
        -(-u * u).exp_m1()
    }
}

/// One-step kernel `q(u | v)` of the magnitude chain.
pub fn transition_density(u: f64, v: f64, params: &FadingParams) -> f64 {
    transition_density_with(u, v, params, i0_scaled_raw)
}

/// [`transition_density`] with a caller-supplied scaled Bessel routine; used
/// by the validation suite to inject faults.
pub fn transition_density_with<B>(u: f64, v: f64, params: &FadingParams, scaled_i0: B) -> f64
where
    B: Fn(f64) -> f64,
{
    if u < 0.0 || v < 0.0 {
        return 0.0;
    }
    let a = params.alpha;
    let s = params.innovation_power();
    let d = u - a * v;
    (2.0 * u / s) * (-d * d / s).exp() * scaled_i0(2.0 * a * u * v / s)
}

// Asymptotic expansion is used from here on; below it the power series.
const SERIES_LIMIT: f64 = 30.0;

/// Exponentially scaled modified Bessel function `exp(-z) I₀(z)`.
pub fn i0_scaled(z: f64) -> Result<f64> {
    ensure(z >= 0.0 && !z.is_nan(), "z", z, "z >= 0")?;
    Ok(i0_scaled_raw(z))
}

pub(crate) fn i0_scaled_raw(z: f64) -> f64 {
    if z.is_infinite() {
        return 0.0;
    }
    if z < SERIES_LIMIT {
        // sum (z²/4)^k / (k!)², all terms positive.
        let q = 0.25 * z * z;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        loop {
            term *= q / (k * k);
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
            k += 1.0;
        }
        sum * (-z).exp()
    } else {
        // 1/sqrt(2πz) · sum ((2k-1)!!)² / (k! (8z)^k)
        let inv8z = 1.0 / (8.0 * z);
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        loop {
            let m = 2.0 * k - 1.0;
            let next = term * m * m * inv8z / k;
            if next >= term {
                break;
            }
            term = next;
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
            k += 1.0;
        }
        sum / (2.0 * PI * z).sqrt()
    }
}

/// Draws a Rayleigh magnitude by inverting the CDF: `u = sqrt(-ln(1 - x))`.
pub fn sample_initial<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let x: f64 = rng.random();
    (-(-x).ln_1p()).sqrt()
}

fn standard_complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Draws a stationary complex gain `h ~ CN(0, 1)`.
pub fn sample_stationary_gain<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    standard_complex_gaussian(rng)
}

/// The complex AR(1) recursion behind the magnitude chain.
#[derive(Debug, Clone)]
pub struct GaussMarkovChain {
    state: Complex64,
    alpha: f64,
    innovation_scale: f64,
}

impl GaussMarkovChain {
    pub fn new(h0: Complex64, params: &FadingParams) -> Self {
        Self {
            state: h0,
            alpha: params.alpha,
            innovation_scale: params.innovation_power().sqrt(),
        }
    }

    pub fn state(&self) -> Complex64 {
        self.state
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Complex64 {
        let w = standard_complex_gaussian(rng);
        self.state = self.state * self.alpha + w * self.innovation_scale;
        self.state
    }
}

/// Samples `u_1..u_n` given the initial magnitude `u0`.
///
/// `phase0` fixes the phase of `h_0`; when `None` it is drawn uniformly on
/// `[0, 2π)` from `rng`. Magnitude statistics do not depend on it.
pub fn sample_trace<R: Rng + ?Sized>(
    u0: f64,
    phase0: Option<f64>,
    n: usize,
    params: &FadingParams,
    rng: &mut R,
) -> Result<ChannelTrace> {
    ensure(u0 >= 0.0 && u0.is_finite(), "u0", u0, "finite u0 >= 0")?;
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: 0.0,
            expected: "n >= 1",
        });
    }
    let phase = match phase0 {
        Some(p) => p,
        None => rng.random::<f64>() * 2.0 * PI,
    };
    let mut chain = GaussMarkovChain::new(Complex64::from_polar(u0, phase), params);
    let gains = (0..n).map(|_| chain.step(rng).norm()).collect();
    Ok(ChannelTrace { u0, gains })
}

type CdfFn = dyn Fn(f64) -> f64 + Send + Sync;

/// Law of the per-user correlation coefficient α.
#[derive(Clone)]
pub enum AlphaDistribution {
    /// α uniform on (0, 1), so `log(1/α)` is unit exponential.
    Uniform,
    /// Any continuous law on (0, 1) given by its CDF.
    Custom { name: String, cdf: Arc<CdfFn> },
}

impl fmt::Debug for AlphaDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlphaDistribution::Uniform => write!(f, "Uniform"),
            AlphaDistribution::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

impl AlphaDistribution {
    pub fn custom<F>(name: impl Into<String>, cdf: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let d = AlphaDistribution::Custom {
            name: name.into(),
            cdf: Arc::new(cdf),
        };
        d.check_support()?;
        Ok(d)
    }

    pub fn name(&self) -> &str {
        match self {
            AlphaDistribution::Uniform => "uniform",
            AlphaDistribution::Custom { name, .. } => name,
        }
    }

    pub fn cdf(&self, a: f64) -> f64 {
        match self {
            AlphaDistribution::Uniform => a.clamp(0.0, 1.0),
            AlphaDistribution::Custom { cdf, .. } => {
                if a <= 0.0 {
                    0.0
                } else if a >= 1.0 {
                    1.0
                } else {
                    cdf(a).clamp(0.0, 1.0)
                }
            }
        }
    }

    /// Rejects laws with an atom at 0 or at 1.
    pub fn check_support(&self) -> Result<()> {
        const EDGE: f64 = 1e-15;
        const MASS: f64 = 1e-6;
        let lo = self.cdf(EDGE);
        let hi = self.cdf(1.0 - EDGE);
        if lo > MASS {
            return Err(Error::InvalidDistribution(format!(
                "{}: mass {lo:e} at alpha = 0",
                self.name()
            )));
        }
        if 1.0 - hi > MASS {
            return Err(Error::InvalidDistribution(format!(
                "{}: mass {:e} at alpha = 1",
                self.name(),
                1.0 - hi
            )));
        }
        Ok(())
    }

    /// Draws α in (0, 1). Custom laws are inverted by bisection.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut x: f64 = rng.random();
        while x == 0.0 {
            x = rng.random();
        }
        match self {
            AlphaDistribution::Uniform => x,
            AlphaDistribution::Custom { .. } => {
                let (mut lo, mut hi) = (0.0f64, 1.0f64);
                for _ in 0..64 {
                    let mid = 0.5 * (lo + hi);
                    if self.cdf(mid) < x {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                (0.5 * (lo + hi)).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON)
            }
        }
    }
}
