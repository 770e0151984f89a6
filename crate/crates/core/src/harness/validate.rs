//! Self-contained numerical checks of the whole stack.
//!
//! Each check compares an implementation against an independent oracle and
//! records the measured error next to its tolerance. The scaled Bessel
//! routine can be replaced to confirm that the density checks notice.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::asymptotics::{e_log_alpha_max_inv_approx, e_log_alpha_max_inv_exact};
use crate::exponent::{exponent_exact_mc_parallel, theorem1_value};
use crate::fading::{
    i0_scaled, initial_cdf, initial_density, sample_initial, sample_trace,
    transition_density_with, FadingParams,
};
use crate::optimizer::{optimal_rho, solve_operating_point, OptimalityInputs, RHO_ONE_BETA};
use crate::quadrature::{integrate, integrate_to_infinity};
use crate::rng::substream;
use crate::scheduler::strategy3_threshold;
use crate::stats::{chi_square_binned, mean_and_stderr};

/// Sample sizes of the suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationLevel {
    Quick,
    Full,
}

type BesselFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct ValidationOptions {
    pub level: ValidationLevel,
    pub seed: u64,
    /// Replacement for `exp(-z) I₀(z)`; `None` uses the library routine.
    pub bessel: Option<BesselFn>,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            level: ValidationLevel::Quick,
            seed: 20_240_601,
            bessel: None,
        }
    }
}

impl fmt::Debug for ValidationOptions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ValidationOptions")
            .field("level", &self.level)
            .field("seed", &self.seed)
            .field("bessel", &self.bessel.as_ref().map(|_| "<custom>"))
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    AtMost,
    AtLeast,
}

/// One check with its measured value and acceptance bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub measured: f64,
    pub bound: Bound,
    pub tolerance: f64,
    pub passed: bool,
    pub note: String,
}

impl Check {
    fn new(name: &'static str, measured: f64, bound: Bound, tolerance: f64, note: impl Into<String>) -> Self {
        let passed = match bound {
            Bound::AtMost => measured <= tolerance,
            Bound::AtLeast => measured >= tolerance,
        };
        Self {
            name,
            measured,
            bound,
            tolerance,
            passed,
            note: note.into(),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.bound {
            Bound::AtMost => "<=",
            Bound::AtLeast => ">=",
        };
        write!(
            f,
            "{} {:<34} measured {:<12.4e} required {op} {:.1e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.tolerance,
        )?;
        if !self.note.is_empty() {
            write!(f, "  ({})", self.note)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub level: ValidationLevel,
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        let failed = self.failures().count();
        write!(
            f,
            "{} of {} checks passed",
            self.checks.len() - failed,
            self.checks.len()
        )
    }
}

/// Trapezoid rule on `(1/2π) ∫ exp(-2z sin²(θ/2)) dθ`, which is spectrally
/// accurate for this periodic integrand.
pub fn i0_scaled_trapezoid(z: f64) -> f64 {
    let m = 64 + (40.0 * z.sqrt()) as usize;
    let h = 2.0 * PI / m as f64;
    let s: f64 = (0..m)
        .map(|j| {
            let t = (j as f64 * h * 0.5).sin();
            (-2.0 * z * t * t).exp()
        })
        .sum();
    s / m as f64
}

struct Sizes {
    gof_samples: usize,
    mc_samples: usize,
    grid_instances: usize,
    appendix_trials: usize,
}

fn sizes(level: ValidationLevel) -> Sizes {
    match level {
        ValidationLevel::Quick => Sizes {
            gof_samples: 20_000,
            mc_samples: 20_000,
            grid_instances: 5,
            appendix_trials: 100_000,
        },
        ValidationLevel::Full => Sizes {
            gof_samples: 100_000,
            mc_samples: 100_000,
            grid_instances: 50,
            appendix_trials: 1_000_000,
        },
    }
}

/// Runs every check.
pub fn validate(opts: &ValidationOptions) -> ValidationReport {
    let bessel: BesselFn = opts
        .bessel
        .clone()
        .unwrap_or_else(|| Arc::new(|z: f64| i0_scaled(z).unwrap_or(f64::NAN)));
    let sz = sizes(opts.level);
    let seed = opts.seed;
    let checks = vec![
        check_bessel_oracle(&*bessel),
        check_bessel_asymptote(&*bessel),
        check_initial_normalization(),
        check_transition_normalization(&*bessel),
        check_initial_sampler(seed, sz.gof_samples),
        check_conditional_sampler(seed, sz.gof_samples, &*bessel),
        check_theorem1(seed, sz.mc_samples),
        check_rho_residual(seed),
        check_rho_continuity(),
        check_fixed_point(seed, sz.grid_instances),
        check_recursion(),
        check_appendix_mc(seed, sz.appendix_trials),
        check_appendix_approx(),
    ];
    ValidationReport {
        level: opts.level,
        seed,
        checks,
    }
}

fn check_bessel_oracle(bessel: &dyn Fn(f64) -> f64) -> Check {
    let zs = [0.0, 0.5, 1.0, 5.0, 10.0, 29.9, 30.0, 50.0, 100.0, 1e3, 1e4, 1e6];
    let worst = zs
        .iter()
        .map(|&z| {
            let o = i0_scaled_trapezoid(z);
            (bessel(z) - o).abs() / o
        })
        .fold(0.0, f64::max);
    Check::new("bessel.trapezoid_oracle", worst, Bound::AtMost, 1e-12, "max relative error, z in [0, 1e6]")
}

fn check_bessel_asymptote(bessel: &dyn Fn(f64) -> f64) -> Check {
    let z = 1e4;
    let err = (bessel(z) * (2.0 * PI * z).sqrt() - 1.0).abs();
    Check::new("bessel.large_argument", err, Bound::AtMost, 1e-4, "|e^-z I0(z) sqrt(2 pi z) - 1| at z = 1e4")
}

fn check_initial_normalization() -> Check {
    let total = integrate_to_infinity(initial_density, 0.0, 1e-14, 1e-13, 200).value;
    Check::new("density.initial_normalization", (total - 1.0).abs(), Bound::AtMost, 1e-6, "")
}

fn conditional_mass(bessel: &dyn Fn(f64) -> f64, v: f64, params: &FadingParams, lo: f64, hi: f64) -> f64 {
    let f = |u: f64| transition_density_with(u, v, params, bessel);
    if hi.is_infinite() {
        integrate_to_infinity(f, lo, 1e-14, 1e-12, 400).value
    } else {
        integrate(f, lo, hi, 1e-14, 1e-12, 400).value
    }
}

fn check_transition_normalization(bessel: &dyn Fn(f64) -> f64) -> Check {
    let mut worst = 0.0f64;
    for alpha in [0.1, 0.5, 0.9] {
        let params = FadingParams::new(alpha).expect("alpha in range");
        for v in [0.5, 1.0, 3.0] {
            let cut = v + 10.0 * (params.innovation_power() / 2.0).sqrt();
            let total = conditional_mass(bessel, v, &params, 0.0, cut)
                + conditional_mass(bessel, v, &params, cut, f64::INFINITY);
            worst = worst.max((total - 1.0).abs());
        }
    }
    Check::new("density.transition_normalization", worst, Bound::AtMost, 1e-6, "alpha x v = {0.1,0.5,0.9} x {0.5,1,3}")
}

fn check_initial_sampler(seed: u64, n: usize) -> Check {
    let mut rng = substream(seed, &[1]);
    let samples: Vec<f64> = (0..n).map(|_| sample_initial(&mut rng)).collect();
    let edges: Vec<f64> = (0..40).map(|i| i as f64 * 0.08).collect();
    let t = chi_square_binned(&samples, &edges, |a, b| initial_cdf(b) - initial_cdf(a));
    Check::new("sampler.initial_gof", t.p_value, Bound::AtLeast, 0.01, format!("chi-square p-value, {n} draws"))
}

fn check_conditional_sampler(seed: u64, n: usize, bessel: &dyn Fn(f64) -> f64) -> Check {
    let params = FadingParams::new(0.8).expect("alpha in range");
    let v = 1.5;
    let mut rng = substream(seed, &[2]);
    let samples: Vec<f64> = (0..n)
        .map(|_| {
            sample_trace(v, Some(0.0), 1, &params, &mut rng)
                .expect("length is positive")
                .gains[0]
        })
        .collect();
    let spread = params.innovation_power().sqrt();
    let lo = (params.alpha() * v - 4.0 * spread).max(0.0);
    let edges: Vec<f64> = (0..=40).map(|i| lo + i as f64 * 8.0 * spread / 40.0).collect();
    let t = chi_square_binned(&samples, &edges, |a, b| {
        conditional_mass(bessel, v, &params, a.max(0.0), b)
    });
    Check::new(
        "sampler.conditional_gof",
        t.p_value,
        Bound::AtLeast,
        0.01,
        format!("chi-square p-value, u1 | u0 = 1.5, alpha = 0.8, {n} draws"),
    )
}

fn check_theorem1(seed: u64, samples: usize) -> Check {
    // Configurations where the gain is still large at the end of the frame.
    let mut worst = 0.0f64;
    let mut count = 0;
    for alpha in [0.9f64, 0.99] {
        for n in [10usize, 50] {
            let u0 = 20.0f64;
            if u0 * u0 * alpha.powi(2 * n as i32) < 1.0 {
                continue;
            }
            let params = FadingParams::new(alpha).expect("alpha in range");
            for rho in [0.5, 1.0] {
                let mc = exponent_exact_mc_parallel(rho, u0, &params, n, 1.0, samples, seed ^ (n as u64))
                    .expect("valid arguments");
                let t1 = theorem1_value(rho, u0, alpha, n, 1.0);
                let allowed = (3.0 * mc.std_error).max(0.05 * t1.abs());
                worst = worst.max((mc.value - t1).abs() / allowed);
                count += 1;
            }
        }
    }
    Check::new(
        "exponent.closed_form_vs_mc",
        worst,
        Bound::AtMost,
        1.0,
        format!("error / max(3 se, 5%), u0 = 20, {count} configs with u0^2 alpha^2N >= 1"),
    )
}

fn check_rho_residual(seed: u64) -> Check {
    let mut rng = substream(seed, &[3]);
    let worst = (0..1000)
        .map(|_| {
            let beta = rng.random::<f64>() * RHO_ONE_BETA;
            let r = optimal_rho(beta);
            if beta <= 0.0 {
                0.0
            } else {
                (r.ln_1p() + r / (1.0 + r) - beta).abs()
            }
        })
        .fold(0.0, f64::max);
    Check::new("optimizer.rho_residual", worst, Bound::AtMost, 1e-10, "1000 random beta")
}

fn check_rho_continuity() -> Check {
    let eps = 1e-12;
    let low = optimal_rho(eps);
    let high = (1.0 - optimal_rho(RHO_ONE_BETA - eps)).abs();
    Check::new("optimizer.rho_branch_continuity", low.max(high), Bound::AtMost, 1e-9, "")
}

/// Largest bound-based throughput over `N ∈ 1..=200` and 2000 rates.
pub fn grid_oracle(inputs: &OptimalityInputs) -> f64 {
    let top = inputs.log_snr();
    let la = inputs.alpha.ln();
    let mut best = 0.0f64;
    for n in 1..=200 {
        let level = top + (n as f64 + 1.0) * la;
        if level <= 0.0 {
            break;
        }
        for j in 1..=2000 {
            let r = top * j as f64 / 2000.0;
            let beta = level - r;
            let rho = optimal_rho(beta);
            let t = r * -(-(n as f64) * rho * (beta - rho.ln_1p())).exp_m1();
            best = best.max(t);
        }
    }
    best
}

fn check_fixed_point(seed: u64, instances: usize) -> Check {
    let mut rng = substream(seed, &[4]);
    let mut worst = f64::INFINITY;
    for _ in 0..instances {
        let u0sq = 10f64.powf(2.0 + 4.0 * rng.random::<f64>());
        let alpha = 0.5 + 0.495 * rng.random::<f64>();
        let inputs = OptimalityInputs::new(u0sq.sqrt(), alpha, 1.0).expect("valid inputs");
        let solved = solve_operating_point(&inputs).map(|o| o.throughput).unwrap_or(0.0);
        let grid = grid_oracle(&inputs);
        if grid > 0.0 {
            worst = worst.min(solved / grid);
        }
    }
    Check::new("optimizer.fixed_point_vs_grid", worst, Bound::AtLeast, 0.99, format!("min ratio, {instances} instances"))
}

fn check_recursion() -> Check {
    let mut worst = 0.0f64;
    for theta in [0.5f64, 2.0, 4.0] {
        let q = -(-theta).exp_m1();
        let mut prev = e_log_alpha_max_inv_exact(1, theta);
        worst = worst.max((prev - (-theta).exp()).abs());
        for k in 2..=100u64 {
            let cur = e_log_alpha_max_inv_exact(k, theta);
            let rec = q * prev + (1.0 - q.powi(k as i32)) / k as f64;
            worst = worst.max((cur - rec).abs());
            prev = cur;
        }
    }
    Check::new("asymptotics.recursion", worst, Bound::AtMost, 1e-12, "K <= 100")
}

fn check_appendix_mc(seed: u64, trials: usize) -> Check {
    use rand_distr::{Binomial, Distribution};
    let cases = [(50u64, 2.0), (200, 3.0), (1000, strategy3_threshold(1000))];
    let mut worst = 0.0f64;
    for (k, theta) in cases {
        let bin = Binomial::new(k, (-theta).exp()).expect("valid binomial");
        let mut rng = substream(seed, &[5, k]);
        let draws: Vec<f64> = (0..trials)
            .map(|_| {
                let n = bin.sample(&mut rng);
                if n == 0 {
                    0.0
                } else {
                    let u = 1.0 - rng.random::<f64>();
                    -u.ln() / n as f64
                }
            })
            .collect();
        let (mean, se) = mean_and_stderr(&draws);
        let exact = e_log_alpha_max_inv_exact(k, theta);
        worst = worst.max((mean - exact).abs() / se);
    }
    Check::new("asymptotics.expectation_vs_mc", worst, Bound::AtMost, 3.0, format!("|error| / se, {trials} trials per case"))
}

fn check_appendix_approx() -> Check {
    let rel = |k: u64| {
        let theta = strategy3_threshold(k);
        let exact = e_log_alpha_max_inv_exact(k, theta);
        (e_log_alpha_max_inv_approx(k, theta).value - exact).abs() / exact
    };
    let (r4, r6) = (rel(10_000), rel(1_000_000));
    let measured = if r6 < r4 { r4 } else { f64::INFINITY };
    Check::new("asymptotics.approximation", measured, Bound::AtMost, 0.10, format!("relative error at K = 1e4 (1e6: {r6:.3e})"))
}
