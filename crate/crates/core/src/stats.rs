//! Small statistics helpers: compensated summation, sample moments and a
//! binned chi-square goodness-of-fit test.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Mean and standard error of the mean (zero for fewer than two samples).
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, 0.0);
    }
    let mean = compensated_sum(values.iter().copied()) / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let ss = compensated_sum(values.iter().map(|v| (v - mean) * (v - mean)));
    let var = ss / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Outcome of a chi-square goodness-of-fit test.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
}

/// Bins `samples` by `edges` (the last bin is open to +∞, values below the
/// first edge land in the first bin) and compares with `bin_probability`.
/// Adjacent bins are merged until every expected count is at least 5.
pub fn chi_square_binned<F>(samples: &[f64], edges: &[f64], bin_probability: F) -> ChiSquareTest
where
    F: Fn(f64, f64) -> f64,
{
    assert!(edges.len() >= 2, "need at least one finite bin");
    let n = samples.len() as f64;
    let nbins = edges.len();
    let mut observed = vec![0usize; nbins];
    for &s in samples {
        let idx = edges.iter().rposition(|&e| s >= e).unwrap_or_default();
        observed[idx] += 1;
    }
    let mut expected: Vec<f64> = (0..nbins)
        .map(|i| {
            let lo = edges[i];
            let hi = if i + 1 < nbins { edges[i + 1] } else { f64::INFINITY };
            n * bin_probability(lo, hi)
        })
        .collect();
    // Mass below the first edge belongs to the first bin.
    expected[0] += n * bin_probability(f64::NEG_INFINITY, edges[0]);

    let mut merged: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for (o, e) in observed.iter().zip(&expected) {
        acc.0 += *o as f64;
        acc.1 += e;
        if acc.1 >= 5.0 {
            merged.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.1 > 0.0 || acc.0 > 0.0 {
        match merged.last_mut() {
            Some(last) => {
                last.0 += acc.0;
                last.1 += acc.1;
            }
            None => merged.push(acc),
        }
    }
    let statistic: f64 = merged.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = merged.len().saturating_sub(1).max(1);
    let p_value = ChiSquared::new(dof as f64)
        .map(|d| 1.0 - d.cdf(statistic))
        .unwrap_or(f64::NAN);
    ChiSquareTest {
        statistic,
        degrees_of_freedom: dof,
        p_value,
    }
}
