//! Summary statistics and the two-sided paired t-test.

use alloc::vec::Vec;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); 0 for a single value.
    pub sd: f64,
    pub median: f64,
    pub p95: f64,
    pub min: f64,
    pub max: f64,
}

/// Linear-interpolation percentile of sorted data, `q` in `[0, 100]`.
pub fn percentile_sorted(sorted: &[f64], q: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::EmptySelection);
    }
    if !(0.0..=100.0).contains(&q) {
        return Err(Error::InvalidParams("percentile must lie in [0, 100]"));
    }
    let pos = q / 100.0 * (sorted.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let t = pos - lo as f64;
    Ok(sorted[lo] + t * (sorted[hi] - sorted[lo]))
}

pub fn summarize(values: &[f64]) -> Result<Summary> {
    if values.is_empty() {
        return Err(Error::EmptySelection);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParams("values must be finite"));
    }
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = if n > 1 {
        libm::sqrt(values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64)
    } else {
        0.0
    };
    Ok(Summary {
        n,
        mean,
        sd,
        median: percentile_sorted(&sorted, 50.0)?,
        p95: percentile_sorted(&sorted, 95.0)?,
        min: sorted[0],
        max: sorted[n - 1],
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedTestResult {
    pub t: f64,
    pub df: usize,
    pub p_two_sided: f64,
    pub mean_diff: f64,
    pub sd_diff: f64,
    /// Set when every difference is the same non-zero value: `t` is then
    /// infinite and `p_two_sided` is 0.
    pub degenerate: bool,
}

/// Paired t-test on `a - b`. All-zero differences are [`Error::Undefined`].
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<PairedTestResult> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { a: a.len(), b: b.len() });
    }
    if a.len() < 2 {
        return Err(Error::TooFewSamples);
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(Error::InvalidParams("samples must be finite"));
    }
    let n = diffs.len();
    let df = n - 1;
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / df as f64;
    let spread = diffs.iter().fold(0.0f64, |m, d| m.max((d - diffs[0]).abs()));
    if spread == 0.0 {
        if diffs[0] == 0.0 {
            return Err(Error::Undefined);
        }
        let t = f64::INFINITY.copysign(diffs[0]);
        return Ok(PairedTestResult { t, df, p_two_sided: 0.0, mean_diff: diffs[0], sd_diff: 0.0, degenerate: true });
    }
    let sd = libm::sqrt(var);
    let t = mean / (sd / libm::sqrt(n as f64));
    let p_two_sided = student_t_two_sided(t, df as f64)?;
    Ok(PairedTestResult { t, df, p_two_sided, mean_diff: mean, sd_diff: sd, degenerate: false })
}

/// `P(|T| >= |t|)` for Student's t with `df` degrees of freedom.
pub fn student_t_two_sided(t: f64, df: f64) -> Result<f64> {
    if !(df > 0.0) || t.is_nan() {
        return Err(Error::Undefined);
    }
    if t.is_infinite() {
        return Ok(0.0);
    }
    let x = df / (df + t * t);
    Ok(regularized_incomplete_beta(x, df / 2.0, 0.5)?.clamp(0.0, 1.0))
}

/// `I_x(a, b)` by Lentz's continued fraction.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) || !(0.0..=1.0).contains(&x) {
        return Err(Error::Undefined);
    }
    if x == 0.0 || x == 1.0 {
        return Ok(x);
    }
    let ln_front = libm::lgamma(a + b) - libm::lgamma(a) - libm::lgamma(b) + a * libm::log(x) + b * libm::log(1.0 - x);
    let front = libm::exp(ln_front);
    if x < (a + 1.0) / (a + b + 2.0) {
        Ok(front * beta_cf(x, a, b)? / a)
    } else {
        Ok(1.0 - front * beta_cf(1.0 - x, b, a)? / b)
    }
}

fn beta_cf(x: f64, a: f64, b: f64) -> Result<f64> {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-15;
    let mut c = 1.0;
    let mut d = 1.0 - (a + b) * x / (a + 1.0);
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=500 {
        let m = m as f64;
        let m2 = 2.0 * m;
        for num in
            [m * (b - m) * x / ((a + m2 - 1.0) * (a + m2)), -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0))]
        {
            d = 1.0 + num * d;
            if d.abs() < TINY {
                d = TINY;
            }
            c = 1.0 + num / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            h *= d * c;
            if (d * c - 1.0).abs() < EPS {
                return Ok(h);
            }
        }
    }
    Err(Error::NoConvergence { iterations: 500 })
}
