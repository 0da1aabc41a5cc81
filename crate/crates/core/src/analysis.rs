//! First-order error-reduction formulas and run-level statistics.

use crate::error::{HedgeError, Result};

pub const HISTOGRAM_BINS: usize = 101;
/// Histogram range in standard deviations around the mean.
pub const HISTOGRAM_WIDTH: f64 = 5.0;

/// First-order relative RMSE reduction of Bartlett's Delta over the Delta
/// hedge under SABR: `1 - 2 sqrt((1-ρ²)/(4-3ρ²))`.
pub fn relred_sabr(rho: f64) -> f64 {
    let r2 = rho * rho;
    1.0 - 2.0 * ((1.0 - r2) / (4.0 - 3.0 * r2)).sqrt()
}

/// Rough Bergomi analogue of [`relred_sabr`]:
/// `1 - (H+3/2) sqrt((1-ρ²)/((H+3/2)² - 2(H+1)ρ²))`.
pub fn relred_rough(rho: f64, hurst: f64) -> f64 {
    let r2 = rho * rho;
    let h = hurst + 1.5;
    1.0 - h * ((1.0 - r2) / (h * h - 2.0 * (hurst + 1.0) * r2)).sqrt()
}

/// `1 - 2ρ²(H+1)/(H+3/2)²`, the first-order MSHE ratio HKLW-to-Delta
/// inverted. Equals `1 - 3ρ²/4` at `H = 1/2`.
fn delta_factor(rho: f64, hurst: f64) -> f64 {
    let h = hurst + 1.5;
    1.0 - 2.0 * rho * rho * (hurst + 1.0) / (h * h)
}

/// First-order MSHE ratio variance-optimal to Delta.
pub fn mshe_ratio_first_order(rho: f64, hurst: f64) -> f64 {
    (1.0 - rho * rho) / delta_factor(rho, hurst)
}

/// First-order relative RMSE reduction of the HKLW hedge over Delta. Negative:
/// to first order HKLW hedges worse than Delta whenever `ρ ≠ 0`.
pub fn relred_hklw(rho: f64, hurst: f64) -> f64 {
    1.0 - 1.0 / delta_factor(rho, hurst).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// `bins + 1` increasing edges.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    /// Counts `data` into `bins` equal bins on `[lo, hi]`; values outside the
    /// range go to the end bins so the counts sum to `data.len()`.
    pub fn new(data: &[f64], lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if bins == 0 || !(lo.is_finite() && hi.is_finite()) || hi < lo {
            return Err(HedgeError::domain(format!("bad histogram range [{lo}, {hi}] with {bins} bins")));
        }
        let width = (hi - lo) / bins as f64;
        let edges = (0..=bins).map(|i| lo + width * i as f64).collect();
        let mut counts = vec![0u64; bins];
        for &x in data {
            let idx = if width > 0.0 {
                ((x - lo) / width).floor().clamp(0.0, (bins - 1) as f64) as usize
            } else {
                bins / 2
            };
            counts[idx] += 1;
        }
        Ok(Self { edges, counts })
    }

    /// Default layout: 101 bins over mean ± 5 standard deviations of `reference`.
    pub fn around(data: &[f64], reference: &[f64]) -> Result<Self> {
        let (mu, sd) = mean_sd(reference)?;
        Self::new(
            data,
            mu - HISTOGRAM_WIDTH * sd,
            mu + HISTOGRAM_WIDTH * sd,
            HISTOGRAM_BINS,
        )
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

fn mean_sd(x: &[f64]) -> Result<(f64, f64)> {
    if x.is_empty() {
        return Err(HedgeError::domain("empty sample"));
    }
    let n = x.len() as f64;
    let mu = x.iter().sum::<f64>() / n;
    let var = if x.len() > 1 {
        x.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok((mu, var.sqrt()))
}

/// Jackknife standard error from the leave-one-out values of a statistic.
fn jackknife_se(loo: impl Iterator<Item = f64>, n: usize) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let vals: Vec<f64> = loo.collect();
    let m = vals.iter().sum::<f64>() / n as f64;
    let ss: f64 = vals.iter().map(|v| (v - m) * (v - m)).sum();
    ((n as f64 - 1.0) / n as f64 * ss).sqrt()
}

/// Empirical MSHE of a sample of terminal errors with its jackknife
/// standard error.
pub fn mshe(errors: &[f64]) -> Result<(f64, f64)> {
    if errors.is_empty() {
        return Err(HedgeError::domain("no hedging errors to summarise"));
    }
    let n = errors.len();
    let total: f64 = errors.iter().map(|e| e * e).sum();
    let mean = total / n as f64;
    let se = if n > 1 {
        let denom = (n - 1) as f64;
        jackknife_se(errors.iter().map(|e| (total - e * e) / denom), n)
    } else {
        0.0
    };
    Ok((mean, se))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunStats {
    pub mshe_empirical: f64,
    pub mshe_empirical_se: f64,
    pub mshe_analytic: f64,
    pub rmse: f64,
    /// `1 - rmse_b / rmse_a`
    pub relred_empirical: f64,
    pub relred_empirical_se: f64,
    pub relred_first_order: f64,
    pub histogram: Histogram,
}

/// Statistics of strategy `b` measured against the reference strategy `a`
/// (normally Delta) on the same paths. The histogram of `b` uses the range
/// of `a` so that histograms of one cell share their bins.
pub fn summarize(
    errors_a: &[f64],
    errors_b: &[f64],
    analytic_a: &[f64],
    analytic_b: &[f64],
    relred_first_order: f64,
) -> Result<RunStats> {
    let n = errors_a.len();
    if n == 0 {
        return Err(HedgeError::domain("no hedging errors to summarise"));
    }
    if errors_b.len() != n || analytic_b.len() != n || !(analytic_a.is_empty() || analytic_a.len() == n) {
        return Err(HedgeError::domain("strategy samples have different path counts"));
    }
    let (mshe_b, se_b) = mshe(errors_b)?;
    let sum_a: f64 = errors_a.iter().map(|e| e * e).sum();
    let sum_b = mshe_b * n as f64;
    let relred = 1.0 - (sum_b / sum_a).sqrt();
    let relred_se = if n > 1 {
        jackknife_se(
            errors_a
                .iter()
                .zip(errors_b)
                .map(|(a, b)| 1.0 - ((sum_b - b * b) / (sum_a - a * a)).sqrt()),
            n,
        )
    } else {
        0.0
    };
    Ok(RunStats {
        mshe_empirical: mshe_b,
        mshe_empirical_se: se_b,
        mshe_analytic: analytic_b.iter().sum::<f64>() / n as f64,
        rmse: mshe_b.sqrt(),
        relred_empirical: relred,
        relred_empirical_se: relred_se,
        relred_first_order,
        histogram: Histogram::around(errors_b, errors_a)?,
    })
}
