//! Power-law fit `q_crit ≈ A * delta^(-alpha)` of an exceptional line.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default fitting window in `delta`.
pub const DEFAULT_FIT_RANGE: (f64, f64) = (2.0, 10.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub a_coef: f64,
    pub alpha: f64,
    /// RMS residual of `ln q` about the fitted line.
    pub residual_rms: f64,
    pub delta_range: (f64, f64),
    pub n_points: usize,
}

impl FitResult {
    pub fn predict(&self, delta: f64) -> f64 {
        self.a_coef * delta.powf(-self.alpha)
    }
}

/// Least squares of `ln|q|` against `ln delta` over the points with `delta`
/// inside `range` (inclusive).
pub fn power_law_fit(points: &[(f64, f64)], range: (f64, f64)) -> Result<FitResult> {
    let (lo, hi) = range;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::Fit(format!("invalid range [{lo}, {hi}]")));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &(delta, q) in points.iter().filter(|(d, _)| *d >= lo && *d <= hi) {
        if !(q.is_finite() && q != 0.0) {
            return Err(Error::Fit(format!("q_crit at delta = {delta} is {q}")));
        }
        xs.push(delta.ln());
        ys.push(q.abs().ln());
    }
    let n = xs.len();
    if n < 3 {
        return Err(Error::Fit(format!("{n} points in [{lo}, {hi}], need at least 3")));
    }
    let mean_x = xs.iter().sum::<f64>() / n as f64;
    let mean_y = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
    if sxx <= f64::EPSILON * n as f64 {
        return Err(Error::Fit("all points share one delta".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mean_x) * (y - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(FitResult {
        a_coef: intercept.exp(),
        alpha: -slope,
        residual_rms: (ss / n as f64).sqrt(),
        delta_range: range,
        n_points: n,
    })
}

/// `count` logarithmically spaced values from `lo` to `hi`, both included.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && count >= 2) {
        return Err(Error::InvalidGrid(format!("log grid [{lo}, {hi}] with {count} points")));
    }
    let r = (hi / lo).ln() / (count - 1) as f64;
    Ok((0..count)
        .map(|i| if i + 1 == count { hi } else { lo * (r * i as f64).exp() })
        .collect())
}
