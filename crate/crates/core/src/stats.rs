//! Ergodic time statistics of projected trajectories and log-scale ensemble
//! aggregation.

use serde::{Deserialize, Serialize};

use crate::error::{EwsError, Result};

/// A recorded projection `⟨u(t), v⟩`, one value every `dt_effective`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionSeries {
    pub values: Vec<f64>,
    pub dt_effective: f64,
    pub burn_in_count: usize,
}

impl ProjectionSeries {
    pub fn new(values: Vec<f64>, dt_effective: f64, burn_in_count: usize) -> Result<Self> {
        if !(dt_effective > 0.0 && dt_effective.is_finite()) {
            return Err(EwsError::param(
                "dt_effective",
                format!("must be > 0, got {dt_effective}"),
            ));
        }
        if burn_in_count >= values.len() {
            return Err(EwsError::SeriesTooShort(format!(
                "burn-in of {burn_in_count} leaves nothing of {} values",
                values.len()
            )));
        }
        Ok(ProjectionSeries {
            values,
            dt_effective,
            burn_in_count,
        })
    }

    /// Values after burn-in.
    pub fn usable(&self) -> &[f64] {
        &self.values[self.burn_in_count..]
    }
}

fn usable_checked(series: &ProjectionSeries, min: usize) -> Result<&[f64]> {
    let u = series.values.get(series.burn_in_count..).unwrap_or(&[]);
    if u.len() < min {
        return Err(EwsError::SeriesTooShort(format!(
            "{} usable values, need at least {min}",
            u.len()
        )));
    }
    Ok(u)
}

/// Streaming mean and variance (Welford).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningMoments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningMoments {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample variance (denominator `n - 1`).
    pub fn variance(&self) -> Result<f64> {
        if self.count < 2 {
            return Err(EwsError::SeriesTooShort(format!(
                "{} values, need at least 2",
                self.count
            )));
        }
        Ok(self.m2 / (self.count - 1) as f64)
    }

    /// Combines two accumulators (Chan et al.).
    pub fn merge(&mut self, other: &RunningMoments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n;
        self.mean += delta * other.count as f64 / n;
        self.count += other.count;
    }
}

/// Sample variance of the post-burn-in values.
pub fn time_variance(series: &ProjectionSeries) -> Result<f64> {
    let u = usable_checked(series, 2)?;
    let mut acc = RunningMoments::new();
    u.iter().for_each(|&x| acc.push(x));
    acc.variance()
}

/// Sample covariance of two aligned series after burn-in.
pub fn time_covariance(a: &ProjectionSeries, b: &ProjectionSeries) -> Result<f64> {
    if a.values.len() != b.values.len() || a.burn_in_count != b.burn_in_count {
        return Err(EwsError::param(
            "series",
            format!(
                "lengths {}/{} and burn-in {}/{} differ",
                a.values.len(),
                b.values.len(),
                a.burn_in_count,
                b.burn_in_count
            ),
        ));
    }
    let x = usable_checked(a, 2)?;
    let y = usable_checked(b, 2)?;
    Ok(covariance(x, y))
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn covariance(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / (x.len() - 1) as f64
}

/// Pearson correlation between the series and itself shifted by `tau`.
pub fn lag_autocorrelation(series: &ProjectionSeries, tau: f64) -> Result<f64> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(EwsError::param("tau", format!("must be >= 0, got {tau}")));
    }
    let steps = tau / series.dt_effective;
    let lag = steps.round();
    if (steps - lag).abs() > 1e-9 * steps.max(1.0) {
        return Err(EwsError::param(
            "tau",
            format!(
                "{tau} is not a multiple of the recording stride {}",
                series.dt_effective
            ),
        ));
    }
    let lag = lag as usize;
    let u = usable_checked(series, 2)?;
    if lag + 2 > u.len() {
        return Err(EwsError::SeriesTooShort(format!(
            "lag of {lag} samples exceeds usable length {}",
            u.len()
        )));
    }
    let (x, y) = (&u[..u.len() - lag], &u[lag..]);
    let sxy = covariance(x, y);
    let sxx = covariance(x, x);
    let syy = covariance(y, y);
    if !(sxx > 0.0 && syy > 0.0) {
        return Err(EwsError::NonPositiveVariance {
            index: 0,
            value: sxx.min(syy),
        });
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Least-squares rate `r` of `acf(τ) ≈ e^{-r τ}` through the origin in log space.
pub fn fit_decay_rate(taus: &[f64], acf: &[f64]) -> Result<f64> {
    if taus.len() != acf.len() || taus.is_empty() {
        return Err(EwsError::param("acf", "need equally many positive lags and values"));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, (&t, &r)) in taus.iter().zip(acf).enumerate() {
        if !(r > 0.0) {
            return Err(EwsError::NonPositiveVariance { index: i, value: r });
        }
        num += t * r.ln();
        den += t * t;
    }
    if den == 0.0 {
        return Err(EwsError::param("taus", "all lags are zero"));
    }
    Ok(-num / den)
}

/// Ensemble summary in log10 space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceEstimate {
    pub variances: Vec<f64>,
    pub mean_log10: f64,
    pub std_log10: f64,
    pub n_samples: usize,
}

/// Mean and sample standard deviation of `log10(variance)`.
pub fn aggregate_ensemble(variances: &[f64]) -> Result<VarianceEstimate> {
    if variances.is_empty() {
        return Err(EwsError::param("variances", "empty ensemble"));
    }
    if let Some((index, &value)) = variances
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v > 0.0) || !v.is_finite())
    {
        return Err(EwsError::NonPositiveVariance { index, value });
    }
    let logs: Vec<f64> = variances.iter().map(|v| v.log10()).collect();
    let n = logs.len();
    let m = mean(&logs);
    let std = if n > 1 {
        (logs.iter().map(|l| (l - m) * (l - m)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(VarianceEstimate {
        variances: variances.to_vec(),
        mean_log10: m,
        std_log10: std,
        n_samples: n,
    })
}
