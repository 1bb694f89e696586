//! Closed-form runtime predictors, drift bounds and summary
//! statistics.
//!
//! Logarithms follow a clamped convention so iterated logs are total:
//! `log(x) = log2(x)` for `x > 2` and `1` otherwise; `ln(x) = ln(x)` for
//! `x > e` and `1` otherwise.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::RngStream;

/// Binary logarithm clamped to 1 on `x <= 2`.
#[inline]
pub fn log2c(x: f64) -> f64 {
    if x <= 2.0 {
        1.0
    } else {
        x.log2()
    }
}

/// Natural logarithm clamped to 1 on `x <= e`.
#[inline]
pub fn lnc(x: f64) -> f64 {
    if x <= std::f64::consts::E {
        1.0
    } else {
        x.ln()
    }
}

/// `sqrt(log n * loglog n / logloglog n)`.
pub fn lambda_star(n: f64) -> f64 {
    let l1 = log2c(n);
    let l2 = log2c(l1);
    let l3 = log2c(l2);
    (l1 * l2 / l3).sqrt()
}

/// `n log n / lambda_star(n)`.
pub fn f_star(n: f64) -> f64 {
    n * log2c(n) / lambda_star(n)
}

/// Same quantity as [`f_star`] through `n * sqrt(log n * logloglog n / loglog n)`.
pub fn f_star_closed_form(n: f64) -> f64 {
    let l1 = log2c(n);
    let l2 = log2c(l1);
    let l3 = log2c(l2);
    n * (l1 * l3 / l2).sqrt()
}

/// `max{ n log n / lambda, n lambda loglog(lambda) / log(lambda) }` with
/// constant factor one.
pub fn two_term_runtime(n: f64, lambda: f64) -> f64 {
    let first = n * log2c(n) / lambda;
    let second = n * lambda * log2c(log2c(lambda)) / log2c(lambda);
    first.max(second)
}

/// Argument of the exponent bounding the admissible mutation-strength
/// window from above, `sqrt(log n * logloglog n / loglog n)`. The constant
/// in front of it is unspecified, so only the argument is exposed.
pub fn k_window_exponent(n: f64) -> f64 {
    f_star_closed_form(n) / n
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogConvention {
    /// Binary logs clamp to 1 at or below this argument.
    pub log2_floor: f64,
    /// Natural logs clamp to 1 at or below this argument.
    pub ln_floor: f64,
}

pub const LOG_CONVENTION: LogConvention = LogConvention {
    log2_floor: 2.0,
    ln_floor: std::f64::consts::E,
};

/// Predictor values for one problem size.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictorValues {
    pub n: f64,
    pub lambda_star: f64,
    pub f_star: f64,
    pub log_convention: LogConvention,
}

impl PredictorValues {
    pub fn new(n: f64) -> Self {
        Self {
            n,
            lambda_star: lambda_star(n),
            f_star: f_star(n),
            log_convention: LOG_CONVENTION,
        }
    }

    pub fn two_term_runtime(&self, lambda: f64) -> f64 {
        two_term_runtime(self.n, lambda)
    }
}

/// Additive drift: expected hitting time `x0 / delta`.
pub fn additive_drift_time(x0: f64, delta: f64) -> Result<f64> {
    if delta.is_nan() || delta <= 0.0 || x0.is_nan() || x0 < 0.0 {
        return Err(invalid(format!(
            "additive drift needs delta > 0 and x0 >= 0, got delta={delta}, x0={x0}"
        )));
    }
    Ok(x0 / delta)
}

/// Lower bound on the hitting time under multiplicative drift:
/// `(ln s0 - ln s_min) / delta * (1 - beta) / (1 + beta)`.
pub fn multiplicative_drift_lower(s0: f64, s_min: f64, delta: f64, beta: f64) -> Result<f64> {
    if !(s_min >= 1.0 && s0 >= s_min) {
        return Err(invalid(format!("need s0 >= s_min >= 1, got s0={s0}, s_min={s_min}")));
    }
    if !(delta > 0.0 && delta <= 1.0 && beta > 0.0 && beta <= 1.0) {
        return Err(invalid(format!("need delta, beta in (0, 1], got delta={delta}, beta={beta}")));
    }
    Ok((s0.ln() - s_min.ln()) / delta * (1.0 - beta) / (1.0 + beta))
}

/// Bootstrap settings for [`summarize`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bootstrap {
    pub resamples: usize,
    pub seed: u64,
}

impl Default for Bootstrap {
    fn default() -> Self {
        Self {
            resamples: 2000,
            seed: 0x5eed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl SummaryStats {
    pub fn ci_overlaps(&self, other: &SummaryStats) -> bool {
        self.ci_low <= other.ci_high && other.ci_low <= self.ci_high
    }
}

fn median_of_sorted(sorted: &[f64]) -> f64 {
    let m = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[m]
    } else {
        0.5 * (sorted[m - 1] + sorted[m])
    }
}

/// Percentile of sorted data by linear interpolation between order
/// statistics.
fn percentile_of_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Count, mean, median, standard error and a percentile bootstrap 95%
/// interval of the mean. Values are sorted before resampling, so the
/// result does not depend on input order.
pub fn summarize(values: &[f64], bootstrap: Bootstrap) -> Result<SummaryStats> {
    if values.is_empty() {
        return Err(Error::EmptyInput("summarize needs at least one value"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(invalid("summarize needs finite values"));
    }
    if bootstrap.resamples == 0 {
        return Err(invalid("bootstrap needs at least one resample"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let count = sorted.len();
    let mean = sorted.iter().sum::<f64>() / count as f64;
    let std_error = if count > 1 {
        let var = sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
        (var / count as f64).sqrt()
    } else {
        0.0
    };

    let mut rng = RngStream::new(bootstrap.seed);
    let mut means: Vec<f64> = (0..bootstrap.resamples)
        .map(|_| {
            let total: f64 = (0..count)
                .map(|_| sorted[rng.below(count as u64) as usize])
                .sum();
            total / count as f64
        })
        .collect();
    means.sort_by(f64::total_cmp);

    Ok(SummaryStats {
        count,
        mean,
        median: median_of_sorted(&sorted),
        std_error,
        ci_low: percentile_of_sorted(&means, 0.025),
        ci_high: percentile_of_sorted(&means, 0.975),
    })
}

/// Location of the minimum of a `(lambda, mean F)` curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UShape {
    pub argmin_lambda: f64,
    pub min_value: f64,
    /// Value at the smallest lambda divided by the minimum.
    pub left_ratio: f64,
    /// Value at the largest lambda divided by the minimum.
    pub right_ratio: f64,
}

/// Finds the minimum of a curve; ties go to the smallest lambda.
pub fn locate_u_shape(curve: &[(f64, f64)]) -> Result<UShape> {
    if curve.is_empty() {
        return Err(Error::EmptyInput("locate_u_shape needs at least one point"));
    }
    let mut pts = curve.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (argmin_lambda, min_value) = pts
        .iter()
        .copied()
        .fold((f64::NAN, f64::INFINITY), |best, (l, v)| {
            if v < best.1 {
                (l, v)
            } else {
                best
            }
        });
    if !min_value.is_finite() || min_value <= 0.0 {
        return Err(invalid("curve values must be finite and positive"));
    }
    Ok(UShape {
        argmin_lambda,
        min_value,
        left_ratio: pts[0].1 / min_value,
        right_ratio: pts[pts.len() - 1].1 / min_value,
    })
}
