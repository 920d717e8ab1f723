//! Maximum-likelihood calibration of OU parameters from a uniformly sampled
//! series, via the exact AR(1) form of the discretised process:
//!
//! ```text
//! S_{i+1} = alpha S_i + theta (1 - alpha) + eps Z,   alpha = exp(-lambda delta).
//! ```

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::params::OUParams;

pub const DEFAULT_ROLLING_WEEKS: f64 = 22.0;
pub const MIN_WINDOW_WEEKS: f64 = 4.0;

/// Prices `S_0..S_n` sampled every `delta` weeks.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSeries {
    values: Vec<f64>,
    delta: f64,
}

impl SampledSeries {
    pub fn new(values: Vec<f64>, delta: f64) -> Result<Self> {
        if values.len() < 3 {
            return Err(invalid(format!("need at least 3 samples, got {}", values.len())));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(invalid(format!("sampling step must be positive, got {delta}")));
        }
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(invalid(format!("samples must be finite and positive, got {bad}")));
        }
        Ok(Self { values, delta })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Number of increments.
    pub fn increments(&self) -> usize {
        self.values.len() - 1
    }

    /// Samples per week, rounded.
    pub fn samples_per_week(&self) -> usize {
        ((1.0 / self.delta).round() as usize).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EstimationScheme {
    /// Trailing window of fixed length in weeks.
    Rolling { window_weeks: f64 },
    /// Everything from the start of the series.
    Expanding,
}

impl Default for EstimationScheme {
    fn default() -> Self {
        EstimationScheme::Rolling { window_weeks: DEFAULT_ROLLING_WEEKS }
    }
}

impl EstimationScheme {
    pub fn rolling(window_weeks: f64) -> Result<Self> {
        if !(window_weeks >= MIN_WINDOW_WEEKS) {
            return Err(invalid(format!("rolling window must be at least {MIN_WINDOW_WEEKS} weeks")));
        }
        Ok(EstimationScheme::Rolling { window_weeks })
    }

    /// Minimum history, in weeks, before the first estimate.
    pub fn min_weeks(&self) -> f64 {
        match *self {
            EstimationScheme::Rolling { window_weeks } => window_weeks,
            EstimationScheme::Expanding => MIN_WINDOW_WEEKS,
        }
    }
}

impl fmt::Display for EstimationScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimationScheme::Rolling { window_weeks } => write!(f, "rolling:{window_weeks}"),
            EstimationScheme::Expanding => f.write_str("expanding"),
        }
    }
}

impl FromStr for EstimationScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "expanding" {
            return Ok(EstimationScheme::Expanding);
        }
        match s.split_once(':') {
            Some(("rolling", w)) => {
                let weeks: f64 = w.parse().map_err(|_| invalid(format!("bad rolling window {w:?}")))?;
                EstimationScheme::rolling(weeks)
            }
            None if s == "rolling" => Ok(EstimationScheme::default()),
            _ => Err(invalid(format!("unknown estimation scheme {s:?}; use rolling:<weeks> or expanding"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    /// Raw estimates; `sigma` may be NaN and `lambda` negative or NaN when
    /// the fit is rejected.
    pub params: OUParams,
    pub valid: bool,
    pub n_obs: usize,
}

impl CalibrationResult {
    pub fn kappa(&self) -> f64 {
        self.params.kappa()
    }
}

/// Fits `(theta, lambda, sigma)` by maximum likelihood.
///
/// Sums run over the `n` pairs `(S_{i-1}, S_i)`. The data are centred on
/// their mean first; every estimator is shift-equivariant, so this only
/// removes cancellation.
pub fn mle_fit(series: &SampledSeries) -> Result<CalibrationResult> {
    fit_slice(series.values(), series.delta())
}

fn fit_slice(values: &[f64], delta: f64) -> Result<CalibrationResult> {
    let n_obs = values.len() - 1;
    let n = n_obs as f64;
    let center = values.iter().sum::<f64>() / values.len() as f64;

    let (mut sx, mut sy, mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for w in values.windows(2) {
        let (x, y) = (w[0] - center, w[1] - center);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    if values.iter().all(|v| *v == values[0]) {
        return Err(Error::DegenerateSeries("all samples are equal".into()));
    }

    let theta_c = (sy * sxx - sx * sxy) / (n * (sxx - sxy) - (sx * sx - sx * sy));
    let num = sxy - theta_c * sx - theta_c * sy + n * theta_c * theta_c;
    let den = sxx - 2.0 * theta_c * sx + n * theta_c * theta_c;
    let ratio = num / den;

    let (lambda, sigma) = if ratio > 0.0 && ratio.is_finite() {
        let alpha = ratio;
        let lambda = -alpha.ln() / delta;
        let one_m = 1.0 - alpha;
        let cond_var = (syy - 2.0 * alpha * sxy + alpha * alpha * sxx
            - 2.0 * theta_c * one_m * (sy - alpha * sx)
            + n * theta_c * theta_c * one_m * one_m)
            / n;
        let sigma2 = cond_var * 2.0 * lambda / (1.0 - alpha * alpha);
        (lambda, if sigma2 > 0.0 { sigma2.sqrt() } else { f64::NAN })
    } else {
        (f64::NAN, f64::NAN)
    };

    let params = OUParams { theta: theta_c + center, lambda, sigma };
    let valid = lambda > 0.0 && sigma > 0.0 && params.theta.is_finite() && lambda.is_finite() && sigma.is_finite();
    Ok(CalibrationResult { params, valid, n_obs })
}

/// One calibration per `step` samples, each ending at `end` (inclusive
/// sample index). Fits that fail the validity rule are reported, not
/// dropped; windows with no variation are reported as invalid too.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimedCalibration {
    pub end: usize,
    pub time_weeks: f64,
    pub result: CalibrationResult,
}

pub fn rolling_estimates(series: &SampledSeries, scheme: EstimationScheme, step: usize) -> Vec<TimedCalibration> {
    let step = step.max(1);
    let values = series.values();
    let last = values.len() - 1;
    let window = ((scheme.min_weeks() / series.delta()).round() as usize).max(2);
    if window > last {
        log::warn!(
            "series of {} increments is shorter than one {} window ({window} increments)",
            last,
            scheme
        );
        return Vec::new();
    }

    let mut ends: Vec<usize> = (0..).map(|k| last as i64 - (k * step) as i64).take_while(|e| *e >= window as i64).map(|e| e as usize).collect();
    ends.reverse();

    ends.par_iter()
        .map(|&end| {
            let from = match scheme {
                EstimationScheme::Rolling { .. } => end - window,
                EstimationScheme::Expanding => 0,
            };
            let result = fit_slice(&values[from..=end], series.delta()).unwrap_or(CalibrationResult {
                params: OUParams { theta: f64::NAN, lambda: f64::NAN, sigma: f64::NAN },
                valid: false,
                n_obs: end - from,
            });
            TimedCalibration { end, time_weeks: end as f64 * series.delta(), result }
        })
        .collect()
}

/// Whether the OU model may be used for the period the fit describes.
pub fn validity_gate(result: &CalibrationResult) -> bool {
    result.valid
        && result.params.lambda > 0.0
        && result.params.sigma > 0.0
        && result.params.theta.is_finite()
        && result.params.lambda.is_finite()
        && result.params.sigma.is_finite()
}
