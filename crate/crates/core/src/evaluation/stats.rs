use serde::{Deserialize, Serialize};

use super::EvalError;

/// Divisor used for the spread of trial means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StdConvention {
    /// Divide by `n`.
    #[default]
    Population,
    /// Divide by `n - 1`; a single value has zero spread.
    Sample,
}

pub fn mean(values: &[f64]) -> Result<f64, EvalError> {
    if values.is_empty() {
        return Err(EvalError::Empty);
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

pub fn std_dev(values: &[f64], convention: StdConvention) -> Result<f64, EvalError> {
    let m = mean(values)?;
    let n = values.len();
    let divisor = match convention {
        StdConvention::Population => n,
        StdConvention::Sample if n > 1 => n - 1,
        StdConvention::Sample => return Ok(0.0),
    };
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    Ok((ss / divisor as f64).sqrt())
}

/// Mean confidence over the detected frames of one trial.
pub fn trial_mean(confidences: &[f64]) -> Result<f64, EvalError> {
    mean(confidences)
}

/// Standard error of the mean, `std / sqrt(n)`.
pub fn sem(std: f64, n: usize) -> Result<f64, EvalError> {
    if n == 0 {
        return Err(EvalError::ZeroCount);
    }
    if !(std >= 0.0) || !std.is_finite() {
        return Err(EvalError::InvalidStd(std));
    }
    Ok(std / (n as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialStats {
    pub mean: f64,
    pub std: f64,
    pub sem: f64,
    pub n: usize,
}

impl TrialStats {
    pub fn from_values(values: &[f64], convention: StdConvention) -> Result<Self, EvalError> {
        let mean = mean(values)?;
        let std = std_dev(values, convention)?;
        Ok(Self {
            mean,
            std,
            sem: sem(std, values.len())?,
            n: values.len(),
        })
    }
}

/// Difference between two means; the relative part is `None` when `b` is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Delta {
    pub absolute: f64,
    pub relative_percent: Option<f64>,
}

pub fn delta_report(a: f64, b: f64) -> Delta {
    let absolute = a - b;
    Delta {
        absolute,
        relative_percent: (b != 0.0).then(|| absolute / b * 100.0),
    }
}

/// Fraction to percent, rounded half away from zero to two decimals.
pub fn round_percent(fraction: f64) -> f64 {
    (fraction * 100.0 * 100.0).round() / 100.0
}
