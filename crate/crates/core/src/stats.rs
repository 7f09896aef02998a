//! Summary statistics for repeated experiment runs.

use crate::math;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StatsError {
    /// Margins need at least two samples.
    InsufficientSamples,
    /// Confidence level outside (0, 1).
    InvalidConfidence,
}

impl core::fmt::Display for StatsError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            StatsError::InsufficientSamples => write!(f, "need at least two samples"),
            StatsError::InvalidConfidence => write!(f, "confidence level must be in (0, 1)"),
        }
    }
}

/// Mean with its standard error and Student-t margin of error at a
/// confidence level.
#[derive(Clone, Copy, Debug)]
pub struct SummaryStats {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub standard_error: f64,
    pub critical_value: f64,
    pub margin_of_error: f64,
    pub confidence: f64,
}

/// Margin of error of the sample mean: SE = std / sqrt(n), ME = t* x SE with
/// the critical value at probability 1 - alpha/2 and n - 1 degrees of
/// freedom.
pub fn margin_of_error(samples: &[f64], confidence: f64) -> Result<SummaryStats, StatsError> {
    if samples.len() < 2 {
        return Err(StatsError::InsufficientSamples);
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(StatsError::InvalidConfidence);
    }
    let (mean, std) = math::mean_std(samples);
    let n = samples.len();
    let se = std / math::sqrt(n as f64);
    let p_star = 1.0 - (1.0 - confidence) / 2.0;
    let critical = math::student_t_critical(p_star, (n - 1) as u64);
    Ok(SummaryStats {
        n,
        mean,
        std,
        standard_error: se,
        critical_value: critical,
        margin_of_error: critical * se,
        confidence,
    })
}
