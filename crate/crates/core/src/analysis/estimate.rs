//! Empirical growth rates from the tail of an ensemble.
//!
//! Both regressions run over the last decade of checkpoints. The exponent is
//! the log-log slope of the median count. The log power is the slope of the
//! median count, divided by `N^anchor`, against `log log N`. `anchor` should be
//! the predicted exponent: over a single decade `log log N` is almost linear
//! in `log N`, so anchoring on the fitted exponent would absorb the log factor
//! and return a log power near zero whatever the truth.

use serde::Serialize;
use thiserror::Error;

use crate::ensemble::Ensemble;
use crate::spectral::ColorRate;
use crate::stats::{median, ols};

/// Fewest checkpoints an estimate accepts.
pub const MIN_CHECKPOINTS: usize = 8;
/// Fewest decades of `N` the checkpoints must span.
pub const MIN_DECADES: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimateError {
    #[error("need at least {MIN_CHECKPOINTS} checkpoints over {MIN_DECADES} decades, got {checkpoints} over {decades:.2}")]
    InsufficientData { checkpoints: usize, decades: f64 },
    #[error("color {} out of range", .0 + 1)]
    ColorOutOfRange(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentEstimate {
    pub exponent: f64,
    pub exponent_stderr: f64,
    pub log_power: f64,
    pub log_power_stderr: f64,
    /// Exponent the log-power regression divided out.
    pub anchor: f64,
    /// First and last `N` of the regression window.
    pub window: (u64, u64),
    pub points: usize,
}

/// Indices of checkpoints in the last decade, `N >= N_max / 10`, excluding `N = 1`.
pub fn tail_window(times: &[u64]) -> Vec<usize> {
    let Some(&last) = times.last() else { return Vec::new() };
    let start = (last as f64 / 10.0).max(2.0);
    times
        .iter()
        .enumerate()
        .filter(|(_, &n)| n as f64 >= start)
        .map(|(i, _)| i)
        .collect()
}

fn check_span(times: &[u64]) -> Result<(), EstimateError> {
    let usable: Vec<u64> = times.iter().copied().filter(|&n| n >= 1).collect();
    let decades = match (usable.first(), usable.last()) {
        (Some(&a), Some(&b)) => (b as f64 / a as f64).log10(),
        _ => 0.0,
    };
    if usable.len() < MIN_CHECKPOINTS || decades < MIN_DECADES - 1e-12 || tail_window(times).len() < 3 {
        return Err(EstimateError::InsufficientData { checkpoints: usable.len(), decades });
    }
    Ok(())
}

/// Median over replications of the count of `color`, per checkpoint.
pub fn median_counts(ensemble: &Ensemble, color: usize) -> Vec<f64> {
    (0..ensemble.checkpoint_times().len())
        .map(|i| median(&ensemble.counts_at(i, color)))
        .collect()
}

/// Estimates the growth of `color`. `anchor` defaults to the fitted exponent
/// when `None`.
pub fn estimate_exponent(
    ensemble: &Ensemble,
    color: usize,
    anchor: Option<f64>,
) -> Result<ExponentEstimate, EstimateError> {
    let times = ensemble.checkpoint_times();
    check_span(&times)?;
    if ensemble.trajectories.first().is_some_and(|t| color >= t.checkpoints[0].counts.len()) {
        return Err(EstimateError::ColorOutOfRange(color));
    }
    let window = tail_window(&times);
    let medians = median_counts(ensemble, color);
    let log_n: Vec<f64> = window.iter().map(|&i| (times[i] as f64).ln()).collect();
    let log_c: Vec<f64> = window.iter().map(|&i| medians[i].ln()).collect();
    let stage1 = ols(&log_n, &log_c).expect("window has distinct N");
    let anchor = anchor.unwrap_or(stage1.slope);
    let log_log_n: Vec<f64> = log_n.iter().map(|x| x.ln()).collect();
    let detrended: Vec<f64> = log_c.iter().zip(&log_n).map(|(c, x)| c - anchor * x).collect();
    let stage2 = ols(&log_log_n, &detrended).expect("window has distinct N");
    Ok(ExponentEstimate {
        exponent: stage1.slope,
        exponent_stderr: stage1.slope_stderr,
        log_power: stage2.slope,
        log_power_stderr: stage2.slope_stderr,
        anchor,
        window: (times[window[0]], times[*window.last().expect("nonempty")]),
        points: window.len(),
    })
}

/// Log-log slope that `N^s (log N)^d` itself shows over the same window; the
/// fitted exponent should match this rather than `s` when `d > 0`.
pub fn effective_slope(times: &[u64], rate: &ColorRate) -> Option<f64> {
    let window = tail_window(times);
    let x: Vec<f64> = window.iter().map(|&i| (times[i] as f64).ln()).collect();
    let y: Vec<f64> = window.iter().map(|&i| rate.scale(times[i] as f64).ln()).collect();
    ols(&x, &y).map(|f| f.slope)
}
