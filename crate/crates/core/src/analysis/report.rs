//! End-to-end convergence report: rearrangement, predicted rates, an
//! ensemble of the model as given, rate estimates and pass/fail verdicts.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analysis::estimate::{effective_slope, estimate_exponent, tail_window, ExponentEstimate};
use crate::analysis::three_color::{
    clt_check, jordan_gap, three_color_dispatch, xi2_drift, CltRegime, CltResult, ThreeColorCase,
};
use crate::ensemble::{run_ensemble, Ensemble};
use crate::matrix::ReplacementMatrix;
use crate::rational;
use crate::rearrange::{canonicalize, rearrange_to_increasing, RearrangeError};
use crate::simulator::{RunConfig, Schedule, SimError, SimModel};
use crate::spectral::{per_color_rates, theorem_rates, ColorRate, LimitKind, SpectralError};
use crate::stats::{median, ols, Summary};

/// Tolerances and run parameters. Every field has a default, so a config
/// file only needs the values it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub steps: u64,
    pub reps: usize,
    pub seed: u64,
    pub gamma: f64,
    /// Allowed `|s_hat - s_eff|`, where `s_eff` is the log-log slope of the
    /// predicted scale over the regression window.
    pub exponent_tolerance: f64,
    /// Allowed `|delta_hat - delta|`.
    pub log_power_tolerance: f64,
    /// Largest KS distance accepted in the sub regime.
    pub ks_threshold: f64,
    /// Largest KS distance accepted in the critical regime.
    pub ks_threshold_critical: f64,
    /// Smallest squared coefficient of variation of a scaled leading count
    /// that counts as a non-degenerate limit.
    pub nondegenerate_min_cv2: f64,
    /// Each decade the median gap to a predicted limit must fall below this
    /// multiple of its previous value.
    pub shrink_factor: f64,
    /// Check only the growth rates; skip limit identification (which needs
    /// the unique-arrangement condition).
    pub rates_only: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            steps: 100_000,
            reps: 200,
            seed: 0,
            gamma: 1.2,
            exponent_tolerance: 0.05,
            log_power_tolerance: 0.35,
            ks_threshold: 0.05,
            ks_threshold_critical: 0.06,
            nondegenerate_min_cv2: 1e-3,
            shrink_factor: 1.0,
            rates_only: false,
        }
    }
}

impl VerifyConfig {
    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// Multiplies every tolerance by `factor`.
    pub fn scale_tolerances(&self, factor: f64) -> VerifyConfig {
        VerifyConfig {
            exponent_tolerance: self.exponent_tolerance * factor,
            log_power_tolerance: self.log_power_tolerance * factor,
            ks_threshold: self.ks_threshold * factor,
            ks_threshold_critical: self.ks_threshold_critical * factor,
            nondegenerate_min_cv2: self.nondegenerate_min_cv2 * factor,
            ..self.clone()
        }
    }
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Assumption(Box<RearrangeError>),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Simulation(#[from] SimError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub check: String,
    pub subject: String,
    pub value: Option<f64>,
    pub threshold: f64,
    pub status: Status,
    pub detail: String,
}

impl Verdict {
    fn new(check: &str, subject: String, value: f64, threshold: f64, passed: bool, detail: String) -> Verdict {
        Verdict {
            check: check.to_string(),
            subject,
            value: Some(value),
            threshold,
            status: if passed { Status::Pass } else { Status::Fail },
            detail,
        }
    }

    fn skipped(check: &str, subject: String, threshold: f64, detail: String) -> Verdict {
        Verdict { check: check.to_string(), subject, value: None, threshold, status: Status::Skipped, detail }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub seed: u64,
    pub reps: usize,
    pub steps: u64,
    pub gamma: f64,
    pub matrix_hash: String,
    pub config_hash: String,
    /// `permutation[old] = new` into increasing order.
    pub permutation: Vec<usize>,
    pub rates_only: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColorReport {
    /// 1-based color in the model's own order.
    pub color: usize,
    pub label: String,
    pub predicted: ColorRate,
    pub predicted_effective_slope: Option<f64>,
    pub estimate: Option<ExponentEstimate>,
    pub terminal_scaled_mean: f64,
    pub terminal_scaled_variance: f64,
    /// Log-log slope of the median scaled count over the regression window.
    pub drift_slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThreeColorReport {
    #[serde(flatten)]
    pub case: ThreeColorCase,
    pub clt: Option<CltResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub metadata: Metadata,
    pub colors: Vec<ColorReport>,
    pub three_color: Option<ThreeColorReport>,
    pub verdicts: Vec<Verdict>,
    pub passed: bool,
}

/// Median of `|gap|` at the last three decade checkpoints `N/100, N/10, N`.
/// Returns `None` when those checkpoints are missing.
fn decade_medians<F: Fn(u64, &[f64]) -> f64>(ensemble: &Ensemble, gap: F) -> Option<Vec<(u64, f64)>> {
    let times = ensemble.checkpoint_times();
    let last = *times.last()?;
    if last < 100 || last % 100 != 0 {
        return None;
    }
    [last / 100, last / 10, last]
        .iter()
        .map(|&n| {
            let idx = ensemble.checkpoint_index(n)?;
            let values = ensemble.column(idx, |cp| gap(n, &cp.counts).abs());
            Some((n, median(&values)))
        })
        .collect()
}

/// Pass iff each decade's median gap is below `factor` times the previous
/// one (a gap that is already exactly zero stays a pass).
fn shrink_verdict(check: &str, subject: String, medians: Option<Vec<(u64, f64)>>, factor: f64) -> Verdict {
    let Some(medians) = medians else {
        return Verdict::skipped(check, subject, factor, "needs checkpoints N/100, N/10, N".into());
    };
    let ratios: Vec<f64> = medians
        .windows(2)
        .map(|w| {
            if w[0].1 == 0.0 {
                if w[1].1 == 0.0 { 0.0 } else { f64::INFINITY }
            } else {
                w[1].1 / w[0].1
            }
        })
        .collect();
    let worst = ratios.iter().copied().fold(0.0, f64::max);
    let detail = medians.iter().map(|(n, m)| format!("N={n}: {m:.4e}")).collect::<Vec<_>>().join(", ");
    let passed = ratios.iter().all(|&r| r == 0.0 || r < factor);
    Verdict::new(check, subject, worst, factor, passed, detail)
}

fn scaled(rate: &ColorRate, n: u64, count: f64) -> f64 {
    count / rate.scale(n as f64)
}

pub fn convergence_report(matrix: &ReplacementMatrix, config: &VerifyConfig) -> Result<ConvergenceReport, ReportError> {
    let dim = matrix.dim();
    let rearrangement = if config.rates_only {
        rearrange_to_increasing(matrix)
    } else {
        canonicalize(matrix).map_err(|e| ReportError::Assumption(Box::new(e)))?
    };
    let order = rearrangement.inverse();
    let profile = if config.rates_only { None } else { Some(theorem_rates(&rearrangement.rearranged)?) };
    let rates: Vec<ColorRate> = match &profile {
        Some(p) => {
            let canonical = p.color_rates();
            (0..dim).map(|c| canonical[rearrangement.perm[c]].clone()).collect()
        }
        None => per_color_rates(matrix),
    };

    let schedule = Schedule::geometric(config.steps, config.gamma)?;
    let ensemble = run_ensemble(&SimModel::new(matrix), &RunConfig::counts_only(schedule), config.seed, config.reps)?;
    let times = ensemble.checkpoint_times();
    let last_idx = times.len() - 1;
    let last_n = times[last_idx];
    let mut verdicts = Vec::new();

    let mut colors = Vec::with_capacity(dim);
    for (c, rate) in rates.iter().enumerate() {
        let subject = format!("color {}", c + 1);
        let anchor = rational::to_f64(&rate.exponent);
        let estimate = estimate_exponent(&ensemble, c, Some(anchor)).ok();
        let eff = effective_slope(&times, rate);
        match (&estimate, eff) {
            (Some(est), Some(eff)) => {
                let err = (est.exponent - eff).abs();
                verdicts.push(Verdict::new(
                    "exponent",
                    subject.clone(),
                    err,
                    config.exponent_tolerance,
                    err <= config.exponent_tolerance,
                    format!("fitted {:.4} vs predicted slope {:.4} (s = {})", est.exponent, eff, rational::format_rational(&rate.exponent)),
                ));
                let err = (est.log_power - rate.log_power as f64).abs();
                verdicts.push(Verdict::new(
                    "log_power",
                    subject.clone(),
                    err,
                    config.log_power_tolerance,
                    err <= config.log_power_tolerance,
                    format!("fitted {:.4} vs predicted {}", est.log_power, rate.log_power),
                ));
            }
            _ => {
                let why = "needs at least 8 checkpoints over 2 decades".to_string();
                verdicts.push(Verdict::skipped("exponent", subject.clone(), config.exponent_tolerance, why.clone()));
                verdicts.push(Verdict::skipped("log_power", subject.clone(), config.log_power_tolerance, why));
            }
        }
        let terminal: Vec<f64> = ensemble.column(last_idx, |cp| scaled(rate, last_n, cp.counts[c]));
        let summary = Summary::of(&terminal);
        let window = tail_window(&times);
        let drift_slope = {
            let x: Vec<f64> = window.iter().map(|&i| (times[i] as f64).ln()).collect();
            let y: Vec<f64> = window
                .iter()
                .map(|&i| median(&ensemble.column(i, |cp| scaled(rate, times[i], cp.counts[c]))).ln())
                .collect();
            ols(&x, &y).map(|f| f.slope)
        };
        colors.push(ColorReport {
            color: c + 1,
            label: matrix.label(c),
            predicted: rate.clone(),
            predicted_effective_slope: eff,
            estimate,
            terminal_scaled_mean: summary.mean,
            terminal_scaled_variance: summary.variance,
            drift_slope,
        });
    }

    if let Some(profile) = &profile {
        for (j, block) in profile.blocks.iter().enumerate() {
            let lead = order[block.start];
            let rate = block.rate();
            let subject = format!("block {} (color {})", j + 1, lead + 1);
            match &block.limit {
                LimitKind::DeterministicOne => {
                    let medians = decade_medians(&ensemble, |n, c| scaled(&rate, n, c[lead]) - 1.0);
                    verdicts.push(shrink_verdict("limit_one", subject, medians, config.shrink_factor));
                }
                LimitKind::DeterministicInitial { value } => {
                    let initial = rational::to_f64(value);
                    let worst = ensemble
                        .trajectories
                        .iter()
                        .flat_map(|t| t.checkpoints.iter().map(|cp| (cp.counts[lead] - initial).abs()))
                        .fold(0.0, f64::max);
                    verdicts.push(Verdict::new(
                        "limit_initial",
                        subject,
                        worst,
                        0.0,
                        worst == 0.0,
                        format!("count must stay at {initial}"),
                    ));
                }
                LimitKind::Nondegenerate => {
                    let values = ensemble.column(last_idx, |cp| scaled(&rate, last_n, cp.counts[lead]));
                    let s = Summary::of(&values);
                    let cv2 = s.variance / (s.mean * s.mean);
                    verdicts.push(Verdict::new(
                        "nondegenerate",
                        subject,
                        cv2,
                        config.nondegenerate_min_cv2,
                        cv2 >= config.nondegenerate_min_cv2,
                        format!("terminal scaled mean {:.4}, variance {:.4e}", s.mean, s.variance),
                    ));
                }
                LimitKind::ChainedTo { block: prev, coefficient } => {
                    let prev_lead = order[profile.blocks[*prev].start];
                    let prev_rate = ColorRate::new(block.lambda.clone(), (block.nu - 1) as u32);
                    let c = rational::to_f64(coefficient);
                    let medians = decade_medians(&ensemble, |n, counts| {
                        scaled(&rate, n, counts[lead]) - c * scaled(&prev_rate, n, counts[prev_lead])
                    });
                    verdicts.push(shrink_verdict("chained_limit", subject, medians, config.shrink_factor));
                }
            }
            for k in block.start + 1..block.end {
                let color = order[k];
                let coefficient = rational::to_f64(&block.pi[k - block.start]);
                let medians = decade_medians(&ensemble, |n, counts| {
                    scaled(&rate, n, counts[color]) - coefficient * scaled(&rate, n, counts[lead])
                });
                verdicts.push(shrink_verdict(
                    "within_block_limit",
                    format!("color {} in block {}", color + 1, j + 1),
                    medians,
                    config.shrink_factor,
                ));
            }
        }
    }

    let three_color = if dim == 3 && !config.rates_only {
        three_color_dispatch(matrix).ok().map(|case| {
            let r11 = matrix.entry(0, 0).clone();
            let clt = match case.regime {
                CltRegime::Sub | CltRegime::Critical => {
                    let threshold = if case.regime == CltRegime::Sub {
                        config.ks_threshold
                    } else {
                        config.ks_threshold_critical
                    };
                    let result = clt_check(&ensemble, &case, &r11, threshold).expect("regime checked");
                    verdicts.push(Verdict::new(
                        "clt_ks",
                        format!("C_n xi2, {} regime", if case.regime == CltRegime::Sub { "sub" } else { "critical" }),
                        result.ks,
                        threshold,
                        result.passed,
                        format!("pivot mean {:.4}, variance {:.4}", result.z_mean, result.z_variance),
                    ));
                    Some(result)
                }
                _ => None,
            };
            if case.xi2_constant {
                let initial = matrix.initial_f64();
                let drift = xi2_drift(
                    &case,
                    &initial,
                    ensemble.trajectories.iter().flat_map(|t| t.checkpoints.iter().map(|cp| cp.counts.as_slice())),
                );
                let tolerance = 1e-9 * last_n as f64;
                verdicts.push(Verdict::new(
                    "xi2_constant",
                    "C_n xi2".into(),
                    drift,
                    tolerance,
                    drift <= tolerance,
                    "C_n xi2 must stay at C_0 xi2".into(),
                ));
            }
            if case.xi2_kind == crate::analysis::three_color::Xi2Kind::Jordan {
                let r = rational::to_f64(&r11);
                let medians = decade_medians(&ensemble, |n, counts| jordan_gap(&case, r, n, counts).unwrap_or(0.0));
                verdicts.push(shrink_verdict("jordan_limit", "C_n xi2".into(), medians, config.shrink_factor));
            }
            ThreeColorReport { case, clt }
        })
    } else {
        None
    };

    let passed = verdicts.iter().all(|v| v.status != Status::Fail);
    Ok(ConvergenceReport {
        metadata: Metadata {
            seed: config.seed,
            reps: config.reps,
            steps: config.steps,
            gamma: config.gamma,
            matrix_hash: matrix.fingerprint(),
            config_hash: config.hash(),
            permutation: rearrangement.perm.clone(),
            rates_only: config.rates_only,
        },
        colors,
        three_color,
        verdicts,
        passed,
    })
}
