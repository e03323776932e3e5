//! Three-color urns: case dispatch on `(r11, r22, r12)`, the linear
//! combination `C_n xi2`, and the central limit check for it.

use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::ensemble::Ensemble;
use crate::matrix::ReplacementMatrix;
use crate::rational::{self, Rational};
use crate::spectral::ColorRate;
use crate::stats::{ks_statistic, standard_normal_cdf};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ThreeColorError {
    #[error("expected a three-color model, got {0} colors")]
    NotThreeColors(usize),
    #[error("assumption violated: {0}")]
    AssumptionViolation(String),
    #[error("the central limit check needs the sub or critical regime, model is {0:?}")]
    WrongRegime(CltRegime),
}

/// Behaviour of color 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Color2Case {
    /// `r22 > r11`: `C_n2 / n^r22` has its own random limit.
    OwnRate,
    /// `r22 = r11`, `r12 > 0`: `C_n2 / (n^r22 log n) -> r12 V1`.
    LogCorrected,
    /// `r22 < r11`, `r12 > 0`: `C_n2 / n^r11 -> r12 V1 / (r11 - r22)`.
    FollowsFirst,
    /// `0 < r22 < r11`, `r12 = 0`: `C_n2 / n^r22` has its own random limit.
    SlowerOwnRate,
    /// `r12 = r22 = 0`: `C_n2` never changes.
    Frozen,
}

impl Color2Case {
    /// Roman-numeral label of the case in the usual enumeration.
    pub fn label(self) -> &'static str {
        match self {
            Color2Case::OwnRate => "iii",
            Color2Case::LogCorrected => "iv",
            Color2Case::FollowsFirst => "v(a)",
            Color2Case::SlowerOwnRate => "v(b)",
            Color2Case::Frozen => "vi",
        }
    }
}

/// Fluctuation regime of `C_n xi2` when `0 < r22 < r11` and `r12 > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CltRegime {
    /// `r22 < r11/2`: normal mixture at scale `n^(r11/2)`.
    Sub,
    /// `r22 = r11/2`: normal mixture at scale `(n^r11 log n)^(1/2)`.
    Critical,
    /// `r22 > r11/2`: `C_n xi2 / n^r22` converges almost surely.
    Super,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Xi2Kind {
    /// Right eigenvector for `r22`.
    Eigenvector,
    /// Jordan vector with `R xi2 = xi1 + r11 xi2` (free parameter set to 0).
    Jordan,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ThreeColorCase {
    pub case: Color2Case,
    pub label: &'static str,
    /// `r11 = 0`: `C_n1` stays at its initial value.
    pub color1_frozen: bool,
    pub color1_rate: ColorRate,
    pub color2_rate: ColorRate,
    /// Multiplier of `V1` in the limit of color 2, when it follows color 1.
    #[serde(with = "rational::serde_pq_opt")]
    pub coefficient: Option<Rational>,
    pub regime: CltRegime,
    #[serde(with = "rational::serde_pq_vec")]
    pub xi2: Vec<Rational>,
    pub xi2_kind: Xi2Kind,
    /// `sigma^2 / V1` of the limiting normal mixture (sub and critical regimes).
    #[serde(with = "rational::serde_pq_opt")]
    pub variance_factor: Option<Rational>,
    /// `C_n xi2` is constant in `n`.
    pub xi2_constant: bool,
}

impl ThreeColorCase {
    /// `R xi2 - r22 xi2`, which must vanish for an eigenvector; for the Jordan
    /// vector `R xi2 - r11 xi2` equals `xi1 = (1, 0, 0)`.
    pub fn xi2_residual(&self, matrix: &ReplacementMatrix) -> Vec<Rational> {
        let lambda = matrix.diagonal(1);
        (0..3)
            .map(|i| (0..3).map(|j| matrix.entry(i, j) * &self.xi2[j]).sum::<Rational>() - lambda * &self.xi2[i])
            .collect()
    }

    /// Scale `a_n` of the central limit statement.
    pub fn clt_scale(&self, r11: f64, n: f64) -> Option<f64> {
        match self.regime {
            CltRegime::Sub => Some(n.powf(r11)),
            CltRegime::Critical => Some(n.powf(r11) * n.ln()),
            _ => None,
        }
    }
}

pub fn three_color_dispatch(matrix: &ReplacementMatrix) -> Result<ThreeColorCase, ThreeColorError> {
    if matrix.dim() != 3 {
        return Err(ThreeColorError::NotThreeColors(matrix.dim()));
    }
    let r11 = matrix.entry(0, 0).clone();
    let r22 = matrix.entry(1, 1).clone();
    let r12 = matrix.entry(0, 1).clone();
    let one = Rational::one();
    if r11 >= one {
        return Err(ThreeColorError::AssumptionViolation("r11 must be below 1".into()));
    }
    if r22 >= one {
        return Err(ThreeColorError::AssumptionViolation("r22 must be below 1".into()));
    }
    if r11 == r22 && r12.is_zero() {
        return Err(ThreeColorError::AssumptionViolation("r12 must be positive when r11 = r22".into()));
    }

    let case = if r22 > r11 {
        Color2Case::OwnRate
    } else if r22 == r11 {
        Color2Case::LogCorrected
    } else if r12.is_positive() {
        Color2Case::FollowsFirst
    } else if r22.is_positive() {
        Color2Case::SlowerOwnRate
    } else {
        Color2Case::Frozen
    };
    let color2_rate = match case {
        Color2Case::OwnRate | Color2Case::SlowerOwnRate | Color2Case::Frozen => ColorRate::new(r22.clone(), 0),
        Color2Case::LogCorrected => ColorRate::new(r22.clone(), 1),
        Color2Case::FollowsFirst => ColorRate::new(r11.clone(), 0),
    };
    let coefficient = match case {
        Color2Case::LogCorrected => Some(r12.clone()),
        Color2Case::FollowsFirst => Some(&r12 / (&r11 - &r22)),
        _ => None,
    };
    let (xi2, xi2_kind) = if r11 == r22 {
        (vec![Rational::zero(), one.clone() / &r12, Rational::zero()], Xi2Kind::Jordan)
    } else {
        (vec![r12.clone(), &r22 - &r11, Rational::zero()], Xi2Kind::Eigenvector)
    };
    let regime = if r22.is_positive() && r22 < r11 && r12.is_positive() {
        let half = &r11 / rational::int(2);
        if r22 < half {
            CltRegime::Sub
        } else if r22 == half {
            CltRegime::Critical
        } else {
            CltRegime::Super
        }
    } else {
        CltRegime::None
    };
    let base = &r12 * &r22 * &r22 * (&r12 + &r11 - &r22);
    let variance_factor = match regime {
        CltRegime::Sub => Some(base / (&r11 - rational::int(2) * &r22)),
        CltRegime::Critical => Some(base),
        _ => None,
    };
    let xi2_constant = r22.is_zero() && r22 < r11;
    Ok(ThreeColorCase {
        case,
        label: case.label(),
        color1_frozen: r11.is_zero(),
        color1_rate: ColorRate::new(r11, 0),
        color2_rate,
        coefficient,
        regime,
        xi2,
        xi2_kind,
        variance_factor,
        xi2_constant,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CltResult {
    pub regime: CltRegime,
    pub n: u64,
    pub reps: usize,
    pub ks: f64,
    pub threshold: f64,
    pub passed: bool,
    pub z_mean: f64,
    pub z_variance: f64,
}

/// Self-normalized pivot `Z = (C_n xi2 / sqrt(a_n)) / sqrt(sigma2_factor * V1hat)`
/// with `V1hat = C_n1 / n^r11`, from raw counts.
pub fn clt_pivot(case: &ThreeColorCase, r11: f64, n: u64, counts: &[f64]) -> Option<f64> {
    let factor = rational::to_f64(case.variance_factor.as_ref()?);
    let nf = n as f64;
    let a_n = case.clt_scale(r11, nf)?;
    let xi: Vec<f64> = case.xi2.iter().map(rational::to_f64).collect();
    let combo: f64 = counts.iter().zip(&xi).map(|(c, x)| c * x).sum();
    let v1 = counts[0] / nf.powf(r11);
    Some(combo / a_n.sqrt() / (factor * v1).sqrt())
}

/// Kolmogorov-Smirnov distance of the pivot at the terminal checkpoint to the
/// standard normal.
pub fn clt_check(
    ensemble: &Ensemble,
    case: &ThreeColorCase,
    r11: &Rational,
    threshold: f64,
) -> Result<CltResult, ThreeColorError> {
    if !matches!(case.regime, CltRegime::Sub | CltRegime::Critical) {
        return Err(ThreeColorError::WrongRegime(case.regime));
    }
    let r11 = rational::to_f64(r11);
    let last = ensemble.checkpoint_times().len() - 1;
    let n = ensemble.checkpoint_times()[last];
    let z: Vec<f64> = ensemble
        .trajectories
        .iter()
        .map(|t| clt_pivot(case, r11, n, &t.checkpoints[last].counts).expect("regime checked"))
        .collect();
    let ks = ks_statistic(&z, standard_normal_cdf);
    let summary = crate::stats::Summary::of(&z);
    Ok(CltResult {
        regime: case.regime,
        n,
        reps: z.len(),
        ks,
        threshold,
        passed: ks <= threshold,
        z_mean: summary.mean,
        z_variance: summary.variance,
    })
}

/// `C_n xi2` in floating point.
pub fn xi2_value(case: &ThreeColorCase, counts: &[f64]) -> f64 {
    counts.iter().zip(&case.xi2).map(|(c, x)| c * rational::to_f64(x)).sum()
}

/// Largest `|C_n xi2 - C_0 xi2|` along a set of count snapshots.
pub fn xi2_drift<'a, I: IntoIterator<Item = &'a [f64]>>(case: &ThreeColorCase, initial: &[f64], snapshots: I) -> f64 {
    let start = xi2_value(case, initial);
    snapshots
        .into_iter()
        .map(|c| (xi2_value(case, c) - start).abs())
        .fold(0.0, f64::max)
}

/// `C_n xi2 / (n^r22 log n) - C_n1 / n^r11` for the Jordan vector, which
/// tends to zero.
pub fn jordan_gap(case: &ThreeColorCase, r11: f64, n: u64, counts: &[f64]) -> Option<f64> {
    if case.xi2_kind != Xi2Kind::Jordan || n < 2 {
        return None;
    }
    let nf = n as f64;
    let scale = nf.powf(r11);
    Some(xi2_value(case, counts) / (scale * nf.ln()) - counts[0] / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{parse_rational, ratio};
    use proptest::prelude::*;

    fn three(r11: &str, r12: &str, r22: &str) -> ReplacementMatrix {
        let q = |s: &str| parse_rational(s).unwrap();
        let r13 = rational::int(1) - q(r11) - q(r12);
        let r23 = rational::int(1) - q(r22);
        ReplacementMatrix::new(
            vec![
                vec![q(r11), q(r12), r13],
                vec![Rational::zero(), q(r22), r23],
                vec![Rational::zero(), Rational::zero(), Rational::one()],
            ],
            vec![ratio(1, 3), ratio(1, 3), ratio(1, 3)],
        )
        .unwrap()
    }

    #[test]
    fn dispatch_examples() {
        let iv = three_color_dispatch(&three("0.5", "0.2", "0.5")).unwrap();
        assert_eq!(iv.case, Color2Case::LogCorrected);
        assert_eq!(iv.label, "iv");
        assert_eq!(iv.coefficient, Some(ratio(1, 5)));
        assert_eq!(iv.xi2, vec![Rational::zero(), rational::int(5), Rational::zero()]);
        let v = three_color_dispatch(&three("0.6", "0.3", "0.2")).unwrap();
        assert_eq!(v.case, Color2Case::FollowsFirst);
        assert_eq!(v.coefficient, Some(ratio(3, 4)));
        assert_eq!(v.regime, CltRegime::Sub);
        assert_eq!(v.variance_factor, Some(ratio(42, 1000)));
        let vb = three_color_dispatch(&three("0.5", "0", "0.3")).unwrap();
        assert_eq!(vb.case, Color2Case::SlowerOwnRate);
        assert_eq!(vb.color2_rate, ColorRate::new(ratio(3, 10), 0));
        let critical = three_color_dispatch(&three("0.6", "0.2", "0.3")).unwrap();
        assert_eq!(critical.regime, CltRegime::Critical);
        assert_eq!(critical.variance_factor, Some(ratio(9, 1000)));
        let frozen = three_color_dispatch(&three("0.5", "0", "0")).unwrap();
        assert_eq!(frozen.case, Color2Case::Frozen);
        assert!(frozen.xi2_constant);
        assert_eq!(three_color_dispatch(&three("0", "0.5", "0.2")).unwrap().case, Color2Case::OwnRate);
        assert!(three_color_dispatch(&three("0", "0.5", "0.2")).unwrap().color1_frozen);
        assert_eq!(three_color_dispatch(&three("0.6", "0.3", "0.4")).unwrap().regime, CltRegime::Super);
    }

    #[test]
    fn violations() {
        assert!(matches!(
            three_color_dispatch(&three("0.5", "0", "0.5")),
            Err(ThreeColorError::AssumptionViolation(_))
        ));
        assert!(matches!(three_color_dispatch(&three("1", "0", "0.5")), Err(ThreeColorError::AssumptionViolation(_))));
        assert!(matches!(three_color_dispatch(&three("0.5", "0", "1")), Err(ThreeColorError::AssumptionViolation(_))));
        let two = ReplacementMatrix::from_strs(&[&["0.5", "0.5"], &["0", "1"]], &["0.5", "0.5"]).unwrap();
        assert_eq!(three_color_dispatch(&two).unwrap_err(), ThreeColorError::NotThreeColors(2));
    }

    #[test]
    fn constant_combination_cases() {
        // 0 = r22 < r11 with r12 > 0: R xi2 = 0, so C_n xi2 never moves
        let m = three("0.5", "0.3", "0");
        let case = three_color_dispatch(&m).unwrap();
        assert!(case.xi2_constant);
        assert!(case.xi2_residual(&m).iter().all(Zero::is_zero));
        assert!(!three_color_dispatch(&three("0.6", "0.3", "0.2")).unwrap().xi2_constant);
    }

    #[test]
    fn jordan_vector_identity() {
        let m = three("0.5", "0.2", "0.5");
        let case = three_color_dispatch(&m).unwrap();
        assert_eq!(case.xi2_residual(&m), vec![Rational::one(), Rational::zero(), Rational::zero()]);
    }

    proptest! {
        #[test]
        fn dispatch_is_total_on_valid_grid(a in 0i64..10, b in 0i64..10, c in 0i64..10) {
            // r11 = a/10, r12 = b/10 (with r11 + r12 <= 1), r22 = c/10
            prop_assume!(a + b <= 10);
            let m = three(&format!("{a}/10"), &format!("{b}/10"), &format!("{c}/10"));
            let result = three_color_dispatch(&m);
            if a == c && b == 0 {
                prop_assert!(result.is_err());
            } else {
                let case = result.unwrap();
                let residual = case.xi2_residual(&m);
                match case.xi2_kind {
                    Xi2Kind::Eigenvector => prop_assert!(residual.iter().all(Zero::is_zero)),
                    Xi2Kind::Jordan => prop_assert_eq!(residual, vec![Rational::one(), Rational::zero(), Rational::zero()]),
                }
                let has_regime = case.regime != CltRegime::None;
                prop_assert_eq!(has_regime, c > 0 && c < a && b > 0);
                prop_assert_eq!(case.variance_factor.is_some(), matches!(case.regime, CltRegime::Sub | CltRegime::Critical));
                if let Some(v) = &case.variance_factor {
                    prop_assert!(v.is_positive());
                }
            }
        }
    }
}
