//! Diagnostics built on ensembles: rate estimation, the three-color case
//! analysis with its central limit checks, and the convergence report.

pub mod estimate;
pub mod report;
pub mod three_color;

pub use estimate::{estimate_exponent, EstimateError, ExponentEstimate};
pub use report::{convergence_report, ConvergenceReport, ReportError, Status, Verdict, VerifyConfig};
pub use three_color::{clt_check, three_color_dispatch, CltRegime, CltResult, Color2Case, ThreeColorCase, ThreeColorError};
