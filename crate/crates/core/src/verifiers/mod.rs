//! Numerical oracles for the barrier, curvature, comparison and transform
//! inequalities satisfied by complete flows on the disc.
//!
//! Every check returns a [`VerifierReport`] whose verdict is a pure function
//! of its worst margin and tolerance. Hypothesis failures are errors, kept
//! apart from failed conclusions.

pub mod barriers;
pub mod comparison;
pub mod report;
pub mod schwarz;
pub mod transforms;

use serde::{Deserialize, Serialize};

pub use barriers::{
    admissibility_report, barrier_b, barrier_c, barrier_report, curvature_sandwich, AdmissibilityParams,
};
pub use comparison::{compare_limits, direct_comparison, geometric_comparison, uniqueness_experiment};
pub use report::{default_tolerance, CheckDomain, Location, MarginTracker, VerifierReport};
pub use schwarz::schwarz_check;
pub use transforms::{
    flow_residual, interpolate_time, supersolution_residual, supersolution_transform, time_shift_transform,
    TransformResult,
};

/// Aggregate of reports from one verification run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub all_pass: bool,
    pub reports: Vec<VerifierReport>,
}

impl ReportBundle {
    pub fn new(reports: Vec<VerifierReport>) -> Self {
        Self { all_pass: reports.iter().all(|r| r.pass), reports }
    }

    pub fn push(&mut self, report: VerifierReport) {
        self.all_pass = (self.reports.is_empty() || self.all_pass) && report.pass;
        self.reports.push(report);
    }
}
