use serde::{Deserialize, Serialize};

use super::checks::TrialOutcome;

/// Summary of one check over all of its trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check_name: String,
    pub trials: usize,
    pub failures: usize,
    /// Largest residual, rescaled so that `tolerance` is the pass threshold.
    /// Trials that could not be evaluated count as `f64::MAX`.
    pub max_residual: f64,
    pub tolerance: f64,
    /// Trial seeds of the failures, in trial order. Each seed reproduces its
    /// trial on its own.
    pub failing_seeds: Vec<u64>,
    pub wall_time_ms: u64,
}

impl VerificationReport {
    pub(crate) fn from_outcomes(
        check_name: &str,
        tolerance: f64,
        trials: &[(u64, Option<TrialOutcome>)],
        wall_time_ms: u64,
    ) -> Self {
        let mut failing_seeds = Vec::new();
        let mut max_residual: f64 = 0.0;
        for &(seed, outcome) in trials {
            let (residual, passed) = match outcome {
                Some(o) => (o.normalized(tolerance), o.passed()),
                None => (f64::MAX, false),
            };
            max_residual = if residual.is_nan() { f64::MAX } else { max_residual.max(residual) };
            if !passed {
                failing_seeds.push(seed);
            }
        }
        Self {
            check_name: check_name.to_owned(),
            trials: trials.len(),
            failures: failing_seeds.len(),
            max_residual,
            tolerance,
            failing_seeds,
            wall_time_ms,
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Pretty-printed JSON array of reports.
pub fn reports_to_json(reports: &[VerificationReport]) -> String {
    serde_json::to_string_pretty(reports).expect("reports are plain data")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregates_failures_and_residuals() {
        let ok = TrialOutcome { residual: 1e-9, allowed: 1e-6 };
        let wide = TrialOutcome { residual: 2e-6, allowed: 4e-6 };
        let bad = TrialOutcome { residual: 3e-6, allowed: 1e-6 };
        let r = VerificationReport::from_outcomes("x", 1e-6, &[(1, Some(ok)), (2, Some(wide)), (3, Some(bad)), (4, None)], 5);
        assert_eq!(r.trials, 4);
        assert_eq!(r.failures, 2);
        assert_eq!(r.failing_seeds, vec![3, 4]);
        assert_eq!(r.max_residual, f64::MAX);

        let r = VerificationReport::from_outcomes("x", 1e-6, &[(1, Some(ok)), (2, Some(wide))], 0);
        assert!(r.passed());
        assert!((r.max_residual - 0.5e-6).abs() < 1e-18);
    }

    #[test]
    fn json_round_trip() {
        let r = VerificationReport::from_outcomes("lipschitz", 1e-9, &[(7, Some(TrialOutcome { residual: 0.0, allowed: 1e-9 }))], 12);
        let text = reports_to_json(std::slice::from_ref(&r));
        let back: Vec<VerificationReport> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, vec![r]);
        for key in ["check_name", "trials", "failures", "max_residual", "tolerance", "failing_seeds", "wall_time_ms"] {
            assert!(text.contains(key));
        }
    }
}
