//! Monte Carlo error-rate estimation.

use std::time::Instant;

/// Result of one trial: how many error events in how many counted units
/// (symbols for SER, information bits for BER).
#[derive(Debug, Clone, Copy)]
pub struct TrialOutcome {
    pub errors: u64,
    pub units: u64,
}

/// When to stop a Monte Carlo point: at the unit budget, or once enough
/// errors have accumulated for a stable relative estimate, whichever first.
#[derive(Debug, Clone, Copy)]
pub struct StopRule {
    pub max_units: u64,
    pub max_errors: u64,
}

impl StopRule {
    pub const DEFAULT_MAX_ERRORS: u64 = 400;

    /// Budget of `max_units` with the default 400-error early stop.
    pub fn budget(max_units: u64) -> Self {
        StopRule {
            max_units,
            max_errors: Self::DEFAULT_MAX_ERRORS,
        }
    }

    /// Run the full budget regardless of the error count.
    pub fn exhaustive(max_units: u64) -> Self {
        StopRule {
            max_units,
            max_errors: u64::MAX,
        }
    }
}

/// One CSV row: an error-rate estimate for a (detector, SNR) point.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub detector: String,
    pub snr_db: f64,
    pub trials: u64,
    pub errors: u64,
    pub rate: f64,
    pub seconds: f64,
    pub seed: u64,
}

impl ResultRow {
    /// Builds a row; the rate is always `errors / trials`.
    pub fn new(
        experiment: impl Into<String>,
        detector: impl Into<String>,
        snr_db: f64,
        trials: u64,
        errors: u64,
        seconds: f64,
        seed: u64,
    ) -> Self {
        assert!(trials >= 1, "a row needs at least one trial");
        assert!(errors <= trials, "more errors than trials");
        ResultRow {
            experiment: experiment.into(),
            detector: detector.into(),
            snr_db,
            trials,
            errors,
            rate: errors as f64 / trials as f64,
            seconds,
            seed,
        }
    }
}

/// Runs seeded trials until the stop rule fires and wraps the counts in a
/// [`ResultRow`]. The closure receives the trial index; all randomness must
/// come from streams derived from that index so that results do not depend
/// on scheduling.
pub fn estimate_error_rate<F>(
    experiment: &str,
    detector: &str,
    snr_db: f64,
    stop: StopRule,
    seed: u64,
    mut trial: F,
) -> ResultRow
where
    F: FnMut(u64) -> TrialOutcome,
{
    assert!(stop.max_units >= 1, "trial budget must be at least 1");
    let start = Instant::now();
    let mut units = 0u64;
    let mut errors = 0u64;
    let mut index = 0u64;
    while units < stop.max_units && errors < stop.max_errors {
        let outcome = trial(index);
        debug_assert!(outcome.errors <= outcome.units);
        units += outcome.units;
        errors += outcome.errors;
        index += 1;
    }
    ResultRow::new(
        experiment,
        detector,
        snr_db,
        units,
        errors,
        start.elapsed().as_secs_f64(),
        seed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_exactly() {
        // A detector wrong on exactly 10 of 10^4 trials has rate 1e-3... at
        // 1e4 trials and 10 errors the rate is 10 / 1e4.
        let row = estimate_error_rate("exp", "fake", 0.0, StopRule::budget(10_000), 1, |i| {
            TrialOutcome {
                errors: (i % 1000 == 0) as u64,
                units: 1,
            }
        });
        assert_eq!(row.trials, 10_000);
        assert_eq!(row.errors, 10);
        assert!((row.rate - 1e-3).abs() < 1e-12);
    }

    #[test]
    fn early_stop_after_max_errors() {
        let row = estimate_error_rate("exp", "bad", 0.0, StopRule::budget(1_000_000), 1, |_| {
            TrialOutcome { errors: 1, units: 1 }
        });
        assert_eq!(row.errors, StopRule::DEFAULT_MAX_ERRORS);
        assert_eq!(row.trials, StopRule::DEFAULT_MAX_ERRORS);
    }

    #[test]
    fn zero_error_run_exhausts_budget() {
        let row = estimate_error_rate("exp", "good", 3.0, StopRule::budget(5000), 9, |_| {
            TrialOutcome { errors: 0, units: 1 }
        });
        assert_eq!(row.trials, 5000);
        assert_eq!(row.errors, 0);
        assert_eq!(row.rate, 0.0);
    }

    #[test]
    fn row_invariants_enforced() {
        let row = ResultRow::new("e", "d", 1.0, 3, 1, 0.0, 7);
        assert!((row.rate - 1.0 / 3.0).abs() < 1e-15);
    }
}
