//! CSV output with byte-stable bodies.
//!
//! Floats are written with Rust's shortest round-trip formatting, so an
//! identical invocation produces an identical file. The only varying line
//! is the leading timestamp comment, and `--no-timestamp` drops it.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use qkd_sync::engine::{OutcomeEstimates, SweepPoint};
use qkd_sync::TrialOutcome;

use crate::error::CliError;

fn timestamp_line() -> String {
    let unix_s = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("# generated unix_s={unix_s}\n")
}

fn write_file(path: &Path, body: &str, no_timestamp: bool) -> Result<(), CliError> {
    let content = if no_timestamp {
        body.to_string()
    } else {
        format!("{}{body}", timestamp_line())
    };
    std::fs::write(path, content).map_err(|err| CliError::write_failure(path, &err))
}

/// Four outcome rows for a single experiment.
pub fn write_run_csv(
    path: &Path,
    estimates: &OutcomeEstimates,
    no_timestamp: bool,
) -> Result<(), CliError> {
    let mut body = String::from("outcome,count,trials,p_hat,ci_low,ci_high,seed\n");
    for outcome in TrialOutcome::ALL {
        let est = estimates.estimate(outcome);
        body.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            outcome.label(),
            estimates.count(outcome),
            estimates.trials(),
            est.p_hat,
            est.ci_low,
            est.ci_high,
            estimates.seed()
        ));
    }
    write_file(path, &body, no_timestamp)
}

/// One row per sweep point, in sweep order.
pub fn write_sweep_csv(
    path: &Path,
    points: &[SweepPoint],
    no_timestamp: bool,
) -> Result<(), CliError> {
    write_file(path, &sweep_body(points), no_timestamp)
}

pub fn sweep_body(points: &[SweepPoint]) -> String {
    let mut body =
        String::from("mean_pe,dark_hz,N,trials,p_correct,ci_low,ci_high,p_erroneous,p_miss,seed\n");
    for point in points {
        let correct = point.estimates.p_correct_estimate();
        let erroneous = point.estimates.estimate(TrialOutcome::Erroneous);
        let miss = point.estimates.estimate(TrialOutcome::Miss);
        body.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            point.mean_pe,
            point.dark_rate_hz,
            point.samples_per_window,
            point.estimates.trials(),
            correct.p_hat,
            correct.ci_low,
            correct.ci_high,
            erroneous.p_hat,
            miss.p_hat,
            point.estimates.seed()
        ));
    }
    body
}
