//! Proportion estimates with Wilson score confidence intervals.

/// Two-sided 95% normal quantile used by the Wilson interval.
pub const WILSON_Z_95: f64 = 1.959_963_984_540_054;

/// A binomial proportion estimate with its 95% Wilson score interval.
/// The interval always contains `p_hat` and stays inside [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbabilityEstimate {
    pub successes: u64,
    pub trials: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl ProbabilityEstimate {
    pub fn from_counts(successes: u64, trials: u64) -> Self {
        assert!(trials > 0, "estimate requires at least one trial");
        assert!(successes <= trials);
        let n = trials as f64;
        let p_hat = successes as f64 / n;
        let z = WILSON_Z_95;
        let z2 = z * z;
        let denominator = 1.0 + z2 / n;
        let center = (p_hat + z2 / (2.0 * n)) / denominator;
        let half_width = z * (p_hat * (1.0 - p_hat) / n + z2 / (4.0 * n * n)).sqrt() / denominator;
        Self {
            successes,
            trials,
            p_hat,
            ci_low: (center - half_width).max(0.0).min(p_hat),
            ci_high: (center + half_width).min(1.0).max(p_hat),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn degenerate_proportions_pin_the_boundary() {
        let none = ProbabilityEstimate::from_counts(0, 100);
        assert_eq!(none.p_hat, 0.0);
        assert_eq!(none.ci_low, 0.0);
        assert!(none.ci_high > 0.0 && none.ci_high < 0.05);

        let all = ProbabilityEstimate::from_counts(100, 100);
        assert_eq!(all.p_hat, 1.0);
        assert_eq!(all.ci_high, 1.0);
        assert!(all.ci_low < 1.0 && all.ci_low > 0.95);
    }

    #[test]
    fn interval_contains_p_hat() {
        for (successes, trials) in [(0, 1), (1, 1), (1, 3), (7, 10), (499, 1000), (1, 100_000)] {
            let e = ProbabilityEstimate::from_counts(successes, trials);
            assert!(e.ci_low <= e.p_hat && e.p_hat <= e.ci_high, "{successes}/{trials}");
            assert!((0.0..=1.0).contains(&e.ci_low) && (0.0..=1.0).contains(&e.ci_high));
        }
    }

    #[test]
    fn half_coverage_interval_matches_hand_computation() {
        // Wilson bounds for 500/1000 at z = 1.96: 0.5 -+ z/(2 sqrt(n)) scaled
        let e = ProbabilityEstimate::from_counts(500, 1000);
        assert_relative_eq!(e.p_hat, 0.5, max_relative = 1e-12);
        let z = WILSON_Z_95;
        let expected_half = z * (0.25 / 1000.0 + z * z / 4e6).sqrt() / (1.0 + z * z / 1000.0);
        assert_relative_eq!(e.ci_high - 0.5, expected_half, max_relative = 1e-9);
        assert_relative_eq!(0.5 - e.ci_low, expected_half, max_relative = 1e-9);
    }

    #[test]
    fn interval_narrows_with_trials() {
        let small = ProbabilityEstimate::from_counts(50, 100);
        let large = ProbabilityEstimate::from_counts(5000, 10_000);
        assert!(large.ci_high - large.ci_low < small.ci_high - small.ci_low);
    }
}
