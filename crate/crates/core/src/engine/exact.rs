//! Exact outcome distribution for small configurations.
//!
//! The noise windows are i.i.d., so their joint outcome can be partitioned
//! by the pair (maximum level v, set of windows achieving v). Summing
//! `P(signal counts) * P(achievers at v) * P(rest below v)` over signal
//! count tuples, levels, and achiever subsets visits every distinguishable
//! outcome once. With at most 8 windows and 16 samples the subset loop
//! stays below 2^7 masks, keeping the enumeration cheap.

use super::trial::TrialModel;
use super::EngineError;
use crate::decision::{classify, resolve_argmax, TrialOutcome};

/// Largest frame the enumeration accepts.
pub const EXACT_MAX_WINDOWS: u64 = 8;
/// Largest per-window sample count the enumeration accepts.
pub const EXACT_MAX_SAMPLES: u32 = 16;

/// Exact probability of each trial outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactDistribution {
    probabilities: [f64; 4],
}

impl ExactDistribution {
    /// Probability of one outcome class.
    pub fn probability(&self, outcome: TrialOutcome) -> f64 {
        self.probabilities[outcome.index()]
    }

    /// Probability of a correct synchronization, single or adjacent.
    pub fn p_correct(&self) -> f64 {
        self.probability(TrialOutcome::CorrectSingle)
            + self.probability(TrialOutcome::CorrectAdjacent)
    }

    /// Sum over all classes; equals 1 up to float rounding.
    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }
}

/// Binomial(n, p) probability mass for k = 0..=n.
fn binomial_pmf(n: u32, p: f64) -> Vec<f64> {
    let mut coeff = vec![1.0f64; n as usize + 1];
    for k in 1..=n as usize {
        coeff[k] = coeff[k - 1] * (n as usize - k + 1) as f64 / k as f64;
    }
    let q = 1.0 - p;
    (0..=n)
        .map(|k| coeff[k as usize] * p.powi(k as i32) * q.powi((n - k) as i32))
        .collect()
}

/// Compute the exact outcome distribution of `model` by enumeration.
///
/// Errors with [`EngineError::ExactBounds`] when the configuration exceeds
/// [`EXACT_MAX_WINDOWS`] or [`EXACT_MAX_SAMPLES`]; beyond that the subset
/// enumeration is no longer meaningfully exhaustible.
pub fn exact_probability(model: &TrialModel) -> Result<ExactDistribution, EngineError> {
    if model.window_count > EXACT_MAX_WINDOWS || model.samples_per_window > EXACT_MAX_SAMPLES {
        return Err(EngineError::ExactBounds {
            window_count: model.window_count,
            samples: model.samples_per_window,
        });
    }
    let n = model.samples_per_window;
    let noise_pmf = binomial_pmf(n, model.noise_click_probability);
    let mut noise_cdf_below = vec![0.0f64; n as usize + 2];
    for v in 0..=n as usize {
        noise_cdf_below[v + 1] = noise_cdf_below[v] + noise_pmf[v];
    }
    let signal_pmfs: Vec<Vec<f64>> =
        model.signal.iter().map(|&(_, p)| binomial_pmf(n, p)).collect();
    let noise_windows: Vec<u64> = {
        let mut all: Vec<u64> = (0..model.window_count).collect();
        all.retain(|w| !model.signal.iter().any(|&(s, _)| s == *w));
        all
    };
    let m = noise_windows.len() as u32;

    let mut probabilities = [0.0f64; 4];
    let mut signal_counts = vec![0u32; model.signal.len()];
    loop {
        let signal_prob: f64 = signal_counts
            .iter()
            .zip(&signal_pmfs)
            .map(|(&k, pmf)| pmf[k as usize])
            .product();
        if signal_prob > 0.0 {
            if m == 0 {
                accumulate_case(
                    model,
                    &signal_counts,
                    0,
                    &[],
                    signal_prob,
                    &mut probabilities,
                );
            } else {
                for v in 0..=n {
                    let first_mask: u32 = if v == 0 { (1 << m) - 1 } else { 1 };
                    for mask in first_mask..(1u32 << m) {
                        if v == 0 && mask != (1 << m) - 1 {
                            continue;
                        }
                        let achievers = mask.count_ones();
                        let below = m - achievers;
                        let noise_prob = noise_pmf[v as usize].powi(achievers as i32)
                            * noise_cdf_below[v as usize].powi(below as i32);
                        if noise_prob == 0.0 {
                            continue;
                        }
                        let achieving: Vec<(u64, u32)> = (0..m)
                            .filter(|bit| mask & (1 << bit) != 0)
                            .map(|bit| (noise_windows[bit as usize], v))
                            .collect();
                        accumulate_case(
                            model,
                            &signal_counts,
                            v,
                            &achieving,
                            signal_prob * noise_prob,
                            &mut probabilities,
                        );
                    }
                }
            }
        }
        let mut digit = 0;
        loop {
            if digit == signal_counts.len() {
                return Ok(ExactDistribution { probabilities });
            }
            if signal_counts[digit] < n {
                signal_counts[digit] += 1;
                break;
            }
            signal_counts[digit] = 0;
            digit += 1;
        }
    }
}

fn accumulate_case(
    model: &TrialModel,
    signal_counts: &[u32],
    noise_level: u32,
    noise_achievers: &[(u64, u32)],
    probability: f64,
    probabilities: &mut [f64; 4],
) {
    let max_count = signal_counts
        .iter()
        .copied()
        .chain(std::iter::once(noise_level))
        .max()
        .unwrap_or(noise_level);
    let mut argmax: Vec<u64> = Vec::new();
    if max_count > 0 {
        argmax.extend(
            model
                .signal
                .iter()
                .zip(signal_counts)
                .filter(|(_, &k)| k == max_count)
                .map(|(&(w, _), _)| w),
        );
        if noise_level == max_count {
            argmax.extend(noise_achievers.iter().map(|&(w, _)| w));
        }
        argmax.sort_unstable();
    }
    let decision = resolve_argmax(max_count, &argmax, model.window_count);
    let outcome = classify(&decision, &model.truth);
    probabilities[outcome.index()] += probability;
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn distribution_sums_to_one() {
        let model = TrialModel::single(4, 2, 0, 0.3, 0.01).unwrap();
        let dist = exact_probability(&model).unwrap();
        assert_relative_eq!(dist.total(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn four_window_two_sample_reference_values() {
        let model = TrialModel::single(4, 2, 0, 0.3, 0.01).unwrap();
        let dist = exact_probability(&model).unwrap();
        assert_relative_eq!(
            dist.probability(TrialOutcome::CorrectSingle),
            0.485_394_665_448_33,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            dist.probability(TrialOutcome::Erroneous),
            0.044_603_253_942_39,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            dist.probability(TrialOutcome::Miss),
            0.470_002_080_609_28,
            max_relative = 1e-12
        );
        assert_eq!(dist.probability(TrialOutcome::CorrectAdjacent), 0.0);
    }

    #[test]
    fn two_window_single_sample_quarters() {
        let model = TrialModel::single(2, 1, 0, 0.5, 0.5).unwrap();
        let dist = exact_probability(&model).unwrap();
        assert_relative_eq!(
            dist.probability(TrialOutcome::CorrectSingle),
            0.25,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            dist.probability(TrialOutcome::Erroneous),
            0.5,
            max_relative = 1e-12
        );
        assert_relative_eq!(dist.probability(TrialOutcome::Miss), 0.25, max_relative = 1e-12);
    }

    #[test]
    fn noiseless_single_window_is_bernoulli_in_disguise() {
        let model = TrialModel::single(8, 5, 2, 0.37, 0.0).unwrap();
        let dist = exact_probability(&model).unwrap();
        let p_all_zero = (1.0f64 - 0.37).powi(5);
        assert_relative_eq!(
            dist.probability(TrialOutcome::CorrectSingle),
            1.0 - p_all_zero,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            dist.probability(TrialOutcome::Miss),
            p_all_zero,
            max_relative = 1e-12
        );
        assert_eq!(dist.probability(TrialOutcome::Erroneous), 0.0);
    }

    #[test]
    fn split_pulse_with_wraparound_counts_adjacent_hits() {
        let model = TrialModel::pair(4, 1, 3, 0.5, 0.6, 0.6, 0.0).unwrap();
        let dist = exact_probability(&model).unwrap();
        assert_relative_eq!(
            dist.probability(TrialOutcome::CorrectAdjacent),
            0.84,
            max_relative = 1e-12
        );
        assert_relative_eq!(dist.probability(TrialOutcome::Miss), 0.16, max_relative = 1e-12);
        assert_eq!(dist.probability(TrialOutcome::CorrectSingle), 0.0);
    }

    #[test]
    fn oversized_requests_are_refused() {
        let wide = TrialModel::single(16, 2, 0, 0.3, 0.01).unwrap();
        assert!(matches!(
            exact_probability(&wide),
            Err(EngineError::ExactBounds { window_count: 16, samples: 2 })
        ));
        let deep = TrialModel::single(4, 32, 0, 0.3, 0.01).unwrap();
        assert!(matches!(exact_probability(&deep), Err(EngineError::ExactBounds { .. })));
    }
}
