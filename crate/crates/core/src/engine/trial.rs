//! Per-trial model: the reduced description one synchronization attempt
//! actually depends on, and the aggregate simulation of a single attempt.
//!
//! A full scan touches every window `samples_per_window` times, so the
//! accumulated counts are Binomial draws per window. Only the handful of
//! signal windows and whichever noise windows happened to click can decide
//! the outcome, which is what [`TrialModel::simulate`] exploits.

use rand::Rng;

use super::noise::{fast_noise_max_sample, sample_binomial};
use super::EngineError;
use crate::decision::{classify, resolve_argmax, GroundTruth, TrialOutcome};

/// Reduced description of one synchronization attempt.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialModel {
    /// Number of time windows in the frame.
    pub window_count: u64,
    /// Accumulation passes per window.
    pub samples_per_window: u32,
    /// `(window, click probability)` for windows carrying signal light,
    /// ascending by window index.
    pub signal: Vec<(u64, f64)>,
    /// Click probability of a gate seeing dark counts only.
    pub noise_click_probability: f64,
    /// Which window(s) the clock pulse truly occupies.
    pub truth: GroundTruth,
}

fn check_probability(name: &str, p: f64) -> Result<(), EngineError> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(EngineError::Config(format!(
            "{name}: must be a probability within [0, 1], got {p}"
        )));
    }
    Ok(())
}

impl TrialModel {
    /// Model with the whole pulse inside one window.
    pub fn single(
        window_count: u64,
        samples_per_window: u32,
        window: u64,
        signal_click_probability: f64,
        noise_click_probability: f64,
    ) -> Result<Self, EngineError> {
        Self::from_parts(
            window_count,
            samples_per_window,
            GroundTruth::Single(window),
            &[signal_click_probability],
            noise_click_probability,
        )
    }

    /// Model with the pulse split across `lead` and the next window.
    pub fn pair(
        window_count: u64,
        samples_per_window: u32,
        lead: u64,
        lead_fraction: f64,
        lead_click_probability: f64,
        trail_click_probability: f64,
        noise_click_probability: f64,
    ) -> Result<Self, EngineError> {
        let trail = (lead + 1) % window_count.max(1);
        Self::from_parts(
            window_count,
            samples_per_window,
            GroundTruth::Pair { lead, trail, lead_fraction },
            &[lead_click_probability, trail_click_probability],
            noise_click_probability,
        )
    }

    /// Build a model from a ground truth and the click probabilities of its
    /// windows, given in the order `truth.windows()` lists them.
    pub fn from_parts(
        window_count: u64,
        samples_per_window: u32,
        truth: GroundTruth,
        signal_click_probabilities: &[f64],
        noise_click_probability: f64,
    ) -> Result<Self, EngineError> {
        if window_count < 2 {
            return Err(EngineError::Config(format!(
                "window_count: must be at least 2, got {window_count}"
            )));
        }
        if samples_per_window == 0 {
            return Err(EngineError::Config(
                "samples_per_window: must be at least 1, got 0".into(),
            ));
        }
        let truth_windows = truth.windows();
        if signal_click_probabilities.len() != truth_windows.len() {
            return Err(EngineError::Config(format!(
                "signal probabilities: expected {} values for this ground truth, got {}",
                truth_windows.len(),
                signal_click_probabilities.len()
            )));
        }
        check_probability("noise_click_probability", noise_click_probability)?;
        let mut signal = Vec::with_capacity(truth_windows.len());
        for (&window, &p) in truth_windows.iter().zip(signal_click_probabilities) {
            if window >= window_count {
                return Err(EngineError::Config(format!(
                    "signal window: must be below window_count {window_count}, got {window}"
                )));
            }
            check_probability("signal click probability", p)?;
            signal.push((window, p));
        }
        signal.sort_unstable_by_key(|&(w, _)| w);
        if signal.windows(2).any(|pair| pair[0].0 == pair[1].0) {
            return Err(EngineError::Config(
                "signal windows: ground truth windows must be distinct".into(),
            ));
        }
        if let GroundTruth::Pair { lead, trail, .. } = truth {
            if trail != (lead + 1) % window_count {
                return Err(EngineError::Config(format!(
                    "ground truth: trail window {trail} does not follow lead window {lead}"
                )));
            }
        }
        Ok(Self {
            window_count,
            samples_per_window,
            signal,
            noise_click_probability,
            truth,
        })
    }

    /// Number of windows carrying dark counts only.
    pub fn noise_window_count(&self) -> u64 {
        self.window_count - self.signal.len() as u64
    }

    /// Map a noise-local index (counting only noise windows in ascending
    /// order) to its frame window index.
    fn noise_window(&self, local: u64) -> u64 {
        let mut window = local;
        for &(signal_window, _) in &self.signal {
            if window >= signal_window {
                window += 1;
            }
        }
        window
    }

    /// Simulate one full synchronization attempt and classify it.
    pub fn simulate(&self, rng: &mut impl Rng) -> TrialOutcome {
        let n = self.samples_per_window as u64;
        let mut candidates: Vec<(u64, u32)> = self
            .signal
            .iter()
            .map(|&(window, p)| (window, sample_binomial(n, p, rng) as u32))
            .collect();
        let noise = fast_noise_max_sample(
            self.noise_window_count(),
            self.samples_per_window,
            self.noise_click_probability,
            rng,
        );
        candidates.extend(
            noise
                .occupied
                .iter()
                .map(|&(local, count)| (self.noise_window(local), count)),
        );
        let max_count = candidates.iter().map(|&(_, c)| c).max().unwrap_or(0);
        let mut argmax: Vec<u64> = candidates
            .iter()
            .filter(|&&(_, c)| c == max_count && max_count > 0)
            .map(|&(w, _)| w)
            .collect();
        argmax.sort_unstable();
        let decision = resolve_argmax(max_count, &argmax, self.window_count);
        classify(&decision, &self.truth)
    }
}
