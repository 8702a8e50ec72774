//! Locating the signal window from accumulated click counts.
//!
//! After the scan, each window carries the number of gates that clicked
//! while sampling it. The window with the strictly largest count is
//! declared the signal window; a tie between two circularly adjacent
//! windows is resolved to the lower index (a straddling pulse feeds both
//! members of such a pair); any other tie is a non-detection.

use crate::detector::{sample_gate, GateContext};
use crate::scan::ScanPlan;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecisionError {
    #[error("signal window {window} is outside the grid of {window_count} windows")]
    WindowOutOfGrid { window: u64, window_count: u64 },
}

/// Click totals for every window of one scan pass.
#[derive(Debug, Clone, PartialEq)]
pub struct CountsArray {
    pub counts: Vec<u32>,
    /// Gates opened per window; every count is at most this.
    pub samples_per_window: u32,
}

/// Where the pulse actually is: a single window, or two adjacent windows
/// sharing the pulse energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GroundTruth {
    Single(u64),
    /// The pulse straddles `lead` and the circularly following window.
    Pair {
        lead: u64,
        /// `(lead + 1) mod window_count`.
        trail: u64,
        /// Fraction of the pulse energy inside `lead`; the rest is in
        /// `trail`.
        lead_fraction: f64,
    },
}

impl GroundTruth {
    pub fn contains(&self, window: u64) -> bool {
        match *self {
            GroundTruth::Single(k) => window == k,
            GroundTruth::Pair { lead, trail, .. } => window == lead || window == trail,
        }
    }

    /// Signal windows in ascending index order.
    pub fn windows(&self) -> Vec<u64> {
        match *self {
            GroundTruth::Single(k) => vec![k],
            GroundTruth::Pair { lead, trail, .. } => {
                let mut pair = vec![lead, trail];
                pair.sort_unstable();
                pair
            }
        }
    }
}

/// Outcome of the scan: the selected window, if any, together with the
/// set of windows that shared the maximum count.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub selected: Option<u64>,
    /// Windows holding the maximum count, ascending. Empty when no gate
    /// clicked at all.
    pub tie: Vec<u64>,
}

impl Decision {
    pub fn no_detection() -> Self {
        Self { selected: None, tie: Vec::new() }
    }
}

/// How one scan pass relates to the ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrialOutcome {
    CorrectSingle,
    CorrectAdjacent,
    Erroneous,
    Miss,
}

impl TrialOutcome {
    pub const ALL: [TrialOutcome; 4] = [
        TrialOutcome::CorrectSingle,
        TrialOutcome::CorrectAdjacent,
        TrialOutcome::Erroneous,
        TrialOutcome::Miss,
    ];

    pub fn index(self) -> usize {
        match self {
            TrialOutcome::CorrectSingle => 0,
            TrialOutcome::CorrectAdjacent => 1,
            TrialOutcome::Erroneous => 2,
            TrialOutcome::Miss => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            TrialOutcome::CorrectSingle => "correct_single",
            TrialOutcome::CorrectAdjacent => "correct_adjacent",
            TrialOutcome::Erroneous => "erroneous",
            TrialOutcome::Miss => "miss",
        }
    }

    pub fn is_correct(self) -> bool {
        matches!(self, TrialOutcome::CorrectSingle | TrialOutcome::CorrectAdjacent)
    }
}

/// Are `a` and `b` adjacent on the circular grid of `window_count`
/// windows? On a two-window grid the two windows count as adjacent.
pub fn windows_adjacent(a: u64, b: u64, window_count: u64) -> bool {
    let (low, high) = if a < b { (a, b) } else { (b, a) };
    a != b && (high - low == 1 || (low == 0 && high == window_count - 1))
}

/// Apply the selection rules to a known maximum and its achievers.
/// `argmax` must be ascending and hold every window with `max_count`;
/// this is the single decision kernel used by the dense scan, the
/// sparse trial path, and the exact oracle.
pub fn resolve_argmax(max_count: u32, argmax: &[u64], window_count: u64) -> Decision {
    if max_count == 0 {
        return Decision::no_detection();
    }
    debug_assert!(argmax.windows(2).all(|w| w[0] < w[1]));
    match *argmax {
        [single] => Decision { selected: Some(single), tie: vec![single] },
        [first, second] if windows_adjacent(first, second, window_count) => Decision {
            selected: Some(first),
            tie: vec![first, second],
        },
        _ => Decision { selected: None, tie: argmax.to_vec() },
    }
}

/// Select the signal window from a full counts array.
pub fn decide(counts: &CountsArray) -> Decision {
    let max_count = counts.counts.iter().copied().max().unwrap_or(0);
    if max_count == 0 {
        return Decision::no_detection();
    }
    let argmax: Vec<u64> = counts
        .counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c == max_count)
        .map(|(w, _)| w as u64)
        .collect();
    resolve_argmax(max_count, &argmax, counts.counts.len() as u64)
}

/// Compare a decision with the ground truth. A correct outcome requires
/// the whole tie set to lie inside the truth set: a signal window that
/// merely ties a noise window does not strictly exceed it, so such a
/// trial counts as a failure even if the tie resolution happened to land
/// on the signal.
pub fn classify(decision: &Decision, truth: &GroundTruth) -> TrialOutcome {
    let Some(selected) = decision.selected else {
        return TrialOutcome::Miss;
    };
    match *truth {
        GroundTruth::Single(k) => {
            if selected == k && decision.tie == [k] {
                TrialOutcome::CorrectSingle
            } else {
                TrialOutcome::Erroneous
            }
        }
        GroundTruth::Pair { .. } => {
            if truth.contains(selected) && decision.tie.iter().all(|&w| truth.contains(w)) {
                TrialOutcome::CorrectAdjacent
            } else {
                TrialOutcome::Erroneous
            }
        }
    }
}

/// Per-window gate contexts for one scan: the shared noise context plus
/// overrides for the signal windows.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowContexts {
    pub noise: GateContext,
    /// `(window, context)` pairs for windows that see signal energy.
    pub signal: Vec<(u64, GateContext)>,
}

impl WindowContexts {
    pub fn context_for(&self, window: u64) -> &GateContext {
        self.signal
            .iter()
            .find(|(w, _)| *w == window)
            .map(|(_, ctx)| ctx)
            .unwrap_or(&self.noise)
    }
}

/// Run every gate of the plan and tally clicks per window. Materializes
/// the full counts array, so it is meant for small grids; the trial
/// engine replaces it with an aggregate path at full scale.
pub fn accumulate(
    plan: &ScanPlan,
    contexts: &WindowContexts,
    rng: &mut impl Rng,
) -> Result<CountsArray, DecisionError> {
    let window_count = plan.grid.window_count;
    for &(window, _) in &contexts.signal {
        if window >= window_count {
            return Err(DecisionError::WindowOutOfGrid { window, window_count });
        }
    }
    let mut counts = vec![0u32; window_count as usize];
    for activation in plan.activations() {
        if sample_gate(contexts.context_for(activation.window), rng) {
            counts[activation.window as usize] += 1;
        }
    }
    Ok(CountsArray { counts, samples_per_window: plan.samples_per_window })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phys::SpadParams;
    use crate::scan::{build_scan_plan, FrameGrid};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dense(counts: &[u32]) -> CountsArray {
        CountsArray {
            counts: counts.to_vec(),
            samples_per_window: counts.iter().copied().max().unwrap_or(0).max(1),
        }
    }

    #[test]
    fn strict_maximum_selects_its_window() {
        let d = decide(&dense(&[0, 3, 1, 0]));
        assert_eq!(d.selected, Some(1));
        assert_eq!(d.tie, vec![1]);
    }

    #[test]
    fn adjacent_tie_resolves_to_lower_index() {
        let d = decide(&dense(&[2, 2, 0, 0]));
        assert_eq!(d.selected, Some(0));
        assert_eq!(d.tie, vec![0, 1]);
    }

    #[test]
    fn wraparound_tie_is_adjacent() {
        let d = decide(&dense(&[2, 0, 0, 2]));
        assert_eq!(d.selected, Some(0));
        assert_eq!(d.tie, vec![0, 3]);
    }

    #[test]
    fn non_adjacent_tie_is_no_detection() {
        let d = decide(&dense(&[2, 0, 2, 0]));
        assert_eq!(d.selected, None);
        assert_eq!(d.tie, vec![0, 2]);
    }

    #[test]
    fn three_way_tie_is_no_detection() {
        assert_eq!(decide(&dense(&[2, 2, 2, 0])).selected, None);
    }

    #[test]
    fn silence_is_no_detection() {
        let d = decide(&dense(&[0, 0, 0, 0]));
        assert_eq!(d, Decision::no_detection());
    }

    #[test]
    fn two_window_grid_ties_are_adjacent() {
        let d = decide(&dense(&[1, 1]));
        assert_eq!(d.selected, Some(0));
        assert_eq!(d.tie, vec![0, 1]);
    }

    #[test]
    fn classify_single_truth() {
        let truth = GroundTruth::Single(7);
        let win = Decision { selected: Some(7), tie: vec![7] };
        assert_eq!(classify(&win, &truth), TrialOutcome::CorrectSingle);
        let wrong = Decision { selected: Some(3), tie: vec![3] };
        assert_eq!(classify(&wrong, &truth), TrialOutcome::Erroneous);
        assert_eq!(classify(&Decision::no_detection(), &truth), TrialOutcome::Miss);
    }

    #[test]
    fn classify_pair_truth_accepts_either_member() {
        let truth = GroundTruth::Pair { lead: 4, trail: 5, lead_fraction: 0.5 };
        let tied = Decision { selected: Some(4), tie: vec![4, 5] };
        assert_eq!(classify(&tied, &truth), TrialOutcome::CorrectAdjacent);
        let second = Decision { selected: Some(5), tie: vec![5] };
        assert_eq!(classify(&second, &truth), TrialOutcome::CorrectAdjacent);
    }

    #[test]
    fn signal_tying_noise_is_not_correct() {
        // counts [2,2,0,0] with the pulse in window 0: window 0 does not
        // strictly exceed window 1, so the lucky tie-break is still a failure
        let truth = GroundTruth::Single(0);
        let decision = decide(&dense(&[2, 2, 0, 0]));
        assert_eq!(decision.selected, Some(0));
        assert_eq!(classify(&decision, &truth), TrialOutcome::Erroneous);

        // same counts with a genuine straddling pulse are a success
        let pair = GroundTruth::Pair { lead: 0, trail: 1, lead_fraction: 0.5 };
        assert_eq!(classify(&decision, &pair), TrialOutcome::CorrectAdjacent);

        // a pair member tying an outside noise window fails as well
        let outside = decide(&dense(&[0, 2, 0, 2]));
        assert_eq!(outside.selected, None);
        assert_eq!(classify(&outside, &pair), TrialOutcome::Miss);
        let touching = decide(&dense(&[0, 2, 2, 0]));
        assert_eq!(touching.selected, Some(1));
        assert_eq!(classify(&touching, &pair), TrialOutcome::Erroneous);
    }

    #[test]
    fn wraparound_pair_truth() {
        let truth = GroundTruth::Pair { lead: 3, trail: 0, lead_fraction: 0.3 };
        let decision = decide(&dense(&[2, 0, 0, 2]));
        assert_eq!(decision.selected, Some(0));
        assert_eq!(classify(&decision, &truth), TrialOutcome::CorrectAdjacent);
        assert!(truth.contains(0) && truth.contains(3) && !truth.contains(1));
        assert_eq!(truth.windows(), vec![0, 3]);
    }

    fn test_contexts(signal: &[(u64, f64)], dark_rate_hz: f64) -> WindowContexts {
        WindowContexts {
            noise: GateContext::new(0.0, dark_rate_hz, 2.0),
            signal: signal
                .iter()
                .map(|&(w, pe)| (w, GateContext::new(pe, dark_rate_hz, 2.0)))
                .collect(),
        }
    }

    fn small_plan(window_count: u64, samples: u32) -> ScanPlan {
        let grid = FrameGrid::new(2.0, window_count).unwrap();
        let spad = SpadParams::new(1.0, 0.0, 0.0, 2.0, 0.0).unwrap();
        build_scan_plan(&grid, &spad, 4.min(window_count as u32), samples).unwrap()
    }

    #[test]
    fn accumulate_with_dead_gates_is_all_zero() {
        let plan = small_plan(8, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let counts = accumulate(&plan, &test_contexts(&[(3, 0.0)], 0.0), &mut rng).unwrap();
        assert!(counts.counts.iter().all(|&c| c == 0));
    }

    #[test]
    fn accumulate_with_certain_clicks_saturates_signal_window() {
        let plan = small_plan(8, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let counts = accumulate(&plan, &test_contexts(&[(3, 1e9)], 0.0), &mut rng).unwrap();
        assert_eq!(counts.counts[3], 5);
        assert!(counts.counts.iter().enumerate().all(|(w, &c)| w == 3 || c == 0));
    }

    #[test]
    fn accumulate_rejects_window_outside_grid() {
        let plan = small_plan(8, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let err = accumulate(&plan, &test_contexts(&[(8, 0.5)], 0.0), &mut rng).unwrap_err();
        assert_eq!(err, DecisionError::WindowOutOfGrid { window: 8, window_count: 8 });
    }

    #[test]
    fn accumulate_mean_signal_count_tracks_click_probability() {
        // mean photoelectrons 0.5 plus 100 Hz dark counts over 2 ns gates:
        // expected count is 256 * (1 - exp(-0.5000002)) = 100.73 per pass
        let plan = small_plan(8, 256);
        let contexts = test_contexts(&[(2, 0.5)], 100.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let passes = 200;
        let mut total = 0u64;
        for _ in 0..passes {
            total += accumulate(&plan, &contexts, &mut rng).unwrap().counts[2] as u64;
        }
        let mean = total as f64 / passes as f64;
        let p = 1.0 - (-0.500_000_2f64).exp();
        let expected = 256.0 * p;
        let sigma_of_mean = (256.0 * p * (1.0 - p) / passes as f64).sqrt();
        assert!(
            (mean - expected).abs() <= 3.0 * sigma_of_mean,
            "mean {mean} expected {expected} sigma {sigma_of_mean}"
        );
    }

    #[test]
    fn counts_never_exceed_samples_per_window() {
        let plan = small_plan(4, 7);
        let contexts = test_contexts(&[(0, 0.8), (1, 0.4)], 5e7);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let counts = accumulate(&plan, &contexts, &mut rng).unwrap();
            assert!(counts.counts.iter().all(|&c| c <= plan.samples_per_window));
        }
    }
}
