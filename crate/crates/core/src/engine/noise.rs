//! Aggregate sampling of the noise-window maximum.
//!
//! The noise counts of `m` windows are i.i.d. Binomial(N, p), which makes
//! the grand total of noise clicks Binomial(m*N, p), and, given the total,
//! the clicked gate slots a uniform draw without replacement. Sampling the
//! total and scattering it over slots therefore reproduces the joint count
//! distribution exactly while touching only the windows that clicked; at
//! reference scale half a million windows never get materialized.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use std::collections::{HashMap, HashSet};

/// Outcome of one aggregate draw over the noise windows.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseMaxSample {
    /// Largest click count among the noise windows.
    pub max_count: u32,
    /// Number of windows holding `max_count`.
    pub multiplicity: u64,
    /// `(window, count)` for every window with at least one click,
    /// ascending by window index.
    pub occupied: Vec<(u64, u32)>,
}

impl NoiseMaxSample {
    /// Windows achieving the maximum. Meaningful only when
    /// `max_count > 0`; with an all-zero draw every window is trivially
    /// maximal and `multiplicity` alone describes that.
    pub fn max_positions(&self) -> Vec<u64> {
        self.occupied
            .iter()
            .filter(|(_, c)| *c == self.max_count && self.max_count > 0)
            .map(|(w, _)| *w)
            .collect()
    }
}

/// Draw once from a binomial, tolerating the degenerate probabilities.
pub(crate) fn sample_binomial(n: u64, p: f64, rng: &mut impl Rng) -> u64 {
    debug_assert!((0.0..=1.0).contains(&p));
    if n == 0 || p <= 0.0 {
        0
    } else if p >= 1.0 {
        n
    } else {
        Binomial::new(n, p).expect("probability validated").sample(rng)
    }
}

/// Sample the maximum click count over `window_count` i.i.d.
/// Binomial(`samples_per_window`, `p`) noise windows, with the achiever
/// multiplicity and the clicked windows, without materializing per-window
/// counts.
pub fn fast_noise_max_sample(
    window_count: u64,
    samples_per_window: u32,
    p: f64,
    rng: &mut impl Rng,
) -> NoiseMaxSample {
    if window_count == 0 || samples_per_window == 0 {
        return NoiseMaxSample { max_count: 0, multiplicity: window_count, occupied: Vec::new() };
    }
    let slots = window_count * samples_per_window as u64;
    let total = sample_binomial(slots, p, rng);
    if total == 0 {
        return NoiseMaxSample { max_count: 0, multiplicity: window_count, occupied: Vec::new() };
    }
    let mut clicked_slots = HashSet::with_capacity(total as usize);
    let mut per_window: HashMap<u64, u32> = HashMap::new();
    while (clicked_slots.len() as u64) < total {
        let slot = rng.random_range(0..slots);
        if clicked_slots.insert(slot) {
            *per_window.entry(slot / samples_per_window as u64).or_insert(0) += 1;
        }
    }
    let mut occupied: Vec<(u64, u32)> = per_window.into_iter().collect();
    occupied.sort_unstable();
    let max_count = occupied.iter().map(|(_, c)| *c).max().unwrap_or(0);
    let multiplicity = occupied.iter().filter(|(_, c)| *c == max_count).count() as u64;
    NoiseMaxSample { max_count, multiplicity, occupied }
}
