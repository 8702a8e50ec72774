//! Per-gate click statistics of the gated detector.
//!
//! A gate registers at most one event. The click probability combines the
//! mean signal photoelectron number and the dark counts accumulated while
//! the gate is open, Poisson-distributed in both cases:
//! `p = 1 - exp(-(signal_mean_pe + dark_rate * gate_width))`.

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DetectorError {
    #[error("{field} must be {requirement}, got {value}")]
    OutOfRange {
        field: &'static str,
        requirement: &'static str,
        value: f64,
    },
}

/// Everything the click model needs to know about one gate opening.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateContext {
    /// Mean signal photoelectrons arriving within this gate.
    pub signal_mean_pe: f64,
    pub dark_rate_hz: f64,
    pub gate_width_ns: f64,
}

impl GateContext {
    pub fn new(signal_mean_pe: f64, dark_rate_hz: f64, gate_width_ns: f64) -> Self {
        Self { signal_mean_pe, dark_rate_hz, gate_width_ns }
    }
}

/// Position of the optical pulse relative to the window that contains its
/// leading edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulsePlacement {
    /// Offset of the pulse's leading edge from the window start, in
    /// [0, window width).
    pub offset_ns: f64,
    pub pulse_width_ns: f64,
}

impl PulsePlacement {
    pub fn new(offset_ns: f64, pulse_width_ns: f64) -> Self {
        Self { offset_ns, pulse_width_ns }
    }
}

/// Mean dark events accumulated over one gate opening.
pub fn dark_mean_pe(dark_rate_hz: f64, gate_width_ns: f64) -> f64 {
    dark_rate_hz * gate_width_ns * 1e-9
}

/// Split the pulse energy between the window holding its leading edge and
/// the next window, assuming a rectangular pulse profile. The fractions
/// sum to 1.
///
/// # Errors
/// Rejects an offset outside `[0, gate_width)`, a non-positive pulse
/// width, and a pulse wider than the gate.
pub fn window_split(placement: &PulsePlacement, gate_width_ns: f64) -> Result<(f64, f64), DetectorError> {
    if !(placement.pulse_width_ns > 0.0 && placement.pulse_width_ns.is_finite()) {
        return Err(DetectorError::OutOfRange {
            field: "pulse_width_ns",
            requirement: "> 0",
            value: placement.pulse_width_ns,
        });
    }
    if placement.pulse_width_ns > gate_width_ns {
        return Err(DetectorError::OutOfRange {
            field: "pulse_width_ns",
            requirement: "<= gate_width_ns",
            value: placement.pulse_width_ns,
        });
    }
    if !(0.0..gate_width_ns).contains(&placement.offset_ns) {
        return Err(DetectorError::OutOfRange {
            field: "offset_ns",
            requirement: "within [0, gate_width_ns)",
            value: placement.offset_ns,
        });
    }
    let in_first = ((gate_width_ns - placement.offset_ns) / placement.pulse_width_ns).min(1.0);
    Ok((in_first, 1.0 - in_first))
}

/// Probability that the gate registers an event.
pub fn click_probability(ctx: &GateContext) -> f64 {
    debug_assert!(ctx.signal_mean_pe >= 0.0);
    debug_assert!(ctx.dark_rate_hz >= 0.0);
    debug_assert!(ctx.gate_width_ns > 0.0);
    1.0 - (-(ctx.signal_mean_pe + dark_mean_pe(ctx.dark_rate_hz, ctx.gate_width_ns))).exp()
}

/// Draw one gate outcome: `true` when the gate clicks.
pub fn sample_gate(ctx: &GateContext, rng: &mut impl Rng) -> bool {
    rng.random::<f64>() < click_probability(ctx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn split_of_aligned_pulse() {
        let placement = PulsePlacement::new(0.0, 1.0);
        assert_eq!(window_split(&placement, 2.0).unwrap(), (1.0, 0.0));
    }

    #[test]
    fn split_of_straddling_pulse() {
        let (first, second) = window_split(&PulsePlacement::new(1.5, 1.0), 2.0).unwrap();
        assert_relative_eq!(first, 0.5, max_relative = 1e-12);
        assert_relative_eq!(second, 0.5, max_relative = 1e-12);
        let (first, second) = window_split(&PulsePlacement::new(1.8, 1.0), 2.0).unwrap();
        assert_relative_eq!(first, 0.2, max_relative = 1e-12);
        assert_relative_eq!(second, 0.8, max_relative = 1e-12);
    }

    #[test]
    fn split_rejects_bad_placement() {
        assert!(window_split(&PulsePlacement::new(-0.1, 1.0), 2.0).is_err());
        assert!(window_split(&PulsePlacement::new(2.0, 1.0), 2.0).is_err());
        assert!(window_split(&PulsePlacement::new(0.0, 0.0), 2.0).is_err());
        assert!(window_split(&PulsePlacement::new(0.0, 3.0), 2.0).is_err());
    }

    #[test]
    fn split_fractions_sum_to_one_and_vary_continuously() {
        let width = 2.0;
        let mut previous = None;
        for step in 0..200 {
            let offset = step as f64 * (width / 200.0);
            let (first, second) = window_split(&PulsePlacement::new(offset, 1.0), width).unwrap();
            assert_relative_eq!(first + second, 1.0, max_relative = 1e-12);
            assert!((0.0..=1.0).contains(&first));
            if let Some(last) = previous {
                let jump: f64 = first - last;
                assert!(jump.abs() <= 0.011, "offset {offset} jump {jump}");
            }
            previous = Some(first);
        }
    }

    #[test]
    fn click_probability_for_reference_gate() {
        let p = click_probability(&GateContext::new(0.005, 100.0, 2.0));
        assert_relative_eq!(p, 4.987_719_809_793_625e-3, max_relative = 1e-12);
    }

    #[test]
    fn click_probability_dark_only() {
        let p = click_probability(&GateContext::new(0.0, 400.0, 2.0));
        assert_relative_eq!(p, 7.999_996_800_000_853e-7, max_relative = 1e-12);
    }

    #[test]
    fn click_probability_monotone_and_bounded() {
        let mut last = -1.0;
        for step in 0..100 {
            let mean = step as f64 * 0.1;
            let p = click_probability(&GateContext::new(mean, 100.0, 2.0));
            assert!(p > last);
            assert!(p < 1.0);
            last = p;
        }
    }

    #[test]
    fn no_click_probabilities_multiply() {
        let a = GateContext::new(0.2, 100.0, 2.0);
        let b = GateContext::new(0.7, 300.0, 2.0);
        let combined = GateContext::new(
            a.signal_mean_pe + b.signal_mean_pe,
            a.dark_rate_hz + b.dark_rate_hz,
            2.0,
        );
        let product = (1.0 - click_probability(&a)) * (1.0 - click_probability(&b));
        assert_relative_eq!(1.0 - click_probability(&combined), product, max_relative = 1e-12);
    }

    #[test]
    fn sampling_matches_probability() {
        let ctx = GateContext::new(0.005, 100.0, 2.0);
        let p = click_probability(&ctx);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = 1_000_000u64;
        let clicks = (0..draws).filter(|_| sample_gate(&ctx, &mut rng)).count() as f64;
        let sigma = (p * (1.0 - p) / draws as f64).sqrt();
        let frequency = clicks / draws as f64;
        assert!((frequency - p).abs() <= 3.0 * sigma, "freq {frequency} expected {p}");
    }

    #[test]
    fn degenerate_rates_never_and_always_click() {
        let silent = GateContext::new(0.0, 0.0, 2.0);
        let blinding = GateContext::new(50.0, 0.0, 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            assert!(!sample_gate(&silent, &mut rng));
            assert!(sample_gate(&blinding, &mut rng));
        }
    }
}
