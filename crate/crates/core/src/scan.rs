//! Time-frame gridding and the gate-activation schedule used to scan the
//! frame for the clock pulse.
//!
//! The frame (one repetition period, rounded up to a power-of-two number of
//! windows) is divided into `window_count` windows of `window_width_ns`.
//! Each frame opens `gates_per_frame` detector gates spaced a frame
//! fraction apart; every subsequent frame shifts the gates by one window,
//! so the schedule walks all windows round-robin until each has been
//! sampled `samples_per_window` times.

use crate::phys::SpadParams;
use thiserror::Error;

/// Upper bound on `window_count` accepted by [`build_frame_grid`].
pub const DEFAULT_WINDOW_COUNT_CAP: u64 = 1 << 26;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScanError {
    #[error("{field} must be {requirement}, got {value}")]
    OutOfRange {
        field: &'static str,
        requirement: &'static str,
        value: f64,
    },
    #[error("window_count {required} exceeds the cap {cap}")]
    WindowCountExceedsCap { required: u64, cap: u64 },
    #[error("window_count {0} must be a power of two and at least 2")]
    BadWindowCount(u64),
    #[error("gates_per_frame {gates} must be >= 1 and divide window_count {window_count}")]
    BadGatesPerFrame { gates: u32, window_count: u64 },
    #[error("gate spacing {gap_ns} ns is below the required {required_ns} ns (detector dead time / recovery gap)")]
    InfeasibleSpacing { gap_ns: f64, required_ns: f64 },
}

/// The scan frame: a power-of-two count of equal windows.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameGrid {
    pub window_width_ns: f64,
    /// Number of windows per frame; a power of two, at least 2.
    pub window_count: u64,
    /// Frame period; exactly `window_count * window_width_ns`.
    pub frame_period_ns: f64,
}

impl FrameGrid {
    pub fn new(window_width_ns: f64, window_count: u64) -> Result<Self, ScanError> {
        if !(window_width_ns > 0.0 && window_width_ns.is_finite()) {
            return Err(ScanError::OutOfRange {
                field: "window_width_ns",
                requirement: "> 0",
                value: window_width_ns,
            });
        }
        if window_count < 2 || !window_count.is_power_of_two() {
            return Err(ScanError::BadWindowCount(window_count));
        }
        Ok(Self {
            window_width_ns,
            window_count,
            frame_period_ns: window_count as f64 * window_width_ns,
        })
    }
}

/// Choose the scan window width as a multiple of the pulse width. The
/// factor must lie within [2, 4] so a pulse spans at most two windows.
pub fn window_width_from_pulse(pulse_width_ns: f64, factor: f64) -> Result<f64, ScanError> {
    if !(pulse_width_ns > 0.0 && pulse_width_ns.is_finite()) {
        return Err(ScanError::OutOfRange {
            field: "pulse_width_ns",
            requirement: "> 0",
            value: pulse_width_ns,
        });
    }
    if !((2.0..=4.0).contains(&factor) && factor.is_finite()) {
        return Err(ScanError::OutOfRange {
            field: "factor",
            requirement: "within [2, 4]",
            value: factor,
        });
    }
    Ok(pulse_width_ns * factor)
}

/// Smallest power-of-two frame that covers `min_period_ns`, with the
/// default window-count cap.
pub fn build_frame_grid(min_period_ns: f64, window_width_ns: f64) -> Result<FrameGrid, ScanError> {
    build_frame_grid_with_cap(min_period_ns, window_width_ns, DEFAULT_WINDOW_COUNT_CAP)
}

/// As [`build_frame_grid`], with an explicit cap on the window count.
pub fn build_frame_grid_with_cap(
    min_period_ns: f64,
    window_width_ns: f64,
    cap: u64,
) -> Result<FrameGrid, ScanError> {
    if !(min_period_ns > 0.0 && min_period_ns.is_finite()) {
        return Err(ScanError::OutOfRange {
            field: "min_period_ns",
            requirement: "> 0",
            value: min_period_ns,
        });
    }
    if !(window_width_ns > 0.0 && window_width_ns.is_finite()) {
        return Err(ScanError::OutOfRange {
            field: "window_width_ns",
            requirement: "> 0",
            value: window_width_ns,
        });
    }
    let needed = (min_period_ns / window_width_ns).ceil() as u64;
    let window_count = needed.next_power_of_two().max(2);
    if window_count > cap {
        return Err(ScanError::WindowCountExceedsCap { required: window_count, cap });
    }
    FrameGrid::new(window_width_ns, window_count)
}

/// Detection-time delay of gate `a_n` in frame `b_n`, measured on the frame
/// timeline: `(T_s / 4) * (a_n - 1) + window_width * (b_n - 1)`. Both
/// indices are 1-based.
pub fn gate_delay_ns(a_n: u32, b_n: u64, grid: &FrameGrid) -> Result<f64, ScanError> {
    if a_n < 1 {
        return Err(ScanError::OutOfRange { field: "a_n", requirement: ">= 1", value: a_n as f64 });
    }
    if b_n < 1 {
        return Err(ScanError::OutOfRange { field: "b_n", requirement: ">= 1", value: b_n as f64 });
    }
    Ok(grid.frame_period_ns / 4.0 * (a_n - 1) as f64 + grid.window_width_ns * (b_n - 1) as f64)
}

/// One gate activation of the scan schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Activation {
    /// Frame number `b_n`, 1-based.
    pub frame: u64,
    /// Gate number `a_n` within the frame, 1-based.
    pub gate: u32,
    /// Window index this gate samples, in [0, window_count).
    pub window: u64,
    /// Activation time from scan start, ns.
    pub start_time_ns: f64,
}

/// A complete scan schedule. Stored parametrically; activations are
/// generated on demand (the reference configuration has 2^27 of them).
#[derive(Debug, Clone, PartialEq)]
pub struct ScanPlan {
    pub grid: FrameGrid,
    pub gates_per_frame: u32,
    pub samples_per_window: u32,
    /// Frames in the schedule: `samples_per_window * window_count / gates_per_frame`.
    pub frame_count: u64,
}

impl ScanPlan {
    /// Windows stepped over by consecutive gates of one frame.
    fn window_stride(&self) -> u64 {
        self.grid.window_count / self.gates_per_frame as u64
    }

    /// Gate spacing within a frame, ns.
    pub fn gate_spacing_ns(&self) -> f64 {
        self.grid.frame_period_ns / self.gates_per_frame as f64
    }

    /// Smallest spacing between consecutive activations anywhere in the
    /// schedule. Within a frame gates are `T_s / gates_per_frame` apart;
    /// across a frame boundary the gap widens by one window width. A
    /// single-gate frame only ever sees the boundary gap.
    pub fn min_gap_ns(&self) -> f64 {
        if self.activation_count() < 2 {
            return f64::INFINITY;
        }
        if self.gates_per_frame >= 2 {
            self.gate_spacing_ns()
        } else {
            self.grid.frame_period_ns + self.grid.window_width_ns
        }
    }

    pub fn activation_count(&self) -> u64 {
        self.frame_count * self.gates_per_frame as u64
    }

    /// Wall-clock span of the schedule, `frame_count * frame_period`.
    pub fn total_duration_ns(&self) -> f64 {
        self.frame_count as f64 * self.grid.frame_period_ns
    }

    pub fn activation(&self, frame: u64, gate: u32) -> Activation {
        let stride = self.window_stride();
        let window = (stride * (gate - 1) as u64 + (frame - 1)) % self.grid.window_count;
        let start_time_ns = (frame - 1) as f64 * self.grid.frame_period_ns
            + self.gate_spacing_ns() * (gate - 1) as f64
            + self.grid.window_width_ns * (frame - 1) as f64;
        Activation { frame, gate, window, start_time_ns }
    }

    /// All activations in schedule order (frame-major, then gate).
    pub fn activations(&self) -> impl Iterator<Item = Activation> + '_ {
        (1..=self.frame_count)
            .flat_map(move |frame| (1..=self.gates_per_frame).map(move |gate| self.activation(frame, gate)))
    }

    /// Write the schedule as CSV (`frame,gate,window,start_ns`). Meant for
    /// small plans; the row count equals [`ScanPlan::activation_count`].
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "frame,gate,window,start_ns")?;
        for a in self.activations() {
            writeln!(out, "{},{},{},{}", a.frame, a.gate, a.window, a.start_time_ns)?;
        }
        Ok(())
    }
}

/// Build the round-robin scan schedule for a grid and detector.
///
/// # Errors
/// Rejects `gates_per_frame` that is zero or does not divide the window
/// count, a zero `samples_per_window`, and gate spacing below the
/// detector's required gap.
pub fn build_scan_plan(
    grid: &FrameGrid,
    spad: &SpadParams,
    gates_per_frame: u32,
    samples_per_window: u32,
) -> Result<ScanPlan, ScanError> {
    if gates_per_frame < 1 || grid.window_count % gates_per_frame as u64 != 0 {
        return Err(ScanError::BadGatesPerFrame { gates: gates_per_frame, window_count: grid.window_count });
    }
    if samples_per_window < 1 {
        return Err(ScanError::OutOfRange {
            field: "samples_per_window",
            requirement: ">= 1",
            value: samples_per_window as f64,
        });
    }
    let frame_count = samples_per_window as u64 * (grid.window_count / gates_per_frame as u64);
    let plan = ScanPlan {
        grid: grid.clone(),
        gates_per_frame,
        samples_per_window,
        frame_count,
    };
    let required = spad.required_gap_ns();
    if plan.min_gap_ns() < required {
        return Err(ScanError::InfeasibleSpacing { gap_ns: plan.min_gap_ns(), required_ns: required });
    }
    Ok(plan)
}

/// A consecutive pair of activations closer together than the detector
/// allows.
#[derive(Debug, Clone, PartialEq)]
pub struct SpacingViolation {
    pub earlier: Activation,
    pub later: Activation,
    pub gap_ns: f64,
    pub required_ns: f64,
}

/// Check every consecutive activation pair of `plan` against the
/// detector's required gap. Returns an empty list exactly when all gaps
/// are at least `max(dead_time_ns, recovery_gap_ns)`.
pub fn validate_spacing(plan: &ScanPlan, spad: &SpadParams) -> Vec<SpacingViolation> {
    let required = spad.required_gap_ns();
    if plan.min_gap_ns() >= required {
        return Vec::new();
    }
    spacing_violations_in_sequence(plan.activations(), required)
}

/// Pairwise spacing check over an explicit activation sequence, in time
/// order. Used by [`validate_spacing`] and directly testable on arbitrary
/// (including empty) sequences.
pub fn spacing_violations_in_sequence(
    activations: impl IntoIterator<Item = Activation>,
    required_ns: f64,
) -> Vec<SpacingViolation> {
    let mut violations = Vec::new();
    let mut previous: Option<Activation> = None;
    for current in activations {
        if let Some(earlier) = previous {
            let gap_ns = current.start_time_ns - earlier.start_time_ns;
            if gap_ns < required_ns {
                violations.push(SpacingViolation { earlier, later: current, gap_ns, required_ns });
            }
        }
        previous = Some(current);
    }
    violations
}
