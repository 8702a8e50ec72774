//! Simulation and statistics for the single-photon synchronization stage
//! of fiber-optic QKD links.
//!
//! A transmitter sends faint clock pulses over a long fiber; the receiver
//! divides the pulse period into narrow time windows and scans them with a
//! gated single-photon detector, accumulating clicks per window until the
//! window holding the clock pulse stands out. This crate models each piece
//! of that chain and estimates how often the scan locks onto the right
//! window:
//!
//! - [`phys`]: fiber channel, pulse source, and detector parameters with
//!   their derived link budget.
//! - [`scan`]: the time-window grid and a dead-time-feasible schedule
//!   visiting every window.
//! - [`detector`]: per-gate click statistics of a gated detector seeing
//!   signal and dark counts.
//! - [`decision`]: picking the synchronization window from accumulated
//!   counts and judging the pick against ground truth.
//! - [`stats`]: binomial interval estimates for the outcome tallies.
//! - [`engine`]: Monte Carlo runs, parameter sweeps, an exact enumeration
//!   oracle for small setups, and tapped-channel comparisons.
//! - [`rng`]: per-trial deterministic random streams.

pub mod decision;
pub mod detector;
pub mod engine;
pub mod phys;
pub mod rng;
pub mod scan;
pub mod stats;

pub use decision::TrialOutcome;
pub use engine::{run_trials, sweep, OutcomeEstimates, SweepAxis, SystemConfig};
pub use stats::ProbabilityEstimate;
