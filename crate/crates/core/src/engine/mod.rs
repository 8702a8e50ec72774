//! Monte Carlo engine tying the physical layer, scan schedule, detector,
//! and decision rule into end-to-end synchronization estimates.

mod exact;
mod noise;
mod trial;

pub use exact::{exact_probability, ExactDistribution, EXACT_MAX_SAMPLES, EXACT_MAX_WINDOWS};
pub use noise::{fast_noise_max_sample, NoiseMaxSample};
pub use trial::TrialModel;

use rayon::prelude::*;
use thiserror::Error;

use crate::decision::{accumulate, classify, decide, GroundTruth, TrialOutcome, WindowContexts};
use crate::detector::{
    click_probability, dark_mean_pe, window_split, DetectorError, GateContext, PulsePlacement,
};
use crate::phys::{
    mean_photoelectrons, min_repetition_period_ns, propagation_speed, FiberChannel, PhysError,
    PulseSource, SpadParams, VACUUM_LIGHT_SPEED_KM_S,
};
use crate::rng::trial_rng;
use crate::scan::{build_scan_plan, FrameGrid, ScanError, ScanPlan};
use crate::stats::ProbabilityEstimate;

/// Failures while deriving or running a configuration.
#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Phys(#[from] PhysError),
    #[error(transparent)]
    Scan(#[from] ScanError),
    #[error(transparent)]
    Detector(#[from] DetectorError),
    #[error(transparent)]
    Decision(#[from] crate::decision::DecisionError),
    #[error("{0}")]
    Config(String),
    #[error("exact enumeration supports at most {} windows and {} samples per window, got {window_count} windows and {samples} samples", EXACT_MAX_WINDOWS, EXACT_MAX_SAMPLES)]
    ExactBounds { window_count: u64, samples: u32 },
}

/// Complete description of one synchronization experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub channel: FiberChannel,
    pub source: PulseSource,
    pub spad: SpadParams,
    pub grid: FrameGrid,
    /// Gates opened per frame during the scan.
    pub gates_per_frame: u32,
    /// Accumulation passes per window.
    pub samples_per_window: u32,
    /// Arrival offset of the pulse inside its window, in nanoseconds.
    pub placement_offset_ns: f64,
    /// Window truly containing the pulse arrival (its leading edge).
    pub true_signal_window: u64,
    /// When set, bypasses the channel budget and fixes the mean
    /// photoelectron number per gate directly.
    pub mean_pe_override: Option<f64>,
    /// Vacuum light speed used for propagation, in km/s.
    pub vacuum_speed_km_s: f64,
}

impl SystemConfig {
    /// The 100 km reference link the examples and figures are built on.
    pub fn reference() -> Self {
        let grid = FrameGrid::new(2.0, 1 << 19).expect("valid grid");
        Self {
            channel: FiberChannel::new(100.0, 1.4670, 0.2).expect("valid channel"),
            source: PulseSource::new(1.0, 0.1, 1.0e6).expect("valid source"),
            spad: SpadParams::new(1.0, 100.0, 50.0, 2.0, 1.0e5).expect("valid detector"),
            grid,
            gates_per_frame: 4,
            samples_per_window: 256,
            placement_offset_ns: 0.0,
            true_signal_window: 131_072,
            mean_pe_override: None,
            vacuum_speed_km_s: VACUUM_LIGHT_SPEED_KM_S,
        }
    }

    /// Validate the configuration and compute every derived quantity.
    pub fn derive(&self) -> Result<Derived, EngineError> {
        self.channel.validate()?;
        self.source.validate()?;
        self.spad.validate()?;
        if !(self.vacuum_speed_km_s.is_finite() && self.vacuum_speed_km_s > 0.0) {
            return Err(EngineError::Config(format!(
                "vacuum_speed_km_s: must be positive and finite, got {}",
                self.vacuum_speed_km_s
            )));
        }
        if self.spad.gate_width_ns != self.grid.window_width_ns {
            return Err(EngineError::Config(format!(
                "gate_width_ns: gate width {} ns must equal the time window width {} ns",
                self.spad.gate_width_ns, self.grid.window_width_ns
            )));
        }
        if self.true_signal_window >= self.grid.window_count {
            return Err(EngineError::Config(format!(
                "true_signal_window: must be below window_count {}, got {}",
                self.grid.window_count, self.true_signal_window
            )));
        }
        if let Some(override_pe) = self.mean_pe_override {
            if !(override_pe.is_finite() && override_pe >= 0.0) {
                return Err(EngineError::Config(format!(
                    "mean_pe_override: must be non-negative and finite, got {override_pe}"
                )));
            }
        }
        let plan = build_scan_plan(
            &self.grid,
            &self.spad,
            self.gates_per_frame,
            self.samples_per_window,
        )?;
        let propagation_speed_km_s =
            propagation_speed(self.vacuum_speed_km_s, self.channel.refractive_index)?;
        let min_period =
            min_repetition_period_ns(self.channel.length_km, propagation_speed_km_s);
        let transmittance = self.channel.transmittance();
        let mean_pe = match self.mean_pe_override {
            Some(value) => value,
            None => mean_photoelectrons(
                self.source.mean_photons,
                transmittance,
                self.spad.quantum_efficiency,
            ),
        };
        let placement = PulsePlacement::new(self.placement_offset_ns, self.source.pulse_width_ns);
        let (lead_fraction, trail_fraction) =
            window_split(&placement, self.grid.window_width_ns)?;
        let truth = if trail_fraction == 0.0 {
            GroundTruth::Single(self.true_signal_window)
        } else {
            GroundTruth::Pair {
                lead: self.true_signal_window,
                trail: (self.true_signal_window + 1) % self.grid.window_count,
                lead_fraction,
            }
        };
        let signal_means: Vec<(u64, f64)> = truth
            .windows()
            .iter()
            .zip([lead_fraction, trail_fraction])
            .map(|(&window, fraction)| (window, fraction * mean_pe))
            .collect();
        let dark_rate = self.spad.dark_count_rate_hz;
        let width = self.grid.window_width_ns;
        let noise_ctx = GateContext::new(0.0, dark_rate, width);
        let noise_click_probability = click_probability(&noise_ctx);
        let signal_probs: Vec<f64> = signal_means
            .iter()
            .map(|&(_, mean)| click_probability(&GateContext::new(mean, dark_rate, width)))
            .collect();
        let model = TrialModel::from_parts(
            self.grid.window_count,
            self.samples_per_window,
            truth,
            &signal_probs,
            noise_click_probability,
        )?;
        let mut warnings = self.source.warnings();
        if self.source.repetition_period_ns < min_period {
            warnings.push(format!(
                "repetition period {} ns is below the {:.3} ns round-trip limit of this span; \
                 consecutive pulses overlap in flight",
                self.source.repetition_period_ns, min_period
            ));
        }
        Ok(Derived {
            propagation_speed_km_s,
            min_repetition_period_ns: min_period,
            transmittance,
            mean_pe,
            dark_mean_pe: dark_mean_pe(dark_rate, width),
            noise_click_probability,
            signal_means,
            plan,
            model,
            warnings,
        })
    }
}

/// Quantities derived from a [`SystemConfig`].
#[derive(Debug, Clone, PartialEq)]
pub struct Derived {
    /// Group velocity in the fiber, km/s.
    pub propagation_speed_km_s: f64,
    /// Smallest unambiguous pulse repetition period for the span, ns.
    pub min_repetition_period_ns: f64,
    /// Channel power transmittance.
    pub transmittance: f64,
    /// Mean photoelectrons per pulse at the detector.
    pub mean_pe: f64,
    /// Mean dark photoelectrons per gate.
    pub dark_mean_pe: f64,
    /// Click probability of a noise-only gate.
    pub noise_click_probability: f64,
    /// `(window, mean photoelectrons)` for the signal windows.
    pub signal_means: Vec<(u64, f64)>,
    /// The dead-time-feasible scan schedule.
    pub plan: ScanPlan,
    /// Reduced per-trial model driving the simulation.
    pub model: TrialModel,
    /// Non-fatal observations about the configuration.
    pub warnings: Vec<String>,
}

/// Outcome tallies of a batch of trials with interval estimates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeEstimates {
    counts: [u64; 4],
    trials: u64,
    seed: u64,
}

impl OutcomeEstimates {
    pub fn from_counts(counts: [u64; 4], trials: u64, seed: u64) -> Self {
        assert_eq!(
            counts.iter().sum::<u64>(),
            trials,
            "outcome counts must partition the trials"
        );
        Self { counts, trials, seed }
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn count(&self, outcome: TrialOutcome) -> u64 {
        self.counts[outcome.index()]
    }

    /// Wilson interval estimate for one outcome class.
    pub fn estimate(&self, outcome: TrialOutcome) -> ProbabilityEstimate {
        ProbabilityEstimate::from_counts(self.count(outcome), self.trials)
    }

    /// Wilson interval estimate for correct synchronization, counting the
    /// single-window and adjacent-pair classes together.
    pub fn p_correct_estimate(&self) -> ProbabilityEstimate {
        ProbabilityEstimate::from_counts(
            self.count(TrialOutcome::CorrectSingle) + self.count(TrialOutcome::CorrectAdjacent),
            self.trials,
        )
    }
}

fn check_trials(trials: u64) -> Result<(), EngineError> {
    if trials == 0 {
        return Err(EngineError::Config("trials: must be at least 1, got 0".into()));
    }
    Ok(())
}

/// Run `trials` independent synchronization attempts of `model`.
///
/// Trial `i` draws from an RNG stream indexed by `i` under `seed`, so the
/// tallies are identical for any Rayon worker count.
pub fn run_trials_model(model: &TrialModel, trials: u64, seed: u64) -> OutcomeEstimates {
    let counts = (0..trials)
        .into_par_iter()
        .fold(
            || [0u64; 4],
            |mut acc, index| {
                let outcome = model.simulate(&mut trial_rng(seed, index));
                acc[outcome.index()] += 1;
                acc
            },
        )
        .reduce(
            || [0u64; 4],
            |mut a, b| {
                for (slot, add) in a.iter_mut().zip(b) {
                    *slot += add;
                }
                a
            },
        );
    OutcomeEstimates::from_counts(counts, trials, seed)
}

/// Derive `config` and run `trials` synchronization attempts.
pub fn run_trials(
    config: &SystemConfig,
    trials: u64,
    seed: u64,
) -> Result<OutcomeEstimates, EngineError> {
    check_trials(trials)?;
    let derived = config.derive()?;
    Ok(run_trials_model(&derived.model, trials, seed))
}

/// Run trials through the literal gate-by-gate accumulation instead of the
/// aggregate path. Statistically identical to [`run_trials`] and far
/// slower; it exists to cross-check the aggregate sampler on small grids.
pub fn run_trials_reference(
    config: &SystemConfig,
    trials: u64,
    seed: u64,
) -> Result<OutcomeEstimates, EngineError> {
    check_trials(trials)?;
    let derived = config.derive()?;
    let noise_ctx = GateContext::new(
        0.0,
        config.spad.dark_count_rate_hz,
        config.grid.window_width_ns,
    );
    let signal_ctxs: Vec<(u64, GateContext)> = derived
        .signal_means
        .iter()
        .map(|&(window, mean)| {
            (window, GateContext::new(mean, config.spad.dark_count_rate_hz, config.grid.window_width_ns))
        })
        .collect();
    let contexts = WindowContexts { noise: noise_ctx, signal: signal_ctxs };
    let counts = (0..trials)
        .into_par_iter()
        .map(|index| -> Result<[u64; 4], EngineError> {
            let mut rng = trial_rng(seed, index);
            let accumulated = accumulate(&derived.plan, &contexts, &mut rng)?;
            let outcome = classify(&decide(&accumulated), &derived.model.truth);
            let mut acc = [0u64; 4];
            acc[outcome.index()] = 1;
            Ok(acc)
        })
        .try_reduce(
            || [0u64; 4],
            |mut a, b| {
                for (slot, add) in a.iter_mut().zip(b) {
                    *slot += add;
                }
                Ok(a)
            },
        )?;
    Ok(OutcomeEstimates::from_counts(counts, trials, seed))
}

/// One parameter axis of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepAxis {
    DarkRateHz(Vec<f64>),
    MeanPhotoelectrons(Vec<f64>),
    SamplesPerWindow(Vec<u32>),
}

impl SweepAxis {
    fn len(&self) -> usize {
        match self {
            SweepAxis::DarkRateHz(v) => v.len(),
            SweepAxis::MeanPhotoelectrons(v) => v.len(),
            SweepAxis::SamplesPerWindow(v) => v.len(),
        }
    }

    fn apply(&self, base: &SystemConfig, index: usize) -> SystemConfig {
        let mut config = base.clone();
        match self {
            SweepAxis::DarkRateHz(v) => config.spad.dark_count_rate_hz = v[index],
            SweepAxis::MeanPhotoelectrons(v) => config.mean_pe_override = Some(v[index]),
            SweepAxis::SamplesPerWindow(v) => config.samples_per_window = v[index],
        }
        config
    }
}

/// One evaluated grid point of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    /// Mean photoelectrons per pulse the detector saw at this point.
    pub mean_pe: f64,
    pub dark_rate_hz: f64,
    pub samples_per_window: u32,
    pub estimates: OutcomeEstimates,
}

/// Evaluate the cartesian product of the axes over `base`, earlier axes
/// varying slowest. Every point reuses `seed`, so two points differing in
/// one parameter differ only through that parameter, not through fresh
/// randomness.
pub fn sweep(
    base: &SystemConfig,
    axes: &[SweepAxis],
    trials: u64,
    seed: u64,
) -> Result<Vec<SweepPoint>, EngineError> {
    check_trials(trials)?;
    for axis in axes {
        if axis.len() == 0 {
            return Err(EngineError::Config(
                "sweep axis: requires at least one value".into(),
            ));
        }
    }
    let mut configs = vec![base.clone()];
    for axis in axes {
        configs = configs
            .iter()
            .flat_map(|config| (0..axis.len()).map(|i| axis.apply(config, i)))
            .collect();
    }
    configs
        .iter()
        .map(|config| {
            let derived = config.derive()?;
            let estimates = run_trials_model(&derived.model, trials, seed);
            Ok(SweepPoint {
                mean_pe: derived.mean_pe,
                dark_rate_hz: config.spad.dark_count_rate_hz,
                samples_per_window: config.samples_per_window,
                estimates,
            })
        })
        .collect()
}

/// A beamsplitter tap on the fiber, diverting a fraction of the light.
#[derive(Debug, Clone, PartialEq)]
pub struct TappedChannel {
    /// The legitimate system with the surviving light.
    pub legitimate: SystemConfig,
    /// Mean photons per pulse diverted to the eavesdropper.
    pub eavesdropper_mean_photons: f64,
    pub tap_ratio: f64,
}

/// Split off `tap_ratio` of the pulse energy ahead of the receiver.
///
/// With a mean photoelectron override in place the tap scales the override
/// itself; otherwise it scales the source mean photon number. Either way
/// legitimate plus diverted light adds back to the original budget.
pub fn apply_tap(config: &SystemConfig, tap_ratio: f64) -> Result<TappedChannel, EngineError> {
    if !(tap_ratio.is_finite() && (0.0..1.0).contains(&tap_ratio)) {
        return Err(EngineError::Config(format!(
            "tap_ratio: must be within [0, 1), got {tap_ratio}"
        )));
    }
    let mut legitimate = config.clone();
    let tapped_mean = match config.mean_pe_override {
        Some(override_pe) => {
            legitimate.mean_pe_override = Some(override_pe * (1.0 - tap_ratio));
            override_pe * tap_ratio
        }
        None => {
            legitimate.source.mean_photons = config.source.mean_photons * (1.0 - tap_ratio);
            config.source.mean_photons * tap_ratio
        }
    };
    Ok(TappedChannel {
        legitimate,
        eavesdropper_mean_photons: tapped_mean,
        tap_ratio,
    })
}

/// Synchronization performance with and without a tap in place.
#[derive(Debug, Clone, PartialEq)]
pub struct TapImpact {
    pub tap_ratio: f64,
    pub eavesdropper_mean_photons: f64,
    /// Probability a unit-efficiency gate on the tapped arm clicks.
    pub eavesdropper_click_rate: f64,
    pub untapped: OutcomeEstimates,
    pub tapped: OutcomeEstimates,
}

impl TapImpact {
    /// Drop in correct-synchronization probability caused by the tap.
    pub fn p_correct_drop(&self) -> f64 {
        self.untapped.p_correct_estimate().p_hat - self.tapped.p_correct_estimate().p_hat
    }
}

/// Compare synchronization with and without a tap of `tap_ratio`.
pub fn tap_impact(
    config: &SystemConfig,
    tap_ratio: f64,
    trials: u64,
    seed: u64,
) -> Result<TapImpact, EngineError> {
    let tapped_channel = apply_tap(config, tap_ratio)?;
    let untapped = run_trials(config, trials, seed)?;
    let tapped = run_trials(&tapped_channel.legitimate, trials, seed)?;
    Ok(TapImpact {
        tap_ratio,
        eavesdropper_mean_photons: tapped_channel.eavesdropper_mean_photons,
        eavesdropper_click_rate: -(-tapped_channel.eavesdropper_mean_photons).exp_m1(),
        untapped,
        tapped,
    })
}
