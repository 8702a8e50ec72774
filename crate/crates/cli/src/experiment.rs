//! Experiment files: the on-disk TOML schema, command-line overrides, and
//! conversion into an engine configuration.
//!
//! Every quantity key carries its unit as a suffix (`_ns`, `_hz`, `_km`,
//! `_db_per_km`, `_km_s`) so a config file can be read without consulting
//! the schema.

use serde::{Deserialize, Serialize};
use std::fmt::Display;
use std::path::{Path, PathBuf};

use qkd_sync::engine::SweepAxis;
use qkd_sync::phys::{
    FiberChannel, PulseSource, SpadParams, VACUUM_LIGHT_SPEED_KM_S,
};
use qkd_sync::scan::{build_frame_grid, window_width_from_pulse, FrameGrid};
use qkd_sync::SystemConfig;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub length_km: f64,
    pub refractive_index: f64,
    pub attenuation_db_per_km: f64,
    /// Vacuum light speed, km/s. Defaults to the SI value.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vacuum_speed_km_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    pub pulse_width_ns: f64,
    pub mean_photons: f64,
    pub repetition_period_ns: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSection {
    pub quantum_efficiency: f64,
    pub dark_count_rate_hz: f64,
    pub dead_time_ns: f64,
    pub gate_width_ns: f64,
    pub recovery_gap_ns: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Explicit window width; otherwise derived from the pulse width via
    /// `window_width_factor`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_width_ns: Option<f64>,
    /// Multiplier on the pulse width when deriving the window width; must
    /// lie within [2, 4]. Defaults to 2.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_width_factor: Option<f64>,
    /// Explicit window count (power of two); otherwise the smallest
    /// power-of-two frame covering the pulse repetition period.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_count: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSection {
    pub gates_per_frame: u32,
    pub samples_per_window: u32,
}

impl Default for ScanSection {
    fn default() -> Self {
        Self { gates_per_frame: 4, samples_per_window: 256 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SignalSection {
    /// Window truly holding the pulse; defaults to a quarter of the frame.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub true_window: Option<u64>,
    pub placement_offset_ns: f64,
    /// Fixes the mean photoelectrons per pulse directly, bypassing the
    /// channel budget.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_pe_override: Option<f64>,
}

impl Default for SignalSection {
    fn default() -> Self {
        Self { true_window: None, placement_offset_ns: 0.0, mean_pe_override: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub trials: u64,
    pub seed: u64,
    /// Output CSV path; the `--out` flag takes precedence.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { trials: 10_000, seed: 42, out: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_pe: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dark_count_rate_hz: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples_per_window: Option<Vec<u32>>,
}

impl SweepSection {
    pub fn is_empty(&self) -> bool {
        self.mean_pe.is_none()
            && self.dark_count_rate_hz.is_none()
            && self.samples_per_window.is_none()
    }
}

/// A parsed experiment file: system description, optional sweep axes, and
/// run bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub channel: ChannelSection,
    pub source: SourceSection,
    pub detector: DetectorSection,
    #[serde(default, skip_serializing_if = "is_default_grid")]
    pub grid: GridSection,
    #[serde(default)]
    pub scan: ScanSection,
    #[serde(default)]
    pub signal: SignalSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default, skip_serializing_if = "SweepSection::is_empty")]
    pub sweep: SweepSection,
}

fn is_default_grid(grid: &GridSection) -> bool {
    *grid == GridSection::default()
}

/// Everything a command needs to execute one experiment.
#[derive(Debug)]
pub struct BuiltExperiment {
    pub config: SystemConfig,
    pub trials: u64,
    pub seed: u64,
    pub axes: Vec<SweepAxis>,
    pub out: Option<PathBuf>,
}

fn in_section<T, E: Display>(section: &str, result: Result<T, E>) -> Result<T, CliError> {
    result.map_err(|err| CliError::Config(format!("{section}.{err}")))
}

fn parse_number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value.parse().map_err(|_| {
        CliError::Usage(format!("--set {key}={value}: cannot parse the value"))
    })
}

impl ExperimentFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text =
            std::fs::read_to_string(path).map_err(|err| CliError::read_failure(path, &err))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|err| CliError::Config(err.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("experiment files always serialize")
    }

    /// Apply one `--set key=value` override. Overriding a swept parameter
    /// pins it, dropping that sweep axis.
    pub fn apply_set(&mut self, assignment: &str) -> Result<(), CliError> {
        let (key, value) = assignment.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("--set {assignment}: expected key=value"))
        })?;
        match key {
            "length_km" => self.channel.length_km = parse_number(key, value)?,
            "refractive_index" => self.channel.refractive_index = parse_number(key, value)?,
            "attenuation_db_per_km" => {
                self.channel.attenuation_db_per_km = parse_number(key, value)?
            }
            "vacuum_speed_km_s" => {
                self.channel.vacuum_speed_km_s = Some(parse_number(key, value)?)
            }
            "pulse_width_ns" => self.source.pulse_width_ns = parse_number(key, value)?,
            "mu" => self.source.mean_photons = parse_number(key, value)?,
            "repetition_period_ns" => {
                self.source.repetition_period_ns = parse_number(key, value)?
            }
            "eta" => self.detector.quantum_efficiency = parse_number(key, value)?,
            "dark_hz" => {
                self.detector.dark_count_rate_hz = parse_number(key, value)?;
                self.sweep.dark_count_rate_hz = None;
            }
            "dead_ns" => self.detector.dead_time_ns = parse_number(key, value)?,
            "gate_ns" => self.detector.gate_width_ns = parse_number(key, value)?,
            "recovery_ns" => self.detector.recovery_gap_ns = parse_number(key, value)?,
            "window_width_ns" => {
                self.grid.window_width_ns = Some(parse_number(key, value)?);
                self.grid.window_width_factor = None;
            }
            "window_count" => self.grid.window_count = Some(parse_number(key, value)?),
            "gates" => self.scan.gates_per_frame = parse_number(key, value)?,
            "n" => {
                self.scan.samples_per_window = parse_number(key, value)?;
                self.sweep.samples_per_window = None;
            }
            "true_window" => self.signal.true_window = Some(parse_number(key, value)?),
            "offset_ns" => self.signal.placement_offset_ns = parse_number(key, value)?,
            "mean_pe" => {
                self.signal.mean_pe_override = Some(parse_number(key, value)?);
                self.sweep.mean_pe = None;
            }
            "trials" => self.run.trials = parse_number(key, value)?,
            "seed" => self.run.seed = parse_number(key, value)?,
            _ => {
                return Err(CliError::Usage(format!(
                    "--set {key}: unknown key (see the config schema in the README)"
                )))
            }
        }
        Ok(())
    }

    fn build_grid(&self, source: &PulseSource) -> Result<FrameGrid, CliError> {
        if self.grid.window_width_ns.is_some() && self.grid.window_width_factor.is_some() {
            return Err(CliError::Config(
                "grid.window_width_ns and grid.window_width_factor are mutually exclusive"
                    .into(),
            ));
        }
        let width = match self.grid.window_width_ns {
            Some(width) => width,
            None => in_section(
                "grid",
                window_width_from_pulse(
                    source.pulse_width_ns,
                    self.grid.window_width_factor.unwrap_or(2.0),
                ),
            )?,
        };
        match self.grid.window_count {
            Some(count) => in_section("grid", FrameGrid::new(width, count)),
            None => in_section("grid", build_frame_grid(source.repetition_period_ns, width)),
        }
    }

    /// Validate every section and assemble the runnable experiment.
    pub fn build(&self) -> Result<BuiltExperiment, CliError> {
        let channel = in_section(
            "channel",
            FiberChannel::new(
                self.channel.length_km,
                self.channel.refractive_index,
                self.channel.attenuation_db_per_km,
            ),
        )?;
        let source = in_section(
            "source",
            PulseSource::new(
                self.source.pulse_width_ns,
                self.source.mean_photons,
                self.source.repetition_period_ns,
            ),
        )?;
        let spad = in_section(
            "detector",
            SpadParams::new(
                self.detector.quantum_efficiency,
                self.detector.dark_count_rate_hz,
                self.detector.dead_time_ns,
                self.detector.gate_width_ns,
                self.detector.recovery_gap_ns,
            ),
        )?;
        let grid = self.build_grid(&source)?;
        if self.run.trials == 0 {
            return Err(CliError::Config("run.trials: must be at least 1, got 0".into()));
        }
        let mut axes = Vec::new();
        if let Some(values) = &self.sweep.mean_pe {
            if values.is_empty() {
                return Err(CliError::Config(
                    "sweep.mean_pe: requires at least one value".into(),
                ));
            }
            axes.push(SweepAxis::MeanPhotoelectrons(values.clone()));
        }
        if let Some(values) = &self.sweep.dark_count_rate_hz {
            if values.is_empty() {
                return Err(CliError::Config(
                    "sweep.dark_count_rate_hz: requires at least one value".into(),
                ));
            }
            axes.push(SweepAxis::DarkRateHz(values.clone()));
        }
        if let Some(values) = &self.sweep.samples_per_window {
            if values.is_empty() {
                return Err(CliError::Config(
                    "sweep.samples_per_window: requires at least one value".into(),
                ));
            }
            axes.push(SweepAxis::SamplesPerWindow(values.clone()));
        }
        let config = SystemConfig {
            channel,
            source,
            spad,
            true_signal_window: self.signal.true_window.unwrap_or(grid.window_count / 4),
            grid,
            gates_per_frame: self.scan.gates_per_frame,
            samples_per_window: self.scan.samples_per_window,
            placement_offset_ns: self.signal.placement_offset_ns,
            mean_pe_override: self.signal.mean_pe_override,
            vacuum_speed_km_s: self
                .channel
                .vacuum_speed_km_s
                .unwrap_or(VACUUM_LIGHT_SPEED_KM_S),
        };
        Ok(BuiltExperiment {
            config,
            trials: self.run.trials,
            seed: self.run.seed,
            axes,
            out: self.run.out.as_ref().map(PathBuf::from),
        })
    }
}
