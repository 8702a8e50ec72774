//! Physical-layer model: fiber channel, pulsed source, and gated
//! single-photon avalanche detector parameters.
//!
//! All lengths are kilometers, times nanoseconds, rates hertz. Speeds are
//! km/s. Derived helpers keep those units so the scheduling layer can mix
//! them without conversion factors.

use thiserror::Error;

/// Speed of light in vacuum, km/s.
pub const VACUUM_LIGHT_SPEED_KM_S: f64 = 299_792.458;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PhysError {
    #[error("{field} must be {requirement}, got {value}")]
    OutOfRange {
        field: &'static str,
        requirement: &'static str,
        value: f64,
    },
}

fn check(ok: bool, field: &'static str, requirement: &'static str, value: f64) -> Result<(), PhysError> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(PhysError::OutOfRange { field, requirement, value })
    }
}

/// Optical fiber link between transmitter and receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberChannel {
    pub length_km: f64,
    /// Group refractive index of the fiber core; must exceed 1.
    pub refractive_index: f64,
    pub attenuation_db_per_km: f64,
}

impl FiberChannel {
    pub fn new(length_km: f64, refractive_index: f64, attenuation_db_per_km: f64) -> Result<Self, PhysError> {
        let channel = Self { length_km, refractive_index, attenuation_db_per_km };
        channel.validate()?;
        Ok(channel)
    }

    pub fn validate(&self) -> Result<(), PhysError> {
        check(self.length_km >= 0.0, "length_km", ">= 0", self.length_km)?;
        check(self.refractive_index > 1.0, "refractive_index", "> 1", self.refractive_index)?;
        check(
            self.attenuation_db_per_km >= 0.0,
            "attenuation_db_per_km",
            ">= 0",
            self.attenuation_db_per_km,
        )
    }

    /// Power transmittance of the full link.
    pub fn transmittance(&self) -> f64 {
        transmittance(self.length_km, self.attenuation_db_per_km)
    }

    /// Propagation speed in this fiber given the vacuum light speed, km/s.
    pub fn propagation_speed_km_s(&self, vacuum_speed_km_s: f64) -> Result<f64, PhysError> {
        propagation_speed(vacuum_speed_km_s, self.refractive_index)
    }
}

/// Clock-pulse source at the transmitter.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSource {
    pub pulse_width_ns: f64,
    /// Mean photon number per pulse at the source output.
    pub mean_photons: f64,
    /// Pulse repetition period; must be at least the pulse width.
    pub repetition_period_ns: f64,
}

impl PulseSource {
    pub fn new(pulse_width_ns: f64, mean_photons: f64, repetition_period_ns: f64) -> Result<Self, PhysError> {
        let source = Self { pulse_width_ns, mean_photons, repetition_period_ns };
        source.validate()?;
        Ok(source)
    }

    pub fn validate(&self) -> Result<(), PhysError> {
        check(self.pulse_width_ns > 0.0, "pulse_width_ns", "> 0", self.pulse_width_ns)?;
        check(self.mean_photons >= 0.0, "mean_photons", ">= 0", self.mean_photons)?;
        check(
            self.repetition_period_ns >= self.pulse_width_ns,
            "repetition_period_ns",
            ">= pulse_width_ns",
            self.repetition_period_ns,
        )
    }

    /// Advisory notes that do not invalidate the source. A mean photon
    /// number above 0.5 leaves the single-photon operating regime.
    pub fn warnings(&self) -> Vec<String> {
        let mut notes = Vec::new();
        if self.mean_photons > 0.5 {
            notes.push(format!(
                "mean_photons = {} exceeds 0.5; the source is outside the single-photon regime",
                self.mean_photons
            ));
        }
        notes
    }
}

/// Gated avalanche photodiode operating in Geiger mode.
#[derive(Debug, Clone, PartialEq)]
pub struct SpadParams {
    /// Probability that an incident photon produces a photoelectron.
    pub quantum_efficiency: f64,
    /// Free-running dark-count rate; contributes only while a gate is open.
    pub dark_count_rate_hz: f64,
    /// Recovery time after an avalanche during which the diode is blind.
    pub dead_time_ns: f64,
    /// Gate-open duration; equals the scan window width.
    pub gate_width_ns: f64,
    /// Minimum spacing between consecutive gate activations; at least the
    /// dead time.
    pub recovery_gap_ns: f64,
}

impl SpadParams {
    pub fn new(
        quantum_efficiency: f64,
        dark_count_rate_hz: f64,
        dead_time_ns: f64,
        gate_width_ns: f64,
        recovery_gap_ns: f64,
    ) -> Result<Self, PhysError> {
        let spad = Self {
            quantum_efficiency,
            dark_count_rate_hz,
            dead_time_ns,
            gate_width_ns,
            recovery_gap_ns,
        };
        spad.validate()?;
        Ok(spad)
    }

    pub fn validate(&self) -> Result<(), PhysError> {
        check(
            (0.0..=1.0).contains(&self.quantum_efficiency),
            "quantum_efficiency",
            "within [0, 1]",
            self.quantum_efficiency,
        )?;
        check(self.dark_count_rate_hz >= 0.0, "dark_count_rate_hz", ">= 0", self.dark_count_rate_hz)?;
        check(self.dead_time_ns >= 0.0, "dead_time_ns", ">= 0", self.dead_time_ns)?;
        check(self.gate_width_ns > 0.0, "gate_width_ns", "> 0", self.gate_width_ns)?;
        check(
            self.recovery_gap_ns >= self.dead_time_ns,
            "recovery_gap_ns",
            ">= dead_time_ns",
            self.recovery_gap_ns,
        )
    }

    /// Smallest admissible spacing between consecutive gate activations.
    pub fn required_gap_ns(&self) -> f64 {
        self.dead_time_ns.max(self.recovery_gap_ns)
    }
}

/// Propagation speed of light in a medium of the given refractive index.
///
/// # Errors
/// Rejects a refractive index below 1 (faster-than-vacuum propagation) and
/// a non-positive vacuum speed.
pub fn propagation_speed(vacuum_speed_km_s: f64, refractive_index: f64) -> Result<f64, PhysError> {
    check(vacuum_speed_km_s > 0.0, "vacuum_speed_km_s", "> 0", vacuum_speed_km_s)?;
    check(refractive_index >= 1.0, "refractive_index", ">= 1", refractive_index)?;
    Ok(vacuum_speed_km_s / refractive_index)
}

/// Shortest clock repetition period that keeps one pulse in flight on a
/// there-and-back link of the given length, in nanoseconds.
pub fn min_repetition_period_ns(length_km: f64, speed_km_s: f64) -> f64 {
    debug_assert!(length_km >= 0.0 && speed_km_s > 0.0);
    2.0 * length_km / speed_km_s * 1e9
}

/// Power transmittance of a fiber span: `10^(-length * attenuation / 10)`.
pub fn transmittance(length_km: f64, attenuation_db_per_km: f64) -> f64 {
    debug_assert!(length_km >= 0.0 && attenuation_db_per_km >= 0.0);
    10f64.powf(-(length_km * attenuation_db_per_km) / 10.0)
}

/// Mean photoelectron number seen by the detector per pulse.
pub fn mean_photoelectrons(mean_photons: f64, transmittance: f64, quantum_efficiency: f64) -> f64 {
    debug_assert!(mean_photons >= 0.0);
    debug_assert!((0.0..=1.0).contains(&transmittance));
    debug_assert!((0.0..=1.0).contains(&quantum_efficiency));
    mean_photons * transmittance * quantum_efficiency
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn speed_in_vacuum_is_identity() {
        assert_eq!(propagation_speed(300_000.0, 1.0).unwrap(), 300_000.0);
    }

    #[test]
    fn speed_in_smf28e() {
        let v = propagation_speed(300_000.0, 1.4670).unwrap();
        assert_relative_eq!(v, 204_498.977_505_112_47, max_relative = 1e-12);
        // commonly quoted as ~205 000 km/s
        assert_relative_eq!(v, 205_000.0, max_relative = 3e-3);
    }

    #[test]
    fn speed_at_generic_index() {
        let v = propagation_speed(300_000.0, 1.49).unwrap();
        assert_relative_eq!(v, 201_342.281_879_194_63, max_relative = 1e-12);
    }

    #[test]
    fn speed_rejects_subunity_index() {
        let err = propagation_speed(300_000.0, 0.99).unwrap_err();
        assert!(matches!(err, PhysError::OutOfRange { field: "refractive_index", .. }));
    }

    #[test]
    fn round_trip_period_for_reference_link() {
        assert_relative_eq!(
            min_repetition_period_ns(100.0, 204_499.0),
            977_999.892_420_011_8,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            min_repetition_period_ns(100.0, 201_000.0),
            995_024.875_621_890_5,
            max_relative = 1e-12
        );
        assert_eq!(min_repetition_period_ns(0.0, 205_000.0), 0.0);
    }

    #[test]
    fn transmittance_of_reference_spans() {
        assert_eq!(transmittance(0.0, 0.2), 1.0);
        assert_eq!(transmittance(100.0, 0.2), 0.01);
        assert_relative_eq!(transmittance(50.0, 0.2), 0.1, max_relative = 1e-12);
    }

    #[test]
    fn photoelectrons_for_reference_link() {
        assert_eq!(mean_photoelectrons(0.5, transmittance(100.0, 0.2), 1.0), 0.005);
        assert_eq!(mean_photoelectrons(0.0, 0.3, 1.0), 0.0);
        assert_relative_eq!(
            mean_photoelectrons(0.5, transmittance(100.0, 0.2), 0.1),
            5e-4,
            max_relative = 1e-12
        );
    }

    #[test]
    fn channel_validation() {
        assert!(FiberChannel::new(100.0, 1.4670, 0.2).is_ok());
        assert!(FiberChannel::new(-1.0, 1.4670, 0.2).is_err());
        assert!(FiberChannel::new(100.0, 1.0, 0.2).is_err());
        assert!(FiberChannel::new(100.0, 1.4670, -0.2).is_err());
        assert!(FiberChannel::new(100.0, f64::NAN, 0.2).is_err());
    }

    #[test]
    fn source_validation_and_warning() {
        let s = PulseSource::new(1.0, 0.5, 1_000_000.0).unwrap();
        assert!(s.warnings().is_empty());
        let bright = PulseSource::new(1.0, 1000.0, 1_000_000.0).unwrap();
        assert_eq!(bright.warnings().len(), 1);
        assert!(bright.warnings()[0].contains("single-photon"));
        assert!(PulseSource::new(0.0, 0.5, 1_000_000.0).is_err());
        assert!(PulseSource::new(2.0, 0.5, 1.0).is_err());
        assert!(PulseSource::new(1.0, -0.5, 1_000_000.0).is_err());
    }

    #[test]
    fn spad_validation() {
        assert!(SpadParams::new(1.0, 100.0, 50.0, 2.0, 100_000.0).is_ok());
        assert!(SpadParams::new(1.5, 100.0, 50.0, 2.0, 100_000.0).is_err());
        assert!(SpadParams::new(-0.1, 100.0, 50.0, 2.0, 100_000.0).is_err());
        assert!(SpadParams::new(1.0, -1.0, 50.0, 2.0, 100_000.0).is_err());
        assert!(SpadParams::new(1.0, 100.0, 50.0, 0.0, 100_000.0).is_err());
        // recovery gap shorter than the dead time
        assert!(SpadParams::new(1.0, 100.0, 50.0, 2.0, 10.0).is_err());
        let ideal = SpadParams::new(1.0, 0.0, 0.0, 2.0, 0.0).unwrap();
        assert_eq!(ideal.required_gap_ns(), 0.0);
    }
}
