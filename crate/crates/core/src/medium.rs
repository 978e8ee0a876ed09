//! Acoustic propagation media.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Homogeneous acoustic medium.
///
/// `impedance` is the specific acoustic impedance (Pa·s/m). Wherever it
/// meets the lumped three-port entries it is multiplied by the piezo face
/// area, see [`AcousticMedium::lumped_impedance`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcousticMedium<F: Real = f64> {
    /// Sound speed, m/s.
    pub c: F,
    /// Attenuation, dB/(cm·MHz).
    pub alpha_db_cm_mhz: F,
    /// Specific acoustic impedance, Pa·s/m.
    pub impedance: F,
}

impl<F: Real> AcousticMedium<F> {
    pub fn new(c: F, alpha_db_cm_mhz: F, impedance: F) -> Result<Self> {
        let m = AcousticMedium {
            c,
            alpha_db_cm_mhz,
            impedance,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > F::zero()) {
            return Err(Error::validation("c", "sound speed must be > 0"));
        }
        if !(self.alpha_db_cm_mhz >= F::zero()) {
            return Err(Error::validation("alpha", "attenuation must be >= 0"));
        }
        if !(self.impedance > F::zero()) {
            return Err(Error::validation("impedance", "must be > 0"));
        }
        Ok(())
    }

    /// Force-per-velocity impedance presented to a face of `area` m².
    pub fn lumped_impedance(&self, area: F) -> F {
        self.impedance * area
    }

    /// One-way attenuation in dB over `distance` metres at `freq` Hz.
    pub fn attenuation_db(&self, distance: F, freq: F) -> F {
        self.alpha_db_cm_mhz * (freq / F::lit(1e6)) * (distance * F::lit(100.0))
    }

    /// Linear amplitude factor for one-way travel.
    pub fn amplitude_factor(&self, distance: F, freq: F) -> F {
        F::lit(10.0).powf(-self.attenuation_db(distance, freq) / F::lit(20.0))
    }

    /// One-way time of flight, seconds.
    pub fn time_of_flight(&self, distance: F) -> F {
        distance / self.c
    }

    /// Castor-oil bath: 1515 m/s, ~0.5 dB/cm at 2 MHz.
    pub fn oil() -> Self {
        AcousticMedium {
            c: F::lit(1515.0),
            alpha_db_cm_mhz: F::lit(0.25),
            impedance: F::lit(1.45e6),
        }
    }

    /// Soft-tissue phantom with ~0.5 dB/cm at 2 MHz.
    pub fn phantom() -> Self {
        AcousticMedium {
            c: F::lit(1540.0),
            alpha_db_cm_mhz: F::lit(0.25),
            impedance: F::lit(1.54e6),
        }
    }

    /// Generic soft tissue, 0.5 dB/(cm·MHz).
    pub fn tissue() -> Self {
        AcousticMedium {
            c: F::lit(1540.0),
            alpha_db_cm_mhz: F::lit(0.5),
            impedance: F::lit(1.63e6),
        }
    }

    pub fn water() -> Self {
        AcousticMedium {
            c: F::lit(1482.0),
            alpha_db_cm_mhz: F::lit(0.0022),
            impedance: F::lit(1.48e6),
        }
    }

    /// Looks up a preset by name (`oil`, `phantom`, `tissue`, `water`).
    pub fn preset(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "oil" | "default" => Ok(Self::oil()),
            "phantom" | "tissue_phantom" => Ok(Self::phantom()),
            "tissue" => Ok(Self::tissue()),
            "water" => Ok(Self::water()),
            other => Err(Error::validation(
                "medium",
                format!("unknown medium preset `{other}`"),
            )),
        }
    }
}

impl<F: Real> Default for AcousticMedium<F> {
    fn default() -> Self {
        Self::oil()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_at_50mm_is_66us() {
        let m = AcousticMedium::<f64>::default();
        let two_tof = 2.0 * m.time_of_flight(0.05);
        assert!((two_tof - 66e-6).abs() < 0.1e-6, "{two_tof}");
    }

    #[test]
    fn rejects_negative_attenuation() {
        assert!(AcousticMedium::new(1500.0, -0.1, 1.5e6).is_err());
        assert!(AcousticMedium::<f64>::preset("mud").is_err());
    }
}
