use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{white_sigma, FlickerProcess};
use crate::rng::{Stream, Substream};
use crate::units::de;
use crate::waveform::Waveform;

/// Amplitude noise of the interrogator carrier.
///
/// Densities are input-referred equivalents: the level they produce in the
/// reconstructed, calibrated stream. [`EnvelopeScale`] converts them to the
/// received envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CarrierNoiseModel {
    /// White AM density, V/√Hz.
    #[serde(deserialize_with = "de::density")]
    pub white_density: f64,
    /// Frequency where the 1/f part equals the white floor, Hz.
    #[serde(deserialize_with = "de::frequency")]
    pub flicker_corner: f64,
    pub white_enabled: bool,
    pub flicker_enabled: bool,
}

impl Default for CarrierNoiseModel {
    fn default() -> Self {
        CarrierNoiseModel {
            white_density: 319e-9,
            flicker_corner: 500.0,
            white_enabled: true,
            flicker_enabled: true,
        }
    }
}

impl CarrierNoiseModel {
    pub fn silent() -> Self {
        CarrierNoiseModel {
            white_enabled: false,
            flicker_enabled: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.white_density >= 0.0) || !self.white_density.is_finite() {
            return Err(Error::validation("white_density", "must be >= 0"));
        }
        if !(self.flicker_corner >= 0.0) || !self.flicker_corner.is_finite() {
            return Err(Error::validation("flicker_corner", "must be >= 0"));
        }
        Ok(())
    }
}

/// Maps an input-referred stream density onto the received envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnvelopeScale {
    /// Decoded envelope units per input volt.
    pub gain: f64,
    /// Integration window per pulse, s.
    pub t_int: f64,
    /// Pulse repetition rate, Hz.
    pub f_sample: f64,
}

impl EnvelopeScale {
    /// Leaves densities unchanged.
    pub fn identity() -> Self {
        EnvelopeScale {
            gain: 1.0,
            t_int: 1.0,
            f_sample: 1.0,
        }
    }

    /// Envelope density whose code-averaged, calibrated samples show
    /// `stream_density`.
    pub fn envelope_density(&self, stream_density: f64) -> f64 {
        stream_density * self.gain.abs() * (self.t_int * self.f_sample).sqrt()
    }
}

/// Stateful carrier noise generator, continuous across pulses.
#[derive(Debug, Clone)]
pub struct CarrierNoiseSource {
    white: f64,
    white_rng: Substream,
    flicker: Option<FlickerProcess>,
}

impl CarrierNoiseSource {
    pub fn new(model: &CarrierNoiseModel, scale: &EnvelopeScale, seed: u64) -> Self {
        let d = scale.envelope_density(model.white_density);
        CarrierNoiseSource {
            white: if model.white_enabled { d } else { 0.0 },
            white_rng: Substream::new(seed, Stream::CarrierWhite),
            flicker: (model.flicker_enabled && d > 0.0).then(|| {
                FlickerProcess::new(
                    d,
                    model.flicker_corner,
                    Substream::new(seed, Stream::CarrierFlicker),
                )
            }),
        }
    }

    /// Adds noise to `w` in place. Successive calls must move forward in
    /// time.
    pub fn apply(&mut self, w: &mut Waveform) {
        let sigma = white_sigma(self.white, w.sample_rate);
        for i in 0..w.len() {
            let t = w.time_at(i);
            let mut n = 0.0;
            if sigma > 0.0 {
                n += sigma * self.white_rng.gaussian();
            }
            if let Some(f) = &mut self.flicker {
                n += f.sample(t);
            }
            w.samples[i] += n;
        }
    }
}

/// Adds carrier amplitude noise to one waveform.
pub fn inject_carrier_noise(
    w: &Waveform,
    model: &CarrierNoiseModel,
    scale: &EnvelopeScale,
    seed: u64,
) -> Waveform {
    let mut out = w.clone();
    CarrierNoiseSource::new(model, scale, seed).apply(&mut out);
    out
}
