use serde::Serialize;

use super::{MoteConfig, TimelineEvents};
use crate::error::Result;
use crate::interrogator::SubcarrierCode;
use crate::waveform::Waveform;

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Runtime state of a mote during one interrogation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MoteState {
    pub powered: bool,
    pub time_since_pulse_start: f64,
    /// Autozero (kT/C) residue drawn for this interrogation, V at the LNA
    /// output.
    pub autozero_offset_sample: f64,
    /// Absolute time at which the chopper and subcarrier clocks start.
    pub code_start: f64,
}

impl MoteState {
    /// State at amplifier release for a pulse with harvested amplitude `v_s`.
    pub fn at_amp_ready(
        events: &TimelineEvents,
        v_s: f64,
        cfg: &MoteConfig,
        autozero: f64,
    ) -> Self {
        MoteState {
            powered: v_s >= cfg.v_s_min,
            time_since_pulse_start: events.amp_ready - events.pulse_start,
            autozero_offset_sample: autozero,
            code_start: events.amp_ready,
        }
    }

    /// Standard deviation of the autozero sample, sqrt(kT/C_f).
    pub fn autozero_sigma(cfg: &MoteConfig) -> f64 {
        (BOLTZMANN * cfg.temperature / cfg.c_f).sqrt()
    }
}

/// Additive front-end noise on the input grid, input-referred volts.
#[derive(Debug, Clone, Default)]
pub struct AfeNoise {
    /// Added to the input before the chopper.
    pub input: Option<Waveform>,
    /// Added after the chopper (amplifier flicker, not modulated).
    pub post_chop: Option<Waveform>,
}

/// LNA output plus the saturation count.
#[derive(Debug, Clone)]
pub struct AfeOutput {
    pub out: Waveform,
    /// Samples that hit the ±`lna_output_range` rails.
    pub saturated: usize,
}

/// Pole coefficient of the discretised single-pole low-pass.
pub fn lna_pole(cfg: &MoteConfig, sample_rate: f64) -> f64 {
    (-2.0 * std::f64::consts::PI * cfg.lna_bandwidth / sample_rate).exp()
}

/// Chopper-stabilised LNA.
///
/// The input (plus any pre-chop noise) is multiplied by the code, which is
/// the chopper clock, amplified, offset by the autozero residue, low-pass
/// filtered from rest and clipped at the output rails. An unpowered mote
/// outputs zeros.
pub fn afe_process(
    v_in: &Waveform,
    cfg: &MoteConfig,
    state: &MoteState,
    code: &SubcarrierCode,
    noise: &AfeNoise,
) -> Result<AfeOutput> {
    if !state.powered {
        return Ok(AfeOutput {
            out: Waveform::zeros(v_in.len(), v_in.sample_rate, v_in.t0),
            saturated: 0,
        });
    }
    if let Some(n) = &noise.input {
        check_grid(v_in, n)?;
    }
    if let Some(n) = &noise.post_chop {
        check_grid(v_in, n)?;
    }
    let a = lna_pole(cfg, v_in.sample_rate);
    let rail = cfg.lna_output_range;
    let mut y = 0.0;
    let mut saturated = 0;
    let mut out = Vec::with_capacity(v_in.len());
    for (i, &x) in v_in.samples.iter().enumerate() {
        let t = v_in.time_at(i);
        let mut u = x + noise.input.as_ref().map_or(0.0, |n| n.samples[i]);
        if cfg.chopping {
            u *= code.sign_at(t - state.code_start);
        }
        u += noise.post_chop.as_ref().map_or(0.0, |n| n.samples[i]);
        let drive = cfg.lna_gain * u + state.autozero_offset_sample;
        y = a * y + (1.0 - a) * drive;
        let clipped = y.clamp(-rail, rail);
        if clipped != y {
            saturated += 1;
        }
        out.push(clipped);
    }
    Ok(AfeOutput {
        out: Waveform::new(out, v_in.sample_rate, v_in.t0),
        saturated,
    })
}

fn check_grid(a: &Waveform, b: &Waveform) -> Result<()> {
    if a.sample_rate != b.sample_rate {
        return Err(crate::Error::SampleRateMismatch(
            a.sample_rate,
            b.sample_rate,
        ));
    }
    if a.len() != b.len() {
        return Err(crate::Error::Degenerate(
            "noise and input waveforms differ in length".into(),
        ));
    }
    Ok(())
}

/// How a code-averaging decode window weights LNA input samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeWeights {
    /// Decoded value per volt of DC input (LNA gain excluded).
    pub signal_gain: f64,
    /// Sum of squared weights seen by white input noise.
    pub noise_norm: f64,
}

impl DecodeWeights {
    /// Per-sample input noise sigma that yields an input-referred
    /// reconstructed-stream density `density` (V/√Hz) at `f_sample`.
    pub fn input_sigma(&self, density: f64, f_sample: f64) -> f64 {
        density * (f_sample / 2.0).sqrt() * self.signal_gain.abs() / self.noise_norm.sqrt()
    }
}

/// Weights of the decode `mean(code · LNA(code · x))` over samples
/// `[start, start + len)` of a grid that begins when the LNA is released.
/// Computed with the adjoint of the LNA low-pass.
pub fn decode_weights(
    cfg: &MoteConfig,
    code: &SubcarrierCode,
    sample_rate: f64,
    start: usize,
    len: usize,
) -> DecodeWeights {
    let a = lna_pole(cfg, sample_rate);
    let dt = 1.0 / sample_rate;
    let chop = |m: usize| {
        if cfg.chopping {
            code.sign_at(m as f64 * dt)
        } else {
            1.0
        }
    };
    let total = start + len;
    let w = 1.0 / len as f64;
    let mut s = 0.0;
    let mut signal_gain = 0.0;
    let mut noise_norm = 0.0;
    for m in (0..total).rev() {
        let wm = if m >= start { w * chop(m) } else { 0.0 };
        s = wm + a * s;
        let u = (1.0 - a) * s * chop(m);
        signal_gain += u;
        noise_norm += u * u;
    }
    DecodeWeights {
        signal_gain,
        noise_norm,
    }
}

/// Behavioural noise summary of the LNA.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseSpec {
    /// Total load capacitance C_L + (1 − β) C_f, F.
    pub c_t: f64,
    /// Output-referred noise power kTαγ / (β C_T), V².
    pub output_noise_power: f64,
    pub output_noise_rms: f64,
    /// Output rms divided by the closed-loop gain, V.
    pub input_referred_rms: f64,
    /// β G_m / C_T expressed in Hz.
    pub bandwidth_hz: f64,
    /// Switched-capacitor input impedance 1 / (2 f_chop C_s), ohm.
    pub z_in: f64,
}

pub fn afe_noise_model(
    cfg: &MoteConfig,
    f_chop: f64,
    temperature: f64,
    alpha_noise: f64,
    gamma_noise: f64,
) -> NoiseSpec {
    let beta = cfg.beta_fb;
    let c_t = cfg.c_load + (1.0 - beta) * cfg.c_f;
    let power = BOLTZMANN * temperature * alpha_noise * gamma_noise / (beta * c_t);
    let rms = power.sqrt();
    NoiseSpec {
        c_t,
        output_noise_power: power,
        output_noise_rms: rms,
        input_referred_rms: rms / cfg.lna_gain,
        bandwidth_hz: beta * cfg.ota_gm / c_t / (2.0 * std::f64::consts::PI),
        z_in: 1.0 / (2.0 * f_chop * cfg.c_s),
    }
}

/// RMS of white noise of `density` V/√Hz over `band` Hz.
pub fn rms_in_band(density: f64, band: f64) -> f64 {
    density * band.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mote::power_timeline;

    const F_MAIN: f64 = 1.78e6;

    fn setup(cfg: &MoteConfig) -> (MoteState, SubcarrierCode, f64) {
        let ev = power_timeline(0.0, 60e-6, cfg).unwrap();
        let state = MoteState::at_amp_ready(&ev, 3.0, cfg, 0.0);
        let code = SubcarrierCode::divider(0, F_MAIN, 32, 32).unwrap();
        (state, code, ev.amp_ready)
    }

    #[test]
    fn dc_input_becomes_square_at_chop_rate() {
        let cfg = MoteConfig::default();
        let (state, code, t0) = setup(&cfg);
        let fs = F_MAIN / 2.0;
        let v = Waveform::from_fn(64, fs, t0, |_| 1e-3);
        let y = afe_process(&v, &cfg, &state, &code, &AfeNoise::default()).unwrap();
        // settled chip ends alternate ±16 mV
        for chip in 1..8 {
            let s = y.out.samples[chip * 8 + 7];
            let want = if chip % 2 == 0 { 16e-3 } else { -16e-3 };
            assert!((s - want).abs() < 16e-6, "chip {chip}: {s}");
        }
        assert_eq!(y.saturated, 0);
    }

    #[test]
    fn chopper_round_trip_recovers_dc() {
        let cfg = MoteConfig::default();
        let (state, code, t0) = setup(&cfg);
        let fs = F_MAIN / 2.0;
        let v = Waveform::from_fn(128, fs, t0, |_| -2.5e-3);
        let y = afe_process(&v, &cfg, &state, &code, &AfeNoise::default()).unwrap();
        let plateaus: Vec<f64> = (2..16)
            .map(|c| y.out.samples[c * 8 + 7] * code.sign_at(y.out.time_at(c * 8 + 7) - t0))
            .collect();
        let mean = plateaus.iter().sum::<f64>() / plateaus.len() as f64;
        assert!((mean / (16.0 * -2.5e-3) - 1.0).abs() < 1e-3, "{mean}");
    }

    #[test]
    fn tone_amplitudes_and_clipping() {
        let cfg = MoteConfig::default();
        let (state, code, t0) = setup(&cfg);
        let fs = F_MAIN / 2.0;
        let n = (fs / 313.0) as usize;
        let tone = |vpp: f64| {
            Waveform::from_fn(n, fs, t0, move |t| {
                vpp / 2.0 * (2.0 * std::f64::consts::PI * 313.0 * (t - t0)).sin()
            })
        };
        let y = afe_process(&tone(20e-3), &cfg, &state, &code, &AfeNoise::default()).unwrap();
        assert_eq!(y.saturated, 0);
        assert!(
            (y.out.peak_to_peak() - 0.32).abs() < 0.005,
            "{}",
            y.out.peak_to_peak()
        );
        let y = afe_process(&tone(30e-3), &cfg, &state, &code, &AfeNoise::default()).unwrap();
        assert!(y.saturated > 0);
    }

    #[test]
    fn unpowered_mote_is_silent() {
        let cfg = MoteConfig::default();
        let ev = power_timeline(0.0, 60e-6, &cfg).unwrap();
        let state = MoteState::at_amp_ready(&ev, 1.0, &cfg, 0.0);
        assert!(!state.powered);
        let code = SubcarrierCode::divider(0, F_MAIN, 32, 32).unwrap();
        let v = Waveform::from_fn(16, F_MAIN / 2.0, 0.0, |_| 1e-3);
        let y = afe_process(&v, &cfg, &state, &code, &AfeNoise::default()).unwrap();
        assert!(y.out.samples.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn noise_model_values() {
        let cfg = MoteConfig::default();
        let spec = afe_noise_model(&cfg, 55e3, 300.0, 1.0, 2.0 / 3.0);
        assert!((spec.z_in - 1.29e6).abs() < 0.01e6, "{}", spec.z_in);
        assert!(
            (spec.bandwidth_hz - 180e3).abs() < 2e3,
            "{}",
            spec.bandwidth_hz
        );
        // under 10 µVrms input-referred across the LNA band
        assert!(spec.input_referred_rms < 10e-6);
        assert!((rms_in_band(76e-9, 5e3) - 5.37e-6).abs() < 0.01e-6);

        let doubled = MoteConfig {
            c_load: 2.0 * cfg.c_load,
            c_f: 2.0 * cfg.c_f,
            c_s: 2.0 * cfg.c_s,
            ..cfg.clone()
        };
        let spec2 = afe_noise_model(&doubled, 55e3, 300.0, 1.0, 2.0 / 3.0);
        assert!((spec2.c_t / spec.c_t - 2.0).abs() < 1e-12);
        assert!((spec2.output_noise_power / spec.output_noise_power - 0.5).abs() < 1e-12);
        assert!((spec2.bandwidth_hz / spec.bandwidth_hz - 0.5).abs() < 1e-12);
    }

    #[test]
    fn decode_weights_without_filter_memory() {
        // With an infinitely wide LNA the weights reduce to code/N.
        let cfg = MoteConfig {
            lna_bandwidth: 1e15,
            ..MoteConfig::default()
        };
        let code = SubcarrierCode::divider(0, F_MAIN, 32, 32).unwrap();
        let w = decode_weights(&cfg, &code, F_MAIN / 2.0, 5, 32);
        assert!((w.signal_gain - 1.0).abs() < 1e-12);
        assert!((w.noise_norm - 1.0 / 32.0).abs() < 1e-12);
        // the real LNA loses edge energy
        let w = decode_weights(&MoteConfig::default(), &code, F_MAIN / 2.0, 5, 32);
        assert!(
            w.signal_gain < 0.95 && w.signal_gain > 0.85,
            "{}",
            w.signal_gain
        );
        assert!(w.noise_norm < 1.0 / 32.0);
    }
}
