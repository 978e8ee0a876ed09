use serde::Serialize;

use super::{afe_process, AfeNoise, MoteConfig, MoteState, TimelineEvents};
use crate::error::{Error, Result};
use crate::interrogator::SubcarrierCode;
use crate::scalar::Real;
use crate::waveform::Waveform;

/// Normalised rectifier load current versus `u = V_rect / V_s`:
/// `(1 − u)(1 − (2/π) asin u)`.
///
/// Decreasing and convex on `[0, 1]`, with `I(0) = 1` and `I(1) = 0`.
pub fn rectifier_load_curve<F: Real>(u: F) -> Result<F> {
    if !(u >= F::zero() && u <= F::one()) {
        return Err(Error::Domain(u.to_f64_lossy()));
    }
    let two = F::lit(2.0);
    Ok((F::one() - u) * (F::one() - two / F::PI() * u.asin()))
}

/// Derivative of [`rectifier_load_curve`]. Diverges at `u = 1`.
pub fn rectifier_slope<F: Real>(u: F) -> Result<F> {
    if !(u >= F::zero() && u <= F::one()) {
        return Err(Error::Domain(u.to_f64_lossy()));
    }
    let two = F::lit(2.0);
    let asin_term = F::one() - two / F::PI() * u.asin();
    let root = (F::one() - u * u).sqrt();
    Ok(-asin_term - (F::one() - u) * two / (F::PI() * root))
}

/// Solves `I(u) = target` for `u` in `[0, 1]`.
pub fn rectifier_inverse<F: Real>(target: F) -> Result<F> {
    if !(target >= F::zero() && target <= F::one()) {
        return Err(Error::Domain(target.to_f64_lossy()));
    }
    let (mut lo, mut hi) = (F::zero(), F::one());
    let mut u = F::lit(0.5);
    let tol = F::epsilon() * F::lit(8.0);
    for _ in 0..200 {
        let r = rectifier_load_curve(u)? - target;
        if r.abs() <= tol {
            return Ok(u);
        }
        // I is decreasing: r > 0 means u is too small
        if r > F::zero() {
            lo = u;
        } else {
            hi = u;
        }
        let d = rectifier_slope(u)?;
        let step = u - r / d;
        u = if d.is_finite() && d < F::zero() && step > lo && step < hi {
            step
        } else {
            (lo + hi) / F::lit(2.0)
        };
        if hi - lo <= tol {
            return Ok(u);
        }
    }
    Ok(u)
}

/// Transconductor output with mirror gain and cubic compression, A.
pub fn gm_transfer<F: Real>(v: F, cfg: &MoteConfig) -> F {
    let gm = F::lit(cfg.gm * cfg.mirror_gain);
    let i_m0 = F::lit(cfg.i_m0);
    if !cfg.nonlinear {
        return i_m0 + gm * v;
    }
    let x = v / F::lit(cfg.lna_output_range);
    i_m0 + gm * v * (F::one() - F::lit(cfg.gm_cubic) * x * x)
}

/// Converts the LNA output waveform into modulation current, A.
pub fn gm_convert(v_lna: &Waveform, cfg: &MoteConfig) -> Waveform {
    v_lna.map(|v| gm_transfer(v, cfg))
}

/// Maps a modulation current to a reflection coefficient for a harvested
/// amplitude `v_s`. Returns the unclipped value.
pub fn reflection_from_current(i_m: f64, v_s: f64, cfg: &MoteConfig) -> Result<f64> {
    let u0 = cfg.gamma_h;
    let x = (i_m - cfg.i_m0) * cfg.r_s / v_s;
    if !cfg.nonlinear {
        return Ok(u0 - x);
    }
    let s0 = -rectifier_slope(u0)?;
    let target = rectifier_load_curve(u0)? + s0 * x;
    if !(0.0..=1.0).contains(&target) {
        // beyond the curve: saturate at the nearest end
        return Ok(if target > 1.0 { 0.0 } else { 1.0 });
    }
    rectifier_inverse(target)
}

/// Reflection coefficient over one pulse.
#[derive(Debug, Clone, Serialize)]
pub struct ReflectionTrace {
    #[serde(skip)]
    pub gamma: Waveform,
    pub gamma_h: f64,
    /// Samples limited by the modulation-depth cap.
    pub clipped: usize,
    pub code_id: usize,
}

/// Builds the reflection trace for one pulse.
///
/// `i_m` is the modulation current sampled from amplifier release onward.
/// Before that the mote holds `Γ_h`; the trace is extended backwards on the
/// same grid to cover the pulse start and ends at the pulse end.
pub fn echo_modulate(
    v_s: f64,
    i_m: &Waveform,
    events: &TimelineEvents,
    cfg: &MoteConfig,
    code_id: usize,
) -> Result<ReflectionTrace> {
    if !(v_s > 0.0) {
        return Err(Error::validation("v_s", format!("must be > 0, got {v_s}")));
    }
    let fs = i_m.sample_rate;
    let dt = 1.0 / fs;
    let lead = ((i_m.t0 - events.pulse_start) * fs + 1e-9).floor().max(0.0) as usize;
    let t0 = i_m.t0 - lead as f64 * dt;
    let end = events.modulation_window.1;
    let powered = v_s >= cfg.v_s_min;
    let u0 = cfg.gamma_h;
    let cap = cfg.max_mod_depth;
    let mut gamma = vec![u0; lead];
    let mut clipped = 0;
    for (i, &current) in i_m.samples.iter().enumerate() {
        if i_m.time_at(i) >= end - 1e-9 * dt {
            break;
        }
        let g = if powered {
            reflection_from_current(current, v_s, cfg)?
        } else {
            u0
        };
        let lim = g.clamp(u0 - cap, u0 + cap);
        if lim != g {
            clipped += 1;
        }
        gamma.push(lim);
    }
    Ok(ReflectionTrace {
        gamma: Waveform::new(gamma, fs, t0),
        gamma_h: u0,
        clipped,
        code_id,
    })
}

/// One point of the static transfer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransferPoint {
    pub v_in: f64,
    /// Code-weighted change of the piezo voltage, V.
    pub delta_v_pz: f64,
}

/// Noiseless DC transfer `v_in → ΔV_PZ` through the whole mote chain.
///
/// Each input is held for `chips` chips at `sample_rate`; the result
/// averages the settled end of every chip after the first two, weighted by
/// the code, and scales the reflection change by `v_s`.
pub fn static_transfer(
    cfg: &MoteConfig,
    code: &SubcarrierCode,
    v_s: f64,
    sample_rate: f64,
    inputs: &[f64],
) -> Result<Vec<TransferPoint>> {
    let chips = 16usize.max(2 * code.chips.len());
    let per_chip = (code.chip_duration * sample_rate).round() as usize;
    if per_chip == 0 {
        return Err(Error::validation("sample_rate", "below the chip rate"));
    }
    let pulse = cfg.t_startup_total + chips as f64 * code.chip_duration + 1.0 / sample_rate;
    let events = super::power_timeline(0.0, pulse, cfg)?;
    let state = MoteState::at_amp_ready(&events, v_s, cfg, 0.0);
    inputs
        .iter()
        .map(|&v| {
            let x = Waveform::from_fn(chips * per_chip, sample_rate, events.amp_ready, |_| v);
            let lna = afe_process(&x, cfg, &state, code, &AfeNoise::default())?;
            let trace = echo_modulate(v_s, &gm_convert(&lna.out, cfg), &events, cfg, code.code_id)?;
            let lead = trace.gamma.len() - x.len().min(trace.gamma.len());
            let mut acc = 0.0;
            let mut n = 0;
            for chip in 2..chips {
                let i = chip * per_chip + per_chip - 1;
                let Some(&g) = trace.gamma.samples.get(lead + i) else {
                    break;
                };
                let s = code.sign_at(x.time_at(i) - state.code_start);
                acc += s * (g - trace.gamma_h);
                n += 1;
            }
            Ok(TransferPoint {
                v_in: v,
                delta_v_pz: acc / n as f64 * v_s,
            })
        })
        .collect()
}
