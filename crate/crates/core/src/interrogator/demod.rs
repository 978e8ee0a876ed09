use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::waveform::Waveform;

/// How the received waveform is turned into an amplitude envelope.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DemodMode {
    /// The input already is an envelope; passed through unchanged.
    #[default]
    Envelope,
    /// RF samples: I/Q mixing against the transmit reference.
    Carrier {
        /// Offset of the local reference from the transmit carrier, Hz.
        reference_offset_hz: f64,
        /// Largest offset the loop can hold, Hz.
        lock_range_hz: f64,
    },
}

/// Recovers the echo amplitude envelope.
///
/// In carrier mode the input is mixed with cos and sin of the reference,
/// each product is smoothed by two cascaded one-cycle boxcars (nulls at
/// every carrier harmonic) and the envelope is `2 √(I² + Q²)`. The first
/// two carrier cycles are filter fill and should be ignored.
pub fn demodulate_carrier(rx: &Waveform, f_main: f64, mode: DemodMode) -> Result<Waveform> {
    let (offset, range) = match mode {
        DemodMode::Envelope => return Ok(rx.clone()),
        DemodMode::Carrier {
            reference_offset_hz,
            lock_range_hz,
        } => (reference_offset_hz, lock_range_hz),
    };
    if offset.abs() > range {
        return Err(Error::LockFailure(format!(
            "reference offset {offset} Hz exceeds lock range {range} Hz"
        )));
    }
    if rx.sample_rate < 8.0 * f_main {
        return Err(Error::validation(
            "sample_rate",
            format!("{} Hz is below 8 x f_main", rx.sample_rate),
        ));
    }
    let w = 2.0 * std::f64::consts::PI * (f_main + offset);
    let (i, q): (Vec<f64>, Vec<f64>) = rx
        .samples
        .iter()
        .enumerate()
        .map(|(n, &x)| {
            let ph = w * rx.time_at(n);
            (x * ph.cos(), -x * ph.sin())
        })
        .unzip();
    let span = (rx.sample_rate / f_main).round().max(1.0) as usize;
    let i = boxcar(&boxcar(&i, span), span);
    let q = boxcar(&boxcar(&q, span), span);
    let env = i.iter().zip(&q).map(|(a, b)| 2.0 * a.hypot(*b)).collect();
    Ok(Waveform::new(env, rx.sample_rate, rx.t0))
}

/// Causal moving average over `n` samples, zero initial state.
fn boxcar(x: &[f64], n: usize) -> Vec<f64> {
    let mut acc = 0.0;
    x.iter()
        .enumerate()
        .map(|(k, &v)| {
            acc += v;
            if k >= n {
                acc -= x[k - n];
            }
            acc / n as f64
        })
        .collect()
}
