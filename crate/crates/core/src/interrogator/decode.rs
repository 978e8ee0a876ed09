use serde::{Deserialize, Serialize};
use thiserror::Error;

use nalgebra::{DMatrix, DVector};

use super::codes::{lcm, SubcarrierCode};
use crate::units::de;
use crate::waveform::Waveform;

/// Fixed window lengths of the compatibility truncation, s.
pub const LITERAL_WINDOWS: [f64; 2] = [47e-6, 29e-6];

/// How the available modulation window is cut down before averaging.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    /// Largest whole multiple of the snap unit.
    #[default]
    Snapped,
    /// 47 µs when it fits, otherwise 29 µs.
    Literal,
}

/// How a mote's sample is extracted from its window.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeMethod {
    /// Multiply by the mote's code and average; the window start is
    /// rounded onto [`window_alignment`].
    #[default]
    Average,
    /// Least-squares fit of level, slope and every active code with its
    /// own slope ([`decode_joint`]); the window opens right after the guard.
    Joint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecodeConfig {
    /// Time skipped after amplifier release before averaging, s.
    #[serde(deserialize_with = "de::time")]
    pub guard: f64,
    pub truncation: Truncation,
    pub method: DecodeMethod,
}

impl DecodeConfig {
    /// Guard rounded up to a whole multiple of `align` seconds in
    /// averaging mode; unrounded otherwise or when `align = 0`.
    pub fn settle(&self, align: f64) -> f64 {
        if align > 0.0 && self.method == DecodeMethod::Average {
            (self.guard / align - 1e-9).ceil().max(0.0) * align
        } else {
            self.guard
        }
    }
}

impl Default for DecodeConfig {
    fn default() -> Self {
        DecodeConfig {
            // about one LNA time constant at 180 kHz
            guard: 1e-6,
            truncation: Truncation::Snapped,
            method: DecodeMethod::Average,
        }
    }
}

/// Why an echo produced no sample.
#[derive(Debug, Clone, PartialEq, Error, Serialize)]
pub enum DropReason {
    #[error("window {available_us:.2} us shorter than {needed_us:.2} us")]
    TooShort { available_us: f64, needed_us: f64 },
    #[error("window runs past the received record")]
    OutsideRecord,
    #[error("mote unpowered")]
    Unpowered,
}

/// Averaging window for one echo, in received time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecodeWindow {
    /// Time the mote's code started (its amplifier release), s.
    pub code_start: f64,
    pub start: f64,
    pub len: f64,
}

/// Snap unit for a set of codes sharing one chip duration: the least
/// common multiple of their common period and two periods of the fastest
/// code, s.
pub fn snap_unit(codes: &[&SubcarrierCode]) -> f64 {
    let Some(first) = codes.first() else {
        return 0.0;
    };
    let common = codes.iter().fold(1, |acc, c| lcm(acc, c.chips.len()));
    let fastest = codes.iter().map(|c| c.chips.len()).min().unwrap_or(1);
    lcm(common, 2 * fastest) as f64 * first.chip_duration
}

/// Half the common period of a code set, s.
///
/// Two square codes started together are both odd about every multiple of
/// this time, so their product is even about it. A window centred there
/// rejects not only the other mote's level but also its slope; starting
/// the window anywhere else lets the slope of one mote's input leak into
/// the other's sample in proportion to the signal frequency.
pub fn window_alignment(codes: &[&SubcarrierCode]) -> f64 {
    let Some(first) = codes.first() else {
        return 0.0;
    };
    let common = codes.iter().fold(1, |acc, c| lcm(acc, c.chips.len()));
    common as f64 * first.chip_duration / 2.0
}

/// Places the averaging window between amplifier release and the end of
/// the modulated echo. In averaging mode the guard is first rounded up to
/// a multiple of `align` (see [`window_alignment`]); if the window no
/// longer fits, the unrounded guard is used.
pub fn decode_window(
    amp_ready: f64,
    modulation_end: f64,
    unit: f64,
    align: f64,
    cfg: &DecodeConfig,
) -> Result<DecodeWindow, DropReason> {
    let aligned = place(amp_ready + cfg.settle(align), modulation_end, unit, cfg);
    match aligned {
        Err(DropReason::TooShort { .. }) => place(amp_ready + cfg.guard, modulation_end, unit, cfg),
        other => other,
    }
    .map(|(start, len)| DecodeWindow {
        code_start: amp_ready,
        start,
        len,
    })
}

fn place(
    start: f64,
    modulation_end: f64,
    unit: f64,
    cfg: &DecodeConfig,
) -> Result<(f64, f64), DropReason> {
    let available = modulation_end - start;
    let len = match cfg.truncation {
        Truncation::Snapped => {
            let k = (available / unit + 1e-9).floor();
            if k < 1.0 {
                return Err(DropReason::TooShort {
                    available_us: available * 1e6,
                    needed_us: unit * 1e6,
                });
            }
            k * unit
        }
        Truncation::Literal => *LITERAL_WINDOWS
            .iter()
            .find(|&&w| w <= available + 1e-12)
            .ok_or(DropReason::TooShort {
                available_us: available * 1e6,
                needed_us: LITERAL_WINDOWS[1] * 1e6,
            })?,
    };
    Ok((start, len))
}

/// Result of averaging one echo.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecodedSample {
    /// `mean(envelope · code)` over the window.
    pub raw: f64,
    pub t_int: f64,
    pub n_samples: usize,
    /// Mean envelope level in the window.
    pub level: f64,
    /// RMS of what remains after removing level and coded component.
    pub residual_rms: f64,
}

impl DecodedSample {
    /// Echo level over the uncoded residue, dB.
    pub fn echo_snr_db(&self) -> f64 {
        20.0 * (self.level.abs() / self.residual_rms).log10()
    }
}

/// Code-multiply-and-average decode of one echo.
pub fn decode_cdm(
    envelope: &Waveform,
    code: &SubcarrierCode,
    window: &DecodeWindow,
) -> Result<DecodedSample, DropReason> {
    let fs = envelope.sample_rate;
    let first = ((window.start - envelope.t0) * fs - 1e-6).ceil();
    let n = (window.len * fs).round() as usize;
    if first < 0.0 || n == 0 || first as usize + n > envelope.len() {
        return Err(DropReason::OutsideRecord);
    }
    let first = first as usize;
    let mut raw = 0.0;
    let mut level = 0.0;
    let signs: Vec<f64> = (first..first + n)
        .map(|i| code.sign_at(envelope.time_at(i) - window.code_start))
        .collect();
    for (k, &s) in signs.iter().enumerate() {
        let e = envelope.samples[first + k];
        raw += e * s;
        level += e;
    }
    raw /= n as f64;
    level /= n as f64;
    let residual = signs
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            let r = envelope.samples[first + k] - level - raw * s;
            r * r
        })
        .sum::<f64>()
        / n as f64;
    Ok(DecodedSample {
        raw,
        t_int: n as f64 / fs,
        n_samples: n,
        level,
        residual_rms: residual.sqrt(),
    })
}

/// A code and the received time it started, for [`decode_joint`].
#[derive(Debug, Clone, Copy)]
pub struct ActiveCode<'a> {
    pub code: &'a SubcarrierCode,
    pub code_start: f64,
    /// Pole of the mote's single-pole front-end at the envelope sample
    /// rate (`y ← pole·y + (1 − pole)·x`), or `None` for an ideal code.
    pub pole: Option<f64>,
}

impl ActiveCode<'_> {
    /// The code as the front-end passes it, from rest at `code_start`,
    /// sampled on a grid of `fs` starting there.
    fn template(&self, fs: f64, len: usize) -> Vec<f64> {
        let mut y = 0.0;
        (0..len)
            .map(|m| {
                let sign = self.code.sign_at(m as f64 / fs);
                match self.pole {
                    Some(a) => {
                        y = a * y + (1.0 - a) * sign;
                        y
                    }
                    None => sign,
                }
            })
            .collect()
    }
}

/// Linear interpolation of `g` (grid `1/fs` from 0) at `x` seconds.
fn interp(g: &[f64], x: f64, fs: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    let u = x * fs;
    let i = u.floor() as usize;
    match (g.get(i), g.get(i + 1)) {
        (Some(a), Some(b)) => a + (b - a) * (u - i as f64),
        (Some(a), None) => *a,
        _ => 0.0,
    }
}

/// Joint least-squares decode of one echo.
///
/// Over the window the envelope is fitted with a constant, a ramp, and
/// for every active code both its front-end template and the template
/// times the ramp (the ramp centred on the window). `raw` is the
/// coefficient of `codes[own]`, that mote's coded component at the window
/// centre. Unlike plain averaging this rejects the other motes' input
/// slopes whatever the window phase. Linearly dependent columns are
/// resolved by the pseudo-inverse.
pub fn decode_joint(
    envelope: &Waveform,
    codes: &[ActiveCode],
    own: usize,
    window: &DecodeWindow,
) -> Result<DecodedSample, DropReason> {
    let fs = envelope.sample_rate;
    let first = ((window.start - envelope.t0) * fs - 1e-6).ceil();
    let n = (window.len * fs).round() as usize;
    if first < 0.0 || n == 0 || first as usize + n > envelope.len() || own >= codes.len() {
        return Err(DropReason::OutsideRecord);
    }
    let first = first as usize;
    let end = window.start + window.len;
    let templates: Vec<Vec<f64>> = codes
        .iter()
        .map(|c| c.template(fs, ((end - c.code_start) * fs).ceil().max(0.0) as usize + 2))
        .collect();
    let cols = 2 + 2 * codes.len();
    let centre = window.start + window.len / 2.0;
    let mut a = DMatrix::zeros(n, cols);
    let mut b = DVector::zeros(n);
    for k in 0..n {
        let t = envelope.time_at(first + k);
        let ramp = (t - centre) / window.len;
        a[(k, 0)] = 1.0;
        a[(k, 1)] = ramp;
        for (j, (c, g)) in codes.iter().zip(&templates).enumerate() {
            let v = interp(g, t - c.code_start, fs);
            a[(k, 2 + 2 * j)] = v;
            a[(k, 3 + 2 * j)] = v * ramp;
        }
        b[k] = envelope.samples[first + k];
    }
    let svd = a.clone().svd(true, true);
    let tol = svd.singular_values.max() * 1e-10;
    let x = svd.solve(&b, tol).map_err(|_| DropReason::OutsideRecord)?;
    let residual = (&b - &a * &x).norm_squared() / n as f64;
    Ok(DecodedSample {
        raw: x[2 + 2 * own],
        t_int: n as f64 / fs,
        n_samples: n,
        level: x[0],
        residual_rms: residual.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interrogator::{build_code_book, CodeMode};

    const F: f64 = 1.78e6;
    const FS: f64 = F / 2.0;

    #[test]
    fn snap_units() {
        let book = build_code_book(2, F, 32, CodeMode::default()).unwrap();
        let one = snap_unit(&[&book.codes[0]]);
        assert!((one - 2.0 * 32.0 / F).abs() < 1e-15);
        let both = snap_unit(&[&book.codes[0], &book.codes[1]]);
        assert!((both - 64.0 / F).abs() < 1e-15);
        assert!((window_alignment(&[&book.codes[0]]) - 16.0 / F).abs() < 1e-15);
        assert!((window_alignment(&[&book.codes[0], &book.codes[1]]) - 32.0 / F).abs() < 1e-15);
    }

    #[test]
    fn window_placement() {
        let cfg = DecodeConfig::default();
        let unit = 64.0 / F;
        let w = decode_window(11e-6, 60e-6, unit, 0.0, &cfg).unwrap();
        assert!((w.start - 12e-6).abs() < 1e-15);
        let half = 32.0 / F;
        let w = decode_window(11e-6, 80e-6, unit, half, &cfg).unwrap();
        assert!((w.start - 11e-6 - half).abs() < 1e-15);
        let w = decode_window(11e-6, 60e-6, unit, half, &cfg).unwrap();
        assert!(
            (w.start - 12e-6).abs() < 1e-15,
            "falls back to the bare guard"
        );
        assert!((w.len - unit).abs() < 1e-15);
        assert!(matches!(
            decode_window(11e-6, 45e-6, unit, 0.0, &cfg),
            Err(DropReason::TooShort { .. })
        ));
        let lit = DecodeConfig {
            truncation: Truncation::Literal,
            ..cfg
        };
        assert_eq!(
            decode_window(0.0, 70e-6, unit, 0.0, &lit).unwrap().len,
            47e-6
        );
        assert_eq!(
            decode_window(0.0, 40e-6, unit, 0.0, &lit).unwrap().len,
            29e-6
        );
        assert!(decode_window(0.0, 29.5e-6, unit, 0.0, &lit).is_err());
    }

    fn code_wave(code: &SubcarrierCode, n: usize, depth: f64) -> Waveform {
        Waveform::from_fn(n, FS, 0.0, |t| depth * code.sign_at(t))
    }

    #[test]
    fn code_decodes_to_one_and_orthogonal_to_zero() {
        let book = build_code_book(2, F, 32, CodeMode::default()).unwrap();
        let w = DecodeWindow {
            code_start: 0.0,
            start: 0.0,
            len: 64.0 / F,
        };
        let own = decode_cdm(&code_wave(&book.codes[0], 64, 1.0), &book.codes[0], &w).unwrap();
        assert_eq!(own.raw, 1.0);
        assert_eq!(own.n_samples, 32);
        let other = decode_cdm(&code_wave(&book.codes[1], 64, 1.0), &book.codes[0], &w).unwrap();
        assert_eq!(other.raw, 0.0);
        let late = DecodeWindow { start: 60e-6, ..w };
        assert_eq!(
            decode_cdm(&code_wave(&book.codes[0], 64, 1.0), &book.codes[0], &late),
            Err(DropReason::OutsideRecord)
        );
    }

    #[test]
    fn walsh_book_orthogonal_on_snapped_windows() {
        let book = build_code_book(4, F, 32, CodeMode::Walsh).unwrap();
        let refs: Vec<&SubcarrierCode> = book.codes.iter().collect();
        let unit = snap_unit(&refs);
        for a in &book.codes {
            for b in &book.codes {
                for k in 1..3 {
                    let w = DecodeWindow {
                        code_start: 0.0,
                        start: 0.0,
                        len: k as f64 * unit,
                    };
                    let d = decode_cdm(&code_wave(b, 400, 1.0), a, &w).unwrap();
                    let want = if a.code_id == b.code_id { 1.0 } else { 0.0 };
                    assert_eq!(d.raw, want);
                }
            }
        }
    }

    #[test]
    fn joint_decode_rejects_the_other_slope() {
        let book = build_code_book(2, F, 32, CodeMode::default()).unwrap();
        let (a, b) = (&book.codes[0], &book.codes[1]);
        // window opening half a chip in: averaging leaks the slope of b
        let w = DecodeWindow {
            code_start: 0.0,
            start: 4.0 / FS,
            len: 64.0 / F,
        };
        let env = Waveform::from_fn(80, FS, 0.0, |t| {
            1.0 + 0.3 * a.sign_at(t) + (0.2 + 2e3 * t) * b.sign_at(t)
        });
        let avg = decode_cdm(&env, a, &w).unwrap().raw;
        assert!((avg - 0.3).abs() > 1e-3, "{avg}");
        let active = [
            ActiveCode {
                code: a,
                code_start: 0.0,
                pole: None,
            },
            ActiveCode {
                code: b,
                code_start: 0.0,
                pole: None,
            },
        ];
        let joint = decode_joint(&env, &active, 0, &w).unwrap();
        assert!((joint.raw - 0.3).abs() < 1e-12, "{}", joint.raw);
        let centre = w.start + w.len / 2.0;
        let other = decode_joint(&env, &active, 1, &w).unwrap().raw;
        assert!((other - (0.2 + 2e3 * centre)).abs() < 1e-12);
        assert!(joint.residual_rms < 1e-12);
    }

    #[test]
    fn averaging_follows_sinc() {
        let code = SubcarrierCode::divider(0, F, 32, 32).unwrap();
        let t_int = 64.0 / F;
        let w = DecodeWindow {
            code_start: 0.0,
            start: 0.0,
            len: t_int,
        };
        let mid = t_int / 2.0 - 0.5 / FS;
        for f in [313.0, 1e3, 5e3, 15e3, 1.0 / t_int] {
            let env = Waveform::from_fn(64, FS, 0.0, |t| {
                code.sign_at(t) * (2.0 * std::f64::consts::PI * f * (t - mid)).cos()
            });
            let got = decode_cdm(&env, &code, &w).unwrap().raw;
            let x = std::f64::consts::PI * f * t_int;
            let sinc = x.sin() / x;
            assert!(
                (got - sinc).abs() <= 0.02 * sinc.abs().max(0.02),
                "{f}: {got} vs {sinc}"
            );
        }
    }
}
