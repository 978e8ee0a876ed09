use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use super::spectrum::Window;
use crate::error::{Error, Result};

/// Harmonics above the fundamental that enter THD.
pub const THD_HARMONICS: usize = 5;
/// Lower bound on reported distortion, dB.
pub const DB_FLOOR: f64 = -120.0;
/// Flat-top main-lobe half width, bins; residual spurs closer to DC are ignored.
const SPUR_GUARD_BINS: usize = 5;

/// One harmonic line of the fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Harmonic {
    pub order: usize,
    /// Where the harmonic lands after folding into [0, fs/2], Hz.
    pub frequency: f64,
    /// Peak amplitude, V.
    pub amplitude: f64,
    /// True if the harmonic lies above Nyquist and was folded.
    pub folded: bool,
}

/// Figures of merit of a single-tone record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToneMetrics {
    pub f0: f64,
    /// Fundamental peak amplitude, V.
    pub amplitude: f64,
    pub dc: f64,
    pub harmonics: Vec<Harmonic>,
    pub thd_db: f64,
    pub sfdr_db: f64,
    pub snr_db: f64,
    pub sndr_db: f64,
    /// RMS of the fit residual, V.
    pub noise_rms: f64,
    /// Largest residual spur amplitude and its frequency.
    pub worst_spur: (f64, f64),
    /// Harmonics that coincided with DC, the fundamental or each other and
    /// so could not be separated.
    pub merged_harmonics: Vec<usize>,
}

fn fold(f: f64, fs: f64) -> f64 {
    let r = f.rem_euclid(fs);
    if r > fs / 2.0 {
        fs - r
    } else {
        r
    }
}

fn db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

/// Analyses a tone at known `f0`.
///
/// The record is fitted by least squares with a DC term, the fundamental
/// and harmonics 2..=6 (folded if above Nyquist). THD uses the fitted
/// harmonic powers, SNR the residual power, SNDR both. SFDR compares the
/// fundamental against the larger of the strongest harmonic and the
/// strongest residual spur in a flat-top spectrum.
pub fn tone_metrics(samples: &[f64], fs: f64, f0: f64) -> Result<ToneMetrics> {
    if !(f0 > 0.0 && f0 < fs / 2.0) {
        return Err(Error::validation(
            "f0",
            format!("{f0} Hz is outside (0, {} Hz)", fs / 2.0),
        ));
    }
    let n = samples.len();
    if n < 64 {
        return Err(Error::TooShort { needed: 64, got: n });
    }
    let tol = fs / n as f64 * 0.5;
    // unique folded frequencies; index 0 is the fundamental
    let mut lines: Vec<f64> = vec![f0];
    let mut harmonic_line = Vec::new();
    let mut merged = Vec::new();
    for order in 2..=THD_HARMONICS + 1 {
        let f = fold(order as f64 * f0, fs);
        let hit = lines.iter().position(|&g| (g - f).abs() < tol);
        if f < tol || hit.is_some() {
            merged.push(order);
            harmonic_line.push((order, f, None));
        } else {
            lines.push(f);
            harmonic_line.push((order, f, Some(lines.len() - 1)));
        }
    }
    let mut cols: Vec<(usize, bool)> = Vec::new();
    for (i, &f) in lines.iter().enumerate() {
        cols.push((i, false));
        if (f - fs / 2.0).abs() >= tol {
            cols.push((i, true));
        }
    }
    let m = 1 + cols.len();
    let a = DMatrix::from_fn(n, m, |r, c| {
        if c == 0 {
            return 1.0;
        }
        let (line, sine) = cols[c - 1];
        let ph = 2.0 * PI * lines[line] * r as f64 / fs;
        if sine {
            ph.sin()
        } else {
            ph.cos()
        }
    });
    let b = DVector::from_column_slice(samples);
    let coef = a
        .clone()
        .svd(true, true)
        .solve(&b, 1e-12)
        .map_err(|e| Error::Degenerate(format!("tone fit: {e}")))?;
    let mut amp = vec![0.0f64; lines.len()];
    for (c, &(line, _)) in cols.iter().enumerate() {
        amp[line] += coef[c + 1] * coef[c + 1];
    }
    let amp: Vec<f64> = amp.into_iter().map(f64::sqrt).collect();
    let residual: Vec<f64> = (&b - &a * &coef).iter().copied().collect();
    let noise_power = residual.iter().map(|r| r * r).sum::<f64>() / n as f64;

    let harmonics: Vec<Harmonic> = harmonic_line
        .iter()
        .map(|&(order, f, line)| Harmonic {
            order,
            frequency: f,
            amplitude: line.map_or(0.0, |l| amp[l]),
            folded: order as f64 * f0 > fs / 2.0,
        })
        .collect();
    let p1 = amp[0] * amp[0] / 2.0;
    if p1 == 0.0 {
        return Err(Error::Degenerate(format!("no component at {f0} Hz")));
    }
    let ph: f64 = harmonics
        .iter()
        .map(|h| h.amplitude * h.amplitude / 2.0)
        .sum();
    let worst_harmonic = harmonics.iter().map(|h| h.amplitude).fold(0.0, f64::max);
    let worst_spur = residual_spur(&residual, fs);
    let spur = worst_harmonic.max(worst_spur.0);
    Ok(ToneMetrics {
        f0,
        amplitude: amp[0],
        dc: coef[0],
        thd_db: db(ph / p1).max(DB_FLOOR),
        sfdr_db: if spur > 0.0 {
            db(p1 / (spur * spur / 2.0)).min(-DB_FLOOR)
        } else {
            -DB_FLOOR
        },
        snr_db: db(p1 / noise_power).min(-DB_FLOOR),
        sndr_db: db(p1 / (noise_power + ph)).min(-DB_FLOOR),
        noise_rms: noise_power.sqrt(),
        worst_spur,
        harmonics,
        merged_harmonics: merged,
    })
}

/// Joint least-squares amplitudes of the components at `freqs` (with a
/// DC term fitted alongside), V.
pub fn tone_amplitudes(samples: &[f64], fs: f64, freqs: &[f64]) -> Result<Vec<f64>> {
    let n = samples.len();
    let m = 1 + 2 * freqs.len();
    if n < m {
        return Err(Error::TooShort { needed: m, got: n });
    }
    let a = DMatrix::from_fn(n, m, |r, c| {
        if c == 0 {
            return 1.0;
        }
        let ph = 2.0 * PI * freqs[(c - 1) / 2] * r as f64 / fs;
        if c % 2 == 1 {
            ph.cos()
        } else {
            ph.sin()
        }
    });
    let coef = a
        .svd(true, true)
        .solve(&DVector::from_column_slice(samples), 1e-12)
        .map_err(|e| Error::Degenerate(format!("tone fit: {e}")))?;
    Ok((0..freqs.len())
        .map(|i| coef[1 + 2 * i].hypot(coef[2 + 2 * i]))
        .collect())
}

/// Largest sinusoid amplitude in a flat-top spectrum of `x` and its frequency.
fn residual_spur(x: &[f64], fs: f64) -> (f64, f64) {
    let n = x.len();
    let w = Window::FlatTop.coefficients(n);
    let gain: f64 = w.iter().sum();
    let mut buf: Vec<Complex<f64>> = x
        .iter()
        .zip(&w)
        .map(|(v, wi)| Complex::new(v * wi, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    (SPUR_GUARD_BINS..n / 2)
        .map(|k| (2.0 * buf[k].norm() / gain, k as f64 * fs / n as f64))
        .fold(
            (0.0, 0.0),
            |best, cur| if cur.0 > best.0 { cur } else { best },
        )
}
