use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shortest record [`psd`] accepts.
pub const MIN_PSD_SAMPLES: usize = 1024;
/// Default Welch segment length.
pub const DEFAULT_SEGMENT: usize = 2048;

/// Spectral window.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    /// Density estimates.
    #[default]
    Hann,
    /// Amplitude of discrete tones.
    FlatTop,
    /// One segment over the whole record, no taper; exact Parseval.
    Rectangular,
}

impl Window {
    /// Periodic window of length `n`.
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        let x = |i: usize| 2.0 * PI * i as f64 / n as f64;
        match self {
            Window::Hann => (0..n).map(|i| 0.5 - 0.5 * x(i).cos()).collect(),
            Window::FlatTop => (0..n)
                .map(|i| {
                    let t = x(i);
                    0.215_578_95 - 0.416_631_58 * t.cos() + 0.277_263_158 * (2.0 * t).cos()
                        - 0.083_578_947 * (3.0 * t).cos()
                        + 0.006_947_368 * (4.0 * t).cos()
                })
                .collect(),
            Window::Rectangular => vec![1.0; n],
        }
    }
}

/// One-sided power spectral density, V²/Hz.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Psd {
    pub frequency: Vec<f64>,
    pub density: Vec<f64>,
    /// Bin spacing, Hz.
    pub resolution: f64,
    /// Number of averaged segments.
    pub segments: usize,
    pub window: Window,
}

impl Psd {
    /// Power between `lo` and `hi` inclusive, V².
    pub fn band_power(&self, lo: f64, hi: f64) -> f64 {
        self.frequency
            .iter()
            .zip(&self.density)
            .filter(|(f, _)| **f >= lo && **f <= hi)
            .map(|(_, d)| d * self.resolution)
            .sum()
    }

    pub fn total_power(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.resolution
    }

    /// Density at the bin nearest `f`.
    pub fn at(&self, f: f64) -> f64 {
        let k = (f / self.resolution).round() as usize;
        self.density[k.min(self.density.len() - 1)]
    }
}

/// Welch estimate with 50% overlap and density scaling.
///
/// Hann and flat-top use segments of [`DEFAULT_SEGMENT`] samples (or the
/// whole record if shorter). Rectangular uses the whole record as one
/// segment, so the bins sum exactly to the mean square.
pub fn psd(samples: &[f64], fs: f64, window: Window) -> Result<Psd> {
    let seg = match window {
        Window::Rectangular => samples.len(),
        _ => DEFAULT_SEGMENT.min(samples.len()),
    };
    welch(samples, fs, window, seg)
}

/// Welch estimate with an explicit segment length.
pub fn welch(samples: &[f64], fs: f64, window: Window, segment: usize) -> Result<Psd> {
    if samples.len() < MIN_PSD_SAMPLES {
        return Err(Error::TooShort {
            needed: MIN_PSD_SAMPLES,
            got: samples.len(),
        });
    }
    if segment < 2 || segment > samples.len() {
        return Err(Error::validation(
            "segment",
            format!("{segment} samples is out of range"),
        ));
    }
    let w = window.coefficients(segment);
    let energy: f64 = w.iter().map(|v| v * v).sum();
    let step = (segment / 2).max(1);
    let fft = FftPlanner::new().plan_fft_forward(segment);
    let bins = segment / 2 + 1;
    let mut acc = vec![0.0; bins];
    let mut count = 0;
    let mut buf = vec![Complex::new(0.0, 0.0); segment];
    let mut start = 0;
    while start + segment <= samples.len() {
        for (b, (x, wi)) in buf
            .iter_mut()
            .zip(samples[start..start + segment].iter().zip(&w))
        {
            *b = Complex::new(x * wi, 0.0);
        }
        fft.process(&mut buf);
        for (k, a) in acc.iter_mut().enumerate() {
            let one_sided = if k == 0 || (segment.is_multiple_of(2) && k == segment / 2) {
                1.0
            } else {
                2.0
            };
            *a += one_sided * buf[k].norm_sqr() / (fs * energy);
        }
        count += 1;
        start += step;
    }
    for a in &mut acc {
        *a /= count as f64;
    }
    let resolution = fs / segment as f64;
    Ok(Psd {
        frequency: (0..bins).map(|k| k as f64 * resolution).collect(),
        density: acc,
        resolution,
        segments: count,
        window,
    })
}

/// Noise density estimate over a band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseEstimate {
    /// V/√Hz.
    pub density: f64,
    /// `density · √(hi − lo)`, V.
    pub rms: f64,
    pub bins: usize,
}

/// Median-of-bins density over `[lo, hi]` Hz, robust to tones and spurs.
///
/// Each Hann-Welch bin is a scaled chi-square variable, so its median
/// sits below its mean; that bias is divided out using the equivalent
/// degrees of freedom of 50%-overlapped Hann segments.
pub fn noise_density(samples: &[f64], fs: f64, band: (f64, f64)) -> Result<NoiseEstimate> {
    let (lo, hi) = band;
    if !(hi > lo && lo >= 0.0 && hi <= fs / 2.0) {
        return Err(Error::validation(
            "band",
            format!("[{lo}, {hi}] Hz is outside (0, fs/2)"),
        ));
    }
    let p = psd(samples, fs, Window::Hann)?;
    let mut inband: Vec<f64> = p
        .frequency
        .iter()
        .zip(&p.density)
        .filter(|(f, _)| **f >= lo && **f <= hi && **f > 0.0)
        .map(|(_, d)| *d)
        .collect();
    if inband.is_empty() {
        return Err(Error::Degenerate(format!(
            "no PSD bins inside [{lo}, {hi}] Hz"
        )));
    }
    inband.sort_by(f64::total_cmp);
    let n = inband.len();
    let median = if n % 2 == 1 {
        inband[n / 2]
    } else {
        0.5 * (inband[n / 2 - 1] + inband[n / 2])
    };
    let k = p.segments as f64;
    // squared correlation of adjacent Hann segments at 50% overlap
    let rho2 = 0.1667f64.powi(2);
    let dof = 2.0 * k / (1.0 + 2.0 * rho2 * (k - 1.0) / k);
    let bias = (1.0 - 2.0 / (9.0 * dof)).powi(3);
    let density = (median / bias).sqrt();
    Ok(NoiseEstimate {
        density,
        rms: density * (hi - lo).sqrt(),
        bins: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Stream, Substream};

    #[test]
    fn unit_sine_integrates_to_half() {
        let fs = 10e3;
        let x: Vec<f64> = (0..16384)
            .map(|i| (2.0 * PI * 1000.0 * i as f64 / fs).sin())
            .collect();
        for w in [Window::Hann, Window::FlatTop] {
            let p = psd(&x, fs, w).unwrap();
            let db = 10.0 * (p.band_power(950.0, 1050.0) / 0.5).log10();
            assert!(db.abs() < 0.1, "{w:?}: {db}");
        }
    }

    #[test]
    fn white_noise_is_flat_at_its_density() {
        let fs: f64 = 8e3;
        let d = 300e-9;
        let mut rng = Substream::new(3, Stream::Custom(10));
        let mut x = vec![0.0; 1 << 16];
        rng.fill_gaussian(&mut x, d * (fs / 2.0).sqrt());
        let p = psd(&x, fs, Window::Hann).unwrap();
        let mean: f64 = p.band_power(100.0, 3900.0) / 3800.0;
        assert!((mean.sqrt() / d - 1.0).abs() < 0.1);
        let est = noise_density(&x, fs, (100.0, 3900.0)).unwrap();
        assert!((est.density / d - 1.0).abs() < 0.05, "{}", est.density / d);
    }

    #[test]
    fn dc_lands_in_bin_zero() {
        let x = vec![0.3; 2048];
        let p = psd(&x, 1e3, Window::Rectangular).unwrap();
        assert!((p.density[0] * p.resolution - 0.09).abs() < 1e-15);
        assert!(p.density[1..].iter().all(|&d| d < 1e-25));
    }

    #[test]
    fn short_record_rejected() {
        assert!(matches!(
            psd(&[0.0; 100], 1e3, Window::Hann),
            Err(Error::TooShort { .. })
        ));
    }
}
