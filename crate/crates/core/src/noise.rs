//! Continuous-time noise processes sampled at arbitrary increasing times.

use crate::rng::Substream;

/// Lowest and highest pole of the flicker bank, Hz.
pub const FLICKER_BAND: (f64, f64) = (0.1, 10e3);
/// Poles per decade in the flicker bank.
const POLES_PER_DECADE: usize = 3;

/// 1/f noise built from a bank of Ornstein-Uhlenbeck processes with
/// log-spaced corners and equal variances.
///
/// Inside [`FLICKER_BAND`] the one-sided PSD is `density² · corner / f`,
/// i.e. it meets a white floor of `density` at `corner`. Because each
/// component is advanced with its exact transition law, the process can
/// be sampled densely inside an echo and then skip across the idle gap to
/// the next pulse.
#[derive(Debug, Clone)]
pub struct FlickerProcess {
    decay_rates: Vec<f64>,
    sigma: f64,
    state: Vec<f64>,
    last_t: Option<f64>,
    rng: Substream,
}

impl FlickerProcess {
    pub fn new(density: f64, corner: f64, rng: Substream) -> Self {
        let (lo, hi) = FLICKER_BAND;
        let decades = (hi / lo).log10();
        let n = (decades * POLES_PER_DECADE as f64).round() as usize + 1;
        let ratio = (hi / lo).powf(1.0 / (n - 1) as f64);
        let decay_rates = (0..n)
            .map(|i| 2.0 * std::f64::consts::PI * lo * ratio.powi(i as i32))
            .collect();
        let sigma = (density * density * corner * ratio.ln()).max(0.0).sqrt();
        FlickerProcess {
            decay_rates,
            sigma,
            state: vec![0.0; n],
            last_t: None,
            rng,
        }
    }

    /// Value at time `t`. Times must not decrease between calls.
    pub fn sample(&mut self, t: f64) -> f64 {
        if self.sigma == 0.0 {
            return 0.0;
        }
        match self.last_t {
            None => {
                for x in &mut self.state {
                    *x = self.sigma * self.rng.gaussian();
                }
            }
            Some(prev) => {
                let dt = (t - prev).max(0.0);
                for (x, &k) in self.state.iter_mut().zip(&self.decay_rates) {
                    let rho = (-k * dt).exp();
                    *x = rho * *x + self.sigma * (1.0 - rho * rho).sqrt() * self.rng.gaussian();
                }
            }
        }
        self.last_t = Some(t);
        self.state.iter().sum()
    }
}

/// White Gaussian noise of one-sided density `density` sampled at `rate`.
pub fn white_sigma(density: f64, rate: f64) -> f64 {
    density * (rate / 2.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    #[test]
    fn flicker_psd_follows_one_over_f() {
        // Sample above the top pole and compare averaged Hann periodogram
        // bins to d²·fc/f.
        let fs = 25e3;
        let n = 1 << 14;
        let segs = 24;
        let d = 1.0;
        let fc = 100.0;
        let mut p = FlickerProcess::new(d, fc, Substream::new(5, Stream::Custom(1)));
        let mut acc = vec![0.0; n / 2];
        let mut t = 0.0;
        for _ in 0..segs {
            let x: Vec<f64> = (0..n)
                .map(|_| {
                    t += 1.0 / fs;
                    p.sample(t)
                })
                .collect();
            let mut spec: Vec<rustfft::num_complex::Complex<f64>> =
                x.iter().map(|&v| v.into()).collect();
            let w: Vec<f64> = (0..n)
                .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
                .collect();
            for (s, wi) in spec.iter_mut().zip(&w) {
                *s *= wi;
            }
            let u: f64 = w.iter().map(|v| v * v).sum();
            rustfft::FftPlanner::new()
                .plan_fft_forward(n)
                .process(&mut spec);
            for k in 1..n / 2 {
                acc[k] += 2.0 * spec[k].norm_sqr() / (fs * u) / segs as f64;
            }
        }
        for f in [8.0, 20.0, 100.0, 1000.0] {
            let k = (f * n as f64 / fs).round() as usize;
            let ratio: f64 = (k - 2..=k + 2)
                .map(|j| acc[j] / (d * d * fc / (j as f64 * fs / n as f64)))
                .sum::<f64>()
                / 5.0;
            let db = 10.0 * ratio.log10();
            assert!(db.abs() < 1.5, "{f} Hz: {db} dB");
        }
    }

    #[test]
    fn zero_density_is_silent_and_restart_is_deterministic() {
        let mut p = FlickerProcess::new(0.0, 100.0, Substream::new(1, Stream::Custom(2)));
        assert_eq!(p.sample(0.0), 0.0);
        let run = || {
            let mut p = FlickerProcess::new(1e-6, 100.0, Substream::new(9, Stream::Custom(3)));
            (0..50)
                .map(|i| p.sample(i as f64 * 1e-4))
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }
}
