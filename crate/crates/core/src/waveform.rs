//! Uniformly sampled real-valued time series.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// A uniformly sampled signal with an absolute start time.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform<F: Real = f64> {
    /// Sample values.
    pub samples: Vec<F>,
    /// Samples per second.
    pub sample_rate: F,
    /// Time of `samples[0]`, seconds.
    pub t0: F,
}

impl<F: Real> Waveform<F> {
    pub fn new(samples: Vec<F>, sample_rate: F, t0: F) -> Self {
        Waveform {
            samples,
            sample_rate,
            t0,
        }
    }

    pub fn zeros(len: usize, sample_rate: F, t0: F) -> Self {
        Self::new(vec![F::zero(); len], sample_rate, t0)
    }

    /// Samples `f(t)` on the grid `t0 + i / sample_rate`.
    pub fn from_fn(len: usize, sample_rate: F, t0: F, mut f: impl FnMut(F) -> F) -> Self {
        let dt = F::one() / sample_rate;
        let samples = (0..len)
            .map(|i| f(t0 + F::from_usize(i).unwrap() * dt))
            .collect();
        Self::new(samples, sample_rate, t0)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dt(&self) -> F {
        F::one() / self.sample_rate
    }

    pub fn time_at(&self, i: usize) -> F {
        self.t0 + F::from_usize(i).unwrap() * self.dt()
    }

    /// Time one sample past the last one.
    pub fn end_time(&self) -> F {
        self.time_at(self.len())
    }

    pub fn duration(&self) -> F {
        F::from_usize(self.len()).unwrap() * self.dt()
    }

    /// Linear interpolation at absolute time `t`; zero outside the support.
    pub fn sample_at(&self, t: F) -> F {
        if self.is_empty() {
            return F::zero();
        }
        let x = (t - self.t0) * self.sample_rate;
        if x < F::zero() {
            return F::zero();
        }
        let i = x.floor();
        let frac = x - i;
        let i = i.to_usize().unwrap_or(usize::MAX);
        let last = self.len() - 1;
        if i > last || (i == last && frac > F::zero()) {
            return F::zero();
        }
        if i == last {
            return self.samples[last];
        }
        self.samples[i] * (F::one() - frac) + self.samples[i + 1] * frac
    }

    pub fn scaled(&self, gain: F) -> Self {
        Self::new(
            self.samples.iter().map(|&s| s * gain).collect(),
            self.sample_rate,
            self.t0,
        )
    }

    pub fn map(&self, f: impl Fn(F) -> F) -> Self {
        Self::new(
            self.samples.iter().map(|&s| f(s)).collect(),
            self.sample_rate,
            self.t0,
        )
    }

    /// Sample-wise sum of two waveforms on the same grid.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.sample_rate != other.sample_rate {
            return Err(Error::SampleRateMismatch(
                self.sample_rate.to_f64_lossy(),
                other.sample_rate.to_f64_lossy(),
            ));
        }
        if self.len() != other.len() || self.t0 != other.t0 {
            return Err(Error::Degenerate(
                "waveforms must share length and start time".into(),
            ));
        }
        Ok(Self::new(
            self.samples
                .iter()
                .zip(&other.samples)
                .map(|(&a, &b)| a + b)
                .collect(),
            self.sample_rate,
            self.t0,
        ))
    }

    pub fn mean(&self) -> F {
        if self.is_empty() {
            return F::zero();
        }
        self.samples.iter().fold(F::zero(), |a, &b| a + b) / F::from_usize(self.len()).unwrap()
    }

    pub fn rms(&self) -> F {
        if self.is_empty() {
            return F::zero();
        }
        (self.samples.iter().fold(F::zero(), |a, &b| a + b * b)
            / F::from_usize(self.len()).unwrap())
        .sqrt()
    }

    pub fn peak_to_peak(&self) -> F {
        let (lo, hi) = self
            .samples
            .iter()
            .fold((F::infinity(), F::neg_infinity()), |(lo, hi), &s| {
                (lo.min(s), hi.max(s))
            });
        if self.is_empty() {
            F::zero()
        } else {
            hi - lo
        }
    }
}
