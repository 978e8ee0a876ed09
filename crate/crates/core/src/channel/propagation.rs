use crate::error::{Error, Result};
use crate::medium::AcousticMedium;
use crate::mote::ReflectionTrace;
use crate::scalar::Real;
use crate::waveform::Waveform;

/// Offsets closer than this (in samples) to an integer are treated as
/// exact grid shifts.
const GRID_SNAP: f64 = 1e-6;

/// Delays `w` by the travel time over `distance` and applies the medium's
/// attenuation at `f_carrier`.
pub fn propagate<F: Real>(
    w: &Waveform<F>,
    distance: F,
    medium: &AcousticMedium<F>,
    f_carrier: F,
) -> Result<Waveform<F>> {
    if !(distance >= F::zero()) {
        return Err(Error::validation("distance", "must be >= 0"));
    }
    let mut out = w.scaled(medium.amplitude_factor(distance, f_carrier));
    out.t0 = w.t0 + medium.time_of_flight(distance);
    Ok(out)
}

/// Delay between the pulse reaching the transducer face and reaching a
/// mote at `distance`, s.
pub fn power_up_delay<F: Real>(distance: F, medium: &AcousticMedium<F>) -> F {
    medium.time_of_flight(distance)
}

/// Sums echoes on the union of their time grids.
///
/// Each echo is shifted by its arrival offset. The output grid starts at
/// the earliest shifted start; echoes landing between grid points are
/// linearly interpolated, everything else is zero-padded.
pub fn superpose<F: Real>(echoes: &[(Waveform<F>, F)]) -> Result<Waveform<F>> {
    let Some((first, _)) = echoes.first() else {
        return Err(Error::Degenerate("no echoes to superpose".into()));
    };
    let fs = first.sample_rate;
    for (w, _) in echoes {
        if w.sample_rate != fs {
            return Err(Error::SampleRateMismatch(
                fs.to_f64_lossy(),
                w.sample_rate.to_f64_lossy(),
            ));
        }
    }
    let start = echoes
        .iter()
        .map(|(w, off)| w.t0 + *off)
        .fold(F::infinity(), F::min);
    let shifts: Vec<(usize, F)> = echoes
        .iter()
        .map(|(w, off)| {
            let s = (w.t0 + *off - start) * fs;
            let whole = s.round();
            if (s - whole).abs().to_f64_lossy() < GRID_SNAP {
                (whole.to_usize().unwrap_or(0), F::zero())
            } else {
                (s.floor().to_usize().unwrap_or(0), s - s.floor())
            }
        })
        .collect();
    let len = echoes
        .iter()
        .zip(&shifts)
        .map(|((w, _), &(m, frac))| m + w.len() + usize::from(frac > F::zero()))
        .max()
        .unwrap_or(0);
    let mut out = vec![F::zero(); len];
    for ((w, _), &(m, frac)) in echoes.iter().zip(&shifts) {
        for (i, &x) in w.samples.iter().enumerate() {
            // sample i lands at m + frac + i: split between its neighbours
            out[m + i] = out[m + i] + x * (F::one() - frac);
            if frac > F::zero() {
                out[m + i + 1] = out[m + i + 1] + x * frac;
            }
        }
    }
    Ok(Waveform::new(out, fs, start))
}

/// Received envelope of one echo, `A (1 − D + D Γ)`, where `A` is the
/// echo amplitude and `D` the modulation-depth ceiling.
pub fn echo_envelope(trace: &ReflectionTrace, amplitude: f64, depth: f64) -> Waveform {
    trace.gamma.map(|g| amplitude * (1.0 - depth + depth * g))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifty_mm_delays() {
        let m = AcousticMedium::<f64>::oil();
        let w = Waveform::from_fn(4, 1e6, 0.0, |_| 1.0);
        let out = propagate(&w, 50e-3, &m, 1.78e6).unwrap();
        assert!((out.t0 - 33.0e-6).abs() < 0.01e-6, "{}", out.t0);
        assert!((2.0 * out.t0 - 66.0e-6).abs() < 0.02e-6);
        assert!((power_up_delay(2e-3, &m) - 1.32e-6).abs() < 0.01e-6);
    }

    #[test]
    fn attenuation_example() {
        let m = AcousticMedium::new(1500.0, 0.25, 1.5e6).unwrap();
        let w = Waveform::from_fn(1, 1e6, 0.0, |_| 1.0);
        let out = propagate(&w, 5e-2, &m, 2e6).unwrap();
        assert!((out.samples[0] - 10f64.powf(-2.5 / 20.0)).abs() < 1e-12);
        assert!((out.samples[0] - 0.75).abs() < 0.005);
        let same = propagate(&w, 0.0, &m, 2e6).unwrap();
        assert_eq!(same, w);
        assert!(propagate(&w, -1.0, &m, 2e6).is_err());
    }

    #[test]
    fn superpose_basics() {
        let w = Waveform::from_fn(8, 1e6, 1e-6, |t| t * 1e6);
        let one = superpose(&[(w.clone(), 0.0)]).unwrap();
        assert_eq!(one, w);
        let two = superpose(&[(w.clone(), 0.0), (w.clone(), 0.0)]).unwrap();
        assert_eq!(two, w.scaled(2.0));
        let shifted = superpose(&[(w.clone(), 0.0), (w.clone(), 3e-6)]).unwrap();
        assert_eq!(shifted.len(), 11);
        assert_eq!(shifted.samples[3], w.samples[3] + w.samples[0]);
        let other = Waveform::zeros(3, 2e6, 0.0);
        assert!(matches!(
            superpose(&[(w, 0.0), (other, 0.0)]),
            Err(Error::SampleRateMismatch(..))
        ));
    }

    #[test]
    fn fractional_offset_interpolates() {
        let w = Waveform::new(vec![1.0, 1.0, 1.0, 1.0], 1.0, 0.0);
        let s = superpose(&[(w.clone(), 0.0), (w, 0.25)]).unwrap();
        assert_eq!(s.samples, [1.75, 2.0, 2.0, 2.0, 0.25]);
    }
}
