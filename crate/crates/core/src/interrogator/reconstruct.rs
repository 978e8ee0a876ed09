use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};

/// Maps raw decoded values to input-referred volts, `(raw − zero) / gain`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Calibration {
    pub zero: f64,
    /// Raw units per input volt.
    pub gain: f64,
}

impl Calibration {
    /// From the raw values of two known pilot inputs.
    pub fn from_pilots(low: (f64, f64), high: (f64, f64)) -> Result<Self> {
        let gain = (high.1 - low.1) / (high.0 - low.0);
        if !gain.is_finite() || gain == 0.0 {
            return Err(Error::Degenerate(format!("pilot calibration gain {gain}")));
        }
        Ok(Calibration {
            zero: low.1 - gain * low.0,
            gain,
        })
    }

    pub fn apply(&self, raw: f64) -> f64 {
        (raw - self.zero) / self.gain
    }
}

/// Per-pulse diagnostic row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PulseRecord {
    pub pulse_index: usize,
    pub t_start: f64,
    pub truncated_len_us: f64,
    pub code_id: usize,
    pub raw_sample: Option<f64>,
    #[serde(rename = "calibrated_uV")]
    pub calibrated_uv: Option<f64>,
    #[serde(skip)]
    pub echo_snr_db: Option<f64>,
    #[serde(skip)]
    pub drop_reason: Option<String>,
}

impl PulseRecord {
    pub fn dropped(&self) -> bool {
        self.calibrated_uv.is_none()
    }
}

/// Writes records as CSV with the documented column order.
pub fn write_pulse_csv<W: Write>(out: W, records: &[PulseRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// A missing sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gap {
    pub pulse_index: usize,
    pub reason: String,
}

/// Per-sample side information.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleDiagnostics {
    pub echo_snr_db: Option<f64>,
    pub truncated_len_us: f64,
}

/// Reconstructed input-referred stream of one mote.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleStream {
    pub f_sample: f64,
    /// Input-referred samples, V.
    pub samples: Vec<f64>,
    /// Pulse each sample came from.
    pub pulse_index: Vec<usize>,
    pub diagnostics: Vec<SampleDiagnostics>,
    pub gaps: Vec<Gap>,
    /// True when gaps were filled by interpolation.
    pub interpolated: bool,
}

impl SampleStream {
    /// Signal and noise bandwidth after per-echo averaging, Hz.
    pub fn bandwidth(&self) -> f64 {
        self.f_sample / 2.0
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Assembles per-pulse records (one mote, increasing pulse index) into a
/// uniform stream. Dropped pulses become gaps; with `interpolate` they are
/// filled linearly from their neighbours instead of removed.
pub fn reconstruct(
    records: &[PulseRecord],
    f_sample: f64,
    interpolate: bool,
) -> Result<SampleStream> {
    if records.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: records.len(),
        });
    }
    let gaps: Vec<Gap> = records
        .iter()
        .filter(|r| r.dropped())
        .map(|r| Gap {
            pulse_index: r.pulse_index,
            reason: r.drop_reason.clone().unwrap_or_else(|| "dropped".into()),
        })
        .collect();
    let diag = |r: &PulseRecord| SampleDiagnostics {
        echo_snr_db: r.echo_snr_db,
        truncated_len_us: r.truncated_len_us,
    };
    let (samples, pulse_index, diagnostics) = if interpolate {
        let known: Vec<(usize, f64)> = records
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.calibrated_uv.map(|v| (i, v * 1e-6)))
            .collect();
        if known.is_empty() {
            return Err(Error::Degenerate("every echo was dropped".into()));
        }
        let mut out = Vec::with_capacity(records.len());
        let mut next = 0;
        for i in 0..records.len() {
            while next < known.len() && known[next].0 < i {
                next += 1;
            }
            let v = match (next.checked_sub(1).map(|p| known[p]), known.get(next)) {
                (_, Some(&(j, v))) if j == i => v,
                (Some((a, va)), Some(&(b, vb))) => va + (vb - va) * (i - a) as f64 / (b - a) as f64,
                (Some((_, va)), None) => va,
                (None, Some(&(_, vb))) => vb,
                (None, None) => unreachable!("known is not empty"),
            };
            out.push(v);
        }
        (
            out,
            records.iter().map(|r| r.pulse_index).collect(),
            records.iter().map(diag).collect(),
        )
    } else {
        let kept: Vec<&PulseRecord> = records.iter().filter(|r| !r.dropped()).collect();
        (
            kept.iter()
                .map(|r| r.calibrated_uv.unwrap_or(0.0) * 1e-6)
                .collect(),
            kept.iter().map(|r| r.pulse_index).collect(),
            kept.iter().map(|r| diag(r)).collect(),
        )
    };
    Ok(SampleStream {
        f_sample,
        samples,
        pulse_index,
        diagnostics,
        gaps,
        interpolated: interpolate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(i: usize, v: Option<f64>) -> PulseRecord {
        PulseRecord {
            pulse_index: i,
            t_start: i as f64 * 1e-4,
            truncated_len_us: 35.96,
            code_id: 0,
            raw_sample: v,
            calibrated_uv: v,
            echo_snr_db: None,
            drop_reason: v.is_none().then(|| "window too short".into()),
        }
    }

    #[test]
    fn calibration_round_trip() {
        let cal = Calibration::from_pilots((-1e-3, 0.2 - 0.05e-3), (1e-3, 0.2 + 0.05e-3)).unwrap();
        assert!((cal.gain - 0.05).abs() < 1e-12);
        assert!((cal.apply(0.2 + 0.05 * 3e-3) - 3e-3).abs() < 1e-12);
        assert!(Calibration::from_pilots((0.0, 1.0), (1.0, 1.0)).is_err());
    }

    #[test]
    fn gaps_removed_or_interpolated() {
        let recs = vec![
            rec(0, Some(1.0)),
            rec(1, None),
            rec(2, Some(3.0)),
            rec(3, Some(5.0)),
        ];
        let s = reconstruct(&recs, 10e3, false).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.pulse_index, [0, 2, 3]);
        assert_eq!(s.gaps.len(), 1);
        assert_eq!(s.bandwidth(), 5e3);
        let s = reconstruct(&recs, 10e3, true).unwrap();
        assert_eq!(s.len(), 4);
        assert!((s.samples[1] - 2e-6).abs() < 1e-18);
    }

    #[test]
    fn constant_input_is_flat() {
        let recs: Vec<PulseRecord> = (0..10).map(|i| rec(i, Some(7.0))).collect();
        let s = reconstruct(&recs, 8e3, false).unwrap();
        assert!(s.samples.iter().all(|&v| v == 7e-6));
        assert!(reconstruct(&recs[..1], 8e3, false).is_err());
    }

    #[test]
    fn csv_columns() {
        let mut buf = Vec::new();
        write_pulse_csv(&mut buf, &[rec(0, Some(1.5)), rec(1, None)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "pulse_index,t_start,truncated_len_us,code_id,raw_sample,calibrated_uV"
        );
        assert_eq!(lines.next().unwrap(), "0,0.0,35.96,0,1.5,1.5");
        assert_eq!(lines.next().unwrap(), "1,0.0001,35.96,0,,");
    }
}
