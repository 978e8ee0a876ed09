use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::units::de;

/// Stimulus as written in a scenario file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum StimulusSpec {
    Tone {
        #[serde(deserialize_with = "de::frequency")]
        frequency: f64,
        #[serde(deserialize_with = "de::voltage")]
        vpp: f64,
        #[serde(default)]
        phase: f64,
    },
    Dc {
        #[serde(deserialize_with = "de::voltage")]
        level: f64,
    },
    /// Two-column CSV `time_s,volts`.
    File {
        path: PathBuf,
    },
    None,
}

impl StimulusSpec {
    pub fn resolve(&self, base: &Path) -> Result<Stimulus> {
        Ok(match *self {
            StimulusSpec::Tone {
                frequency,
                vpp,
                phase,
            } => {
                if !(frequency > 0.0 && vpp >= 0.0) {
                    return Err(Error::validation(
                        "stimulus",
                        "tone needs frequency > 0 and vpp >= 0",
                    ));
                }
                Stimulus::Tone {
                    frequency,
                    amplitude: vpp / 2.0,
                    phase,
                }
            }
            StimulusSpec::Dc { level } => Stimulus::Dc(level),
            StimulusSpec::File { ref path } => {
                let full = if path.is_absolute() {
                    path.clone()
                } else {
                    base.join(path)
                };
                Stimulus::Trace(Trace::load(&full)?)
            }
            StimulusSpec::None => Stimulus::Dc(0.0),
        })
    }
}

/// Sampled input waveform, linearly interpolated between samples and held
/// at its end values outside its span.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub source: PathBuf,
    pub time: Vec<f64>,
    pub volts: Vec<f64>,
}

impl Trace {
    pub fn load(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .comment(Some(b'#'))
            .from_path(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut time = Vec::new();
        let mut volts = Vec::new();
        for (i, rec) in rdr.deserialize::<(f64, f64)>().enumerate() {
            let (t, v) = rec.map_err(|e| {
                Error::schema(format!("{}:{}", path.display(), i + 2), e.to_string())
            })?;
            if let Some(&prev) = time.last() {
                if t <= prev {
                    return Err(Error::schema(
                        format!("{}:{}", path.display(), i + 2),
                        "time stamps must increase",
                    ));
                }
            }
            time.push(t);
            volts.push(v);
        }
        if time.len() < 2 {
            return Err(Error::schema(
                path.display().to_string(),
                "need at least two samples",
            ));
        }
        Ok(Trace {
            source: path.to_path_buf(),
            time,
            volts,
        })
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let n = self.time.len();
        if t <= self.time[0] {
            return self.volts[0];
        }
        if t >= self.time[n - 1] {
            return self.volts[n - 1];
        }
        let k = self.time.partition_point(|&x| x <= t) - 1;
        let (t0, t1) = (self.time[k], self.time[k + 1]);
        let w = (t - t0) / (t1 - t0);
        self.volts[k] * (1.0 - w) + self.volts[k + 1] * w
    }
}

/// Input applied to a mote's electrodes.
#[derive(Debug, Clone, PartialEq)]
pub enum Stimulus {
    Tone {
        frequency: f64,
        amplitude: f64,
        phase: f64,
    },
    Dc(f64),
    Trace(Trace),
}

impl Stimulus {
    pub fn value_at(&self, t: f64) -> f64 {
        match self {
            Stimulus::Tone {
                frequency,
                amplitude,
                phase,
            } => amplitude * (2.0 * std::f64::consts::PI * frequency * t + phase).sin(),
            Stimulus::Dc(v) => *v,
            Stimulus::Trace(tr) => tr.value_at(t),
        }
    }

    /// Highest frequency the stimulus is known to contain, Hz.
    pub fn bandwidth(&self) -> Option<f64> {
        match self {
            Stimulus::Tone { frequency, .. } => Some(*frequency),
            _ => None,
        }
    }

    pub fn tone_frequency(&self) -> Option<f64> {
        self.bandwidth()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_interpolates_and_holds() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        std::fs::write(&p, "time_s,volts\n0,0\n1e-4,1e-3\n2e-4,-1e-3\n").unwrap();
        let spec = StimulusSpec::File {
            path: "s.csv".into(),
        };
        let s = spec.resolve(dir.path()).unwrap();
        assert!((s.value_at(0.5e-4) - 0.5e-3).abs() < 1e-15);
        assert!((s.value_at(1.5e-4)).abs() < 1e-15);
        assert_eq!(s.value_at(-1.0), 0.0);
        assert_eq!(s.value_at(1.0), -1e-3);
        std::fs::write(&p, "time_s,volts\n0,0\n0,1\n").unwrap();
        assert!(spec.resolve(dir.path()).is_err());
    }

    #[test]
    fn tone_amplitude_is_half_vpp() {
        let s = StimulusSpec::Tone {
            frequency: 250.0,
            vpp: 20e-3,
            phase: 0.0,
        }
        .resolve(Path::new("."))
        .unwrap();
        assert!((s.value_at(1e-3) - 10e-3).abs() < 1e-15);
    }
}
