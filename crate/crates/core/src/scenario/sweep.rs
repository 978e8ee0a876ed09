use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use super::config::LinkScenario;
use super::run::run;
use super::stimulus::Stimulus;
use crate::channel::beam_gain;
use crate::error::{Error, Result};
use crate::units::{parse_quantity, Dim};

/// Scenario parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Depth of the first mote; the others keep their offsets.
    Depth,
    LateralX,
    LateralY,
    /// Depth of the second mote relative to the first.
    MoteDz,
    /// Peak-to-peak amplitude of every tone stimulus.
    InputAmplitude,
}

impl SweepAxis {
    pub fn dim(self) -> Dim {
        match self {
            SweepAxis::InputAmplitude => Dim::Voltage,
            _ => Dim::Length,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Depth => "depth",
            SweepAxis::LateralX => "lateral_x",
            SweepAxis::LateralY => "lateral_y",
            SweepAxis::MoteDz => "mote_dz",
            SweepAxis::InputAmplitude => "input_amplitude",
        }
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "depth" => SweepAxis::Depth,
            "lateral_x" => SweepAxis::LateralX,
            "lateral_y" => SweepAxis::LateralY,
            "mote_dz" => SweepAxis::MoteDz,
            "input_amplitude" => SweepAxis::InputAmplitude,
            other => {
                return Err(Error::validation(
                    "axis",
                    format!("unknown sweep axis `{other}`"),
                ))
            }
        })
    }
}

/// Parses `start:stop:step` (each part a quantity of `dim`) into an
/// inclusive grid. An empty string, or `start > stop`, yields no points.
pub fn parse_grid(text: &str, dim: Dim) -> Result<Vec<f64>> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let parts: Vec<&str> = text.split(':').collect();
    let [a, b, step] = parts.as_slice() else {
        return Err(Error::validation(
            "grid",
            format!("expected start:stop:step, got `{text}`"),
        ));
    };
    let (a, b, step) = (
        parse_quantity(a, dim)?,
        parse_quantity(b, dim)?,
        parse_quantity(step, dim)?,
    );
    if !(step > 0.0) {
        return Err(Error::validation("grid", "step must be > 0"));
    }
    if a > b {
        return Ok(Vec::new());
    }
    let n = ((b - a) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| a + i as f64 * step).collect())
}

/// One mote at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis: &'static str,
    pub value: f64,
    pub mote: String,
    pub status: String,
    pub harvested_amplitude_v: Option<f64>,
    pub max_modulation_depth: Option<f64>,
    pub thd_db: Option<f64>,
    pub sfdr_db: Option<f64>,
    pub snr_db: Option<f64>,
    pub sndr_db: Option<f64>,
    pub noise_density: Option<f64>,
    /// Worst leakage from any other mote, dB.
    pub crosstalk_db: Option<f64>,
    pub error: String,
}

/// Copy of `s` with the axis set to `value`, revalidated.
pub fn apply_axis(s: &LinkScenario, axis: SweepAxis, value: f64) -> Result<LinkScenario> {
    let mut t = s.clone();
    match axis {
        SweepAxis::Depth => {
            let shift = value - t.motes[0].position.z;
            for m in &mut t.motes {
                m.position.z += shift;
            }
        }
        SweepAxis::LateralX => t.motes[0].position.x = value,
        SweepAxis::LateralY => t.motes[0].position.y = value,
        SweepAxis::MoteDz => {
            if t.motes.len() < 2 {
                return Err(Error::validation(
                    "axis",
                    "mote_dz needs at least two motes",
                ));
            }
            t.motes[1].position.z = t.motes[0].position.z + value;
        }
        SweepAxis::InputAmplitude => {
            for m in &mut t.motes {
                if let Stimulus::Tone { amplitude, .. } = &mut m.stimulus {
                    *amplitude = value / 2.0;
                }
            }
        }
    }
    t.validate()?;
    Ok(t)
}

fn point(s: &LinkScenario, axis: SweepAxis, value: f64) -> Vec<SweepRow> {
    let blank = |mote: String, status: &str, error: String| SweepRow {
        axis: axis.name(),
        value,
        mote,
        status: status.into(),
        harvested_amplitude_v: None,
        max_modulation_depth: None,
        thd_db: None,
        sfdr_db: None,
        snr_db: None,
        sndr_db: None,
        noise_density: None,
        crosstalk_db: None,
        error,
    };
    let names: Vec<String> = s.motes.iter().map(|m| m.name.clone()).collect();
    let t = match apply_axis(s, axis, value) {
        Ok(t) => t,
        Err(e) => {
            return names
                .into_iter()
                .map(|n| blank(n, "invalid", e.to_string()))
                .collect()
        }
    };
    let beams: Vec<_> = match t.geometry() {
        Ok(g) => (0..t.motes.len())
            .map(|i| beam_gain(&g, i, t.f_main, &t.medium, &t.beam).ok())
            .collect(),
        Err(_) => vec![None; t.motes.len()],
    };
    let result = run(&t);
    names
        .into_iter()
        .enumerate()
        .map(|(i, n)| {
            let mut row = match &result {
                Ok(_) => blank(n, "ok", String::new()),
                Err(e) => blank(n, "error", e.to_string()),
            };
            if let Some(b) = beams[i] {
                row.harvested_amplitude_v = Some(b.harvested_amplitude);
                row.max_modulation_depth = Some(b.max_modulation_depth);
            }
            if let Ok(a) = &result {
                let m = &a.motes[i].metrics;
                row.thd_db = m.thd_db;
                row.sfdr_db = m.sfdr_db;
                row.snr_db = m.snr_db;
                row.sndr_db = m.sndr_db;
                row.noise_density = m.noise_density;
                row.crosstalk_db = a.motes[i].crosstalk_db.iter().map(|c| c.1).reduce(f64::max);
            }
            row
        })
        .collect()
}

/// Runs the scenario at every grid point on a pool of `jobs` workers
/// (all cores if `None`). Every point uses the scenario seed. Failing
/// points produce error rows; the sweep itself only fails if the pool
/// cannot be built.
pub fn sweep(
    s: &LinkScenario,
    axis: SweepAxis,
    grid: &[f64],
    jobs: Option<usize>,
) -> Result<Vec<SweepRow>> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder.build().map_err(|e| Error::Io(e.to_string()))?;
    let rows: Vec<Vec<SweepRow>> =
        pool.install(|| grid.par_iter().map(|&v| point(s, axis, v)).collect());
    Ok(rows.into_iter().flatten().collect())
}

pub fn write_sweep_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record([
            "axis",
            "value",
            "mote",
            "status",
            "harvested_amplitude_v",
            "max_modulation_depth",
            "thd_db",
            "sfdr_db",
            "snr_db",
            "sndr_db",
            "noise_density",
            "crosstalk_db",
            "error",
        ])
        .map_err(|e| Error::Io(e.to_string()))?;
    }
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        let g = parse_grid("35mm:80mm:5mm", Dim::Length).unwrap();
        assert_eq!(g.len(), 10);
        assert!((g[9] - 80e-3).abs() < 1e-12);
        assert!(parse_grid("", Dim::Length).unwrap().is_empty());
        assert!(parse_grid("5:1:1", Dim::Length).unwrap().is_empty());
        assert!(parse_grid("1:2", Dim::Length).is_err());
        assert!(parse_grid("1mV:2mV:0", Dim::Voltage).is_err());
        assert_eq!("mote_dz".parse::<SweepAxis>().unwrap(), SweepAxis::MoteDz);
    }

    #[test]
    fn empty_sweep_writes_header_only() {
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1);
    }
}
