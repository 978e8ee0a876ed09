use std::io::Write;

use serde::Serialize;

use super::spectrum::Psd;
use super::tone::ToneMetrics;
use crate::error::{Error, Result};

/// Figures of merit of one reconstructed stream.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MetricsReport {
    pub thd_db: Option<f64>,
    pub sfdr_db: Option<f64>,
    pub snr_db: Option<f64>,
    pub sndr_db: Option<f64>,
    /// Input-referred, V/√Hz.
    pub noise_density: Option<f64>,
    /// Input-referred over the noise band, V.
    pub noise_rms: Option<f64>,
    pub gain_db: Option<f64>,
    pub max_static_nonlinearity_pct: Option<f64>,
    /// Harmonic orders that folded above Nyquist.
    #[serde(skip)]
    pub folded_harmonics: Vec<usize>,
    #[serde(skip)]
    pub psd: Option<Psd>,
}

impl MetricsReport {
    pub fn with_tone(mut self, t: &ToneMetrics) -> Self {
        self.thd_db = Some(t.thd_db);
        self.sfdr_db = Some(t.sfdr_db);
        self.snr_db = Some(t.snr_db);
        self.sndr_db = Some(t.sndr_db);
        self.folded_harmonics = t
            .harmonics
            .iter()
            .filter(|h| h.folded)
            .map(|h| h.order)
            .collect();
        self
    }

    fn entries(&self) -> Vec<(&'static str, Option<f64>)> {
        vec![
            ("thd_db", self.thd_db),
            ("sfdr_db", self.sfdr_db),
            ("snr_db", self.snr_db),
            ("sndr_db", self.sndr_db),
            ("noise_density_v_rthz", self.noise_density),
            ("noise_rms_v", self.noise_rms),
            ("gain_db", self.gain_db),
            (
                "max_static_nonlinearity_pct",
                self.max_static_nonlinearity_pct,
            ),
        ]
    }

    /// Flat `key = value` text, one per line; absent values are skipped.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.entries() {
            if let Some(v) = v {
                s.push_str(&format!("{k} = {v:.6e}\n"));
            }
        }
        if !self.folded_harmonics.is_empty() {
            let list: Vec<String> = self
                .folded_harmonics
                .iter()
                .map(|h| h.to_string())
                .collect();
            s.push_str(&format!("folded_harmonics = {}\n", list.join(",")));
        }
        s
    }
}

/// Writes labelled reports as CSV rows, one per stream.
pub fn write_metrics_csv<W: Write>(out: W, rows: &[(String, MetricsReport)]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    let header: Vec<&str> = std::iter::once("stream")
        .chain(
            MetricsReport::default()
                .entries()
                .into_iter()
                .map(|(k, _)| k),
        )
        .collect();
    w.write_record(&header)
        .map_err(|e| Error::Io(e.to_string()))?;
    for (name, r) in rows {
        let mut rec = vec![name.clone()];
        rec.extend(
            r.entries()
                .into_iter()
                .map(|(_, v)| v.map_or(String::new(), |v| v.to_string())),
        );
        w.write_record(&rec).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Two-column `frequency_hz,density_v2_per_hz` table.
pub fn write_psd_csv<W: Write>(out: W, psd: &Psd) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["frequency_hz", "density_v2_per_hz"])
        .map_err(|e| Error::Io(e.to_string()))?;
    for (f, d) in psd.frequency.iter().zip(&psd.density) {
        w.write_record([f.to_string(), d.to_string()])
            .map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kv_and_csv() {
        let r = MetricsReport {
            thd_db: Some(-44.0),
            snr_db: Some(48.0),
            ..Default::default()
        };
        assert_eq!(r.to_kv(), "thd_db = -4.400000e1\nsnr_db = 4.800000e1\n");
        let mut buf = Vec::new();
        write_metrics_csv(&mut buf, &[("mote0".into(), r)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("stream,thd_db,sfdr_db,snr_db"));
        assert!(text.lines().nth(1).unwrap().starts_with("mote0,-44,,48,"));
    }
}
