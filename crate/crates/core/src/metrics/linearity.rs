use serde::Serialize;

use crate::error::{Error, Result};

/// Least-squares line through a static sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearityFit {
    pub slope: f64,
    pub intercept: f64,
    /// `20 log10 |slope|`.
    pub gain_db: f64,
    /// Largest deviation from the line, percent of the fitted output span.
    pub max_dev_pct: f64,
}

/// Fits `(input, output)` pairs, at least five spanning a nonzero range.
pub fn static_linearity(points: &[(f64, f64)]) -> Result<LinearityFit> {
    if points.len() < 5 {
        return Err(Error::TooShort {
            needed: 5,
            got: points.len(),
        });
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("sweep inputs have zero span".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let (lo, hi) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.0), hi.max(p.0))
        });
    let span = (slope * (hi - lo)).abs();
    if span == 0.0 {
        return Err(Error::Degenerate("sweep output has zero span".into()));
    }
    let max_dev = points
        .iter()
        .map(|p| (p.1 - (slope * p.0 + intercept)).abs())
        .fold(0.0, f64::max);
    Ok(LinearityFit {
        slope,
        intercept,
        gain_db: 20.0 * slope.abs().log10(),
        max_dev_pct: 100.0 * max_dev / span,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_data_has_no_deviation() {
        let pts: Vec<(f64, f64)> = (-5..=5)
            .map(|i| (i as f64 * 2e-3, 0.3 - 14.0 * i as f64 * 2e-3))
            .collect();
        let fit = static_linearity(&pts).unwrap();
        assert!(fit.max_dev_pct < 1e-10);
        assert!((fit.gain_db - 20.0 * 14f64.log10()).abs() < 1e-10);
    }

    #[test]
    fn cubic_bow() {
        let pts: Vec<(f64, f64)> = (-10..=10)
            .map(|i| {
                let x = i as f64 / 10.0;
                (x, x - 0.01 * x * x * x)
            })
            .collect();
        let fit = static_linearity(&pts).unwrap();
        assert!(
            fit.max_dev_pct > 0.1 && fit.max_dev_pct < 0.5,
            "{}",
            fit.max_dev_pct
        );
    }

    #[test]
    fn degenerate_sweeps() {
        assert!(static_linearity(&[(1.0, 2.0); 6]).is_err());
        assert!(static_linearity(&[(0.0, 1.0), (1.0, 2.0)]).is_err());
    }
}
