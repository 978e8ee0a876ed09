use num_complex::Complex;

use super::{three_port_matrix, PiezoParams};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Pass threshold on relative identity residuals.
pub const IDENTITY_TOLERANCE: f64 = 1e-6;

/// Numerator of the unloaded electrical impedance, `r (m + n) - 2 p²`.
/// It shares the zeros of Z₃,NL but not the antiresonance pole at fp, and
/// is real for the lossless matrix.
fn unloaded_numerator<F: Real>(params: &PiezoParams<F>, f: F) -> Result<F> {
    let mat = three_port_matrix(params, f)?;
    Ok((mat.r * mat.sum_mn() - mat.p * mat.p * F::lit(2.0)).re)
}

/// Series resonance: the frequency where the acoustically unloaded
/// electrical impedance vanishes.
///
/// The lossless unloaded impedance is purely reactive; its zero is
/// bisected inside [0.7·fp, fp) down to the floating-point resolution of
/// the bracket.
pub fn series_resonance<F: Real>(params: &PiezoParams<F>) -> Result<F> {
    if !(params.k > F::zero()) {
        return Err(Error::RootSolve(
            "uncoupled resonator (k = 0) has no series root".into(),
        ));
    }
    let guard = F::lit(1e-8).max(F::epsilon() * F::lit(4.0));
    let mut lo = F::lit(0.7) * params.fp;
    let mut hi = params.fp * (F::one() - guard);
    let g_lo = unloaded_numerator(params, lo)?;
    let g_hi = unloaded_numerator(params, hi)?;
    if g_lo.signum() == g_hi.signum() {
        return Err(Error::RootSolve(format!(
            "no sign change in [{lo}, {hi}] Hz (numerator {g_lo}, {g_hi})"
        )));
    }
    for _ in 0..200 {
        let mid = (lo + hi) / F::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        let g_mid = unloaded_numerator(params, mid)?;
        if g_mid == F::zero() {
            return Ok(mid);
        }
        if g_mid.signum() == g_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = (lo + hi) / F::lit(2.0);
    let drift = ((root - params.fs) / root).abs();
    if drift > F::lit(0.01) {
        log::warn!(
            "series root {root} Hz differs from closed form {} Hz by {drift}",
            params.fs
        );
    }
    Ok(root)
}

/// One identity: left side, right side and relative residual.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityRow {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

/// Resonance identities evaluated at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub freq: f64,
    pub rows: Vec<IdentityRow>,
}

impl IdentityReport {
    pub fn max_residual(&self) -> f64 {
        self.rows.iter().map(|r| r.residual).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.residual < IDENTITY_TOLERANCE)
    }
}

fn row<F: Real>(name: &'static str, lhs: Complex<F>, rhs: F) -> IdentityRow {
    let rhs_c = Complex::new(rhs, F::zero());
    let residual = ((lhs - rhs_c).norm() / rhs.abs()).to_f64_lossy();
    IdentityRow {
        name,
        lhs: lhs.re.to_f64_lossy(),
        rhs: rhs.to_f64_lossy(),
        residual,
    }
}

/// Evaluates the resonance identities at `f`. They hold only at the series
/// root; elsewhere the residuals show how far off resonance `f` is.
pub fn identities_at<F: Real>(params: &PiezoParams<F>, f: F) -> Result<IdentityReport> {
    let mat = three_port_matrix(params, f)?;
    let (m, n, p, r) = (mat.m, mat.n, mat.p, mat.r);
    let half = mat.beta_l / F::lit(2.0);
    let one = Complex::new(F::one(), F::zero());
    let kt2 = params.kt * params.kt;
    let p2 = p * p;
    let coupling_term = one - m * r / p2;
    let rs_matrix = (m * r - p2) * F::lit(2.0) / (mat.sum_mn() * mat.diff_mn());
    let rs_reactance = -(p2.re * F::lit(2.0)) / mat.sum_mn().norm_sqr();
    let rows = vec![
        row(
            "(m+n)/(m-n) = -cot^2(bl/2)",
            (m + n) / (m - n),
            -(half.tan().recip()).powi(2),
        ),
        row(
            "1 - mr/p^2 = tan^2(bl/2)",
            coupling_term,
            half.tan().powi(2),
        ),
        row(
            "1 - mr/p^2 = 1 - bl/(kt^2 tan bl)",
            coupling_term,
            F::one() - mat.beta_l / (kt2 * mat.beta_l.tan()),
        ),
        row(
            "tan(bl/2)/(bl/2) = 1/kt^2",
            Complex::new(half.tan() / half, F::zero()),
            kt2.recip(),
        ),
        row(
            "R_S matrix form / reactance form = 1",
            rs_matrix / rs_reactance,
            F::one(),
        ),
    ];
    Ok(IdentityReport {
        freq: f.to_f64_lossy(),
        rows,
    })
}

/// Root-solves the series resonance and checks every identity there.
pub fn verify_resonance_identities<F: Real>(params: &PiezoParams<F>) -> Result<IdentityReport> {
    let fs = series_resonance(params)?;
    identities_at(params, fs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::AcousticMedium;
    use crate::piezo::{derive_params, series_resistance_forms, PiezoMaterialGeometry};

    fn reference() -> PiezoParams<f64> {
        derive_params(PiezoMaterialGeometry::reference()).unwrap()
    }

    #[test]
    fn root_matches_high_precision_value() {
        let fs = series_resonance(&reference()).unwrap();
        assert!((fs - 1_763_647.921_835_911_8).abs() < 1e-3, "{fs}");
    }

    #[test]
    fn root_close_to_closed_form() {
        let p = reference();
        let fs = series_resonance(&p).unwrap();
        assert!(((fs - p.fs) / p.fs).abs() < 0.01);
    }

    #[test]
    fn identities_hold_at_root() {
        let rep = verify_resonance_identities(&reference()).unwrap();
        assert!(rep.passed(), "{rep:#?}");
        assert_eq!(rep.rows.len(), 5);
    }

    #[test]
    fn identities_fail_off_resonance() {
        let p = reference();
        let fs = series_resonance(&p).unwrap();
        let rep = identities_at(&p, 0.9 * fs).unwrap();
        assert!(!rep.passed());
        assert!(rep.max_residual() > 1e-3);
        // the two trigonometric forms of the coupling term are still equal
        // to each other off resonance only if tan identity holds, which it
        // does not here
        assert!(rep.rows[3].residual > 1e-3);
    }

    #[test]
    fn uncoupled_resonator_has_no_root() {
        let raw = PiezoMaterialGeometry {
            e33: 0.0,
            ..PiezoMaterialGeometry::reference()
        };
        let p = derive_params(raw).unwrap();
        assert!(matches!(series_resonance(&p), Err(Error::RootSolve(_))));
    }

    #[test]
    fn weak_coupling_forms_agree_and_grow() {
        // As e33 -> 0 the series resistance scales like 1/e33², both forms
        // tracking each other.
        let water = AcousticMedium::water();
        let base = PiezoMaterialGeometry::<f64>::reference();
        let weak = |scale: f64| {
            let p = derive_params(PiezoMaterialGeometry {
                e33: base.e33 * scale,
                ..base
            })
            .unwrap();
            series_resistance_forms(&p, &water).unwrap()
        };
        let a = weak(1e-2);
        let b = weak(1e-3);
        for f in [a, b] {
            assert!(((f.reactance_form - f.matrix_form) / f.matrix_form).abs() < 1e-6);
        }
        let ratio = b.matrix_form / a.matrix_form;
        assert!((ratio / 100.0 - 1.0).abs() < 0.01, "{ratio}");
    }

    #[test]
    fn single_precision_root() {
        let p = derive_params(PiezoMaterialGeometry::<f32>::reference()).unwrap();
        let fs = series_resonance(&p).unwrap();
        assert!(((fs as f64) - 1_763_647.92).abs() < 5.0, "{fs}");
    }
}
