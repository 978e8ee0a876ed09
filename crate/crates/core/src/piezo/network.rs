use num_complex::Complex;

use super::{series_resonance, PiezoParams};
use crate::error::{Error, Result};
use crate::medium::AcousticMedium;
use crate::scalar::Real;

/// |sin βl| below this makes the port matrix singular.
pub const SINGULAR_TOLERANCE: f64 = 1e-9;

/// Relative size below which a rational denominator counts as zero.
const DENOMINATOR_TOLERANCE: f64 = 1e-12;

/// Port matrix of the lossless resonator at one frequency.
///
/// ```text
/// [F1]   [m n p] [v1]
/// [F2] = [n m p] [v2]
/// [V3]   [p p r] [I3]
/// ```
///
/// Only four entries are independent; `m`, `n` are in N·s/m, `p` in V·s/m
/// (equivalently N/A), `r` in ohms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreePortMatrix<F: Real = f64> {
    pub m: Complex<F>,
    pub n: Complex<F>,
    pub p: Complex<F>,
    pub r: Complex<F>,
    /// Frequency, Hz.
    pub freq: F,
    /// β·l, rad.
    pub beta_l: F,
    /// Lumped face impedance Z₀·A, N·s/m.
    pub face_impedance: F,
}

impl<F: Real> ThreePortMatrix<F> {
    /// Full 3×3 matrix, row-major.
    pub fn to_array(&self) -> [[Complex<F>; 3]; 3] {
        let (m, n, p, r) = (self.m, self.n, self.p, self.r);
        [[m, n, p], [n, m, p], [p, p, r]]
    }

    /// `m + n = Z₀A / (j tan(βl/2))`, evaluated without the cancellation
    /// that summing the two entries suffers near fp.
    pub fn sum_mn(&self) -> Complex<F> {
        let half = self.beta_l / F::lit(2.0);
        Complex::new(self.face_impedance, F::zero()) / (j::<F>() * half.tan())
    }

    /// `m − n = j Z₀A tan(βl/2)`.
    pub fn diff_mn(&self) -> Complex<F> {
        let half = self.beta_l / F::lit(2.0);
        j::<F>() * self.face_impedance * half.tan()
    }

    /// Reflection coefficient at face 1 when the electrical port is open.
    pub fn reflection_open_circuit(&self, z_b: F) -> Complex<F> {
        let zb = Complex::new(z_b, F::zero());
        let (m, n) = (self.m, self.n);
        (m * m - n * n - zb * zb) / ((m + zb) * (m + zb) - n * n)
    }
}

fn j<F: Real>() -> Complex<F> {
    Complex::new(F::zero(), F::one())
}

/// Builds the port matrix at `f` Hz.
///
/// Returns [`Error::SingularFrequency`] where `sin βl` vanishes. Where
/// `cos βl` vanishes the `m` entry is exactly zero.
pub fn three_port_matrix<F: Real>(params: &PiezoParams<F>, f: F) -> Result<ThreePortMatrix<F>> {
    if !(f > F::zero()) {
        return Err(Error::validation("f", "frequency must be > 0"));
    }
    let tol = F::lit(SINGULAR_TOLERANCE);
    let bl = params.beta_l(f);
    let (s, c) = bl.sin_cos();
    if s.abs() < tol {
        return Err(Error::SingularFrequency {
            freq_hz: f.to_f64_lossy(),
            entry: "n",
            which: "sin(beta l)",
            magnitude: s.abs().to_f64_lossy(),
        });
    }
    let za = Complex::new(params.face_impedance(), F::zero());
    let w = F::lit(2.0) * F::PI() * f;
    let m = if c.abs() < tol {
        Complex::new(F::zero(), F::zero())
    } else {
        za / (j::<F>() * (s / c))
    };
    let n = za / (j::<F>() * s);
    let p = Complex::new(params.h33, F::zero()) / (j::<F>() * w);
    let r = Complex::new(F::one(), F::zero()) / (j::<F>() * w * params.c0);
    Ok(ThreePortMatrix {
        m,
        n,
        p,
        r,
        freq: f,
        beta_l: bl,
        face_impedance: za.re,
    })
}

/// Acoustic impedance looking into face 1 with face 2 loaded by `z_b`
/// (lumped, N·s/m) and the electrical port loaded by `z_e` (ohms).
pub fn acoustic_input_impedance<F: Real>(
    mat: &ThreePortMatrix<F>,
    z_b: F,
    z_e: Complex<F>,
) -> Result<Complex<F>> {
    let ThreePortMatrix { m, n, p, r, .. } = *mat;
    let zb = Complex::new(z_b, F::zero());
    let two = F::lit(2.0);
    let p2 = p * p;
    let zer = z_e + r;
    let num = p2 * (n * two - m * two - zb) + zer * (m * m - n * n + m * zb);
    let den = zer * (m + zb) - p2;
    let scale = (zer * (m + zb)).norm() + p2.norm();
    if den.norm() <= F::lit(DENOMINATOR_TOLERANCE) * scale {
        return Err(Error::Singularity {
            context: "acoustic input impedance",
            residual: den.norm().to_f64_lossy(),
        });
    }
    Ok(num / den)
}

/// Exact acoustic reflection coefficient Γ = (Z₁ − Z_B)/(Z₁ + Z_B) at face 1.
pub fn reflection_exact<F: Real>(
    params: &PiezoParams<F>,
    f: F,
    medium: &AcousticMedium<F>,
    z_e: Complex<F>,
) -> Result<Complex<F>> {
    let mat = three_port_matrix(params, f)?;
    let zb = medium.lumped_impedance(params.raw.area);
    let z1 = acoustic_input_impedance(&mat, zb, z_e)?;
    let zbc = Complex::new(zb, F::zero());
    let den = z1 + zbc;
    if den.norm() <= F::lit(DENOMINATOR_TOLERANCE) * (z1.norm() + zb) {
        return Err(Error::Singularity {
            context: "reflection coefficient",
            residual: den.norm().to_f64_lossy(),
        });
    }
    Ok((z1 - zbc) / den)
}

/// Electrical impedance at port 3 with both faces loaded by `z_b`
/// (lumped). `z_b = 0` gives the acoustically unloaded impedance.
pub fn electrical_impedance<F: Real>(mat: &ThreePortMatrix<F>, z_b: F) -> Result<Complex<F>> {
    let den = mat.sum_mn() + Complex::new(z_b, F::zero());
    let scale = mat.m.norm() + mat.n.norm() + z_b;
    if den.norm() <= F::lit(DENOMINATOR_TOLERANCE) * scale {
        return Err(Error::Singularity {
            context: "electrical impedance",
            residual: den.norm().to_f64_lossy(),
        });
    }
    Ok(mat.r - mat.p * mat.p * F::lit(2.0) / den)
}

/// Linearised reflection coefficient Z_E/(Z_E + R_S).
pub fn reflection_linear<F: Real>(z_e: Complex<F>, r_s: F) -> Complex<F> {
    z_e / (z_e + Complex::new(r_s, F::zero()))
}

/// The two closed forms of the series resistance, evaluated at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesResistanceForms<F: Real = f64> {
    /// Evaluation frequency, Hz.
    pub freq: F,
    /// −2 Z_B p² / |m + n|² (reactance form).
    pub reactance_form: F,
    /// 2 Z_B (m r − p²) / (m² − n²) (matrix form).
    pub matrix_form: F,
    /// Re{Z₃} under the same load, for comparison.
    pub re_z3: F,
}

/// Both series-resistance forms at an arbitrary frequency `f`.
pub fn series_resistance_at<F: Real>(
    params: &PiezoParams<F>,
    medium: &AcousticMedium<F>,
    f: F,
) -> Result<SeriesResistanceForms<F>> {
    let mat = three_port_matrix(params, f)?;
    let zb = medium.lumped_impedance(params.raw.area);
    let two_zb = F::lit(2.0) * zb;
    let p2 = mat.p * mat.p;
    let mn = mat.sum_mn();
    let reactance_form = -(two_zb * p2.re) / mn.norm_sqr();
    let diff = mn * mat.diff_mn();
    if !(diff.norm() > F::zero()) || !diff.norm().is_finite() {
        return Err(Error::Singularity {
            context: "series resistance (m^2 - n^2)",
            residual: diff.norm().to_f64_lossy(),
        });
    }
    let matrix_form = ((mat.m * mat.r - p2) / diff * two_zb).re;
    let re_z3 = electrical_impedance(&mat, zb)?.re;
    Ok(SeriesResistanceForms {
        freq: f,
        reactance_form,
        matrix_form,
        re_z3,
    })
}

/// Both series-resistance forms at the root-solved series resonance.
pub fn series_resistance_forms<F: Real>(
    params: &PiezoParams<F>,
    medium: &AcousticMedium<F>,
) -> Result<SeriesResistanceForms<F>> {
    let fs = series_resonance(params)?;
    series_resistance_at(params, medium, fs)
}

/// Series resistance R_S of the resonator at series resonance, ohms.
pub fn series_resistance<F: Real>(
    params: &PiezoParams<F>,
    medium: &AcousticMedium<F>,
) -> Result<F> {
    Ok(series_resistance_forms(params, medium)?.matrix_form)
}

/// One row of a normalised reflection-vs-load sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionSweepRow<F: Real = f64> {
    /// Load resistance, ohms.
    pub r_e: F,
    /// |Γ_exact(R_E)| / |Γ_exact(∞)|.
    pub exact: F,
    /// Γ_linear(R_E) (its open-circuit value is 1).
    pub linear: F,
}

/// Sweeps a resistive load from 0 to `r_max` in `points` steps at the
/// root-solved series resonance, normalising each curve to its
/// open-circuit value. Reflection magnitudes are compared since that is
/// what an echo amplitude measures.
pub fn normalized_reflection_sweep<F: Real>(
    params: &PiezoParams<F>,
    medium: &AcousticMedium<F>,
    r_max: F,
    points: usize,
) -> Result<Vec<ReflectionSweepRow<F>>> {
    if points < 2 {
        return Err(Error::validation("points", "need at least 2"));
    }
    let fs = series_resonance(params)?;
    let mat = three_port_matrix(params, fs)?;
    let zb = medium.lumped_impedance(params.raw.area);
    let r_s = series_resistance_at(params, medium, fs)?.matrix_form;
    let open = mat.reflection_open_circuit(zb).norm();
    let zbc = Complex::new(zb, F::zero());
    (0..points)
        .map(|i| {
            let r_e = r_max * F::from_usize(i).unwrap() / F::from_usize(points - 1).unwrap();
            let z_e = Complex::new(r_e, F::zero());
            let z1 = acoustic_input_impedance(&mat, zb, z_e)?;
            let gamma = (z1 - zbc) / (z1 + zbc);
            Ok(ReflectionSweepRow {
                r_e,
                exact: gamma.norm() / open,
                linear: reflection_linear(z_e, r_s).re,
            })
        })
        .collect()
}
