//! Thickness-mode piezo resonator.
//!
//! The resonator is a lossless three-port network: two acoustic faces and
//! one electrical port. From material constants this module derives the
//! lumped quantities, builds the port matrix at a frequency, and evaluates
//! the impedances and acoustic reflection coefficient that the echo
//! modulator relies on. At series resonance the reflection coefficient
//! collapses to the one-parameter form `Z_E / (Z_E + R_S)`.

mod library;
mod network;
mod resonance;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub use library::{MaterialLibrary, BUILTIN_LIBRARY};
pub use network::{
    acoustic_input_impedance, electrical_impedance, normalized_reflection_sweep, reflection_exact,
    reflection_linear, series_resistance, series_resistance_at, series_resistance_forms,
    three_port_matrix, ReflectionSweepRow, SeriesResistanceForms, ThreePortMatrix,
    SINGULAR_TOLERANCE,
};
pub use resonance::{
    identities_at, series_resonance, verify_resonance_identities, IdentityReport, IdentityRow,
    IDENTITY_TOLERANCE,
};

/// Raw material constants and geometry of a thickness-mode resonator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiezoMaterialGeometry<F: Real = f64> {
    /// Density, kg/m³.
    pub rho: F,
    /// Clamped dielectric constant ε₃₃, F/m.
    pub eps33: F,
    /// Elastic constant at constant field c₃₃ᴱ, Pa.
    pub c33e: F,
    /// Piezoelectric stress constant e₃₃, C/m².
    pub e33: F,
    /// Thickness along the poling axis, m.
    pub thickness: F,
    /// Electrode (face) area, m².
    pub area: F,
}

impl<F: Real> PiezoMaterialGeometry<F> {
    /// Checks positivity. `e33 = 0` is allowed and gives the uncoupled limit.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rho", self.rho),
            ("eps33", self.eps33),
            ("c33e", self.c33e),
            ("thickness", self.thickness),
            ("area", self.area),
        ];
        for (name, v) in positive {
            if !(v > F::zero()) || !v.is_finite() {
                return Err(Error::validation(name, format!("must be > 0, got {v}")));
            }
        }
        if !(self.e33 >= F::zero()) || !self.e33.is_finite() {
            return Err(Error::validation(
                "e33",
                format!("must be >= 0, got {}", self.e33),
            ));
        }
        Ok(())
    }

    /// Geometry outside the cube-scale envelope [0.1 mm, 5 mm] is legal but
    /// suspicious; returns human-readable warnings.
    pub fn geometry_warnings(&self) -> Vec<String> {
        let lo = F::lit(0.1e-3);
        let hi = F::lit(5e-3);
        let side = self.area.sqrt();
        let mut out = Vec::new();
        if self.thickness < lo || self.thickness > hi {
            out.push(format!(
                "thickness {} m outside cube-scale range [1e-4, 5e-3]",
                self.thickness
            ));
        }
        if side < lo || side > hi {
            out.push(format!(
                "face side {side} m outside cube-scale range [1e-4, 5e-3]"
            ));
        }
        out
    }

    /// The typical-parameter set used throughout the analytic model
    /// (0.75 mm thick, 0.56 mm² face).
    pub fn reference() -> Self {
        PiezoMaterialGeometry {
            rho: F::lit(7600.0),
            eps33: F::lit(16.8e-9),
            c33e: F::lit(50e9),
            e33: F::lit(20.0),
            thickness: F::lit(0.75e-3),
            area: F::lit(0.56e-6),
        }
    }
}

/// Material constants plus every derived lumped quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiezoParams<F: Real = f64> {
    pub raw: PiezoMaterialGeometry<F>,
    /// Stiffened elastic constant c₃₃ᴰ = c₃₃ᴱ(1 + k²), Pa.
    pub c33d: F,
    /// h₃₃ = e₃₃/ε₃₃, V/m.
    pub h33: F,
    /// Electromechanical coupling k = e₃₃/√(ε₃₃ c₃₃ᴱ).
    pub k: F,
    /// Thickness coupling k_t = √(k²/(1 + k²)).
    pub kt: F,
    /// Unstiffened wave velocity √(c₃₃ᴱ/ρ), m/s.
    pub va: F,
    /// Stiffened wave velocity v_a √(1 + k²), m/s.
    pub va_stiff: F,
    /// Clamped capacitance A ε₃₃ / l, F.
    pub c0: F,
    /// Specific acoustic impedance ρ v̄_a, Pa·s/m.
    pub z0: F,
    /// Parallel resonance v̄_a / (2 l), Hz.
    pub fp: F,
    /// Closed-form series resonance fp / √(1 + 8 (k/π)²), Hz. The exact
    /// root is [`series_resonance`].
    pub fs: F,
}

impl<F: Real> PiezoParams<F> {
    /// Lumped acoustic impedance of one face, Z₀·A (N·s/m).
    pub fn face_impedance(&self) -> F {
        self.z0 * self.raw.area
    }

    /// β·l at frequency `f`.
    pub fn beta_l(&self, f: F) -> F {
        F::lit(2.0) * F::PI() * f / self.va_stiff * self.raw.thickness
    }

    /// Frequency where β·l = π/2 (quarter-wave thickness).
    pub fn quarter_wave_frequency(&self) -> F {
        self.va_stiff / (F::lit(4.0) * self.raw.thickness)
    }
}

/// Evaluates every derived quantity from the raw constants.
pub fn derive_params<F: Real>(raw: PiezoMaterialGeometry<F>) -> Result<PiezoParams<F>> {
    raw.validate()?;
    for w in raw.geometry_warnings() {
        log::warn!("{w}");
    }
    let one = F::one();
    let k = raw.e33 / (raw.eps33 * raw.c33e).sqrt();
    let k2 = k * k;
    let c33d = raw.c33e * (one + k2);
    let h33 = raw.e33 / raw.eps33;
    let kt = (k2 / (one + k2)).sqrt();
    let va = (raw.c33e / raw.rho).sqrt();
    let va_stiff = va * (one + k2).sqrt();
    let c0 = raw.area * raw.eps33 / raw.thickness;
    let z0 = raw.rho * va_stiff;
    let fp = va_stiff / (F::lit(2.0) * raw.thickness);
    let kp = k / F::PI();
    let fs = fp / (one + F::lit(8.0) * kp * kp).sqrt();
    Ok(PiezoParams {
        raw,
        c33d,
        h33,
        k,
        kt,
        va,
        va_stiff,
        c0,
        z0,
        fp,
        fs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn reference_table_values() {
        let p = derive_params(PiezoMaterialGeometry::<f64>::reference()).unwrap();
        assert!(rel(p.fp, 2.07e6) < 0.01, "fp {}", p.fp);
        assert!(rel(p.fs, 1.76e6) < 0.01, "fs {}", p.fs);
        assert!(rel(p.c0, 12.6e-12) < 0.01, "C0 {}", p.c0);
        assert!(rel(p.z0, 23e6) < 0.04, "Z0 {}", p.z0);
        assert!(rel(p.k, 0.69) < 0.005, "k {}", p.k);
        assert!(rel(p.kt, 0.56) < 0.02, "kt {}", p.kt);
        assert!(rel(p.va, 2564.0) < 0.001);
        assert!(rel(p.va_stiff, 3115.0) < 0.001);
        assert!(rel(p.c33d, 73e9) < 0.02);
        assert!(rel(p.h33, 1.18e9) < 0.01);
        assert!(p.fs < p.fp);
    }

    #[test]
    fn derived_fields_follow_their_formulas() {
        let raw = PiezoMaterialGeometry::<f64>::reference();
        let p = derive_params(raw).unwrap();
        assert!(rel(p.kt, (p.k * p.k / (1.0 + p.k * p.k)).sqrt()) < 1e-12);
        assert!(rel(p.c0, raw.area * raw.eps33 / raw.thickness) < 1e-12);
        assert!(rel(p.z0, raw.rho * p.va_stiff) < 1e-12);
        // idempotent
        assert_eq!(derive_params(p.raw).unwrap(), p);
    }

    #[test]
    fn zero_coupling_limit() {
        let raw = PiezoMaterialGeometry {
            e33: 0.0,
            ..PiezoMaterialGeometry::<f64>::reference()
        };
        let p = derive_params(raw).unwrap();
        assert_eq!(p.k, 0.0);
        assert_eq!(p.kt, 0.0);
        assert_eq!(p.va_stiff, p.va);
        assert_eq!(p.fs, p.fp);
    }

    #[test]
    fn doubling_thickness_halves_fp_and_c0() {
        let raw = PiezoMaterialGeometry::<f64>::reference();
        let thick = PiezoMaterialGeometry {
            thickness: 2.0 * raw.thickness,
            ..raw
        };
        let a = derive_params(raw).unwrap();
        let b = derive_params(thick).unwrap();
        assert!(rel(b.fp, a.fp / 2.0) < 1e-12);
        assert!(rel(b.c0, a.c0 / 2.0) < 1e-12);
        assert_eq!(a.k, b.k);
        assert_eq!(a.z0, b.z0);
        assert_eq!(a.h33, b.h33);
    }

    #[test]
    fn non_positive_input_names_field() {
        let raw = PiezoMaterialGeometry {
            rho: 0.0,
            ..PiezoMaterialGeometry::<f64>::reference()
        };
        match derive_params(raw) {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "rho"),
            other => panic!("{other:?}"),
        }
        let raw = PiezoMaterialGeometry {
            area: -1.0,
            ..PiezoMaterialGeometry::<f64>::reference()
        };
        assert!(
            matches!(derive_params(raw), Err(Error::Validation { field, .. }) if field == "area")
        );
    }

    #[test]
    fn geometry_warning_outside_cube_scale() {
        let raw = PiezoMaterialGeometry {
            thickness: 10e-3,
            ..PiezoMaterialGeometry::<f64>::reference()
        };
        assert_eq!(raw.geometry_warnings().len(), 1);
        assert!(derive_params(raw).is_ok());
    }

    #[test]
    fn single_precision_matches_double() {
        let p32 = derive_params(PiezoMaterialGeometry::<f32>::reference()).unwrap();
        let p64 = derive_params(PiezoMaterialGeometry::<f64>::reference()).unwrap();
        assert!(rel(p32.fs as f64, p64.fs) < 1e-5);
        assert!(rel(p32.c0 as f64, p64.c0) < 1e-5);
    }
}
