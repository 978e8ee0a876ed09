use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::medium::AcousticMedium;
use crate::scalar::Real;

/// Position of one mote relative to the transducer face, m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotePosition {
    pub z: f64,
    #[serde(default)]
    pub x: f64,
    #[serde(default)]
    pub y: f64,
}

impl MotePosition {
    pub fn on_axis(z: f64) -> Self {
        MotePosition { z, x: 0.0, y: 0.0 }
    }

    pub fn lateral(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

/// Placement of the motes in front of a single-element transducer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkGeometry {
    pub motes: Vec<MotePosition>,
    /// Transducer aperture diameter, m.
    pub aperture_diameter: f64,
}

/// Half-inch element.
pub const DEFAULT_APERTURE: f64 = 12.7e-3;

impl LinkGeometry {
    pub fn new(motes: Vec<MotePosition>) -> Result<Self> {
        let g = LinkGeometry {
            motes,
            aperture_diameter: DEFAULT_APERTURE,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.aperture_diameter > 0.0) {
            return Err(Error::validation("aperture_diameter", "must be > 0"));
        }
        for (i, m) in self.motes.iter().enumerate() {
            if !(m.z > 0.0) {
                return Err(Error::validation(
                    format!("motes[{i}].z"),
                    "depth must be > 0",
                ));
            }
            if self.motes[..i].iter().any(|o| o == m) {
                return Err(Error::validation(
                    format!("motes[{i}]"),
                    "two motes share one position",
                ));
            }
        }
        Ok(())
    }

    pub fn aperture_radius(&self) -> f64 {
        self.aperture_diameter / 2.0
    }

    fn mote(&self, index: usize) -> Result<&MotePosition> {
        self.motes
            .get(index)
            .ok_or_else(|| Error::validation("mote_index", format!("{index} out of range")))
    }
}

/// Fresnel distance `a² f / c` of a piston of radius `a`.
pub fn fresnel_distance<F: Real>(radius: F, f: F, c: F) -> F {
    radius * radius * f / c
}

/// On-axis pressure magnitude of an unfocused piston, relative to the
/// plane-wave amplitude: `2 |sin(π/λ (√(z² + a²) − z))|`.
pub fn piston_on_axis<F: Real>(z: F, radius: F, wavelength: F) -> F {
    let path = (z * z + radius * radius).sqrt() - z;
    F::lit(2.0) * (F::PI() / wavelength * path).sin().abs()
}

/// Depth of the last on-axis maximum, `(a² − λ²/4) / λ`.
pub fn last_axial_maximum<F: Real>(radius: F, wavelength: F) -> F {
    (radius * radius - wavelength * wavelength / F::lit(4.0)) / wavelength
}

/// Smoothed on-axis profile: the piston law beyond the last maximum and a
/// quarter-sine rise to it in the near field, where the true lobes are
/// not resolved by a mote-sized receiver.
pub fn axial_profile<F: Real>(z: F, radius: F, wavelength: F) -> F {
    let peak = last_axial_maximum(radius, wavelength);
    if z >= peak {
        piston_on_axis(z, radius, wavelength)
    } else {
        F::lit(2.0) * (F::FRAC_PI_2() * z / peak).sin()
    }
}

/// Empirical beam and modulation-depth profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeamModel {
    /// Largest echo modulation depth up to the Fresnel distance.
    pub depth_ceiling: f64,
    /// Absolute loss of modulation depth per metre beyond the Fresnel
    /// distance (0.06 per cm).
    pub depth_decay_per_m: f64,
    /// Lateral standard deviation of the pressure profile at the Fresnel
    /// distance, m. Grows in proportion to depth beyond it.
    pub lateral_sigma: f64,
    /// Largest lateral offset the profile is trusted for, m.
    pub lateral_limit: f64,
    /// Harvested amplitude on axis at the Fresnel distance, V.
    pub harvest_at_focus: f64,
}

impl Default for BeamModel {
    fn default() -> Self {
        BeamModel {
            depth_ceiling: 0.35,
            depth_decay_per_m: 6.0,
            lateral_sigma: 2.31e-3,
            lateral_limit: 5e-3,
            harvest_at_focus: 3.0,
        }
    }
}

/// Beam quantities at one mote.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BeamGain {
    /// Incident pressure relative to on-axis at the Fresnel distance.
    /// Propagation loss is applied separately.
    pub pressure_gain: f64,
    pub max_modulation_depth: f64,
    /// Harvested piezo amplitude, V.
    pub harvested_amplitude: f64,
}

pub fn beam_gain(
    geometry: &LinkGeometry,
    mote_index: usize,
    f: f64,
    medium: &AcousticMedium,
    model: &BeamModel,
) -> Result<BeamGain> {
    let pos = geometry.mote(mote_index)?;
    let r = pos.lateral();
    if r > model.lateral_limit {
        return Err(Error::ModelRange {
            offset_m: r,
            limit_m: model.lateral_limit,
        });
    }
    let a = geometry.aperture_radius();
    let lambda = medium.c / f;
    let n = fresnel_distance(a, f, medium.c);
    let axial = axial_profile(pos.z, a, lambda) / axial_profile(n, a, lambda);
    let sigma = model.lateral_sigma * (pos.z / n).max(1.0);
    let lateral = (-r * r / (2.0 * sigma * sigma)).exp();
    let pressure_gain = axial * lateral;
    let beyond = (pos.z - n).max(0.0);
    Ok(BeamGain {
        pressure_gain,
        max_modulation_depth: (model.depth_ceiling - model.depth_decay_per_m * beyond).max(0.0),
        harvested_amplitude: model.harvest_at_focus * pressure_gain,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const F: f64 = 1.78e6;

    fn at(x: f64, z: f64) -> LinkGeometry {
        LinkGeometry::new(vec![MotePosition { z, x, y: 0.0 }]).unwrap()
    }

    #[test]
    fn fresnel_distance_example() {
        let n: f64 = fresnel_distance(6.35e-3, 2e6, 1500.0);
        assert!((n - 53.76e-3).abs() < 0.01e-3, "{n}");
        let n32 = fresnel_distance(6.35e-3f32, 2e6, 1500.0);
        assert!((n32 as f64 - n).abs() < 1e-7);
    }

    #[test]
    fn calibrated_points() {
        let m = AcousticMedium::oil();
        let model = BeamModel::default();
        let n = fresnel_distance(6.35e-3, F, m.c);
        let g = beam_gain(&at(0.0, n), 0, F, &m, &model).unwrap();
        assert!((g.harvested_amplitude - 3.0).abs() < 1e-12);
        assert_eq!(g.max_modulation_depth, 0.35);

        let g = beam_gain(&at(0.0, 70e-3), 0, F, &m, &model).unwrap();
        assert!(
            2.0 * g.harvested_amplitude >= 4.5,
            "{}",
            g.harvested_amplitude
        );
        assert!(g.max_modulation_depth >= 0.20, "{}", g.max_modulation_depth);

        let g = beam_gain(&at(1.75e-3, n), 0, F, &m, &model).unwrap();
        assert!(
            2.0 * g.harvested_amplitude >= 4.2,
            "{}",
            g.harvested_amplitude
        );
        let g2 = beam_gain(&at(-1.75e-3, n), 0, F, &m, &model).unwrap();
        assert_eq!(g, g2);
    }

    #[test]
    fn axial_peak_and_depth_monotone() {
        let m = AcousticMedium::oil();
        let model = BeamModel::default();
        let n = fresnel_distance(6.35e-3, F, m.c);
        let grid: Vec<f64> = (0..=200).map(|i| 10e-3 + i as f64 * 0.5e-3).collect();
        let gains: Vec<BeamGain> = grid
            .iter()
            .map(|&z| beam_gain(&at(0.0, z), 0, F, &m, &model).unwrap())
            .collect();
        let (imax, _) = gains
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.pressure_gain.total_cmp(&b.1.pressure_gain))
            .unwrap();
        assert!(
            (grid[imax] - n).abs() <= 0.5e-3,
            "peak {} vs N {n}",
            grid[imax]
        );
        for w in gains.windows(2).zip(grid.windows(2)) {
            if w.1[0] >= n {
                assert!(w.0[1].max_modulation_depth <= w.0[0].max_modulation_depth);
            }
        }
    }

    #[test]
    fn outside_validity_is_an_error() {
        let r = beam_gain(
            &at(6e-3, 50e-3),
            0,
            F,
            &AcousticMedium::oil(),
            &BeamModel::default(),
        );
        assert!(matches!(r, Err(Error::ModelRange { .. })));
    }

    #[test]
    fn geometry_validation() {
        assert!(LinkGeometry::new(vec![MotePosition::on_axis(0.0)]).is_err());
        assert!(LinkGeometry::new(vec![
            MotePosition::on_axis(0.05),
            MotePosition::on_axis(0.05)
        ])
        .is_err());
    }
}
