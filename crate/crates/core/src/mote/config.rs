use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::de;

/// Mote presets shipped with the crate.
pub const BUILTIN_MOTES: &str = include_str!("../../data/motes.toml");

const SCHEMA_VERSION: u32 = 1;

/// Behavioural parameters of one implant. All values SI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MoteConfig {
    /// Piezo series resistance at resonance, ohm.
    #[serde(deserialize_with = "de::resistance")]
    pub r_s: f64,
    /// Minimum harvested piezo amplitude for operation, V.
    #[serde(deserialize_with = "de::voltage")]
    pub v_s_min: f64,
    pub lna_gain: f64,
    /// LNA output swing limit (±), V.
    #[serde(deserialize_with = "de::voltage")]
    pub lna_output_range: f64,
    #[serde(deserialize_with = "de::frequency")]
    pub lna_bandwidth: f64,
    /// gm-cell transconductance, S.
    #[serde(deserialize_with = "de::conductance")]
    pub gm: f64,
    pub mirror_gain: f64,
    /// Cubic compression of the gm cell at full scale (fraction).
    pub gm_cubic: f64,
    /// Quiescent modulation current, A.
    pub i_m0: f64,
    /// Enables the gm compression and the rectifier curve.
    pub nonlinear: bool,
    /// Enables the input chopper (and hence subcarrier coding).
    pub chopping: bool,
    pub f_chop_divider: u32,
    pub subcarrier_divider: u32,
    pub code_id: usize,
    #[serde(deserialize_with = "de::time")]
    pub t_charge: f64,
    #[serde(deserialize_with = "de::time")]
    pub t_amp_init: f64,
    #[serde(deserialize_with = "de::time")]
    pub t_startup_total: f64,
    #[serde(deserialize_with = "de::time")]
    pub t_discharge: f64,
    /// Input range (±) the chain is specified for, V.
    #[serde(deserialize_with = "de::voltage")]
    pub input_linear_range: f64,
    #[serde(deserialize_with = "de::capacitance")]
    pub c_f: f64,
    #[serde(deserialize_with = "de::capacitance")]
    pub c_load: f64,
    #[serde(deserialize_with = "de::capacitance")]
    pub c_s: f64,
    /// Feedback factor of the capacitive-feedback LNA.
    pub beta_fb: f64,
    /// OTA transconductance setting the LNA bandwidth, S.
    #[serde(deserialize_with = "de::conductance")]
    pub ota_gm: f64,
    /// Harvesting operating point of the reflection coefficient.
    pub gamma_h: f64,
    /// Largest allowed |Γ − Γ_h|.
    pub max_mod_depth: f64,
    /// Junction temperature for kT/C terms, K.
    pub temperature: f64,
    /// Injects the per-interrogation autozero sample.
    pub autozero_noise: bool,
}

impl Default for MoteConfig {
    fn default() -> Self {
        MoteConfig {
            r_s: 4000.0,
            v_s_min: 1.25,
            lna_gain: 16.0,
            lna_output_range: 0.160,
            lna_bandwidth: 180e3,
            gm: 120e-6,
            mirror_gain: 1.84,
            gm_cubic: 0.015,
            i_m0: 100e-6,
            nonlinear: true,
            chopping: true,
            f_chop_divider: 32,
            subcarrier_divider: 32,
            code_id: 0,
            t_charge: 5e-6,
            t_amp_init: 3e-6,
            t_startup_total: 11e-6,
            t_discharge: 10e-6,
            input_linear_range: 10e-3,
            c_f: 0.44e-12,
            c_load: 4.7e-12,
            c_s: 7.04e-12,
            beta_fb: 1.0 / 16.0,
            ota_gm: 92.5e-6,
            gamma_h: 0.5,
            max_mod_depth: 0.20,
            temperature: 300.0,
            autozero_noise: true,
        }
    }
}

impl MoteConfig {
    /// An ideal mote: every stage linear, same gains and timing.
    pub fn ideal_linear() -> Self {
        MoteConfig {
            nonlinear: false,
            gm_cubic: 0.0,
            autozero_noise: false,
            ..Self::default()
        }
    }

    /// Nominal small-signal gain ΔV_PZ / v_in.
    pub fn nominal_gain(&self) -> f64 {
        self.lna_gain * self.gm * self.mirror_gain * self.r_s
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("r_s", self.r_s),
            ("v_s_min", self.v_s_min),
            ("lna_gain", self.lna_gain),
            ("lna_output_range", self.lna_output_range),
            ("lna_bandwidth", self.lna_bandwidth),
            ("gm", self.gm),
            ("mirror_gain", self.mirror_gain),
            ("t_charge", self.t_charge),
            ("t_startup_total", self.t_startup_total),
            ("t_discharge", self.t_discharge),
            ("input_linear_range", self.input_linear_range),
            ("c_f", self.c_f),
            ("c_load", self.c_load),
            ("c_s", self.c_s),
            ("beta_fb", self.beta_fb),
            ("ota_gm", self.ota_gm),
            ("max_mod_depth", self.max_mod_depth),
            ("temperature", self.temperature),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::validation(name, format!("must be > 0, got {v}")));
            }
        }
        if self.t_amp_init < 0.0 || self.i_m0 < 0.0 || self.gm_cubic < 0.0 {
            return Err(Error::validation(
                "mote",
                "t_amp_init, i_m0 and gm_cubic must be >= 0",
            ));
        }
        if self.t_startup_total < self.t_charge + self.t_amp_init {
            return Err(Error::validation(
                "t_startup_total",
                "must be >= t_charge + t_amp_init",
            ));
        }
        if ((self.c_s / self.c_f) / self.lna_gain - 1.0).abs() > 1e-6 {
            return Err(Error::validation(
                "c_s",
                format!(
                    "gain {} must equal C_s/C_f = {}",
                    self.lna_gain,
                    self.c_s / self.c_f
                ),
            ));
        }
        let beta_caps = self.c_f / (self.c_f + self.c_s);
        if (self.beta_fb / beta_caps - 1.0).abs() > 0.10 {
            return Err(Error::validation(
                "beta_fb",
                format!(
                    "{} not within 10% of C_f/(C_f + C_s) = {beta_caps}",
                    self.beta_fb
                ),
            ));
        }
        if !(0.0 < self.gamma_h && self.gamma_h < 1.0) {
            return Err(Error::validation("gamma_h", "must lie in (0, 1)"));
        }
        for (name, d) in [
            ("f_chop_divider", self.f_chop_divider),
            ("subcarrier_divider", self.subcarrier_divider),
        ] {
            if d < 2 || !d.is_power_of_two() {
                return Err(Error::validation(name, "must be a power of two >= 2"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PresetFile {
    schema_version: u32,
    #[serde(default)]
    mote: BTreeMap<String, MoteConfig>,
}

/// Named mote presets.
#[derive(Debug, Clone)]
pub struct MotePresets {
    entries: BTreeMap<String, MoteConfig>,
}

impl MotePresets {
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_MOTES).expect("builtin mote presets are valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let file: PresetFile =
            toml::from_str(text).map_err(|e| Error::schema("motes", e.message().to_string()))?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(Error::schema(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, got {}", file.schema_version),
            ));
        }
        for (name, cfg) in &file.mote {
            cfg.validate()
                .map_err(|e| Error::schema(format!("mote.{name}"), e.to_string()))?;
        }
        Ok(MotePresets { entries: file.mote })
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn get(&self, name: &str) -> Result<MoteConfig> {
        self.entries
            .get(name)
            .cloned()
            .ok_or_else(|| Error::validation("mote", format!("unknown mote preset `{name}`")))
    }
}
