use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::stimulus::{Stimulus, StimulusSpec};
use crate::channel::{BeamModel, CarrierNoiseModel, LinkGeometry, MotePosition, DEFAULT_APERTURE};
use crate::error::{Error, Result};
use crate::interrogator::{
    build_code_book, snap_unit, window_alignment, CodeBook, CodeMode, DecodeConfig, DemodMode,
    InterrogationSchedule, SubcarrierCode,
};
use crate::medium::AcousticMedium;
use crate::mote::{MoteConfig, MotePresets};
use crate::piezo::MaterialLibrary;
use crate::units::{Dim, Quantity};

/// Scenario file format version.
pub const SCENARIO_SCHEMA_VERSION: u32 = 1;

/// Slack kept between the end of a pulse and its own returning echo, s.
const AUTO_PULSE_MARGIN: f64 = 1e-6;

/// Front-end noise of the motes, as seen in the reconstructed stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChipNoise {
    pub enabled: bool,
    /// Input-referred white density, V/√Hz.
    #[serde(deserialize_with = "crate::units::de::density")]
    pub white_density: f64,
    /// Corner of the amplifier 1/f noise (before chopping), Hz.
    #[serde(deserialize_with = "crate::units::de::frequency")]
    pub flicker_corner: f64,
}

impl Default for ChipNoise {
    fn default() -> Self {
        ChipNoise {
            enabled: true,
            white_density: 76e-9,
            flicker_corner: 2e3,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub carrier: CarrierNoiseModel,
    pub chip: ChipNoise,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchedule {
    /// A duration or `"auto"`.
    pulse_duration: Quantity,
    pulse_period: Option<Quantity>,
    f_sample: Option<Quantity>,
    n_pulses: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMote {
    name: Option<String>,
    #[serde(default = "default_preset")]
    preset: String,
    code_id: usize,
    z: Quantity,
    #[serde(default)]
    x: Option<Quantity>,
    #[serde(default)]
    y: Option<Quantity>,
    #[serde(default)]
    overrides: Option<toml::Table>,
    stimulus: StimulusSpec,
}

fn default_preset() -> String {
    "this_work".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    /// Checked before deserialising.
    #[serde(rename = "schema_version")]
    _schema_version: u32,
    name: Option<String>,
    seed: u64,
    output_dir: Option<PathBuf>,
    f_main: Quantity,
    #[serde(default = "default_medium")]
    medium: String,
    #[serde(default = "default_piezo")]
    piezo: String,
    aperture: Option<Quantity>,
    #[serde(default)]
    beam: BeamModel,
    #[serde(default)]
    code_mode: CodeMode,
    schedule: RawSchedule,
    #[serde(default)]
    noise: NoiseSection,
    #[serde(default)]
    decode: DecodeConfig,
    #[serde(default)]
    demod: DemodMode,
    motes: Vec<RawMote>,
}

fn default_medium() -> String {
    "oil".into()
}

fn default_piezo() -> String {
    "apc840".into()
}

/// One implant in a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct MoteSetup {
    pub name: String,
    pub config: MoteConfig,
    pub position: MotePosition,
    pub stimulus: Stimulus,
}

/// A fully validated simulation input.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkScenario {
    pub name: String,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub f_main: f64,
    pub medium_name: String,
    pub medium: AcousticMedium,
    pub piezo: String,
    pub aperture: f64,
    pub beam: BeamModel,
    pub code_mode: CodeMode,
    /// Pulse duration, or `None` to size it from the geometry.
    pub pulse_duration: Option<f64>,
    pub pulse_period: f64,
    pub n_pulses: usize,
    pub noise: NoiseSection,
    pub decode: DecodeConfig,
    pub demod: DemodMode,
    pub motes: Vec<MoteSetup>,
}

/// Reads and validates a scenario file. Relative stimulus paths resolve
/// against the file's directory.
pub fn load_scenario(path: &Path) -> Result<LinkScenario> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::validation("scenario", format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut s = parse_scenario(&text, base)?;
    if s.name.is_empty() {
        s.name = path
            .file_stem()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
    }
    Ok(s)
}

/// Parses scenario text; `base` anchors relative file paths.
pub fn parse_scenario(text: &str, base: &Path) -> Result<LinkScenario> {
    let schema_error = |e: toml::de::Error| {
        let at = e.span().map_or(0, |sp| sp.start);
        let path = match e
            .message()
            .strip_prefix("missing field `")
            .and_then(|m| m.split_once('`'))
        {
            Some((field, _)) => match locate_table(text, at) {
                t if t.is_empty() => field.to_string(),
                t => format!("{t}.{field}"),
            },
            None if e.span().is_some() => locate(text, at),
            None => "<root>".into(),
        };
        Error::schema(path, e.message().to_string())
    };
    let table: toml::Table = toml::from_str(text).map_err(schema_error)?;
    match table.get("schema_version").and_then(|v| v.as_integer()) {
        Some(v) if v == SCENARIO_SCHEMA_VERSION as i64 => {}
        Some(v) => {
            return Err(Error::schema(
                "schema_version",
                format!("expected {SCENARIO_SCHEMA_VERSION}, got {v}"),
            ))
        }
        None => return Err(Error::schema("schema_version", "missing or not an integer")),
    }
    let raw: RawScenario = toml::from_str(text).map_err(schema_error)?;
    let f_main = raw.f_main.si(Dim::Frequency, "f_main")?;
    let medium =
        AcousticMedium::preset(&raw.medium).map_err(|e| Error::schema("medium", e.to_string()))?;
    let pulse_duration = match &raw.schedule.pulse_duration {
        Quantity::Text(t) if t.trim() == "auto" => None,
        q => Some(q.si(Dim::Time, "schedule.pulse_duration")?),
    };
    let pulse_period = match (&raw.schedule.pulse_period, &raw.schedule.f_sample) {
        (Some(p), None) => p.si(Dim::Time, "schedule.pulse_period")?,
        (None, Some(f)) => 1.0 / f.si(Dim::Frequency, "schedule.f_sample")?,
        _ => {
            return Err(Error::schema(
                "schedule",
                "give exactly one of pulse_period and f_sample",
            ))
        }
    };
    let presets = MotePresets::builtin();
    let mut motes = Vec::with_capacity(raw.motes.len());
    for (i, m) in raw.motes.iter().enumerate() {
        let at = |field: &str| format!("motes[{i}].{field}");
        let mut config = presets
            .get(&m.preset)
            .map_err(|e| Error::schema(at("preset"), e.to_string()))?;
        if let Some(over) = &m.overrides {
            config = apply_overrides(&config, over)
                .map_err(|reason| Error::schema(at("overrides"), reason))?;
        }
        config.code_id = m.code_id;
        let position = MotePosition {
            z: m.z.si(Dim::Length, &at("z"))?,
            x: m.x
                .as_ref()
                .map_or(Ok(0.0), |q| q.si(Dim::Length, &at("x")))?,
            y: m.y
                .as_ref()
                .map_or(Ok(0.0), |q| q.si(Dim::Length, &at("y")))?,
        };
        let stimulus = m
            .stimulus
            .resolve(base)
            .map_err(|e| Error::schema(at("stimulus"), e.to_string()))?;
        motes.push(MoteSetup {
            name: m.name.clone().unwrap_or_else(|| format!("mote{i}")),
            config,
            position,
            stimulus,
        });
    }
    let s = LinkScenario {
        name: raw.name.unwrap_or_default(),
        seed: raw.seed,
        output_dir: raw.output_dir,
        f_main,
        medium_name: raw.medium,
        medium,
        piezo: raw.piezo,
        aperture: raw
            .aperture
            .as_ref()
            .map_or(Ok(DEFAULT_APERTURE), |q| q.si(Dim::Length, "aperture"))?,
        beam: raw.beam,
        code_mode: raw.code_mode,
        pulse_duration,
        pulse_period,
        n_pulses: raw.schedule.n_pulses,
        noise: raw.noise,
        decode: raw.decode,
        demod: raw.demod,
        motes,
    };
    s.validate()?;
    Ok(s)
}

/// Dotted key path of the TOML entry containing byte offset `pos`.
/// Header of the table enclosing byte `pos`, empty at the root.
fn locate_table(text: &str, pos: usize) -> String {
    let mut table = String::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim();
        if trimmed.starts_with('[') {
            table = trimmed.trim_matches(|c| c == '[' || c == ']').to_string();
        }
        offset += line.len();
        if offset > pos {
            break;
        }
    }
    table
}

fn locate(text: &str, pos: usize) -> String {
    let mut table = String::new();
    let mut key = String::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim();
        if trimmed.starts_with('[') {
            table = trimmed.trim_matches(|c| c == '[' || c == ']').to_string();
            key.clear();
        } else if let Some((k, _)) = trimmed.split_once('=') {
            key = k.trim().to_string();
        }
        offset += line.len();
        if offset > pos {
            break;
        }
    }
    match (table.is_empty(), key.is_empty()) {
        (true, true) => "<root>".into(),
        (true, false) => key,
        (false, true) => table,
        (false, false) => format!("{table}.{key}"),
    }
}

fn apply_overrides(
    base: &MoteConfig,
    over: &toml::Table,
) -> std::result::Result<MoteConfig, String> {
    let mut table = toml::Table::try_from(base).map_err(|e| e.to_string())?;
    for (k, v) in over {
        if k == "code_id" {
            return Err("set code_id on the mote, not in overrides".into());
        }
        table.insert(k.clone(), v.clone());
    }
    let cfg: MoteConfig = table
        .try_into()
        .map_err(|e: toml::de::Error| e.message().to_string())?;
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

impl LinkScenario {
    pub fn geometry(&self) -> Result<LinkGeometry> {
        let mut g = LinkGeometry::new(self.motes.iter().map(|m| m.position).collect())?;
        g.aperture_diameter = self.aperture;
        g.validate()?;
        Ok(g)
    }

    pub fn f_sample(&self) -> f64 {
        1.0 / self.pulse_period
    }

    fn depth_range(&self) -> (f64, f64) {
        self.motes
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), m| {
                (lo.min(m.position.z), hi.max(m.position.z))
            })
    }

    /// Codes used by the interrogator for each mote, in mote order.
    pub fn decode_codes(&self) -> Result<(CodeBook, Vec<SubcarrierCode>)> {
        let n = self
            .motes
            .iter()
            .map(|m| m.config.code_id + 1)
            .max()
            .unwrap_or(1);
        let base = self.motes[0].config.f_chop_divider;
        let book = build_code_book(n, self.f_main, base, self.code_mode)?;
        let codes = self
            .motes
            .iter()
            .map(|m| {
                if m.config.chopping {
                    book.get(m.config.code_id).cloned()
                } else {
                    Ok(SubcarrierCode::unchopped(
                        m.config.code_id,
                        self.f_main,
                        base,
                    ))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((book, codes))
    }

    /// Snap unit for the active code set, s.
    pub fn snap_unit(&self) -> Result<f64> {
        let (_, codes) = self.decode_codes()?;
        let refs: Vec<&SubcarrierCode> = codes.iter().collect();
        Ok(snap_unit(&refs))
    }

    /// Grid the decode window start is rounded onto, s.
    pub fn window_alignment(&self) -> Result<f64> {
        let (_, codes) = self.decode_codes()?;
        let refs: Vec<&SubcarrierCode> = codes.iter().collect();
        Ok(window_alignment(&refs))
    }

    /// Pulse duration, sizing `auto` to the decode window plus start-up.
    pub fn resolved_pulse_duration(&self) -> Result<f64> {
        if let Some(d) = self.pulse_duration {
            return Ok(d);
        }
        let cfg = &self.motes[0].config;
        let (z_min, _) = self.depth_range();
        let settle = self.decode.settle(self.window_alignment()?);
        let need = cfg.t_startup_total + settle + self.snap_unit()? + AUTO_PULSE_MARGIN;
        let cap = 2.0 * self.medium.time_of_flight(z_min) - AUTO_PULSE_MARGIN;
        if need > cap {
            return Err(Error::InfeasibleLink(format!(
                "a {:.2} us pulse is needed but the round trip allows {:.2} us",
                need * 1e6,
                cap * 1e6
            )));
        }
        Ok(need)
    }

    pub fn schedule(&self) -> Result<InterrogationSchedule> {
        let (z_min, _) = self.depth_range();
        Ok(InterrogationSchedule {
            f_main: self.f_main,
            pulse_duration: self.resolved_pulse_duration()?,
            pulse_period: self.pulse_period,
            n_pulses: self.n_pulses,
            depth: z_min,
        })
    }

    /// Checks every cross-module invariant.
    pub fn validate(&self) -> Result<()> {
        if self.motes.is_empty() || self.motes.len() > 8 {
            return Err(Error::schema(
                "motes",
                format!("1 to 8 motes required, got {}", self.motes.len()),
            ));
        }
        if !(self.f_main > 0.0) {
            return Err(Error::schema("f_main", "must be > 0"));
        }
        if self.n_pulses < 2 {
            return Err(Error::schema(
                "schedule.n_pulses",
                "at least 2 pulses are needed",
            ));
        }
        MaterialLibrary::builtin()
            .get(&self.piezo)
            .map_err(|e| Error::schema("piezo", e.to_string()))?;
        self.noise.carrier.validate()?;
        let chip = &self.noise.chip;
        if !(chip.white_density >= 0.0 && chip.flicker_corner >= 0.0) {
            return Err(Error::schema(
                "noise.chip",
                "densities and corners must be >= 0",
            ));
        }
        if !(self.decode.guard >= 0.0) {
            return Err(Error::schema("decode.guard", "must be >= 0"));
        }
        let mut ids = BTreeSet::new();
        for (i, m) in self.motes.iter().enumerate() {
            if !ids.insert(m.config.code_id) {
                return Err(Error::Invariant(format!(
                    "code_id {} assigned to more than one mote (motes[{i}])",
                    m.config.code_id
                )));
            }
            m.config
                .validate()
                .map_err(|e| Error::schema(format!("motes[{i}]"), e.to_string()))?;
            if let Some(f) = m.stimulus.bandwidth() {
                if f >= self.f_sample() / 2.0 {
                    return Err(Error::Invariant(format!(
                        "motes[{i}] stimulus at {f} Hz is not below f_sample/2 = {} Hz",
                        self.f_sample() / 2.0
                    )));
                }
            }
        }
        let chopped = self.motes.iter().filter(|m| m.config.chopping).count();
        if self.motes.len() > 1 && chopped < self.motes.len() {
            return Err(Error::Invariant(
                "several motes share the link only when every mote chops".into(),
            ));
        }
        self.geometry()?;
        self.decode_codes()?;
        let sched = self.schedule()?;
        sched.validate(&self.medium, &self.motes[0].config)?;
        for m in &self.motes {
            let round_trip = 2.0 * self.medium.time_of_flight(m.position.z);
            if sched.pulse_duration >= round_trip {
                return Err(Error::Invariant(format!(
                    "pulse {:.2} us overlaps the echo of {} (2 ToF = {:.2} us)",
                    sched.pulse_duration * 1e6,
                    m.name,
                    round_trip * 1e6
                )));
            }
            if self.pulse_period - sched.pulse_duration <= m.config.t_discharge {
                return Err(Error::Invariant(format!(
                    "{} does not discharge between pulses",
                    m.name
                )));
            }
        }
        let (_, z_max) = self.depth_range();
        let echo_end = 2.0 * self.medium.time_of_flight(z_max) + sched.pulse_duration;
        if echo_end >= self.pulse_period {
            // Each pulse is simulated on its own, so this costs nothing here;
            // a single-element transducer would be transmitting mid-echo.
            log::info!(
                "the last echo ends {:.2} us after the pulse, past the {:.2} us period",
                echo_end * 1e6,
                self.pulse_period * 1e6
            );
        }
        Ok(())
    }
}
