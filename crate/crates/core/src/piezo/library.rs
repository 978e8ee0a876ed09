use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use super::PiezoMaterialGeometry;
use crate::error::{Error, Result};

/// The material file shipped with the crate.
pub const BUILTIN_LIBRARY: &str = include_str!("../../data/piezo_materials.toml");

const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct Entry {
    #[serde(default)]
    description: String,
    rho: f64,
    eps33: f64,
    c33e: f64,
    e33: f64,
    thickness: f64,
    area: f64,
    measured_rs_ohm: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct File {
    schema_version: u32,
    #[serde(default)]
    material: BTreeMap<String, Entry>,
}

/// Named piezo materials loaded from the structured text library.
#[derive(Debug, Clone)]
pub struct MaterialLibrary {
    entries: BTreeMap<String, Entry>,
}

impl MaterialLibrary {
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_LIBRARY).expect("builtin material library is valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let file: File = toml::from_str(text)
            .map_err(|e| Error::schema("materials", e.message().to_string()))?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(Error::schema(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, got {}", file.schema_version),
            ));
        }
        for (name, e) in &file.material {
            to_geometry(e)
                .validate()
                .map_err(|err| Error::schema(format!("material.{name}"), err.to_string()))?;
        }
        Ok(MaterialLibrary {
            entries: file.material,
        })
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn get(&self, name: &str) -> Result<PiezoMaterialGeometry<f64>> {
        self.entries
            .get(name)
            .map(to_geometry)
            .ok_or_else(|| Error::validation("piezo", format!("unknown material `{name}`")))
    }

    pub fn description(&self, name: &str) -> Option<&str> {
        self.entries.get(name).map(|e| e.description.as_str())
    }

    /// Measured series resistance for the entry, if recorded.
    pub fn measured_rs(&self, name: &str) -> Option<f64> {
        self.entries.get(name).and_then(|e| e.measured_rs_ohm)
    }
}

fn to_geometry(e: &Entry) -> PiezoMaterialGeometry<f64> {
    PiezoMaterialGeometry {
        rho: e.rho,
        eps33: e.eps33,
        c33e: e.c33e,
        e33: e.e33,
        thickness: e.thickness,
        area: e.area,
    }
}
