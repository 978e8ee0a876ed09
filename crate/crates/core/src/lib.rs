//! Desk-scale simulator for ultrasonically powered, free-floating
//! neural-recording motes that talk back by modulating their echo.
//!
//! The signal chain runs from the analytic piezo model ([`piezo`]) through
//! the mote front-end and echo modulator ([`mote`]), across the acoustic
//! link ([`channel`]), into the interrogator's scheduling and CDM decoding
//! ([`interrogator`]), and ends in stream quality metrics ([`metrics`]).
//! [`scenario`] ties everything into deterministic, file-driven runs.
//!
//! Analytic models are generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below name the double-precision instantiations used by the
//! simulator.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod interrogator;
pub mod medium;
pub mod metrics;
pub mod mote;
pub mod noise;
pub mod piezo;
pub mod rng;
pub mod scalar;
pub mod scenario;
pub mod units;
pub mod waveform;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Waveform64 = waveform::Waveform<f64>;
pub type Waveform32 = waveform::Waveform<f32>;
pub type AcousticMedium64 = medium::AcousticMedium<f64>;
pub type PiezoParams64 = piezo::PiezoParams<f64>;
pub type PiezoParams32 = piezo::PiezoParams<f32>;
pub type PiezoMaterialGeometry64 = piezo::PiezoMaterialGeometry<f64>;
pub type ThreePortMatrix64 = piezo::ThreePortMatrix<f64>;
