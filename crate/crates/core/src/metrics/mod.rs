//! Signal-quality analysis of reconstructed streams.
//!
//! Fixed defaults: Hann for densities, flat-top for tone amplitudes,
//! five harmonics above the fundamental for THD.

mod linearity;
mod report;
mod spectrum;
mod tone;

pub use linearity::{static_linearity, LinearityFit};
pub use report::{write_metrics_csv, write_psd_csv, MetricsReport};
pub use spectrum::{
    noise_density, psd, welch, NoiseEstimate, Psd, Window, DEFAULT_SEGMENT, MIN_PSD_SAMPLES,
};
pub use tone::{tone_amplitudes, tone_metrics, Harmonic, ToneMetrics, DB_FLOOR, THD_HARMONICS};
