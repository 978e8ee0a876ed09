//! Behavioural model of one implant: power-up timing, chopper LNA,
//! transconductor and the rectifier-as-mixer echo modulator.

mod afe;
mod config;
mod modulator;
mod timeline;

pub use afe::{
    afe_noise_model, afe_process, decode_weights, lna_pole, rms_in_band, AfeNoise, AfeOutput,
    DecodeWeights, MoteState, NoiseSpec, BOLTZMANN,
};
pub use config::{MoteConfig, MotePresets, BUILTIN_MOTES};
pub use modulator::{
    echo_modulate, gm_convert, gm_transfer, rectifier_inverse, rectifier_load_curve,
    rectifier_slope, reflection_from_current, static_transfer, ReflectionTrace, TransferPoint,
};
pub use timeline::{power_timeline, pulse_train_timeline, TimelineEvents};
