//! Acoustic link between the interrogator and the motes.

mod beam;
mod carrier_noise;
mod propagation;

pub use beam::{
    axial_profile, beam_gain, fresnel_distance, last_axial_maximum, piston_on_axis, BeamGain,
    BeamModel, LinkGeometry, MotePosition, DEFAULT_APERTURE,
};
pub use carrier_noise::{
    inject_carrier_noise, CarrierNoiseModel, CarrierNoiseSource, EnvelopeScale,
};
pub use propagation::{echo_envelope, power_up_delay, propagate, superpose};
