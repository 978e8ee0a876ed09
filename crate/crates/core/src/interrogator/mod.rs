//! Interrogator side: code books, scheduling, demodulation and decoding.

mod codes;
mod decode;
mod demod;
mod reconstruct;
mod schedule;

pub use codes::{build_code_book, cross_correlation, CodeBook, CodeKind, CodeMode, SubcarrierCode};
pub use decode::{
    decode_cdm, decode_joint, decode_window, snap_unit, window_alignment, ActiveCode, DecodeConfig,
    DecodeMethod, DecodeWindow, DecodedSample, DropReason, Truncation, LITERAL_WINDOWS,
};
pub use demod::{demodulate_carrier, DemodMode};
pub use reconstruct::{
    reconstruct, write_pulse_csv, Calibration, Gap, PulseRecord, SampleDiagnostics, SampleStream,
};
pub use schedule::{
    code_capacity, link_report, plan_link, InterrogationSchedule, LinkPlan, LinkReport, Modulation,
    SETTLE_CYCLES,
};
