use std::fmt;

use serde::Serialize;

use super::config::LinkScenario;
use super::stimulus::Stimulus;
use crate::error::Result;
use crate::interrogator::{code_capacity, link_report, LinkReport, Modulation};
use crate::piezo::{derive_params, series_resistance, series_resonance, MaterialLibrary};

/// Subcarrier periods per symbol in the budget: one snap unit of the
/// fastest code.
pub const BUDGET_CODE_CYCLES: u32 = 2;

/// Link arithmetic for a scenario's shallowest mote.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkBudget {
    pub depth: f64,
    pub time_of_flight: f64,
    pub am: LinkReport,
    pub dm: LinkReport,
    pub code_capacity: usize,
    pub f_sample: f64,
    /// SNR expected from the configured noise densities and stimulus, dB.
    pub predicted_snr_db: f64,
    /// `f_sample · log2(1 + SNR)`, bit/s.
    pub rate_shannon: f64,
    /// `f_sample · (SNR − 1.76) / 6.02`, bit/s.
    pub rate_enob: f64,
    pub piezo: String,
    pub piezo_series_resonance: f64,
    pub piezo_series_resistance: f64,
}

/// Computes the timing and rate budget. Infeasible links are reported,
/// not rejected.
pub fn report_link_budget(s: &LinkScenario, bits: u32) -> Result<LinkBudget> {
    let lead = s
        .motes
        .iter()
        .min_by(|a, b| a.position.z.total_cmp(&b.position.z))
        .expect("scenario has motes");
    let cfg = &lead.config;
    let depth = lead.position.z;
    let am = link_report(
        depth,
        &s.medium,
        Modulation::Am,
        BUDGET_CODE_CYCLES,
        cfg,
        s.f_main,
    )?;
    let dm = link_report(
        depth,
        &s.medium,
        Modulation::Dm { bits },
        BUDGET_CODE_CYCLES,
        cfg,
        s.f_main,
    )?;
    let max_code_freq = s.f_main / cfg.f_chop_divider as f64;
    let amplitude = match &lead.stimulus {
        Stimulus::Tone { amplitude, .. } => *amplitude,
        _ => cfg.input_linear_range,
    };
    let carrier = &s.noise.carrier;
    let chip = &s.noise.chip;
    let density = (if carrier.white_enabled {
        carrier.white_density.powi(2)
    } else {
        0.0
    } + if chip.enabled {
        chip.white_density.powi(2)
    } else {
        0.0
    })
    .sqrt();
    let f_sample = s.f_sample();
    let snr = if density > 0.0 {
        10.0 * ((amplitude * amplitude / 2.0) / (density * density * f_sample / 2.0)).log10()
    } else {
        f64::INFINITY
    };
    let params = derive_params(MaterialLibrary::builtin().get(&s.piezo)?)?;
    let fs_piezo = series_resonance(&params)?;
    let rs = series_resistance(&params, &s.medium)?;
    Ok(LinkBudget {
        depth,
        time_of_flight: s.medium.time_of_flight(depth),
        code_capacity: code_capacity(depth, &s.medium, max_code_freq, cfg),
        f_sample,
        predicted_snr_db: snr,
        rate_shannon: f_sample * (1.0 + 10f64.powf(snr / 10.0)).log2(),
        rate_enob: f_sample * (snr - 1.76) / 6.02,
        piezo: s.piezo.clone(),
        piezo_series_resonance: fs_piezo,
        piezo_series_resistance: rs,
        am,
        dm,
    })
}

impl fmt::Display for LinkBudget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let us = 1e6;
        let mm = 1e3;
        writeln!(f, "depth                      {:.2} mm", self.depth * mm)?;
        writeln!(
            f,
            "time of flight             {:.2} us (round trip {:.2} us)",
            self.time_of_flight * us,
            self.am.round_trip * us
        )?;
        writeln!(
            f,
            "symbol time                {:.2} us",
            self.am.t_symbol * us
        )?;
        writeln!(
            f,
            "T_echo,min  AM             {:.2} us",
            self.am.t_echo_min_am * us
        )?;
        writeln!(
            f,
            "T_echo,min  DM, B = {:<2}     {:.2} us",
            self.dm.bits,
            self.dm.t_echo_min_dm * us
        )?;
        writeln!(
            f,
            "d_min       AM             {:.2} mm",
            self.am.d_min_am * mm
        )?;
        writeln!(
            f,
            "d_min       DM, B = {:<2}     {:.2} mm",
            self.dm.bits,
            self.dm.d_min_dm * mm
        )?;
        writeln!(
            f,
            "f_sample,max AM            {:.1} kHz",
            self.am.f_sample_max_am / 1e3
        )?;
        writeln!(
            f,
            "f_sample,max DM            {:.1} kHz",
            self.dm.f_sample_max_dm / 1e3
        )?;
        writeln!(
            f,
            "start-up                   {:.2} us",
            self.am.t_startup * us
        )?;
        writeln!(
            f,
            "reset-limited depth        {:.2} mm",
            self.am.d_min_reset * mm
        )?;
        writeln!(
            f,
            "operational minimum (AM)   {:.2} mm ({}){}",
            self.am.d_min_operational * mm,
            self.am.binding_constraint,
            if self.am.feasible() {
                ""
            } else {
                "  INFEASIBLE at this depth"
            }
        )?;
        writeln!(
            f,
            "f_sample,max with start-up {:.1} kHz",
            self.am.f_sample_max / 1e3
        )?;
        writeln!(f, "code capacity              {}", self.code_capacity)?;
        writeln!(
            f,
            "f_sample                   {:.1} kHz",
            self.f_sample / 1e3
        )?;
        writeln!(
            f,
            "predicted SNR              {:.2} dB",
            self.predicted_snr_db
        )?;
        writeln!(
            f,
            "uplink rate  log2(1+SNR)   {:.1} kbit/s per mote",
            self.rate_shannon / 1e3
        )?;
        writeln!(
            f,
            "uplink rate  ENOB          {:.1} kbit/s per mote",
            self.rate_enob / 1e3
        )?;
        writeln!(
            f,
            "piezo {:<20} f_s {:.4} MHz, R_S {:.0} ohm",
            self.piezo,
            self.piezo_series_resonance / 1e6,
            self.piezo_series_resistance
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::parse_scenario;

    const TEXT: &str = r#"
schema_version = 1
seed = 1
f_main = "1.78 MHz"
[schedule]
pulse_duration = "58 us"
f_sample = "10 kHz"
n_pulses = 64
[[motes]]
code_id = 0
z = "50 mm"
stimulus = { kind = "tone", frequency = "313 Hz", vpp = "20 mV" }
"#;

    #[test]
    fn default_budget() {
        let s = parse_scenario(TEXT, std::path::Path::new(".")).unwrap();
        let b = report_link_budget(&s, 8).unwrap();
        assert!((b.am.round_trip - 66e-6).abs() < 0.1e-6);
        assert_eq!(b.code_capacity, 4);
        assert_eq!(b.dm.d_min_dm / b.am.d_min_am, 8.0);
        assert!(b.rate_shannon > 35e3);
        let text = b.to_string();
        assert!(text.contains("code capacity              4"));
    }
}
