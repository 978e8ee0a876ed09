use serde::Serialize;

use super::MoteConfig;
use crate::error::{Error, Result};

/// Power-up and shutdown instants for one interrogation pulse, seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimelineEvents {
    pub pulse_start: f64,
    pub charge_complete: f64,
    /// Power-on reset released (end of the storage-cap charge).
    pub por: f64,
    pub amp_ready: f64,
    /// Interval in which the echo can carry data.
    pub modulation_window: (f64, f64),
    pub power_down: f64,
    /// False when the pulse arrived before the previous one had discharged,
    /// so the chip kept running without a fresh reset.
    pub por_triggered: bool,
}

impl TimelineEvents {
    pub fn window_len(&self) -> f64 {
        self.modulation_window.1 - self.modulation_window.0
    }
}

/// Timeline of a single pulse reaching a discharged mote.
pub fn power_timeline(
    pulse_start: f64,
    pulse_duration: f64,
    cfg: &MoteConfig,
) -> Result<TimelineEvents> {
    if !(pulse_duration > 0.0) {
        return Err(Error::validation("pulse_duration", "must be > 0"));
    }
    if pulse_duration <= cfg.t_startup_total {
        return Err(Error::ModulationWindowEmpty {
            pulse_s: pulse_duration,
            startup_s: cfg.t_startup_total,
        });
    }
    let end = pulse_start + pulse_duration;
    let amp_ready = pulse_start + cfg.t_startup_total;
    Ok(TimelineEvents {
        pulse_start,
        charge_complete: pulse_start + cfg.t_charge,
        por: pulse_start + cfg.t_charge,
        amp_ready,
        modulation_window: (amp_ready, end),
        power_down: end + cfg.t_discharge,
        por_triggered: true,
    })
}

/// Timelines for a train of pulses. A pulse that starts before the
/// previous power-down is flagged `por_triggered = false`.
pub fn pulse_train_timeline(
    pulse_starts: &[f64],
    pulse_duration: f64,
    cfg: &MoteConfig,
) -> Result<Vec<TimelineEvents>> {
    let mut out: Vec<TimelineEvents> = Vec::with_capacity(pulse_starts.len());
    for &start in pulse_starts {
        let mut ev = power_timeline(start, pulse_duration, cfg)?;
        if let Some(prev) = out.last() {
            if start < prev.power_down {
                ev.por_triggered = false;
            }
        }
        out.push(ev);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forty_us_pulse_leaves_29_us() {
        let ev = power_timeline(0.0, 40e-6, &MoteConfig::default()).unwrap();
        assert!((ev.window_len() - 29e-6).abs() < 1e-12);
        assert!((ev.charge_complete - 5e-6).abs() < 1e-15);
        assert!((ev.power_down - 50e-6).abs() < 1e-15);
    }

    #[test]
    fn short_gap_skips_reset() {
        let cfg = MoteConfig::default();
        // 40 µs pulses with an 8 µs gap (< 10 µs discharge)
        let t = pulse_train_timeline(&[0.0, 48e-6, 100e-6], 40e-6, &cfg).unwrap();
        assert!(t[0].por_triggered);
        assert!(!t[1].por_triggered);
        assert!(t[2].por_triggered);
    }

    #[test]
    fn startup_length_pulse_is_empty() {
        let r = power_timeline(0.0, 11e-6, &MoteConfig::default());
        assert!(matches!(r, Err(Error::ModulationWindowEmpty { .. })));
    }
}
