use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::medium::AcousticMedium;
use crate::mote::MoteConfig;

/// Carrier cycles allotted for the echo amplitude to settle per symbol.
pub const SETTLE_CYCLES: f64 = 2.0;

/// Pulse train sent by the interrogator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterrogationSchedule {
    pub f_main: f64,
    pub pulse_duration: f64,
    pub pulse_period: f64,
    pub n_pulses: usize,
    /// Shallowest mote depth the schedule must serve, m.
    pub depth: f64,
}

impl InterrogationSchedule {
    pub fn f_sample(&self) -> f64 {
        1.0 / self.pulse_period
    }

    pub fn pulse_start(&self, k: usize) -> f64 {
        k as f64 * self.pulse_period
    }

    /// Checks the transmit/receive and power-on-reset invariants.
    pub fn validate(&self, medium: &AcousticMedium, cfg: &MoteConfig) -> Result<()> {
        if !(self.f_main > 0.0 && self.pulse_duration > 0.0 && self.pulse_period > 0.0) {
            return Err(Error::validation(
                "schedule",
                "f_main, pulse_duration and pulse_period must be > 0",
            ));
        }
        if !(self.depth > 0.0) {
            return Err(Error::validation("schedule.depth", "must be > 0"));
        }
        let round_trip = 2.0 * medium.time_of_flight(self.depth);
        if self.pulse_duration >= round_trip {
            return Err(Error::Invariant(format!(
                "pulse {:.2} us overlaps its own echo (2 ToF = {:.2} us)",
                self.pulse_duration * 1e6,
                round_trip * 1e6
            )));
        }
        let gap = self.pulse_period - self.pulse_duration;
        if gap <= cfg.t_discharge {
            return Err(Error::Invariant(format!(
                "inter-pulse gap {:.2} us does not exceed the {:.2} us discharge time",
                gap * 1e6,
                cfg.t_discharge * 1e6
            )));
        }
        Ok(())
    }
}

/// Uplink modulation scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Modulation {
    /// One analog amplitude per echo.
    Am,
    /// `bits` binary symbols per echo.
    Dm { bits: u32 },
}

impl Modulation {
    pub fn symbols(&self) -> u32 {
        match self {
            Modulation::Am => 1,
            Modulation::Dm { bits } => *bits,
        }
    }
}

/// Timing budget of the pulse-echo link.
///
/// The `t_echo_min_*` and `d_min_*` pairs count only the modulated part
/// of the echo (settle plus payload per symbol), which makes the digital
/// distance exactly `bits` times the analog one. `d_min_operational` adds
/// the mote start-up and the reset constraint and is what feasibility is
/// judged against.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkReport {
    pub depth: f64,
    pub round_trip: f64,
    pub t_symbol: f64,
    pub bits: u32,
    pub t_echo_min_am: f64,
    pub t_echo_min_dm: f64,
    pub d_min_am: f64,
    pub d_min_dm: f64,
    pub f_sample_max_am: f64,
    pub f_sample_max_dm: f64,
    pub t_startup: f64,
    /// Depth at which the time of flight covers the mote discharge time.
    pub d_min_reset: f64,
    pub d_min_operational: f64,
    /// Constraint that sets `d_min_operational`.
    pub binding_constraint: String,
    /// Largest sample rate for the requested scheme with start-up.
    pub f_sample_max: f64,
}

/// A planned link: schedule at the shortest feasible period plus its report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkPlan {
    pub schedule: InterrogationSchedule,
    pub report: LinkReport,
}

/// Timing budget for a mote at `depth`, feasible or not.
///
/// Each symbol needs [`SETTLE_CYCLES`] carrier cycles plus
/// `n_code_cycles` subcarrier periods.
pub fn link_report(
    depth: f64,
    medium: &AcousticMedium,
    scheme: Modulation,
    n_code_cycles: u32,
    cfg: &MoteConfig,
    f_main: f64,
) -> Result<LinkReport> {
    if !(depth > 0.0) {
        return Err(Error::validation("depth", "must be > 0"));
    }
    if !(f_main > 0.0) {
        return Err(Error::validation("f_main", "must be > 0"));
    }
    if let Modulation::Dm { bits: 0 } = scheme {
        return Err(Error::validation(
            "bits",
            "digital modulation needs at least one bit",
        ));
    }
    if n_code_cycles == 0 {
        return Err(Error::validation("n_code_cycles", "must be >= 1"));
    }
    let c = medium.c;
    let t_sub = cfg.subcarrier_divider as f64 / f_main;
    let t_symbol = SETTLE_CYCLES / f_main + n_code_cycles as f64 * t_sub;
    let bits = scheme.symbols();
    let t_am = t_symbol;
    let t_dm = bits as f64 * t_symbol;
    let t_echo = cfg.t_startup_total + t_dm;
    let d_echo = c * t_echo / 2.0;
    let d_reset = c * cfg.t_discharge;
    let (d_op, binding) = if d_echo >= d_reset {
        (d_echo, "echo must hold start-up plus payload")
    } else {
        (d_reset, "time of flight must cover the mote discharge")
    };
    Ok(LinkReport {
        depth,
        round_trip: 2.0 * depth / c,
        t_symbol,
        bits,
        t_echo_min_am: t_am,
        t_echo_min_dm: t_dm,
        d_min_am: c * t_am / 2.0,
        d_min_dm: c * t_dm / 2.0,
        f_sample_max_am: 1.0 / (2.0 * t_am),
        f_sample_max_dm: 1.0 / (2.0 * t_dm),
        t_startup: cfg.t_startup_total,
        d_min_reset: d_reset,
        d_min_operational: d_op,
        binding_constraint: binding.to_string(),
        f_sample_max: 1.0 / (2.0 * t_echo),
    })
}

impl LinkReport {
    /// Echo time the scheme needs including start-up, s.
    pub fn t_echo(&self) -> f64 {
        self.t_startup + self.t_echo_min_dm
    }

    pub fn feasible(&self) -> bool {
        self.depth >= self.d_min_operational
    }
}

/// Plans the pulse timing for a mote at `depth`, at the shortest period
/// the link allows.
pub fn plan_link(
    depth: f64,
    medium: &AcousticMedium,
    scheme: Modulation,
    n_code_cycles: u32,
    cfg: &MoteConfig,
    f_main: f64,
) -> Result<LinkPlan> {
    let report = link_report(depth, medium, scheme, n_code_cycles, cfg, f_main)?;
    if !report.feasible() {
        return Err(Error::InfeasibleLink(format!(
            "depth {:.2} mm is below the {:.2} mm minimum: {}",
            depth * 1e3,
            report.d_min_operational * 1e3,
            report.binding_constraint
        )));
    }
    let t_echo = report.t_echo();
    let period = (2.0 * t_echo).max(t_echo + cfg.t_discharge * 1.001);
    Ok(LinkPlan {
        schedule: InterrogationSchedule {
            f_main,
            pulse_duration: t_echo,
            pulse_period: period,
            n_pulses: 1,
            depth,
        },
        report,
    })
}

/// Number of same-rate Walsh codes whose common frame fits in the
/// modulation window `2 ToF − t_startup` at `depth`.
///
/// Chips last half a period of `max_code_freq`. The result is the largest
/// power of two not exceeding the chip count, and at least 1.
pub fn code_capacity(
    depth: f64,
    medium: &AcousticMedium,
    max_code_freq: f64,
    cfg: &MoteConfig,
) -> usize {
    let window = 2.0 * depth / medium.c - cfg.t_startup_total;
    let chip = 1.0 / (2.0 * max_code_freq);
    let chips = (window / chip + 1e-9).floor();
    if !(chips >= 2.0) {
        return 1;
    }
    1usize << (chips as u64).ilog2()
}

#[cfg(test)]
mod tests {
    use super::*;

    const F_MAIN: f64 = 1.78e6;

    #[test]
    fn fifty_mm_round_trip() {
        let m = AcousticMedium::oil();
        let plan = plan_link(50e-3, &m, Modulation::Am, 1, &MoteConfig::default(), F_MAIN).unwrap();
        assert!((plan.report.round_trip - 66e-6).abs() < 0.1e-6);
        plan.schedule.validate(&m, &MoteConfig::default()).unwrap();
    }

    #[test]
    fn digital_distance_scales_with_bits() {
        let m = AcousticMedium::oil();
        let cfg = MoteConfig::default();
        for bits in [1, 2, 4, 8] {
            let r = plan_link(0.2, &m, Modulation::Dm { bits }, 1, &cfg, F_MAIN)
                .unwrap()
                .report;
            assert_eq!(r.d_min_dm / r.d_min_am, bits as f64);
            assert_eq!(r.f_sample_max_am / r.f_sample_max_dm, bits as f64);
        }
    }

    #[test]
    fn reset_sets_minimum_depth_near_14_mm() {
        let m = AcousticMedium::oil();
        let r = plan_link(0.05, &m, Modulation::Am, 1, &MoteConfig::default(), F_MAIN)
            .unwrap()
            .report;
        assert!(
            (r.d_min_reset / 14e-3 - 1.0).abs() < 0.1,
            "{}",
            r.d_min_reset
        );
    }

    #[test]
    fn shallow_link_is_infeasible() {
        let m = AcousticMedium::oil();
        let err =
            plan_link(10e-3, &m, Modulation::Am, 1, &MoteConfig::default(), F_MAIN).unwrap_err();
        assert!(
            matches!(&err, Error::InfeasibleLink(msg) if msg.contains("start-up")),
            "{err}"
        );
        assert!(plan_link(
            30e-3,
            &m,
            Modulation::Dm { bits: 4 },
            1,
            &MoteConfig::default(),
            F_MAIN
        )
        .is_err());
    }

    #[test]
    fn schedule_invariants() {
        let m = AcousticMedium::oil();
        let cfg = MoteConfig::default();
        let s = InterrogationSchedule {
            f_main: F_MAIN,
            pulse_duration: 70e-6,
            pulse_period: 100e-6,
            n_pulses: 4,
            depth: 50e-3,
        };
        assert!(matches!(s.validate(&m, &cfg), Err(Error::Invariant(_))));
        let s = InterrogationSchedule {
            pulse_duration: 60e-6,
            pulse_period: 65e-6,
            ..s
        };
        assert!(s.validate(&m, &cfg).is_err());
        let s = InterrogationSchedule {
            pulse_period: 100e-6,
            ..s
        };
        s.validate(&m, &cfg).unwrap();
        assert!((s.f_sample() - 10e3).abs() < 1e-9);
    }

    #[test]
    fn capacity_grows_with_depth() {
        let m = AcousticMedium::oil();
        let cfg = MoteConfig::default();
        let f = F_MAIN / 32.0;
        assert_eq!(code_capacity(9e-3, &m, f, &cfg), 1);
        assert_eq!(code_capacity(75e-3, &m, f, &cfg), 8);
        let mut prev = 0;
        for mm in 9..120 {
            let n = code_capacity(mm as f64 * 1e-3, &m, f, &cfg);
            assert!(n >= prev && n.is_power_of_two());
            prev = n;
        }
    }
}
