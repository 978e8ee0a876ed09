use std::io::Write as _;
use std::path::Path;

use serde::Serialize;

use super::config::{LinkScenario, MoteSetup};
use crate::channel::{
    beam_gain, echo_envelope, propagate, superpose, BeamGain, CarrierNoiseSource, EnvelopeScale,
};
use crate::error::{Error, Result};
use crate::interrogator::{
    decode_cdm, decode_joint, decode_window, demodulate_carrier, reconstruct, write_pulse_csv,
    ActiveCode, Calibration, DecodeMethod, DecodeWindow, DecodedSample, DemodMode, DropReason,
    PulseRecord, SampleStream, SubcarrierCode,
};
use crate::metrics::{
    noise_density, psd, static_linearity, tone_amplitudes, tone_metrics, write_metrics_csv,
    write_psd_csv, MetricsReport, ToneMetrics, Window, MIN_PSD_SAMPLES,
};
use crate::mote::{
    afe_process, decode_weights, echo_modulate, gm_convert, lna_pole, power_timeline,
    static_transfer, AfeNoise, MoteState, TimelineEvents,
};
use crate::noise::FlickerProcess;
use crate::rng::{Stream, Substream};
use crate::waveform::Waveform;

/// DC inputs used to calibrate each channel, V.
pub const PILOT_LEVEL: f64 = 1e-3;
/// RF samples per carrier cycle when the carrier path is simulated.
const RF_OVERSAMPLE: usize = 16;

/// Per-mote results of one run.
#[derive(Debug, Clone, Serialize)]
pub struct MoteRun {
    pub name: String,
    pub code_id: usize,
    pub beam: BeamGain,
    pub calibration: Calibration,
    /// Averaging time per echo, s.
    pub t_int: f64,
    #[serde(skip)]
    pub records: Vec<PulseRecord>,
    #[serde(skip)]
    pub stream: SampleStream,
    /// Input sampled at the centre of every decode window, V.
    #[serde(skip)]
    pub reference: Vec<f64>,
    pub metrics: MetricsReport,
    #[serde(skip)]
    pub tone: Option<ToneMetrics>,
    /// Leakage of each other mote's tone into this stream, relative to
    /// that tone in its own stream, dB.
    pub crosstalk_db: Vec<(String, f64)>,
    /// Pearson correlation of the stream with the reference input.
    pub input_correlation: Option<f64>,
    pub saturated_samples: usize,
    pub clipped_samples: usize,
    pub dropped: usize,
}

/// Everything a run produces.
#[derive(Debug, Clone, Serialize)]
pub struct RunArtifacts {
    pub scenario: String,
    pub seed: u64,
    pub f_sample: f64,
    pub pulse_duration: f64,
    pub envelope_scale: EnvelopeScale,
    pub motes: Vec<MoteRun>,
}

impl RunArtifacts {
    pub fn mote(&self, name: &str) -> Option<&MoteRun> {
        self.motes.iter().find(|m| m.name == name)
    }
}

/// Static quantities of one mote for the whole run.
struct MotePlan<'a> {
    setup: &'a MoteSetup,
    index: usize,
    code: SubcarrierCode,
    beam: BeamGain,
    /// Echo amplitude before the uplink path.
    amplitude: f64,
    /// One-way delay to the mote, s.
    delay: f64,
}

/// Noise generators of one mote, advanced pulse by pulse.
struct MoteNoise {
    white_sigma: f64,
    white: Substream,
    flicker: Option<FlickerProcess>,
    autozero_sigma: f64,
    autozero: Substream,
}

struct Echo {
    rx: Waveform,
    events: TimelineEvents,
    saturated: usize,
    clipped: usize,
}

struct Runner<'a> {
    s: &'a LinkScenario,
    fs: f64,
    pulse_duration: f64,
    unit: f64,
    align: f64,
    plans: Vec<MotePlan<'a>>,
}

impl<'a> Runner<'a> {
    fn new(s: &'a LinkScenario) -> Result<Self> {
        let geometry = s.geometry()?;
        let (_, codes) = s.decode_codes()?;
        let plans = s
            .motes
            .iter()
            .zip(codes)
            .enumerate()
            .map(|(i, (m, code))| {
                let beam = beam_gain(&geometry, i, s.f_main, &s.medium, &s.beam)?;
                let down = s.medium.amplitude_factor(m.position.z, s.f_main);
                Ok(MotePlan {
                    setup: m,
                    index: i,
                    code,
                    amplitude: beam.pressure_gain * beam.pressure_gain * down,
                    beam,
                    delay: s.medium.time_of_flight(m.position.z),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Runner {
            s,
            fs: s.f_main / 2.0,
            pulse_duration: s.resolved_pulse_duration()?,
            unit: s.snap_unit()?,
            align: s.window_alignment()?,
            plans,
        })
    }

    fn launch(&self, k: usize) -> f64 {
        k as f64 * self.s.pulse_period
    }

    /// Echo of one mote for the pulse launched at `t_launch`, in
    /// received time.
    fn echo(
        &self,
        p: &MotePlan,
        t_launch: f64,
        input: &dyn Fn(f64) -> f64,
        noise: Option<&mut MoteNoise>,
    ) -> Result<Echo> {
        let cfg = &p.setup.config;
        let events = power_timeline(t_launch + p.delay, self.pulse_duration, cfg)?;
        let n = ((events.modulation_window.1 - events.amp_ready) * self.fs + 1e-9).floor() as usize;
        let v_in = Waveform::from_fn(n, self.fs, events.amp_ready, input);
        let v_s = p.beam.harvested_amplitude;
        let mut afe_noise = AfeNoise::default();
        let mut autozero = 0.0;
        if let Some(nz) = noise {
            if nz.white_sigma > 0.0 {
                let mut w = Waveform::zeros(n, self.fs, events.amp_ready);
                nz.white.fill_gaussian(&mut w.samples, nz.white_sigma);
                afe_noise.input = Some(w);
            }
            if let Some(f) = &mut nz.flicker {
                afe_noise.post_chop = Some(Waveform::from_fn(n, self.fs, events.amp_ready, |t| {
                    f.sample(t)
                }));
            }
            if nz.autozero_sigma > 0.0 {
                autozero = nz.autozero_sigma * nz.autozero.gaussian();
            }
        }
        let state = MoteState::at_amp_ready(&events, v_s, cfg, autozero);
        let lna = afe_process(&v_in, cfg, &state, &p.code, &afe_noise)?;
        let trace = echo_modulate(v_s, &gm_convert(&lna.out, cfg), &events, cfg, cfg.code_id)?;
        let env = echo_envelope(&trace, p.amplitude, p.beam.max_modulation_depth);
        let rx = propagate(&env, p.setup.position.z, &self.s.medium, self.s.f_main)?;
        Ok(Echo {
            rx,
            events,
            saturated: lna.saturated,
            clipped: trace.clipped,
        })
    }

    fn window(
        &self,
        p: &MotePlan,
        events: &TimelineEvents,
    ) -> std::result::Result<DecodeWindow, DropReason> {
        decode_window(
            events.amp_ready + p.delay,
            events.modulation_window.1 + p.delay,
            self.unit,
            self.align,
            &self.s.decode,
        )
    }

    /// Received envelope after the interrogator's demodulator.
    fn receive(&self, env: Waveform) -> Result<Waveform> {
        match self.s.demod {
            DemodMode::Envelope => Ok(env),
            mode @ DemodMode::Carrier { .. } => {
                let up = RF_OVERSAMPLE * 2;
                let rate = env.sample_rate * up as f64;
                let w = 2.0 * std::f64::consts::PI * self.s.f_main;
                let rf = Waveform::from_fn(env.len() * up, rate, env.t0, |t| {
                    env.sample_at(t) * (w * t).cos()
                });
                let base = demodulate_carrier(&rf, self.s.f_main, mode)?;
                let samples = base.samples.iter().step_by(up).copied().collect();
                Ok(Waveform::new(samples, env.sample_rate, env.t0))
            }
        }
    }

    /// Received start time of every powered mote's code for the pulse
    /// launched at `t_launch`.
    fn code_starts(&self, t_launch: f64) -> Result<Vec<Option<f64>>> {
        self.plans
            .iter()
            .map(|p| {
                let cfg = &p.setup.config;
                if p.beam.harvested_amplitude < cfg.v_s_min {
                    return Ok(None);
                }
                let ev = power_timeline(t_launch + p.delay, self.pulse_duration, cfg)?;
                Ok(Some(ev.amp_ready + p.delay))
            })
            .collect()
    }

    fn decode(
        &self,
        rx: &Waveform,
        p: &MotePlan,
        win: &DecodeWindow,
        starts: &[Option<f64>],
    ) -> std::result::Result<DecodedSample, DropReason> {
        match self.s.decode.method {
            DecodeMethod::Average => decode_cdm(rx, &p.code, win),
            DecodeMethod::Joint => {
                let mut own = 0;
                let mut active = Vec::with_capacity(self.plans.len());
                for (q, start) in self.plans.iter().zip(starts) {
                    let Some(code_start) = *start else { continue };
                    if q.index == p.index {
                        own = active.len();
                    }
                    active.push(ActiveCode {
                        code: &q.code,
                        code_start,
                        pole: Some(lna_pole(&q.setup.config, self.fs)),
                    });
                }
                decode_joint(rx, &active, own, win)
            }
        }
    }

    /// Noiseless single-mote decode of a DC input, used for calibration.
    fn pilot(&self, p: &MotePlan, level: f64) -> Result<f64> {
        let echo = self.echo(p, 0.0, &|_| level, None)?;
        let rx = self.receive(echo.rx)?;
        let win = self
            .window(p, &echo.events)
            .map_err(|d| Error::Degenerate(format!("{}: {d}", p.setup.name)))?;
        let starts = self.code_starts(0.0)?;
        self.decode(&rx, p, &win, &starts)
            .map(|d| d.raw)
            .map_err(|d| Error::Degenerate(format!("{}: pilot {d}", p.setup.name)))
    }

    fn calibrate(&self, p: &MotePlan) -> Result<Calibration> {
        if p.beam.harvested_amplitude < p.setup.config.v_s_min {
            return Err(Error::InfeasibleLink(format!(
                "{} harvests {:.3} V, below its {:.3} V minimum",
                p.setup.name, p.beam.harvested_amplitude, p.setup.config.v_s_min
            )));
        }
        Calibration::from_pilots(
            (-PILOT_LEVEL, self.pilot(p, -PILOT_LEVEL)?),
            (PILOT_LEVEL, self.pilot(p, PILOT_LEVEL)?),
        )
    }

    fn noise_for(&self, p: &MotePlan) -> Result<MoteNoise> {
        let chip = &self.s.noise.chip;
        let cfg = &p.setup.config;
        let seed = self.s.seed;
        let i = p.index;
        let ev = power_timeline(0.0, self.pulse_duration, cfg)?;
        let win = self.window(p, &ev).ok();
        let white_sigma = match (chip.enabled, win) {
            (true, Some(w)) => {
                let start = ((w.start - w.code_start) * self.fs - 1e-6).ceil() as usize;
                let len = (w.len * self.fs).round() as usize;
                decode_weights(cfg, &p.code, self.fs, start, len)
                    .input_sigma(chip.white_density, self.s.f_sample())
            }
            _ => 0.0,
        };
        Ok(MoteNoise {
            white_sigma,
            white: Substream::new(seed, Stream::ChipWhite(i)),
            flicker: (chip.enabled && chip.white_density > 0.0 && chip.flicker_corner > 0.0).then(
                || {
                    FlickerProcess::new(
                        chip.white_density,
                        chip.flicker_corner,
                        Substream::new(seed, Stream::ChipFlicker(i)),
                    )
                },
            ),
            autozero_sigma: if cfg.autozero_noise {
                MoteState::autozero_sigma(cfg)
            } else {
                0.0
            },
            autozero: Substream::new(seed, Stream::Autozero(i)),
        })
    }
}

/// Runs a scenario end to end.
///
/// Every pulse powers each mote after its one-way delay; the motes'
/// echoes are superposed at the transducer, carrier noise is added, the
/// envelope is demodulated and each mote's code is decoded and calibrated
/// against noiseless ±1 mV pilots.
pub fn run(s: &LinkScenario) -> Result<RunArtifacts> {
    let r = Runner::new(s)?;
    let cals = r
        .plans
        .iter()
        .map(|p| r.calibrate(p))
        .collect::<Result<Vec<_>>>()?;
    let ref_window = {
        let ev = power_timeline(0.0, r.pulse_duration, &s.motes[0].config)?;
        r.window(&r.plans[0], &ev).map(|w| w.len).unwrap_or(0.0)
    };
    let scale = EnvelopeScale {
        gain: cals[0].gain,
        t_int: ref_window,
        f_sample: s.f_sample(),
    };
    let mut carrier = CarrierNoiseSource::new(&s.noise.carrier, &scale, s.seed);
    let mut noises = r
        .plans
        .iter()
        .map(|p| r.noise_for(p))
        .collect::<Result<Vec<_>>>()?;
    let n_motes = r.plans.len();
    let mut records: Vec<Vec<PulseRecord>> = vec![Vec::with_capacity(s.n_pulses); n_motes];
    let mut reference: Vec<Vec<f64>> = vec![Vec::with_capacity(s.n_pulses); n_motes];
    let mut saturated = vec![0usize; n_motes];
    let mut clipped = vec![0usize; n_motes];
    for k in 0..s.n_pulses {
        let t_launch = r.launch(k);
        let pulse = |e: Error| Error::Pulse {
            index: k,
            source: Box::new(e),
        };
        let mut echoes = Vec::with_capacity(n_motes);
        for (p, nz) in r.plans.iter().zip(noises.iter_mut()) {
            let stim = &p.setup.stimulus;
            let input = |t: f64| stim.value_at(t);
            echoes.push(r.echo(p, t_launch, &input, Some(nz)).map_err(pulse)?);
        }
        let parts: Vec<(Waveform, f64)> = echoes.iter().map(|e| (e.rx.clone(), 0.0)).collect();
        let mut env = superpose(&parts).map_err(pulse)?;
        carrier.apply(&mut env);
        let rx = r.receive(env).map_err(pulse)?;
        let starts = r.code_starts(t_launch).map_err(pulse)?;
        for (i, (p, e)) in r.plans.iter().zip(&echoes).enumerate() {
            saturated[i] += e.saturated;
            clipped[i] += e.clipped;
            let powered = p.beam.harvested_amplitude >= p.setup.config.v_s_min;
            let win = r.window(p, &e.events);
            let decoded = if !powered {
                Err(DropReason::Unpowered)
            } else {
                win.clone().and_then(|w| r.decode(&rx, p, &w, &starts))
            };
            let len_us = win.as_ref().map_or(0.0, |w| w.len * 1e6);
            let (raw, cal, snr, reason) = match decoded {
                Ok(d) => {
                    let v = cals[i].apply(d.raw);
                    (Some(d.raw), Some(v * 1e6), Some(d.echo_snr_db()), None)
                }
                Err(reason) => (None, None, None, Some(reason.to_string())),
            };
            if let Ok(w) = &win {
                reference[i].push(p.setup.stimulus.value_at(w.start + w.len / 2.0 - p.delay));
            } else {
                reference[i].push(f64::NAN);
            }
            records[i].push(PulseRecord {
                pulse_index: k,
                t_start: t_launch,
                truncated_len_us: len_us,
                code_id: p.setup.config.code_id,
                raw_sample: raw,
                calibrated_uv: cal,
                echo_snr_db: snr,
                drop_reason: reason,
            });
        }
    }
    let streams = records
        .iter()
        .map(|recs| reconstruct(recs, s.f_sample(), true))
        .collect::<Result<Vec<_>>>()?;
    let own_tones: Vec<Option<f64>> = s
        .motes
        .iter()
        .map(|m| m.stimulus.tone_frequency())
        .collect();
    let mut motes = Vec::with_capacity(n_motes);
    for (i, p) in r.plans.iter().enumerate() {
        let stream = &streams[i];
        let mut report = MetricsReport::default();
        let tone = match own_tones[i] {
            Some(f) => {
                let t = tone_metrics(&stream.samples, stream.f_sample, f)?;
                report = report.with_tone(&t);
                Some(t)
            }
            None => None,
        };
        if stream.len() >= MIN_PSD_SAMPLES {
            let est = noise_density(&stream.samples, stream.f_sample, (0.0, stream.bandwidth()))?;
            report.noise_density = Some(est.density);
            report.noise_rms = Some(est.rms);
            report.psd = Some(psd(&stream.samples, stream.f_sample, Window::Hann)?);
        }
        let lin = static_sweep(&p.setup.config, &p.code, p.beam.harvested_amplitude, r.fs)?;
        report.gain_db = Some(lin.0);
        report.max_static_nonlinearity_pct = Some(lin.1);
        let crosstalk_db = crosstalk(i, &s.motes, &streams, &own_tones)?;
        motes.push(MoteRun {
            name: p.setup.name.clone(),
            code_id: p.setup.config.code_id,
            beam: p.beam,
            calibration: cals[i],
            t_int: records[i]
                .iter()
                .find(|r| !r.dropped())
                .map_or(0.0, |r| r.truncated_len_us * 1e-6),
            dropped: records[i].iter().filter(|r| r.dropped()).count(),
            input_correlation: correlation(&stream.samples, &reference[i]),
            records: std::mem::take(&mut records[i]),
            stream: stream.clone(),
            reference: std::mem::take(&mut reference[i]),
            metrics: report,
            tone,
            crosstalk_db,
            saturated_samples: saturated[i],
            clipped_samples: clipped[i],
        });
    }
    Ok(RunArtifacts {
        scenario: s.name.clone(),
        seed: s.seed,
        f_sample: s.f_sample(),
        pulse_duration: r.pulse_duration,
        envelope_scale: scale,
        motes,
    })
}

/// Gain (dB) and static nonlinearity (%) over the specified input range.
fn static_sweep(
    cfg: &crate::mote::MoteConfig,
    code: &SubcarrierCode,
    v_s: f64,
    fs: f64,
) -> Result<(f64, f64)> {
    let range = cfg.input_linear_range;
    let inputs: Vec<f64> = (-10..=10).map(|i| range * i as f64 / 10.0).collect();
    let pts = static_transfer(cfg, code, v_s, fs, &inputs)?;
    let fit = static_linearity(
        &pts.iter()
            .map(|p| (p.v_in, p.delta_v_pz))
            .collect::<Vec<_>>(),
    )?;
    Ok((fit.gain_db, fit.max_dev_pct))
}

fn crosstalk(
    i: usize,
    motes: &[MoteSetup],
    streams: &[SampleStream],
    tones: &[Option<f64>],
) -> Result<Vec<(String, f64)>> {
    let mut out = Vec::new();
    for (j, other) in motes.iter().enumerate() {
        let Some(fj) = tones[j] else { continue };
        if j == i || tones[i] == Some(fj) {
            continue;
        }
        let mut freqs = vec![fj];
        freqs.extend(tones[i]);
        let leak = tone_amplitudes(&streams[i].samples, streams[i].f_sample, &freqs)?[0];
        let mut own = vec![fj];
        own.extend(tones[i]);
        let ref_amp = tone_amplitudes(&streams[j].samples, streams[j].f_sample, &own)?[0];
        out.push((other.name.clone(), 20.0 * (leak / ref_amp).log10()));
    }
    Ok(out)
}

fn correlation(a: &[f64], b: &[f64]) -> Option<f64> {
    let pairs: Vec<(f64, f64)> = a
        .iter()
        .zip(b)
        .filter(|(_, y)| y.is_finite())
        .map(|(x, y)| (*x, *y))
        .collect();
    let n = pairs.len() as f64;
    if n < 2.0 {
        return None;
    }
    let ma = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let mb = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in &pairs {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    (saa > 0.0 && sbb > 0.0).then(|| sab / (saa * sbb).sqrt())
}

/// Writes per-mote pulse, stream and PSD tables plus `metrics.csv` and
/// `summary.txt` into `dir`.
pub fn write_artifacts(a: &RunArtifacts, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let file = |name: String| -> Result<std::io::BufWriter<std::fs::File>> {
        Ok(std::io::BufWriter::new(std::fs::File::create(
            dir.join(name),
        )?))
    };
    let mut rows = Vec::new();
    let mut summary = format!(
        "scenario = {}\nseed = {}\nf_sample_hz = {}\npulse_duration_s = {:e}\n",
        a.scenario, a.seed, a.f_sample, a.pulse_duration
    );
    for m in &a.motes {
        write_pulse_csv(file(format!("{}_pulses.csv", m.name))?, &m.records)?;
        let mut w = csv::Writer::from_writer(file(format!("{}_stream.csv", m.name))?);
        w.write_record(["pulse_index", "time_s", "volts"])
            .map_err(|e| Error::Io(e.to_string()))?;
        for (&idx, &v) in m.stream.pulse_index.iter().zip(&m.stream.samples) {
            w.write_record([
                idx.to_string(),
                (idx as f64 / a.f_sample).to_string(),
                v.to_string(),
            ])
            .map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush()?;
        if let Some(p) = &m.metrics.psd {
            write_psd_csv(file(format!("{}_psd.csv", m.name))?, p)?;
        }
        rows.push((m.name.clone(), m.metrics.clone()));
        summary.push_str(&format!("\n[{}]\n", m.name));
        summary.push_str(&format!("code_id = {}\n", m.code_id));
        summary.push_str(&format!(
            "harvested_amplitude_v = {:.6e}\n",
            m.beam.harvested_amplitude
        ));
        summary.push_str(&format!(
            "max_modulation_depth = {:.6e}\n",
            m.beam.max_modulation_depth
        ));
        summary.push_str(&format!("t_int_s = {:.6e}\n", m.t_int));
        summary.push_str(&format!("calibration_gain = {:.6e}\n", m.calibration.gain));
        summary.push_str(&format!("dropped = {}\n", m.dropped));
        summary.push_str(&format!("saturated_samples = {}\n", m.saturated_samples));
        summary.push_str(&format!("clipped_samples = {}\n", m.clipped_samples));
        if let Some(c) = m.input_correlation {
            summary.push_str(&format!("input_correlation = {c:.6}\n"));
        }
        for (other, db) in &m.crosstalk_db {
            summary.push_str(&format!("crosstalk_from_{other}_db = {db:.3}\n"));
        }
        summary.push_str(&m.metrics.to_kv());
    }
    write_metrics_csv(file("metrics.csv".into())?, &rows)?;
    let mut f = file("summary.txt".into())?;
    f.write_all(summary.as_bytes())?;
    f.flush()?;
    Ok(())
}
