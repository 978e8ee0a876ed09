use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use echomote::interrogator::cross_correlation;
use echomote::scenario::{
    load_scenario, parse_grid, report_link_budget, run, sweep, write_artifacts, write_sweep_csv,
    LinkScenario, SweepAxis,
};
use echomote::{Error, Result};

#[derive(Parser)]
#[command(
    name = "echomote",
    version,
    about = "Ultrasonic backscatter mote link simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Text,
}

#[derive(clap::Args)]
struct Common {
    /// Scenario file.
    #[arg(long)]
    scenario: PathBuf,
    /// Replaces the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn load(&self) -> Result<LinkScenario> {
        let mut s = load_scenario(&self.scenario)?;
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        Ok(s)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Loads and checks a scenario.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Runs a scenario and writes its CSV files and summary.
    Run {
        #[command(flatten)]
        common: Common,
        /// Output directory; defaults to the scenario's `output_dir`, then `out/<name>`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeats a run over a grid of one parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_axis)]
        axis: SweepAxis,
        /// `start:stop:step` with units, e.g. `35mm:80mm:5mm`.
        #[arg(long, default_value = "", allow_hyphen_values = true)]
        grid: String,
        /// Worker threads; all cores by default.
        #[arg(long)]
        jobs: Option<usize>,
        /// Writes `sweep_<axis>.csv` here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Prints the timing and uplink rate budget.
    Budget {
        #[command(flatten)]
        common: Common,
        /// Bits per echo for the digital-modulation comparison.
        #[arg(long, default_value_t = 8)]
        bits: u32,
    },
    /// Prints the subcarrier codes a scenario uses.
    Codebook {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
}

fn parse_axis(s: &str) -> std::result::Result<SweepAxis, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn output_dir(s: &LinkScenario, out: Option<PathBuf>) -> PathBuf {
    out.or_else(|| s.output_dir.clone())
        .unwrap_or_else(|| Path::new("out").join(&s.name))
}

fn execute(cli: Cli) -> Result<()> {
    let mut stdout = Stdout;
    match cli.command {
        Command::Validate { common } => {
            let s = common.load()?;
            let period = s.pulse_period;
            writeln!(
                stdout,
                "{}: ok ({} mote{}, {:.0} us pulses every {:.2} us)",
                common.scenario.display(),
                s.motes.len(),
                if s.motes.len() == 1 { "" } else { "s" },
                s.resolved_pulse_duration()? * 1e6,
                period * 1e6
            )?;
        }
        Command::Run { common, out } => {
            let s = common.load()?;
            let a = run(&s)?;
            let dir = output_dir(&s, out);
            write_artifacts(&a, &dir)?;
            write!(
                stdout,
                "{}",
                std::fs::read_to_string(dir.join("summary.txt"))?
            )?;
            log::info!("wrote {}", dir.display());
        }
        Command::Sweep {
            common,
            axis,
            grid,
            jobs,
            out,
            format,
        } => {
            let s = common.load()?;
            let grid = parse_grid(&grid, axis.dim())?;
            let rows = sweep(&s, axis, &grid, jobs)?;
            match (out, format) {
                (Some(dir), _) => {
                    std::fs::create_dir_all(&dir)?;
                    let file =
                        std::fs::File::create(dir.join(format!("sweep_{}.csv", axis.name())))?;
                    write_sweep_csv(file, &rows)?;
                }
                (None, Format::Csv) => write_sweep_csv(&mut stdout, &rows)?,
                (None, Format::Text) => {
                    let w = &mut stdout;
                    for r in &rows {
                        writeln!(
                            w,
                            "{} = {:.4e}  {:<8} {:<7} sndr {:>7}  sfdr {:>7}  {}",
                            r.axis,
                            r.value,
                            r.mote,
                            r.status,
                            fmt_db(r.sndr_db),
                            fmt_db(r.sfdr_db),
                            r.error
                        )?;
                    }
                }
            }
        }
        Command::Budget { common, bits } => {
            let s = common.load()?;
            write!(stdout, "{}", report_link_budget(&s, bits)?)?;
        }
        Command::Codebook { common, format } => {
            let s = common.load()?;
            let (book, codes) = s.decode_codes()?;
            let w = &mut stdout;
            if matches!(format, Format::Csv) {
                writeln!(w, "code_id,kind,frequency_hz,period_s,chips")?;
            }
            for c in &codes {
                let chips: String = c
                    .chips
                    .iter()
                    .map(|&x| if x > 0 { '+' } else { '-' })
                    .collect();
                match format {
                    Format::Csv => writeln!(
                        w,
                        "{},{:?},{},{},{}",
                        c.code_id,
                        c.kind,
                        c.frequency(),
                        c.period(),
                        chips
                    )?,
                    Format::Text => writeln!(
                        w,
                        "code {:<2} {:<9} {:>9.1} Hz  {chips}",
                        c.code_id,
                        format!("{:?}", c.kind),
                        c.frequency()
                    )?,
                }
            }
            if matches!(format, Format::Text) {
                let worst = codes
                    .iter()
                    .enumerate()
                    .flat_map(|(i, a)| {
                        codes[i + 1..]
                            .iter()
                            .map(move |b| cross_correlation(a, b).abs())
                    })
                    .fold(0.0, f64::max);
                writeln!(
                    w,
                    "base divider {}, worst cross-correlation {worst:.3e}",
                    book.base_divider
                )?;
            }
        }
    }
    Ok(())
}

/// Standard output that treats a closed pipe (`| head`) as success.
struct Stdout;

impl Write for Stdout {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        match io::stdout().write(buf) {
            Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(buf.len()),
            r => r,
        }
    }

    fn flush(&mut self) -> io::Result<()> {
        match io::stdout().flush() {
            Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
            r => r,
        }
    }
}

fn fmt_db(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.2}"))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 3 })
        }
    }
}
