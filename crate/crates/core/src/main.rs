use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dmgradar::airlink::db_to_lin;
use dmgradar::bench::config::{ExperimentKind, ExperimentSpec, VelocityMode};
use dmgradar::bench::{manifest_toml, resolve_workers, run_with_workers};
use dmgradar::error::{Error, Result};
use dmgradar::frame::PREAMBLE_LEN;
use dmgradar::radar::crlb::{crlb_range, crlb_velocity_exact_contiguous, crlb_velocity_multi, crlb_velocity_single};
use dmgradar::radar::detect::StatSource;
use dmgradar::radar::estimate::SINGLE_FRAME_P;

#[derive(Parser)]
#[command(name = "dmgradar", version, about = "802.11ad preamble radar link-level experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML experiment config; missing fields take the experiment defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV output path; a run manifest is written next to it. Stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads (overrides DMGRADAR_WORKERS and the config).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args, Clone)]
struct ScnrArg {
    /// Comma-separated SCNR grid in dB.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    scnr: Option<Vec<f64>>,
}

#[derive(Subcommand)]
enum Command {
    /// Ambiguity function of a Golay complementary pair.
    Ambiguity {
        #[command(flatten)]
        common: Common,
        /// Length of each sequence of the pair.
        #[arg(long)]
        length: Option<usize>,
    },
    /// Detection probability versus SCNR.
    Detect {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        scnr: ScnrArg,
        #[arg(long)]
        pfa: Option<f64>,
        #[arg(long, value_enum)]
        stat: Option<StatArg>,
    },
    /// Range MSE versus SCNR.
    Range {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        scnr: ScnrArg,
    },
    /// Velocity MSE versus SCNR.
    Velocity {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        scnr: ScnrArg,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Frames per CPI.
        #[arg(long = "M")]
        m: Option<usize>,
        /// Frame length in symbols.
        #[arg(long = "K")]
        k: Option<usize>,
    },
    /// Data rate and velocity accuracy versus CPI and frame count.
    Tradeoff {
        #[command(flatten)]
        common: Common,
        /// Comma-separated CPI durations (s).
        #[arg(long, value_delimiter = ',')]
        cpi: Option<Vec<f64>>,
        /// Comma-separated frame counts.
        #[arg(long, value_delimiter = ',')]
        frames: Option<Vec<usize>>,
        /// Radar SCNR (dB).
        #[arg(long, allow_hyphen_values = true)]
        scnr: Option<f64>,
    },
    /// Communication SNR and radar SCNR versus distance.
    Linkbudget {
        #[command(flatten)]
        common: Common,
        /// Comma-separated path-loss exponents.
        #[arg(long, value_delimiter = ',')]
        pl: Option<Vec<f64>>,
    },
    /// Delay-Doppler map of the multi-target scenario.
    Ddmap {
        #[command(flatten)]
        common: Common,
        /// Frames per CPI.
        #[arg(long = "M")]
        m: Option<usize>,
        #[arg(long)]
        zero_pad: Option<usize>,
        /// Writes the map magnitude (dB) around the detections to this CSV.
        #[arg(long)]
        map_csv: Option<PathBuf>,
    },
    /// Cramér-Rao bounds; with `--eq` prints a single bound.
    Crlb {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        eq: Option<EqArg>,
        /// SCNR in dB (comma-separated grid without `--eq`).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        scnr: Option<Vec<f64>>,
        /// Training length in symbols.
        #[arg(long = "P")]
        p: Option<usize>,
        #[arg(long = "M")]
        m: Option<usize>,
        #[arg(long = "K")]
        k: Option<usize>,
        /// Bandwidth of the range bound (Hz).
        #[arg(long = "W")]
        w: Option<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum StatArg {
    Preamble,
    Cef,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    MultiFrame,
    SingleFrame,
}

#[derive(Clone, Copy, ValueEnum)]
enum EqArg {
    Range,
    Single,
    Multi,
    Exact,
}

fn load_spec(common: &Common, kind: ExperimentKind) -> Result<ExperimentSpec> {
    let mut spec = match &common.config {
        Some(p) => ExperimentSpec::load(p, Some(kind))?,
        None => ExperimentSpec::for_kind(kind),
    };
    if let Some(s) = common.seed {
        spec.seed = s;
    }
    if let Some(t) = common.trials {
        spec.trials = t;
    }
    Ok(spec)
}

fn set_scnr(spec: &mut ExperimentSpec, scnr: &ScnrArg) {
    if let Some(v) = &scnr.scnr {
        spec.sweep.scnr_db = v.clone();
    }
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.toml");
    PathBuf::from(s)
}

fn execute(common: &Common, spec: ExperimentSpec) -> Result<()> {
    spec.validate()?;
    let workers = resolve_workers(common.workers, &spec)?;
    let table = run_with_workers(&spec, workers)?;
    match &common.out {
        Some(path) => {
            table.write_csv(File::create(path)?)?;
            std::fs::write(manifest_path(path), manifest_toml(&spec, path, &table)?)?;
        }
        None => {
            let mut out = io::stdout().lock();
            table.write_csv(&mut out)?;
            out.flush()?;
        }
    }
    Ok(())
}

fn print_bound(
    eq: EqArg,
    spec: &ExperimentSpec,
    scnr: &[f64],
    p: Option<usize>,
    m: Option<usize>,
    k: Option<usize>,
    w: Option<f64>,
) -> Result<()> {
    let sc = &spec.scenario;
    let &[z] = scnr else {
        return Err(Error::Config("`--eq` takes a single `--scnr` value".into()));
    };
    let zeta = db_to_lin(z);
    let m = m.unwrap_or(sc.m);
    let k = k.unwrap_or(sc.k);
    let (value, unit) = match eq {
        EqArg::Range => (crlb_range(zeta, p.unwrap_or(SINGLE_FRAME_P), w.unwrap_or(sc.crlb_bandwidth))?, "m^2"),
        EqArg::Single => (crlb_velocity_single(zeta, p.unwrap_or(SINGLE_FRAME_P), sc.ts(), sc.wavelength)?, "m^2/s^2"),
        EqArg::Multi => {
            (crlb_velocity_multi(zeta, p.unwrap_or(PREAMBLE_LEN), m, k, sc.ts(), sc.wavelength)?, "m^2/s^2")
        }
        EqArg::Exact => {
            (crlb_velocity_exact_contiguous(zeta, p.unwrap_or(PREAMBLE_LEN), m, k, sc.ts(), sc.wavelength)?, "m^2/s^2")
        }
    };
    println!("{value:.2e} {unit}");
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Command::Ambiguity { common, length } => {
            let mut spec = load_spec(&common, ExperimentKind::Ambiguity)?;
            if let Some(n) = length {
                spec.ambiguity.length = n;
            }
            execute(&common, spec)
        }
        Command::Detect { common, scnr, pfa, stat } => {
            let mut spec = load_spec(&common, ExperimentKind::Detect)?;
            set_scnr(&mut spec, &scnr);
            if let Some(p) = pfa {
                spec.detect.pfa = p;
            }
            if let Some(s) = stat {
                spec.detect.stat = match s {
                    StatArg::Preamble => StatSource::Preamble,
                    StatArg::Cef => StatSource::CefPeak,
                };
            }
            execute(&common, spec)
        }
        Command::Range { common, scnr } => {
            let mut spec = load_spec(&common, ExperimentKind::Range)?;
            set_scnr(&mut spec, &scnr);
            execute(&common, spec)
        }
        Command::Velocity { common, scnr, mode, m, k } => {
            let mut spec = load_spec(&common, ExperimentKind::Velocity)?;
            set_scnr(&mut spec, &scnr);
            if let Some(mode) = mode {
                spec.velocity.mode = match mode {
                    ModeArg::MultiFrame => VelocityMode::MultiFrame,
                    ModeArg::SingleFrame => VelocityMode::SingleFrame,
                };
            }
            if let Some(m) = m {
                spec.scenario.m = m;
            }
            if let Some(k) = k {
                spec.scenario.k = k;
            }
            execute(&common, spec)
        }
        Command::Tradeoff { common, cpi, frames, scnr } => {
            let mut spec = load_spec(&common, ExperimentKind::Tradeoff)?;
            if let Some(c) = cpi {
                spec.sweep.cpi = c;
            }
            if let Some(f) = frames {
                spec.sweep.frames = f;
            }
            if let Some(z) = scnr {
                spec.velocity.tradeoff_scnr_db = z;
            }
            execute(&common, spec)
        }
        Command::Linkbudget { common, pl } => {
            let mut spec = load_spec(&common, ExperimentKind::Linkbudget)?;
            if let Some(pl) = pl {
                spec.sweep.pl_exponents = pl;
            }
            execute(&common, spec)
        }
        Command::Ddmap { common, m, zero_pad, map_csv } => {
            let mut spec = load_spec(&common, ExperimentKind::Ddmap)?;
            if let Some(m) = m {
                spec.scenario.m = m;
            }
            if let Some(z) = zero_pad {
                spec.ddmap.zero_pad = z;
            }
            if map_csv.is_some() {
                spec.ddmap.map_csv = map_csv;
            }
            execute(&common, spec)
        }
        Command::Crlb { common, eq, scnr, p, m, k, w } => {
            let mut spec = load_spec(&common, ExperimentKind::Crlb)?;
            if let Some(eq) = eq {
                return print_bound(eq, &spec, scnr.as_deref().unwrap_or(&[0.0]), p, m, k, w);
            }
            if let Some(v) = scnr {
                spec.sweep.scnr_db = v;
            }
            if let Some(m) = m {
                spec.scenario.m = m;
            }
            if let Some(k) = k {
                spec.scenario.k = k;
            }
            if let Some(w) = w {
                spec.scenario.crlb_bandwidth = w;
            }
            execute(&common, spec)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dmgradar: {e}");
            ExitCode::FAILURE
        }
    }
}
