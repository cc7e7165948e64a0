use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use dcac_core::config::{expand_sweep, ConfigFile};
use dcac_core::sim::diagnostics::{fill_remainder, linear_ce_response};
use dcac_core::verify::{run_suite, Hooks, Level};
use dcac_core::{run, ConfigError, SimConfig, SimError, SimLog};

const EXIT_CONFIG: u8 = 2;
const EXIT_ABORTED: u8 = 3;
const EXIT_VERIFY: u8 = 4;

#[derive(Parser)]
#[command(name = "dcac", version, about = "Differential-cascaded adaptive control simulator for a planar two-link arm")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one configuration and write the log as CSV.
    Run {
        #[command(flatten)]
        source: Source,
        /// Output CSV (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also fill the remainder columns with d^l s/dt^l.
        #[arg(long)]
        remainder: bool,
    },
    /// Run the property suite and print one PROPERTY line per check.
    Verify {
        #[arg(long, value_enum, default_value_t = LevelArg::Fast)]
        level: LevelArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Compare the nonlinear run with its certainty-equivalence linear model.
    Compare {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every point of the config's [sweep] grid.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Output directory for the per-point CSVs and summary.csv.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        t_end: Option<f64>,
        /// Concurrent runs (defaults to the number of CPUs).
        #[arg(long)]
        jobs: Option<usize>,
    },
}

#[derive(Args)]
struct Source {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Experiment preset (fig1..fig5); overrides the file's `preset` key.
    #[arg(long)]
    preset: Option<String>,
    /// Override the horizon in seconds.
    #[arg(long)]
    t_end: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Fast,
    Full,
}

#[derive(Debug)]
struct Aborted(String);

impl std::fmt::Display for Aborted {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Aborted {}

#[derive(Debug)]
struct VerifyFailed(usize);

impl std::fmt::Display for VerifyFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} propert{} failed", self.0, if self.0 == 1 { "y" } else { "ies" })
    }
}

impl std::error::Error for VerifyFailed {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(EXIT_CONFIG)
            } else if err.downcast_ref::<Aborted>().is_some() {
                ExitCode::from(EXIT_ABORTED)
            } else if err.downcast_ref::<VerifyFailed>().is_some() {
                ExitCode::from(EXIT_VERIFY)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run { source, out, remainder } => cmd_run(&source, out.as_deref(), remainder),
        Command::Verify { level, seed } => cmd_verify(level, seed),
        Command::Compare { source, out } => cmd_compare(&source, out.as_deref()),
        Command::Sweep { config, out, t_end, jobs } => cmd_sweep(&config, &out, t_end, jobs),
    }
}

fn load(source: &Source) -> Result<SimConfig> {
    let (mut file, base) = match &source.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            (ConfigFile::parse(&text)?, path.parent().map(Path::to_path_buf))
        }
        None => (ConfigFile::default(), None),
    };
    if let Some(p) = &source.preset {
        file.preset = Some(p.clone());
    }
    if let Some(t) = source.t_end {
        file.sim.t_end = Some(t);
    }
    Ok(file.resolve(base.as_deref())?)
}

fn simulate(cfg: &SimConfig) -> Result<SimLog> {
    run(cfg).map_err(|e| match e {
        SimError::Config(c) => anyhow::Error::new(c),
        other => anyhow::Error::new(other),
    })
}

fn writer(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(io::BufWriter::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn check_abort(log: &SimLog) -> Result<()> {
    if let Some(a) = &log.aborted {
        let last = log.rows.len().checked_sub(1).map_or("none".to_string(), |i| i.to_string());
        bail!(Aborted(format!("simulation aborted at t = {} s: {} (last finite row {last})", a.t, a.reason)));
    }
    Ok(())
}

fn cmd_run(source: &Source, out: Option<&Path>, remainder: bool) -> Result<()> {
    let cfg = load(source)?;
    let mut log = simulate(&cfg)?;
    if remainder {
        fill_remainder(&mut log, cfg.reference.ell)?;
    }
    log.write_csv(writer(out)?)?;
    check_abort(&log)
}

fn cmd_verify(level: LevelArg, seed: u64) -> Result<()> {
    let level = match level {
        LevelArg::Fast => Level::Fast,
        LevelArg::Full => Level::Full,
    };
    let props = run_suite(level, &Hooks::default(), seed);
    let mut stdout = io::stdout().lock();
    for p in &props {
        writeln!(stdout, "{p}")?;
    }
    let failed = props.iter().filter(|p| !p.pass).count();
    if failed > 0 {
        bail!(VerifyFailed(failed));
    }
    Ok(())
}

fn cmd_compare(source: &Source, out: Option<&Path>) -> Result<()> {
    let cfg = load(source)?;
    let mut log = simulate(&cfg)?;
    let linear = linear_ce_response(&cfg)?;
    let ell = cfg.reference.ell;
    fill_remainder(&mut log, ell)?;
    let mut w = csv::Writer::from_writer(writer(out)?);
    w.write_record(["t", "e1_nonlinear", "e2_nonlinear", "e1_linear", "e2_linear", "diff1", "diff2", "rem1", "rem2"])?;
    let mut diff_sq = 0.0;
    let mut rem_sq = 0.0;
    for (row, (t, lin)) in log.rows.iter().zip(&linear) {
        let e = row.e();
        let d = e - lin;
        let rem = row.rem.unwrap_or_default();
        diff_sq += d.norm_squared();
        rem_sq += rem.norm_squared();
        let fields = [*t, e[0], e[1], lin[0], lin[1], d[0], d[1], rem[0], rem[1]];
        w.write_record(fields.iter().map(|v| format!("{v:.16e}")))?;
    }
    w.flush()?;
    let n = log.rows.len().max(1) as f64;
    eprintln!("rms_difference={:.6e} rms_remainder_order{ell}={:.6e}", (diff_sq / n).sqrt(), (rem_sq / n).sqrt());
    check_abort(&log)
}

struct PointSummary {
    index: usize,
    name: String,
    status: String,
    rms_e: f64,
    max_e_tail: f64,
    rms_rem: f64,
}

fn cmd_sweep(config: &Path, out: &Path, t_end: Option<f64>, jobs: Option<usize>) -> Result<()> {
    let text = fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
    let points = expand_sweep(&text, config.parent())?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.unwrap_or(0)).build()?;
    let summaries: Vec<PointSummary> = pool.install(|| {
        points
            .into_par_iter()
            .enumerate()
            .map(|(index, point)| {
                let mut s = PointSummary {
                    index,
                    name: point.name,
                    status: String::new(),
                    rms_e: f64::NAN,
                    max_e_tail: f64::NAN,
                    rms_rem: f64::NAN,
                };
                let mut cfg = match point.config {
                    Ok(c) => c,
                    Err(e) => {
                        s.status = format!("rejected: {e}");
                        return s;
                    }
                };
                if let Some(t) = t_end {
                    cfg.t_end = t;
                }
                match sweep_point(&cfg, &out.join(format!("point_{index:03}.csv"))) {
                    Ok((log, status)) => {
                        let t1 = cfg.t_end;
                        s.rms_e = log.rms_over(0.5 * t1, t1, |r| r.e());
                        s.max_e_tail = log.max_abs_over(0.75 * t1, t1, |r| r.e());
                        s.rms_rem = log.rms_over(0.5 * t1, t1, |r| r.rem.unwrap_or_default());
                        s.status = status;
                    }
                    Err(e) => s.status = format!("failed: {e:#}"),
                }
                s
            })
            .collect()
    });
    let mut w = csv::Writer::from_path(out.join("summary.csv"))?;
    w.write_record(["index", "name", "status", "rms_e_second_half", "max_e_last_quarter", "rms_remainder_second_half"])?;
    for s in &summaries {
        w.write_record([
            s.index.to_string(),
            s.name.clone(),
            s.status.clone(),
            format!("{:.16e}", s.rms_e),
            format!("{:.16e}", s.max_e_tail),
            format!("{:.16e}", s.rms_rem),
        ])?;
        println!("{:03} {} {} rms_e={:.4e}", s.index, s.name, s.status, s.rms_e);
    }
    w.flush()?;
    Ok(())
}

fn sweep_point(cfg: &SimConfig, path: &Path) -> Result<(SimLog, String)> {
    let mut log = simulate(cfg)?;
    let status = match &log.aborted {
        Some(a) => format!("aborted at t={}: {}", a.t, a.reason),
        None => {
            fill_remainder(&mut log, cfg.reference.ell)?;
            "ok".to_string()
        }
    };
    log.write_csv(fs::File::create(path).with_context(|| format!("creating {}", path.display()))?)?;
    Ok((log, status))
}
