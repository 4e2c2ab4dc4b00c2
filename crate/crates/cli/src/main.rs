//! `pedalshare`: run scenarios, summarise logs, fit motor parameters and
//! replay telemetry.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use pedalshare::powersplit::{fit_noload_params, sector_bounds, YTilde};
use pedalshare::report::{summarize, DEFAULT_WARMUP};
use pedalshare::sim::{
    noload_samples, read_records, read_sweep, run, sweep_experiment, write_sweep, EventKind,
    PedalRamp, ScenarioConfig, SessionLog, SweepRow,
};
use pedalshare::telemetry::replay;

#[derive(Parser)]
#[command(
    name = "pedalshare",
    version,
    about = "Human/motor power-share e-bike simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write the per-tick session log as CSV.
    Simulate(SimulateArgs),
    /// Summarise a session log: tracking error, ventilation, dose, heart rate.
    Report(ReportArgs),
    /// Fit the motor no-load line from a sweep CSV.
    FitNoload(FitArgs),
    /// Parse a newline-delimited telemetry frame log and count outcomes.
    Replay(ReplayArgs),
    /// Fixed-Ỹ pedal-speed ramps, as run on a trainer.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Override the scenario's noise seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Run for a fixed time (s) instead of the route's laps.
    #[arg(long)]
    duration: Option<f64>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    log: PathBuf,
    /// Seconds excluded from the error statistics.
    #[arg(long, default_value_t = DEFAULT_WARMUP)]
    warmup: f64,
    /// Also write the summary as metric,value CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    sweep: PathBuf,
    #[arg(long, default_value_t = 0.8)]
    motor_efficiency: f64,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long)]
    frames: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Control inputs to sweep, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    ytilde: Vec<i64>,
    #[arg(long)]
    out: PathBuf,
    /// σ (W) of Gaussian noise on the logged electrical power.
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; each control input is an independent run.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

/// A broken internal invariant rather than bad input.
#[derive(Debug)]
struct Invariant(String);

impl std::fmt::Display for Invariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "internal invariant violated: {}", self.0)
    }
}

impl std::error::Error for Invariant {}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(file))
}

fn check_log(log: &SessionLog) -> Result<(), Invariant> {
    for r in &log.records {
        let values = [r.v, r.p_hw, r.p_mw, r.hr, r.ve, r.dose, r.battery_ah];
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Invariant(format!("non-finite state at t={}", r.t)));
        }
        if r.m.is_some_and(|m| !(0.0..=1.0).contains(&m)) {
            return Err(Invariant(format!("share outside [0, 1] at t={}", r.t)));
        }
    }
    Ok(())
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let mut cfg = ScenarioConfig::load(&args.scenario)?;
    if let Some(seed) = args.seed {
        cfg.sim.seed = seed;
    }
    if let Some(d) = args.duration {
        if !(d.is_finite() && d >= 0.0) {
            bail!("duration must be a non-negative number of seconds");
        }
        cfg.sim.duration = Some(d);
    }
    let log = run(&cfg)?;
    check_log(&log)?;
    let mut out = create(&args.out)?;
    log.write_csv(&mut out)?;
    out.flush()?;
    for ev in &log.events {
        match &ev.kind {
            EventKind::BatteryEmpty => eprintln!("warning: battery empty at t={:.1} s", ev.t),
            EventKind::DurationCap => {
                eprintln!("warning: stopped at the duration cap, t={:.1} s", ev.t)
            }
            EventKind::Stream(msg) => {
                eprintln!("warning: command stream at t={:.1} s: {msg}", ev.t)
            }
        }
    }
    match log.last() {
        Some(last) => println!(
            "{} rows to {}; t_end {:.1} s, distance {:.0} m, dose {:.3} µg, battery {:.3} Ah",
            log.len(),
            args.out.display(),
            last.t + log.dt,
            last.position,
            last.dose,
            last.battery_ah
        ),
        None => println!("0 rows to {}", args.out.display()),
    }
    Ok(())
}

fn report(args: &ReportArgs) -> Result<()> {
    let records = read_records(open(&args.log)?)
        .with_context(|| format!("malformed session log {}", args.log.display()))?;
    let summary = summarize(&records, args.warmup);
    if summary
        .error_percentiles
        .windows(2)
        .any(|w| w[1].1 < w[0].1)
    {
        return Err(Invariant("error percentiles are not monotone".into()).into());
    }
    println!("{summary}");
    if let Some(path) = &args.out {
        let mut out = create(path)?;
        summary.write_csv(&mut out)?;
        out.flush()?;
    }
    Ok(())
}

fn fit_noload(args: &FitArgs) -> Result<()> {
    let rows = read_sweep(open(&args.sweep)?)
        .with_context(|| format!("malformed sweep {}", args.sweep.display()))?;
    let samples = noload_samples(&rows);
    let fit = fit_noload_params(&samples, args.motor_efficiency)?;
    println!("beta1 = {:.9} W/step", fit.slope);
    println!("beta2 = {:.9} W", fit.intercept);
    println!(
        "residual_rms = {:.6} W over {} no-load samples",
        fit.residual_rms,
        samples.len()
    );
    Ok(())
}

fn replay_frames(args: &ReplayArgs) -> Result<()> {
    let stats = replay(open(&args.frames)?)
        .with_context(|| format!("cannot read {}", args.frames.display()))?;
    println!("{stats}");
    Ok(())
}

fn sweep(args: &SweepArgs) -> Result<()> {
    let mut cfg = ScenarioConfig::load(&args.scenario)?;
    if let Some(seed) = args.seed {
        cfg.sim.seed = seed;
    }
    let inputs = args
        .ytilde
        .iter()
        .map(|&y| YTilde::new(y))
        .collect::<Result<Vec<_>, _>>()?;
    let noise = match args.noise {
        Some(s) if !(s.is_finite() && s >= 0.0) => {
            bail!("noise must be a non-negative number of watts")
        }
        Some(s) if s > 0.0 => Some((s, cfg.sim.seed)),
        _ => None,
    };
    let jobs = args.jobs.max(1);
    let ramp = PedalRamp::default();
    let cfg = &cfg;
    let mut runs: Vec<Vec<SweepRow>> = Vec::with_capacity(inputs.len());
    for batch in inputs.chunks(jobs) {
        let done: Vec<Vec<SweepRow>> = std::thread::scope(|s| {
            let handles: Vec<_> = batch
                .iter()
                .map(|&yt| s.spawn(move || sweep_experiment(cfg, yt, ramp, noise)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("sweep worker panicked"))
                .collect()
        });
        runs.extend(done);
    }

    for rows in &runs {
        let pts: Vec<_> = rows.iter().map(SweepRow::point).collect();
        let yt = rows.first().map_or(0, |r| r.ytilde);
        match sector_bounds(&pts) {
            Ok(b) => println!("ytilde {yt}: S1 {:.2} km/h, S2 {:.2} km/h", b.s1, b.s2),
            Err(e) => println!("ytilde {yt}: {e}"),
        }
    }
    let all: Vec<SweepRow> = runs.into_iter().flatten().collect();
    let mut out = create(&args.out)?;
    write_sweep(&all, &mut out)?;
    out.flush()?;
    println!("{} rows to {}", all.len(), args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Report(a) => report(a),
        Command::FitNoload(a) => fit_noload(a),
        Command::Replay(a) => replay_frames(a),
        Command::Sweep(a) => sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Invariant>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
