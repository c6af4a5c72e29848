//! `lumispec` command line: simulate sweeps, analyze runs, report, plot.
//!
//! Exit codes: 0 success, 1 domain error, 2 usage error.

mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use lumispec_core::analysis::rows_stats;
use lumispec_core::dataio::{
    read_profile, spectrum_file_name, write_profile, LOCK_FILE, MANIFEST_FILE, META_FILE,
    PROFILE_FILE,
};
use lumispec_core::optics::{DEFAULT_KAPPA, DEFAULT_NOISE_SIGMA};
use lumispec_core::spectrum::SPAN_THRESHOLD;
use lumispec_core::{
    analyze_records, format_report, normalize_above_cutoff, read_run, run_triplicate_parallel,
    smooth_window2, solve_incidence, write_run, AnalysisError, OpticalConfig, PipelineConfig,
    PivotGeometry, Pooling, ProfileRow, RunMeta, SimulatedPort, SurfaceModel, SweepPlan,
    SweepRecord,
};

use svg::{ramp_color, Axis, Chart, Rule, Series};

#[derive(Parser)]
#[command(
    name = "lumispec",
    version,
    about = "Angle-of-incidence fluorescence scan simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a multi-trial sweep and write a run directory.
    Simulate(SimulateArgs),
    /// Compute the normalized AUC profile of a run (writes profile.csv).
    Analyze(AnalyzeArgs),
    /// Print `mean=.. std=.. span95=..` for a profile.
    Report(ReportArgs),
    /// Render spectra or a profile as a standalone SVG chart.
    ExportSvg(ExportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Geometry {
    Flat,
    Convex,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    geometry: Geometry,
    /// Phantom radius; required for convex geometry (25 is the reference phantom).
    #[arg(long, required_if_eq("geometry", "convex"))]
    sphere_radius_mm: Option<f64>,
    #[arg(long, default_value_t = 3)]
    trials: u32,
    /// Master seed; falls back to LUMISPEC_SEED.
    #[arg(long, env = "LUMISPEC_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_NOISE_SIGMA)]
    noise_sigma: f64,
    #[arg(long, default_value_t = DEFAULT_KAPPA)]
    kappa: f64,
    /// Run directory to create.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = -18.0, allow_negative_numbers = true)]
    start_deg: f64,
    #[arg(long, default_value_t = 1.8)]
    step_deg: f64,
    #[arg(long, default_value_t = 21)]
    n_steps: usize,
    /// Replace the run files of an existing directory.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Run directory written by `simulate`.
    #[arg(long)]
    run: PathBuf,
    #[arg(long, default_value_t = 450.0)]
    cutoff_nm: f64,
    #[arg(long, default_value_t = 450.0)]
    auc_lo: f64,
    #[arg(long, default_value_t = 750.0)]
    auc_hi: f64,
    #[arg(long, default_value = "per-trial")]
    pooling: Pooling,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    profile: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Which {
    Spectra,
    Profile,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Stage {
    /// Intensities as acquired.
    Raw,
    /// Normalized above the cutoff and smoothed, as integrated.
    Smoothed,
}

#[derive(Args)]
struct ExportArgs {
    /// Run directory (spectra, or a profile computed with default settings).
    #[arg(long)]
    run: Option<PathBuf>,
    /// profile.csv written by `analyze`.
    #[arg(long)]
    profile: Option<PathBuf>,
    /// Output SVG file.
    #[arg(long)]
    out: PathBuf,
    /// Defaults to the only kind of input given.
    #[arg(long, value_enum)]
    which: Option<Which>,
    #[arg(long, value_enum, default_value = "raw")]
    stage: Stage,
}

enum Failure {
    Usage(clap::Error),
    Domain(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Domain(e)
    }
}

fn usage(message: impl std::fmt::Display) -> Failure {
    Failure::Usage(Cli::command().error(ErrorKind::ValueValidation, message))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Analyze(a) => analyze(a),
        Command::Report(a) => report(a),
        Command::ExportSvg(a) => export_svg(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => e.exit(),
        Err(Failure::Domain(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn is_layout_file(name: &str) -> bool {
    if [META_FILE, MANIFEST_FILE, PROFILE_FILE].contains(&name) {
        return true;
    }
    // t{trial}_s{step}.csv
    let Some(stem) = name.strip_prefix('t').and_then(|n| n.strip_suffix(".csv")) else {
        return false;
    };
    let Some((trial, step)) = stem.split_once("_s") else {
        return false;
    };
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    digits(trial) && digits(step)
}

fn prepare_out_dir(dir: &Path, force: bool) -> anyhow::Result<()> {
    if !dir.exists() {
        return Ok(());
    }
    if !dir.is_dir() {
        return Err(anyhow!("{}: not a directory", dir.display()));
    }
    let entries: Vec<_> = fs::read_dir(dir)
        .with_context(|| format!("{}: cannot list", dir.display()))?
        .collect::<Result<_, _>>()?;
    if entries.is_empty() {
        return Ok(());
    }
    if !force {
        return Err(anyhow!(
            "{}: directory is not empty (use --force to replace run files)",
            dir.display()
        ));
    }
    if dir.join(LOCK_FILE).exists() {
        return Err(anyhow!(
            "{}: run directory is locked by another writer",
            dir.join(LOCK_FILE).display()
        ));
    }
    for e in entries {
        let name = e.file_name();
        if is_layout_file(&name.to_string_lossy()) && e.file_type()?.is_file() {
            fs::remove_file(e.path())
                .with_context(|| format!("{}: cannot remove", e.path().display()))?;
        }
    }
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<(), Failure> {
    let pivot = PivotGeometry::default();
    let surface = match (a.geometry, a.sphere_radius_mm) {
        (Geometry::Flat, None) => SurfaceModel::Flat,
        (Geometry::Flat, Some(_)) => {
            return Err(usage(
                "--sphere-radius-mm only applies to --geometry convex",
            ))
        }
        (Geometry::Convex, Some(r)) => SurfaceModel::sphere(r, &pivot),
        (Geometry::Convex, None) => {
            return Err(usage("--geometry convex requires --sphere-radius-mm"))
        }
    };
    surface.validate().map_err(usage)?;
    let plan = SweepPlan {
        start_deg: a.start_deg,
        step_deg: a.step_deg,
        n_steps: a.n_steps,
        trials: a.trials,
    };
    plan.validate().map_err(usage)?;
    let optics = OpticalConfig::default()
        .with_kappa(a.kappa)
        .with_noise_sigma(a.noise_sigma);
    optics.validate().map_err(usage)?;
    for angle in plan.angles() {
        solve_incidence(angle, &pivot, &surface)
            .map_err(|e| anyhow!("plan angle {angle} deg: {e}"))?;
    }

    prepare_out_dir(&a.out, a.force)?;
    let meta = RunMeta {
        surface,
        pivot,
        optics,
        master_seed: a.seed,
    };
    let records = run_triplicate_parallel(&plan, SimulatedPort::factory(&meta), a.seed)
        .context("simulation failed")?;
    write_run(&records, &a.out).map_err(anyhow::Error::from)?;
    println!(
        "wrote {} spectra ({} trials x {} angles) to {}",
        plan.trials as usize * plan.n_steps,
        plan.trials,
        plan.n_steps,
        a.out.display()
    );
    Ok(())
}

fn analysis_error(dir: &Path, e: AnalysisError) -> anyhow::Error {
    match e {
        AnalysisError::Spectrum {
            trial,
            step,
            angle_deg,
            source,
        } => anyhow!(
            "{}: angle {angle_deg} deg: {source}",
            dir.join(spectrum_file_name(trial, step)).display()
        ),
        e => anyhow!("{}: {e}", dir.display()),
    }
}

fn profile_of_run(
    dir: &Path,
    cfg: &PipelineConfig,
    pooling: Pooling,
) -> anyhow::Result<(Vec<SweepRecord>, Vec<ProfileRow>)> {
    let records = read_run(dir)?;
    let rows = analyze_records(&records, cfg, pooling).map_err(|e| analysis_error(dir, e))?;
    Ok((records, rows))
}

fn analyze(a: AnalyzeArgs) -> Result<(), Failure> {
    let cfg = PipelineConfig {
        norm_cutoff_nm: a.cutoff_nm,
        auc_lo_nm: a.auc_lo,
        auc_hi_nm: a.auc_hi,
        ..PipelineConfig::default()
    };
    cfg.validate().map_err(usage)?;
    let (_, rows) = profile_of_run(&a.run, &cfg, a.pooling)?;
    let path = a.run.join(PROFILE_FILE);
    write_profile(&rows, &path).map_err(anyhow::Error::from)?;
    println!(
        "wrote {} ({} angles, {} trials, pooling={})",
        path.display(),
        rows.len(),
        rows[0].n_trials,
        a.pooling
    );
    Ok(())
}

fn report(a: ReportArgs) -> Result<(), Failure> {
    let rows = read_profile(&a.profile).map_err(anyhow::Error::from)?;
    let stats =
        rows_stats(&rows, SPAN_THRESHOLD).map_err(|e| anyhow!("{}: {e}", a.profile.display()))?;
    println!("{}", format_report(&stats));
    Ok(())
}

/// Smallest 1/2/2.5/5 x 10^k step giving at most `target` intervals.
fn nice_step(range: f64, target: f64) -> f64 {
    let raw = range / target;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag)
}

fn spectra_chart(
    records: &[SweepRecord],
    stage: Stage,
    cfg: &PipelineConfig,
) -> anyhow::Result<Chart> {
    let first = &records[0];
    let mut series = Vec::with_capacity(first.entries.len());
    let mut y_max: f64 = 0.0;
    for (step, &(angle, ref spectrum)) in first.entries.iter().enumerate() {
        let mut sum = vec![0.0; spectrum.len()];
        for r in records {
            let (_, s) = &r.entries[step];
            let staged = match stage {
                Stage::Raw => s.clone(),
                Stage::Smoothed => normalize_above_cutoff(s, cfg.norm_cutoff_nm)
                    .map(|n| smooth_window2(&n))
                    .map_err(|e| anyhow!("{}: {e}", spectrum_file_name(r.trial_index, step)))?,
            };
            if staged.len() != sum.len() {
                return Err(anyhow!(
                    "{}: wavelength grid differs from trial {}",
                    spectrum_file_name(r.trial_index, step),
                    first.trial_index
                ));
            }
            for (acc, v) in sum.iter_mut().zip(staged.intensities()) {
                *acc += v;
            }
        }
        let n = records.len() as f64;
        let points: Vec<(f64, f64)> = spectrum
            .wavelengths_nm()
            .iter()
            .zip(&sum)
            .filter(|(w, _)| (400.0..=800.0).contains(*w))
            .map(|(&w, &v)| (w, v / n))
            .collect();
        y_max = points.iter().map(|p| p.1).fold(y_max, f64::max);
        series.push(Series {
            label: format!("{angle:.1} deg"),
            points,
            color: ramp_color(step, first.entries.len()),
            errors: None,
        });
    }
    let y_max = if y_max > 0.0 { y_max } else { 1.0 };
    let y_step = nice_step(y_max, 5.0);
    let title = match stage {
        Stage::Raw => "Emission spectra by motor angle (raw, trial mean)",
        Stage::Smoothed => "Emission spectra by motor angle (normalized, smoothed, trial mean)",
    };
    Ok(Chart {
        title: title.into(),
        x: Axis {
            lo: 400.0,
            hi: 800.0,
            step: 50.0,
            label: "wavelength (nm)".into(),
        },
        y: Axis {
            lo: 0.0,
            hi: (y_max / y_step).ceil() * y_step,
            step: y_step,
            label: "intensity (a.u.)".into(),
        },
        series,
        rules: vec![],
    })
}

fn profile_chart(rows: &[ProfileRow]) -> Chart {
    let a_min = rows
        .iter()
        .map(|r| r.angle_deg)
        .fold(f64::INFINITY, f64::min);
    let a_max = rows
        .iter()
        .map(|r| r.angle_deg)
        .fold(f64::NEG_INFINITY, f64::max);
    let x_step = nice_step((a_max - a_min).max(1.0), 6.0);
    let low = rows
        .iter()
        .map(|r| r.auc_norm_mean - r.auc_norm_std)
        .fold(0.9, f64::min);
    let high = rows
        .iter()
        .map(|r| r.auc_norm_mean + r.auc_norm_std)
        .fold(1.05, f64::max);
    let y_step = nice_step(high - low, 6.0).max(0.05);
    Chart {
        title: "Normalized AUC by motor angle".into(),
        x: Axis {
            lo: (a_min / x_step).floor() * x_step,
            hi: (a_max / x_step).ceil() * x_step,
            step: x_step,
            label: "motor angle (deg)".into(),
        },
        y: Axis {
            lo: (low / y_step).floor() * y_step,
            hi: (high / y_step).ceil() * y_step,
            step: y_step,
            label: "normalized AUC".into(),
        },
        series: vec![Series {
            label: format!("mean of {} trials", rows[0].n_trials),
            points: rows
                .iter()
                .map(|r| (r.angle_deg, r.auc_norm_mean))
                .collect(),
            color: "#1f4fbf".into(),
            errors: Some(rows.iter().map(|r| r.auc_norm_std).collect()),
        }],
        rules: vec![Rule {
            y: SPAN_THRESHOLD,
            label: format!("{SPAN_THRESHOLD}"),
        }],
    }
}

fn export_svg(a: ExportArgs) -> Result<(), Failure> {
    let which = match (a.which, &a.run, &a.profile) {
        (Some(w), _, _) => w,
        (None, Some(_), None) => Which::Spectra,
        (None, None, Some(_)) => Which::Profile,
        (None, None, None) => return Err(usage("give --run and/or --profile")),
        (None, Some(_), Some(_)) => {
            return Err(usage(
                "--which is required when both --run and --profile are given",
            ))
        }
    };
    if which == Which::Spectra && a.run.is_none() {
        return Err(usage("--which spectra needs --run"));
    }
    if which == Which::Profile && a.run.is_none() && a.profile.is_none() {
        return Err(usage("--which profile needs --profile or --run"));
    }

    let cfg = PipelineConfig::default();
    let chart = match which {
        Which::Spectra => {
            let run = a.run.as_deref().expect("checked above");
            let records = read_run(run).map_err(anyhow::Error::from)?;
            spectra_chart(&records, a.stage, &cfg)?
        }
        Which::Profile => {
            let rows = match (&a.profile, &a.run) {
                (Some(p), _) => read_profile(p).map_err(anyhow::Error::from)?,
                (None, Some(run)) => profile_of_run(run, &cfg, Pooling::default())?.1,
                (None, None) => unreachable!(),
            };
            profile_chart(&rows)
        }
    };
    fs::write(&a.out, chart.render())
        .with_context(|| format!("{}: cannot write", a.out.display()))?;
    println!("wrote {}", a.out.display());
    Ok(())
}
