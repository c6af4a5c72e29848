//! Plain-text run storage.
//!
//! A run directory holds:
//!
//! * `meta.txt`: `key=value` lines in a fixed order (see [`META_KEYS`]),
//! * `manifest.csv`: `trial,step_index,motor_angle_deg,spectrum_file`,
//! * one spectrum file per acquisition, `t{trial}_s{step:02}.csv`, with the
//!   header `wavelength_nm,intensity` and rows formatted `%.6f,%.9e`.
//!
//! Writers are byte-deterministic. Readers never panic on malformed input;
//! every failure carries the offending path and, where it applies, the
//! 1-based line number.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::geometry::{PivotGeometry, SurfaceModel};
use crate::optics::{Fluorophore, OpticalConfig, WavelengthGrid};
use crate::scan::{RunMeta, SweepPlan, SweepRecord};
use crate::spectrum::Spectrum;

pub const SPECTRUM_HEADER: &str = "wavelength_nm,intensity";
pub const MANIFEST_HEADER: &str = "trial,step_index,motor_angle_deg,spectrum_file";
pub const PROFILE_HEADER: &str = "angle_deg,auc_norm_mean,auc_norm_std,n_trials";
pub const META_FILE: &str = "meta.txt";
pub const MANIFEST_FILE: &str = "manifest.csv";
pub const PROFILE_FILE: &str = "profile.csv";
pub const LOCK_FILE: &str = ".lumispec.lock";
pub const SCHEMA_VERSION: u32 = 1;

/// Keys of `meta.txt`, in the order they are written.
pub const META_KEYS: &[&str] = &[
    "schema_version",
    "geometry",
    "sphere_radius_mm",
    "apex_distance_mm",
    "working_distance_mm",
    "seed",
    "noise_sigma",
    "kappa",
    "start_deg",
    "step_deg",
    "n_steps",
    "trials",
    "excitation_nm",
    "baseline",
    "dichroic_cutoff_nm",
    "dichroic_width_nm",
    "grid_lo_nm",
    "grid_hi_nm",
    "grid_step_nm",
    "fluorophores",
];

/// Keys a hand-written `meta.txt` may leave out; defaults fill them in.
const OPTIONAL_META_KEYS: &[&str] = &[
    "apex_distance_mm",
    "excitation_nm",
    "baseline",
    "dichroic_cutoff_nm",
    "dichroic_width_nm",
    "grid_lo_nm",
    "grid_hi_nm",
    "grid_step_nm",
    "fluorophores",
];

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: malformed header, expected `{expected}`, found `{found}`")]
    MalformedHeader {
        path: PathBuf,
        expected: &'static str,
        found: String,
    },
    #[error("{path}:{line}: wavelength does not increase")]
    NonMonotonicWavelength { path: PathBuf, line: usize },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Layout { path: PathBuf, message: String },
    #[error("{path}:{line}: {message}")]
    Meta {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: run directory is locked by another writer")]
    Locked { path: PathBuf },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl DataError {
    /// File the error points at.
    pub fn path(&self) -> &Path {
        match self {
            DataError::MalformedHeader { path, .. }
            | DataError::NonMonotonicWavelength { path, .. }
            | DataError::Parse { path, .. }
            | DataError::Layout { path, .. }
            | DataError::Meta { path, .. }
            | DataError::Locked { path }
            | DataError::Io { path, .. } => path,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> DataError + '_ {
    move |source| DataError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> DataError {
    DataError::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// `%.9e` as C prints it: two-digit signed exponent.
pub fn format_sci9(value: f64) -> String {
    let s = format!("{value:.9e}");
    match s.split_once('e') {
        Some((mantissa, exp)) => {
            let (sign, digits) = match exp.strip_prefix('-') {
                Some(d) => ('-', d),
                None => ('+', exp),
            };
            format!("{mantissa}e{sign}{digits:0>2}")
        }
        None => s,
    }
}

pub fn spectrum_to_string(s: &Spectrum) -> String {
    let mut out = String::with_capacity(32 * (s.len() + 1));
    out.push_str(SPECTRUM_HEADER);
    out.push('\n');
    for (w, i) in s.iter() {
        let _ = writeln!(out, "{w:.6},{}", format_sci9(i));
    }
    out
}

pub fn write_spectrum(s: &Spectrum, path: &Path) -> Result<(), DataError> {
    fs::write(path, spectrum_to_string(s)).map_err(io_err(path))
}

pub fn read_spectrum(path: &Path) -> Result<Spectrum, DataError> {
    let text = read_text(path)?;
    parse_spectrum(&text, path)
}

fn read_text(path: &Path) -> Result<String, DataError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    String::from_utf8(bytes).map_err(|e| DataError::Parse {
        path: path.to_path_buf(),
        line: 0,
        message: format!("not UTF-8: {e}"),
    })
}

/// Lines of `text` with a trailing `\r` dropped, numbered from 1.
fn numbered_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
}

fn parse_f64(field: &str, path: &Path, line: usize, what: &str) -> Result<f64, DataError> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| parse_err(path, line, format!("{what}: cannot parse `{field}`")))?;
    if !v.is_finite() {
        return Err(parse_err(path, line, format!("{what}: non-finite value")));
    }
    Ok(v)
}

/// Parses spectrum file contents; `path` is only used for error messages.
pub fn parse_spectrum(text: &str, path: &Path) -> Result<Spectrum, DataError> {
    let mut lines = numbered_lines(text);
    let header = lines.next().map(|(_, l)| l).unwrap_or("");
    if header != SPECTRUM_HEADER {
        return Err(DataError::MalformedHeader {
            path: path.to_path_buf(),
            expected: SPECTRUM_HEADER,
            found: header.chars().take(64).collect(),
        });
    }
    let mut wavelengths = Vec::new();
    let mut intensities = Vec::new();
    let mut last_line = 1;
    for (line, row) in lines {
        last_line = line;
        let (w, i) = row
            .split_once(',')
            .ok_or_else(|| parse_err(path, line, "expected 2 comma-separated fields"))?;
        if i.contains(',') {
            return Err(parse_err(path, line, "expected 2 comma-separated fields"));
        }
        let w = parse_f64(w, path, line, "wavelength")?;
        let i = parse_f64(i, path, line, "intensity")?;
        if wavelengths.last().is_some_and(|prev| w <= *prev) {
            return Err(DataError::NonMonotonicWavelength {
                path: path.to_path_buf(),
                line,
            });
        }
        wavelengths.push(w);
        intensities.push(i);
    }
    Spectrum::new(wavelengths, intensities).map_err(|e| parse_err(path, last_line, e.to_string()))
}

/// File name of one acquisition inside a run directory.
pub fn spectrum_file_name(trial: u32, step: usize) -> String {
    format!("t{trial}_s{step:02}.csv")
}

fn fluorophores_to_string(fs: &[Fluorophore]) -> String {
    fs.iter()
        .map(|f| format!("{}:{}:{}:{}", f.name, f.center_nm, f.sigma_nm, f.amplitude))
        .collect::<Vec<_>>()
        .join(";")
}

pub fn meta_to_string(meta: &RunMeta, plan: &SweepPlan) -> String {
    let (radius, apex) = match meta.surface {
        SurfaceModel::Flat => ("none".to_string(), "none".to_string()),
        SurfaceModel::Sphere {
            radius_mm,
            apex_distance_mm,
        } => (radius_mm.to_string(), apex_distance_mm.to_string()),
    };
    let o = &meta.optics;
    let values = [
        SCHEMA_VERSION.to_string(),
        meta.surface.name().to_string(),
        radius,
        apex,
        meta.pivot.working_distance_mm.to_string(),
        meta.master_seed.to_string(),
        o.noise_sigma.to_string(),
        o.angular.kappa.to_string(),
        plan.start_deg.to_string(),
        plan.step_deg.to_string(),
        plan.n_steps.to_string(),
        plan.trials.to_string(),
        o.excitation_nm.to_string(),
        o.baseline.to_string(),
        o.dichroic.cutoff_nm.to_string(),
        o.dichroic.transition_width_nm.to_string(),
        o.grid.lo_nm.to_string(),
        o.grid.hi_nm.to_string(),
        o.grid.step_nm.to_string(),
        fluorophores_to_string(&o.fluorophores),
    ];
    let mut out = String::new();
    for (k, v) in META_KEYS.iter().zip(values) {
        let _ = writeln!(out, "{k}={v}");
    }
    out
}

struct MetaMap<'a> {
    path: &'a Path,
    entries: HashMap<String, (usize, String)>,
}

impl MetaMap<'_> {
    fn raw(&self, key: &str) -> Result<Option<(usize, &str)>, DataError> {
        Ok(self.entries.get(key).map(|(l, v)| (*l, v.as_str())))
    }

    fn required(&self, key: &str) -> Result<(usize, &str), DataError> {
        self.raw(key)?.ok_or_else(|| DataError::Meta {
            path: self.path.to_path_buf(),
            line: 0,
            message: format!("missing key `{key}`"),
        })
    }

    fn bad(&self, line: usize, key: &str, value: &str) -> DataError {
        DataError::Meta {
            path: self.path.to_path_buf(),
            line,
            message: format!("bad value for `{key}`: `{value}`"),
        }
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T, DataError> {
        let (line, v) = self.required(key)?;
        v.parse().map_err(|_| self.bad(line, key, v))
    }

    fn parse_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, DataError> {
        match self.raw(key)? {
            Some((line, v)) => v.parse().map_err(|_| self.bad(line, key, v)),
            None => Ok(default),
        }
    }

    fn float(&self, key: &str) -> Result<f64, DataError> {
        let v: f64 = self.parse(key)?;
        self.check_finite(key, v)
    }

    fn float_or(&self, key: &str, default: f64) -> Result<f64, DataError> {
        let v: f64 = self.parse_or(key, default)?;
        self.check_finite(key, v)
    }

    fn check_finite(&self, key: &str, v: f64) -> Result<f64, DataError> {
        if v.is_finite() {
            Ok(v)
        } else {
            let line = self.entries.get(key).map_or(0, |(l, _)| *l);
            Err(self.bad(line, key, &v.to_string()))
        }
    }
}

fn parse_fluorophores(map: &MetaMap<'_>) -> Result<Vec<Fluorophore>, DataError> {
    let Some((line, v)) = map.raw("fluorophores")? else {
        return Ok(OpticalConfig::default().fluorophores);
    };
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(';')
        .map(|item| {
            let parts: Vec<&str> = item.split(':').collect();
            let num = |s: &str| s.parse::<f64>().ok().filter(|x| x.is_finite());
            match parts.as_slice() {
                [name, c, s, a] if !name.is_empty() => match (num(c), num(s), num(a)) {
                    (Some(c), Some(s), Some(a)) => Ok(Fluorophore::new(*name, c, s, a)),
                    _ => Err(map.bad(line, "fluorophores", item)),
                },
                _ => Err(map.bad(line, "fluorophores", item)),
            }
        })
        .collect()
}

/// Parses `meta.txt` contents into the run configuration and plan.
pub fn parse_meta(text: &str, path: &Path) -> Result<(RunMeta, SweepPlan), DataError> {
    let meta_err = |line: usize, message: String| DataError::Meta {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut entries = HashMap::new();
    for (line, raw) in numbered_lines(text) {
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (key, value) = raw
            .split_once('=')
            .ok_or_else(|| meta_err(line, format!("expected key=value, found `{raw}`")))?;
        let key = key.trim();
        if !META_KEYS.contains(&key) {
            return Err(meta_err(line, format!("unknown key `{key}`")));
        }
        if entries
            .insert(key.to_string(), (line, value.trim().to_string()))
            .is_some()
        {
            return Err(meta_err(line, format!("duplicate key `{key}`")));
        }
    }
    for key in META_KEYS {
        if !OPTIONAL_META_KEYS.contains(key)
            && *key != "sphere_radius_mm"
            && !entries.contains_key(*key)
        {
            return Err(meta_err(0, format!("missing key `{key}`")));
        }
    }
    let map = MetaMap { path, entries };

    let version: u32 = map.parse("schema_version")?;
    if version != SCHEMA_VERSION {
        let (line, v) = map.required("schema_version")?;
        return Err(meta_err(line, format!("unsupported schema_version {v}")));
    }
    let pivot = PivotGeometry {
        working_distance_mm: map.float("working_distance_mm")?,
    };
    let (geo_line, geometry) = map.required("geometry")?;
    let surface = match geometry {
        "flat" => SurfaceModel::Flat,
        "convex" => {
            let radius_mm = map.float("sphere_radius_mm")?;
            let apex_distance_mm = match map.raw("apex_distance_mm")? {
                Some((_, "none")) | None => pivot.working_distance_mm,
                Some(_) => map.float("apex_distance_mm")?,
            };
            SurfaceModel::Sphere {
                radius_mm,
                apex_distance_mm,
            }
        }
        other => return Err(map.bad(geo_line, "geometry", other)),
    };
    let defaults = OpticalConfig::default();
    let optics = OpticalConfig {
        excitation_nm: map.float_or("excitation_nm", defaults.excitation_nm)?,
        fluorophores: parse_fluorophores(&map)?,
        dichroic: crate::optics::DichroicCurve {
            cutoff_nm: map.float_or("dichroic_cutoff_nm", defaults.dichroic.cutoff_nm)?,
            transition_width_nm: map
                .float_or("dichroic_width_nm", defaults.dichroic.transition_width_nm)?,
        },
        angular: crate::optics::AngularResponse {
            kappa: map.float("kappa")?,
        },
        noise_sigma: map.float("noise_sigma")?,
        baseline: map.float_or("baseline", defaults.baseline)?,
        grid: WavelengthGrid {
            lo_nm: map.float_or("grid_lo_nm", defaults.grid.lo_nm)?,
            hi_nm: map.float_or("grid_hi_nm", defaults.grid.hi_nm)?,
            step_nm: map.float_or("grid_step_nm", defaults.grid.step_nm)?,
        },
    };
    let plan = SweepPlan {
        start_deg: map.float("start_deg")?,
        step_deg: map.float("step_deg")?,
        n_steps: map.parse("n_steps")?,
        trials: map.parse("trials")?,
    };
    plan.validate().map_err(|e| meta_err(0, e.to_string()))?;
    pivot.validate().map_err(|e| meta_err(0, e.to_string()))?;
    surface.validate().map_err(|e| meta_err(0, e.to_string()))?;
    let meta = RunMeta {
        surface,
        pivot,
        optics,
        master_seed: map.parse("seed")?,
    };
    Ok((meta, plan))
}

pub fn read_meta(dir: &Path) -> Result<(RunMeta, SweepPlan), DataError> {
    let path = dir.join(META_FILE);
    parse_meta(&read_text(&path)?, &path)
}

fn layout_err(path: &Path, message: impl Into<String>) -> DataError {
    DataError::Layout {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Holds the writer lock for a run directory; released on drop.
struct WriteLock {
    path: PathBuf,
}

impl WriteLock {
    fn acquire(dir: &Path) -> Result<Self, DataError> {
        let path = dir.join(LOCK_FILE);
        match fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
        {
            Ok(_) => Ok(Self { path }),
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => Err(DataError::Locked { path }),
            Err(e) => Err(io_err(&path)(e)),
        }
    }
}

impl Drop for WriteLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// Writes a complete run. All records must share one plan and configuration
/// and cover trials `1..=plan.trials`.
pub fn write_run(records: &[SweepRecord], dir: &Path) -> Result<(), DataError> {
    let first = records
        .first()
        .ok_or_else(|| layout_err(dir, "no records to write"))?;
    let plan = first.plan;
    if records.len() != plan.trials as usize {
        return Err(layout_err(
            dir,
            format!("{} records for a {}-trial plan", records.len(), plan.trials),
        ));
    }
    for (i, r) in records.iter().enumerate() {
        if r.plan != plan || r.meta != first.meta {
            return Err(layout_err(
                dir,
                "records do not share one plan and configuration",
            ));
        }
        if r.trial_index as usize != i + 1 {
            return Err(layout_err(
                dir,
                format!("record {} has trial index {}", i + 1, r.trial_index),
            ));
        }
        if r.entries.len() != plan.n_steps {
            return Err(layout_err(
                dir,
                format!(
                    "trial {} has {} entries, plan has {}",
                    r.trial_index,
                    r.entries.len(),
                    plan.n_steps
                ),
            ));
        }
    }

    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let _lock = WriteLock::acquire(dir)?;

    let meta_path = dir.join(META_FILE);
    fs::write(&meta_path, meta_to_string(&first.meta, &plan)).map_err(io_err(&meta_path))?;

    let mut manifest = String::new();
    manifest.push_str(MANIFEST_HEADER);
    manifest.push('\n');
    for r in records {
        for (step, (angle, spectrum)) in r.entries.iter().enumerate() {
            let name = spectrum_file_name(r.trial_index, step);
            write_spectrum(spectrum, &dir.join(&name))?;
            let _ = writeln!(manifest, "{},{step},{angle},{name}", r.trial_index);
        }
    }
    let manifest_path = dir.join(MANIFEST_FILE);
    fs::write(&manifest_path, manifest).map_err(io_err(&manifest_path))
}

pub struct ManifestRow {
    pub trial: u32,
    pub step: usize,
    pub angle: f64,
    pub file: String,
}

pub fn parse_manifest(text: &str, path: &Path) -> Result<Vec<ManifestRow>, DataError> {
    let mut lines = numbered_lines(text);
    let header = lines.next().map(|(_, l)| l).unwrap_or("");
    if header != MANIFEST_HEADER {
        return Err(DataError::MalformedHeader {
            path: path.to_path_buf(),
            expected: MANIFEST_HEADER,
            found: header.chars().take(64).collect(),
        });
    }
    lines
        .map(|(line, row)| {
            let fields: Vec<&str> = row.split(',').collect();
            let [trial, step, angle, file] = fields.as_slice() else {
                return Err(parse_err(path, line, "expected 4 comma-separated fields"));
            };
            let trial = trial
                .trim()
                .parse()
                .map_err(|_| parse_err(path, line, format!("bad trial `{trial}`")))?;
            let step = step
                .trim()
                .parse()
                .map_err(|_| parse_err(path, line, format!("bad step index `{step}`")))?;
            let angle = parse_f64(angle, path, line, "motor angle")?;
            let file = file.trim();
            if file.is_empty() || file.contains(['/', '\\']) || file == "." || file == ".." {
                return Err(parse_err(
                    path,
                    line,
                    format!("bad spectrum file name `{file}`"),
                ));
            }
            Ok(ManifestRow {
                trial,
                step,
                angle,
                file: file.to_string(),
            })
        })
        .collect()
}

/// Reads a run directory back into one record per trial.
pub fn read_run(dir: &Path) -> Result<Vec<SweepRecord>, DataError> {
    let (meta, plan) = read_meta(dir)?;
    let manifest_path = dir.join(MANIFEST_FILE);
    let rows = parse_manifest(&read_text(&manifest_path)?, &manifest_path)?;

    let expected = plan.trials as usize * plan.n_steps;
    if rows.len() != expected {
        return Err(layout_err(
            &manifest_path,
            format!(
                "{} rows, expected {expected} (trials x n_steps)",
                rows.len()
            ),
        ));
    }

    let mut by_trial: BTreeMap<u32, Vec<Option<(f64, Spectrum)>>> = BTreeMap::new();
    for (i, row) in rows.iter().enumerate() {
        let line = i + 2;
        if row.trial == 0 || row.trial > plan.trials {
            return Err(parse_err(
                &manifest_path,
                line,
                format!("trial {} outside the plan", row.trial),
            ));
        }
        if row.step >= plan.n_steps {
            return Err(parse_err(
                &manifest_path,
                line,
                format!("step {} outside the plan", row.step),
            ));
        }
        if row.angle != plan.angle(row.step) {
            return Err(parse_err(
                &manifest_path,
                line,
                format!(
                    "angle {} does not match plan angle {} for step {}",
                    row.angle,
                    plan.angle(row.step),
                    row.step
                ),
            ));
        }
        let file_path = dir.join(&row.file);
        if !file_path.is_file() {
            return Err(layout_err(
                &file_path,
                format!("missing spectrum file `{}`", row.file),
            ));
        }
        let spectrum = read_spectrum(&file_path)?;
        let slots = by_trial
            .entry(row.trial)
            .or_insert_with(|| vec![None; plan.n_steps]);
        if slots[row.step].replace((row.angle, spectrum)).is_some() {
            return Err(parse_err(
                &manifest_path,
                line,
                format!("duplicate entry for trial {} step {}", row.trial, row.step),
            ));
        }
    }

    by_trial
        .into_iter()
        .map(|(trial, slots)| {
            let entries = slots
                .into_iter()
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| {
                    layout_err(&manifest_path, format!("trial {trial} is incomplete"))
                })?;
            Ok(SweepRecord {
                plan,
                trial_index: trial,
                entries,
                meta: meta.clone(),
            })
        })
        .collect()
}

/// One row of `profile.csv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileRow {
    pub angle_deg: f64,
    pub auc_norm_mean: f64,
    pub auc_norm_std: f64,
    pub n_trials: usize,
}

pub fn profile_to_string(rows: &[ProfileRow]) -> String {
    let mut out = String::new();
    out.push_str(PROFILE_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{:.6},{:.12},{:.12},{}",
            r.angle_deg, r.auc_norm_mean, r.auc_norm_std, r.n_trials
        );
    }
    out
}

pub fn write_profile(rows: &[ProfileRow], path: &Path) -> Result<(), DataError> {
    fs::write(path, profile_to_string(rows)).map_err(io_err(path))
}

pub fn parse_profile(text: &str, path: &Path) -> Result<Vec<ProfileRow>, DataError> {
    let mut lines = numbered_lines(text);
    let header = lines.next().map(|(_, l)| l).unwrap_or("");
    if header != PROFILE_HEADER {
        return Err(DataError::MalformedHeader {
            path: path.to_path_buf(),
            expected: PROFILE_HEADER,
            found: header.chars().take(64).collect(),
        });
    }
    let rows = lines
        .map(|(line, row)| {
            let fields: Vec<&str> = row.split(',').collect();
            let [angle, mean, std, n] = fields.as_slice() else {
                return Err(parse_err(path, line, "expected 4 comma-separated fields"));
            };
            Ok(ProfileRow {
                angle_deg: parse_f64(angle, path, line, "angle")?,
                auc_norm_mean: parse_f64(mean, path, line, "auc_norm_mean")?,
                auc_norm_std: parse_f64(std, path, line, "auc_norm_std")?,
                n_trials: n
                    .trim()
                    .parse()
                    .map_err(|_| parse_err(path, line, format!("bad n_trials `{n}`")))?,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    if rows.is_empty() {
        return Err(layout_err(path, "profile has no rows"));
    }
    Ok(rows)
}

pub fn read_profile(path: &Path) -> Result<Vec<ProfileRow>, DataError> {
    parse_profile(&read_text(path)?, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("x.csv")
    }

    #[test]
    fn sci_format_matches_c() {
        assert_eq!(format_sci9(1.0), "1.000000000e+00");
        assert_eq!(format_sci9(-0.00123), "-1.230000000e-03");
        assert_eq!(format_sci9(6.02e23), "6.020000000e+23");
        assert_eq!(format_sci9(1e-120), "1.000000000e-120");
        assert_eq!(format_sci9(0.0), "0.000000000e+00");
    }

    #[test]
    fn spectrum_text_layout() {
        let s = Spectrum::new(vec![450.0, 450.5], vec![1.0, -0.25]).unwrap();
        assert_eq!(
            spectrum_to_string(&s),
            "wavelength_nm,intensity\n450.000000,1.000000000e+00\n450.500000,-2.500000000e-01\n"
        );
    }

    #[test]
    fn header_must_match() {
        let err = parse_spectrum("wavelength,intensity\n1,2\n2,3\n", p()).unwrap_err();
        assert!(matches!(err, DataError::MalformedHeader { .. }));
        let err = parse_spectrum("", p()).unwrap_err();
        assert!(matches!(err, DataError::MalformedHeader { .. }));
    }

    #[test]
    fn decreasing_wavelength_reports_line() {
        let text = "wavelength_nm,intensity\n500.0,1\n499.0,1\n";
        match parse_spectrum(text, p()).unwrap_err() {
            DataError::NonMonotonicWavelength { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn parse_errors_report_line() {
        for (text, want) in [
            ("wavelength_nm,intensity\n1,2\n2,x\n", 3),
            ("wavelength_nm,intensity\n1,2\n2\n", 3),
            ("wavelength_nm,intensity\n1,2,3\n", 2),
            ("wavelength_nm,intensity\n1,inf\n2,2\n", 2),
            ("wavelength_nm,intensity\n1,2\n", 2),
        ] {
            match parse_spectrum(text, p()).unwrap_err() {
                DataError::Parse { line, .. } => assert_eq!(line, want, "{text:?}"),
                e => panic!("unexpected {e}"),
            }
        }
    }

    #[test]
    fn crlf_is_tolerated() {
        let s = parse_spectrum("wavelength_nm,intensity\r\n1,2\r\n2,3\r\n", p()).unwrap();
        assert_eq!(s.intensities(), &[2.0, 3.0]);
    }

    #[test]
    fn meta_rejects_duplicates_and_unknown_keys() {
        let meta = RunMeta {
            surface: SurfaceModel::Flat,
            pivot: PivotGeometry::default(),
            optics: OpticalConfig::default(),
            master_seed: 3,
        };
        let plan = SweepPlan::default();
        let text = meta_to_string(&meta, &plan);
        let (back, plan_back) = parse_meta(&text, p()).unwrap();
        assert_eq!(back, meta);
        assert_eq!(plan_back, plan);

        let dup = format!("{text}seed=4\n");
        assert!(matches!(
            parse_meta(&dup, p()),
            Err(DataError::Meta { line: 21, .. })
        ));
        let unknown = format!("{text}colour=blue\n");
        assert!(matches!(
            parse_meta(&unknown, p()),
            Err(DataError::Meta { .. })
        ));
        let missing: String = text
            .lines()
            .filter(|l| !l.starts_with("kappa"))
            .map(|l| format!("{l}\n"))
            .collect();
        assert!(matches!(
            parse_meta(&missing, p()),
            Err(DataError::Meta { .. })
        ));
    }

    #[test]
    fn minimal_meta_uses_defaults() {
        let text = "schema_version=1\ngeometry=convex\nsphere_radius_mm=30\nworking_distance_mm=17\n\
                    seed=0\nnoise_sigma=0\nkappa=2\nstart_deg=-9\nstep_deg=1.8\nn_steps=11\ntrials=1\n";
        let (meta, plan) = parse_meta(text, p()).unwrap();
        assert_eq!(
            meta.surface,
            SurfaceModel::Sphere {
                radius_mm: 30.0,
                apex_distance_mm: 17.0
            }
        );
        assert_eq!(
            meta.optics.fluorophores,
            OpticalConfig::default().fluorophores
        );
        assert_eq!(plan.n_steps, 11);
    }

    #[test]
    fn profile_round_trip() {
        let rows = vec![
            ProfileRow {
                angle_deg: -1.8,
                auc_norm_mean: 0.95,
                auc_norm_std: 0.001,
                n_trials: 3,
            },
            ProfileRow {
                angle_deg: 0.0,
                auc_norm_mean: 1.0,
                auc_norm_std: 0.0,
                n_trials: 3,
            },
        ];
        let text = profile_to_string(&rows);
        assert!(text.starts_with("angle_deg,auc_norm_mean,auc_norm_std,n_trials\n-1.800000,"));
        assert_eq!(parse_profile(&text, p()).unwrap(), rows);
        assert!(parse_profile(PROFILE_HEADER, p()).is_err());
    }
}
