//! Fitting the angular exponent slope and multi-seed summaries.
//!
//! Procedure: with noise off, bisect `kappa` until the normalized AUC
//! profile of the default flat sweep has a population standard deviation
//! of [`FLAT_STD_TARGET`]. The noise floor is held at
//! [`crate::optics::DEFAULT_NOISE_SIGMA`]. Convex runs reuse the same
//! optics unchanged.

use thiserror::Error;

use crate::analysis::{analyze_records, rows_to_profile, trial_aucs, AnalysisError, Pooling};
use crate::dataio::ProfileRow;
use crate::scan::{run_sweep, run_triplicate, RunMeta, ScanError, SimulatedPort, SweepPlan};
use crate::spectrum::{
    auc_profile, profile_stats, AucProfile, PipelineConfig, SpectralError, SPAN_THRESHOLD,
};

/// Across-angle dispersion of the flat-phantom profile.
pub const FLAT_STD_TARGET: f64 = 0.01;

const KAPPA_SEARCH_MAX: f64 = 50.0;
const KAPPA_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibrationError {
    #[error(transparent)]
    Scan(#[from] ScanError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("target std {target} is not reachable for kappa in [0, {KAPPA_SEARCH_MAX}]")]
    NotBracketed { target: f64 },
    #[error("no seeds given")]
    NoSeeds,
}

/// Single noiseless sweep, normalized.
pub fn noiseless_profile(
    meta: &RunMeta,
    plan: &SweepPlan,
    cfg: &PipelineConfig,
) -> Result<AucProfile, CalibrationError> {
    let optics = meta.optics.clone().with_noise_sigma(0.0);
    let mut port = SimulatedPort::new(optics, meta.pivot, meta.surface, 0, 1);
    let record = run_sweep(plan, &mut port, 1)?;
    let aucs = trial_aucs(&record, cfg)?;
    Ok(auc_profile(&aucs, &record.angles())?)
}

fn profile_std(
    meta: &RunMeta,
    plan: &SweepPlan,
    cfg: &PipelineConfig,
    kappa: f64,
) -> Result<f64, CalibrationError> {
    let mut m = meta.clone();
    m.optics.angular.kappa = kappa;
    Ok(profile_stats(&noiseless_profile(&m, plan, cfg)?, SPAN_THRESHOLD)?.std_auc)
}

/// Bisects `kappa` so the noiseless profile of `meta` has the given std.
pub fn calibrate_kappa(
    meta: &RunMeta,
    plan: &SweepPlan,
    cfg: &PipelineConfig,
    target_std: f64,
) -> Result<f64, CalibrationError> {
    let mut lo = 0.0;
    let mut hi = KAPPA_SEARCH_MAX;
    if profile_std(meta, plan, cfg, lo)? > target_std
        || profile_std(meta, plan, cfg, hi)? < target_std
    {
        return Err(CalibrationError::NotBracketed { target: target_std });
    }
    while hi - lo > KAPPA_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if profile_std(meta, plan, cfg, mid)? < target_std {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Statistics of simulated triplicate runs, averaged over seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedSummary {
    pub seeds: usize,
    /// Mean over seeds of each run's profile mean.
    pub mean_auc: f64,
    /// Mean over seeds of each run's across-angle std.
    pub std_auc: f64,
    /// span95 of the seed-averaged profile.
    pub span95_deg: f64,
    pub min_span95_deg: f64,
    pub max_span95_deg: f64,
    /// Seed-averaged profile, renormalized to a peak of 1.
    pub profile: Vec<ProfileRow>,
}

pub fn seed_averaged_stats(
    template: &RunMeta,
    plan: &SweepPlan,
    cfg: &PipelineConfig,
    pooling: Pooling,
    seeds: impl IntoIterator<Item = u64>,
) -> Result<SeedSummary, CalibrationError> {
    let mut runs = Vec::new();
    for seed in seeds {
        let meta = RunMeta {
            master_seed: seed,
            ..template.clone()
        };
        let records = run_triplicate(plan, SimulatedPort::factory(&meta), seed)?;
        let rows = analyze_records(&records, cfg, pooling)?;
        let stats = profile_stats(&rows_to_profile(&rows)?, SPAN_THRESHOLD)?;
        runs.push((rows, stats));
    }
    if runs.is_empty() {
        return Err(CalibrationError::NoSeeds);
    }
    let n = runs.len() as f64;
    let mean_auc = runs.iter().map(|(_, s)| s.mean_auc).sum::<f64>() / n;
    let std_auc = runs.iter().map(|(_, s)| s.std_auc).sum::<f64>() / n;
    let spans = runs.iter().map(|(_, s)| s.span95_deg);
    let min_span95_deg = spans.clone().fold(f64::INFINITY, f64::min);
    let max_span95_deg = spans.fold(f64::NEG_INFINITY, f64::max);

    let first = &runs[0].0;
    let avg: Vec<f64> = (0..first.len())
        .map(|i| {
            runs.iter()
                .map(|(rows, _)| rows[i].auc_norm_mean)
                .sum::<f64>()
                / n
        })
        .collect();
    let angles: Vec<f64> = first.iter().map(|r| r.angle_deg).collect();
    let averaged = auc_profile(&avg, &angles)?;
    let span95_deg = profile_stats(&averaged, SPAN_THRESHOLD)?.span95_deg;
    let profile = angles
        .iter()
        .zip(averaged.auc_norm())
        .map(|(&angle_deg, &m)| ProfileRow {
            angle_deg,
            auc_norm_mean: m,
            auc_norm_std: 0.0,
            n_trials: first[0].n_trials,
        })
        .collect();

    Ok(SeedSummary {
        seeds: runs.len(),
        mean_auc,
        std_auc,
        span95_deg,
        min_span95_deg,
        max_span95_deg,
        profile,
    })
}
