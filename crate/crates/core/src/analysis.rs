//! Turning recorded sweeps into a per-angle normalized AUC profile.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::dataio::ProfileRow;
use crate::scan::SweepRecord;
use crate::spectrum::{
    auc_profile, mean_and_population_std, profile_stats, run_pipeline, AucProfile, PipelineConfig,
    SpectralError, SweepStats,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("no records to analyze")]
    NoRecords,
    #[error("trial {trial} step {step} ({angle_deg} deg): {source}")]
    Spectrum {
        trial: u32,
        step: usize,
        angle_deg: f64,
        source: SpectralError,
    },
    #[error("trial {trial} does not share the angle grid of the first trial")]
    AngleMismatch { trial: u32 },
    #[error(transparent)]
    Profile(#[from] SpectralError),
}

/// How trial AUCs are max-normalized before averaging.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pooling {
    /// Each trial normalized by its own maximum.
    #[default]
    PerTrial,
    /// All trials normalized by the maximum over every trial.
    Pooled,
}

impl FromStr for Pooling {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "per-trial" => Ok(Pooling::PerTrial),
            "pooled" => Ok(Pooling::Pooled),
            other => Err(format!("unknown pooling `{other}` (per-trial|pooled)")),
        }
    }
}

impl fmt::Display for Pooling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pooling::PerTrial => "per-trial",
            Pooling::Pooled => "pooled",
        })
    }
}

/// Raw pipeline AUC for every entry of one trial.
pub fn trial_aucs(record: &SweepRecord, cfg: &PipelineConfig) -> Result<Vec<f64>, AnalysisError> {
    record
        .entries
        .iter()
        .enumerate()
        .map(|(step, (angle, s))| {
            run_pipeline(s, cfg).map_err(|source| AnalysisError::Spectrum {
                trial: record.trial_index,
                step,
                angle_deg: *angle,
                source,
            })
        })
        .collect()
}

/// Per-angle mean and spread of the normalized AUC over trials.
///
/// The mean profile is max-normalized once more at the end so its peak is
/// exactly 1; the spread is scaled by the same factor.
pub fn analyze_records(
    records: &[SweepRecord],
    cfg: &PipelineConfig,
    pooling: Pooling,
) -> Result<Vec<ProfileRow>, AnalysisError> {
    let first = records.first().ok_or(AnalysisError::NoRecords)?;
    let angles = first.angles();
    for r in records {
        if r.angles() != angles {
            return Err(AnalysisError::AngleMismatch {
                trial: r.trial_index,
            });
        }
    }

    let raw: Vec<Vec<f64>> = records
        .iter()
        .map(|r| trial_aucs(r, cfg))
        .collect::<Result<_, _>>()?;

    let normalized: Vec<Vec<f64>> = match pooling {
        Pooling::PerTrial => raw
            .iter()
            .map(|aucs| auc_profile(aucs, &angles).map(|p| p.auc_norm().to_vec()))
            .collect::<Result<_, _>>()?,
        Pooling::Pooled => {
            let pooled: Vec<f64> = raw.iter().flatten().copied().collect();
            let pooled_angles: Vec<f64> = (0..pooled.len()).map(|i| i as f64).collect();
            let p = auc_profile(&pooled, &pooled_angles)?;
            p.auc_norm()
                .chunks(angles.len())
                .map(<[f64]>::to_vec)
                .collect()
        }
    };

    let n_trials = records.len();
    let columns: Vec<(f64, f64)> = (0..angles.len())
        .map(|i| {
            let column: Vec<f64> = normalized.iter().map(|t| t[i]).collect();
            mean_and_population_std(&column)
        })
        .collect();
    let means: Vec<f64> = columns.iter().map(|c| c.0).collect();
    let renorm = auc_profile(&means, &angles)?;
    let max = means.iter().copied().fold(f64::MIN, f64::max);

    Ok(angles
        .iter()
        .zip(renorm.auc_norm())
        .zip(&columns)
        .map(|((&angle_deg, &mean), &(_, std))| ProfileRow {
            angle_deg,
            auc_norm_mean: mean,
            auc_norm_std: std / max,
            n_trials,
        })
        .collect())
}

/// Reads the mean column of a profile back as an [`AucProfile`].
pub fn rows_to_profile(rows: &[ProfileRow]) -> Result<AucProfile, SpectralError> {
    let angles: Vec<f64> = rows.iter().map(|r| r.angle_deg).collect();
    let means: Vec<f64> = rows.iter().map(|r| r.auc_norm_mean).collect();
    auc_profile(&means, &angles)
}

pub fn rows_stats(rows: &[ProfileRow], threshold: f64) -> Result<SweepStats, SpectralError> {
    profile_stats(&rows_to_profile(rows)?, threshold)
}

/// The one-line summary printed by `report`.
pub fn format_report(stats: &SweepStats) -> String {
    format!(
        "mean={:.2} std={:.2} span95=±{:.1}deg",
        stats.mean_auc, stats.std_auc, stats.span95_deg
    )
}
