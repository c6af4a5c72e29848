//! Spectra and the normalize -> smooth -> integrate pipeline.
//!
//! A spectrum is normalized by its largest intensity strictly above a
//! cutoff wavelength (the dichroic edge), smoothed with a two-sample
//! forward average, and integrated with the trapezoidal rule over a band.
//! Per-angle areas are then max-normalized into an [`AucProfile`].

use thiserror::Error;

/// Slack used when deciding whether a grid sample sits on a band edge.
const EDGE_TOL_NM: f64 = 1e-9;

/// Slack used when grouping mirrored sweep angles by magnitude.
const ANGLE_TOL_DEG: f64 = 1e-9;

/// Denominator floor for [`band_ratio`].
pub const RATIO_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("wavelength and intensity lengths differ ({wavelengths} vs {intensities})")]
    LengthMismatch {
        wavelengths: usize,
        intensities: usize,
    },
    #[error("a spectrum needs at least 2 samples, got {0}")]
    TooShort(usize),
    #[error("wavelengths must be strictly increasing (sample {index})")]
    NotIncreasing { index: usize },
    #[error("non-finite value at sample {index}")]
    NonFinite { index: usize },
    #[error("no sample above the {cutoff_nm} nm cutoff")]
    NoSampleAboveCutoff { cutoff_nm: f64 },
    #[error("largest intensity above the cutoff is not positive ({max})")]
    NonPositiveMax { max: f64 },
    #[error("fewer than 2 samples in band [{lo_nm}, {hi_nm}] nm")]
    EmptyBand { lo_nm: f64, hi_nm: f64 },
    #[error("invalid band [{lo_nm}, {hi_nm}] nm")]
    InvalidBand { lo_nm: f64, hi_nm: f64 },
    #[error("band ratio denominator is degenerate ({0})")]
    DegenerateDenominator(f64),
    #[error("AUC values must be positive (index {index}: {value})")]
    NonPositiveAuc { index: usize, value: f64 },
    #[error("angle and AUC sequences differ in length ({angles} vs {aucs})")]
    ProfileLengthMismatch { angles: usize, aucs: usize },
    #[error("profile is empty")]
    EmptyProfile,
    #[error("profile angles must be strictly increasing (index {index})")]
    AnglesNotIncreasing { index: usize },
    #[error("threshold must lie in (0, 1], got {0}")]
    InvalidThreshold(f64),
    #[error("invalid pipeline configuration: {0}")]
    InvalidConfig(String),
}

/// Emission spectrum on an ascending wavelength grid.
///
/// Intensities are in arbitrary units and may be negative (baseline
/// subtraction, additive noise); only the grid is constrained.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    wavelengths_nm: Vec<f64>,
    intensities: Vec<f64>,
}

impl Spectrum {
    pub fn new(wavelengths_nm: Vec<f64>, intensities: Vec<f64>) -> Result<Self, SpectralError> {
        if wavelengths_nm.len() != intensities.len() {
            return Err(SpectralError::LengthMismatch {
                wavelengths: wavelengths_nm.len(),
                intensities: intensities.len(),
            });
        }
        if wavelengths_nm.len() < 2 {
            return Err(SpectralError::TooShort(wavelengths_nm.len()));
        }
        for (index, (w, i)) in wavelengths_nm.iter().zip(&intensities).enumerate() {
            if !w.is_finite() || !i.is_finite() {
                return Err(SpectralError::NonFinite { index });
            }
        }
        if let Some(index) = wavelengths_nm.windows(2).position(|w| w[1] <= w[0]) {
            return Err(SpectralError::NotIncreasing { index: index + 1 });
        }
        Ok(Self {
            wavelengths_nm,
            intensities,
        })
    }

    pub fn wavelengths_nm(&self) -> &[f64] {
        &self.wavelengths_nm
    }

    pub fn intensities(&self) -> &[f64] {
        &self.intensities
    }

    pub fn len(&self) -> usize {
        self.intensities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intensities.is_empty()
    }

    /// Pointwise multiplication of the intensities.
    pub fn scaled(&self, factor: f64) -> Result<Self, SpectralError> {
        self.with_intensities(self.intensities.iter().map(|v| v * factor).collect())
    }

    /// Same grid, new intensities. Re-validates finiteness.
    pub fn with_intensities(&self, intensities: Vec<f64>) -> Result<Self, SpectralError> {
        Spectrum::new(self.wavelengths_nm.clone(), intensities)
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.wavelengths_nm
            .iter()
            .copied()
            .zip(self.intensities.iter().copied())
    }

    /// Wavelength of the largest intensity (first one on ties).
    pub fn argmax_nm(&self) -> f64 {
        let mut best = 0;
        for (i, v) in self.intensities.iter().enumerate() {
            if *v > self.intensities[best] {
                best = i;
            }
        }
        self.wavelengths_nm[best]
    }
}

/// Settings for [`run_pipeline`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub norm_cutoff_nm: f64,
    pub auc_lo_nm: f64,
    pub auc_hi_nm: f64,
    pub smooth_window: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            norm_cutoff_nm: 450.0,
            auc_lo_nm: 450.0,
            auc_hi_nm: 750.0,
            smooth_window: 2,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), SpectralError> {
        let finite = [self.norm_cutoff_nm, self.auc_lo_nm, self.auc_hi_nm]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(SpectralError::InvalidConfig("non-finite wavelength".into()));
        }
        if self.auc_lo_nm >= self.auc_hi_nm {
            return Err(SpectralError::InvalidConfig(format!(
                "AUC band [{}, {}] is empty",
                self.auc_lo_nm, self.auc_hi_nm
            )));
        }
        if self.smooth_window != 2 {
            return Err(SpectralError::InvalidConfig(format!(
                "smoothing window must be 2, got {}",
                self.smooth_window
            )));
        }
        Ok(())
    }
}

/// Divides every intensity by the largest intensity at wavelengths strictly
/// above `cutoff_nm`.
pub fn normalize_above_cutoff(s: &Spectrum, cutoff_nm: f64) -> Result<Spectrum, SpectralError> {
    let max = s
        .iter()
        .filter(|(w, _)| *w > cutoff_nm)
        .map(|(_, i)| i)
        .fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |a| a.max(v)))
        })
        .ok_or(SpectralError::NoSampleAboveCutoff { cutoff_nm })?;
    if max <= 0.0 {
        return Err(SpectralError::NonPositiveMax { max });
    }
    s.with_intensities(s.intensities.iter().map(|v| v / max).collect())
}

/// Forward pair average: `y[i] = (x[i] + x[i+1]) / 2`, last sample kept.
pub fn smooth_window2(s: &Spectrum) -> Spectrum {
    let x = &s.intensities;
    let mut y: Vec<f64> = x.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect();
    y.push(x[x.len() - 1]);
    Spectrum {
        wavelengths_nm: s.wavelengths_nm.clone(),
        intensities: y,
    }
}

/// Index range of grid samples with `lo_nm <= λ <= hi_nm`.
fn band_indices(s: &Spectrum, lo_nm: f64, hi_nm: f64) -> Result<(usize, usize), SpectralError> {
    if !(lo_nm.is_finite() && hi_nm.is_finite()) || lo_nm >= hi_nm {
        return Err(SpectralError::InvalidBand { lo_nm, hi_nm });
    }
    let w = &s.wavelengths_nm;
    let start = w.partition_point(|&v| v < lo_nm - EDGE_TOL_NM);
    let end = w.partition_point(|&v| v <= hi_nm + EDGE_TOL_NM);
    if end < start + 2 {
        return Err(SpectralError::EmptyBand { lo_nm, hi_nm });
    }
    Ok((start, end))
}

/// Trapezoidal integral over the grid samples inside `[lo_nm, hi_nm]`.
///
/// No interpolation happens at the band edges: the integral starts and ends
/// on the first and last enclosed samples.
pub fn trapz_band(s: &Spectrum, lo_nm: f64, hi_nm: f64) -> Result<f64, SpectralError> {
    let (start, end) = band_indices(s, lo_nm, hi_nm)?;
    let w = &s.wavelengths_nm[start..end];
    let y = &s.intensities[start..end];
    Ok(w.windows(2)
        .zip(y.windows(2))
        .map(|(w, y)| (w[1] - w[0]) * (y[0] + y[1]) / 2.0)
        .sum())
}

/// Normalize, smooth, then integrate one spectrum.
pub fn run_pipeline(s: &Spectrum, cfg: &PipelineConfig) -> Result<f64, SpectralError> {
    cfg.validate()?;
    let normalized = normalize_above_cutoff(s, cfg.norm_cutoff_nm)?;
    let smoothed = smooth_window2(&normalized);
    trapz_band(&smoothed, cfg.auc_lo_nm, cfg.auc_hi_nm)
}

/// Ratio of band areas, by default the NADH band over the FAD band.
pub fn band_ratio(
    s: &Spectrum,
    band_a: (f64, f64),
    band_b: (f64, f64),
) -> Result<f64, SpectralError> {
    let numerator = trapz_band(s, band_a.0, band_a.1)?;
    let denominator = trapz_band(s, band_b.0, band_b.1)?;
    if denominator <= RATIO_EPSILON {
        return Err(SpectralError::DegenerateDenominator(denominator));
    }
    Ok(numerator / denominator)
}

pub const NADH_BAND_NM: (f64, f64) = (450.0, 500.0);
pub const FAD_BAND_NM: (f64, f64) = (500.0, 570.0);

/// Per-angle AUC values, max-normalized so the largest entry is exactly 1.
#[derive(Debug, Clone, PartialEq)]
pub struct AucProfile {
    angles_deg: Vec<f64>,
    auc_raw: Vec<f64>,
    auc_norm: Vec<f64>,
}

impl AucProfile {
    pub fn angles_deg(&self) -> &[f64] {
        &self.angles_deg
    }

    pub fn auc_raw(&self) -> &[f64] {
        &self.auc_raw
    }

    pub fn auc_norm(&self) -> &[f64] {
        &self.auc_norm
    }

    pub fn len(&self) -> usize {
        self.angles_deg.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles_deg.is_empty()
    }
}

pub fn auc_profile(aucs_raw: &[f64], angles_deg: &[f64]) -> Result<AucProfile, SpectralError> {
    if aucs_raw.len() != angles_deg.len() {
        return Err(SpectralError::ProfileLengthMismatch {
            angles: angles_deg.len(),
            aucs: aucs_raw.len(),
        });
    }
    if aucs_raw.is_empty() {
        return Err(SpectralError::EmptyProfile);
    }
    if let Some((index, &value)) = aucs_raw
        .iter()
        .enumerate()
        .find(|(_, v)| !(v.is_finite() && **v > 0.0))
    {
        return Err(SpectralError::NonPositiveAuc { index, value });
    }
    if let Some((index, _)) = angles_deg.iter().enumerate().find(|(_, a)| !a.is_finite()) {
        return Err(SpectralError::NonFinite { index });
    }
    if let Some(index) = angles_deg.windows(2).position(|w| w[1] <= w[0]) {
        return Err(SpectralError::AnglesNotIncreasing { index: index + 1 });
    }
    let max = aucs_raw.iter().copied().fold(f64::MIN, f64::max);
    Ok(AucProfile {
        angles_deg: angles_deg.to_vec(),
        auc_raw: aucs_raw.to_vec(),
        auc_norm: aucs_raw.iter().map(|v| v / max).collect(),
    })
}

/// Summary of a normalized AUC profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepStats {
    pub mean_auc: f64,
    /// Population standard deviation.
    pub std_auc: f64,
    /// Half-width (deg) of the contiguous region about 0° at or above the threshold.
    pub span95_deg: f64,
}

pub const SPAN_THRESHOLD: f64 = 0.95;

pub fn profile_stats(p: &AucProfile, threshold: f64) -> Result<SweepStats, SpectralError> {
    if p.is_empty() {
        return Err(SpectralError::EmptyProfile);
    }
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(SpectralError::InvalidThreshold(threshold));
    }
    let (mean_auc, std_auc) = mean_and_population_std(&p.auc_norm);
    Ok(SweepStats {
        mean_auc,
        std_auc,
        span95_deg: contiguous_span(&p.angles_deg, &p.auc_norm, threshold),
    })
}

pub fn mean_and_population_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn contiguous_span(angles_deg: &[f64], values: &[f64], threshold: f64) -> f64 {
    let first_failure = angles_deg
        .iter()
        .zip(values)
        .filter(|(_, v)| **v < threshold)
        .map(|(a, _)| a.abs())
        .fold(f64::INFINITY, f64::min);
    angles_deg
        .iter()
        .map(|a| a.abs())
        .filter(|a| *a < first_failure - ANGLE_TOL_DEG)
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spec(w: &[f64], i: &[f64]) -> Spectrum {
        Spectrum::new(w.to_vec(), i.to_vec()).unwrap()
    }

    fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
        let n = ((hi - lo) / step).round() as usize;
        (0..=n).map(|i| lo + i as f64 * step).collect()
    }

    #[test]
    fn spectrum_rejects_bad_grids() {
        assert!(matches!(
            Spectrum::new(vec![1.0], vec![1.0]),
            Err(SpectralError::TooShort(1))
        ));
        assert!(matches!(
            Spectrum::new(vec![1.0, 2.0], vec![1.0]),
            Err(SpectralError::LengthMismatch { .. })
        ));
        assert_eq!(
            Spectrum::new(vec![1.0, 3.0, 2.0], vec![0.0; 3]),
            Err(SpectralError::NotIncreasing { index: 2 })
        );
        assert_eq!(
            Spectrum::new(vec![1.0, 2.0], vec![0.0, f64::NAN]),
            Err(SpectralError::NonFinite { index: 1 })
        );
    }

    #[test]
    fn normalize_divides_by_max_above_cutoff() {
        let s = spec(&[440.0, 460.0, 525.0], &[0.2, 2.0, 1.0]);
        let n = normalize_above_cutoff(&s, 450.0).unwrap();
        assert_eq!(n.intensities(), &[0.1, 1.0, 0.5]);
        assert_eq!(n.wavelengths_nm(), s.wavelengths_nm());
        assert_eq!(normalize_above_cutoff(&n, 450.0).unwrap(), n);
    }

    #[test]
    fn normalize_errors() {
        let s = spec(&[400.0, 420.0], &[1.0, 2.0]);
        assert!(matches!(
            normalize_above_cutoff(&s, 450.0),
            Err(SpectralError::NoSampleAboveCutoff { .. })
        ));
        let s = spec(&[440.0, 460.0, 470.0], &[5.0, -1.0, 0.0]);
        assert_eq!(
            normalize_above_cutoff(&s, 450.0),
            Err(SpectralError::NonPositiveMax { max: 0.0 })
        );
    }

    #[test]
    fn cutoff_is_strict() {
        // the sample sitting exactly on the cutoff does not count
        let s = spec(&[450.0, 451.0], &[10.0, 2.0]);
        let n = normalize_above_cutoff(&s, 450.0).unwrap();
        assert_eq!(n.intensities(), &[5.0, 1.0]);
    }

    #[test]
    fn smoothing_examples() {
        let w = [1.0, 2.0, 3.0, 4.0];
        let run = |i: &[f64]| smooth_window2(&spec(&w, i)).intensities().to_vec();
        assert_eq!(run(&[1.0, 1.0, 1.0, 1.0]), vec![1.0, 1.0, 1.0, 1.0]);
        assert_eq!(run(&[1.0, 3.0, 5.0, 7.0]), vec![2.0, 4.0, 6.0, 7.0]);
        assert_eq!(run(&[0.0, 4.0, 0.0, 0.0]), vec![2.0, 2.0, 0.0, 0.0]);
    }

    #[test]
    fn trapz_constant_and_ramp() {
        let w = grid(450.0, 750.0, 0.5);
        let ones = vec![1.0; w.len()];
        let ramp: Vec<f64> = w.iter().map(|x| (x - 450.0) / 300.0).collect();
        assert_relative_eq!(
            trapz_band(&spec(&w, &ones), 450.0, 750.0).unwrap(),
            300.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            trapz_band(&spec(&w, &ramp), 450.0, 750.0).unwrap(),
            150.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn trapz_band_errors() {
        let s = spec(&[400.0, 401.0, 402.0], &[1.0, 1.0, 1.0]);
        assert!(matches!(
            trapz_band(&s, 401.5, 401.9),
            Err(SpectralError::EmptyBand { .. })
        ));
        assert!(matches!(
            trapz_band(&s, 402.0, 400.0),
            Err(SpectralError::InvalidBand { .. })
        ));
        assert_eq!(trapz_band(&s, 401.0, 402.0).unwrap(), 1.0);
    }

    #[test]
    fn pipeline_on_constant_spectrum() {
        let w = grid(400.0, 800.0, 0.5);
        let s = spec(&w, &vec![5.0; w.len()]);
        let auc = run_pipeline(&s, &PipelineConfig::default()).unwrap();
        assert_relative_eq!(auc, 300.0, max_relative = 1e-12);
        let scaled = s.scaled(3.7).unwrap();
        let auc2 = run_pipeline(&scaled, &PipelineConfig::default()).unwrap();
        assert_relative_eq!(auc, auc2, max_relative = 1e-12);
    }

    #[test]
    fn pipeline_rejects_bad_config() {
        let w = grid(400.0, 800.0, 0.5);
        let s = spec(&w, &vec![5.0; w.len()]);
        let cfg = PipelineConfig {
            smooth_window: 3,
            ..Default::default()
        };
        assert!(matches!(
            run_pipeline(&s, &cfg),
            Err(SpectralError::InvalidConfig(_))
        ));
        let cfg = PipelineConfig {
            auc_lo_nm: 750.0,
            auc_hi_nm: 450.0,
            ..Default::default()
        };
        assert!(run_pipeline(&s, &cfg).is_err());
    }

    #[test]
    fn band_ratio_symmetry_and_degenerate() {
        let w = grid(430.0, 570.0, 0.5);
        let i: Vec<f64> = w
            .iter()
            .map(|x| (-(x - 500.0) * (x - 500.0) / 800.0).exp())
            .collect();
        let s = spec(&w, &i);
        let r = band_ratio(&s, (450.0, 500.0), (500.0, 550.0)).unwrap();
        assert_relative_eq!(r, 1.0, max_relative = 1e-12);

        let z: Vec<f64> = w
            .iter()
            .map(|x| if *x < 500.0 { 1.0 } else { 0.0 })
            .collect();
        let sz = spec(&w, &z);
        assert!(matches!(
            band_ratio(&sz, NADH_BAND_NM, FAD_BAND_NM),
            Err(SpectralError::DegenerateDenominator(_))
        ));
    }

    #[test]
    fn auc_profile_examples() {
        let p = auc_profile(&[300.0, 285.0, 270.0], &[-1.8, 0.0, 1.8]).unwrap();
        assert_eq!(p.auc_norm(), &[1.0, 0.95, 0.9]);
        let p = auc_profile(&[7.0, 7.0], &[0.0, 1.0]).unwrap();
        assert_eq!(p.auc_norm(), &[1.0, 1.0]);
        let p = auc_profile(&[42.0], &[0.0]).unwrap();
        assert_eq!(p.auc_norm(), &[1.0]);
    }

    #[test]
    fn auc_profile_errors() {
        assert!(matches!(
            auc_profile(&[1.0, 0.0], &[0.0, 1.0]),
            Err(SpectralError::NonPositiveAuc { index: 1, .. })
        ));
        assert!(matches!(
            auc_profile(&[1.0], &[0.0, 1.0]),
            Err(SpectralError::ProfileLengthMismatch { .. })
        ));
        assert_eq!(auc_profile(&[], &[]), Err(SpectralError::EmptyProfile));
        assert!(matches!(
            auc_profile(&[1.0, 1.0], &[1.0, 0.0]),
            Err(SpectralError::AnglesNotIncreasing { index: 1 })
        ));
    }

    #[test]
    fn stats_examples() {
        let p = auc_profile(&[0.95, 1.0, 0.95], &[-1.8, 0.0, 1.8]).unwrap();
        let s = profile_stats(&p, 0.95).unwrap();
        assert!((s.mean_auc - 0.9667).abs() < 1e-4);
        assert_eq!(s.span95_deg, 1.8);

        let angles: Vec<f64> = (0..21).map(|i| -18.0 + i as f64 * 1.8).collect();
        let p = auc_profile(&[1.0; 21], &angles).unwrap();
        let s = profile_stats(&p, 0.95).unwrap();
        assert_eq!((s.mean_auc, s.std_auc, s.span95_deg), (1.0, 0.0, 18.0));

        let p = auc_profile(&[0.9, 1.0, 0.9], &[-1.8, 0.0, 1.8]).unwrap();
        assert_eq!(profile_stats(&p, 0.95).unwrap().span95_deg, 0.0);
    }

    #[test]
    fn span_is_contiguous() {
        let angles = [-3.6, -1.8, 0.0, 1.8, 3.6];
        // one side dips at 1.8, the far angles recover
        let p = auc_profile(&[1.0, 1.0, 1.0, 0.9, 1.0], &angles).unwrap();
        assert_eq!(profile_stats(&p, 0.95).unwrap().span95_deg, 0.0);
        let p = auc_profile(&[0.9, 1.0, 1.0, 1.0, 1.0], &angles).unwrap();
        assert_eq!(profile_stats(&p, 0.95).unwrap().span95_deg, 1.8);
    }

    #[test]
    fn stats_threshold_validation() {
        let p = auc_profile(&[1.0], &[0.0]).unwrap();
        assert!(profile_stats(&p, 0.0).is_err());
        assert!(profile_stats(&p, 1.5).is_err());
        assert!(profile_stats(&p, 1.0).is_ok());
    }
}
