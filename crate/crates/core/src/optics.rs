//! Forward model for angle-dependent emission spectra.
//!
//! Emission is a sum of Gaussian fluorophore lines plus a flat baseline,
//! gated by a logistic dichroic edge. Tilting the beam attenuates the
//! signal by `cos(aoi)^k(λ)`, where `k` grows linearly with wavelength at
//! slope `kappa`. With `kappa = 0` this is a pure Lambert cosine, which
//! per-spectrum normalization cancels exactly; `kappa > 0` suppresses the
//! long-wavelength (FAD) shoulder relative to the NADH peak and makes the
//! normalized AUC fall with angle.

use std::f64::consts::FRAC_PI_2;

use thiserror::Error;

use crate::rng::SimRng;
use crate::spectrum::Spectrum;

/// Value fixed by `calibration::calibrate_kappa` against the flat-phantom
/// dispersion target; see the tests there.
pub const DEFAULT_KAPPA: f64 = 4.935;

/// Instrument noise floor, about 0.5% of the NADH peak.
pub const DEFAULT_NOISE_SIGMA: f64 = 0.005;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OpticsError {
    #[error("angle of incidence {aoi_rad} rad is outside [0, pi/2)")]
    AoiOutOfRange { aoi_rad: f64 },
    #[error("invalid optical configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fluorophore {
    pub name: String,
    pub center_nm: f64,
    pub sigma_nm: f64,
    pub amplitude: f64,
}

impl Fluorophore {
    pub fn new(name: impl Into<String>, center_nm: f64, sigma_nm: f64, amplitude: f64) -> Self {
        Self {
            name: name.into(),
            center_nm,
            sigma_nm,
            amplitude,
        }
    }

    pub fn nadh() -> Self {
        Self::new("NADH", 460.0, 30.0, 1.0)
    }

    pub fn fad() -> Self {
        Self::new("FAD", 525.0, 35.0, 0.8)
    }

    pub fn line(&self, wavelength_nm: f64) -> f64 {
        let z = (wavelength_nm - self.center_nm) / self.sigma_nm;
        self.amplitude * (-0.5 * z * z).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DichroicCurve {
    pub cutoff_nm: f64,
    pub transition_width_nm: f64,
}

impl Default for DichroicCurve {
    fn default() -> Self {
        Self {
            cutoff_nm: 450.0,
            transition_width_nm: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngularResponse {
    /// Slope of the cosine exponent across the 450-750 nm band.
    pub kappa: f64,
}

impl Default for AngularResponse {
    fn default() -> Self {
        Self {
            kappa: DEFAULT_KAPPA,
        }
    }
}

/// Uniform wavelength grid `lo, lo + step, ..., hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WavelengthGrid {
    pub lo_nm: f64,
    pub hi_nm: f64,
    pub step_nm: f64,
}

impl Default for WavelengthGrid {
    fn default() -> Self {
        Self {
            lo_nm: 400.0,
            hi_nm: 800.0,
            step_nm: 0.5,
        }
    }
}

impl WavelengthGrid {
    pub fn new(lo_nm: f64, hi_nm: f64, step_nm: f64) -> Result<Self, OpticsError> {
        let g = Self {
            lo_nm,
            hi_nm,
            step_nm,
        };
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<(), OpticsError> {
        let ok = self.lo_nm.is_finite()
            && self.hi_nm.is_finite()
            && self.step_nm.is_finite()
            && self.step_nm > 0.0
            && self.hi_nm > self.lo_nm;
        if !ok {
            return Err(OpticsError::InvalidConfig(format!(
                "bad wavelength grid {}..{} step {}",
                self.lo_nm, self.hi_nm, self.step_nm
            )));
        }
        let steps = (self.hi_nm - self.lo_nm) / self.step_nm;
        if (steps - steps.round()).abs() > 1e-6 {
            return Err(OpticsError::InvalidConfig(format!(
                "grid step {} does not divide {}..{}",
                self.step_nm, self.lo_nm, self.hi_nm
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        ((self.hi_nm - self.lo_nm) / self.step_nm).round() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Sample positions by index multiplication, so the ends land exactly.
    pub fn wavelengths(&self) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                if i + 1 == n {
                    self.hi_nm
                } else {
                    self.lo_nm + i as f64 * self.step_nm
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpticalConfig {
    pub excitation_nm: f64,
    pub fluorophores: Vec<Fluorophore>,
    pub dichroic: DichroicCurve,
    pub angular: AngularResponse,
    pub noise_sigma: f64,
    pub baseline: f64,
    pub grid: WavelengthGrid,
}

impl Default for OpticalConfig {
    fn default() -> Self {
        Self {
            excitation_nm: 405.0,
            fluorophores: vec![Fluorophore::nadh(), Fluorophore::fad()],
            dichroic: DichroicCurve::default(),
            angular: AngularResponse::default(),
            noise_sigma: DEFAULT_NOISE_SIGMA,
            baseline: 0.0,
            grid: WavelengthGrid::default(),
        }
    }
}

impl OpticalConfig {
    /// Defaults with noise switched off.
    pub fn noiseless() -> Self {
        Self {
            noise_sigma: 0.0,
            ..Self::default()
        }
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.angular.kappa = kappa;
        self
    }

    pub fn with_noise_sigma(mut self, noise_sigma: f64) -> Self {
        self.noise_sigma = noise_sigma;
        self
    }

    pub fn validate(&self) -> Result<(), OpticsError> {
        let bad = |msg: String| Err(OpticsError::InvalidConfig(msg));
        self.grid.validate()?;
        if self.grid.lo_nm > 450.0 || self.grid.hi_nm < 750.0 {
            return bad("wavelength grid must cover 450-750 nm".into());
        }
        for f in &self.fluorophores {
            if !(f.sigma_nm.is_finite() && f.sigma_nm > 0.0) {
                return bad(format!("{}: sigma must be positive", f.name));
            }
            if !(f.amplitude.is_finite() && f.amplitude >= 0.0) {
                return bad(format!("{}: amplitude must be non-negative", f.name));
            }
            if !(f.center_nm >= self.grid.lo_nm && f.center_nm <= self.grid.hi_nm) {
                return bad(format!("{}: center outside the wavelength grid", f.name));
            }
        }
        let d = &self.dichroic;
        if !(d.transition_width_nm.is_finite() && d.transition_width_nm > 0.0) {
            return bad("dichroic transition width must be positive".into());
        }
        if !d.cutoff_nm.is_finite() {
            return bad("dichroic cutoff must be finite".into());
        }
        if !(self.excitation_nm.is_finite() && self.excitation_nm < d.cutoff_nm) {
            return bad("excitation must sit below the dichroic cutoff".into());
        }
        if !(self.angular.kappa.is_finite() && self.angular.kappa >= 0.0) {
            return bad(format!(
                "kappa must be finite and >= 0, got {}",
                self.angular.kappa
            ));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return bad(format!(
                "noise sigma must be >= 0, got {}",
                self.noise_sigma
            ));
        }
        if !(self.baseline.is_finite() && self.baseline >= 0.0) {
            return bad(format!("baseline must be >= 0, got {}", self.baseline));
        }
        Ok(())
    }
}

/// Logistic transmittance of the dichroic edge.
pub fn dichroic_transmittance(wavelength_nm: f64, d: &DichroicCurve) -> f64 {
    1.0 / (1.0 + (-(wavelength_nm - d.cutoff_nm) / d.transition_width_nm).exp())
}

/// Emission at normal incidence, after the dichroic.
pub fn base_emission(wavelength_nm: f64, cfg: &OpticalConfig) -> f64 {
    let lines: f64 = cfg.fluorophores.iter().map(|f| f.line(wavelength_nm)).sum();
    (lines + cfg.baseline) * dichroic_transmittance(wavelength_nm, &cfg.dichroic)
}

/// Cosine exponent at a given wavelength, never below 1.
pub fn cosine_exponent(wavelength_nm: f64, a: &AngularResponse) -> f64 {
    (1.0 + a.kappa * (wavelength_nm - 450.0) / 300.0).max(1.0)
}

pub fn angular_attenuation(
    wavelength_nm: f64,
    aoi_rad: f64,
    a: &AngularResponse,
) -> Result<f64, OpticsError> {
    check_aoi(aoi_rad)?;
    Ok(aoi_rad.cos().powf(cosine_exponent(wavelength_nm, a)))
}

fn check_aoi(aoi_rad: f64) -> Result<(), OpticsError> {
    if (0.0..FRAC_PI_2).contains(&aoi_rad) {
        Ok(())
    } else {
        Err(OpticsError::AoiOutOfRange { aoi_rad })
    }
}

/// One simulated acquisition on the configured grid.
///
/// Noise is drawn sample by sample, in grid order, only when
/// `noise_sigma > 0`.
pub fn synthesize_spectrum(
    cfg: &OpticalConfig,
    aoi_rad: f64,
    rng: &mut SimRng,
) -> Result<Spectrum, OpticsError> {
    cfg.validate()?;
    check_aoi(aoi_rad)?;
    let cos = aoi_rad.cos();
    let wavelengths = cfg.grid.wavelengths();
    let intensities = wavelengths
        .iter()
        .map(|&w| {
            let clean = base_emission(w, cfg) * cos.powf(cosine_exponent(w, &cfg.angular));
            if cfg.noise_sigma > 0.0 {
                clean + cfg.noise_sigma * rng.standard_normal()
            } else {
                clean
            }
        })
        .collect();
    Spectrum::new(wavelengths, intensities)
        .map_err(|e| OpticsError::InvalidConfig(format!("synthesized spectrum invalid: {e}")))
}
