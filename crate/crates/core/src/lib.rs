//! Simulation and analysis of angle-of-incidence effects on endogenous
//! fluorescence scans.
//!
//! The crate models a 405 nm fluorescence probe pivoting over a flat or
//! spherical phantom: [`optics`] synthesizes NADH/FAD emission spectra,
//! [`geometry`] maps motor angles to incidence angles, [`scan`] replays the
//! sweep protocol, [`spectrum`] runs the normalization/smoothing/AUC
//! pipeline and [`dataio`] stores runs as plain text.

pub mod analysis;
pub mod calibration;
pub mod dataio;
pub mod geometry;
pub mod optics;
pub mod rng;
pub mod scan;
pub mod spectrum;

pub use analysis::{analyze_records, format_report, AnalysisError, Pooling};
pub use dataio::{read_run, read_spectrum, write_run, write_spectrum, DataError, ProfileRow};
pub use geometry::{
    incidence_flat, incidence_sphere, solve_incidence, GeometryError, IncidenceSolution,
    PivotGeometry, SurfaceModel,
};
pub use optics::{
    angular_attenuation, base_emission, dichroic_transmittance, synthesize_spectrum,
    AngularResponse, DichroicCurve, Fluorophore, OpticalConfig, OpticsError, WavelengthGrid,
};
pub use rng::SimRng;
pub use scan::{
    default_plan, run_sweep, run_triplicate, run_triplicate_parallel, AcquisitionPort, PortError,
    ReplayPort, RunMeta, ScanError, ScanMachine, ScanState, SimulatedPort, SweepPlan, SweepRecord,
};
pub use spectrum::{
    auc_profile, band_ratio, normalize_above_cutoff, profile_stats, run_pipeline, smooth_window2,
    trapz_band, AucProfile, PipelineConfig, SpectralError, Spectrum, SweepStats,
};
