//! Sweep protocol: plan, state machine and acquisition ports.
//!
//! A sweep homes the stage, then for every planned angle moves and
//! acquires one spectrum. Hardware sits behind [`AcquisitionPort`]; the
//! crate ships a simulated port driven by the optics model and a replay
//! port that serves previously recorded spectra.

use std::fmt;
use std::thread;

use thiserror::Error;

use crate::geometry::{solve_incidence, IncidenceSolution, PivotGeometry, SurfaceModel};
use crate::optics::{synthesize_spectrum, OpticalConfig};
use crate::rng::{trial_seed, SimRng};
use crate::spectrum::Spectrum;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PortError {
    #[error("motion failed: {0}")]
    Motion(String),
    #[error("acquisition failed: {0}")]
    Acquisition(String),
    #[error("acquire called before a successful move")]
    NotPositioned,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScanError {
    #[error("illegal transition {from} -> {to}")]
    IllegalTransition { from: ScanState, to: ScanState },
    #[error("trial {trial}: port fault at step {step}: {source}")]
    PortFault {
        trial: u32,
        step: usize,
        source: PortError,
    },
    #[error("trial {trial}: homing failed: {source}")]
    HomingFault { trial: u32, source: PortError },
    #[error("invalid sweep plan: {0}")]
    InvalidPlan(String),
}

/// Angular sweep: `n_steps` angles starting at `start_deg`, `step_deg` apart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPlan {
    pub start_deg: f64,
    pub step_deg: f64,
    pub n_steps: usize,
    pub trials: u32,
}

impl Default for SweepPlan {
    fn default() -> Self {
        default_plan()
    }
}

/// ±18° in 1.8° steps, 21 angles, three trials.
pub fn default_plan() -> SweepPlan {
    SweepPlan {
        start_deg: -18.0,
        step_deg: 1.8,
        n_steps: 21,
        trials: 3,
    }
}

impl SweepPlan {
    pub fn validate(&self) -> Result<(), ScanError> {
        if !self.start_deg.is_finite() {
            return Err(ScanError::InvalidPlan("start angle must be finite".into()));
        }
        if !(self.step_deg.is_finite() && self.step_deg > 0.0) {
            return Err(ScanError::InvalidPlan(format!(
                "step must be positive, got {}",
                self.step_deg
            )));
        }
        if self.n_steps == 0 {
            return Err(ScanError::InvalidPlan("n_steps must be >= 1".into()));
        }
        if self.trials == 0 {
            return Err(ScanError::InvalidPlan("trials must be >= 1".into()));
        }
        if self.end_deg().abs() >= 90.0 || self.start_deg.abs() >= 90.0 {
            return Err(ScanError::InvalidPlan(format!(
                "sweep {}..{} deg leaves (-90, 90)",
                self.start_deg,
                self.end_deg()
            )));
        }
        Ok(())
    }

    /// Angle at `index`, computed by multiplication so there is no drift.
    pub fn angle(&self, index: usize) -> f64 {
        self.start_deg + index as f64 * self.step_deg
    }

    pub fn angles(&self) -> Vec<f64> {
        (0..self.n_steps).map(|i| self.angle(i)).collect()
    }

    pub fn end_deg(&self) -> f64 {
        self.angle(self.n_steps.saturating_sub(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScanState {
    Idle,
    Homing,
    Moving { target_deg: f64 },
    Acquiring { index: usize },
    Complete,
    Faulted { cause: String },
}

impl fmt::Display for ScanState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScanState::Idle => write!(f, "Idle"),
            ScanState::Homing => write!(f, "Homing"),
            ScanState::Moving { target_deg } => write!(f, "Moving({target_deg})"),
            ScanState::Acquiring { index } => write!(f, "Acquiring({index})"),
            ScanState::Complete => write!(f, "Complete"),
            ScanState::Faulted { cause } => write!(f, "Faulted({cause})"),
        }
    }
}

impl ScanState {
    pub fn is_terminal(&self) -> bool {
        matches!(self, ScanState::Complete | ScanState::Faulted { .. })
    }

    pub fn can_transition_to(&self, next: &ScanState) -> bool {
        use ScanState::*;
        if self.is_terminal() {
            return false;
        }
        matches!(
            (self, next),
            (Idle, Homing)
                | (Homing, Moving { .. })
                | (Moving { .. }, Acquiring { .. })
                | (Acquiring { .. }, Moving { .. })
                | (Acquiring { .. }, Complete)
                | (_, Faulted { .. })
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanMachine {
    state: ScanState,
}

impl Default for ScanMachine {
    fn default() -> Self {
        Self::new()
    }
}

impl ScanMachine {
    pub fn new() -> Self {
        Self {
            state: ScanState::Idle,
        }
    }

    pub fn state(&self) -> &ScanState {
        &self.state
    }

    pub fn transition(&mut self, next: ScanState) -> Result<(), ScanError> {
        if !self.state.can_transition_to(&next) {
            return Err(ScanError::IllegalTransition {
                from: self.state.clone(),
                to: next,
            });
        }
        self.state = next;
        Ok(())
    }

    fn fault(&mut self, cause: String) {
        // Faulted is reachable from every live state
        let _ = self.transition(ScanState::Faulted { cause });
    }
}

/// Everything needed to regenerate a simulated run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMeta {
    pub surface: SurfaceModel,
    pub pivot: PivotGeometry,
    pub optics: OpticalConfig,
    pub master_seed: u64,
}

/// Stage + spectrometer, one move or acquisition at a time.
pub trait AcquisitionPort {
    fn home(&mut self) -> Result<(), PortError> {
        Ok(())
    }

    fn move_to(&mut self, angle_deg: f64) -> Result<(), PortError>;

    fn acquire(&mut self) -> Result<Spectrum, PortError>;

    /// Configuration recorded alongside the acquired spectra.
    fn snapshot(&self) -> RunMeta;
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub plan: SweepPlan,
    pub trial_index: u32,
    pub entries: Vec<(f64, Spectrum)>,
    pub meta: RunMeta,
}

impl SweepRecord {
    pub fn angles(&self) -> Vec<f64> {
        self.entries.iter().map(|(a, _)| *a).collect()
    }
}

pub fn run_sweep<P: AcquisitionPort + ?Sized>(
    plan: &SweepPlan,
    port: &mut P,
    trial: u32,
) -> Result<SweepRecord, ScanError> {
    run_sweep_with(&mut ScanMachine::new(), plan, port, trial)
}

/// As [`run_sweep`], leaving the final state in `machine` for inspection.
pub fn run_sweep_with<P: AcquisitionPort + ?Sized>(
    machine: &mut ScanMachine,
    plan: &SweepPlan,
    port: &mut P,
    trial: u32,
) -> Result<SweepRecord, ScanError> {
    plan.validate()?;
    machine.transition(ScanState::Homing)?;
    if let Err(source) = port.home() {
        machine.fault(source.to_string());
        return Err(ScanError::HomingFault { trial, source });
    }

    let mut entries = Vec::with_capacity(plan.n_steps);
    for step in 0..plan.n_steps {
        let angle = plan.angle(step);
        machine.transition(ScanState::Moving { target_deg: angle })?;
        if let Err(source) = port.move_to(angle) {
            machine.fault(source.to_string());
            return Err(ScanError::PortFault {
                trial,
                step,
                source,
            });
        }
        // settle: no dwell needed in simulation
        machine.transition(ScanState::Acquiring { index: step })?;
        match port.acquire() {
            Ok(spectrum) => entries.push((angle, spectrum)),
            Err(source) => {
                machine.fault(source.to_string());
                return Err(ScanError::PortFault {
                    trial,
                    step,
                    source,
                });
            }
        }
    }
    machine.transition(ScanState::Complete)?;

    Ok(SweepRecord {
        plan: *plan,
        trial_index: trial,
        entries,
        meta: port.snapshot(),
    })
}

/// Runs trials `1..=plan.trials` in order; trial `t` gets seed `master ^ t`.
pub fn run_triplicate<P, F>(
    plan: &SweepPlan,
    port_factory: F,
    master_seed: u64,
) -> Result<Vec<SweepRecord>, ScanError>
where
    P: AcquisitionPort,
    F: Fn(u32, u64) -> P,
{
    plan.validate()?;
    (1..=plan.trials)
        .map(|trial| {
            let mut port = port_factory(trial, trial_seed(master_seed, trial));
            run_sweep(plan, &mut port, trial)
        })
        .collect()
}

/// One thread per trial; output identical to [`run_triplicate`].
pub fn run_triplicate_parallel<P, F>(
    plan: &SweepPlan,
    port_factory: F,
    master_seed: u64,
) -> Result<Vec<SweepRecord>, ScanError>
where
    P: AcquisitionPort,
    F: Fn(u32, u64) -> P + Sync,
{
    plan.validate()?;
    let factory = &port_factory;
    let results: Vec<Result<SweepRecord, ScanError>> = thread::scope(|scope| {
        let handles: Vec<_> = (1..=plan.trials)
            .map(|trial| {
                scope.spawn(move || {
                    let mut port = factory(trial, trial_seed(master_seed, trial));
                    run_sweep(plan, &mut port, trial)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("trial thread panicked"))
            .collect()
    });
    results.into_iter().collect()
}

/// Port backed by the optics model and scan geometry.
#[derive(Debug, Clone)]
pub struct SimulatedPort {
    optics: OpticalConfig,
    pivot: PivotGeometry,
    surface: SurfaceModel,
    rng: SimRng,
    master_seed: u64,
    position: Option<IncidenceSolution>,
}

impl SimulatedPort {
    pub fn new(
        optics: OpticalConfig,
        pivot: PivotGeometry,
        surface: SurfaceModel,
        master_seed: u64,
        trial: u32,
    ) -> Self {
        Self {
            optics,
            pivot,
            surface,
            rng: SimRng::for_trial(master_seed, trial),
            master_seed,
            position: None,
        }
    }

    /// Factory suitable for [`run_triplicate`], rebuilding the port per trial.
    pub fn factory(meta: &RunMeta) -> impl Fn(u32, u64) -> SimulatedPort + Sync + '_ {
        move |trial, _seed| {
            SimulatedPort::new(
                meta.optics.clone(),
                meta.pivot,
                meta.surface,
                meta.master_seed,
                trial,
            )
        }
    }

    pub fn position(&self) -> Option<&IncidenceSolution> {
        self.position.as_ref()
    }
}

impl AcquisitionPort for SimulatedPort {
    fn home(&mut self) -> Result<(), PortError> {
        self.position = None;
        Ok(())
    }

    fn move_to(&mut self, angle_deg: f64) -> Result<(), PortError> {
        self.position = None;
        let hit = solve_incidence(angle_deg, &self.pivot, &self.surface)
            .map_err(|e| PortError::Motion(e.to_string()))?;
        self.position = Some(hit);
        Ok(())
    }

    fn acquire(&mut self) -> Result<Spectrum, PortError> {
        let hit = self.position.ok_or(PortError::NotPositioned)?;
        synthesize_spectrum(&self.optics, hit.aoi_rad, &mut self.rng)
            .map_err(|e| PortError::Acquisition(e.to_string()))
    }

    fn snapshot(&self) -> RunMeta {
        RunMeta {
            surface: self.surface,
            pivot: self.pivot,
            optics: self.optics.clone(),
            master_seed: self.master_seed,
        }
    }
}

/// Port that serves the spectra of one recorded trial.
#[derive(Debug, Clone)]
pub struct ReplayPort {
    record: SweepRecord,
    current: Option<usize>,
}

impl ReplayPort {
    pub fn new(record: SweepRecord) -> Self {
        Self {
            record,
            current: None,
        }
    }
}

impl AcquisitionPort for ReplayPort {
    fn home(&mut self) -> Result<(), PortError> {
        self.current = None;
        Ok(())
    }

    fn move_to(&mut self, angle_deg: f64) -> Result<(), PortError> {
        self.current = self
            .record
            .entries
            .iter()
            .position(|(a, _)| (a - angle_deg).abs() <= 1e-9);
        if self.current.is_none() {
            return Err(PortError::Motion(format!(
                "no recorded spectrum at {angle_deg} deg"
            )));
        }
        Ok(())
    }

    fn acquire(&mut self) -> Result<Spectrum, PortError> {
        let i = self.current.ok_or(PortError::NotPositioned)?;
        Ok(self.record.entries[i].1.clone())
    }

    fn snapshot(&self) -> RunMeta {
        self.record.meta.clone()
    }
}
