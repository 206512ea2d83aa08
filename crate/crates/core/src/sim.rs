//! Simulation driver: binds a scene, a solver, and the output sinks.
//!
//! Every step the driver updates scripted boundaries, advances the solver,
//! scans the state for non-finite values (failing fast with the offending
//! step), measures diagnostics, and emits snapshots on the configured
//! cadence. In deterministic mode the wall-clock columns of the
//! diagnostics are zeroed so repeated runs produce identical files.

use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::Vector3;

use crate::boundary::BoundarySet;
use crate::dfsph::{DfsphSolver, ParticleState, SimParams, StepReport};
use crate::diagnostics::{self, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::sceneio::{
    emit_fluid_particles, snapshot_filename, write_snapshot, Aabb, SceneConfig, Snapshot,
};
use crate::vr::VrSolver;

/// Which solver advances the fluid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Baseline,
    Vr,
}

enum SolverImpl {
    Baseline(Box<DfsphSolver>),
    Vr(Box<VrSolver>),
}

/// Output configuration for a run.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Directory for `frame_*.sph` and `diagnostics.csv`; no files are
    /// written when unset.
    pub output_dir: Option<PathBuf>,
    /// Steps between snapshots; 0 disables snapshots.
    pub snapshot_every: u64,
}

/// Aggregate outcome of a run.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunSummary {
    pub particles: usize,
    pub steps: u64,
    pub wall_seconds: f64,
    pub cfl_violations: u64,
    pub density_non_converged: u64,
    pub divergence_non_converged: u64,
}

pub struct Simulation {
    pub state: ParticleState,
    pub boundary: BoundarySet,
    pub params: SimParams,
    pub domain: Aabb,
    solver: SolverImpl,
    steps_done: u64,
    frames_written: u64,
    vorticity: Vec<Vector3<f64>>,
    records: Vec<DiagnosticsRecord>,
    /// Zero out timing columns so outputs are bitwise reproducible.
    pub deterministic: bool,
    pub cfl_violations: u64,
    pub first_cfl_step: Option<u64>,
    pub density_non_converged: u64,
    pub divergence_non_converged: u64,
}

impl Simulation {
    pub fn new(
        state: ParticleState,
        boundary: BoundarySet,
        params: SimParams,
        domain: Aabb,
        kind: SolverKind,
    ) -> Self {
        let solver = match kind {
            SolverKind::Baseline => SolverImpl::Baseline(Box::new(DfsphSolver::new())),
            SolverKind::Vr => SolverImpl::Vr(Box::new(VrSolver::new())),
        };
        Self {
            state,
            boundary,
            params,
            domain,
            solver,
            steps_done: 0,
            frames_written: 0,
            vorticity: Vec::new(),
            records: Vec::new(),
            deterministic: false,
            cfl_violations: 0,
            first_cfl_step: None,
            density_non_converged: 0,
            divergence_non_converged: 0,
        }
    }

    /// Build state, boundary, and parameters from a validated scene.
    pub fn from_scene(config: &SceneConfig, kind: SolverKind) -> Result<Self> {
        let params = config.sim_params()?;
        let state = emit_fluid_particles(config)?;
        let boundary = config.build_boundary()?;
        Ok(Self::new(state, boundary, params, config.domain, kind))
    }

    pub fn time(&self) -> f64 {
        self.steps_done as f64 * self.params.dt
    }

    pub fn steps_done(&self) -> u64 {
        self.steps_done
    }

    pub fn records(&self) -> &[DiagnosticsRecord] {
        &self.records
    }

    /// Vorticity of the committed state after the last step.
    pub fn vorticity(&self) -> &[Vector3<f64>] {
        &self.vorticity
    }

    /// Vorticity fields of the last VR step, if the VR solver runs.
    pub fn vr_state(&self) -> Option<&crate::vr::VorticityState> {
        match &self.solver {
            SolverImpl::Baseline(_) => None,
            SolverImpl::Vr(solver) => Some(&solver.vorticity),
        }
    }

    /// Advance one step and append its diagnostics record.
    pub fn step(&mut self) -> Result<DiagnosticsRecord> {
        let step_no = self.steps_done + 1;
        if self.boundary.has_moving_bodies() {
            self.boundary.update_motion(self.time());
        }

        let report = self.advance().map_err(|e| match e {
            Error::NonFinite { what, index } => Error::Diverged {
                step: step_no,
                detail: format!("non-finite {what} for particle {index}"),
            },
            other => other,
        })?;

        match &self.solver {
            SolverImpl::Baseline(solver) => {
                solver.committed_vorticity_into(&self.state, &self.boundary, &mut self.vorticity)
            }
            SolverImpl::Vr(solver) => {
                solver.committed_vorticity_into(&self.state, &self.boundary, &mut self.vorticity)
            }
        }

        self.scan_state(step_no)?;
        if !report.density.converged {
            self.density_non_converged += 1;
        }
        if !report.divergence.converged {
            self.divergence_non_converged += 1;
        }

        let mut effective = report;
        if self.deterministic {
            effective.timings = Default::default();
        }
        let record = diagnostics::measure(
            &self.state,
            &self.vorticity,
            self.params.gravity,
            self.domain.min,
            &effective,
            step_no as f64 * self.params.dt,
        );
        self.records.push(record);
        self.steps_done = step_no;
        Ok(record)
    }

    fn advance(&mut self) -> Result<StepReport> {
        match &mut self.solver {
            SolverImpl::Baseline(solver) => {
                solver.step(&mut self.state, &self.boundary, &self.params)
            }
            SolverImpl::Vr(solver) => solver.step(&mut self.state, &self.boundary, &self.params),
        }
    }

    /// Cheap max-abs scan: fail fast on non-finite state, track the CFL
    /// advisory.
    fn scan_state(&mut self, step_no: u64) -> Result<()> {
        let mut vmax2 = 0.0f64;
        for (i, (x, v)) in self
            .state
            .positions
            .iter()
            .zip(&self.state.velocities)
            .enumerate()
        {
            let finite = x.x.is_finite()
                && x.y.is_finite()
                && x.z.is_finite()
                && v.x.is_finite()
                && v.y.is_finite()
                && v.z.is_finite();
            if !finite {
                return Err(Error::Diverged {
                    step: step_no,
                    detail: format!("non-finite position or velocity for particle {i}"),
                });
            }
            vmax2 = vmax2.max(v.norm_squared());
        }
        let vmax = vmax2.sqrt();
        if vmax > 0.0 && self.params.dt > 0.4 * self.params.h / vmax {
            self.cfl_violations += 1;
            self.first_cfl_step.get_or_insert(step_no);
        }
        Ok(())
    }

    /// Snapshot of the committed state (positions, velocities, densities,
    /// vorticity magnitude).
    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            time: self.time(),
            positions: self.state.positions.clone(),
            velocities: self.state.velocities.clone(),
            densities: self.state.densities.clone(),
            vorticity_magnitudes: self.vorticity.iter().map(|z| z.norm()).collect(),
        }
    }

    /// Run `steps` steps, writing snapshots on the configured cadence and
    /// a `diagnostics.csv` when an output directory is set. On failure the
    /// records up to the failing step are still written before the error
    /// propagates.
    pub fn run(&mut self, steps: u64, options: &RunOptions) -> Result<RunSummary> {
        if let Some(dir) = &options.output_dir {
            std::fs::create_dir_all(dir)?;
        }
        let start = Instant::now();
        let mut outcome = Ok(());
        for _ in 0..steps {
            if let Err(e) = self.step() {
                outcome = Err(e);
                break;
            }
            if options.snapshot_every > 0 && self.steps_done % options.snapshot_every == 0 {
                if let Some(dir) = &options.output_dir {
                    self.write_frame(dir)?;
                }
            }
        }
        if let Some(dir) = &options.output_dir {
            diagnostics::write_csv(&self.records, &dir.join("diagnostics.csv"))?;
        }
        outcome?;
        Ok(RunSummary {
            particles: self.state.len(),
            steps: self.steps_done,
            wall_seconds: start.elapsed().as_secs_f64(),
            cfl_violations: self.cfl_violations,
            density_non_converged: self.density_non_converged,
            divergence_non_converged: self.divergence_non_converged,
        })
    }

    fn write_frame(&mut self, dir: &Path) -> Result<()> {
        let path = dir.join(snapshot_filename(self.frames_written));
        write_snapshot(&self.snapshot(), &path)?;
        self.frames_written += 1;
        Ok(())
    }
}
