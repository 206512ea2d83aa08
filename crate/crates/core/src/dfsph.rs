//! Baseline incompressible solver: semi-implicit advection, iterative
//! constant-density projection, and iterative divergence correction, in
//! that phase order.
//!
//! Per particle the solver keeps the standard DFSPH factor
//! `alpha_i = rho_i / (|sum_j m_j gradW_ij|^2 + sum_j |m_j gradW_ij|^2)`
//! with boundary pseudo-masses folded into the first sum. Stiffness comes
//! from the positive density error (density solve) or the density rate
//! (divergence solve); accelerations are the pairwise-antisymmetric
//! `a_i = -sum_j m_j (kappa_i/rho_i + kappa_j/rho_j) gradW_ij`.
//!
//! Kernel values and gradients are cached per pair once per step: positions
//! only change in the advection phase, so one cache serves the advection
//! sums (at x^n) and a second serves both pressure solves and the vorticity
//! pass (at the finalized positions).

use std::time::Instant;

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::boundary::BoundarySet;
use crate::error::{Error, Result};
use crate::kernel::{kernel_value, kernel_value_gradient, SmoothingConfig};
use crate::neighbors::NeighborTable;

/// Particles with fewer total neighbors than this are excluded from the
/// divergence correction; their kernels are too deficient for a meaningful
/// density rate (free surface, ballistic droplets).
pub(crate) const MIN_NEIGHBORS_FOR_DIVERGENCE: usize = 20;


/// Structure-of-arrays particle storage for one fluid.
#[derive(Debug, Clone, Default)]
pub struct ParticleState {
    pub positions: Vec<Vector3<f64>>,
    pub velocities: Vec<Vector3<f64>>,
    pub masses: Vec<f64>,
    pub densities: Vec<f64>,
}

impl ParticleState {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.positions.len();
        if self.velocities.len() != n || self.masses.len() != n || self.densities.len() != n {
            return Err(Error::InvalidInput(format!(
                "particle arrays disagree on length: x={}, v={}, m={}, rho={}",
                n,
                self.velocities.len(),
                self.masses.len(),
                self.densities.len()
            )));
        }
        if let Some(i) = self.masses.iter().position(|m| !(*m > 0.0) || !m.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-positive mass {} for particle {i}",
                self.masses[i]
            )));
        }
        Ok(())
    }
}

/// Physical and numerical constants for one simulation.
#[derive(Debug, Clone, Copy)]
pub struct SimParams {
    /// Smoothing length (m); kernel support is `2h`.
    pub h: f64,
    /// Rest density rho0 (kg/m^3).
    pub rest_density: f64,
    /// Kinematic viscosity (m^2/s).
    pub viscosity: f64,
    /// Gravity (m/s^2).
    pub gravity: Vector3<f64>,
    /// Fixed time step (s).
    pub dt: f64,
    /// Density solve tolerance as a fraction of rho0.
    pub density_error: f64,
    /// Divergence solve tolerance on the mean density rate (1/s).
    pub divergence_error: f64,
    pub min_density_iters: u32,
    pub max_density_iters: u32,
    pub min_divergence_iters: u32,
    pub max_divergence_iters: u32,
    /// Vorticity refinement gain; 1 restores the measured deficit.
    pub alpha: f64,
    /// Stream-function cutoff as a multiple of h (at most 2: the neighbor
    /// table only covers the kernel support).
    pub stream_cutoff: f64,
}

impl SimParams {
    /// Defaults for water-like fluids at the given resolution and step.
    pub fn new(h: f64, dt: f64) -> Self {
        Self {
            h,
            rest_density: 1000.0,
            viscosity: 0.05,
            gravity: Vector3::new(0.0, -9.81, 0.0),
            dt,
            density_error: 1e-4,
            divergence_error: Self::default_divergence_error(dt),
            min_density_iters: 1,
            max_density_iters: 100,
            min_divergence_iters: 1,
            max_divergence_iters: 100,
            alpha: 1.0,
            stream_cutoff: 2.0,
        }
    }

    /// Mean density-rate tolerance of 0.1% of rho0 per step.
    pub fn default_divergence_error(dt: f64) -> f64 {
        1e-3 / dt
    }

    pub fn smoothing(&self) -> Result<SmoothingConfig> {
        SmoothingConfig::new(self.h)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidInput(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.rest_density > 0.0) {
            return Err(Error::InvalidInput(format!(
                "rest density must be positive, got {}",
                self.rest_density
            )));
        }
        if !(self.density_error > 0.0) || !(self.divergence_error > 0.0) {
            return Err(Error::InvalidInput(
                "solver tolerances must be positive".into(),
            ));
        }
        if self.max_density_iters < self.min_density_iters
            || self.max_divergence_iters < self.min_divergence_iters
            || self.min_density_iters < 1
            || self.min_divergence_iters < 1
        {
            return Err(Error::InvalidInput(
                "iteration bounds must satisfy max >= min >= 1".into(),
            ));
        }
        if !(self.viscosity >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "viscosity must be nonnegative, got {}",
                self.viscosity
            )));
        }
        if !(self.stream_cutoff > 0.0) || self.stream_cutoff > 2.0 {
            return Err(Error::InvalidInput(format!(
                "stream_cutoff must lie in (0, 2] so the neighbor table covers it, got {}",
                self.stream_cutoff
            )));
        }
        self.smoothing().map(|_| ())
    }
}

/// Convergence record of one iterative solve.
#[derive(Debug, Clone, Default)]
pub struct SolveStats {
    pub iterations: u32,
    pub final_error: f64,
    pub converged: bool,
    /// Error metric before each corrective sweep plus the exit value.
    pub error_history: Vec<f64>,
}

/// Wall-clock phase timings for one step (milliseconds).
#[derive(Debug, Clone, Copy, Default)]
pub struct PhaseTimings {
    pub neighbors_ms: f64,
    pub advect_ms: f64,
    pub density_ms: f64,
    pub divergence_ms: f64,
    pub vr_ms: f64,
}

/// Outcome of one solver step.
#[derive(Debug, Clone, Default)]
pub struct StepReport {
    pub density: SolveStats,
    pub divergence: SolveStats,
    pub timings: PhaseTimings,
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Per-pair kernel values and gradients, index-aligned with the neighbor
/// table's flat pair arrays.
#[derive(Default)]
pub(crate) struct PairCache {
    pub fluid_w: Vec<f64>,
    pub fluid_grad: Vec<Vector3<f64>>,
    pub boundary_w: Vec<f64>,
    pub boundary_grad: Vec<Vector3<f64>>,
}

impl PairCache {
    pub(crate) fn build(
        &mut self,
        table: &NeighborTable,
        positions: &[Vector3<f64>],
        boundary_positions: &[Vector3<f64>],
        cfg: &SmoothingConfig,
    ) {
        let n = table.len();
        self.fluid_w.resize(table.fluid_pair_count(), 0.0);
        self.fluid_grad.resize(table.fluid_pair_count(), Vector3::zeros());
        self.boundary_w.resize(table.boundary_pair_count(), 0.0);
        self.boundary_grad
            .resize(table.boundary_pair_count(), Vector3::zeros());

        // Split the flat pair arrays into per-particle slices so the fill
        // can run in parallel without overlap.
        let mut fluid_slices = Vec::with_capacity(n);
        let mut boundary_slices = Vec::with_capacity(n);
        {
            let mut fw: &mut [f64] = &mut self.fluid_w;
            let mut fg: &mut [Vector3<f64>] = &mut self.fluid_grad;
            let mut bw: &mut [f64] = &mut self.boundary_w;
            let mut bg: &mut [Vector3<f64>] = &mut self.boundary_grad;
            for i in 0..n {
                let nf = table.fluid_range(i).len();
                let nb = table.boundary_range(i).len();
                let (w_head, w_rest) = fw.split_at_mut(nf);
                let (g_head, g_rest) = fg.split_at_mut(nf);
                fw = w_rest;
                fg = g_rest;
                fluid_slices.push((w_head, g_head));
                let (bw_head, bw_rest) = bw.split_at_mut(nb);
                let (bg_head, bg_rest) = bg.split_at_mut(nb);
                bw = bw_rest;
                bg = bg_rest;
                boundary_slices.push((bw_head, bg_head));
            }
        }

        fluid_slices
            .into_par_iter()
            .zip(boundary_slices)
            .enumerate()
            .for_each(|(i, ((fw, fg), (bw, bg)))| {
                let xi = positions[i];
                for (k, &j) in table.fluid_neighbors(i).iter().enumerate() {
                    let x_ij = xi - positions[j as usize];
                    let (w, g) = kernel_value_gradient(&x_ij, x_ij.norm_squared(), cfg);
                    fw[k] = w;
                    fg[k] = g;
                }
                for (k, &b) in table.boundary_neighbors(i).iter().enumerate() {
                    let x_ib = xi - boundary_positions[b as usize];
                    let (w, g) = kernel_value_gradient(&x_ib, x_ib.norm_squared(), cfg);
                    bw[k] = w;
                    bg[k] = g;
                }
            });
    }
}

/// Baseline DFSPH stepper. Owns the neighbor table, pair caches, and all
/// solver scratch buffers; reusable across steps without reallocation.
pub struct DfsphSolver {
    pub(crate) table: NeighborTable,
    pub(crate) cache_start: PairCache,
    pub(crate) cache_final: PairCache,
    alpha_factors: Vec<f64>,
    kappa_over_rho: Vec<f64>,
    rate: Vec<f64>,
    accel: Vec<Vector3<f64>>,
    metric: Vec<f64>,
}

impl DfsphSolver {
    pub fn new() -> Self {
        Self {
            table: NeighborTable::new(),
            cache_start: PairCache::default(),
            cache_final: PairCache::default(),
            alpha_factors: Vec::new(),
            kappa_over_rho: Vec::new(),
            rate: Vec::new(),
            accel: Vec::new(),
            metric: Vec::new(),
        }
    }

    /// Neighbor table of the current step (positions at step start).
    pub fn table(&self) -> &NeighborTable {
        &self.table
    }

    /// One full baseline step in Algorithm-1 order: rebuild neighbors,
    /// advect, constant-density solve, finalize positions, divergence
    /// solve, commit velocities.
    pub fn step(
        &mut self,
        state: &mut ParticleState,
        boundary: &BoundarySet,
        params: &SimParams,
    ) -> Result<StepReport> {
        params.validate()?;
        state.validate()?;
        let mut report = StepReport::default();
        if state.is_empty() {
            return Ok(report);
        }
        let cfg = params.smoothing()?;

        let t = Instant::now();
        self.prepare(state, boundary, &cfg)?;
        report.timings.neighbors_ms += ms_since(t);

        let t = Instant::now();
        self.advect(state, boundary, params)?;
        report.timings.advect_ms += ms_since(t);

        let t = Instant::now();
        self.refresh_final_cache(state, boundary, &cfg);
        report.timings.neighbors_ms += ms_since(t);

        let t = Instant::now();
        self.begin_projection(state, boundary, params);
        report.density = self.solve_density(state, boundary, params);
        report.timings.density_ms += ms_since(t);

        let t = Instant::now();
        report.divergence = self.solve_divergence(state, boundary, params);
        report.timings.divergence_ms += ms_since(t);
        Ok(report)
    }

    /// Rebuild the neighbor table and the step-start pair cache, then
    /// evaluate densities at the current positions.
    pub fn prepare(
        &mut self,
        state: &mut ParticleState,
        boundary: &BoundarySet,
        cfg: &SmoothingConfig,
    ) -> Result<()> {
        self.table
            .rebuild(&state.positions, &boundary.positions, cfg)?;
        self.cache_start
            .build(&self.table, &state.positions, &boundary.positions, cfg);
        Self::density_sweep(&self.table, &self.cache_start, state, boundary, cfg);
        Ok(())
    }

    /// Advection: viscous acceleration plus gravity, then semi-implicit
    /// Euler. The viscous term is the artificial Laplacian with the pair
    /// volume taken at the mean density `m_j / ((rho_i + rho_j)/2)`, which
    /// keeps the pair forces antisymmetric (and equals `nu * lap(v)` in
    /// uniform-density regions). Uses the step-start cache; positions move
    /// to their final values.
    pub fn advect(
        &mut self,
        state: &mut ParticleState,
        boundary: &BoundarySet,
        params: &SimParams,
    ) -> Result<()> {
        let n = state.len();
        let nu = params.viscosity;
        let rho0 = params.rest_density;
        let g = params.gravity;
        let eps = 0.01 * params.h * params.h;
        let table = &self.table;
        let cache = &self.cache_start;
        let positions = &state.positions;
        let velocities = &state.velocities;
        let masses = &state.masses;
        let densities = &state.densities;

        self.accel.clear();
        (0..n)
            .into_par_iter()
            .map(|i| {
                let xi = positions[i];
                let vi = velocities[i];
                let mut lap = Vector3::zeros();
                let range = table.fluid_range(i);
                for (k, &j) in table.fluid_neighbors(i).iter().enumerate() {
                    let j = j as usize;
                    let x_ij = xi - positions[j];
                    let vol = masses[j] * 2.0 / (densities[i] + densities[j]);
                    let coeff =
                        vol * (vi - velocities[j]).dot(&x_ij) / (x_ij.norm_squared() + eps);
                    lap += cache.fluid_grad[range.start + k] * coeff;
                }
                let brange = table.boundary_range(i);
                for (k, &b) in table.boundary_neighbors(i).iter().enumerate() {
                    let b = b as usize;
                    let x_ib = xi - boundary.positions[b];
                    let vol = boundary.pseudo_masses[b] * 2.0 / (densities[i] + rho0);
                    let coeff = vol * (vi - boundary.velocities[b]).dot(&x_ib)
                        / (x_ib.norm_squared() + eps);
                    lap += cache.boundary_grad[brange.start + k] * coeff;
                }
                lap * (10.0 * nu) + g
            })
            .collect_into_vec(&mut self.accel);

        if let Some(i) = self
            .accel
            .iter()
            .position(|a| !(a.x.is_finite() && a.y.is_finite() && a.z.is_finite()))
        {
            return Err(Error::NonFinite {
                what: "advection acceleration".into(),
                index: i,
            });
        }

        let dt = params.dt;
        let accel = &self.accel;
        state
            .velocities
            .par_iter_mut()
            .zip(state.positions.par_iter_mut())
            .enumerate()
            .for_each(|(i, (v, x))| {
                *v += accel[i] * dt;
                *x += *v * dt;
            });
        Ok(())
    }

    /// Rebuild the pair cache at the advected (final) positions.
    pub fn refresh_final_cache(
        &mut self,
        state: &ParticleState,
        boundary: &BoundarySet,
        cfg: &SmoothingConfig,
    ) {
        self.cache_final
            .build(&self.table, &state.positions, &boundary.positions, cfg);
    }

    /// Evaluate densities at the final positions and compute the DFSPH
    /// factors. Must run after `refresh_final_cache`, before either solve.
    pub fn begin_projection(
        &mut self,
        state: &mut ParticleState,
        boundary: &BoundarySet,
        params: &SimParams,
    ) {
        let cfg = params
            .smoothing()
            .expect("params validated before projection");
        Self::density_sweep(&self.table, &self.cache_final, state, boundary, &cfg);

        let n = state.len();
        let floor = 1e-6 * params.rest_density * params.rest_density;
        let table = &self.table;
        let cache = &self.cache_final;
        let masses = &state.masses;
        let densities = &state.densities;
        self.alpha_factors.clear();
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut grad_sum = Vector3::zeros();
                let mut sq_sum = 0.0;
                let range = table.fluid_range(i);
                for (k, &j) in table.fluid_neighbors(i).iter().enumerate() {
                    let g = cache.fluid_grad[range.start + k] * masses[j as usize];
                    sq_sum += g.norm_squared();
                    grad_sum += g;
                }
                let brange = table.boundary_range(i);
                for (k, &b) in table.boundary_neighbors(i).iter().enumerate() {
                    grad_sum +=
                        cache.boundary_grad[brange.start + k] * boundary.pseudo_masses[b as usize];
                }
                let denom = (grad_sum.norm_squared() + sq_sum).max(floor);
                densities[i] / denom
            })
            .collect_into_vec(&mut self.alpha_factors);
    }

    /// Constant-density projection. Iterates a pressure acceleration until
    /// the mean positive predicted density error drops to tolerance (with
    /// the configured minimum), or the iteration cap is reached. Positions
    /// are already final; only velocities change.
    pub fn solve_density(
        &mut self,
        state: &mut ParticleState,
        boundary: &BoundarySet,
        params: &SimParams,
    ) -> SolveStats {
        let n = state.len();
        let rho0 = params.rest_density;
        let dt = params.dt;
        let mut stats = SolveStats::default();
        if n == 0 {
            stats.converged = true;
            return stats;
        }

        loop {
            self.density_rate_sweep(state, boundary);
            {
                let rate = &self.rate;
                let densities = &state.densities;
                self.metric.clear();
                (0..n)
                    .into_par_iter()
                    .map(|i| (densities[i] + dt * rate[i] - rho0).max(0.0))
                    .collect_into_vec(&mut self.metric);
            }
            let err = ordered_sum(&self.metric) / (n as f64 * rho0);
            stats.error_history.push(err);
            let converged = err <= params.density_error;
            if (converged && stats.iterations >= params.min_density_iters)
                || stats.iterations >= params.max_density_iters
            {
                stats.final_error = err;
                stats.converged = converged;
                return stats;
            }

            {
                let rate = &self.rate;
                let densities = &state.densities;
                let alpha = &self.alpha_factors;
                let inv_dt2 = 1.0 / (dt * dt);
                self.kappa_over_rho.clear();
                (0..n)
                    .into_par_iter()
                    .map(|i| {
                        let err_i = (densities[i] + dt * rate[i] - rho0).max(0.0);
                        err_i * alpha[i] * inv_dt2 / densities[i]
                    })
                    .collect_into_vec(&mut self.kappa_over_rho);
            }
            self.apply_pressure_sweep(state, boundary, dt);
            stats.iterations += 1;
        }
    }

    /// Divergence correction. Drives the compressive part of the density
    /// rate toward zero: negative rates (expansion, dominated by free
    /// surfaces) are clamped out, as are particles with deficient
    /// neighborhoods; an attractive correction there is unstable.
    pub fn solve_divergence(
        &mut self,
        state: &mut ParticleState,
        boundary: &BoundarySet,
        params: &SimParams,
    ) -> SolveStats {
        let n = state.len();
        let rho0 = params.rest_density;
        let dt = params.dt;
        let mut stats = SolveStats::default();
        if n == 0 {
            stats.converged = true;
            return stats;
        }

        loop {
            self.density_rate_sweep(state, boundary);
            {
                let table = &self.table;
                self.rate.par_iter_mut().enumerate().for_each(|(i, r)| {
                    if table.neighbor_count(i) < MIN_NEIGHBORS_FOR_DIVERGENCE {
                        *r = 0.0;
                    } else {
                        *r = r.max(0.0);
                    }
                });
            }
            let err = ordered_sum(&self.rate) / (n as f64 * rho0);
            stats.error_history.push(err);
            let converged = err <= params.divergence_error;
            if (converged && stats.iterations >= params.min_divergence_iters)
                || stats.iterations >= params.max_divergence_iters
            {
                stats.final_error = err;
                stats.converged = converged;
                return stats;
            }

            {
                let rate = &self.rate;
                let densities = &state.densities;
                let alpha = &self.alpha_factors;
                let inv_dt = 1.0 / dt;
                self.kappa_over_rho.clear();
                (0..n)
                    .into_par_iter()
                    .map(|i| rate[i] * alpha[i] * inv_dt / densities[i])
                    .collect_into_vec(&mut self.kappa_over_rho);
            }
            self.apply_pressure_sweep(state, boundary, dt);
            stats.iterations += 1;
        }
    }

    /// Mass-weighted density rate at the final positions:
    /// `sum_j m_j (v_i - v_j) . gradW + sum_b Psi_b (v_i - v_b) . gradW`.
    fn density_rate_sweep(&mut self, state: &ParticleState, boundary: &BoundarySet) {
        let n = state.len();
        let table = &self.table;
        let cache = &self.cache_final;
        let velocities = &state.velocities;
        let masses = &state.masses;
        self.rate.clear();
        (0..n)
            .into_par_iter()
            .map(|i| {
                let vi = velocities[i];
                let mut rate = 0.0;
                let range = table.fluid_range(i);
                for (k, &j) in table.fluid_neighbors(i).iter().enumerate() {
                    let j = j as usize;
                    rate += masses[j] * (vi - velocities[j]).dot(&cache.fluid_grad[range.start + k]);
                }
                let brange = table.boundary_range(i);
                for (k, &b) in table.boundary_neighbors(i).iter().enumerate() {
                    let b = b as usize;
                    rate += boundary.pseudo_masses[b]
                        * (vi - boundary.velocities[b]).dot(&cache.boundary_grad[brange.start + k]);
                }
                rate
            })
            .collect_into_vec(&mut self.rate);
    }

    /// Symmetric pressure acceleration from the per-particle `kappa/rho`
    /// values, integrated over one time step.
    fn apply_pressure_sweep(&mut self, state: &mut ParticleState, boundary: &BoundarySet, dt: f64) {
        let table = &self.table;
        let cache = &self.cache_final;
        let masses = &state.masses;
        let kor = &self.kappa_over_rho;
        state.velocities.par_iter_mut().enumerate().for_each(|(i, v)| {
            let ki = kor[i];
            let mut accel = Vector3::zeros();
            let range = table.fluid_range(i);
            for (k, &j) in table.fluid_neighbors(i).iter().enumerate() {
                let j = j as usize;
                accel -= cache.fluid_grad[range.start + k] * (masses[j] * (ki + kor[j]));
            }
            let brange = table.boundary_range(i);
            for (k, &b) in table.boundary_neighbors(i).iter().enumerate() {
                let b = b as usize;
                accel -= cache.boundary_grad[brange.start + k] * (boundary.pseudo_masses[b] * ki);
            }
            *v += accel * dt;
        });
    }

    /// Density from cached kernel values: self term + fluid + boundary.
    fn density_sweep(
        table: &NeighborTable,
        cache: &PairCache,
        state: &mut ParticleState,
        boundary: &BoundarySet,
        cfg: &SmoothingConfig,
    ) {
        let w0 = kernel_value(0.0, cfg);
        let masses = &state.masses;
        state.densities.par_iter_mut().enumerate().for_each(|(i, rho)| {
            let mut sum = masses[i] * w0;
            let range = table.fluid_range(i);
            for (k, &j) in table.fluid_neighbors(i).iter().enumerate() {
                sum += masses[j as usize] * cache.fluid_w[range.start + k];
            }
            let brange = table.boundary_range(i);
            for (k, &b) in table.boundary_neighbors(i).iter().enumerate() {
                sum += boundary.pseudo_masses[b as usize] * cache.boundary_w[brange.start + k];
            }
            *rho = sum;
        });
    }
}

impl Default for DfsphSolver {
    fn default() -> Self {
        Self::new()
    }
}

/// Curl of a per-particle vector field using cached pair gradients, with
/// boundary neighbors at prescribed values. Mirrors `sphops::curl_vec`
/// term for term, including summation order, so both paths agree bitwise.
pub(crate) fn cached_curl_sweep(
    table: &NeighborTable,
    cache: &PairCache,
    field: &[Vector3<f64>],
    boundary_field: &[Vector3<f64>],
    masses: &[f64],
    densities: &[f64],
    boundary: &BoundarySet,
    out: &mut Vec<Vector3<f64>>,
) {
    out.clear();
    (0..table.len())
        .into_par_iter()
        .map(|i| {
            let ai = field[i];
            let mut curl = Vector3::zeros();
            let range = table.fluid_range(i);
            for (k, &j) in table.fluid_neighbors(i).iter().enumerate() {
                let j = j as usize;
                curl += (ai - field[j]).cross(&cache.fluid_grad[range.start + k])
                    * (masses[j] / densities[j]);
            }
            let brange = table.boundary_range(i);
            for (k, &b) in table.boundary_neighbors(i).iter().enumerate() {
                let b = b as usize;
                curl += (ai - boundary_field[b]).cross(&cache.boundary_grad[brange.start + k])
                    * boundary.pseudo_volumes[b];
            }
            curl
        })
        .collect_into_vec(out);
}

impl DfsphSolver {
    /// Vorticity of the committed velocities at the final positions of the
    /// last step, for diagnostics and snapshots. Valid after `step`.
    pub fn committed_vorticity_into(
        &self,
        state: &ParticleState,
        boundary: &BoundarySet,
        out: &mut Vec<Vector3<f64>>,
    ) {
        cached_curl_sweep(
            &self.table,
            &self.cache_final,
            &state.velocities,
            &boundary.velocities,
            &state.masses,
            &state.densities,
            boundary,
            out,
        );
    }
}

/// Sequential left-to-right sum; the reduction order is part of the
/// determinism contract.
pub(crate) fn ordered_sum(values: &[f64]) -> f64 {
    values.iter().sum()
}
