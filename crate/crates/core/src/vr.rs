//! Vorticity refinement: measure the rotational dissipation of one
//! advection-projection step and restore it through a locally truncated
//! stream function.
//!
//! Per step, in order: the step-start vorticity `zeta^n = curl v^n` is
//! transported by the curl of the momentum equation (stretching plus
//! viscous diffusion) to an ideal `zeta^{n+1}`; the projected velocity's
//! curl is subtracted to give the deficit; a Green's-function sum over the
//! neighborhood turns the deficit into a stream function; its discrete
//! curl is the refinement velocity, blended in with gain alpha.

use std::time::Instant;

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::boundary::BoundarySet;
use crate::dfsph::{DfsphSolver, ParticleState, SimParams, StepReport};
use crate::error::{Error, Result};
use crate::kernel::{kernel_gradient, SmoothingConfig};
use crate::neighbors::NeighborTable;
use crate::sphops::SphContext;

/// Per-particle vorticity fields of one refinement step.
#[derive(Debug, Clone, Default)]
pub struct VorticityState {
    /// Vorticity of the committed velocity at step start (1/s).
    pub zeta_n: Vec<Vector3<f64>>,
    /// Transported (ideal) vorticity at step end (1/s).
    pub zeta_ideal: Vec<Vector3<f64>>,
    /// Curl of the post-projection velocity (1/s).
    pub zeta_actual: Vec<Vector3<f64>>,
    /// Deficit `zeta_ideal - zeta_actual` (1/s).
    pub delta_zeta: Vec<Vector3<f64>>,
    /// Stream function (m^2/s).
    pub psi: Vec<Vector3<f64>>,
    /// Refinement velocity (m/s).
    pub delta_v: Vec<Vector3<f64>>,
}

impl VorticityState {
    fn resize(&mut self, n: usize) {
        self.zeta_n.resize(n, Vector3::zeros());
        self.zeta_ideal.resize(n, Vector3::zeros());
        self.zeta_actual.resize(n, Vector3::zeros());
        self.delta_zeta.resize(n, Vector3::zeros());
        self.psi.resize(n, Vector3::zeros());
        self.delta_v.resize(n, Vector3::zeros());
    }
}

/// Wall-clock breakdown of the refinement phases (milliseconds).
#[derive(Debug, Clone, Copy, Default)]
pub struct VrPhaseTimings {
    pub curl_ms: f64,
    pub transport_ms: f64,
    pub deficit_ms: f64,
    pub stream_ms: f64,
    pub refine_ms: f64,
}

/// Vorticity of a velocity field at every particle, with boundary
/// neighbors contributing their prescribed velocity.
pub fn compute_vorticity(
    velocities: &[Vector3<f64>],
    ctx: &SphContext,
) -> Result<Vec<Vector3<f64>>> {
    (0..ctx.positions.len())
        .into_par_iter()
        .map(|i| crate::sphops::curl_vec(i, velocities, Some(&ctx.boundary.velocities), ctx))
        .collect()
}

/// Rows of the velocity gradient in difference form: row c is `grad v^c`,
/// with boundary neighbors at their prescribed velocity.
fn velocity_gradient_rows(
    i: usize,
    velocities: &[Vector3<f64>],
    ctx: &SphContext,
) -> Result<[Vector3<f64>; 3]> {
    let xi = ctx.positions[i];
    let vi = velocities[i];
    let mut rows = [Vector3::zeros(); 3];
    for &j in ctx.table.fluid_neighbors(i) {
        let j = j as usize;
        let rho = ctx.densities[j];
        if !(rho > 0.0) {
            return Err(Error::InvalidInput(format!(
                "solver-state error: non-positive density {rho} for particle {j}"
            )));
        }
        let grad = kernel_gradient(&(xi - ctx.positions[j]), &ctx.cfg);
        let vol = ctx.masses[j] / rho;
        let dv = velocities[j] - vi;
        rows[0] += grad * (vol * dv.x);
        rows[1] += grad * (vol * dv.y);
        rows[2] += grad * (vol * dv.z);
    }
    for &b in ctx.table.boundary_neighbors(i) {
        let b = b as usize;
        let grad = kernel_gradient(&(xi - ctx.boundary.positions[b]), &ctx.cfg);
        let vol = ctx.boundary.pseudo_volumes[b];
        let dv = ctx.boundary.velocities[b] - vi;
        rows[0] += grad * (vol * dv.x);
        rows[1] += grad * (vol * dv.y);
        rows[2] += grad * (vol * dv.z);
    }
    Ok(rows)
}

/// Vortex stretching `(zeta . grad v^x, zeta . grad v^y, zeta . grad v^z)`
/// at particle `i`.
pub fn stretching_term(
    i: usize,
    zeta: &[Vector3<f64>],
    velocities: &[Vector3<f64>],
    ctx: &SphContext,
) -> Result<Vector3<f64>> {
    let rows = velocity_gradient_rows(i, velocities, ctx)?;
    let zi = zeta[i];
    Ok(Vector3::new(zi.dot(&rows[0]), zi.dot(&rows[1]), zi.dot(&rows[2])))
}

/// Viscous diffusion of the vorticity field, `nu * lap(zeta)`. Boundary
/// particles carry no vorticity and are excluded.
pub fn vorticity_diffusion(
    i: usize,
    zeta: &[Vector3<f64>],
    ctx: &SphContext,
    params: &SimParams,
) -> Result<Vector3<f64>> {
    Ok(crate::sphops::laplacian_vec(i, zeta, None, ctx)? * params.viscosity)
}

/// Ideal transported vorticity `zeta^{n+1} = zeta^n + dt (stretching +
/// diffusion)`, evaluated with step-start fields.
pub fn transport_vorticity(
    zeta: &[Vector3<f64>],
    velocities: &[Vector3<f64>],
    ctx: &SphContext,
    params: &SimParams,
) -> Result<Vec<Vector3<f64>>> {
    let dt = params.dt;
    (0..ctx.positions.len())
        .into_par_iter()
        .map(|i| {
            let stretch = stretching_term(i, zeta, velocities, ctx)?;
            let diffuse = vorticity_diffusion(i, zeta, ctx, params)?;
            Ok(zeta[i] + (stretch + diffuse) * dt)
        })
        .collect()
}

/// Deficit between the transported vorticity and the curl of the
/// post-projection velocity.
pub fn vorticity_deficit(
    zeta_ideal: &[Vector3<f64>],
    projected_velocities: &[Vector3<f64>],
    ctx: &SphContext,
) -> Result<Vec<Vector3<f64>>> {
    let actual = compute_vorticity(projected_velocities, ctx)?;
    Ok(zeta_ideal
        .iter()
        .zip(&actual)
        .map(|(ideal, act)| ideal - act)
        .collect())
}

/// Truncated Green's-function stream function:
/// `psi_i = (1/4pi) sum_j dzeta_j V_j / |x_ij|` over fluid neighbors within
/// `stream_cutoff * h`; the self term is excluded and pair distances are
/// clamped below by `1e-6 h`.
pub fn stream_function(
    delta_zeta: &[Vector3<f64>],
    ctx: &SphContext,
    params: &SimParams,
) -> Result<Vec<Vector3<f64>>> {
    let cutoff = params.stream_cutoff * ctx.cfg.h();
    let cutoff2 = cutoff * cutoff;
    let r_min = 1e-6 * ctx.cfg.h();
    let inv_4pi = 1.0 / (4.0 * std::f64::consts::PI);
    (0..ctx.positions.len())
        .into_par_iter()
        .map(|i| {
            let xi = ctx.positions[i];
            let mut psi = Vector3::zeros();
            for &j in ctx.table.fluid_neighbors(i) {
                let j = j as usize;
                let r2 = (xi - ctx.positions[j]).norm_squared();
                if r2 > cutoff2 {
                    continue;
                }
                let rho = ctx.densities[j];
                if !(rho > 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "solver-state error: non-positive density {rho} for particle {j}"
                    )));
                }
                let r = r2.sqrt().max(r_min);
                psi += delta_zeta[j] * (ctx.masses[j] / rho / r);
            }
            Ok(psi * inv_4pi)
        })
        .collect()
}

/// Discrete curl of the stream function (the refinement velocity):
/// `dv_i = sum_j V_j (psi_i - psi_j) x gradW_ij`, with boundary neighbors
/// entering at `psi_b = 0`.
pub fn velocity_refinement(psi: &[Vector3<f64>], ctx: &SphContext) -> Result<Vec<Vector3<f64>>> {
    let zero = vec![Vector3::zeros(); ctx.boundary.len()];
    (0..ctx.positions.len())
        .into_par_iter()
        .map(|i| crate::sphops::curl_vec(i, psi, Some(&zero), ctx))
        .collect()
}

/// Vorticity-refining solver: the baseline stepper plus the refinement
/// pass, per-phase timed.
pub struct VrSolver {
    pub base: DfsphSolver,
    pub vorticity: VorticityState,
    pub last_vr_timings: VrPhaseTimings,
}

impl VrSolver {
    pub fn new() -> Self {
        Self {
            base: DfsphSolver::new(),
            vorticity: VorticityState::default(),
            last_vr_timings: VrPhaseTimings::default(),
        }
    }

    pub fn table(&self) -> &NeighborTable {
        self.base.table()
    }

    /// Vorticity of the refined velocities after a step.
    pub fn committed_vorticity_into(
        &self,
        state: &ParticleState,
        boundary: &BoundarySet,
        out: &mut Vec<Vector3<f64>>,
    ) {
        self.base.committed_vorticity_into(state, boundary, out);
    }

    /// One refined step: baseline phases in Algorithm-1 order with the
    /// vorticity measurements woven in, ending in
    /// `v^{n+1} = v_projected + alpha * delta_v`.
    pub fn step(
        &mut self,
        state: &mut ParticleState,
        boundary: &BoundarySet,
        params: &SimParams,
    ) -> Result<StepReport> {
        params.validate()?;
        state.validate()?;
        let mut report = StepReport::default();
        self.last_vr_timings = VrPhaseTimings::default();
        let n = state.len();
        if n == 0 {
            return Ok(report);
        }
        let cfg = params.smoothing()?;
        self.vorticity.resize(n);

        let t = Instant::now();
        self.base.prepare(state, boundary, &cfg)?;
        report.timings.neighbors_ms += elapsed_ms(t);

        // zeta^n and its ideal transport, both at step-start positions with
        // the committed velocities.
        let t = Instant::now();
        self.curl_sweep(state, boundary, true, CurlTarget::ZetaN);
        let dt_ms = elapsed_ms(t);
        self.last_vr_timings.curl_ms += dt_ms;
        report.timings.vr_ms += dt_ms;

        let t = Instant::now();
        self.transport_sweep(state, boundary, params, &cfg);
        let dt_ms = elapsed_ms(t);
        self.last_vr_timings.transport_ms = dt_ms;
        report.timings.vr_ms += dt_ms;

        let t = Instant::now();
        self.base.advect(state, boundary, params)?;
        report.timings.advect_ms += elapsed_ms(t);

        let t = Instant::now();
        self.base.refresh_final_cache(state, boundary, &cfg);
        report.timings.neighbors_ms += elapsed_ms(t);

        let t = Instant::now();
        self.base.begin_projection(state, boundary, params);
        report.density = self.base.solve_density(state, boundary, params);
        report.timings.density_ms += elapsed_ms(t);

        let t = Instant::now();
        report.divergence = self.base.solve_divergence(state, boundary, params);
        report.timings.divergence_ms += elapsed_ms(t);

        // Curl of the projected velocity at the final positions, then the
        // deficit, stream function, and refinement.
        let t = Instant::now();
        self.curl_sweep(state, boundary, false, CurlTarget::ZetaActual);
        let dt_ms = elapsed_ms(t);
        self.last_vr_timings.curl_ms += dt_ms;
        report.timings.vr_ms += dt_ms;

        let t = Instant::now();
        // probe hook: deficit masking experiments (0 = off, 1 = deficient
        // neighborhoods, 2 = deficient + wall-adjacent, 3 = wall-adjacent)
        let mask_mode: u32 = std::env::var("VORTIFLOW_PROBE_MASK")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(0);
        let table = &self.base.table;
        let vz = &mut self.vorticity;
        vz.delta_zeta.clear();
        vz.delta_zeta.extend(
            vz.zeta_ideal
                .iter()
                .zip(&vz.zeta_actual)
                .enumerate()
                .map(|(i, (ideal, actual))| {
                    let deficient = table.neighbor_count(i)
                        < crate::dfsph::MIN_NEIGHBORS_FOR_DIVERGENCE;
                    let wall = !table.boundary_neighbors(i).is_empty();
                    let masked = match mask_mode {
                        1 => deficient,
                        2 => deficient || wall,
                        3 => wall,
                        _ => false,
                    };
                    if masked {
                        Vector3::zeros()
                    } else {
                        ideal - actual
                    }
                }),
        );
        let dt_ms = elapsed_ms(t);
        self.last_vr_timings.deficit_ms = dt_ms;
        report.timings.vr_ms += dt_ms;

        let t = Instant::now();
        self.stream_sweep(state, params, &cfg);
        let dt_ms = elapsed_ms(t);
        self.last_vr_timings.stream_ms = dt_ms;
        report.timings.vr_ms += dt_ms;

        let t = Instant::now();
        self.refine_sweep(state, boundary, params);
        let dt_ms = elapsed_ms(t);
        self.last_vr_timings.refine_ms = dt_ms;
        report.timings.vr_ms += dt_ms;
        Ok(report)
    }

    /// Cached-gradient curl of the current velocities into the chosen
    /// vorticity buffer.
    fn curl_sweep(
        &mut self,
        state: &ParticleState,
        boundary: &BoundarySet,
        at_start: bool,
        target: CurlTarget,
    ) {
        let cache = if at_start {
            &self.base.cache_start
        } else {
            &self.base.cache_final
        };
        let out = match target {
            CurlTarget::ZetaN => &mut self.vorticity.zeta_n,
            CurlTarget::ZetaActual => &mut self.vorticity.zeta_actual,
        };
        crate::dfsph::cached_curl_sweep(
            &self.base.table,
            cache,
            &state.velocities,
            &boundary.velocities,
            &state.masses,
            &state.densities,
            boundary,
            out,
        );
    }

    /// zeta_ideal = zeta^n + dt * (stretching + diffusion) with step-start
    /// fields and the step-start cache. Boundary neighbors enter the
    /// velocity gradient with prescribed velocity; the zeta Laplacian is
    /// fluid-only.
    fn transport_sweep(
        &mut self,
        state: &ParticleState,
        boundary: &BoundarySet,
        params: &SimParams,
        cfg: &SmoothingConfig,
    ) {
        let table = &self.base.table;
        let cache = &self.base.cache_start;
        let positions = &state.positions;
        let velocities = &state.velocities;
        let masses = &state.masses;
        let densities = &state.densities;
        let zeta = &self.vorticity.zeta_n;
        let dt = params.dt;
        let nu = params.viscosity;
        let eps = 0.01 * cfg.h() * cfg.h();

        self.vorticity.zeta_ideal.clear();
        (0..state.len())
            .into_par_iter()
            .map(|i| {
                let xi = positions[i];
                let vi = velocities[i];
                let zi = zeta[i];
                let mut rows = [Vector3::zeros(); 3];
                let mut lap = Vector3::zeros();
                let range = table.fluid_range(i);
                for (k, &j) in table.fluid_neighbors(i).iter().enumerate() {
                    let j = j as usize;
                    let grad = cache.fluid_grad[range.start + k];
                    let vol = masses[j] / densities[j];
                    let dv = velocities[j] - vi;
                    rows[0] += grad * (vol * dv.x);
                    rows[1] += grad * (vol * dv.y);
                    rows[2] += grad * (vol * dv.z);
                    let x_ij = xi - positions[j];
                    let coeff = vol * (zi - zeta[j]).dot(&x_ij) / (x_ij.norm_squared() + eps);
                    lap += grad * coeff;
                }
                let brange = table.boundary_range(i);
                for (k, &b) in table.boundary_neighbors(i).iter().enumerate() {
                    let b = b as usize;
                    let grad = cache.boundary_grad[brange.start + k];
                    let vol = boundary.pseudo_volumes[b];
                    let dv = boundary.velocities[b] - vi;
                    rows[0] += grad * (vol * dv.x);
                    rows[1] += grad * (vol * dv.y);
                    rows[2] += grad * (vol * dv.z);
                }
                let stretch = Vector3::new(zi.dot(&rows[0]), zi.dot(&rows[1]), zi.dot(&rows[2]));
                zi + (stretch + lap * (10.0 * nu)) * dt
            })
            .collect_into_vec(&mut self.vorticity.zeta_ideal);
    }

    /// psi from the deficit over fluid neighbors within the cutoff.
    fn stream_sweep(&mut self, state: &ParticleState, params: &SimParams, cfg: &SmoothingConfig) {
        let table = &self.base.table;
        let positions = &state.positions;
        let masses = &state.masses;
        let densities = &state.densities;
        let delta_zeta = &self.vorticity.delta_zeta;
        let cutoff = params.stream_cutoff * cfg.h();
        let cutoff2 = cutoff * cutoff;
        let r_min = 1e-6 * cfg.h();
        let inv_4pi = 1.0 / (4.0 * std::f64::consts::PI);

        self.vorticity.psi.clear();
        (0..state.len())
            .into_par_iter()
            .map(|i| {
                let xi = positions[i];
                let mut psi = Vector3::zeros();
                for &j in table.fluid_neighbors(i) {
                    let j = j as usize;
                    let r2 = (xi - positions[j]).norm_squared();
                    if r2 > cutoff2 {
                        continue;
                    }
                    let r = r2.sqrt().max(r_min);
                    psi += delta_zeta[j] * (masses[j] / densities[j] / r);
                }
                psi * inv_4pi
            })
            .collect_into_vec(&mut self.vorticity.psi);
    }

    /// delta_v = curl(psi) via the cached gradients, recentered to zero
    /// net impulse, then v += alpha * delta_v.
    ///
    /// The curl-form pair terms do not cancel pairwise, so the raw sum
    /// carries a net impulse proportional to the stream function at the
    /// free surface. Subtracting the mass-weighted mean removes it without
    /// touching the rotational content (the curl of a constant field is
    /// zero).
    fn refine_sweep(&mut self, state: &mut ParticleState, boundary: &BoundarySet, params: &SimParams) {
        let table = &self.base.table;
        let cache = &self.base.cache_final;
        let masses = &state.masses;
        let densities = &state.densities;
        let psi = &self.vorticity.psi;

        self.vorticity.delta_v.clear();
        (0..state.len())
            .into_par_iter()
            .map(|i| {
                let psi_i = psi[i];
                let mut dv = Vector3::zeros();
                let range = table.fluid_range(i);
                for (k, &j) in table.fluid_neighbors(i).iter().enumerate() {
                    let j = j as usize;
                    dv += (psi_i - psi[j]).cross(&cache.fluid_grad[range.start + k])
                        * (masses[j] / densities[j]);
                }
                let brange = table.boundary_range(i);
                for (k, &b) in table.boundary_neighbors(i).iter().enumerate() {
                    let b = b as usize;
                    dv += psi_i.cross(&cache.boundary_grad[brange.start + k])
                        * boundary.pseudo_volumes[b];
                }
                dv
            })
            .collect_into_vec(&mut self.vorticity.delta_v);

        let total_mass: f64 = masses.iter().sum();
        let impulse = self
            .vorticity
            .delta_v
            .iter()
            .zip(masses)
            .fold(Vector3::zeros(), |acc, (dv, m)| acc + dv * *m);
        let shift = impulse / total_mass;
        self.vorticity
            .delta_v
            .iter_mut()
            .for_each(|dv| *dv -= shift);

        let alpha = params.alpha;
        let delta_v = &self.vorticity.delta_v;
        state
            .velocities
            .par_iter_mut()
            .enumerate()
            .for_each(|(i, v)| {
                *v += delta_v[i] * alpha;
            });
    }
}

enum CurlTarget {
    ZetaN,
    ZetaActual,
}

impl Default for VrSolver {
    fn default() -> Self {
        Self::new()
    }
}

fn elapsed_ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}
