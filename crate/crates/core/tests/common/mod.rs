//! Shared test support: an independently coded brute-force SPH oracle
//! (naive all-pairs loops, no neighbor grid), lattice builders, and the
//! operator check suite shared by the oracle tests and the acceptance
//! gate.
//!
//! The oracle deliberately re-derives the kernel from its polynomial
//! branches instead of calling the library, so agreement between the two
//! paths checks the whole discretization, not just the summation.

#![allow(dead_code)]

use nalgebra::Vector3;
use vortiflow::boundary::BoundarySet;
use vortiflow::dfsph::ParticleState;
use vortiflow::kernel::SmoothingConfig;
use vortiflow::neighbors::build_neighbor_table;
use vortiflow::sphops::SphContext;

pub type V3 = Vector3<f64>;

// --- independent kernel -------------------------------------------------

pub fn oracle_w(r: f64, h: f64) -> f64 {
    let q = r / h;
    let sigma = 1.0 / (std::f64::consts::PI * h.powi(3));
    if q < 1.0 {
        sigma * (1.0 - 1.5 * q.powi(2) + 0.75 * q.powi(3))
    } else if q < 2.0 {
        sigma * 0.25 * (2.0 - q).powi(3)
    } else {
        0.0
    }
}

pub fn oracle_grad_w(x_ij: V3, h: f64) -> V3 {
    let r = x_ij.norm();
    if r < 1e-9 * h {
        return V3::zeros();
    }
    let q = r / h;
    let sigma = 1.0 / (std::f64::consts::PI * h.powi(3));
    let fp = if q < 1.0 {
        -3.0 * q + 2.25 * q.powi(2)
    } else if q < 2.0 {
        -0.75 * (2.0 - q).powi(2)
    } else {
        0.0
    };
    x_ij * (sigma / h * fp / r)
}

// --- naive all-pairs operators ------------------------------------------

pub struct OracleCloud {
    pub positions: Vec<V3>,
    pub masses: Vec<f64>,
    pub densities: Vec<f64>,
    pub h: f64,
}

impl OracleCloud {
    fn volume(&self, j: usize) -> f64 {
        self.masses[j] / self.densities[j]
    }

    fn in_support(&self, i: usize, j: usize) -> bool {
        i != j && (self.positions[i] - self.positions[j]).norm() <= 2.0 * self.h
    }

    pub fn density(&self, i: usize) -> f64 {
        let mut rho = self.masses[i] * oracle_w(0.0, self.h);
        for j in 0..self.positions.len() {
            if self.in_support(i, j) {
                rho += self.masses[j]
                    * oracle_w((self.positions[i] - self.positions[j]).norm(), self.h);
            }
        }
        rho
    }

    pub fn grad_scalar(&self, i: usize, field: &[f64]) -> V3 {
        let mut out = V3::zeros();
        for j in 0..self.positions.len() {
            if self.in_support(i, j) {
                let g = oracle_grad_w(self.positions[i] - self.positions[j], self.h);
                out += g * (self.volume(j) * (field[j] - field[i]));
            }
        }
        out
    }

    pub fn div_vec(&self, i: usize, field: &[V3]) -> f64 {
        let mut out = 0.0;
        for j in 0..self.positions.len() {
            if self.in_support(i, j) {
                let g = oracle_grad_w(self.positions[i] - self.positions[j], self.h);
                out += self.volume(j) * (field[j] - field[i]).dot(&g);
            }
        }
        out
    }

    pub fn curl_vec(&self, i: usize, field: &[V3]) -> V3 {
        let mut out = V3::zeros();
        for j in 0..self.positions.len() {
            if self.in_support(i, j) {
                let g = oracle_grad_w(self.positions[i] - self.positions[j], self.h);
                out += (field[i] - field[j]).cross(&g) * self.volume(j);
            }
        }
        out
    }

    pub fn laplacian_vec(&self, i: usize, field: &[V3]) -> V3 {
        let mut out = V3::zeros();
        let eps = 0.01 * self.h * self.h;
        for j in 0..self.positions.len() {
            if self.in_support(i, j) {
                let x_ij = self.positions[i] - self.positions[j];
                let g = oracle_grad_w(x_ij, self.h);
                out += g
                    * (self.volume(j) * (field[i] - field[j]).dot(&x_ij)
                        / (x_ij.norm_squared() + eps));
            }
        }
        out * 10.0
    }

    pub fn stream_function(&self, i: usize, delta_zeta: &[V3], cutoff: f64) -> V3 {
        let mut psi = V3::zeros();
        for j in 0..self.positions.len() {
            if i == j {
                continue;
            }
            let r = (self.positions[i] - self.positions[j]).norm();
            if r > cutoff {
                continue;
            }
            psi += delta_zeta[j] * (self.volume(j) / r.max(1e-6 * self.h));
        }
        psi / (4.0 * std::f64::consts::PI)
    }

    pub fn naive_neighbors(&self, i: usize) -> Vec<u32> {
        (0..self.positions.len())
            .filter(|&j| self.in_support(i, j))
            .map(|j| j as u32)
            .collect()
    }
}

// --- lattice construction -------------------------------------------------

/// Cubic lattice of `n_side^3` points centered at the origin.
pub fn lattice(n_side: usize, spacing: f64) -> Vec<V3> {
    let half = (n_side as f64 - 1.0) / 2.0;
    let mut out = Vec::with_capacity(n_side * n_side * n_side);
    for i in 0..n_side {
        for j in 0..n_side {
            for k in 0..n_side {
                out.push(V3::new(i as f64 - half, j as f64 - half, k as f64 - half) * spacing);
            }
        }
    }
    out
}

/// Lattice cloud with water-like mass per particle and unit rest density
/// volumes: `m = rho0 dx^3`, `rho = rho0`, assuming the given smoothing.
pub fn lattice_cloud(n_side: usize, spacing: f64, h: f64) -> OracleCloud {
    let positions = lattice(n_side, spacing);
    let n = positions.len();
    OracleCloud {
        positions,
        masses: vec![1000.0 * spacing.powi(3); n],
        densities: vec![1000.0; n],
        h,
    }
}

/// Indices of particles whose full kernel support lies inside the lattice.
pub fn interior_indices(n_side: usize, spacing: f64, h: f64) -> Vec<usize> {
    let half = (n_side as f64 - 1.0) / 2.0;
    let limit = half * spacing - 2.0 * h;
    let positions = lattice(n_side, spacing);
    positions
        .iter()
        .enumerate()
        .filter(|(_, p)| p.iter().all(|c| c.abs() <= limit + 1e-12))
        .map(|(i, _)| i)
        .collect()
}

/// Library-side state mirroring an oracle cloud.
pub fn cloud_state(cloud: &OracleCloud) -> ParticleState {
    ParticleState {
        positions: cloud.positions.clone(),
        velocities: vec![V3::zeros(); cloud.positions.len()],
        masses: cloud.masses.clone(),
        densities: cloud.densities.clone(),
    }
}

pub struct CtxBundle {
    pub state: ParticleState,
    pub boundary: BoundarySet,
    pub table: vortiflow::NeighborTable,
    pub cfg: SmoothingConfig,
}

impl CtxBundle {
    pub fn from_cloud(cloud: &OracleCloud) -> Self {
        let state = cloud_state(cloud);
        let cfg = SmoothingConfig::new(cloud.h).unwrap();
        let table = build_neighbor_table(&state.positions, &[], &cfg).unwrap();
        Self {
            state,
            boundary: BoundarySet::empty(),
            table,
            cfg,
        }
    }

    pub fn ctx(&self) -> SphContext<'_> {
        SphContext {
            positions: &self.state.positions,
            masses: &self.state.masses,
            densities: &self.state.densities,
            boundary: &self.boundary,
            table: &self.table,
            cfg: self.cfg,
        }
    }
}

// --- check plumbing -------------------------------------------------------

pub type CheckResult = Result<(), String>;

pub fn check(name: &str, outcome: CheckResult, failures: &mut Vec<String>) {
    if let Err(msg) = outcome {
        failures.push(format!("{name}: {msg}"));
    }
}

pub fn close(actual: f64, expected: f64, tol_abs: f64, what: &str) -> CheckResult {
    if (actual - expected).abs() <= tol_abs {
        Ok(())
    } else {
        Err(format!(
            "{what}: got {actual}, expected {expected} (tol {tol_abs})"
        ))
    }
}

pub fn close_rel(actual: f64, expected: f64, tol_rel: f64, what: &str) -> CheckResult {
    close(actual, expected, tol_rel * expected.abs(), what)
}

pub fn vectors_close(actual: V3, expected: V3, tol_abs: f64, what: &str) -> CheckResult {
    for a in 0..3 {
        if (actual[a] - expected[a]).abs() > tol_abs {
            return Err(format!(
                "{what}: component {a}: got {}, expected {} (tol {tol_abs})",
                actual[a], expected[a]
            ));
        }
    }
    Ok(())
}

/// Implementation value vs the brute-force oracle: tight tolerance scaled
/// by the oracle magnitude.
pub fn matches_oracle(actual: V3, oracle: V3, what: &str) -> CheckResult {
    let scale = oracle.norm().max(1e-12);
    if (actual - oracle).norm() <= 1e-11 * scale {
        Ok(())
    } else {
        Err(format!(
            "{what}: implementation {:?} differs from oracle {:?}",
            actual.as_slice(),
            oracle.as_slice()
        ))
    }
}

pub fn matches_oracle_scalar(actual: f64, oracle: f64, what: &str) -> CheckResult {
    let scale = oracle.abs().max(1e-12);
    if (actual - oracle).abs() <= 1e-11 * scale {
        Ok(())
    } else {
        Err(format!(
            "{what}: implementation {actual} differs from oracle {oracle}"
        ))
    }
}

// --- the operator oracle suite --------------------------------------------

/// Every lattice example of the discrete operators, each checked twice:
/// implementation against the brute-force oracle, and the oracle against
/// its continuum target at the stated tolerance. Returns failure messages.
pub fn run_operator_oracle_suite() -> Vec<String> {
    let mut failures = Vec::new();
    let h = 1.0;

    // Bulk lattice at spacing h: density, gradient, divergence, curl.
    let cloud = lattice_cloud(7, h, h);
    let bundle = CtxBundle::from_cloud(&cloud);
    let ctx = bundle.ctx();
    let center = cloud.positions.len() / 2;

    let rho_impl = vortiflow::sphops::density(center, &ctx);
    let rho_oracle = cloud.density(center);
    check(
        "density/bulk-oracle",
        matches_oracle_scalar(rho_impl, rho_oracle, "bulk density"),
        &mut failures,
    );
    check(
        "density/bulk-range",
        if (990.0..=1010.0).contains(&rho_oracle) {
            Ok(())
        } else {
            Err(format!("bulk density {rho_oracle} outside [990, 1010]"))
        },
        &mut failures,
    );

    let coord_field: Vec<f64> = cloud.positions.iter().map(|p| p.x).collect();
    let g_impl = vortiflow::sphops::grad_scalar(center, &coord_field, None, &ctx).unwrap();
    let g_oracle = cloud.grad_scalar(center, &coord_field);
    check(
        "grad_scalar/linear-oracle",
        matches_oracle(g_impl, g_oracle, "grad of x"),
        &mut failures,
    );
    check(
        "grad_scalar/linear-continuum",
        vectors_close(g_oracle, V3::new(1.0, 0.0, 0.0), 0.05, "grad of x vs (1,0,0)"),
        &mut failures,
    );

    let identity: Vec<V3> = cloud.positions.clone();
    let d_impl = vortiflow::sphops::div_vec(center, &identity, None, &ctx).unwrap();
    let d_oracle = cloud.div_vec(center, &identity);
    check(
        "div_vec/identity-oracle",
        matches_oracle_scalar(d_impl, d_oracle, "div of identity"),
        &mut failures,
    );
    check(
        "div_vec/identity-continuum",
        close_rel(d_oracle, 3.0, 0.05, "div of identity vs 3"),
        &mut failures,
    );

    let omega = V3::new(0.0, 0.0, 1.0);
    let rotation: Vec<V3> = cloud.positions.iter().map(|p| omega.cross(p)).collect();
    let rot_div = cloud.div_vec(center, &rotation);
    check(
        "div_vec/rotation-continuum",
        close(rot_div, 0.0, 0.05 * omega.norm(), "div of rotation vs 0"),
        &mut failures,
    );
    let c_impl = vortiflow::sphops::curl_vec(center, &rotation, None, &ctx).unwrap();
    let c_oracle = cloud.curl_vec(center, &rotation);
    check(
        "curl_vec/rotation-oracle",
        matches_oracle(c_impl, c_oracle, "curl of rotation"),
        &mut failures,
    );
    check(
        "curl_vec/rotation-continuum",
        vectors_close(c_oracle, V3::new(0.0, 0.0, 2.0), 0.05 * 2.0, "curl of rotation vs 2w"),
        &mut failures,
    );

    // Linear vector field: the artificial Laplacian vanishes.
    let linear: Vec<V3> = cloud.positions.iter().map(|p| V3::new(p.x, 0.0, 0.0)).collect();
    let lap_impl = vortiflow::sphops::laplacian_vec(center, &linear, None, &ctx).unwrap();
    let lap_oracle = cloud.laplacian_vec(center, &linear);
    check(
        "laplacian/linear-oracle",
        vectors_close(lap_impl, lap_oracle, 1e-12, "lap linear impl vs oracle"),
        &mut failures,
    );
    check(
        "laplacian/linear-continuum",
        vectors_close(lap_oracle, V3::zeros(), 0.1, "lap of linear field vs 0"),
        &mut failures,
    );

    // Quadratic fields sampled at spacing h/2 (a 9^3 lattice covers the
    // support). The artificial operator converges to lap(A) + 2 grad(div A);
    // the divergence-free variant isolates the Laplacian.
    let fine = lattice_cloud(9, 0.5 * h, h);
    let fine_bundle = CtxBundle::from_cloud(&fine);
    let fine_ctx = fine_bundle.ctx();
    let fine_center = fine.positions.len() / 2;

    let solenoidal: Vec<V3> = fine
        .positions
        .iter()
        .map(|p| V3::new(p.y * p.y, 0.0, 0.0))
        .collect();
    let lap_impl = vortiflow::sphops::laplacian_vec(fine_center, &solenoidal, None, &fine_ctx).unwrap();
    let lap_oracle = fine.laplacian_vec(fine_center, &solenoidal);
    check(
        "laplacian/quadratic-oracle",
        matches_oracle(lap_impl, lap_oracle, "lap quadratic"),
        &mut failures,
    );
    check(
        "laplacian/quadratic-continuum",
        vectors_close(lap_oracle, V3::new(2.0, 0.0, 0.0), 0.2 * 2.0, "lap of (y^2,0,0) vs (2,0,0)"),
        &mut failures,
    );

    // Non-solenoidal quadratic: the operator's true limit carries the
    // grad-div term, lap + 2 grad div = (6,0,0) for (x^2,0,0).
    let stretched: Vec<V3> = fine
        .positions
        .iter()
        .map(|p| V3::new(p.x * p.x, 0.0, 0.0))
        .collect();
    let lap_oracle = fine.laplacian_vec(fine_center, &stretched);
    check(
        "laplacian/grad-div-limit",
        vectors_close(lap_oracle, V3::new(6.0, 0.0, 0.0), 0.2 * 6.0, "lap of (x^2,0,0) vs (6,0,0)"),
        &mut failures,
    );

    // Vorticity measurement on a rigid rotation.
    let vort_impl = vortiflow::vr::compute_vorticity(&rotation, &ctx).unwrap();
    check(
        "vorticity/rotation-oracle",
        matches_oracle(vort_impl[center], c_oracle, "vorticity vs curl oracle"),
        &mut failures,
    );
    check(
        "vorticity/rotation-continuum",
        vectors_close(vort_impl[center], V3::new(0.0, 0.0, 2.0), 0.05 * 2.0, "vorticity vs 2w"),
        &mut failures,
    );

    // Stretching under an axisymmetric strain v = (x, -y/2, -z/2) s with
    // zeta = (zx, 0, 0): continuum value (s zx, 0, 0).
    let s = 1.3;
    let zx = 0.7;
    let strain: Vec<V3> = cloud
        .positions
        .iter()
        .map(|p| V3::new(p.x, -0.5 * p.y, -0.5 * p.z) * s)
        .collect();
    let zeta_field = vec![V3::new(zx, 0.0, 0.0); cloud.positions.len()];
    let stretch = vortiflow::vr::stretching_term(center, &zeta_field, &strain, &ctx).unwrap();
    let stretch_oracle = V3::new(
        V3::new(zx, 0.0, 0.0).dot(&cloud.grad_scalar(center, &strain.iter().map(|v| v.x).collect::<Vec<_>>())),
        V3::new(zx, 0.0, 0.0).dot(&cloud.grad_scalar(center, &strain.iter().map(|v| v.y).collect::<Vec<_>>())),
        V3::new(zx, 0.0, 0.0).dot(&cloud.grad_scalar(center, &strain.iter().map(|v| v.z).collect::<Vec<_>>())),
    );
    check(
        "stretching/strain-oracle",
        matches_oracle(stretch, stretch_oracle, "stretching"),
        &mut failures,
    );
    check(
        "stretching/strain-continuum",
        vectors_close(stretch, V3::new(s * zx, 0.0, 0.0), 0.1 * (s * zx), "stretching vs (s zx,0,0)"),
        &mut failures,
    );

    // Uniform velocity: stretching vanishes.
    let uniform = vec![V3::new(0.3, -0.2, 0.9); cloud.positions.len()];
    let stretch0 = vortiflow::vr::stretching_term(center, &zeta_field, &uniform, &ctx).unwrap();
    check(
        "stretching/uniform",
        vectors_close(stretch0, V3::zeros(), 1e-12 * zx, "stretching of uniform flow"),
        &mut failures,
    );

    // Vorticity diffusion: linear field vanishes, divergence-free
    // quadratic gives 2 nu.
    let params = {
        let mut p = vortiflow::SimParams::new(h, 0.001);
        p.viscosity = 0.05;
        p
    };
    let zeta_linear: Vec<V3> = cloud.positions.iter().map(|p| V3::new(p.x, 0.0, 0.0)).collect();
    let diff_lin = vortiflow::vr::vorticity_diffusion(center, &zeta_linear, &ctx, &params).unwrap();
    check(
        "diffusion/linear",
        vectors_close(diff_lin, V3::zeros(), 0.1 * params.viscosity, "diffusion of linear zeta"),
        &mut failures,
    );
    let zeta_quad: Vec<V3> = fine
        .positions
        .iter()
        .map(|p| V3::new(p.y * p.y, 0.0, 0.0))
        .collect();
    let diff_quad =
        vortiflow::vr::vorticity_diffusion(fine_center, &zeta_quad, &fine_ctx, &params).unwrap();
    let diff_oracle = fine.laplacian_vec(fine_center, &zeta_quad) * params.viscosity;
    check(
        "diffusion/quadratic-oracle",
        matches_oracle(diff_quad, diff_oracle, "diffusion quadratic"),
        &mut failures,
    );
    check(
        "diffusion/quadratic-continuum",
        vectors_close(
            diff_quad,
            V3::new(2.0 * params.viscosity, 0.0, 0.0),
            0.2 * 2.0 * params.viscosity,
            "diffusion vs 2 nu",
        ),
        &mut failures,
    );

    // Transport of a rigid-rotation slab: uniform zeta stretches to ~zero,
    // so the ideal field stays within 5% of zeta^n on interior particles.
    {
        let mut p = params;
        p.dt = 0.01;
        let zeta_rot = vec![V3::new(0.0, 0.0, 2.0); cloud.positions.len()];
        let ideal = vortiflow::vr::transport_vorticity(&zeta_rot, &rotation, &ctx, &p).unwrap();
        for &i in &interior_indices(7, h, h) {
            if let Err(e) = vectors_close(
                ideal[i],
                zeta_rot[i],
                0.05 * zeta_rot[i].norm(),
                &format!("transport at interior particle {i}"),
            ) {
                failures.push(format!("transport/rotation: {e}"));
                break;
            }
        }
    }

    // Stream function against the oracle on a disordered-ish field.
    {
        let params = vortiflow::SimParams::new(h, 0.001);
        let dz: Vec<V3> = (0..cloud.positions.len())
            .map(|i| V3::new((i % 5) as f64 - 2.0, (i % 3) as f64, 0.25 * (i % 7) as f64))
            .collect();
        let psi = vortiflow::vr::stream_function(&dz, &ctx, &params).unwrap();
        let cutoff = params.stream_cutoff * h;
        let psi_oracle = cloud.stream_function(center, &dz, cutoff);
        check(
            "stream_function/oracle",
            matches_oracle(psi[center], psi_oracle, "stream function"),
            &mut failures,
        );
    }

    // Velocity refinement of a sampled smooth stream function
    // psi = (0,0,sin x): the discrete curl must align with the continuum
    // curl (0, -cos x, 0) within 10 degrees and 30% magnitude.
    {
        let hh = 0.5;
        let fine7 = lattice_cloud(9, hh, hh);
        let b = CtxBundle::from_cloud(&fine7);
        let cctx = b.ctx();
        let psi: Vec<V3> = fine7
            .positions
            .iter()
            .map(|p| V3::new(0.0, 0.0, p.x.sin()))
            .collect();
        let dv = vortiflow::vr::velocity_refinement(&psi, &cctx).unwrap();
        for &i in &interior_indices(9, hh, hh) {
            let x = fine7.positions[i].x;
            let target = V3::new(0.0, -x.cos(), 0.0);
            if target.norm() < 0.5 {
                continue;
            }
            let got = dv[i];
            let cosangle = got.dot(&target) / (got.norm() * target.norm());
            if cosangle < (10.0f64).to_radians().cos() {
                failures.push(format!(
                    "velocity_refinement/direction: particle {i}: angle cos {cosangle} (needs within 10 deg of true curl)"
                ));
                break;
            }
            if (got.norm() - target.norm()).abs() > 0.3 * target.norm() {
                failures.push(format!(
                    "velocity_refinement/magnitude: particle {i}: |dv| = {} vs |curl| = {}",
                    got.norm(),
                    target.norm()
                ));
                break;
            }
        }
    }

    failures
}
