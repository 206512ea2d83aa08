//! Discrete SPH differential operators shared by the pressure and
//! vorticity solvers: density summation, difference-form gradient,
//! divergence and curl, and the artificial Laplacian.
//!
//! Gradient and divergence take differences as `A_j - A_i`; curl takes
//! `A_i - A_j`, the one explicit curl orientation in use everywhere.
//! Boundary particles enter with pseudo-volume weights and prescribed
//! field values when a boundary field is supplied, and are skipped
//! otherwise (they carry no vorticity unknowns).

use nalgebra::Vector3;

use crate::boundary::BoundarySet;
use crate::error::{Error, Result};
use crate::kernel::{kernel_gradient, kernel_value, SmoothingConfig};
use crate::neighbors::NeighborTable;

/// Borrowed view of everything an operator evaluation needs.
#[derive(Clone, Copy)]
pub struct SphContext<'a> {
    pub positions: &'a [Vector3<f64>],
    pub masses: &'a [f64],
    pub densities: &'a [f64],
    pub boundary: &'a BoundarySet,
    pub table: &'a NeighborTable,
    pub cfg: SmoothingConfig,
}

impl<'a> SphContext<'a> {
    fn volume(&self, j: usize) -> Result<f64> {
        let rho = self.densities[j];
        if !(rho > 0.0) {
            return Err(Error::InvalidInput(format!(
                "solver-state error: non-positive density {rho} for particle {j}"
            )));
        }
        Ok(self.masses[j] / rho)
    }
}

/// SPH density at particle `i`: self term plus fluid and boundary sums.
pub fn density(i: usize, ctx: &SphContext) -> f64 {
    let xi = ctx.positions[i];
    let mut rho = ctx.masses[i] * kernel_value(0.0, &ctx.cfg);
    for &j in ctx.table.fluid_neighbors(i) {
        let j = j as usize;
        let r = (xi - ctx.positions[j]).norm();
        rho += ctx.masses[j] * kernel_value(r, &ctx.cfg);
    }
    for &b in ctx.table.boundary_neighbors(i) {
        let b = b as usize;
        let r = (xi - ctx.boundary.positions[b]).norm();
        rho += ctx.boundary.pseudo_masses[b] * kernel_value(r, &ctx.cfg);
    }
    rho
}

/// Difference-form gradient of a scalar field:
/// `sum_j (m_j/rho_j)(A_j - A_i) grad W_ij`.
pub fn grad_scalar(
    i: usize,
    field: &[f64],
    boundary_field: Option<&[f64]>,
    ctx: &SphContext,
) -> Result<Vector3<f64>> {
    let xi = ctx.positions[i];
    let ai = field[i];
    let mut out = Vector3::zeros();
    for &j in ctx.table.fluid_neighbors(i) {
        let j = j as usize;
        let grad = kernel_gradient(&(xi - ctx.positions[j]), &ctx.cfg);
        out += grad * (ctx.volume(j)? * (field[j] - ai));
    }
    if let Some(bf) = boundary_field {
        for &b in ctx.table.boundary_neighbors(i) {
            let b = b as usize;
            let grad = kernel_gradient(&(xi - ctx.boundary.positions[b]), &ctx.cfg);
            out += grad * (ctx.boundary.pseudo_volumes[b] * (bf[b] - ai));
        }
    }
    Ok(out)
}

/// Difference-form divergence: `sum_j (m_j/rho_j)(A_j - A_i) . grad W_ij`.
pub fn div_vec(
    i: usize,
    field: &[Vector3<f64>],
    boundary_field: Option<&[Vector3<f64>]>,
    ctx: &SphContext,
) -> Result<f64> {
    let xi = ctx.positions[i];
    let ai = field[i];
    let mut out = 0.0;
    for &j in ctx.table.fluid_neighbors(i) {
        let j = j as usize;
        let grad = kernel_gradient(&(xi - ctx.positions[j]), &ctx.cfg);
        out += ctx.volume(j)? * (field[j] - ai).dot(&grad);
    }
    if let Some(bf) = boundary_field {
        for &b in ctx.table.boundary_neighbors(i) {
            let b = b as usize;
            let grad = kernel_gradient(&(xi - ctx.boundary.positions[b]), &ctx.cfg);
            out += ctx.boundary.pseudo_volumes[b] * (bf[b] - ai).dot(&grad);
        }
    }
    Ok(out)
}

/// Curl with the `A_i - A_j` orientation:
/// `sum_j (m_j/rho_j)(A_i - A_j) x grad W_ij`.
pub fn curl_vec(
    i: usize,
    field: &[Vector3<f64>],
    boundary_field: Option<&[Vector3<f64>]>,
    ctx: &SphContext,
) -> Result<Vector3<f64>> {
    let xi = ctx.positions[i];
    let ai = field[i];
    let mut out = Vector3::zeros();
    for &j in ctx.table.fluid_neighbors(i) {
        let j = j as usize;
        let grad = kernel_gradient(&(xi - ctx.positions[j]), &ctx.cfg);
        out += (ai - field[j]).cross(&grad) * ctx.volume(j)?;
    }
    if let Some(bf) = boundary_field {
        for &b in ctx.table.boundary_neighbors(i) {
            let b = b as usize;
            let grad = kernel_gradient(&(xi - ctx.boundary.positions[b]), &ctx.cfg);
            out += (ai - bf[b]).cross(&grad) * ctx.boundary.pseudo_volumes[b];
        }
    }
    Ok(out)
}

/// Artificial Laplacian of a vector field:
/// `2(d+2) sum_j (m_j/rho_j) (A_ij . x_ij)/(|x_ij|^2 + 0.01 h^2) grad W_ij`
/// with d = 3. Approximates the Laplacian of divergence-free fields.
pub fn laplacian_vec(
    i: usize,
    field: &[Vector3<f64>],
    boundary_field: Option<&[Vector3<f64>]>,
    ctx: &SphContext,
) -> Result<Vector3<f64>> {
    let xi = ctx.positions[i];
    let ai = field[i];
    let eps = 0.01 * ctx.cfg.h() * ctx.cfg.h();
    let mut out = Vector3::zeros();
    for &j in ctx.table.fluid_neighbors(i) {
        let j = j as usize;
        let x_ij = xi - ctx.positions[j];
        let grad = kernel_gradient(&x_ij, &ctx.cfg);
        let coeff = ctx.volume(j)? * (ai - field[j]).dot(&x_ij) / (x_ij.norm_squared() + eps);
        out += grad * coeff;
    }
    if let Some(bf) = boundary_field {
        for &b in ctx.table.boundary_neighbors(i) {
            let b = b as usize;
            let x_ib = xi - ctx.boundary.positions[b];
            let grad = kernel_gradient(&x_ib, &ctx.cfg);
            let coeff = ctx.boundary.pseudo_volumes[b] * (ai - bf[b]).dot(&x_ib)
                / (x_ib.norm_squared() + eps);
            out += grad * coeff;
        }
    }
    Ok(out * 10.0)
}
