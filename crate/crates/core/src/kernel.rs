//! Cubic spline smoothing kernel (Monaghan), its gradient, and the
//! support-radius configuration shared by every SPH summation.

use nalgebra::Vector3;

use crate::error::{Error, Result};

/// Smoothing-length configuration. The cubic spline has compact support
/// `2h`, and all neighbor sums use that full support as cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingConfig {
    h: f64,
    support_radius: f64,
    sigma: f64,
}

impl SmoothingConfig {
    /// Build a configuration from the smoothing length `h` (meters).
    pub fn new(h: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidInput(format!(
                "smoothing length must be positive and finite, got {h}"
            )));
        }
        Ok(Self {
            h,
            support_radius: 2.0 * h,
            sigma: 1.0 / (std::f64::consts::PI * h * h * h),
        })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    /// 3D normalization constant `1 / (pi h^3)`.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// Dimensionless kernel profile f(q) with W = sigma * f(q), q = r/h.
#[inline]
fn profile(q: f64) -> f64 {
    if q < 1.0 {
        1.0 - 1.5 * q * q + 0.75 * q * q * q
    } else if q < 2.0 {
        let t = 2.0 - q;
        0.25 * t * t * t
    } else {
        0.0
    }
}

/// Derivative of the profile, f'(q).
#[inline]
fn profile_deriv(q: f64) -> f64 {
    if q < 1.0 {
        (-3.0 + 2.25 * q) * q
    } else if q < 2.0 {
        let t = 2.0 - q;
        -0.75 * t * t
    } else {
        0.0
    }
}

/// Kernel value W(r, h) in 1/m^3 for a nonnegative distance `r`.
///
/// Panics on negative `r`, which is outside the kernel's domain.
#[inline]
pub fn kernel_value(r: f64, cfg: &SmoothingConfig) -> f64 {
    assert!(r >= 0.0, "kernel_value: negative distance {r}");
    cfg.sigma * profile(r / cfg.h)
}

/// Kernel gradient with respect to `x_i`, evaluated at `x_ij = x_i - x_j`.
///
/// Returns the zero vector for separations below `1e-9 * h`, where the
/// radial direction is undefined.
#[inline]
pub fn kernel_gradient(x_ij: &Vector3<f64>, cfg: &SmoothingConfig) -> Vector3<f64> {
    let r = x_ij.norm();
    if r < 1e-9 * cfg.h {
        return Vector3::zeros();
    }
    let q = r / cfg.h;
    let dw_dr = cfg.sigma / cfg.h * profile_deriv(q);
    x_ij * (dw_dr / r)
}

/// Kernel value and gradient from a squared distance, skipping the square
/// root outside the support. Shared by the neighbor-sweep hot paths.
#[inline]
pub(crate) fn kernel_value_gradient(
    x_ij: &Vector3<f64>,
    r2: f64,
    cfg: &SmoothingConfig,
) -> (f64, Vector3<f64>) {
    let support2 = cfg.support_radius * cfg.support_radius;
    if r2 >= support2 {
        return (0.0, Vector3::zeros());
    }
    let r = r2.sqrt();
    let q = r / cfg.h;
    let w = cfg.sigma * profile(q);
    if r < 1e-9 * cfg.h {
        return (w, Vector3::zeros());
    }
    let dw_dr = cfg.sigma / cfg.h * profile_deriv(q);
    (w, x_ij * (dw_dr / r))
}
