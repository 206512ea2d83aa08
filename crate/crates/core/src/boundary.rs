//! Boundary sampling and Akinci-style pseudo-masses.
//!
//! Rigid geometry is sampled into a single layer of boundary particles.
//! Each particle carries a pseudo-volume `V_b = 1 / sum_k W_bk` over its
//! boundary neighborhood (self included) and a pseudo-mass
//! `Psi_b = rho0 * V_b` that couples it into fluid density and pressure.
//! Scripted bodies follow a prescribed rigid motion; there is no collision
//! feedback onto the body.

use nalgebra::{Rotation3, Unit, Vector3};

use crate::error::{Error, Result};
use crate::kernel::{kernel_value, SmoothingConfig};
use crate::neighbors::self_adjacency;

/// Prescribed rigid motion for a scripted boundary body: rotation about an
/// axis through a point, plus a linear drift, active on `[start, stop)`.
#[derive(Debug, Clone, Copy)]
pub struct RigidMotion {
    pub axis_point: Vector3<f64>,
    pub axis_dir: Vector3<f64>,
    /// Angular speed about `axis_dir` in rad/s.
    pub angular_velocity: f64,
    pub linear_velocity: Vector3<f64>,
    pub start_time: f64,
    pub stop_time: f64,
}

struct Body {
    start: usize,
    base_positions: Vec<Vector3<f64>>,
    motion: Option<RigidMotion>,
}

/// One boundary body: sampled positions plus an optional motion script.
pub struct BoundaryBody {
    pub positions: Vec<Vector3<f64>>,
    pub motion: Option<RigidMotion>,
}

/// Static and scripted boundary particles with pseudo-volumes.
///
/// Pseudo-volumes are computed once over the merged initial sampling and
/// kept fixed; rigid motion preserves distances within a body.
pub struct BoundarySet {
    pub positions: Vec<Vector3<f64>>,
    pub velocities: Vec<Vector3<f64>>,
    pub pseudo_volumes: Vec<f64>,
    pub pseudo_masses: Vec<f64>,
    bodies: Vec<Body>,
}

impl BoundarySet {
    pub fn empty() -> Self {
        Self {
            positions: Vec::new(),
            velocities: Vec::new(),
            pseudo_volumes: Vec::new(),
            pseudo_masses: Vec::new(),
            bodies: Vec::new(),
        }
    }

    /// Build from a single static sampling.
    pub fn from_static(
        positions: Vec<Vector3<f64>>,
        rest_density: f64,
        cfg: &SmoothingConfig,
    ) -> Result<Self> {
        Self::from_bodies(
            vec![BoundaryBody {
                positions,
                motion: None,
            }],
            rest_density,
            cfg,
        )
    }

    /// Build from several bodies; scripted ones keep their base sampling
    /// for motion updates.
    pub fn from_bodies(
        bodies: Vec<BoundaryBody>,
        rest_density: f64,
        cfg: &SmoothingConfig,
    ) -> Result<Self> {
        let mut positions = Vec::new();
        let mut records = Vec::new();
        for body in bodies {
            let start = positions.len();
            let base = if body.motion.is_some() {
                body.positions.clone()
            } else {
                Vec::new()
            };
            positions.extend_from_slice(&body.positions);
            records.push(Body {
                start,
                base_positions: base,
                motion: body.motion,
            });
        }

        let pseudo_volumes = compute_pseudo_volumes(&positions, cfg)?;
        let pseudo_masses = pseudo_volumes.iter().map(|v| v * rest_density).collect();
        let velocities = vec![Vector3::zeros(); positions.len()];
        Ok(Self {
            positions,
            velocities,
            pseudo_volumes,
            pseudo_masses,
            bodies: records,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn has_moving_bodies(&self) -> bool {
        self.bodies.iter().any(|b| b.motion.is_some())
    }

    /// Apply prescribed motion at simulation time `t`. Called between steps
    /// by a single writer.
    pub fn update_motion(&mut self, t: f64) {
        for body in &self.bodies {
            let Some(motion) = body.motion else { continue };
            let active = (t.min(motion.stop_time) - motion.start_time).max(0.0);
            let angle = motion.angular_velocity * active;
            let axis = Unit::new_normalize(motion.axis_dir);
            let rot = Rotation3::from_axis_angle(&axis, angle);
            let center = motion.axis_point + motion.linear_velocity * active;
            let is_active = t >= motion.start_time && t < motion.stop_time;
            let omega = axis.into_inner() * motion.angular_velocity;
            for (k, base) in body.base_positions.iter().enumerate() {
                let idx = body.start + k;
                let p = rot * (base - motion.axis_point) + center;
                self.positions[idx] = p;
                self.velocities[idx] = if is_active {
                    omega.cross(&(p - center)) + motion.linear_velocity
                } else {
                    Vector3::zeros()
                };
            }
        }
    }
}

/// Pseudo-volume per boundary particle: `V_b = 1 / sum_k W_bk`, summing over
/// boundary neighbors within the kernel support, self term included.
pub fn compute_pseudo_volumes(
    positions: &[Vector3<f64>],
    cfg: &SmoothingConfig,
) -> Result<Vec<f64>> {
    let (offsets, indices) = self_adjacency(positions, cfg.support_radius())?;
    let w0 = kernel_value(0.0, cfg);
    let volumes = positions
        .iter()
        .enumerate()
        .map(|(b, p)| {
            let mut denom = w0;
            for &k in &indices[offsets[b]..offsets[b + 1]] {
                denom += kernel_value((p - positions[k as usize]).norm(), cfg);
            }
            1.0 / denom
        })
        .collect();
    Ok(volumes)
}

/// Sample the faces of an axis-aligned box as a single particle layer.
/// Corner and edge nodes appear exactly once.
pub fn sample_box(
    min: Vector3<f64>,
    max: Vector3<f64>,
    spacing: f64,
) -> Result<Vec<Vector3<f64>>> {
    if !(spacing > 0.0) {
        return Err(Error::InvalidInput(format!(
            "boundary sampling spacing must be positive, got {spacing}"
        )));
    }
    let extent = max - min;
    if extent.iter().any(|e| *e <= 0.0) {
        return Err(Error::InvalidInput(format!(
            "degenerate box: min {:?} max {:?}",
            min.as_slice(),
            max.as_slice()
        )));
    }

    let segments = |len: f64| ((len / spacing).round() as usize).max(1);
    let (kx, ky, kz) = (segments(extent.x), segments(extent.y), segments(extent.z));
    let mut points = Vec::new();
    for ix in 0..=kx {
        for iy in 0..=ky {
            for iz in 0..=kz {
                let on_shell = ix == 0 || ix == kx || iy == 0 || iy == ky || iz == 0 || iz == kz;
                if !on_shell {
                    continue;
                }
                points.push(Vector3::new(
                    min.x + extent.x * ix as f64 / kx as f64,
                    min.y + extent.y * iy as f64 / ky as f64,
                    min.z + extent.z * iz as f64 / kz as f64,
                ));
            }
        }
    }
    Ok(points)
}

/// Sample a sphere surface with a Fibonacci spiral at roughly the given
/// spacing.
pub fn sample_sphere(
    center: Vector3<f64>,
    radius: f64,
    spacing: f64,
) -> Result<Vec<Vector3<f64>>> {
    if !(spacing > 0.0) || !(radius > 0.0) {
        return Err(Error::InvalidInput(format!(
            "sphere sampling needs positive radius and spacing, got r={radius}, s={spacing}"
        )));
    }
    let area = 4.0 * std::f64::consts::PI * radius * radius;
    let n = ((area / (spacing * spacing)).round() as usize).max(4);
    let golden = std::f64::consts::PI * (3.0 - 5.0f64.sqrt());
    let mut points = Vec::with_capacity(n);
    for k in 0..n {
        let y = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
        let r_ring = (1.0 - y * y).sqrt();
        let theta = golden * k as f64;
        points.push(
            center + Vector3::new(r_ring * theta.cos(), y, r_ring * theta.sin()) * radius,
        );
    }
    Ok(points)
}

/// Sample a closed cylinder (lateral surface plus end-cap disks).
pub fn sample_cylinder(
    p0: Vector3<f64>,
    p1: Vector3<f64>,
    radius: f64,
    spacing: f64,
) -> Result<Vec<Vector3<f64>>> {
    if !(spacing > 0.0) || !(radius > 0.0) {
        return Err(Error::InvalidInput(format!(
            "cylinder sampling needs positive radius and spacing, got r={radius}, s={spacing}"
        )));
    }
    let axis = p1 - p0;
    let length = axis.norm();
    if length <= 0.0 {
        return Err(Error::InvalidInput(
            "degenerate cylinder: coincident end points".into(),
        ));
    }
    let dir = axis / length;
    // Orthonormal frame around the axis.
    let pick = if dir.x.abs() < 0.9 {
        Vector3::x()
    } else {
        Vector3::y()
    };
    let u = dir.cross(&pick).normalize();
    let v = dir.cross(&u);

    let mut points = Vec::new();
    let n_axis = ((length / spacing).round() as usize).max(1);
    let ring = |r: f64, at: Vector3<f64>, points: &mut Vec<Vector3<f64>>| {
        let count = ((2.0 * std::f64::consts::PI * r / spacing).round() as usize).max(3);
        for k in 0..count {
            let phi = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
            points.push(at + (u * phi.cos() + v * phi.sin()) * r);
        }
    };
    for s in 0..=n_axis {
        ring(radius, p0 + dir * (length * s as f64 / n_axis as f64), &mut points);
    }
    // End caps as concentric rings down to the axis.
    for &cap in &[p0, p1] {
        let mut r = radius - spacing;
        while r > 0.5 * spacing {
            ring(r, cap, &mut points);
            r -= spacing;
        }
        points.push(cap);
    }
    Ok(points)
}
