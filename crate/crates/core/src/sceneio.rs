//! Scene configuration ingestion, fluid-block emission, and snapshot
//! persistence.
//!
//! Scenes are strict-schema JSON: unknown keys are rejected with a
//! nearest-key suggestion. Snapshots are little-endian binary with magic
//! `SPHVR1\n`, one pad byte, `u32` particle count, `u32` reserved, `f64`
//! time, then ten `f64` per particle (position, velocity, density,
//! vorticity magnitude); the layout round-trips bitwise.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::Deserialize;

use crate::boundary::{sample_box, sample_cylinder, sample_sphere, BoundaryBody, BoundarySet, RigidMotion};
use crate::dfsph::{ParticleState, SimParams};
use crate::error::{Error, Result};

const SNAPSHOT_MAGIC: &[u8; 7] = b"SPHVR1\n";

/// Axis-aligned box.
#[derive(Debug, Clone, Copy)]
pub struct Aabb {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl Aabb {
    pub fn extent(&self) -> Vector3<f64> {
        self.max - self.min
    }

    pub fn contains(&self, other: &Aabb) -> bool {
        (0..3).all(|a| other.min[a] >= self.min[a] && other.max[a] <= self.max[a])
    }

    fn overlaps(&self, other: &Aabb) -> bool {
        (0..3).all(|a| self.min[a] < other.max[a] && other.min[a] < self.max[a])
    }
}

/// One emitted fluid region with an optional initial velocity.
#[derive(Debug, Clone, Copy)]
pub struct FluidBlock {
    pub bounds: Aabb,
    pub velocity: Vector3<f64>,
}

/// Analytic boundary shell shapes.
#[derive(Debug, Clone)]
pub enum BoundaryShape {
    Box { min: Vector3<f64>, max: Vector3<f64> },
    Sphere { center: Vector3<f64>, radius: f64 },
    Cylinder { start: Vector3<f64>, end: Vector3<f64>, radius: f64 },
}

/// A scripted boundary body.
#[derive(Debug, Clone)]
pub struct MovingBoundary {
    pub shape: BoundaryShape,
    pub motion: RigidMotion,
}

/// Solver settings as written in the scene file; unset fields take
/// defaults when resolved into `SimParams`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SolverOverrides {
    pub dt: Option<f64>,
    pub viscosity: Option<f64>,
    pub density_error: Option<f64>,
    pub divergence_error: Option<f64>,
    pub min_density_iters: Option<u32>,
    pub max_density_iters: Option<u32>,
    pub min_divergence_iters: Option<u32>,
    pub max_divergence_iters: Option<u32>,
    pub alpha: Option<f64>,
    pub stream_cutoff: Option<f64>,
}

/// Validated scene configuration with defaults applied.
#[derive(Debug, Clone)]
pub struct SceneConfig {
    pub domain: Aabb,
    pub gravity: Vector3<f64>,
    pub rest_density: f64,
    pub particle_spacing: f64,
    pub boundary_spacing: f64,
    pub fluid_blocks: Vec<FluidBlock>,
    pub boundary_boxes: Vec<Aabb>,
    pub moving_boundaries: Vec<MovingBoundary>,
    pub solver: SolverOverrides,
    pub snapshot_every: u64,
    pub output_directory: PathBuf,
}

impl SceneConfig {
    /// Smoothing length: equal to the particle spacing.
    pub fn smoothing_length(&self) -> f64 {
        self.particle_spacing
    }

    /// Resolve solver settings (after any overrides were applied) into
    /// concrete parameters. The divergence tolerance default depends on
    /// the resolved time step.
    pub fn sim_params(&self) -> Result<SimParams> {
        let dt = self.solver.dt.unwrap_or(0.002);
        let mut params = SimParams::new(self.smoothing_length(), dt);
        params.gravity = self.gravity;
        params.rest_density = self.rest_density;
        if let Some(v) = self.solver.viscosity {
            params.viscosity = v;
        }
        if let Some(v) = self.solver.density_error {
            params.density_error = v;
        }
        params.divergence_error = self
            .solver
            .divergence_error
            .unwrap_or_else(|| SimParams::default_divergence_error(dt));
        if let Some(v) = self.solver.min_density_iters {
            params.min_density_iters = v;
        }
        if let Some(v) = self.solver.max_density_iters {
            params.max_density_iters = v;
        }
        if let Some(v) = self.solver.min_divergence_iters {
            params.min_divergence_iters = v;
        }
        if let Some(v) = self.solver.max_divergence_iters {
            params.max_divergence_iters = v;
        }
        if let Some(v) = self.solver.alpha {
            params.alpha = v;
        }
        if let Some(v) = self.solver.stream_cutoff {
            params.stream_cutoff = v;
        }
        params.validate()?;
        Ok(params)
    }

    /// Sample every boundary body (static boxes and scripted shapes) at
    /// the fluid particle spacing.
    pub fn build_boundary(&self) -> Result<BoundarySet> {
        let cfg = crate::kernel::SmoothingConfig::new(self.smoothing_length())?;
        let spacing = self.boundary_spacing;
        let mut bodies = Vec::new();
        for b in &self.boundary_boxes {
            bodies.push(BoundaryBody {
                positions: sample_box(b.min, b.max, spacing)?,
                motion: None,
            });
        }
        for m in &self.moving_boundaries {
            let positions = match &m.shape {
                BoundaryShape::Box { min, max } => sample_box(*min, *max, spacing)?,
                BoundaryShape::Sphere { center, radius } => {
                    sample_sphere(*center, *radius, spacing)?
                }
                BoundaryShape::Cylinder { start, end, radius } => {
                    sample_cylinder(*start, *end, *radius, spacing)?
                }
            };
            bodies.push(BoundaryBody {
                positions,
                motion: Some(m.motion),
            });
        }
        if bodies.is_empty() {
            return Ok(BoundarySet::empty());
        }
        BoundarySet::from_bodies(bodies, self.rest_density, &cfg)
    }
}

// Raw JSON schema. Every struct rejects unknown keys.

fn d_gravity() -> [f64; 3] {
    [0.0, -9.81, 0.0]
}

fn d_rest_density() -> f64 {
    1000.0
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    domain: AabbSpec,
    particle_spacing: f64,
    /// Boundary sampling spacing; defaults to the fluid particle spacing.
    boundary_spacing: Option<f64>,
    #[serde(default = "d_gravity")]
    gravity: [f64; 3],
    #[serde(default = "d_rest_density")]
    rest_density: f64,
    fluid_blocks: Vec<FluidBlockSpec>,
    #[serde(default)]
    boundary_boxes: Vec<AabbSpec>,
    #[serde(default)]
    moving_boundaries: Vec<MovingBoundarySpec>,
    #[serde(default)]
    solver: SolverSpec,
    #[serde(default)]
    output: OutputSpec,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AabbSpec {
    min: [f64; 3],
    max: [f64; 3],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FluidBlockSpec {
    min: [f64; 3],
    max: [f64; 3],
    #[serde(default)]
    velocity: [f64; 3],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
enum ShapeSpec {
    Box { min: [f64; 3], max: [f64; 3] },
    Sphere { center: [f64; 3], radius: f64 },
    Cylinder { start: [f64; 3], end: [f64; 3], radius: f64 },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MovingBoundarySpec {
    shape: ShapeSpec,
    #[serde(default)]
    axis_point: [f64; 3],
    #[serde(default = "d_axis")]
    axis_dir: [f64; 3],
    #[serde(default)]
    angular_velocity: f64,
    #[serde(default)]
    linear_velocity: [f64; 3],
    #[serde(default)]
    start_time: f64,
    stop_time: Option<f64>,
}

fn d_axis() -> [f64; 3] {
    [0.0, 1.0, 0.0]
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct SolverSpec {
    dt: Option<f64>,
    viscosity: Option<f64>,
    density_error: Option<f64>,
    divergence_error: Option<f64>,
    min_density_iters: Option<u32>,
    max_density_iters: Option<u32>,
    min_divergence_iters: Option<u32>,
    max_divergence_iters: Option<u32>,
    alpha: Option<f64>,
    stream_cutoff: Option<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct OutputSpec {
    snapshot_every: Option<u64>,
    directory: Option<String>,
}

fn vec3(a: [f64; 3]) -> Vector3<f64> {
    Vector3::new(a[0], a[1], a[2])
}

fn aabb(spec: &AabbSpec, what: &str) -> Result<Aabb> {
    let b = Aabb {
        min: vec3(spec.min),
        max: vec3(spec.max),
    };
    if (0..3).any(|a| !(b.max[a] > b.min[a]) || !b.min[a].is_finite() || !b.max[a].is_finite()) {
        return Err(Error::Scene(format!(
            "{what}: max must exceed min componentwise (min {:?}, max {:?})",
            spec.min, spec.max
        )));
    }
    Ok(b)
}

/// Load and validate a scene file, applying defaults.
pub fn load_scene(path: &Path) -> Result<SceneConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::Scene(format!("cannot read {}: {e}", path.display()))
    })?;
    parse_scene(&text)
}

/// Parse scene JSON from a string (exposed for tests and tooling).
pub fn parse_scene(text: &str) -> Result<SceneConfig> {
    let raw: SceneFile =
        serde_json::from_str(text).map_err(|e| Error::Scene(explain_schema_error(&e.to_string())))?;

    let domain = aabb(&raw.domain, "domain")?;
    if !(raw.particle_spacing > 0.0) || !raw.particle_spacing.is_finite() {
        return Err(Error::Scene(format!(
            "particle_spacing must be positive, got {}",
            raw.particle_spacing
        )));
    }

    let mut fluid_blocks = Vec::with_capacity(raw.fluid_blocks.len());
    for (i, spec) in raw.fluid_blocks.iter().enumerate() {
        let bounds = aabb(
            &AabbSpec {
                min: spec.min,
                max: spec.max,
            },
            &format!("fluid block {i}"),
        )?;
        if !domain.contains(&bounds) {
            return Err(Error::Scene(format!(
                "fluid block {i} extends outside the domain"
            )));
        }
        fluid_blocks.push(FluidBlock {
            bounds,
            velocity: vec3(spec.velocity),
        });
    }

    let mut boundary_boxes = Vec::with_capacity(raw.boundary_boxes.len());
    for (i, spec) in raw.boundary_boxes.iter().enumerate() {
        boundary_boxes.push(aabb(spec, &format!("boundary box {i}"))?);
    }

    let mut moving_boundaries = Vec::new();
    for (i, spec) in raw.moving_boundaries.iter().enumerate() {
        let shape = match &spec.shape {
            ShapeSpec::Box { min, max } => {
                let b = aabb(
                    &AabbSpec { min: *min, max: *max },
                    &format!("moving boundary {i}"),
                )?;
                BoundaryShape::Box { min: b.min, max: b.max }
            }
            ShapeSpec::Sphere { center, radius } => BoundaryShape::Sphere {
                center: vec3(*center),
                radius: *radius,
            },
            ShapeSpec::Cylinder { start, end, radius } => BoundaryShape::Cylinder {
                start: vec3(*start),
                end: vec3(*end),
                radius: *radius,
            },
        };
        let axis = vec3(spec.axis_dir);
        if axis.norm() == 0.0 {
            return Err(Error::Scene(format!(
                "moving boundary {i}: axis_dir must be nonzero"
            )));
        }
        moving_boundaries.push(MovingBoundary {
            shape,
            motion: RigidMotion {
                axis_point: vec3(spec.axis_point),
                axis_dir: axis,
                angular_velocity: spec.angular_velocity,
                linear_velocity: vec3(spec.linear_velocity),
                start_time: spec.start_time,
                stop_time: spec.stop_time.unwrap_or(f64::INFINITY),
            },
        });
    }

    let boundary_spacing = raw.boundary_spacing.unwrap_or(raw.particle_spacing);
    if !(boundary_spacing > 0.0) || !boundary_spacing.is_finite() {
        return Err(Error::Scene(format!(
            "boundary_spacing must be positive, got {boundary_spacing}"
        )));
    }
    let config = SceneConfig {
        domain,
        gravity: vec3(raw.gravity),
        rest_density: raw.rest_density,
        particle_spacing: raw.particle_spacing,
        boundary_spacing,
        fluid_blocks,
        boundary_boxes,
        moving_boundaries,
        solver: SolverOverrides {
            dt: raw.solver.dt,
            viscosity: raw.solver.viscosity,
            density_error: raw.solver.density_error,
            divergence_error: raw.solver.divergence_error,
            min_density_iters: raw.solver.min_density_iters,
            max_density_iters: raw.solver.max_density_iters,
            min_divergence_iters: raw.solver.min_divergence_iters,
            max_divergence_iters: raw.solver.max_divergence_iters,
            alpha: raw.solver.alpha,
            stream_cutoff: raw.solver.stream_cutoff,
        },
        snapshot_every: raw.output.snapshot_every.unwrap_or(0),
        output_directory: PathBuf::from(raw.output.directory.unwrap_or_else(|| "out".into())),
    };
    // Resolving parameters validates the solver block.
    config.sim_params()?;
    Ok(config)
}

/// Attach a nearest-key suggestion to serde's unknown-field message.
fn explain_schema_error(msg: &str) -> String {
    let Some(unknown) = extract_backticked(msg, "unknown field `") else {
        return msg.to_string();
    };
    let Some(expected_part) = msg.split("expected").nth(1) else {
        return msg.to_string();
    };
    let mut best: Option<(usize, String)> = None;
    let mut rest = expected_part;
    while let Some(start) = rest.find('`') {
        let tail = &rest[start + 1..];
        let Some(end) = tail.find('`') else { break };
        let candidate = &tail[..end];
        let d = levenshtein(&unknown, candidate);
        if best.as_ref().map_or(true, |(bd, _)| d < *bd) {
            best = Some((d, candidate.to_string()));
        }
        rest = &tail[end + 1..];
    }
    match best {
        Some((d, candidate)) if d <= unknown.len().max(3) / 2 + 1 => {
            format!("{msg}; did you mean `{candidate}`?")
        }
        _ => msg.to_string(),
    }
}

fn extract_backticked(msg: &str, prefix: &str) -> Option<String> {
    let start = msg.find(prefix)? + prefix.len();
    let end = msg[start..].find('`')?;
    Some(msg[start..start + end].to_string())
}

fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let cost = usize::from(ca != cb);
            cur[j + 1] = (prev[j] + cost).min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Emit fluid particles on a regular lattice filling each block.
/// Particles sit half a spacing inside block faces; masses are
/// `rho0 * dx^3`; densities start at the rest density.
pub fn emit_fluid_particles(config: &SceneConfig) -> Result<ParticleState> {
    for i in 0..config.fluid_blocks.len() {
        for j in i + 1..config.fluid_blocks.len() {
            if config.fluid_blocks[i]
                .bounds
                .overlaps(&config.fluid_blocks[j].bounds)
            {
                return Err(Error::Scene(format!(
                    "fluid blocks {i} and {j} overlap; blocks must be disjoint"
                )));
            }
        }
    }

    let dx = config.particle_spacing;
    let mut state = ParticleState::default();
    let mass = config.rest_density * dx * dx * dx;
    for block in &config.fluid_blocks {
        let extent = block.bounds.extent();
        let count = |len: f64| ((len / dx) + 1e-9).floor() as usize;
        let (nx, ny, nz) = (count(extent.x), count(extent.y), count(extent.z));
        for ix in 0..nx {
            for iy in 0..ny {
                for iz in 0..nz {
                    state.positions.push(
                        block.bounds.min
                            + Vector3::new(
                                (ix as f64 + 0.5) * dx,
                                (iy as f64 + 0.5) * dx,
                                (iz as f64 + 0.5) * dx,
                            ),
                    );
                    state.velocities.push(block.velocity);
                    state.masses.push(mass);
                    state.densities.push(config.rest_density);
                }
            }
        }
    }
    if state.is_empty() {
        return Err(Error::Scene(
            "scene emits zero fluid particles; check block sizes against the spacing".into(),
        ));
    }
    Ok(state)
}

/// One persisted frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub positions: Vec<Vector3<f64>>,
    pub velocities: Vec<Vector3<f64>>,
    pub densities: Vec<f64>,
    pub vorticity_magnitudes: Vec<f64>,
}

impl Snapshot {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Snapshot file name for a frame counter: `frame_%06u.sph`.
pub fn snapshot_filename(frame: u64) -> String {
    format!("frame_{frame:06}.sph")
}

pub fn write_snapshot(snapshot: &Snapshot, path: &Path) -> Result<()> {
    let n = snapshot.positions.len();
    if snapshot.velocities.len() != n
        || snapshot.densities.len() != n
        || snapshot.vorticity_magnitudes.len() != n
    {
        return Err(Error::Snapshot(format!(
            "field lengths disagree: {n} positions vs {} velocities, {} densities, {} vorticities",
            snapshot.velocities.len(),
            snapshot.densities.len(),
            snapshot.vorticity_magnitudes.len()
        )));
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(SNAPSHOT_MAGIC)?;
    w.write_all(&[0u8])?;
    w.write_all(&(n as u32).to_le_bytes())?;
    w.write_all(&0u32.to_le_bytes())?;
    w.write_all(&snapshot.time.to_le_bytes())?;
    for i in 0..n {
        for v in [
            snapshot.positions[i].x,
            snapshot.positions[i].y,
            snapshot.positions[i].z,
            snapshot.velocities[i].x,
            snapshot.velocities[i].y,
            snapshot.velocities[i].z,
            snapshot.densities[i],
            snapshot.vorticity_magnitudes[i],
        ] {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    read_exact(&mut r, &mut magic, "header")?;
    if &magic[..7] != SNAPSHOT_MAGIC {
        return Err(Error::Snapshot(format!(
            "bad magic in {}: expected SPHVR1",
            path.display()
        )));
    }
    let count = read_u32(&mut r)? as usize;
    let _reserved = read_u32(&mut r)?;
    let time = read_f64(&mut r, "time")?;

    let mut snapshot = Snapshot {
        time,
        positions: Vec::with_capacity(count),
        velocities: Vec::with_capacity(count),
        densities: Vec::with_capacity(count),
        vorticity_magnitudes: Vec::with_capacity(count),
    };
    for i in 0..count {
        let what = format!("particle {i}");
        let mut vals = [0.0f64; 8];
        for v in &mut vals {
            *v = read_f64(&mut r, &what)?;
        }
        snapshot
            .positions
            .push(Vector3::new(vals[0], vals[1], vals[2]));
        snapshot
            .velocities
            .push(Vector3::new(vals[3], vals[4], vals[5]));
        snapshot.densities.push(vals[6]);
        snapshot.vorticity_magnitudes.push(vals[7]);
    }
    Ok(snapshot)
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf)
        .map_err(|e| Error::Snapshot(format!("truncated file while reading {what}: {e}")))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b, "count")?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R, what: &str) -> Result<f64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b, what)?;
    Ok(f64::from_le_bytes(b))
}
