//! SPH fluid simulation with divergence-free pressure projection and a
//! vorticity refinement pass that restores per-step rotational dissipation
//! through a locally truncated stream function.
//!
//! Modules:
//! - [`kernel`] — cubic spline kernel, gradient, support queries.
//! - [`neighbors`] — uniform-grid neighbor search over fluid and boundary sets.
//! - [`sphops`] — discrete SPH operators (density, gradient, divergence, curl,
//!   artificial Laplacian).
//! - [`boundary`] — static/scripted boundary sampling and Akinci pseudo-masses.
//! - [`dfsph`] — baseline advection-projection solver with divergence correction.
//! - [`vr`] — vorticity measurement, transport, deficit, stream function, and
//!   velocity refinement.
//! - [`sceneio`] — scene configuration, fluid emission, binary snapshots.
//! - [`diagnostics`] — per-step energy/enstrophy records and paired-run comparison.
//! - [`sim`] — simulation driver binding scenes, solvers, and outputs.

pub mod boundary;
pub mod dfsph;
pub mod diagnostics;
pub mod error;
pub mod kernel;
pub mod neighbors;
pub mod sceneio;
pub mod sim;
pub mod sphops;
pub mod vr;

pub use boundary::BoundarySet;
pub use dfsph::{DfsphSolver, ParticleState, SimParams, StepReport};
pub use diagnostics::DiagnosticsRecord;
pub use error::{Error, Result};
pub use kernel::SmoothingConfig;
pub use neighbors::NeighborTable;
pub use sceneio::{SceneConfig, Snapshot};
pub use sim::{Simulation, SolverKind};
pub use vr::VrSolver;
