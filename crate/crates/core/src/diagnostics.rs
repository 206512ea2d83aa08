//! Per-step scalar metrics and paired-run comparisons.
//!
//! Each step yields one CSV row with the fixed column order
//! `time,E_kin,E_pot,E_total,enstrophy,density_err,divergence,
//! iters_density,iters_divergence,ms_neighbors,ms_advect,ms_density,
//! ms_divergence,ms_vr`. Comparing two runs produces per-row energy and
//! enstrophy ratios plus windowed summaries.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::Vector3;

use crate::dfsph::{ordered_sum, ParticleState, StepReport};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "time,E_kin,E_pot,E_total,enstrophy,density_err,divergence,iters_density,iters_divergence,ms_neighbors,ms_advect,ms_density,ms_divergence,ms_vr";

/// Scalar metrics of one step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DiagnosticsRecord {
    pub time: f64,
    pub e_kin: f64,
    pub e_pot: f64,
    pub e_total: f64,
    /// Volume-weighted squared vorticity, `sum V_i |zeta_i|^2` (m^3/s^2).
    pub enstrophy: f64,
    /// Mean positive density error as a fraction of rho0, from the density
    /// solve's exit check.
    pub density_err: f64,
    /// Mean |density rate| / rho0 (1/s), from the divergence solve's exit
    /// check.
    pub divergence: f64,
    pub iters_density: u32,
    pub iters_divergence: u32,
    pub ms_neighbors: f64,
    pub ms_advect: f64,
    pub ms_density: f64,
    pub ms_divergence: f64,
    pub ms_vr: f64,
}

/// Measure energies and enstrophy of a state; solver metrics and timings
/// come from the step report. `floor_reference` is the potential-energy
/// zero point (the domain minimum corner).
pub fn measure(
    state: &ParticleState,
    vorticity: &[Vector3<f64>],
    gravity: Vector3<f64>,
    floor_reference: Vector3<f64>,
    report: &StepReport,
    time: f64,
) -> DiagnosticsRecord {
    let n = state.len();
    let mut kin_terms = Vec::with_capacity(n);
    let mut pot_terms = Vec::with_capacity(n);
    let mut ens_terms = Vec::with_capacity(n);
    for i in 0..n {
        let m = state.masses[i];
        kin_terms.push(0.5 * m * state.velocities[i].norm_squared());
        pot_terms.push(m * (-gravity).dot(&(state.positions[i] - floor_reference)));
        ens_terms.push(state.masses[i] / state.densities[i] * vorticity[i].norm_squared());
    }
    let e_kin = ordered_sum(&kin_terms);
    let e_pot = ordered_sum(&pot_terms);
    DiagnosticsRecord {
        time,
        e_kin,
        e_pot,
        e_total: e_kin + e_pot,
        enstrophy: ordered_sum(&ens_terms),
        density_err: report.density.final_error,
        divergence: report.divergence.final_error,
        iters_density: report.density.iterations,
        iters_divergence: report.divergence.iterations,
        ms_neighbors: report.timings.neighbors_ms,
        ms_advect: report.timings.advect_ms,
        ms_density: report.timings.density_ms,
        ms_divergence: report.timings.divergence_ms,
        ms_vr: report.timings.vr_ms,
    }
}

fn format_record(r: &DiagnosticsRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        r.time,
        r.e_kin,
        r.e_pot,
        r.e_total,
        r.enstrophy,
        r.density_err,
        r.divergence,
        r.iters_density,
        r.iters_divergence,
        r.ms_neighbors,
        r.ms_advect,
        r.ms_density,
        r.ms_divergence,
        r.ms_vr
    )
}

/// Write a full diagnostics CSV.
pub fn write_csv(records: &[DiagnosticsRecord], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(w, "{}", format_record(r))?;
    }
    w.flush()?;
    Ok(())
}

/// Read a diagnostics CSV written by `write_csv`.
pub fn read_csv(path: &Path) -> Result<Vec<DiagnosticsRecord>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Diagnostics(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == CSV_HEADER => {}
        other => {
            return Err(Error::Diagnostics(format!(
                "unexpected header in {}: {:?}",
                path.display(),
                other
            )))
        }
    }
    let mut records = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 14 {
            return Err(Error::Diagnostics(format!(
                "line {}: expected 14 fields, got {}",
                lineno + 2,
                fields.len()
            )));
        }
        let f = |k: usize| -> Result<f64> {
            fields[k]
                .parse()
                .map_err(|e| Error::Diagnostics(format!("line {}: field {k}: {e}", lineno + 2)))
        };
        let u = |k: usize| -> Result<u32> {
            fields[k]
                .parse()
                .map_err(|e| Error::Diagnostics(format!("line {}: field {k}: {e}", lineno + 2)))
        };
        records.push(DiagnosticsRecord {
            time: f(0)?,
            e_kin: f(1)?,
            e_pot: f(2)?,
            e_total: f(3)?,
            enstrophy: f(4)?,
            density_err: f(5)?,
            divergence: f(6)?,
            iters_density: u(7)?,
            iters_divergence: u(8)?,
            ms_neighbors: f(9)?,
            ms_advect: f(10)?,
            ms_density: f(11)?,
            ms_divergence: f(12)?,
            ms_vr: f(13)?,
        });
    }
    Ok(records)
}

/// Per-row ratios of a candidate run against a baseline.
#[derive(Debug, Clone, Copy)]
pub struct ComparisonRow {
    pub time: f64,
    pub energy_ratio: f64,
    pub enstrophy_ratio: f64,
}

/// Paired-run comparison: per-row ratios plus windowed summaries.
#[derive(Debug, Clone)]
pub struct RunComparison {
    pub rows: Vec<ComparisonRow>,
    /// Trapezoid-integrated enstrophy ratio over the whole timeline.
    pub integrated_enstrophy_ratio: f64,
    /// Integrated enstrophy ratio over the active-flow window
    /// (10%..70% of the timeline).
    pub active_window_enstrophy_ratio: f64,
    /// Mean per-row total-energy ratio over the last 10% of the timeline.
    pub final_window_energy_ratio: f64,
}

/// Identical values compare as exactly one; this keeps self-comparisons
/// at 1.0 even where both sides are zero.
fn ratio(candidate: f64, baseline: f64) -> f64 {
    if candidate == baseline {
        1.0
    } else {
        candidate / baseline
    }
}

fn trapezoid<F: Fn(&DiagnosticsRecord) -> f64>(
    records: &[DiagnosticsRecord],
    t0: f64,
    t1: f64,
    f: F,
) -> f64 {
    let mut acc = 0.0;
    for pair in records.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if a.time >= t0 && b.time <= t1 {
            acc += 0.5 * (f(a) + f(b)) * (b.time - a.time);
        }
    }
    acc
}

/// Windowed enstrophy ratio of two aligned runs; the window is given as
/// fractions of the shared timeline.
pub fn integrated_enstrophy_ratio(
    candidate: &[DiagnosticsRecord],
    baseline: &[DiagnosticsRecord],
    window: (f64, f64),
) -> f64 {
    if candidate.is_empty() {
        return 1.0;
    }
    let t_first = candidate[0].time;
    let t_last = candidate[candidate.len() - 1].time;
    let t0 = t_first + window.0 * (t_last - t_first);
    let t1 = t_first + window.1 * (t_last - t_first);
    let num = trapezoid(candidate, t0, t1, |r| r.enstrophy);
    let den = trapezoid(baseline, t0, t1, |r| r.enstrophy);
    ratio(num, den)
}

/// Compare two runs over an identical time grid.
pub fn compare_runs(
    candidate: &[DiagnosticsRecord],
    baseline: &[DiagnosticsRecord],
) -> Result<RunComparison> {
    if candidate.len() != baseline.len() {
        return Err(Error::Diagnostics(format!(
            "time grids differ in length: {} vs {} rows",
            candidate.len(),
            baseline.len()
        )));
    }
    for (i, (c, b)) in candidate.iter().zip(baseline).enumerate() {
        if c.time != b.time {
            return Err(Error::Diagnostics(format!(
                "time grids mismatch at row {i}: {} vs {}",
                c.time, b.time
            )));
        }
    }

    let rows: Vec<ComparisonRow> = candidate
        .iter()
        .zip(baseline)
        .map(|(c, b)| ComparisonRow {
            time: c.time,
            energy_ratio: ratio(c.e_total, b.e_total),
            enstrophy_ratio: ratio(c.enstrophy, b.enstrophy),
        })
        .collect();

    let final_window_energy_ratio = if rows.is_empty() {
        1.0
    } else {
        let t_first = rows[0].time;
        let t_last = rows[rows.len() - 1].time;
        let cut = t_first + 0.9 * (t_last - t_first);
        let tail: Vec<f64> = rows
            .iter()
            .filter(|r| r.time >= cut)
            .map(|r| r.energy_ratio)
            .collect();
        if tail.is_empty() {
            1.0
        } else {
            ordered_sum(&tail) / tail.len() as f64
        }
    };

    Ok(RunComparison {
        integrated_enstrophy_ratio: integrated_enstrophy_ratio(candidate, baseline, (0.0, 1.0)),
        active_window_enstrophy_ratio: integrated_enstrophy_ratio(candidate, baseline, (0.1, 0.7)),
        final_window_energy_ratio,
        rows,
    })
}

/// Write the comparison rows as CSV followed by `#`-prefixed summary lines.
pub fn write_comparison<W: Write>(comparison: &RunComparison, mut w: W) -> Result<()> {
    writeln!(w, "time,energy_ratio,enstrophy_ratio")?;
    for row in &comparison.rows {
        writeln!(w, "{},{},{}", row.time, row.energy_ratio, row.enstrophy_ratio)?;
    }
    writeln!(
        w,
        "# integrated_enstrophy_ratio = {}",
        comparison.integrated_enstrophy_ratio
    )?;
    writeln!(
        w,
        "# active_window_enstrophy_ratio = {}",
        comparison.active_window_enstrophy_ratio
    )?;
    writeln!(
        w,
        "# final_window_energy_ratio = {}",
        comparison.final_window_energy_ratio
    )?;
    Ok(())
}
