//! Uniform-grid neighbor search.
//!
//! Cells have edge length equal to the kernel support radius (2h), so a
//! 27-cell scan around a particle covers every candidate. Per-particle
//! neighbor lists are stored in CSR layout and kept sorted by ascending
//! index, which fixes the summation order of every downstream sweep.

use std::collections::HashMap;
use std::hash::{BuildHasherDefault, Hasher};
use std::ops::Range;

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::SmoothingConfig;

/// Cell coordinates are offset into 21 bits per axis before packing.
const COORD_BITS: i64 = 1 << 20;

/// splitmix64 finalizer over the packed cell key.
#[derive(Default)]
struct CellHasher(u64);

impl Hasher for CellHasher {
    fn write(&mut self, _bytes: &[u8]) {
        unreachable!("cell keys are u64");
    }

    fn write_u64(&mut self, key: u64) {
        let mut z = key.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        self.0 = z ^ (z >> 31);
    }

    fn finish(&self) -> u64 {
        self.0
    }
}

type CellMap = HashMap<u64, u32, BuildHasherDefault<CellHasher>>;

/// Bins one point set by cell; reused across rebuilds.
struct UniformGrid {
    cell_size: f64,
    slots: CellMap,
    starts: Vec<u32>,
    cursors: Vec<u32>,
    entries: Vec<u32>,
    keys: Vec<u64>,
}

fn cell_coord(x: f64, inv_cell: f64) -> i64 {
    (x * inv_cell).floor() as i64
}

fn pack_key(cx: i64, cy: i64, cz: i64) -> Option<u64> {
    for c in [cx, cy, cz] {
        if c <= -COORD_BITS || c >= COORD_BITS {
            return None;
        }
    }
    let ux = (cx + COORD_BITS) as u64;
    let uy = (cy + COORD_BITS) as u64;
    let uz = (cz + COORD_BITS) as u64;
    Some((ux << 42) | (uy << 21) | uz)
}

impl UniformGrid {
    fn new() -> Self {
        Self {
            cell_size: 0.0,
            slots: CellMap::default(),
            starts: Vec::new(),
            cursors: Vec::new(),
            entries: Vec::new(),
            keys: Vec::new(),
        }
    }

    fn build(&mut self, positions: &[Vector3<f64>], cell_size: f64, label: &str) -> Result<()> {
        self.cell_size = cell_size;
        self.slots.clear();
        self.keys.clear();
        self.keys.reserve(positions.len());
        let inv_cell = 1.0 / cell_size;

        // Pass 1: assign slots and count occupancy per cell.
        let mut counts: Vec<u32> = Vec::new();
        for (i, p) in positions.iter().enumerate() {
            if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "non-finite position for {label} {i}: ({}, {}, {})",
                    p.x, p.y, p.z
                )));
            }
            let key = pack_key(
                cell_coord(p.x, inv_cell),
                cell_coord(p.y, inv_cell),
                cell_coord(p.z, inv_cell),
            )
            .ok_or_else(|| {
                Error::InvalidInput(format!(
                    "position of {label} {i} is outside the supported grid range"
                ))
            })?;
            self.keys.push(key);
            let next_slot = counts.len() as u32;
            let slot = *self.slots.entry(key).or_insert(next_slot);
            if slot == next_slot {
                counts.push(0);
            }
            counts[slot as usize] += 1;
        }

        // Pass 2: prefix sums, then scatter indices in particle order so
        // each cell's run is ascending.
        self.starts.clear();
        self.starts.reserve(counts.len() + 1);
        let mut acc = 0u32;
        for &c in &counts {
            self.starts.push(acc);
            acc += c;
        }
        self.starts.push(acc);

        self.cursors.clear();
        self.cursors.extend_from_slice(&self.starts[..counts.len()]);
        self.entries.clear();
        self.entries.resize(positions.len(), 0);
        for (i, &key) in self.keys.iter().enumerate() {
            let slot = self.slots[&key] as usize;
            self.entries[self.cursors[slot] as usize] = i as u32;
            self.cursors[slot] += 1;
        }
        Ok(())
    }

    fn cell_entries(&self, cx: i64, cy: i64, cz: i64) -> &[u32] {
        match pack_key(cx, cy, cz).and_then(|key| self.slots.get(&key)) {
            Some(&slot) => {
                let s = self.starts[slot as usize] as usize;
                let e = self.starts[slot as usize + 1] as usize;
                &self.entries[s..e]
            }
            None => &[],
        }
    }
}

/// Per-particle fluid and boundary neighbor lists for one time step.
pub struct NeighborTable {
    fluid_offsets: Vec<usize>,
    fluid_indices: Vec<u32>,
    boundary_offsets: Vec<usize>,
    boundary_indices: Vec<u32>,
    cell_size: f64,
    fluid_grid: UniformGrid,
    boundary_grid: UniformGrid,
}

impl NeighborTable {
    pub fn new() -> Self {
        Self {
            fluid_offsets: vec![0],
            fluid_indices: Vec::new(),
            boundary_offsets: vec![0],
            boundary_indices: Vec::new(),
            cell_size: 0.0,
            fluid_grid: UniformGrid::new(),
            boundary_grid: UniformGrid::new(),
        }
    }

    /// Rebuild both neighbor lists from scratch. Storage is reused.
    pub fn rebuild(
        &mut self,
        fluid_positions: &[Vector3<f64>],
        boundary_positions: &[Vector3<f64>],
        cfg: &SmoothingConfig,
    ) -> Result<()> {
        let cutoff = cfg.support_radius();
        self.cell_size = cutoff;
        self.fluid_grid.build(fluid_positions, cutoff, "particle")?;
        self.boundary_grid
            .build(boundary_positions, cutoff, "boundary particle")?;

        let n = fluid_positions.len();
        let cutoff2 = cutoff * cutoff;
        let inv_cell = 1.0 / cutoff;

        // Query in parallel chunks; each chunk produces contiguous local
        // lists that splice together in a fixed order.
        let nchunks = (rayon::current_num_threads() * 4).max(1);
        let chunk_len = n.div_ceil(nchunks).max(1);
        let fluid_grid = &self.fluid_grid;
        let boundary_grid = &self.boundary_grid;

        struct Piece {
            fluid_counts: Vec<u32>,
            fluid_indices: Vec<u32>,
            boundary_counts: Vec<u32>,
            boundary_indices: Vec<u32>,
        }

        let pieces: Vec<Piece> = (0..n)
            .into_par_iter()
            .chunks(chunk_len)
            .map(|ids| {
                let mut piece = Piece {
                    fluid_counts: Vec::with_capacity(ids.len()),
                    fluid_indices: Vec::new(),
                    boundary_counts: Vec::with_capacity(ids.len()),
                    boundary_indices: Vec::new(),
                };
                for i in ids {
                    let p = fluid_positions[i];
                    let cx = cell_coord(p.x, inv_cell);
                    let cy = cell_coord(p.y, inv_cell);
                    let cz = cell_coord(p.z, inv_cell);

                    let f_start = piece.fluid_indices.len();
                    let b_start = piece.boundary_indices.len();
                    for dx in -1..=1 {
                        for dy in -1..=1 {
                            for dz in -1..=1 {
                                for &j in fluid_grid.cell_entries(cx + dx, cy + dy, cz + dz) {
                                    if j as usize == i {
                                        continue;
                                    }
                                    let d = p - fluid_positions[j as usize];
                                    if d.norm_squared() <= cutoff2 {
                                        piece.fluid_indices.push(j);
                                    }
                                }
                                for &b in boundary_grid.cell_entries(cx + dx, cy + dy, cz + dz) {
                                    let d = p - boundary_positions[b as usize];
                                    if d.norm_squared() <= cutoff2 {
                                        piece.boundary_indices.push(b);
                                    }
                                }
                            }
                        }
                    }
                    piece.fluid_indices[f_start..].sort_unstable();
                    piece.boundary_indices[b_start..].sort_unstable();
                    piece.fluid_counts.push((piece.fluid_indices.len() - f_start) as u32);
                    piece
                        .boundary_counts
                        .push((piece.boundary_indices.len() - b_start) as u32);
                }
                piece
            })
            .collect();

        self.fluid_offsets.clear();
        self.fluid_offsets.push(0);
        self.fluid_indices.clear();
        self.boundary_offsets.clear();
        self.boundary_offsets.push(0);
        self.boundary_indices.clear();
        for piece in &pieces {
            for &c in &piece.fluid_counts {
                let last = *self.fluid_offsets.last().unwrap();
                self.fluid_offsets.push(last + c as usize);
            }
            self.fluid_indices.extend_from_slice(&piece.fluid_indices);
            for &c in &piece.boundary_counts {
                let last = *self.boundary_offsets.last().unwrap();
                self.boundary_offsets.push(last + c as usize);
            }
            self.boundary_indices.extend_from_slice(&piece.boundary_indices);
        }
        Ok(())
    }

    /// Number of fluid particles the table was built for.
    pub fn len(&self) -> usize {
        self.fluid_offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid cell edge, equal to the kernel support radius.
    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn fluid_neighbors(&self, i: usize) -> &[u32] {
        &self.fluid_indices[self.fluid_range(i)]
    }

    pub fn boundary_neighbors(&self, i: usize) -> &[u32] {
        &self.boundary_indices[self.boundary_range(i)]
    }

    /// Range of particle `i`'s fluid pairs in flat pair order; pair-aligned
    /// caches index with this.
    pub fn fluid_range(&self, i: usize) -> Range<usize> {
        self.fluid_offsets[i]..self.fluid_offsets[i + 1]
    }

    pub fn boundary_range(&self, i: usize) -> Range<usize> {
        self.boundary_offsets[i]..self.boundary_offsets[i + 1]
    }

    pub fn fluid_pair_count(&self) -> usize {
        self.fluid_indices.len()
    }

    pub fn boundary_pair_count(&self) -> usize {
        self.boundary_indices.len()
    }

    /// Total neighbor count (fluid + boundary) for particle `i`.
    pub fn neighbor_count(&self, i: usize) -> usize {
        self.fluid_range(i).len() + self.boundary_range(i).len()
    }
}

impl Default for NeighborTable {
    fn default() -> Self {
        Self::new()
    }
}

/// Build a neighbor table for the given fluid and boundary positions.
pub fn build_neighbor_table(
    fluid_positions: &[Vector3<f64>],
    boundary_positions: &[Vector3<f64>],
    cfg: &SmoothingConfig,
) -> Result<NeighborTable> {
    let mut table = NeighborTable::new();
    table.rebuild(fluid_positions, boundary_positions, cfg)?;
    Ok(table)
}

/// Adjacency of one point set with itself (self index excluded), used for
/// boundary pseudo-volume sums.
pub(crate) fn self_adjacency(
    positions: &[Vector3<f64>],
    cutoff: f64,
) -> Result<(Vec<usize>, Vec<u32>)> {
    let mut grid = UniformGrid::new();
    grid.build(positions, cutoff, "boundary particle")?;
    let cutoff2 = cutoff * cutoff;
    let inv_cell = 1.0 / cutoff;

    let mut offsets = Vec::with_capacity(positions.len() + 1);
    offsets.push(0usize);
    let mut indices = Vec::new();
    for (i, p) in positions.iter().enumerate() {
        let cx = cell_coord(p.x, inv_cell);
        let cy = cell_coord(p.y, inv_cell);
        let cz = cell_coord(p.z, inv_cell);
        let start = indices.len();
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    for &j in grid.cell_entries(cx + dx, cy + dy, cz + dz) {
                        if j as usize == i {
                            continue;
                        }
                        let d = p - positions[j as usize];
                        if d.norm_squared() <= cutoff2 {
                            indices.push(j);
                        }
                    }
                }
            }
        }
        indices[start..].sort_unstable();
        offsets.push(indices.len());
    }
    Ok((offsets, indices))
}
