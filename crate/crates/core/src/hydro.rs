//! DEM hydrology: sink filling, D8 routing, stream masks and removal of
//! lineaments that follow streams.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::sample_polyline;
use crate::par;
use crate::raster::{write_mask_ascii, GeoRef, GrayImage};
use crate::vectorize::LineamentSet;

pub const DEFAULT_MIN_CELLS: u64 = 1000;
pub const DEFAULT_BUFFER_RADIUS: usize = 5;

/// Neighbour offsets `(drow, dcol)` in tie order E, SE, S, SW, W, NW, N, NE,
/// paired with their ESRI direction codes.
pub const D8: [(isize, isize, u8); 8] = [
    (0, 1, 1),
    (1, 1, 2),
    (1, 0, 4),
    (1, -1, 8),
    (0, -1, 16),
    (-1, -1, 32),
    (-1, 0, 64),
    (-1, 1, 128),
];

/// Downstream cell of `(r, c)` for direction `code`, if any.
pub fn downstream(code: u8, r: usize, c: usize, w: usize, h: usize) -> Option<(usize, usize)> {
    let &(dr, dc, _) = D8.iter().find(|d| d.2 == code)?;
    let (nr, nc) = (r as isize + dr, c as isize + dc);
    (nr >= 0 && nc >= 0 && (nr as usize) < h && (nc as usize) < w).then_some((nr as usize, nc as usize))
}

#[derive(PartialEq)]
struct Key(f64, u64);
impl Eq for Key {}
impl PartialOrd for Key {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Key {
    fn cmp(&self, o: &Self) -> Ordering {
        self.0.total_cmp(&o.0).then(self.1.cmp(&o.1))
    }
}

/// Priority flood from the border (and from cells next to masked pixels).
/// Returns filled elevations and each cell's pop rank; masked cells get
/// `usize::MAX`.
fn flood(dem: &GrayImage) -> (Vec<f64>, Vec<usize>) {
    let (w, h) = (dem.width(), dem.height());
    let valid = dem.valid_mask();
    let mut filled = dem.data().to_vec();
    let mut rank = vec![usize::MAX; w * h];
    let mut queued = vec![false; w * h];
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    let on_edge = |r: usize, c: usize| {
        if r == 0 || c == 0 || r + 1 == h || c + 1 == w {
            return true;
        }
        D8.iter().any(|&(dr, dc, _)| !valid[(r as isize + dr) as usize * w + (c as isize + dc) as usize])
    };
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            if valid[i] && on_edge(r, c) {
                queued[i] = true;
                heap.push(Reverse((Key(filled[i], seq), i)));
                seq += 1;
            }
        }
    }
    let mut next_rank = 0;
    while let Some(Reverse((Key(z, _), i))) = heap.pop() {
        rank[i] = next_rank;
        next_rank += 1;
        let (r, c) = (i / w, i % w);
        for &(dr, dc, _) in &D8 {
            let (nr, nc) = (r as isize + dr, c as isize + dc);
            if nr < 0 || nc < 0 || nr as usize >= h || nc as usize >= w {
                continue;
            }
            let j = nr as usize * w + nc as usize;
            if valid[j] && !queued[j] {
                queued[j] = true;
                filled[j] = filled[j].max(z);
                heap.push(Reverse((Key(filled[j], seq), j)));
                seq += 1;
            }
        }
    }
    (filled, rank)
}

/// Raises every closed depression to its spill level so all cells drain to
/// the border. Border cells are never changed.
pub fn fill_sinks(dem: &GrayImage) -> GrayImage {
    dem.with_data(flood(dem).0)
}

/// D8 directions (ESRI codes, 0 = outlet) and upslope cell counts.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowGrid {
    width: usize,
    height: usize,
    directions: Vec<u8>,
    accumulation: Vec<u64>,
    georef: GeoRef,
}

impl FlowGrid {
    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn georef(&self) -> &GeoRef {
        &self.georef
    }
    pub fn directions(&self) -> &[u8] {
        &self.directions
    }
    /// Cells draining through each cell, itself included; 0 on masked cells.
    pub fn accumulation(&self) -> &[u64] {
        &self.accumulation
    }
    pub fn direction(&self, r: usize, c: usize) -> u8 {
        self.directions[r * self.width + c]
    }
    pub fn accumulation_at(&self, r: usize, c: usize) -> u64 {
        self.accumulation[r * self.width + c]
    }
}

/// Steepest distance-weighted descent with ties in E, SE, S, … order. Cells on
/// a flat point to the level neighbour flooded earliest, which always leads
/// towards an outlet; border cells without a lower neighbour are outlets.
///
/// Routing uses the flooded surface, so an unfilled DEM is filled implicitly.
pub fn d8_flow(dem: &GrayImage) -> FlowGrid {
    let (w, h) = (dem.width(), dem.height());
    let valid = dem.valid_mask();
    let (z, rank) = flood(dem);
    let mut dirs = vec![0u8; w * h];
    par::fill_rows(&mut dirs, w, |r, row| {
        for (c, out) in row.iter_mut().enumerate() {
            let i = r * w + c;
            if !valid[i] {
                continue;
            }
            let (mut best, mut best_drop) = (0u8, 0.0);
            let (mut flat, mut flat_rank) = (0u8, rank[i]);
            for &(dr, dc, code) in &D8 {
                let (nr, nc) = (r as isize + dr, c as isize + dc);
                if nr < 0 || nc < 0 || nr as usize >= h || nc as usize >= w {
                    continue;
                }
                let j = nr as usize * w + nc as usize;
                if !valid[j] {
                    continue;
                }
                let dist = if dr != 0 && dc != 0 { std::f64::consts::SQRT_2 } else { 1.0 };
                let drop = (z[i] - z[j]) / dist;
                if drop > best_drop {
                    best_drop = drop;
                    best = code;
                } else if z[j] == z[i] && rank[j] < flat_rank {
                    flat_rank = rank[j];
                    flat = code;
                }
            }
            let edge = r == 0
                || c == 0
                || r + 1 == h
                || c + 1 == w
                || D8.iter().any(|&(dr, dc, _)| !valid[(r as isize + dr) as usize * w + (c as isize + dc) as usize]);
            *out = if best != 0 {
                best
            } else if edge {
                0
            } else {
                flat
            };
        }
    });

    // flow always moves to an earlier-flooded cell, so descending rank is a
    // topological order
    let mut order: Vec<usize> = (0..w * h).filter(|&i| valid[i]).collect();
    order.sort_unstable_by_key(|&i| Reverse(rank[i]));
    let mut acc: Vec<u64> = valid.iter().map(|&v| u64::from(v)).collect();
    for i in order {
        if let Some((r, c)) = downstream(dirs[i], i / w, i % w, w, h) {
            acc[r * w + c] += acc[i];
        }
    }
    FlowGrid {
        width: w,
        height: h,
        directions: dirs,
        accumulation: acc,
        georef: dem.georef().clone(),
    }
}

/// Boolean stream raster, optionally dilated.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamMask {
    width: usize,
    height: usize,
    cells: Vec<bool>,
    buffer_radius_px: usize,
    georef: GeoRef,
}

impl StreamMask {
    pub fn new(width: usize, height: usize, cells: Vec<bool>, georef: GeoRef) -> Result<Self> {
        if cells.len() != width * height {
            return Err(Error::DimensionMismatch("stream mask size".into()));
        }
        Ok(StreamMask {
            width,
            height,
            cells,
            buffer_radius_px: 0,
            georef,
        })
    }
    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn georef(&self) -> &GeoRef {
        &self.georef
    }
    pub fn cells(&self) -> &[bool] {
        &self.cells
    }
    pub fn buffer_radius_px(&self) -> usize {
        self.buffer_radius_px
    }
    pub fn get(&self, r: usize, c: usize) -> bool {
        self.cells[r * self.width + c]
    }
    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&b| b).count()
    }
    pub fn write_ascii(&self, path: impl AsRef<Path>) -> Result<()> {
        write_mask_ascii(self.width, self.height, &self.georef, &self.cells, path)
    }
}

/// Cells whose accumulation reaches `min_cells`.
pub fn streams(f: &FlowGrid, min_cells: u64) -> Result<StreamMask> {
    if min_cells < 1 {
        return Err(Error::Validation("min_cells must be at least 1".into()));
    }
    let cells = f.accumulation.iter().map(|&a| a >= min_cells).collect();
    StreamMask::new(f.width, f.height, cells, f.georef.clone())
}

/// Euclidean dilation: a cell is set iff some set cell lies within `radius`.
pub fn buffer(mask: &StreamMask, radius: usize) -> StreamMask {
    let (w, h) = (mask.width, mask.height);
    let r = radius as isize;
    let disk: Vec<(isize, isize)> = (-r..=r)
        .flat_map(|dy| (-r..=r).map(move |dx| (dy, dx)))
        .filter(|(dy, dx)| dy * dy + dx * dx <= r * r)
        .collect();
    let mut cells = vec![false; w * h];
    par::fill_rows(&mut cells, w, |row, out| {
        for (c, o) in out.iter_mut().enumerate() {
            *o = disk.iter().any(|&(dy, dx)| {
                let (nr, nc) = (row as isize + dy, c as isize + dx);
                nr >= 0 && nc >= 0 && (nr as usize) < h && (nc as usize) < w && mask.cells[nr as usize * w + nc as usize]
            });
        }
    });
    StreamMask {
        width: w,
        height: h,
        cells,
        buffer_radius_px: mask.buffer_radius_px + radius,
        georef: mask.georef.clone(),
    }
}

/// Fraction of a polyline's length whose 0.5-px sample midpoints fall in set
/// cells (cell = nearest pixel centre).
pub fn inside_fraction(vertices: &[crate::geom::Vertex], buf: &StreamMask) -> f64 {
    let (mut inside, mut total) = (0.0, 0.0);
    sample_polyline(vertices, 0.5, |p, len| {
        total += len;
        let (c, r) = (p[0].round(), p[1].round());
        if c >= 0.0 && r >= 0.0 && (c as usize) < buf.width && (r as usize) < buf.height && buf.get(r as usize, c as usize)
        {
            inside += len;
        }
    });
    if total > 0.0 {
        inside / total
    } else {
        0.0
    }
}

/// Drops lineaments with more than half their length inside the buffer.
pub fn remove_stream_lineaments(set: &LineamentSet, buf: &StreamMask) -> Result<LineamentSet> {
    if !set.georef().same_grid(&buf.georef) {
        return Err(Error::GeoRefMismatch("lineaments and stream mask use different grids".into()));
    }
    let keep = par::map_slice(set.lineaments(), |l| inside_fraction(l.vertices(), buf) <= 0.5);
    let mut it = keep.into_iter();
    Ok(set.filtered(|_| it.next().unwrap_or(true)))
}
