//! Pixel-connectivity line extraction: chain tracing, length filtering,
//! polyline fitting and endpoint linking.

mod link;
mod trace;
mod types;

pub use link::link_polylines;
pub use trace::{trace_curves, PixelChain};
pub use types::{Lineament, LineamentSet};

use serde::{Deserialize, Serialize};

use crate::detect::{canny, CannyParams};
use crate::error::{Error, Result};
use crate::geom::{point_line_distance, Vertex};
use crate::par;
use crate::raster::GrayImage;

/// The six line-extraction thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionParams {
    pub canny: CannyParams,
    /// Minimum chain length in pixels.
    pub curve_length: usize,
    /// Polyline fitting tolerance in pixels.
    pub line_fitting_error: f64,
    /// Maximum end-tangent difference for linking, in degrees.
    pub angular_difference: f64,
    /// Maximum endpoint gap for linking, in pixels.
    pub linking_distance: f64,
}

impl Default for ExtractionParams {
    fn default() -> Self {
        ExtractionParams {
            canny: CannyParams::default(),
            curve_length: 50,
            line_fitting_error: 5.0,
            angular_difference: 10.0,
            linking_distance: 50.0,
        }
    }
}

pub const CURVE_LENGTH_RANGE: (usize, usize) = (10, 50);
pub const LINE_FITTING_ERROR_RANGE: (f64, f64) = (2.0, 5.0);
pub const ANGULAR_DIFFERENCE_RANGE: (f64, f64) = (3.0, 20.0);
pub const LINKING_DISTANCE_RANGE: (f64, f64) = (10.0, 50.0);

fn in_range(name: &str, v: f64, (lo, hi): (f64, f64)) -> Result<()> {
    if v.is_finite() && v >= lo && v <= hi {
        Ok(())
    } else {
        Err(Error::Validation(format!("{name} {v} outside [{lo}, {hi}]")))
    }
}

impl ExtractionParams {
    /// Range checks for all six thresholds; `force` lifts them except for
    /// basic sanity (positive, finite).
    pub fn validate(&self, force: bool) -> Result<()> {
        self.canny.validate(force)?;
        if force {
            if self.curve_length < 2
                || !(self.line_fitting_error >= 0.0)
                || !(self.angular_difference >= 0.0)
                || !(self.linking_distance >= 0.0)
            {
                return Err(Error::Validation("extraction thresholds must be non-negative".into()));
            }
            return Ok(());
        }
        let (clo, chi) = CURVE_LENGTH_RANGE;
        in_range("curve_length", self.curve_length as f64, (clo as f64, chi as f64))?;
        in_range("line_fitting_error", self.line_fitting_error, LINE_FITTING_ERROR_RANGE)?;
        in_range("angular_difference", self.angular_difference, ANGULAR_DIFFERENCE_RANGE)?;
        in_range("linking_distance", self.linking_distance, LINKING_DISTANCE_RANGE)
    }
}

/// Removes chains with fewer than `curve_length` pixels.
pub fn drop_short(chains: Vec<PixelChain>, curve_length: usize) -> Vec<PixelChain> {
    chains.into_iter().filter(|c| c.len() >= curve_length).collect()
}

/// Douglas–Peucker simplification of `points` with tolerance `tol`.
pub fn douglas_peucker(points: &[Vertex], tol: f64) -> Vec<Vertex> {
    if points.len() <= 2 {
        return points.to_vec();
    }
    let mut keep = vec![false; points.len()];
    keep[0] = true;
    keep[points.len() - 1] = true;
    let mut stack = vec![(0, points.len() - 1)];
    while let Some((a, b)) = stack.pop() {
        if b <= a + 1 {
            continue;
        }
        let (mut worst, mut idx) = (-1.0, a);
        for (i, p) in points.iter().enumerate().take(b).skip(a + 1) {
            // closed chains have coincident ends; fall back to point distance
            let d = if points[a] == points[b] {
                crate::geom::distance(*p, points[a])
            } else {
                point_line_distance(*p, points[a], points[b])
            };
            if d > worst {
                worst = d;
                idx = i;
            }
        }
        if worst > tol {
            keep[idx] = true;
            stack.push((a, idx));
            stack.push((idx, b));
        }
    }
    points
        .iter()
        .zip(keep)
        .filter_map(|(p, k)| k.then_some(*p))
        .collect()
}

/// Fits a polyline to a traced chain; endpoints are preserved.
pub fn fit_polyline(chain: &PixelChain, line_fitting_error: f64, id: u32) -> Result<Lineament> {
    let pts = chain.vertices();
    if pts.len() < 2 {
        return Err(Error::InvalidInput("chain needs at least two pixels".into()));
    }
    let simplified = douglas_peucker(&pts, line_fitting_error);
    Lineament::new(id, simplified)
}

/// Canny → trace → drop short → fit → link, on one image.
pub fn extract(img: &GrayImage, p: &ExtractionParams, provenance: &str) -> Result<LineamentSet> {
    let edges = canny(img, &p.canny);
    let chains = drop_short(trace_curves(&edges), p.curve_length);
    let mut lines = Vec::with_capacity(chains.len());
    for (i, ch) in chains.iter().enumerate() {
        // closed loops can collapse to one vertex; they carry no direction
        if let Ok(l) = fit_polyline(ch, p.line_fitting_error, i as u32) {
            lines.push(l);
        }
    }
    let set = LineamentSet::new(lines, img.georef().clone(), provenance)?;
    Ok(link_polylines(&set, p.angular_difference, p.linking_distance))
}

/// Runs [`extract`] on each image and unions the results, dropping exact
/// duplicates and renumbering ids in order.
pub fn extract_union(images: &[(String, GrayImage)], p: &ExtractionParams) -> Result<LineamentSet> {
    let Some((_, first)) = images.first() else {
        return Err(Error::InvalidInput("no images to extract from".into()));
    };
    let georef = first.georef().clone();
    let sets = par::map_slice(images, |(tag, img)| extract(img, p, tag));
    let mut all: Vec<Lineament> = Vec::new();
    let mut tags = Vec::new();
    for (set, (tag, _)) in sets.into_iter().zip(images) {
        let set = set?;
        tags.push(tag.as_str());
        for l in set.into_lineaments() {
            let dup = all.iter().any(|o| {
                o.vertices() == l.vertices() || o.reversed().vertices() == l.vertices()
            });
            if !dup {
                let id = all.len() as u32;
                all.push(l.with_id(id));
            }
        }
    }
    LineamentSet::new(all, georef, tags.join("+"))
}
