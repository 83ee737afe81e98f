//! Canny edge detection.
//!
//! Gaussian smoothing → Sobel gradients → magnitude on a fixed 0–255 scale →
//! non-maxima suppression over four direction sectors → hysteresis with
//! `low = high / 2`.

use std::collections::VecDeque;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::raster::{write_mask_ascii, GeoRef, GrayImage};

pub const FILTER_RADIUS_RANGE: (usize, usize) = (3, 8);
pub const EDGE_GRADIENT_RANGE: (f64, f64) = (10.0, 70.0);

/// Magnitudes and smoothed intensities are rounded to this step before any
/// comparison so that mirrored or rotated inputs compare identically.
const QUANTUM: f64 = 1.0 / (1u64 << 20) as f64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CannyParams {
    /// Gaussian kernel half-width in pixels; sigma is half of it.
    pub filter_radius: usize,
    /// High hysteresis threshold on the 0–255 gradient scale.
    pub edge_gradient: f64,
}

impl Default for CannyParams {
    fn default() -> Self {
        CannyParams {
            filter_radius: 5,
            edge_gradient: 50.0,
        }
    }
}

impl CannyParams {
    /// Checks the documented ranges; `force` skips the edge-gradient range check.
    pub fn validate(&self, force: bool) -> Result<()> {
        let (rlo, rhi) = FILTER_RADIUS_RANGE;
        if self.filter_radius < rlo || self.filter_radius > rhi {
            return Err(Error::Validation(format!(
                "filter_radius {} outside [{rlo}, {rhi}]",
                self.filter_radius
            )));
        }
        if !(self.edge_gradient.is_finite() && self.edge_gradient >= 0.0) {
            return Err(Error::Validation(format!(
                "edge_gradient must be a non-negative number, got {}",
                self.edge_gradient
            )));
        }
        let (glo, ghi) = EDGE_GRADIENT_RANGE;
        if !force && (self.edge_gradient < glo || self.edge_gradient > ghi) {
            return Err(Error::Validation(format!(
                "edge_gradient {} outside [{glo}, {ghi}] (use force to override)",
                self.edge_gradient
            )));
        }
        Ok(())
    }

    pub fn sigma(&self) -> f64 {
        self.filter_radius as f64 / 2.0
    }
}

/// Binary edge raster.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMap {
    width: usize,
    height: usize,
    edges: Vec<bool>,
    georef: GeoRef,
}

impl EdgeMap {
    pub fn new(width: usize, height: usize, edges: Vec<bool>, georef: GeoRef) -> Result<Self> {
        if edges.len() != width * height {
            return Err(Error::DimensionMismatch("edge map size".into()));
        }
        Ok(EdgeMap {
            width,
            height,
            edges,
            georef,
        })
    }

    /// Builds a map from a predicate; handy for fixtures.
    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut edges = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                edges.push(f(r, c));
            }
        }
        EdgeMap {
            width,
            height,
            edges,
            georef: GeoRef::default(),
        }
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
        &self.edges
    }
    pub fn get(&self, r: usize, c: usize) -> bool {
        self.edges[r * self.width + c]
    }
    pub fn count(&self) -> usize {
        self.edges.iter().filter(|&&e| e).count()
    }

    pub fn rotated_cw(&self) -> EdgeMap {
        let (w, h) = (self.width, self.height);
        let mut edges = vec![false; w * h];
        for r in 0..w {
            for c in 0..h {
                edges[r * h + c] = self.edges[(h - 1 - c) * w + r];
            }
        }
        EdgeMap {
            width: h,
            height: w,
            edges,
            georef: self.georef.clone(),
        }
    }

    pub fn write_ascii(&self, path: impl AsRef<Path>) -> Result<()> {
        write_mask_ascii(self.width, self.height, &self.georef, &self.edges, path)
    }
}

fn quantize(x: f64) -> f64 {
    (x / QUANTUM).round() * QUANTUM
}

/// Normalised Gaussian taps for offsets `-radius..=radius`.
fn gaussian_taps(radius: usize, sigma: f64) -> Vec<f64> {
    let taps: Vec<f64> = (-(radius as isize)..=radius as isize)
        .map(|d| (-((d * d) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / s).collect()
}

/// One separable pass. Border taps replicate the edge pixel; masked taps are
/// dropped and the remaining weights renormalised.
fn smooth_pass(
    data: &[f64],
    valid: &[bool],
    w: usize,
    h: usize,
    taps: &[f64],
    horizontal: bool,
) -> Vec<f64> {
    let radius = taps.len() / 2;
    let mut out = vec![0.0; w * h];
    par::fill_rows(&mut out, w, |r, row| {
        for (c, o) in row.iter_mut().enumerate() {
            let (mut acc, mut wsum) = (0.0, 0.0);
            for (k, &t) in taps.iter().enumerate() {
                let (rr, cc) = if horizontal {
                    (r, (c + k).saturating_sub(radius).min(w - 1))
                } else {
                    ((r + k).saturating_sub(radius).min(h - 1), c)
                };
                let i = rr * w + cc;
                if valid[i] {
                    acc += t * data[i];
                    wsum += t;
                }
            }
            *o = if wsum > 0.0 { acc / wsum } else { 0.0 };
        }
    });
    out
}

pub fn gaussian_smooth(img: &GrayImage, radius: usize, sigma: f64) -> Vec<f64> {
    let taps = gaussian_taps(radius, sigma);
    let (w, h) = (img.width(), img.height());
    // a pixel with any valid tap in its row window counts as valid for the second pass
    let first = smooth_pass(img.data(), img.valid_mask(), w, h, &taps, true);
    let any_valid: Vec<bool> = par::map_range(h, |r| {
        (0..w)
            .map(|c| {
                (0..taps.len()).any(|k| {
                    let cc = (c + k).saturating_sub(taps.len() / 2).min(w - 1);
                    img.valid_mask()[r * w + cc]
                })
            })
            .collect::<Vec<bool>>()
    })
    .concat();
    smooth_pass(&first, &any_valid, w, h, &taps, false)
}

/// Gradient field of a smoothed image.
#[derive(Debug, Clone)]
pub struct Gradient {
    pub width: usize,
    pub height: usize,
    /// Magnitude on the 0–255 scale.
    pub magnitude: Vec<f64>,
    /// Sector of the gradient direction: 0, 1, 2, 3 for 0°, 45°, 90°, 135°.
    pub sector: Vec<u8>,
    pub smoothed: Vec<f64>,
}

/// Scale that maps the peak Sobel response of an ideal 0→255 step, blurred
/// with `sigma`, to 255.
fn magnitude_scale(sigma: f64) -> f64 {
    sigma * (2.0 * std::f64::consts::PI).sqrt() / 8.0
}

pub fn gradient(img: &GrayImage, p: &CannyParams) -> Gradient {
    let (w, h) = (img.width(), img.height());
    let s: Vec<f64> = gaussian_smooth(img, p.filter_radius, p.sigma())
        .into_iter()
        .map(quantize)
        .collect();
    let scale = magnitude_scale(p.sigma());
    let rows: Vec<Vec<(f64, u8)>> = par::map_range(h, |r| {
        let rm = r.saturating_sub(1);
        let rp = (r + 1).min(h - 1);
        (0..w)
            .map(|c| {
                let cm = c.saturating_sub(1);
                let cp = (c + 1).min(w - 1);
                let at = |rr: usize, cc: usize| s[rr * w + cc];
                let gx = (at(rm, cp) + 2.0 * at(r, cp) + at(rp, cp))
                    - (at(rm, cm) + 2.0 * at(r, cm) + at(rp, cm));
                let gy = (at(rp, cm) + 2.0 * at(rp, c) + at(rp, cp))
                    - (at(rm, cm) + 2.0 * at(rm, c) + at(rm, cp));
                let mag = quantize((gx.hypot(gy) * scale).min(255.0));
                let theta = gy.atan2(gx).to_degrees().rem_euclid(180.0);
                let sector = if !(22.5..157.5).contains(&theta) {
                    0
                } else if theta < 67.5 {
                    1
                } else if theta < 112.5 {
                    2
                } else {
                    3
                };
                (mag, sector)
            })
            .collect()
    });
    let (magnitude, sector) = rows.into_iter().flatten().unzip();
    Gradient {
        width: w,
        height: h,
        magnitude,
        sector,
        smoothed: s,
    }
}

/// Neighbour offsets `(dr, dc)` along the gradient for each sector.
const SECTOR_OFFSETS: [(isize, isize); 4] = [(0, 1), (1, 1), (1, 0), (1, -1)];

/// Local maxima of the magnitude along the gradient direction. A tie with a
/// neighbour is resolved in favour of the brighter smoothed pixel.
pub fn non_maxima_suppression(g: &Gradient, valid: &[bool]) -> Vec<bool> {
    let (w, h) = (g.width, g.height);
    let rows: Vec<Vec<bool>> = par::map_range(h, |r| {
        (0..w)
            .map(|c| {
                let i = r * w + c;
                let m = g.magnitude[i];
                if !valid[i] || m <= 0.0 {
                    return false;
                }
                let (dr, dc) = SECTOR_OFFSETS[g.sector[i] as usize];
                for sign in [1isize, -1] {
                    let rr = r as isize + sign * dr;
                    let cc = c as isize + sign * dc;
                    if rr < 0 || cc < 0 || rr >= h as isize || cc >= w as isize {
                        continue;
                    }
                    let j = rr as usize * w + cc as usize;
                    let n = g.magnitude[j];
                    if n > m || (n == m && g.smoothed[j] > g.smoothed[i]) {
                        return false;
                    }
                }
                true
            })
            .collect()
    });
    rows.concat()
}

/// Keeps weak pixels 8-connected to a strong one. Seeds are visited in
/// row-major order.
pub fn hysteresis(candidates: &[bool], magnitude: &[f64], w: usize, h: usize, high: f64, low: f64) -> Vec<bool> {
    let mut out = vec![false; w * h];
    let mut queue = VecDeque::new();
    for seed in 0..w * h {
        if out[seed] || !candidates[seed] || magnitude[seed] < high {
            continue;
        }
        out[seed] = true;
        queue.push_back(seed);
        while let Some(i) = queue.pop_front() {
            let (r, c) = ((i / w) as isize, (i % w) as isize);
            for dr in -1..=1 {
                for dc in -1..=1 {
                    let (rr, cc) = (r + dr, c + dc);
                    if rr < 0 || cc < 0 || rr >= h as isize || cc >= w as isize {
                        continue;
                    }
                    let j = rr as usize * w + cc as usize;
                    if !out[j] && candidates[j] && magnitude[j] >= low {
                        out[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
    }
    out
}

/// Runs Canny. Parameters are assumed validated.
pub fn canny(img: &GrayImage, p: &CannyParams) -> EdgeMap {
    let g = gradient(img, p);
    let nms = non_maxima_suppression(&g, img.valid_mask());
    let high = p.edge_gradient;
    let edges = hysteresis(&nms, &g.magnitude, g.width, g.height, high, high / 2.0);
    EdgeMap {
        width: img.width(),
        height: img.height(),
        edges,
        georef: img.georef().clone(),
    }
}
