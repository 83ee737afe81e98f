//! Raster and vector data model, georeferencing, and file I/O.

mod ascii;
mod bsq;
mod vector;

pub use ascii::{read_ascii_grid, write_ascii_grid, write_mask_ascii};
pub use bsq::{read_multiband, write_multiband, BsqHeader};
pub use vector::{read_lineaments, read_points, write_lineaments, write_points, VectorFormat};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Affine, north-up, square-pixel georeference.
///
/// `origin_x`/`origin_y` locate the outer (north-west) corner of pixel (0, 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoRef {
    pub origin_x: f64,
    pub origin_y: f64,
    pub pixel_size: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsg_hint: Option<String>,
}

impl Default for GeoRef {
    fn default() -> Self {
        GeoRef {
            origin_x: 0.0,
            origin_y: 0.0,
            pixel_size: 1.0,
            epsg_hint: None,
        }
    }
}

impl GeoRef {
    pub fn new(origin_x: f64, origin_y: f64, pixel_size: f64) -> Result<Self> {
        let g = GeoRef {
            origin_x,
            origin_y,
            pixel_size,
            epsg_hint: None,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn with_epsg(mut self, hint: impl Into<String>) -> Self {
        self.epsg_hint = Some(hint.into());
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pixel_size > 0.0 && self.pixel_size.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "pixel_size must be positive and finite, got {}",
                self.pixel_size
            )));
        }
        if !self.origin_x.is_finite() || !self.origin_y.is_finite() {
            return Err(Error::InvalidInput("non-finite georeference origin".into()));
        }
        Ok(())
    }

    /// World coordinates of a pixel-coordinate point (centers at integers).
    pub fn pixel_to_world(&self, col: f64, row: f64) -> (f64, f64) {
        (
            self.origin_x + (col + 0.5) * self.pixel_size,
            self.origin_y - (row + 0.5) * self.pixel_size,
        )
    }

    /// Inverse of [`GeoRef::pixel_to_world`].
    pub fn world_to_pixel(&self, x: f64, y: f64) -> (f64, f64) {
        (
            (x - self.origin_x) / self.pixel_size - 0.5,
            (self.origin_y - y) / self.pixel_size - 0.5,
        )
    }

    /// Index of the pixel containing world point `(x, y)`, if inside `width × height`.
    pub fn cell_of(&self, x: f64, y: f64, width: usize, height: usize) -> Option<(usize, usize)> {
        let (c, r) = self.world_to_pixel(x, y);
        let (c, r) = ((c + 0.5).floor(), (r + 0.5).floor());
        if c < 0.0 || r < 0.0 || c >= width as f64 || r >= height as f64 {
            None
        } else {
            Some((r as usize, c as usize))
        }
    }

    /// True when both georeferences describe the same pixel lattice.
    pub fn same_grid(&self, other: &GeoRef) -> bool {
        let tol = 1e-9 * self.pixel_size.max(other.pixel_size);
        (self.pixel_size - other.pixel_size).abs() <= tol
            && (self.origin_x - other.origin_x).abs() <= tol * 1e3
            && (self.origin_y - other.origin_y).abs() <= tol * 1e3
    }

    /// Georeference of a grid whose cells are `factor` pixels wide.
    pub fn coarsened(&self, factor: usize) -> GeoRef {
        GeoRef {
            pixel_size: self.pixel_size * factor as f64,
            ..self.clone()
        }
    }
}

/// `width × height × bands` samples in band-sequential order with a per-pixel
/// validity mask. Masked samples are stored as `0.0`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultibandRaster {
    width: usize,
    height: usize,
    bands: usize,
    samples: Vec<f64>,
    valid: Vec<bool>,
    georef: GeoRef,
}

impl MultibandRaster {
    pub fn new(
        width: usize,
        height: usize,
        bands: usize,
        mut samples: Vec<f64>,
        valid: Vec<bool>,
        georef: GeoRef,
    ) -> Result<Self> {
        if bands < 1 {
            return Err(Error::InvalidInput("raster must have at least one band".into()));
        }
        let n = width * height;
        if samples.len() != n * bands {
            return Err(Error::DimensionMismatch(format!(
                "expected {} samples for {width}x{height}x{bands}, got {}",
                n * bands,
                samples.len()
            )));
        }
        if valid.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "mask has {} entries for {n} pixels",
                valid.len()
            )));
        }
        georef.validate()?;
        for b in 0..bands {
            for (i, s) in samples[b * n..(b + 1) * n].iter_mut().enumerate() {
                if valid[i] {
                    if !s.is_finite() {
                        return Err(Error::InvalidInput(format!(
                            "non-finite sample at band {b}, pixel {i}"
                        )));
                    }
                } else {
                    *s = 0.0;
                }
            }
        }
        Ok(MultibandRaster {
            width,
            height,
            bands,
            samples,
            valid,
            georef,
        })
    }

    /// Builds a fully valid raster from one plane per band.
    pub fn from_planes(
        width: usize,
        height: usize,
        planes: Vec<Vec<f64>>,
        georef: GeoRef,
    ) -> Result<Self> {
        let bands = planes.len();
        let samples: Vec<f64> = planes.into_iter().flatten().collect();
        Self::new(width, height, bands, samples, vec![true; width * height], georef)
    }

    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn bands(&self) -> usize {
        self.bands
    }
    pub fn georef(&self) -> &GeoRef {
        &self.georef
    }
    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }
    pub fn valid_mask(&self) -> &[bool] {
        &self.valid
    }
    pub fn is_valid(&self, idx: usize) -> bool {
        self.valid[idx]
    }
    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    pub fn band(&self, b: usize) -> &[f64] {
        let n = self.pixel_count();
        &self.samples[b * n..(b + 1) * n]
    }

    /// Copies band `b` into a single-band image.
    pub fn band_image(&self, b: usize) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            data: self.band(b).to_vec(),
            valid: self.valid.clone(),
            georef: self.georef.clone(),
        }
    }

    /// Applies an extra mask (logical AND with the current one).
    pub fn masked(mut self, keep: &[bool]) -> Result<Self> {
        if keep.len() != self.pixel_count() {
            return Err(Error::DimensionMismatch("mask size".into()));
        }
        let n = self.pixel_count();
        for (i, &k) in keep.iter().enumerate() {
            if !k && self.valid[i] {
                self.valid[i] = false;
                for b in 0..self.bands {
                    self.samples[b * n + i] = 0.0;
                }
            }
        }
        Ok(self)
    }
}

/// Single-band raster.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
    valid: Vec<bool>,
    georef: GeoRef,
}

impl GrayImage {
    pub fn new(
        width: usize,
        height: usize,
        data: Vec<f64>,
        valid: Vec<bool>,
        georef: GeoRef,
    ) -> Result<Self> {
        let r = MultibandRaster::new(width, height, 1, data, valid, georef)?;
        Ok(GrayImage::from_parts_unchecked(r.width, r.height, r.samples, r.valid, r.georef))
    }

    /// A fully valid image.
    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(width, height, data, vec![true; width * height], GeoRef::default())
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        GrayImage::from_parts_unchecked(width, height, data, vec![true; width * height], GeoRef::default())
    }

    pub(crate) fn from_parts_unchecked(
        width: usize,
        height: usize,
        data: Vec<f64>,
        valid: Vec<bool>,
        georef: GeoRef,
    ) -> Self {
        debug_assert_eq!(data.len(), width * height);
        debug_assert_eq!(valid.len(), width * height);
        GrayImage {
            width,
            height,
            data,
            valid,
            georef,
        }
    }

    pub fn with_georef(mut self, georef: GeoRef) -> Self {
        self.georef = georef;
        self
    }

    /// Same geometry and mask, new sample values (masked entries forced to 0).
    pub fn with_data(&self, mut data: Vec<f64>) -> Self {
        assert_eq!(data.len(), self.data.len());
        for (d, &v) in data.iter_mut().zip(&self.valid) {
            if !v {
                *d = 0.0;
            }
        }
        GrayImage {
            data,
            ..self.clone_meta()
        }
    }

    fn clone_meta(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            data: Vec::new(),
            valid: self.valid.clone(),
            georef: self.georef.clone(),
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
    pub fn data(&self) -> &[f64] {
        &self.data
    }
    pub fn valid_mask(&self) -> &[bool] {
        &self.valid
    }
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }
    pub fn is_valid(&self, row: usize, col: usize) -> bool {
        self.valid[row * self.width + col]
    }

    /// Minimum and maximum over valid pixels.
    pub fn valid_range(&self) -> Option<(f64, f64)> {
        self.data
            .iter()
            .zip(&self.valid)
            .filter(|(_, &v)| v)
            .fold(None, |acc, (&x, _)| match acc {
                None => Some((x, x)),
                Some((lo, hi)) => Some((lo.min(x), hi.max(x))),
            })
    }

    /// Linear stretch of valid pixels onto `[0, 255]`. A constant image maps to 0.
    pub fn rescaled_to_byte_range(&self) -> GrayImage {
        let Some((lo, hi)) = self.valid_range() else {
            return self.clone();
        };
        let span = hi - lo;
        let data = self
            .data
            .iter()
            .zip(&self.valid)
            .map(|(&x, &v)| {
                if !v || span <= 0.0 {
                    0.0
                } else {
                    ((x - lo) / span * 255.0).clamp(0.0, 255.0)
                }
            })
            .collect();
        GrayImage {
            data,
            ..self.clone_meta()
        }
    }

    /// Rotates 90° clockwise.
    pub fn rotated_cw(&self) -> GrayImage {
        let (w, h) = (self.width, self.height);
        let mut data = vec![0.0; w * h];
        let mut valid = vec![false; w * h];
        // new image is h wide, w tall: new(r, c) = old(h - 1 - c, r)
        for r in 0..w {
            for c in 0..h {
                let src = (h - 1 - c) * w + r;
                data[r * h + c] = self.data[src];
                valid[r * h + c] = self.valid[src];
            }
        }
        GrayImage::from_parts_unchecked(h, w, data, valid, self.georef.clone())
    }

    pub fn into_raster(self) -> MultibandRaster {
        MultibandRaster {
            width: self.width,
            height: self.height,
            bands: 1,
            samples: self.data,
            valid: self.valid,
            georef: self.georef,
        }
    }

    pub fn from_raster(r: MultibandRaster) -> Result<Self> {
        if r.bands != 1 {
            return Err(Error::DimensionMismatch(format!(
                "grey image needs exactly 1 band, got {}",
                r.bands
            )));
        }
        Ok(GrayImage {
            width: r.width,
            height: r.height,
            data: r.samples,
            valid: r.valid,
            georef: r.georef,
        })
    }
}

/// A labelled point in world coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPoint {
    pub x: f64,
    pub y: f64,
    pub label: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointSet {
    points: Vec<LabeledPoint>,
}

impl PointSet {
    pub fn new(points: Vec<LabeledPoint>) -> Result<Self> {
        if let Some(p) = points.iter().find(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "point `{}` has non-finite coordinates",
                p.label
            )));
        }
        Ok(PointSet { points })
    }

    pub fn points(&self) -> &[LabeledPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}
