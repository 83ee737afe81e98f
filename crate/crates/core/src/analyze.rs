//! Lineament density, orientation statistics, occurrence correlation and
//! false-colour band selection.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{segment_azimuth, segment_disk_length, Vertex};
use crate::par;
use crate::raster::{write_ascii_grid, GeoRef, GrayImage, MultibandRaster, PointSet};
use crate::vectorize::LineamentSet;

pub const DEFAULT_CELL_SIZE: usize = 10;
pub const DEFAULT_SEARCH_RADIUS: usize = 50;
pub const ROSE_BINS: usize = 18;
pub const CORRELATION_STEPS: usize = 20;

/// Coarse grid of summed lineament length around each cell centre.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    cols: usize,
    rows: usize,
    cell_size_px: usize,
    search_radius_px: usize,
    raw: Vec<f64>,
    fuzzy: Vec<f64>,
    georef: GeoRef,
}

/// Min-max scaling into `[0, 1]`; a constant input maps to all zeros.
pub fn fuzzy_linear(raw: &[f64]) -> Vec<f64> {
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return vec![0.0; raw.len()];
    }
    raw.iter().map(|&v| (v - lo) / (hi - lo)).collect()
}

impl DensityGrid {
    /// Wraps precomputed raw densities; `georef` is the coarse grid's.
    pub fn from_raw(
        cols: usize,
        rows: usize,
        raw: Vec<f64>,
        georef: GeoRef,
        cell_size_px: usize,
        search_radius_px: usize,
    ) -> Result<Self> {
        if raw.len() != cols * rows || raw.is_empty() {
            return Err(Error::DimensionMismatch("density grid size".into()));
        }
        Ok(DensityGrid {
            cols,
            rows,
            cell_size_px,
            search_radius_px,
            fuzzy: fuzzy_linear(&raw),
            raw,
            georef,
        })
    }

    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cell_size_px(&self) -> usize {
        self.cell_size_px
    }
    pub fn search_radius_px(&self) -> usize {
        self.search_radius_px
    }
    pub fn raw(&self) -> &[f64] {
        &self.raw
    }
    pub fn fuzzy(&self) -> &[f64] {
        &self.fuzzy
    }
    pub fn georef(&self) -> &GeoRef {
        &self.georef
    }

    /// Fuzzy value of the coarse cell containing world point `(x, y)`.
    pub fn fuzzy_at_world(&self, x: f64, y: f64) -> Option<f64> {
        self.georef
            .cell_of(x, y, self.cols, self.rows)
            .map(|(r, c)| self.fuzzy[r * self.cols + c])
    }

    pub fn fuzzy_image(&self) -> GrayImage {
        GrayImage::from_fn(self.cols, self.rows, |r, c| self.fuzzy[r * self.cols + c]).with_georef(self.georef.clone())
    }

    pub fn write_ascii(&self, path: impl AsRef<Path>) -> Result<()> {
        write_ascii_grid(&self.fuzzy_image(), path)
    }
}

/// Pixel-coordinate centre of coarse cell `k` along one axis.
pub fn cell_center(k: usize, cell_size: usize) -> f64 {
    (k * cell_size) as f64 + cell_size as f64 / 2.0 - 0.5
}

/// Sums, for each coarse cell, the lineament length (world units) inside the
/// search disk around the cell centre. The grid covers `width × height` pixels.
pub fn density(
    set: &LineamentSet,
    cell_size_px: usize,
    search_radius_px: usize,
    width: usize,
    height: usize,
) -> Result<DensityGrid> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidInput("empty raster extent".into()));
    }
    if cell_size_px < 1 || search_radius_px < cell_size_px {
        return Err(Error::Validation(format!(
            "density needs cell size >= 1 and search radius >= cell size (got {cell_size_px}, {search_radius_px})"
        )));
    }
    let cols = width.div_ceil(cell_size_px);
    let rows = height.div_ceil(cell_size_px);
    let radius = search_radius_px as f64;
    let scale = set.georef().pixel_size;
    let segs: Vec<(Vertex, Vertex)> = set.lineaments().iter().flat_map(|l| l.segments()).collect();
    let mut raw = vec![0.0; cols * rows];
    par::fill_rows(&mut raw, cols, |r, row| {
        let cy = cell_center(r, cell_size_px);
        for (c, out) in row.iter_mut().enumerate() {
            let center = [cell_center(c, cell_size_px), cy];
            let mut sum = 0.0;
            for &(a, b) in &segs {
                if a[0].min(b[0]) > center[0] + radius
                    || a[0].max(b[0]) < center[0] - radius
                    || a[1].min(b[1]) > center[1] + radius
                    || a[1].max(b[1]) < center[1] - radius
                {
                    continue;
                }
                sum += segment_disk_length(a, b, center, radius);
            }
            *out = sum * scale;
        }
    });
    DensityGrid::from_raw(cols, rows, raw, set.georef().coarsened(cell_size_px), cell_size_px, search_radius_px)
}

/// Azimuth histogram in 10° bins over `[0, 180)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoseHistogram {
    /// Segment length per bin (pixels).
    pub length: [f64; ROSE_BINS],
    /// Lineaments per bin, binned by their mean azimuth.
    pub count: [usize; ROSE_BINS],
}

fn bin_of(az: f64) -> usize {
    ((az / 10.0).floor() as usize).min(ROSE_BINS - 1)
}

fn percentages(v: impl Iterator<Item = f64> + Clone) -> Vec<f64> {
    let total: f64 = v.clone().sum();
    v.map(|x| if total > 0.0 { 100.0 * x / total } else { 0.0 }).collect()
}

impl RoseHistogram {
    pub fn is_empty(&self) -> bool {
        self.count.iter().all(|&c| c == 0)
    }

    pub fn length_pct(&self) -> Vec<f64> {
        percentages(self.length.iter().copied())
    }

    pub fn count_pct(&self) -> Vec<f64> {
        percentages(self.count.iter().map(|&c| c as f64))
    }

    /// Start azimuth of the bin holding the most length; `None` when empty.
    pub fn dominant_bin(&self) -> Option<f64> {
        if self.is_empty() {
            return None;
        }
        let mut best = 0;
        for k in 1..ROSE_BINS {
            if self.length[k] > self.length[best] {
                best = k;
            }
        }
        Some(10.0 * best as f64)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["bin_start_deg", "length_sum", "length_pct", "count", "count_pct"])?;
        let (lp, cp) = (self.length_pct(), self.count_pct());
        for k in 0..ROSE_BINS {
            w.write_record([
                (10 * k).to_string(),
                self.length[k].to_string(),
                lp[k].to_string(),
                self.count[k].to_string(),
                cp[k].to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Length-weighted segment azimuths plus per-lineament counts.
pub fn rose(set: &LineamentSet) -> RoseHistogram {
    let mut h = RoseHistogram {
        length: [0.0; ROSE_BINS],
        count: [0; ROSE_BINS],
    };
    for l in set.lineaments() {
        for (a, b) in l.segments() {
            h.length[bin_of(segment_azimuth(a, b))] += crate::geom::distance(a, b);
        }
        h.count[bin_of(l.mean_azimuth())] += 1;
    }
    h
}

/// Share of occurrence points in cells at or above each fuzzy threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationCurve {
    pub thresholds: Vec<f64>,
    /// Percentage of all points, in `[0, 100]`.
    pub pct_points: Vec<f64>,
    /// Trapezoidal area under the curve with percentages as fractions.
    pub auc: f64,
    pub n_points: usize,
    /// Points outside the grid; they count as below every threshold.
    pub n_outside: usize,
}

impl CorrelationCurve {
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["threshold", "pct_points", "auc"])?;
        let last = self.thresholds.len().saturating_sub(1);
        for (i, (t, p)) in self.thresholds.iter().zip(&self.pct_points).enumerate() {
            let auc = if i == last { self.auc.to_string() } else { String::new() };
            w.write_record([t.to_string(), p.to_string(), auc])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

pub fn correlate_occurrences(d: &DensityGrid, pts: &PointSet) -> CorrelationCurve {
    let values: Vec<Option<f64>> = pts.points().iter().map(|p| d.fuzzy_at_world(p.x, p.y)).collect();
    let n_outside = values.iter().filter(|v| v.is_none()).count();
    if n_outside > 0 {
        log::warn!("{n_outside} occurrence point(s) fall outside the density grid");
    }
    let n = values.len();
    let thresholds: Vec<f64> = (0..=CORRELATION_STEPS).map(|i| i as f64 / CORRELATION_STEPS as f64).collect();
    let pct_points: Vec<f64> = thresholds
        .iter()
        .map(|&t| {
            let hits = values.iter().filter(|v| v.is_some_and(|f| f >= t)).count();
            if n == 0 {
                0.0
            } else {
                100.0 * hits as f64 / n as f64
            }
        })
        .collect();
    let dt = 1.0 / CORRELATION_STEPS as f64;
    let auc = pct_points.windows(2).map(|w| 0.5 * (w[0] + w[1]) / 100.0 * dt).sum();
    CorrelationCurve {
        thresholds,
        pct_points,
        auc,
        n_points: n,
        n_outside,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FccTriplet {
    /// Zero-based band indices, ascending.
    pub bands: [usize; 3],
    /// Sum of pairwise absolute correlations, in `[0, 3]`.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FccRanking {
    /// Least mutually correlated first.
    pub triplets: Vec<FccTriplet>,
    pub band_stddev: Vec<f64>,
    pub constant_bands: Vec<usize>,
}

/// Absolute Pearson correlation matrix over valid pixels; a constant band is
/// treated as fully correlated with every other band.
pub fn abs_correlation(r: &MultibandRaster) -> (Vec<Vec<f64>>, Vec<f64>) {
    let b = r.bands();
    let valid: Vec<usize> = (0..r.pixel_count()).filter(|&i| r.is_valid(i)).collect();
    let n = valid.len() as f64;
    let means: Vec<f64> = (0..b).map(|k| par::det_sum(valid.len(), |j| r.band(k)[valid[j]]) / n).collect();
    let cov = |p: usize, q: usize| {
        let (bp, bq) = (r.band(p), r.band(q));
        par::det_sum(valid.len(), |j| (bp[valid[j]] - means[p]) * (bq[valid[j]] - means[q])) / n
    };
    let var: Vec<f64> = (0..b).map(|k| cov(k, k)).collect();
    let std: Vec<f64> = var.iter().map(|v| v.max(0.0).sqrt()).collect();
    let mut rho = vec![vec![1.0; b]; b];
    for p in 0..b {
        for q in p + 1..b {
            let v = if std[p] > 0.0 && std[q] > 0.0 {
                (cov(p, q) / (std[p] * std[q])).abs().min(1.0)
            } else {
                1.0
            };
            rho[p][q] = v;
            rho[q][p] = v;
        }
    }
    (rho, std)
}

pub fn rank_fcc_triplets(r: &MultibandRaster) -> Result<FccRanking> {
    let b = r.bands();
    if b < 3 {
        return Err(Error::InvalidInput(format!("need at least 3 bands, got {b}")));
    }
    if r.valid_count() < 2 {
        return Err(Error::InvalidInput("too few valid pixels to correlate bands".into()));
    }
    let (rho, std) = abs_correlation(r);
    let constant: Vec<usize> = (0..b).filter(|&k| std[k] == 0.0).collect();
    for k in &constant {
        log::warn!("band {} is constant; treating it as fully correlated", k + 1);
    }
    let mut triplets = Vec::new();
    for i in 0..b {
        for j in i + 1..b {
            for k in j + 1..b {
                triplets.push(FccTriplet {
                    bands: [i, j, k],
                    score: rho[i][j] + rho[i][k] + rho[j][k],
                });
            }
        }
    }
    triplets.sort_by(|x, y| x.score.total_cmp(&y.score).then(x.bands.cmp(&y.bands)));
    Ok(FccRanking {
        triplets,
        band_stddev: std,
        constant_bands: constant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::LabeledPoint;
    use crate::vectorize::Lineament;
    use approx::assert_abs_diff_eq;

    fn set(lines: Vec<Vec<Vertex>>) -> LineamentSet {
        let ls = lines.into_iter().enumerate().map(|(i, v)| Lineament::new(i as u32, v).unwrap()).collect();
        LineamentSet::new(ls, GeoRef::default(), "t").unwrap()
    }

    #[test]
    fn single_supported_cell() {
        // centres at 4.5, 14.5, ...; just past the corner only the first disk reaches
        let s = set(vec![vec![[-2.0, -1.0], [-1.0, -2.0]]]);
        let d = density(&s, 10, 10, 50, 50).unwrap();
        assert_eq!(d.fuzzy()[0], 1.0);
        assert!(d.fuzzy()[1..].iter().all(|&f| f == 0.0));
        assert_abs_diff_eq!(d.raw()[0], 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn empty_set_is_all_zero() {
        let d = density(&set(vec![]), 10, 50, 100, 80).unwrap();
        assert_eq!((d.cols(), d.rows()), (10, 8));
        assert!(d.raw().iter().chain(d.fuzzy()).all(|&v| v == 0.0));
    }

    #[test]
    fn density_validation() {
        assert!(density(&set(vec![]), 10, 5, 100, 100).is_err());
        assert!(density(&set(vec![]), 10, 50, 0, 100).is_err());
    }

    #[test]
    fn clipped_length_matches_dense_sampling() {
        let a = [0.0, 2.0];
        let b = [97.0, 41.0];
        let s = set(vec![vec![a, b]]);
        let d = density(&s, 10, 10, 100, 50).unwrap();
        for r in 0..d.rows() {
            for c in 0..d.cols() {
                let center = [cell_center(c, 10), cell_center(r, 10)];
                let mut est = 0.0;
                crate::geom::sample_polyline(&[a, b], 0.1, |p, len| {
                    if crate::geom::distance(p, center) <= 10.0 {
                        est += len;
                    }
                });
                // each disk-boundary crossing can misclassify at most one 0.1-px piece
                let exact = d.raw()[r * d.cols() + c];
                assert!((exact - est).abs() <= 0.2 + 1e-9, "{exact} vs {est}");
            }
        }
    }

    #[test]
    fn segment_across_two_disjoint_disks() {
        // centres (4.5, 4.5) and (34.5, 4.5), radius 10: disjoint
        let (a, b) = ([-6.0, 2.0], [46.0, 7.0]);
        let d = density(&set(vec![vec![a, b]]), 10, 10, 50, 20).unwrap();
        for c in [0, 3] {
            let center = [cell_center(c, 10), cell_center(0, 10)];
            let mut est = 0.0;
            crate::geom::sample_polyline(&[a, b], 0.1, |p, len| {
                if crate::geom::distance(p, center) <= 10.0 {
                    est += len;
                }
            });
            let exact = d.raw()[c];
            assert!(exact > 15.0);
            assert!((exact - est).abs() <= 0.01 * exact, "{exact} vs {est}");
        }
    }

    #[test]
    fn doubling_keeps_fuzzy() {
        let l = vec![vec![[5.0, 5.0], [60.0, 30.0]], vec![[20.0, 70.0], [25.0, 10.0]]];
        let d1 = density(&set(l.clone()), 10, 20, 80, 80).unwrap();
        let d2 = density(&set([l.clone(), l].concat()), 10, 20, 80, 80).unwrap();
        for (a, b) in d1.raw().iter().zip(d2.raw()) {
            assert_abs_diff_eq!(2.0 * a, *b, epsilon = 1e-9);
        }
        for (a, b) in d1.fuzzy().iter().zip(d2.fuzzy()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn rose_east_and_symmetry() {
        let h = rose(&set(vec![vec![[0.0, 0.0], [10.0, 0.0]]]));
        assert_eq!(h.length_pct()[9], 100.0);
        assert_eq!(h.dominant_bin(), Some(90.0));
        let s15 = 15f64.to_radians();
        let s105 = 105f64.to_radians();
        let h = rose(&set(vec![
            vec![[0.0, 0.0], [10.0 * s15.sin(), -10.0 * s15.cos()]],
            vec![[0.0, 0.0], [10.0 * s105.sin(), -10.0 * s105.cos()]],
        ]));
        let p = h.length_pct();
        assert_abs_diff_eq!(p[1], 50.0, epsilon = 1e-9);
        assert_abs_diff_eq!(p[10], 50.0, epsilon = 1e-9);
        assert_abs_diff_eq!(p.iter().sum::<f64>(), 100.0, epsilon = 1e-6);
    }

    #[test]
    fn rose_empty_and_reversal() {
        assert!(rose(&set(vec![])).is_empty());
        let s = set(vec![vec![[0.0, 0.0], [10.0, 3.0], [14.0, 20.0]]]);
        let rev = LineamentSet::new(vec![s.lineaments()[0].reversed()], GeoRef::default(), "r").unwrap();
        assert_eq!(rose(&s), rose(&rev));
    }

    fn grid(values: &[f64]) -> DensityGrid {
        DensityGrid::from_raw(values.len(), 1, values.to_vec(), GeoRef::default(), 1, 1).unwrap()
    }

    fn pts(cols: &[usize]) -> PointSet {
        PointSet::new(
            cols.iter()
                .map(|&c| LabeledPoint {
                    x: c as f64 + 0.5,
                    y: -0.5,
                    label: String::new(),
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn correlation_split_points() {
        let d = grid(&[0.0, 0.2, 0.8, 1.0]);
        let c = correlate_occurrences(&d, &pts(&[1, 2]));
        for (t, p) in c.thresholds.iter().zip(&c.pct_points) {
            let want = if *t <= 0.2 {
                100.0
            } else if *t <= 0.8 {
                50.0
            } else {
                0.0
            };
            assert_eq!(*p, want, "t = {t}");
        }
    }

    #[test]
    fn correlation_extremes() {
        let d = grid(&[0.0, 1.0]);
        let all_high = correlate_occurrences(&d, &pts(&[1, 1, 1]));
        assert!(all_high.pct_points.iter().all(|&p| p == 100.0));
        assert_abs_diff_eq!(all_high.auc, 1.0, epsilon = 1e-12);
        let all_low = correlate_occurrences(&d, &pts(&[0, 0]));
        assert_eq!(all_low.pct_points[0], 100.0);
        assert!(all_low.pct_points[1..].iter().all(|&p| p == 0.0));
        let outside = correlate_occurrences(&d, &pts(&[1, 7]));
        assert_eq!(outside.n_outside, 1);
        assert_eq!(outside.pct_points[0], 50.0);
    }

    fn raster(bands: Vec<Vec<f64>>, w: usize, h: usize) -> MultibandRaster {
        MultibandRaster::from_planes(w, h, bands, GeoRef::default()).unwrap()
    }

    #[test]
    fn identical_bands_score_three() {
        let b: Vec<f64> = (0..100).map(|i| (i * 7 % 13) as f64).collect();
        let r = raster(vec![b.clone(), b.clone(), b], 10, 10);
        assert_abs_diff_eq!(rank_fcc_triplets(&r).unwrap().triplets[0].score, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn constant_band_is_redundant() {
        let b: Vec<f64> = (0..100).map(|i| (i * 7 % 13) as f64).collect();
        let c: Vec<f64> = (0..100).map(|i| (i * 3 % 11) as f64).collect();
        let r = raster(vec![b, c, vec![4.0; 100]], 10, 10);
        let rank = rank_fcc_triplets(&r).unwrap();
        assert_eq!(rank.constant_bands, vec![2]);
        assert!(rank.triplets[0].score >= 2.0);
    }

    #[test]
    fn needs_three_bands() {
        let r = raster(vec![vec![1.0; 4], vec![2.0; 4]], 2, 2);
        assert!(rank_fcc_triplets(&r).is_err());
    }
}
