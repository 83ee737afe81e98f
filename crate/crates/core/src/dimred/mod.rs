//! Dimension reduction of multiband rasters: PCA, FastICA and MNF.
//!
//! Each method fits a square projection on the valid pixels of the raster and
//! produces a [`ComponentStack`] ordered by a method-specific score.

mod ica;
mod mnf;
mod pca;

pub use ica::{excess_kurtosis, fast_ica, FastIcaParams, IcaResult};
pub use mnf::{estimate_noise_covariance, mnf, MnfResult};
pub use pca::{pca, PcaResult};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::par;
use crate::raster::{GrayImage, MultibandRaster};

/// Valid pixels as rows, bands as columns, column-centered.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    n_samples: usize,
    n_vars: usize,
    values: Vec<f64>,
    means: Vec<f64>,
}

impl DataMatrix {
    /// Centers `values` (row-major, `n_vars` columns) and records the means.
    pub fn from_rows(n_vars: usize, mut values: Vec<f64>) -> Result<Self> {
        if n_vars == 0 || !values.len().is_multiple_of(n_vars) {
            return Err(Error::DimensionMismatch(format!(
                "{} values do not split into {n_vars} columns",
                values.len()
            )));
        }
        let n_samples = values.len() / n_vars;
        if n_samples == 0 {
            return Err(Error::InvalidInput("no valid samples".into()));
        }
        let means: Vec<f64> = (0..n_vars)
            .map(|j| par::det_sum(n_samples, |i| values[i * n_vars + j]) / n_samples as f64)
            .collect();
        for row in values.chunks_mut(n_vars) {
            for (x, m) in row.iter_mut().zip(&means) {
                *x -= m;
            }
        }
        Ok(DataMatrix {
            n_samples,
            n_vars,
            values,
            means,
        })
    }

    /// Fitting a transform needs more samples than variables.
    pub(crate) fn require_fit_size(&self) -> Result<()> {
        if self.n_samples <= self.n_vars {
            return Err(Error::InvalidInput(format!(
                "too few valid pixels: {} samples for {} variables",
                self.n_samples, self.n_vars
            )));
        }
        Ok(())
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }
    pub fn n_vars(&self) -> usize {
        self.n_vars
    }
    pub fn means(&self) -> &[f64] {
        &self.means
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_vars..(i + 1) * self.n_vars]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_samples).map(|i| self.values[i * self.n_vars + j]).collect()
    }

    /// Sample covariance (divisor `n - 1`), accumulated in fixed blocks.
    pub fn covariance(&self) -> Matrix {
        let m = self.n_vars;
        let parts = par::block_partials(self.n_samples, |range| {
            let mut acc = vec![0.0; m * m];
            for i in range {
                let row = self.row(i);
                for a in 0..m {
                    for b in a..m {
                        acc[a * m + b] += row[a] * row[b];
                    }
                }
            }
            acc
        });
        let total = par::pairwise_reduce(parts, |mut x, y| {
            x.iter_mut().zip(&y).for_each(|(a, b)| *a += b);
            x
        })
        .unwrap_or_else(|| vec![0.0; m * m]);
        let denom = (self.n_samples - 1) as f64;
        let mut cov = Matrix::zeros(m);
        for a in 0..m {
            for b in a..m {
                let v = total[a * m + b] / denom;
                cov.set(a, b, v);
                cov.set(b, a, v);
            }
        }
        cov
    }
}

/// Flattens the valid pixels of `r` into a centered data matrix.
pub fn to_data_matrix(r: &MultibandRaster) -> Result<DataMatrix> {
    let n = r.pixel_count();
    let b = r.bands();
    let valid: Vec<usize> = (0..n).filter(|&i| r.is_valid(i)).collect();
    if valid.is_empty() {
        return Err(Error::InvalidInput("no valid samples".into()));
    }
    let mut values = Vec::with_capacity(valid.len() * b);
    for &i in &valid {
        for band in 0..b {
            values.push(r.band(band)[i]);
        }
    }
    DataMatrix::from_rows(b, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionKind {
    Pca,
    IcaUnmixing,
    Mnf,
}

/// Square projection applied to centered band vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMatrix {
    pub matrix: Matrix,
    pub kind: ProjectionKind,
}

impl ProjectionMatrix {
    pub fn n_vars(&self) -> usize {
        self.matrix.dim()
    }

    /// Keeps the rows in `order`.
    fn reordered(&self, order: &[usize]) -> ProjectionMatrix {
        let n = self.n_vars();
        let mut data = Vec::with_capacity(n * n);
        for &k in order {
            data.extend_from_slice(self.matrix.row(k));
        }
        ProjectionMatrix {
            matrix: Matrix::from_vec(n, data).expect("square reorder"),
            kind: self.kind,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreKind {
    EigenvalueVariance,
    SnrEigenvalue,
    AbsKurtosis,
}

/// Component planes with one ranking score each, highest score first.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentStack {
    pub components: MultibandRaster,
    pub scores: Vec<f64>,
    pub score_kind: ScoreKind,
}

impl ComponentStack {
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// `z = P (x - mean)` for every valid pixel; masked pixels stay masked.
pub fn transform(r: &MultibandRaster, p: &ProjectionMatrix, means: &[f64]) -> Result<MultibandRaster> {
    let b = r.bands();
    if p.n_vars() != b || means.len() != b {
        return Err(Error::DimensionMismatch(format!(
            "projection is {0}x{0} with {1} means, raster has {b} bands",
            p.n_vars(),
            means.len()
        )));
    }
    let (w, h) = (r.width(), r.height());
    let n = w * h;
    let mut out = vec![0.0; n * b];
    // fill pixel-major rows, then transpose to band-sequential
    let mut pixel_major = vec![0.0; n * b];
    par::fill_rows(&mut pixel_major, w * b, |row, buf| {
        let mut x = vec![0.0; b];
        for c in 0..w {
            let i = row * w + c;
            if !r.is_valid(i) {
                continue;
            }
            for (j, xj) in x.iter_mut().enumerate() {
                *xj = r.band(j)[i] - means[j];
            }
            for k in 0..b {
                buf[c * b + k] = p.matrix.row(k).iter().zip(&x).map(|(a, v)| a * v).sum();
            }
        }
    });
    for i in 0..n {
        for k in 0..b {
            out[k * n + i] = pixel_major[i * b + k];
        }
    }
    MultibandRaster::new(w, h, b, out, r.valid_mask().to_vec(), r.georef().clone())
}

/// Projects every row of a data matrix: `z_i = P x_i`.
pub fn project(d: &DataMatrix, p: &ProjectionMatrix) -> Result<Vec<Vec<f64>>> {
    let m = d.n_vars();
    if p.n_vars() != m {
        return Err(Error::DimensionMismatch(format!(
            "projection is {0}x{0}, data has {m} variables",
            p.n_vars()
        )));
    }
    Ok((0..m)
        .map(|k| {
            let w = p.matrix.row(k);
            par::map_range(d.n_samples(), |i| d.row(i).iter().zip(w).map(|(a, b)| a * b).sum())
        })
        .collect())
}

/// Picks one component (default: the highest-scoring) and stretches it to `[0, 255]`.
pub fn select_component(cs: &ComponentStack, index: Option<usize>) -> Result<GrayImage> {
    if cs.is_empty() {
        return Err(Error::InvalidInput("empty component stack".into()));
    }
    let k = index.unwrap_or(0);
    if k >= cs.len() {
        return Err(Error::InvalidInput(format!(
            "component index {k} out of range (stack has {})",
            cs.len()
        )));
    }
    Ok(cs.components.band_image(k).rescaled_to_byte_range())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DimredMethod {
    Pca,
    Ica,
    Mnf,
}

impl fmt::Display for DimredMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DimredMethod::Pca => "pca",
            DimredMethod::Ica => "ica",
            DimredMethod::Mnf => "mnf",
        })
    }
}

impl FromStr for DimredMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pca" => Ok(DimredMethod::Pca),
            "ica" | "fastica" => Ok(DimredMethod::Ica),
            "mnf" => Ok(DimredMethod::Mnf),
            other => Err(Error::Validation(format!("unknown dimred method `{other}`"))),
        }
    }
}

/// Serializable summary of a fitted transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformReport {
    pub method: DimredMethod,
    pub score_kind: ScoreKind,
    pub scores: Vec<f64>,
    pub means: Vec<f64>,
    pub projection: Vec<Vec<f64>>,
    pub converged: bool,
    pub iterations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_condition: Option<f64>,
}

/// Fits `method` on `r` and returns the ranked component stack.
pub fn reduce(
    r: &MultibandRaster,
    method: DimredMethod,
    ica_params: &FastIcaParams,
) -> Result<(ComponentStack, TransformReport)> {
    match method {
        DimredMethod::Pca => {
            let d = to_data_matrix(r)?;
            let fit = pca(&d)?;
            let components = transform(r, &fit.projection, d.means())?;
            let report = TransformReport {
                method,
                score_kind: ScoreKind::EigenvalueVariance,
                scores: fit.eigenvalues.clone(),
                means: d.means().to_vec(),
                projection: fit.projection.matrix.rows(),
                converged: true,
                iterations: fit.sweeps,
                noise_condition: None,
            };
            let stack = ComponentStack {
                components,
                scores: fit.eigenvalues,
                score_kind: ScoreKind::EigenvalueVariance,
            };
            Ok((stack, report))
        }
        DimredMethod::Ica => {
            let d = to_data_matrix(r)?;
            let fit = fast_ica(&d, ica_params)?;
            let sources = project(&d, &fit.unmixing)?;
            let kurt: Vec<f64> = sources.iter().map(|s| excess_kurtosis(s).abs()).collect();
            let mut order: Vec<usize> = (0..kurt.len()).collect();
            order.sort_by(|&a, &b| kurt[b].total_cmp(&kurt[a]).then(a.cmp(&b)));
            let unmixing = fit.unmixing.reordered(&order);
            let scores: Vec<f64> = order.iter().map(|&k| kurt[k]).collect();
            let components = transform(r, &unmixing, d.means())?;
            let report = TransformReport {
                method,
                score_kind: ScoreKind::AbsKurtosis,
                scores: scores.clone(),
                means: d.means().to_vec(),
                projection: unmixing.matrix.rows(),
                converged: fit.converged,
                iterations: fit.iterations,
                noise_condition: None,
            };
            let stack = ComponentStack {
                components,
                scores,
                score_kind: ScoreKind::AbsKurtosis,
            };
            Ok((stack, report))
        }
        DimredMethod::Mnf => {
            let fit = mnf(r)?;
            let report = TransformReport {
                method,
                score_kind: ScoreKind::SnrEigenvalue,
                scores: fit.stack.scores.clone(),
                means: fit.means.clone(),
                projection: fit.projection.matrix.rows(),
                converged: true,
                iterations: fit.sweeps,
                noise_condition: Some(fit.noise_condition),
            };
            Ok((fit.stack, report))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::GeoRef;
    use rand::{Rng, SeedableRng};

    fn raster(width: usize, height: usize, planes: Vec<Vec<f64>>) -> MultibandRaster {
        MultibandRaster::from_planes(width, height, planes, GeoRef::default()).unwrap()
    }

    #[test]
    fn centering_two_pixels() {
        let r = raster(2, 1, vec![vec![1.0, 3.0], vec![2.0, 4.0]]);
        let d = to_data_matrix(&r).unwrap();
        assert_eq!(d.means(), &[2.0, 3.0]);
        assert_eq!(d.row(0), &[-1.0, -1.0]);
        assert_eq!(d.row(1), &[1.0, 1.0]);
        // two samples cannot support a 2-variable fit
        let err = pca(&d).unwrap_err();
        assert!(err.to_string().contains("too few valid pixels"), "{err}");
    }

    #[test]
    fn all_masked_is_an_error() {
        let r = MultibandRaster::new(2, 2, 1, vec![0.0; 4], vec![false; 4], GeoRef::default()).unwrap();
        let err = to_data_matrix(&r).unwrap_err();
        assert!(err.to_string().contains("no valid samples"));
    }

    #[test]
    fn random_columns_have_zero_mean() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let vals: Vec<f64> = (0..3000).map(|_| rng.gen_range(-50.0..150.0)).collect();
        let d = DataMatrix::from_rows(3, vals).unwrap();
        for j in 0..3 {
            let m: f64 = d.column(j).iter().sum::<f64>() / d.n_samples() as f64;
            assert!(m.abs() < 1e-9);
        }
    }

    #[test]
    fn identity_projection_returns_centered_bands() {
        let r = raster(3, 1, vec![vec![1.0, 2.0, 6.0], vec![0.0, 0.0, 3.0]]);
        let p = ProjectionMatrix {
            matrix: Matrix::identity(2),
            kind: ProjectionKind::Pca,
        };
        let out = transform(&r, &p, &[3.0, 1.0]).unwrap();
        assert_eq!(out.band(0), &[-2.0, -1.0, 3.0]);
        assert_eq!(out.band(1), &[-1.0, -1.0, 2.0]);
    }

    #[test]
    fn transform_dimension_mismatch() {
        let r = raster(3, 1, vec![vec![1.0, 2.0, 6.0]]);
        let p = ProjectionMatrix {
            matrix: Matrix::identity(2),
            kind: ProjectionKind::Pca,
        };
        assert!(matches!(transform(&r, &p, &[0.0, 0.0]), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn select_component_bounds_and_rescale() {
        let comps = raster(3, 1, vec![vec![-1.0, 0.0, 1.0], vec![5.0, 5.0, 5.0]]);
        let cs = ComponentStack {
            components: comps,
            scores: vec![2.0, 1.0],
            score_kind: ScoreKind::EigenvalueVariance,
        };
        let g = select_component(&cs, None).unwrap();
        assert_eq!(g.data(), &[0.0, 127.5, 255.0]);
        let flat = select_component(&cs, Some(1)).unwrap();
        assert_eq!(flat.data(), &[0.0, 0.0, 0.0]);
        assert!(select_component(&cs, Some(2)).is_err());
    }

    #[test]
    fn masked_pixels_propagate() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let n = 64;
        let planes: Vec<Vec<f64>> = (0..3).map(|_| (0..n).map(|_| rng.gen::<f64>()).collect()).collect();
        let mut valid = vec![true; n];
        valid[5] = false;
        valid[40] = false;
        let r = MultibandRaster::new(8, 8, 3, planes.concat(), valid.clone(), GeoRef::default()).unwrap();
        for method in [DimredMethod::Pca, DimredMethod::Ica, DimredMethod::Mnf] {
            let (cs, _) = reduce(&r, method, &FastIcaParams::default()).unwrap();
            assert_eq!(cs.components.valid_mask(), valid.as_slice(), "{method}");
        }
    }
}
