//! Minimum noise fraction: noise whitening followed by PCA.

use super::{to_data_matrix, transform, ComponentStack, ProjectionKind, ProjectionMatrix, ScoreKind};
use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, Matrix};
use crate::raster::MultibandRaster;

/// Relative ridge added to the noise covariance before whitening.
pub const NOISE_RIDGE: f64 = 1e-10;
const MAX_NOISE_CONDITION: f64 = 1e14;

#[derive(Debug, Clone)]
pub struct MnfResult {
    pub stack: ComponentStack,
    pub projection: ProjectionMatrix,
    pub means: Vec<f64>,
    pub noise_condition: f64,
    pub sweeps: usize,
}

/// Shift-difference noise estimate: covariance of `x(r, c) - x(r, c + 1)` over
/// horizontally adjacent valid pairs, halved.
pub fn estimate_noise_covariance(r: &MultibandRaster) -> Result<Matrix> {
    let (w, h, b) = (r.width(), r.height(), r.bands());
    if w < 2 {
        return Err(Error::InvalidInput("noise estimation needs width >= 2".into()));
    }
    let pairs: Vec<usize> = (0..h)
        .flat_map(|row| (0..w - 1).map(move |c| row * w + c))
        .filter(|&i| r.is_valid(i) && r.is_valid(i + 1))
        .collect();
    if pairs.len() < 2 {
        return Err(Error::InvalidInput("no adjacent valid pixel pairs for noise estimation".into()));
    }
    let diffs: Vec<f64> = pairs
        .iter()
        .flat_map(|&i| (0..b).map(move |band| r.band(band)[i] - r.band(band)[i + 1]))
        .collect();
    let d = super::DataMatrix::from_rows(b, diffs)?;
    Ok(d.covariance().scaled(0.5))
}

/// Fits MNF on the valid pixels of `r`.
pub fn mnf(r: &MultibandRaster) -> Result<MnfResult> {
    let d = to_data_matrix(r)?;
    d.require_fit_size()?;
    let m = d.n_vars();
    let data_cov = d.covariance();
    let mut noise = estimate_noise_covariance(r)?;

    let mut ridge = NOISE_RIDGE * noise.trace();
    if ridge <= 0.0 {
        // noise-free input: fall back to a scale taken from the data
        ridge = NOISE_RIDGE * data_cov.trace();
    }
    if !(ridge > 0.0) {
        return Err(Error::SingularNoise {
            condition: f64::INFINITY,
        });
    }
    noise.add_diagonal(ridge);

    let ne = symmetric_eigen(&noise)?;
    let (nmax, nmin) = (ne.values[0], ne.values[m - 1]);
    let condition = if nmin > 0.0 { nmax / nmin } else { f64::INFINITY };
    if !(condition <= MAX_NOISE_CONDITION) {
        return Err(Error::SingularNoise { condition });
    }

    // F = Lambda^{-1/2} U^T  whitens the noise
    let mut f = ne.vectors.clone();
    for (k, &l) in ne.values.iter().enumerate() {
        let s = 1.0 / l.sqrt();
        for c in 0..m {
            f.set(k, c, f.get(k, c) * s);
        }
    }
    let whitened_cov = f.matmul(&data_cov).matmul(&f.transpose());
    let se = symmetric_eigen(&whitened_cov)?;
    let projection = ProjectionMatrix {
        matrix: se.vectors.matmul(&f),
        kind: ProjectionKind::Mnf,
    };
    let scores: Vec<f64> = se.values.iter().map(|&l| l.max(0.0)).collect();
    let components = transform(r, &projection, d.means())?;
    Ok(MnfResult {
        stack: ComponentStack {
            components,
            scores,
            score_kind: ScoreKind::SnrEigenvalue,
        },
        projection,
        means: d.means().to_vec(),
        noise_condition: condition,
        sweeps: ne.sweeps + se.sweeps,
    })
}
