//! Symmetric FastICA with the `tanh` contrast.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{pca, DataMatrix, ProjectionKind, ProjectionMatrix};
use crate::error::{Error, Result};
use crate::linalg::{inverse_sqrt, Matrix};
use crate::par;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FastIcaParams {
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for FastIcaParams {
    fn default() -> Self {
        FastIcaParams {
            max_iter: 200,
            tol: 1e-4,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IcaResult {
    /// `W` such that `s = W (x - mean)`.
    pub unmixing: ProjectionMatrix,
    pub converged: bool,
    pub iterations: usize,
    /// Final value of `max_i |1 - |<w_new_i, w_old_i>||`.
    pub last_change: f64,
}

/// `W <- (W W^T)^{-1/2} W`
fn decorrelate(w: &Matrix) -> Result<Matrix> {
    let wwt = w.matmul(&w.transpose());
    Ok(inverse_sqrt(&wwt)?.matmul(w))
}

/// Estimates an unmixing matrix. Data are whitened through PCA first.
///
/// Non-convergence is not an error: the iterate with the smallest change is
/// returned with `converged = false`.
pub fn fast_ica(d: &DataMatrix, params: &FastIcaParams) -> Result<IcaResult> {
    if params.max_iter < 1 {
        return Err(Error::Validation("FastICA max_iter must be at least 1".into()));
    }
    if !(params.tol > 0.0) {
        return Err(Error::Validation("FastICA tol must be positive".into()));
    }
    let white = pca(d)?;
    let m = d.n_vars();
    let n = d.n_samples();
    let lmax = white.eigenvalues[0];
    if white.eigenvalues.iter().any(|&l| l <= 1e-12 * lmax) {
        return Err(Error::InvalidInput(
            "data are rank-deficient; cannot whiten for ICA".into(),
        ));
    }
    // K = D^{-1/2} E^T, rows scaled eigenvectors
    let mut k = white.projection.matrix.clone();
    for (r, &l) in white.eigenvalues.iter().enumerate() {
        let s = 1.0 / l.sqrt();
        for c in 0..m {
            k.set(r, c, k.get(r, c) * s);
        }
    }
    let z: Vec<f64> = (0..n).flat_map(|i| k.mul_vec(d.row(i))).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let init: Vec<f64> = (0..m * m).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut w = decorrelate(&Matrix::from_vec(m, init)?)?;

    let mut best = (w.clone(), f64::INFINITY);
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=params.max_iter {
        iterations = it;
        let w_new = decorrelate(&fixed_point_step(&z, n, m, &w))?;
        let change = (0..m)
            .map(|i| {
                let dot: f64 = w_new.row(i).iter().zip(w.row(i)).map(|(a, b)| a * b).sum();
                (1.0 - dot.abs()).abs()
            })
            .fold(0.0, f64::max);
        w = w_new;
        if change < best.1 {
            best = (w.clone(), change);
        }
        if change < params.tol {
            converged = true;
            break;
        }
    }
    let (w_final, last_change) = if converged { (w, best.1) } else { best };
    Ok(IcaResult {
        unmixing: ProjectionMatrix {
            matrix: w_final.matmul(&k),
            kind: ProjectionKind::IcaUnmixing,
        },
        converged,
        iterations,
        last_change,
    })
}

/// One parallel fixed-point update: `w_i <- E[z g(w_i.z)] - E[g'(w_i.z)] w_i`.
fn fixed_point_step(z: &[f64], n: usize, m: usize, w: &Matrix) -> Matrix {
    // per block: m*m sums of z_j g(y_i), then m sums of g'(y_i)
    let parts = par::block_partials(n, |range| {
        let mut acc = vec![0.0; m * m + m];
        let mut y = vec![0.0; m];
        for s in range {
            let zs = &z[s * m..(s + 1) * m];
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = w.row(i).iter().zip(zs).map(|(a, b)| a * b).sum();
            }
            for i in 0..m {
                let g = y[i].tanh();
                for j in 0..m {
                    acc[i * m + j] += zs[j] * g;
                }
                acc[m * m + i] += 1.0 - g * g;
            }
        }
        acc
    });
    let total = par::pairwise_reduce(parts, |mut a, b| {
        a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
        a
    })
    .unwrap_or_else(|| vec![0.0; m * m + m]);
    let inv_n = 1.0 / n as f64;
    let mut out = Matrix::zeros(m);
    for i in 0..m {
        let gp = total[m * m + i] * inv_n;
        for j in 0..m {
            out.set(i, j, total[i * m + j] * inv_n - gp * w.get(i, j));
        }
    }
    out
}

/// Sample excess kurtosis `E[(x-m)^4] / E[(x-m)^2]^2 - 3`; 0 for constant input.
pub fn excess_kurtosis(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n == 0 {
        return 0.0;
    }
    let mean = par::det_sum(n, |i| xs[i]) / n as f64;
    let m2 = par::det_sum(n, |i| (xs[i] - mean).powi(2)) / n as f64;
    if m2 <= 0.0 {
        return 0.0;
    }
    let m4 = par::det_sum(n, |i| (xs[i] - mean).powi(4)) / n as f64;
    m4 / (m2 * m2) - 3.0
}
