use super::{DataMatrix, ProjectionKind, ProjectionMatrix};
use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;

#[derive(Debug, Clone)]
pub struct PcaResult {
    /// Rows are unit eigenvectors of the sample covariance.
    pub projection: ProjectionMatrix,
    /// Descending; clamped at zero.
    pub eigenvalues: Vec<f64>,
    pub sweeps: usize,
}

pub fn pca(d: &DataMatrix) -> Result<PcaResult> {
    d.require_fit_size()?;
    let cov = d.covariance();
    if !cov.is_finite() {
        return Err(Error::InvalidInput("covariance matrix is not finite".into()));
    }
    let eig = symmetric_eigen(&cov)?;
    Ok(PcaResult {
        projection: ProjectionMatrix {
            matrix: eig.vectors,
            kind: ProjectionKind::Pca,
        },
        eigenvalues: eig.values.into_iter().map(|l| l.max(0.0)).collect(),
        sweeps: eig.sweeps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dimred::project;
    use crate::linalg::Matrix;
    use rand::{Rng, SeedableRng};
    use rand_distr::StandardNormal;

    fn sample_variance(xs: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
    }

    #[test]
    fn perfectly_correlated_bands() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let mut vals = Vec::new();
        for _ in 0..500 {
            let a: f64 = rng.gen_range(0.0..10.0);
            vals.extend([a, 2.0 * a]);
        }
        let d = DataMatrix::from_rows(2, vals).unwrap();
        let fit = pca(&d).unwrap();
        assert!(fit.eigenvalues[1] <= 1e-9, "{:?}", fit.eigenvalues);
        let v = fit.projection.matrix.row(0);
        let s5 = 5f64.sqrt();
        assert!((v[0] - 1.0 / s5).abs() < 1e-9 && (v[1] - 2.0 / s5).abs() < 1e-9, "{v:?}");
    }

    #[test]
    fn isotropic_data_gives_orthonormal_projection() {
        // four points on the axes: covariance is a multiple of the identity
        let d = DataMatrix::from_rows(2, vec![1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0]).unwrap();
        let fit = pca(&d).unwrap();
        assert!((fit.eigenvalues[0] - fit.eigenvalues[1]).abs() < 1e-12);
        let p = &fit.projection.matrix;
        assert!(p.transpose().matmul(p).max_abs_diff(&Matrix::identity(2)) < 1e-8);
    }

    #[test]
    fn trace_variance_and_decorrelation() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut vals = Vec::new();
        for _ in 0..2000 {
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            let c: f64 = rng.sample(StandardNormal);
            vals.extend([a + 0.5 * b, 2.0 * b - c, 0.3 * a + c + 0.1 * b]);
        }
        let d = DataMatrix::from_rows(3, vals).unwrap();
        let fit = pca(&d).unwrap();
        let cov = d.covariance();
        let sum: f64 = fit.eigenvalues.iter().sum();
        assert!((sum - cov.trace()).abs() < 1e-8);
        assert!(fit.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        let z = project(&d, &fit.projection).unwrap();
        for (k, comp) in z.iter().enumerate() {
            assert!((sample_variance(comp) - fit.eigenvalues[k]).abs() < 1e-8);
        }
        for a in 0..3 {
            for b in a + 1..3 {
                let n = z[a].len() as f64;
                let cab: f64 = z[a].iter().zip(&z[b]).map(|(x, y)| x * y).sum::<f64>() / (n - 1.0);
                let rho = cab / (fit.eigenvalues[a] * fit.eigenvalues[b]).sqrt();
                assert!(rho.abs() < 1e-6, "rho({a},{b}) = {rho}");
            }
        }
    }
}
