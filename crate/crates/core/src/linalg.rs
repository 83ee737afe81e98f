//! Small dense linear algebra: square matrices and a cyclic Jacobi eigen-solver.

use crate::error::{Error, Result};

/// Dense row-major `n × n` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("matrix rows must be square".into()));
        }
        Ok(Matrix {
            n,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn from_vec(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {n}x{n} matrix",
                data.len()
            )));
        }
        Ok(Matrix { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.n + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.n + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.n..(r + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n.max(1)).map(<[f64]>::to_vec).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let n = self.n;
        let mut t = Self::zeros(n);
        for r in 0..n {
            for c in 0..n {
                t.data[c * n + r] = self.data[r * n + c];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n, "matmul dimension mismatch");
        let n = self.n;
        let mut out = Self::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self.data[r * n + k];
                if a == 0.0 {
                    continue;
                }
                for c in 0..n {
                    out.data[r * n + c] += a * other.data[k * n + c];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn scaled(&self, s: f64) -> Matrix {
        Matrix {
            n: self.n,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn add_diagonal(&mut self, v: f64) {
        for i in 0..self.n {
            self.data[i * self.n + i] += v;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn off_diagonal_norm(&self) -> f64 {
        let mut s = 0.0;
        for r in 0..self.n {
            for c in 0..self.n {
                if r != c {
                    s += self.get(r, c).powi(2);
                }
            }
        }
        s.sqrt()
    }
}

/// Eigen-decomposition of a symmetric matrix. `vectors` holds one unit
/// eigenvector per row, matched to `values` (descending).
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
    pub sweeps: usize,
}

pub const MAX_JACOBI_SWEEPS: usize = 100;

/// Cyclic Jacobi rotation. Converges when the off-diagonal Frobenius norm
/// drops below `1e-12 · trace` (absolute diagonal sum for indefinite input).
///
/// Eigenvectors are sign-normalised so that each one's largest-magnitude
/// entry is positive.
pub fn symmetric_eigen(m: &Matrix) -> Result<SymmetricEigen> {
    let n = m.dim();
    if !m.is_finite() {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let mut a = m.clone();
    // symmetrize against round-off in the caller
    for r in 0..n {
        for c in r + 1..n {
            let v = 0.5 * (a.get(r, c) + a.get(c, r));
            a.set(r, c, v);
            a.set(c, r, v);
        }
    }
    let mut v = Matrix::identity(n);
    let scale = {
        let t = a.trace();
        if t > 0.0 {
            t
        } else {
            (0..n).map(|i| a.get(i, i).abs()).sum()
        }
    };
    let threshold = 1e-12 * scale;

    let mut sweeps = 0;
    loop {
        let off = a.off_diagonal_norm();
        if off == 0.0 || off < threshold {
            break;
        }
        if sweeps == MAX_JACOBI_SWEEPS {
            return Err(Error::NonConvergence { sweeps });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut a, &mut v, p, q, c, s);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(j, j).total_cmp(&a.get(i, i)).then(i.cmp(&j)));
    let values: Vec<f64> = order.iter().map(|&i| a.get(i, i)).collect();
    let mut vectors = Matrix::zeros(n);
    for (k, &i) in order.iter().enumerate() {
        // column i of v is the eigenvector
        let mut col: Vec<f64> = (0..n).map(|r| v.get(r, i)).collect();
        let lead = col
            .iter()
            .copied()
            .enumerate()
            .fold((0, 0.0f64), |best, (j, x)| if x.abs() > best.1.abs() { (j, x) } else { best });
        if lead.1 < 0.0 {
            col.iter_mut().for_each(|x| *x = -*x);
        }
        for (c, x) in col.into_iter().enumerate() {
            vectors.set(k, c, x);
        }
    }
    Ok(SymmetricEigen {
        values,
        vectors,
        sweeps,
    })
}

fn rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let n = a.dim();
    // A <- J^T A J with J the (p, q) Givens rotation
    for k in 0..n {
        let akp = a.get(k, p);
        let akq = a.get(k, q);
        a.set(k, p, c * akp - s * akq);
        a.set(k, q, s * akp + c * akq);
    }
    for k in 0..n {
        let apk = a.get(p, k);
        let aqk = a.get(q, k);
        a.set(p, k, c * apk - s * aqk);
        a.set(q, k, s * apk + c * aqk);
    }
    a.set(p, q, 0.0);
    a.set(q, p, 0.0);
    for k in 0..n {
        let vkp = v.get(k, p);
        let vkq = v.get(k, q);
        v.set(k, p, c * vkp - s * vkq);
        v.set(k, q, s * vkp + c * vkq);
    }
}

/// `M^{-1/2}` for a symmetric positive-definite matrix.
pub fn inverse_sqrt(m: &Matrix) -> Result<Matrix> {
    let e = symmetric_eigen(m)?;
    let n = m.dim();
    let lmax = e.values.first().copied().unwrap_or(0.0);
    if e.values.iter().any(|&l| l <= lmax * 1e-14 || l <= 0.0) {
        return Err(Error::InvalidInput("matrix is not positive definite".into()));
    }
    let mut out = Matrix::zeros(n);
    for (k, &l) in e.values.iter().enumerate() {
        let w = 1.0 / l.sqrt();
        let u = e.vectors.row(k);
        for r in 0..n {
            for c in 0..n {
                out.data[r * n + c] += w * u[r] * u[c];
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn diagonal_matrix_sorted() {
        let m = Matrix::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 3.0, 0.0], vec![0.0, 0.0, 2.0]]).unwrap();
        let e = symmetric_eigen(&m).unwrap();
        assert_eq!(e.values, vec![3.0, 2.0, 1.0]);
        assert_eq!(e.vectors.row(0), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn reconstructs_input() {
        let m = Matrix::from_rows(&[
            vec![4.0, 1.0, -2.0, 0.5],
            vec![1.0, 3.0, 0.0, 1.0],
            vec![-2.0, 0.0, 5.0, -1.0],
            vec![0.5, 1.0, -1.0, 2.0],
        ])
        .unwrap();
        let e = symmetric_eigen(&m).unwrap();
        let vt = e.vectors.transpose();
        let mut d = Matrix::zeros(4);
        for i in 0..4 {
            d.set(i, i, e.values[i]);
        }
        let back = vt.matmul(&d).matmul(&e.vectors);
        assert!(back.max_abs_diff(&m) < 1e-12);
        let orth = e.vectors.matmul(&vt);
        assert!(orth.max_abs_diff(&Matrix::identity(4)) < 1e-12);
        assert_abs_diff_eq!(e.values.iter().sum::<f64>(), m.trace(), epsilon = 1e-12);
    }

    #[test]
    fn sign_convention() {
        let m = Matrix::from_rows(&[vec![2.0, -1.0], vec![-1.0, 2.0]]).unwrap();
        let e = symmetric_eigen(&m).unwrap();
        for k in 0..2 {
            let row = e.vectors.row(k);
            let lead = row.iter().copied().fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
            assert!(lead > 0.0);
        }
    }

    #[test]
    fn inverse_sqrt_squares_to_inverse() {
        let m = Matrix::from_rows(&[vec![4.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let r = inverse_sqrt(&m).unwrap();
        let prod = r.matmul(&r).matmul(&m);
        assert!(prod.max_abs_diff(&Matrix::identity(2)) < 1e-12);
    }
}
