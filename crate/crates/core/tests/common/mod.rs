//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use lineament_core::raster::{GeoRef, MultibandRaster};

/// Naive two-pass sample covariance (divisor n - 1) of the band planes.
pub fn naive_covariance(planes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let b = planes.len();
    let n = planes[0].len() as f64;
    let means: Vec<f64> = planes.iter().map(|p| p.iter().sum::<f64>() / n).collect();
    let mut cov = vec![vec![0.0; b]; b];
    for i in 0..b {
        for j in 0..b {
            cov[i][j] = planes[i]
                .iter()
                .zip(&planes[j])
                .map(|(x, y)| (x - means[i]) * (y - means[j]))
                .sum::<f64>()
                / (n - 1.0);
        }
    }
    cov
}

fn det3(a: &[Vec<f64>]) -> f64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

/// Characteristic polynomial det(A - lambda I) and its derivative.
fn char_poly(a: &[Vec<f64>], l: f64) -> (f64, f64) {
    let n = a.len();
    let shifted = |x: f64| -> f64 {
        let m: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| a[i][j] - if i == j { x } else { 0.0 }).collect())
            .collect();
        match n {
            1 => m[0][0],
            2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
            3 => det3(&m),
            _ => unreachable!("oracle covers n <= 3"),
        }
    };
    let h = 1e-6 * (1.0 + l.abs());
    (shifted(l), (shifted(l + h) - shifted(l - h)) / (2.0 * h))
}

/// Eigenvalues of a symmetric matrix of order <= 3, descending: closed-form
/// roots of the characteristic polynomial polished by Newton steps.
pub fn symmetric_eigenvalues(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let mut roots = match n {
        1 => vec![a[0][0]],
        2 => {
            let tr = a[0][0] + a[1][1];
            let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
            let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
            vec![tr / 2.0 + disc, tr / 2.0 - disc]
        }
        3 => {
            let p1 = a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2);
            let q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
            let p2 = (a[0][0] - q).powi(2) + (a[1][1] - q).powi(2) + (a[2][2] - q).powi(2) + 2.0 * p1;
            if p2 == 0.0 {
                vec![q; 3]
            } else {
                let p = (p2 / 6.0).sqrt();
                let b: Vec<Vec<f64>> = (0..3)
                    .map(|i| (0..3).map(|j| (a[i][j] - if i == j { q } else { 0.0 }) / p).collect())
                    .collect();
                let r = (det3(&b) / 2.0).clamp(-1.0, 1.0);
                let phi = r.acos() / 3.0;
                let e1 = q + 2.0 * p * phi.cos();
                let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
                vec![e1, 3.0 * q - e1 - e3, e3]
            }
        }
        _ => panic!("oracle covers n <= 3"),
    };
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let (f, df) = char_poly(a, *r);
            if df.abs() > 1e-300 && f != 0.0 {
                let step = f / df;
                if step.is_finite() && step.abs() < 1e-3 * (1.0 + r.abs()) {
                    *r -= step;
                }
            }
        }
    }
    roots.sort_by(|x, y| y.total_cmp(x));
    roots
}

/// Follows ESRI D8 codes from every valid cell and counts visits.
pub fn brute_force_accumulation(dirs: &[u8], valid: &[bool], w: usize, h: usize) -> Vec<u64> {
    let step = |code: u8| -> Option<(isize, isize)> {
        Some(match code {
            1 => (0, 1),
            2 => (1, 1),
            4 => (1, 0),
            8 => (1, -1),
            16 => (0, -1),
            32 => (-1, -1),
            64 => (-1, 0),
            128 => (-1, 1),
            _ => return None,
        })
    };
    let mut acc = vec![0u64; w * h];
    for start in 0..w * h {
        if !valid[start] {
            continue;
        }
        let (mut r, mut c) = ((start / w) as isize, (start % w) as isize);
        let mut steps = 0;
        loop {
            let i = r as usize * w + c as usize;
            acc[i] += 1;
            let Some((dr, dc)) = step(dirs[i]) else { break };
            let (nr, nc) = (r + dr, c + dc);
            if nr < 0 || nc < 0 || nr as usize >= h || nc as usize >= w || !valid[nr as usize * w + nc as usize] {
                break;
            }
            r = nr;
            c = nc;
            steps += 1;
            assert!(steps <= w * h, "flow directions contain a cycle");
        }
    }
    acc
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

pub fn raster(w: usize, h: usize, planes: Vec<Vec<f64>>) -> MultibandRaster {
    MultibandRaster::from_planes(w, h, planes, GeoRef::default()).unwrap()
}

/// Runs `f` on a single worker thread when the parallel backend is enabled.
pub fn single_threaded<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        f()
    }
}

/// Runs `f` on a pool of `n` workers when the parallel backend is enabled.
pub fn with_threads<T: Send>(n: usize, f: impl FnOnce() -> T + Send) -> T {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap().install(f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = n;
        f()
    }
}
