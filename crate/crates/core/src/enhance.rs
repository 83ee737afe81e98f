//! Noise suppression (Lee, median) and 3×3 edge-enhancement kernels.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::raster::GrayImage;

/// Azimuths of the four directional kernels, in degrees.
pub const DIRECTIONAL_AZIMUTHS: [u32; 4] = [0, 45, 90, 135];

/// 3×3 kernel, row-major, applied as a correlation (no flip).
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel3x3 {
    pub coeffs: [f64; 9],
    pub name: String,
}

impl Kernel3x3 {
    pub fn new(coeffs: [f64; 9], name: impl Into<String>) -> Self {
        Kernel3x3 {
            coeffs,
            name: name.into(),
        }
    }

    pub fn sum(&self) -> f64 {
        self.coeffs.iter().sum()
    }

    pub fn transpose(&self) -> Kernel3x3 {
        let k = &self.coeffs;
        Kernel3x3::new(
            [k[0], k[3], k[6], k[1], k[4], k[7], k[2], k[5], k[8]],
            format!("{}^T", self.name),
        )
    }
}

/// Prewitt compass kernel enhancing edges that strike along `azimuth`
/// (0: N–S, 45: NE–SW, 90: E–W, 135: NW–SE).
pub fn directional_kernel(azimuth: u32) -> Result<Kernel3x3> {
    let coeffs = match azimuth {
        0 => [-1.0, 0.0, 1.0, -1.0, 0.0, 1.0, -1.0, 0.0, 1.0],
        45 => [0.0, 1.0, 1.0, -1.0, 0.0, 1.0, -1.0, -1.0, 0.0],
        90 => [-1.0, -1.0, -1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0],
        135 => [1.0, 1.0, 0.0, 1.0, 0.0, -1.0, 0.0, -1.0, -1.0],
        other => {
            return Err(Error::Validation(format!(
                "unsupported directional azimuth {other}; expected one of 0, 45, 90, 135"
            )))
        }
    };
    Ok(Kernel3x3::new(coeffs, format!("directional_{azimuth}")))
}

pub fn laplacian_kernel() -> Kernel3x3 {
    Kernel3x3::new([0.0, -1.0, 0.0, -1.0, 4.0, -1.0, 0.0, -1.0, 0.0], "laplacian")
}

/// Correlates `img` with `k`. Out-of-image taps replicate the nearest edge
/// pixel; masked taps contribute 0; masked centers stay masked.
pub fn convolve(img: &GrayImage, k: &Kernel3x3) -> GrayImage {
    let (w, h) = (img.width(), img.height());
    let mut out = vec![0.0; w * h];
    let data = img.data();
    let valid = img.valid_mask();
    par::fill_rows(&mut out, w, |r, row| {
        for (c, o) in row.iter_mut().enumerate() {
            if !valid[r * w + c] {
                continue;
            }
            let mut acc = 0.0;
            for dr in 0..3 {
                let rr = (r + dr).saturating_sub(1).min(h - 1);
                for dc in 0..3 {
                    let cc = (c + dc).saturating_sub(1).min(w - 1);
                    let i = rr * w + cc;
                    if valid[i] {
                        acc += k.coeffs[dr * 3 + dc] * data[i];
                    }
                }
            }
            *o = acc;
        }
    });
    img.with_data(out)
}

fn check_window(window: usize, allowed: &[usize], what: &str) -> Result<()> {
    if allowed.contains(&window) {
        Ok(())
    } else {
        Err(Error::Validation(format!(
            "{what} window must be one of {allowed:?}, got {window}"
        )))
    }
}

/// Valid values in the window around `(r, c)`, truncated at the borders.
fn window_values(img: &GrayImage, r: usize, c: usize, half: usize, buf: &mut Vec<f64>) {
    buf.clear();
    let (w, h) = (img.width(), img.height());
    let (r0, r1) = (r.saturating_sub(half), (r + half).min(h - 1));
    let (c0, c1) = (c.saturating_sub(half), (c + half).min(w - 1));
    let data = img.data();
    let valid = img.valid_mask();
    for rr in r0..=r1 {
        for cc in c0..=c1 {
            let i = rr * w + cc;
            if valid[i] {
                buf.push(data[i]);
            }
        }
    }
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    (m, v)
}

/// Noise level for the Lee filter: root of the mean local variance over the
/// flattest tenth of 3×3 windows.
pub fn estimate_lee_sigma(img: &GrayImage) -> f64 {
    let (w, h) = (img.width(), img.height());
    let vars: Vec<Vec<f64>> = par::map_range(h, |r| {
        let mut buf = Vec::with_capacity(9);
        (0..w)
            .filter(|&c| img.is_valid(r, c))
            .filter_map(|c| {
                window_values(img, r, c, 1, &mut buf);
                (buf.len() >= 2).then(|| mean_var(&buf).1)
            })
            .collect()
    });
    let mut vars: Vec<f64> = vars.into_iter().flatten().collect();
    if vars.is_empty() {
        return 0.0;
    }
    vars.sort_by(f64::total_cmp);
    let take = (vars.len() / 10).max(1);
    (vars[..take].iter().sum::<f64>() / take as f64).sqrt()
}

/// Additive-noise Lee filter: `m + k (x - m)` with `k = v / (v + sigma²)`.
///
/// `sigma_noise = None` estimates it with [`estimate_lee_sigma`].
pub fn lee_filter(img: &GrayImage, window: usize, sigma_noise: Option<f64>) -> Result<GrayImage> {
    check_window(window, &[3, 5, 7], "Lee")?;
    let sigma = match sigma_noise {
        Some(s) if s >= 0.0 && s.is_finite() => s,
        Some(s) => return Err(Error::Validation(format!("Lee sigma_noise must be >= 0, got {s}"))),
        None => estimate_lee_sigma(img),
    };
    let s2 = sigma * sigma;
    let half = window / 2;
    let (w, _) = (img.width(), img.height());
    let mut out = vec![0.0; img.data().len()];
    par::fill_rows(&mut out, w, |r, row| {
        let mut buf = Vec::with_capacity(window * window);
        for (c, o) in row.iter_mut().enumerate() {
            if !img.is_valid(r, c) {
                continue;
            }
            let x = img.get(r, c);
            window_values(img, r, c, half, &mut buf);
            let (m, v) = mean_var(&buf);
            let k = if v + s2 > 0.0 { v / (v + s2) } else { 1.0 };
            // written so k = 1 returns x exactly
            *o = x - (1.0 - k) * (x - m);
        }
    });
    Ok(img.with_data(out))
}

/// Median over valid pixels in the window; even counts average the middle pair.
pub fn median_filter(img: &GrayImage, window: usize) -> Result<GrayImage> {
    check_window(window, &[3, 5], "median")?;
    let half = window / 2;
    let w = img.width();
    let mut out = vec![0.0; img.data().len()];
    par::fill_rows(&mut out, w, |r, row| {
        let mut buf = Vec::with_capacity(window * window);
        for (c, o) in row.iter_mut().enumerate() {
            if !img.is_valid(r, c) {
                continue;
            }
            window_values(img, r, c, half, &mut buf);
            buf.sort_by(f64::total_cmp);
            let n = buf.len();
            *o = if n % 2 == 1 {
                buf[n / 2]
            } else {
                0.5 * (buf[n / 2 - 1] + buf[n / 2])
            };
        }
    });
    Ok(img.with_data(out))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnhanceMode {
    Directional,
    Laplacian,
}

impl fmt::Display for EnhanceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnhanceMode::Directional => "directional",
            EnhanceMode::Laplacian => "laplacian",
        })
    }
}

impl FromStr for EnhanceMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "directional" => Ok(EnhanceMode::Directional),
            "laplacian" => Ok(EnhanceMode::Laplacian),
            other => Err(Error::Validation(format!("unknown enhance mode `{other}`"))),
        }
    }
}

/// Settings for the Lee → median noise chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenoiseParams {
    pub lee_window: usize,
    pub lee_sigma: Option<f64>,
    pub median_window: usize,
}

impl Default for DenoiseParams {
    fn default() -> Self {
        DenoiseParams {
            lee_window: 3,
            lee_sigma: None,
            median_window: 3,
        }
    }
}

pub fn denoise(img: &GrayImage, p: &DenoiseParams) -> Result<GrayImage> {
    let lee = lee_filter(img, p.lee_window, p.lee_sigma)?;
    median_filter(&lee, p.median_window)
}

/// Edge-enhanced images, each stretched to `[0, 255]`, tagged by kernel name.
/// Directional mode yields four images, Laplacian mode one.
pub fn enhance(img: &GrayImage, mode: EnhanceMode) -> Vec<(String, GrayImage)> {
    let kernels: Vec<Kernel3x3> = match mode {
        EnhanceMode::Directional => DIRECTIONAL_AZIMUTHS
            .iter()
            .map(|&az| directional_kernel(az).expect("fixed azimuth set"))
            .collect(),
        EnhanceMode::Laplacian => vec![laplacian_kernel()],
    };
    kernels
        .into_iter()
        .map(|k| {
            let out = convolve(img, &k).rescaled_to_byte_range();
            (k.name, out)
        })
        .collect()
}
