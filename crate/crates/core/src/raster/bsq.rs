//! Raw band-sequential float32 rasters with a JSON sidecar header.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{GeoRef, MultibandRaster};
use crate::error::{Error, Result};

/// Contents of `<name>.hdr.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BsqHeader {
    pub width: usize,
    pub height: usize,
    pub bands: usize,
    pub origin_x: f64,
    pub origin_y: f64,
    pub pixel_size: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodata: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsg_hint: Option<String>,
}

/// `scene.bsq` -> `scene.hdr.json`
fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("hdr.json")
}

pub fn read_multiband(path: impl AsRef<Path>) -> Result<MultibandRaster> {
    let path = path.as_ref();
    let hdr_path = sidecar_path(path);
    let hdr_text = fs::read_to_string(&hdr_path).map_err(|e| Error::io(&hdr_path, e))?;
    let header: BsqHeader = serde_json::from_str(&hdr_text)?;
    let payload = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&header, &payload, path)
}

fn decode(header: &BsqHeader, payload: &[u8], path: &Path) -> Result<MultibandRaster> {
    if header.bands < 1 {
        return Err(Error::InvalidInput(format!(
            "{}: header declares {} bands",
            path.display(),
            header.bands
        )));
    }
    let n = header.width * header.height;
    let expected = (n * header.bands * 4) as u64;
    if payload.len() as u64 != expected {
        return Err(Error::PayloadSize {
            path: path.to_path_buf(),
            expected,
            actual: payload.len() as u64,
        });
    }
    let samples: Vec<f64> = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
        .collect();
    let mut valid = vec![true; n];
    for b in 0..header.bands {
        for (i, &s) in samples[b * n..(b + 1) * n].iter().enumerate() {
            if !s.is_finite() || header.nodata.is_some_and(|nd| s == nd as f32 as f64) {
                valid[i] = false;
            }
        }
    }
    let mut georef = GeoRef::new(header.origin_x, header.origin_y, header.pixel_size)?;
    georef.epsg_hint = header.epsg_hint.clone();
    MultibandRaster::new(header.width, header.height, header.bands, samples, valid, georef)
}

/// Writes `<name>.bsq` and `<name>.hdr.json`. Masked pixels are written as
/// `nodata` when given, otherwise as NaN.
pub fn write_multiband(r: &MultibandRaster, path: impl AsRef<Path>, nodata: Option<f64>) -> Result<()> {
    let path = path.as_ref();
    let g = r.georef();
    let header = BsqHeader {
        width: r.width(),
        height: r.height(),
        bands: r.bands(),
        origin_x: g.origin_x,
        origin_y: g.origin_y,
        pixel_size: g.pixel_size,
        nodata,
        epsg_hint: g.epsg_hint.clone(),
    };
    let n = r.pixel_count();
    let fill = nodata.map_or(f32::NAN, |v| v as f32);
    let mut payload = Vec::with_capacity(n * r.bands() * 4);
    for b in 0..r.bands() {
        for (i, &s) in r.band(b).iter().enumerate() {
            let v = if r.is_valid(i) { s as f32 } else { fill };
            payload.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, payload).map_err(|e| Error::io(path, e))?;
    let hdr_path = sidecar_path(path);
    let text = serde_json::to_string_pretty(&header)?;
    fs::write(&hdr_path, text).map_err(|e| Error::io(&hdr_path, e))
}
