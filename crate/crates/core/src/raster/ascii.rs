//! ESRI ASCII grid reader/writer.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{GeoRef, GrayImage};
use crate::error::{Error, Result};

const DEFAULT_NODATA: f64 = -9999.0;

#[derive(Default)]
struct Header {
    ncols: Option<usize>,
    nrows: Option<usize>,
    xll: Option<(f64, bool)>,
    yll: Option<(f64, bool)>,
    cellsize: Option<f64>,
    dx: Option<f64>,
    dy: Option<f64>,
    nodata: Option<f64>,
}

pub fn read_ascii_grid(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_ascii_grid(&text, path)
}

pub(crate) fn parse_ascii_grid(text: &str, path: &Path) -> Result<GrayImage> {
    let mut header = Header::default();
    let mut lines = text.lines().enumerate().peekable();
    let mut last_header_line = 0;

    while let Some(&(idx, line)) = lines.peek() {
        let mut toks = line.split_whitespace();
        let Some(key) = toks.next() else {
            lines.next();
            continue;
        };
        if key.parse::<f64>().is_ok() {
            break;
        }
        let lineno = idx + 1;
        let value = toks
            .next()
            .ok_or_else(|| Error::parse(path, lineno, format!("header key `{key}` has no value")))?;
        let num = |v: &str| -> Result<f64> {
            v.parse::<f64>()
                .map_err(|_| Error::parse(path, lineno, format!("bad value `{v}` for `{key}`")))
        };
        let count = |v: &str| -> Result<usize> {
            v.parse::<usize>()
                .map_err(|_| Error::parse(path, lineno, format!("bad count `{v}` for `{key}`")))
        };
        match key.to_ascii_lowercase().as_str() {
            "ncols" => header.ncols = Some(count(value)?),
            "nrows" => header.nrows = Some(count(value)?),
            "xllcorner" => header.xll = Some((num(value)?, false)),
            "xllcenter" => header.xll = Some((num(value)?, true)),
            "yllcorner" => header.yll = Some((num(value)?, false)),
            "yllcenter" => header.yll = Some((num(value)?, true)),
            "cellsize" => header.cellsize = Some(num(value)?),
            "dx" => header.dx = Some(num(value)?),
            "dy" => header.dy = Some(num(value)?),
            "nodata_value" => header.nodata = Some(num(value)?),
            other => {
                return Err(Error::parse(path, lineno, format!("unknown header key `{other}`")));
            }
        }
        last_header_line = lineno;
        lines.next();
    }

    let missing = |k: &str| Error::parse(path, last_header_line + 1, format!("missing required key `{k}`"));
    let ncols = header.ncols.ok_or_else(|| missing("ncols"))?;
    let nrows = header.nrows.ok_or_else(|| missing("nrows"))?;
    let (xll, x_center) = header.xll.ok_or_else(|| missing("xllcorner"))?;
    let (yll, y_center) = header.yll.ok_or_else(|| missing("yllcorner"))?;
    let cellsize = match (header.cellsize, header.dx, header.dy) {
        (Some(c), _, _) => c,
        (None, Some(dx), Some(dy)) if dx == dy => dx,
        (None, Some(_), Some(_)) => {
            return Err(Error::parse(
                path,
                last_header_line,
                "non-square pixels (dx != dy) are not supported",
            ))
        }
        _ => return Err(missing("cellsize")),
    };
    if ncols == 0 || nrows == 0 {
        return Err(Error::parse(path, last_header_line, "grid has zero size"));
    }

    let origin_x = if x_center { xll - cellsize / 2.0 } else { xll };
    let south = if y_center { yll - cellsize / 2.0 } else { yll };
    let origin_y = south + nrows as f64 * cellsize;
    let georef = GeoRef::new(origin_x, origin_y, cellsize)
        .map_err(|e| Error::parse(path, last_header_line, e.to_string()))?;

    let mut data = Vec::with_capacity(ncols * nrows);
    let mut valid = Vec::with_capacity(ncols * nrows);
    let mut rows_read = 0;
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        if rows_read == nrows {
            return Err(Error::parse(path, lineno, format!("more than {nrows} data rows")));
        }
        let start = data.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::parse(path, lineno, format!("non-numeric cell `{tok}`")))?;
            let is_nodata = header.nodata == Some(v) || !v.is_finite();
            data.push(if is_nodata { 0.0 } else { v });
            valid.push(!is_nodata);
        }
        let got = data.len() - start;
        if got != ncols {
            return Err(Error::parse(
                path,
                lineno,
                format!("row length mismatch: expected {ncols} values, found {got}"),
            ));
        }
        rows_read += 1;
    }
    if rows_read != nrows {
        return Err(Error::parse(
            path,
            text.lines().count(),
            format!("expected {nrows} data rows, found {rows_read}"),
        ));
    }
    GrayImage::new(ncols, nrows, data, valid, georef)
}

/// Formats an image as ESRI ASCII grid text. Values use the shortest
/// representation that parses back to the same `f64`.
pub(crate) fn format_ascii_grid(img: &GrayImage) -> String {
    format_grid(
        img.width(),
        img.height(),
        img.georef(),
        |i| img.valid_mask()[i].then(|| img.data()[i]),
    )
}

fn format_grid(
    width: usize,
    height: usize,
    georef: &GeoRef,
    value: impl Fn(usize) -> Option<f64>,
) -> String {
    let mut out = String::with_capacity(width * height * 4 + 128);
    let yll = georef.origin_y - height as f64 * georef.pixel_size;
    let _ = writeln!(out, "ncols {width}");
    let _ = writeln!(out, "nrows {height}");
    let _ = writeln!(out, "xllcorner {}", georef.origin_x);
    let _ = writeln!(out, "yllcorner {yll}");
    let _ = writeln!(out, "cellsize {}", georef.pixel_size);
    let _ = writeln!(out, "nodata_value {DEFAULT_NODATA}");
    for r in 0..height {
        for c in 0..width {
            if c > 0 {
                out.push(' ');
            }
            match value(r * width + c) {
                Some(v) => {
                    let _ = write!(out, "{v}");
                }
                None => {
                    let _ = write!(out, "{DEFAULT_NODATA}");
                }
            }
        }
        out.push('\n');
    }
    out
}

pub fn write_ascii_grid(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_ascii_grid(img)).map_err(|e| Error::io(path, e))
}

/// Writes a boolean grid as `{0, 1}` cells.
pub fn write_mask_ascii(
    width: usize,
    height: usize,
    georef: &GeoRef,
    cells: &[bool],
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let text = format_grid(width, height, georef, |i| Some(if cells[i] { 1.0 } else { 0.0 }));
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
