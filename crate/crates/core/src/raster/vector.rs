//! Lineament and point-set serialization.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde_json::{json, Value};

use super::{GeoRef, LabeledPoint, PointSet};
use crate::error::{Error, Result};
use crate::vectorize::{Lineament, LineamentSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VectorFormat {
    GeoJson,
    Csv,
}

impl VectorFormat {
    pub fn from_path(path: &Path) -> VectorFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => VectorFormat::Csv,
            _ => VectorFormat::GeoJson,
        }
    }
}

pub(crate) fn lineaments_to_geojson(set: &LineamentSet) -> Value {
    let g = set.georef();
    let features: Vec<Value> = set
        .lineaments()
        .iter()
        .map(|l| {
            let coords: Vec<Value> = l
                .vertices()
                .iter()
                .map(|v| {
                    let (x, y) = g.pixel_to_world(v[0], v[1]);
                    json!([x, y])
                })
                .collect();
            json!({
                "type": "Feature",
                "geometry": { "type": "LineString", "coordinates": coords },
                "properties": {
                    "id": l.id(),
                    "length_m": l.pixel_length() * g.pixel_size,
                    "mean_azimuth_deg": l.mean_azimuth(),
                },
            })
        })
        .collect();
    json!({
        "type": "FeatureCollection",
        "provenance": set.provenance(),
        "features": features,
    })
}

pub(crate) fn lineaments_to_csv(set: &LineamentSet) -> String {
    let g = set.georef();
    let mut out = String::from("id,seq,x,y\n");
    for l in set.lineaments() {
        for (seq, v) in l.vertices().iter().enumerate() {
            let (x, y) = g.pixel_to_world(v[0], v[1]);
            let _ = writeln!(out, "{},{seq},{x},{y}", l.id());
        }
    }
    out
}

pub fn write_lineaments(set: &LineamentSet, path: impl AsRef<Path>, format: VectorFormat) -> Result<()> {
    let path = path.as_ref();
    let text = match format {
        VectorFormat::GeoJson => {
            let mut s = serde_json::to_string_pretty(&lineaments_to_geojson(set))?;
            s.push('\n');
            s
        }
        VectorFormat::Csv => lineaments_to_csv(set),
    };
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Reads a GeoJSON FeatureCollection of LineStrings into pixel space of `georef`.
pub fn read_lineaments(path: impl AsRef<Path>, georef: &GeoRef) -> Result<LineamentSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let doc: Value = serde_json::from_str(&text)?;
    let bad = |msg: &str| Error::InvalidInput(format!("{}: {msg}", path.display()));
    let features = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| bad("not a FeatureCollection"))?;
    let provenance = doc
        .get("provenance")
        .and_then(Value::as_str)
        .unwrap_or("imported")
        .to_string();
    let mut out = Vec::with_capacity(features.len());
    for (i, f) in features.iter().enumerate() {
        let geom = f.get("geometry").ok_or_else(|| bad("feature without geometry"))?;
        if geom.get("type").and_then(Value::as_str) != Some("LineString") {
            return Err(bad("only LineString geometries are supported"));
        }
        let coords = geom
            .get("coordinates")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("LineString without coordinates"))?;
        let mut vertices = Vec::with_capacity(coords.len());
        for c in coords {
            let x = c.get(0).and_then(Value::as_f64);
            let y = c.get(1).and_then(Value::as_f64);
            let (Some(x), Some(y)) = (x, y) else {
                return Err(bad("coordinate is not a number pair"));
            };
            let (col, row) = georef.world_to_pixel(x, y);
            vertices.push([col, row]);
        }
        let id = f
            .pointer("/properties/id")
            .and_then(Value::as_u64)
            .map_or(i as u32, |v| v as u32);
        out.push(Lineament::new(id, vertices)?);
    }
    LineamentSet::new(out, georef.clone(), provenance)
}

/// Reads occurrence points from CSV with header `x,y,label`.
pub fn read_points(path: impl AsRef<Path>) -> Result<PointSet> {
    let path = path.as_ref();
    let mut rdr = csv::Reader::from_path(path)?;
    let mut points = Vec::new();
    for rec in rdr.deserialize() {
        let p: LabeledPoint = rec?;
        points.push(p);
    }
    PointSet::new(points)
}

pub fn write_points(points: &PointSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    for p in points.points() {
        w.serialize(p)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set_of(lines: Vec<Vec<[f64; 2]>>, g: GeoRef) -> LineamentSet {
        let ls = lines
            .into_iter()
            .enumerate()
            .map(|(i, v)| Lineament::new(i as u32, v).unwrap())
            .collect();
        LineamentSet::new(ls, g, "test").unwrap()
    }

    #[test]
    fn empty_set_has_empty_features() {
        let v = lineaments_to_geojson(&set_of(vec![], GeoRef::default()));
        assert_eq!(v["type"], "FeatureCollection");
        assert_eq!(v["features"].as_array().unwrap().len(), 0);
    }

    #[test]
    fn length_and_azimuth_properties() {
        let g = GeoRef::new(0.0, 3000.0, 30.0).unwrap();
        let v = lineaments_to_geojson(&set_of(vec![vec![[0.0, 0.0], [10.0, 0.0]]], g));
        let props = &v["features"][0]["properties"];
        assert_eq!(props["length_m"], 300.0);
        assert_eq!(props["mean_azimuth_deg"], 90.0);
        let coords = &v["features"][0]["geometry"]["coordinates"];
        assert_eq!(coords[0], json!([15.0, 2985.0]));
    }

    #[test]
    fn csv_rows_per_vertex() {
        let g = GeoRef::new(0.0, 0.0, 1.0).unwrap();
        let csv = lineaments_to_csv(&set_of(vec![vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]], g));
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "id,seq,x,y");
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[3], "0,2,1.5,-1.5");
    }

    #[test]
    fn geojson_round_trip_preserves_geometry() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("l.geojson");
        let g = GeoRef::new(1000.0, 9000.0, 30.0).unwrap();
        let set = set_of(vec![vec![[1.0, 2.0], [40.0, 7.0], [80.0, 3.0]], vec![[5.0, 5.0], [5.0, 60.0]]], g.clone());
        write_lineaments(&set, &path, VectorFormat::GeoJson).unwrap();
        let back = read_lineaments(&path, &g).unwrap();
        assert_eq!(back.lineaments().len(), 2);
        for (a, b) in set.lineaments().iter().zip(back.lineaments()) {
            assert_eq!(a.id(), b.id());
            for (p, q) in a.vertices().iter().zip(b.vertices()) {
                assert!((p[0] - q[0]).abs() < 1e-9 && (p[1] - q[1]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn unwritable_path_errors() {
        let set = set_of(vec![], GeoRef::default());
        let err = write_lineaments(&set, "/nonexistent-dir/x.geojson", VectorFormat::GeoJson);
        assert!(matches!(err, Err(Error::Io { .. })));
    }

    #[test]
    fn points_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("occ.csv");
        let pts = PointSet::new(vec![
            LabeledPoint { x: 1.5, y: -2.0, label: "Au, vein".into() },
            LabeledPoint { x: 3.0, y: 4.0, label: "Cu".into() },
        ])
        .unwrap();
        write_points(&pts, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("x,y,label\n"));
        assert_eq!(read_points(&path).unwrap(), pts);
    }
}
