use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{self, Vertex};
use crate::raster::GeoRef;

/// A polyline in pixel coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lineament {
    id: u32,
    vertices: Vec<Vertex>,
}

impl Lineament {
    /// Drops repeated consecutive vertices; at least two distinct vertices must remain.
    pub fn new(id: u32, vertices: Vec<Vertex>) -> Result<Self> {
        let mut clean: Vec<Vertex> = Vec::with_capacity(vertices.len());
        for v in vertices {
            if !v[0].is_finite() || !v[1].is_finite() {
                return Err(Error::InvalidInput(format!("lineament {id} has a non-finite vertex")));
            }
            if clean.last() != Some(&v) {
                clean.push(v);
            }
        }
        if clean.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "lineament {id} needs at least two distinct vertices"
            )));
        }
        Ok(Lineament { id, vertices: clean })
    }

    pub fn id(&self) -> u32 {
        self.id
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub(crate) fn with_id(mut self, id: u32) -> Self {
        self.id = id;
        self
    }

    pub fn segments(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        self.vertices.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn pixel_length(&self) -> f64 {
        self.segments().map(|(a, b)| geom::distance(a, b)).sum()
    }

    /// Length-weighted axial mean of the segment azimuths, in `[0, 180)`.
    pub fn mean_azimuth(&self) -> f64 {
        geom::axial_mean(
            self.segments()
                .map(|(a, b)| (geom::segment_azimuth(a, b), geom::distance(a, b))),
        )
        .unwrap_or_else(|| {
            geom::segment_azimuth(self.vertices[0], *self.vertices.last().unwrap())
        })
    }

    pub fn reversed(&self) -> Lineament {
        let mut v = self.vertices.clone();
        v.reverse();
        Lineament { id: self.id, vertices: v }
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Lineament {
        Lineament {
            id: self.id,
            vertices: self.vertices.iter().map(|v| [v[0] + dx, v[1] + dy]).collect(),
        }
    }
}

/// Lineaments sharing one georeference.
#[derive(Debug, Clone, PartialEq)]
pub struct LineamentSet {
    lineaments: Vec<Lineament>,
    georef: GeoRef,
    provenance: String,
}

impl LineamentSet {
    pub fn new(lineaments: Vec<Lineament>, georef: GeoRef, provenance: impl Into<String>) -> Result<Self> {
        let mut ids: Vec<u32> = lineaments.iter().map(Lineament::id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput("duplicate lineament ids".into()));
        }
        Ok(LineamentSet {
            lineaments,
            georef,
            provenance: provenance.into(),
        })
    }

    pub fn empty(georef: GeoRef, provenance: impl Into<String>) -> Self {
        LineamentSet {
            lineaments: Vec::new(),
            georef,
            provenance: provenance.into(),
        }
    }

    pub fn lineaments(&self) -> &[Lineament] {
        &self.lineaments
    }

    pub fn georef(&self) -> &GeoRef {
        &self.georef
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.lineaments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lineaments.is_empty()
    }

    pub fn total_pixel_length(&self) -> f64 {
        self.lineaments.iter().map(Lineament::pixel_length).sum()
    }

    pub fn into_lineaments(self) -> Vec<Lineament> {
        self.lineaments
    }

    /// Keeps lineaments for which `keep` returns true; geometry untouched.
    pub fn filtered(&self, mut keep: impl FnMut(&Lineament) -> bool) -> LineamentSet {
        LineamentSet {
            lineaments: self.lineaments.iter().filter(|l| keep(l)).cloned().collect(),
            georef: self.georef.clone(),
            provenance: self.provenance.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dedups_consecutive_vertices() {
        let l = Lineament::new(1, vec![[0.0, 0.0], [0.0, 0.0], [3.0, 4.0]]).unwrap();
        assert_eq!(l.vertices().len(), 2);
        assert_eq!(l.pixel_length(), 5.0);
        assert!(Lineament::new(2, vec![[1.0, 1.0], [1.0, 1.0]]).is_err());
    }

    #[test]
    fn duplicate_ids_rejected() {
        let a = Lineament::new(1, vec![[0.0, 0.0], [1.0, 0.0]]).unwrap();
        assert!(LineamentSet::new(vec![a.clone(), a], GeoRef::default(), "x").is_err());
    }

    #[test]
    fn mean_azimuth_of_east_segment() {
        let l = Lineament::new(0, vec![[0.0, 0.0], [5.0, 0.0]]).unwrap();
        assert_eq!(l.mean_azimuth(), 90.0);
    }
}
