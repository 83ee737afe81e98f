use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{axial_difference, point_segment_distance, sample_polyline, segment_azimuth, Vertex};
use crate::par;
use crate::vectorize::LineamentSet;

const SAMPLE_STEP: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthScore {
    /// Fraction of truth length within tolerance of found geometry.
    pub recall_len: f64,
    /// Fraction of found length within tolerance of truth geometry.
    pub precision_len: f64,
    /// Length-weighted mean azimuth difference (degrees) over matched truth samples.
    pub azimuth_err: f64,
}

struct Segs(Vec<(Vertex, Vertex, f64)>);

impl Segs {
    fn of(set: &LineamentSet) -> Self {
        Segs(
            set.lineaments()
                .iter()
                .flat_map(|l| l.segments())
                .map(|(a, b)| (a, b, segment_azimuth(a, b)))
                .collect(),
        )
    }

    /// Nearest segment within `tol` as (distance, azimuth).
    fn nearest(&self, p: Vertex, tol: f64) -> Option<(f64, f64)> {
        let mut best: Option<(f64, f64)> = None;
        for &(a, b, az) in &self.0 {
            if p[0] < a[0].min(b[0]) - tol
                || p[0] > a[0].max(b[0]) + tol
                || p[1] < a[1].min(b[1]) - tol
                || p[1] > a[1].max(b[1]) + tol
            {
                continue;
            }
            let d = point_segment_distance(p, a, b);
            if d <= tol && best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, az));
            }
        }
        best
    }
}

/// Samples of `set` as (midpoint, length, azimuth of the owning segment).
fn samples(set: &LineamentSet) -> Vec<(Vertex, f64, f64)> {
    let mut out = Vec::new();
    for l in set.lineaments() {
        for (a, b) in l.segments() {
            let az = segment_azimuth(a, b);
            sample_polyline(&[a, b], SAMPLE_STEP, |p, len| out.push((p, len, az)));
        }
    }
    out
}

/// Length-based agreement between extracted and truth lineaments.
pub fn score_against_truth(found: &LineamentSet, truth: &LineamentSet, tol_px: f64) -> Result<TruthScore> {
    if !found.georef().same_grid(truth.georef()) {
        return Err(Error::GeoRefMismatch("found and truth lineaments use different grids".into()));
    }
    let (fs, ts) = (Segs::of(found), Segs::of(truth));

    let truth_samples = samples(truth);
    let hits = par::map_slice(&truth_samples, |&(p, _, _)| fs.nearest(p, tol_px));
    let (mut t_total, mut t_hit, mut az_sum) = (0.0, 0.0, 0.0);
    for (&(_, len, az), hit) in truth_samples.iter().zip(&hits) {
        t_total += len;
        if let Some((_, faz)) = hit {
            t_hit += len;
            az_sum += len * axial_difference(az, *faz);
        }
    }

    let found_samples = samples(found);
    let fhits = par::map_slice(&found_samples, |&(p, _, _)| ts.nearest(p, tol_px).is_some());
    let (mut f_total, mut f_hit) = (0.0, 0.0);
    for (&(_, len, _), &hit) in found_samples.iter().zip(&fhits) {
        f_total += len;
        if hit {
            f_hit += len;
        }
    }

    let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else { 0.0 };
    Ok(TruthScore {
        recall_len: ratio(t_hit, t_total),
        precision_len: ratio(f_hit, f_total),
        azimuth_err: ratio(az_sum, t_hit),
    })
}
