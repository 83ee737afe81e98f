use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{point_segment_distance, Vertex};
use crate::raster::{GeoRef, GrayImage, LabeledPoint, MultibandRaster, PointSet};
use crate::vectorize::{Lineament, LineamentSet};

/// Decay length of the cusp profile either side of the trace, in pixels.
const WIDTH: f64 = 10.0;
/// Gaussian half-width of the taper past each end.
const END_TAPER: f64 = 4.0;

/// One linear feature: a cusp-shaped ridge whose only slope break lies on the
/// trace, so a first-derivative filter turns it into a single step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentSpec {
    /// Centre `[col, row]` in pixels.
    pub center: Vertex,
    /// Degrees clockwise from north.
    pub azimuth: f64,
    pub length: f64,
    /// Amplitude in reflectance units.
    pub contrast: f64,
}

impl SegmentSpec {
    fn axes(&self) -> (Vertex, Vertex) {
        let t = self.azimuth.to_radians();
        ([t.sin(), -t.cos()], [t.cos(), t.sin()])
    }

    pub fn endpoints(&self) -> (Vertex, Vertex) {
        let (u, _) = self.axes();
        let h = self.length / 2.0;
        (
            [self.center[0] - h * u[0], self.center[1] - h * u[1]],
            [self.center[0] + h * u[0], self.center[1] + h * u[1]],
        )
    }

    /// Feature amplitude at pixel `(col, row)`, without contrast.
    fn profile(&self, p: Vertex) -> f64 {
        let (u, n) = self.axes();
        let d = [p[0] - self.center[0], p[1] - self.center[1]];
        let t = d[0] * u[0] + d[1] * u[1];
        let s = d[0] * n[0] + d[1] * n[1];
        let over = (t.abs() - self.length / 2.0).max(0.0) / END_TAPER;
        (-s.abs() / WIDTH).exp() * (-over * over).exp()
    }
}

/// Carved valley; the raster also carries a feature along it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamSpec {
    /// Upstream to downstream, `[col, row]`.
    pub path: Vec<Vertex>,
    /// Elevation gain per pixel away from the thalweg.
    pub side_slope: f64,
    pub contrast: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub bands: usize,
    pub segments: Vec<SegmentSpec>,
    /// Per-band Gaussian noise standard deviation.
    pub noise_sigma: f64,
    /// DEM drop per pixel eastward.
    pub dem_tilt: f64,
    pub stream: Option<StreamSpec>,
    pub occurrences: usize,
    pub pixel_size: f64,
}

impl SceneSpec {
    /// 512×512, six bands, twelve lineaments (seven striking 100–110°) and
    /// one stream.
    pub fn benchmark() -> Self {
        let seg = |c: f64, r: f64, azimuth: f64, length: f64| SegmentSpec {
            center: [c, r],
            azimuth,
            length,
            contrast: 0.25,
        };
        SceneSpec {
            width: 512,
            height: 512,
            bands: 6,
            segments: vec![
                seg(130.0, 50.0, 104.0, 180.0),
                seg(370.0, 70.0, 106.0, 180.0),
                seg(130.0, 120.0, 102.0, 180.0),
                seg(370.0, 140.0, 108.0, 180.0),
                seg(220.0, 190.0, 105.0, 180.0),
                seg(130.0, 420.0, 103.0, 180.0),
                seg(380.0, 440.0, 107.0, 180.0),
                seg(50.0, 240.0, 20.0, 100.0),
                seg(460.0, 235.0, 60.0, 100.0),
                seg(150.0, 275.0, 150.0, 100.0),
                seg(380.0, 275.0, 135.0, 100.0),
                seg(255.0, 440.0, 0.0, 80.0),
            ],
            noise_sigma: 5.0 / 255.0,
            dem_tilt: 0.1,
            stream: Some(StreamSpec {
                path: vec![[-1.0, 350.0], [512.0, 330.0]],
                side_slope: 0.5,
                contrast: 0.25,
            }),
            occurrences: 40,
            pixel_size: 30.0,
        }
    }

    /// A single segment in an otherwise empty scene.
    pub fn single(width: usize, height: usize, segment: SegmentSpec) -> Self {
        SceneSpec {
            width,
            height,
            bands: 3,
            segments: vec![segment],
            noise_sigma: 0.0,
            dem_tilt: 0.1,
            stream: None,
            occurrences: 0,
            pixel_size: 30.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticScene {
    pub raster: MultibandRaster,
    pub dem: GrayImage,
    pub occurrences: PointSet,
    pub truth: LineamentSet,
}

/// Spectral weight of the shared signal in band `b`.
fn band_weight(b: usize) -> f64 {
    [1.0, 0.85, 0.7, 0.9, 0.6, 0.75, 0.8][b % 7]
}

fn polyline_distance(p: Vertex, path: &[Vertex]) -> f64 {
    path.windows(2)
        .map(|w| point_segment_distance(p, w[0], w[1]))
        .fold(f64::INFINITY, f64::min)
}

/// Builds a deterministic scene: one shared spectral signal (background tilt
/// plus features) scaled per band, independent noise per band, a DEM with a
/// valley along the stream, and occurrence points clustered on the truth.
pub fn make_synthetic(spec: &SceneSpec, seed: u64) -> Result<SyntheticScene> {
    let (w, h) = (spec.width, spec.height);
    if w < 2 || h < 2 || spec.bands == 0 {
        return Err(Error::InvalidInput("synthetic scene needs at least 2×2 pixels and one band".into()));
    }
    if !(spec.noise_sigma >= 0.0) || !(spec.pixel_size > 0.0) {
        return Err(Error::InvalidInput("noise sigma must be >= 0 and pixel size > 0".into()));
    }
    let georef = GeoRef::new(500_000.0, 7_000_000.0, spec.pixel_size)?.with_epsg("EPSG:32750");

    let mut signal = vec![0.0; w * h];
    for r in 0..h {
        for c in 0..w {
            let p = [c as f64, r as f64];
            let mut v = 0.05 * c as f64 / w as f64;
            for s in &spec.segments {
                v += s.contrast * s.profile(p);
            }
            if let Some(st) = &spec.stream {
                for wseg in st.path.windows(2) {
                    let (a, b) = (wseg[0], wseg[1]);
                    let len = crate::geom::distance(a, b);
                    let az = crate::geom::segment_azimuth(a, b);
                    // direction a -> b may point either way; pick the one matching the path
                    let dir_az = if b[0] - a[0] >= 0.0 { az } else { az + 180.0 };
                    let seg = SegmentSpec {
                        center: [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0],
                        azimuth: dir_az,
                        length: len,
                        contrast: st.contrast,
                    };
                    v += st.contrast * seg.profile(p);
                }
            }
            signal[r * w + c] = v;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, spec.noise_sigma.max(f64::MIN_POSITIVE)).expect("valid sigma");
    let mut planes = Vec::with_capacity(spec.bands);
    for b in 0..spec.bands {
        let offset = 0.1 + 0.03 * b as f64;
        let k = band_weight(b);
        let plane = signal
            .iter()
            .map(|&s| {
                let n = if spec.noise_sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 };
                offset + k * s + n
            })
            .collect();
        planes.push(plane);
    }
    let raster = MultibandRaster::from_planes(w, h, planes, georef.clone())?;

    let dem = GrayImage::from_fn(w, h, |r, c| {
        let mut z = 500.0 - spec.dem_tilt * c as f64;
        if let Some(st) = &spec.stream {
            z += st.side_slope * polyline_distance([c as f64, r as f64], &st.path);
        }
        z
    })
    .with_georef(georef.clone());

    let truth_lines: Vec<Lineament> = spec
        .segments
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let (a, b) = s.endpoints();
            Lineament::new(i as u32, vec![a, b])
        })
        .collect::<Result<_>>()?;
    let truth = LineamentSet::new(truth_lines, georef.clone(), "truth")?;

    let mut points = Vec::with_capacity(spec.occurrences);
    let unit = Uniform::new(0.0, 1.0);
    for i in 0..spec.occurrences {
        let (col, row) = if !spec.segments.is_empty() && i % 4 != 3 {
            let s = &spec.segments[i % spec.segments.len()];
            let (a, b) = s.endpoints();
            let t = unit.sample(&mut rng);
            let jitter = 4.0 * (unit.sample(&mut rng) - 0.5);
            (a[0] + t * (b[0] - a[0]) + jitter, a[1] + t * (b[1] - a[1]) + jitter)
        } else {
            (unit.sample(&mut rng) * (w - 1) as f64, unit.sample(&mut rng) * (h - 1) as f64)
        };
        let (col, row) = (col.clamp(0.0, (w - 1) as f64), row.clamp(0.0, (h - 1) as f64));
        let (x, y) = georef.pixel_to_world(col, row);
        points.push(LabeledPoint {
            x,
            y,
            label: format!("occ{i}"),
        });
    }
    Ok(SyntheticScene {
        raster,
        dem,
        occurrences: PointSet::new(points)?,
        truth,
    })
}
