//! End-to-end orchestration: configuration, stage execution, reports, and a
//! synthetic scene generator with truth scoring.

mod config;
mod score;
mod synth;

pub use config::{default_edge_gradient, parse_config_text, read_config_file, PipelineConfig};
pub use score::{score_against_truth, TruthScore};
pub use synth::{make_synthetic, SceneSpec, SegmentSpec, StreamSpec, SyntheticScene};

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::analyze::{self, FccTriplet};
use crate::dimred::{self, TransformReport};
use crate::enhance;
use crate::error::{Error, Result};
use crate::hydro;
use crate::raster::{self, GrayImage, MultibandRaster, PointSet, VectorFormat};
use crate::vectorize::{self, LineamentSet};

/// In-memory inputs for [`run_on_data`].
#[derive(Debug, Clone)]
pub struct PipelineInputs {
    pub raster: MultibandRaster,
    pub dem: Option<GrayImage>,
    pub occurrences: Option<PointSet>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageCounts {
    pub valid_pixels: usize,
    pub enhanced_images: usize,
    pub lineaments_raw: usize,
    pub lineaments_final: usize,
    pub stream_cells: usize,
    pub buffer_cells: usize,
    pub occurrence_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub parameters: BTreeMap<String, String>,
    pub warnings: Vec<String>,
    pub counts: StageCounts,
    pub dimred: TransformReport,
    pub fcc_top: Vec<FccTriplet>,
    pub rose_dominant_bin_deg: Option<f64>,
    pub density_max_fuzzy: f64,
    pub correlation_auc: Option<f64>,
    /// Wall-clock milliseconds per stage; the only non-deterministic field.
    pub timings_ms: BTreeMap<String, f64>,
}

struct Timer(BTreeMap<String, f64>);

impl Timer {
    fn stage<T>(&mut self, name: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let t = Instant::now();
        let out = f().map_err(|e| match e {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage: name,
                source: Box::new(e),
            },
        });
        self.0.insert(name.to_string(), t.elapsed().as_secs_f64() * 1e3);
        out
    }
}

/// Reads the configured inputs and runs [`run_on_data`].
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunReport> {
    let input = cfg
        .input
        .as_ref()
        .ok_or_else(|| Error::Validation("`input` raster is required".into()))?;
    let raster = raster::read_multiband(input).map_err(|e| stage("read", e))?;
    let dem = match &cfg.dem {
        Some(p) => Some(raster::read_ascii_grid(p).map_err(|e| stage("read", e))?),
        None => None,
    };
    let occurrences = match &cfg.occurrences {
        Some(p) => Some(raster::read_points(p).map_err(|e| stage("read", e))?),
        None => None,
    };
    run_on_data(
        cfg,
        &PipelineInputs {
            raster,
            dem,
            occurrences,
        },
    )
}

fn stage(name: &'static str, e: Error) -> Error {
    Error::Stage {
        stage: name,
        source: Box::new(e),
    }
}

/// Runs every stage and writes the artifacts into `cfg.output_dir`. Each
/// artifact is written as soon as its stage finishes.
pub fn run_on_data(cfg: &PipelineConfig, inputs: &PipelineInputs) -> Result<RunReport> {
    let warnings = cfg.validate()?;
    for w in &warnings {
        log::warn!("{w}");
    }
    let out = cfg.output_dir.as_path();
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let r = &inputs.raster;
    let mut timer = Timer(BTreeMap::new());
    let mut counts = StageCounts {
        valid_pixels: r.valid_count(),
        ..Default::default()
    };

    let fcc_top = if r.bands() >= 3 {
        timer.stage("fcc", || Ok(analyze::rank_fcc_triplets(r)?.triplets.into_iter().take(5).collect()))?
    } else {
        Vec::new()
    };
    let (stack, dimred_report) = timer.stage("dimred", || dimred::reduce(r, cfg.dimred, &cfg.ica))?;
    if !dimred_report.converged {
        log::warn!("{} did not converge; using the best iterate", cfg.dimred);
    }
    let gray = timer.stage("select", || dimred::select_component(&stack, cfg.component))?;
    let clean = timer.stage("denoise", || enhance::denoise(&gray, &cfg.denoise))?;
    let enhanced = timer.stage("enhance", || Ok(enhance::enhance(&clean, cfg.mode)))?;
    counts.enhanced_images = enhanced.len();

    let raw = timer.stage("extract", || vectorize::extract_union(&enhanced, &cfg.extraction))?;
    counts.lineaments_raw = raw.len();
    write_set(&raw, &out.join("lineaments_raw.geojson"))?;

    let final_set = match &inputs.dem {
        Some(dem) => timer.stage("hydro", || {
            if dem.width() != r.width() || dem.height() != r.height() || !dem.georef().same_grid(r.georef()) {
                return Err(Error::GeoRefMismatch("DEM grid differs from the raster grid".into()));
            }
            let flow = hydro::d8_flow(&hydro::fill_sinks(dem));
            let streams = hydro::streams(&flow, cfg.min_cells)?;
            let buf = hydro::buffer(&streams, cfg.buffer_radius_px);
            counts.stream_cells = streams.count();
            counts.buffer_cells = buf.count();
            streams.write_ascii(out.join("streams.asc"))?;
            hydro::remove_stream_lineaments(&raw, &buf)
        })?,
        None => raw.clone(),
    };
    counts.lineaments_final = final_set.len();
    write_set(&final_set, &out.join("lineaments.geojson"))?;

    let (dominant, max_fuzzy, auc) = timer.stage("analyze", || {
        let d = analyze::density(&final_set, cfg.cell_size_px, cfg.search_radius_px, r.width(), r.height())?;
        d.write_ascii(out.join("density.asc"))?;
        let rose = analyze::rose(&final_set);
        rose.write_csv(out.join("rose.csv"))?;
        let auc = match &inputs.occurrences {
            Some(pts) => {
                counts.occurrence_points = pts.len();
                let c = analyze::correlate_occurrences(&d, pts);
                c.write_csv(out.join("correlation.csv"))?;
                Some(c.auc)
            }
            None => None,
        };
        let max = d.fuzzy().iter().copied().fold(0.0, f64::max);
        Ok((rose.dominant_bin(), max, auc))
    })?;

    let report = RunReport {
        parameters: cfg.to_pairs(),
        warnings,
        counts,
        dimred: dimred_report,
        fcc_top,
        rose_dominant_bin_deg: dominant,
        density_max_fuzzy: max_fuzzy,
        correlation_auc: auc,
        timings_ms: timer.0,
    };
    let path = out.join("report.json");
    let text = serde_json::to_string_pretty(&report)?;
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(report)
}

fn write_set(set: &LineamentSet, path: &Path) -> Result<()> {
    raster::write_lineaments(set, path, VectorFormat::GeoJson)
}
