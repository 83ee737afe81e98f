use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::detect::CannyParams;
use crate::dimred::{DimredMethod, FastIcaParams};
use crate::enhance::{DenoiseParams, EnhanceMode};
use crate::error::{Error, Result};
use crate::hydro::{DEFAULT_BUFFER_RADIUS, DEFAULT_MIN_CELLS};
use crate::analyze::{DEFAULT_CELL_SIZE, DEFAULT_SEARCH_RADIUS};
use crate::vectorize::ExtractionParams;

/// Proposed edge-gradient threshold for each enhancement mode.
pub fn default_edge_gradient(mode: EnhanceMode) -> f64 {
    match mode {
        EnhanceMode::Directional => 50.0,
        EnhanceMode::Laplacian => 10.0,
    }
}

/// Every setting of a pipeline run.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub input: Option<PathBuf>,
    pub dem: Option<PathBuf>,
    pub occurrences: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub dimred: DimredMethod,
    /// Component to keep; `None` = the top-ranked one.
    pub component: Option<usize>,
    pub ica: FastIcaParams,
    pub mode: EnhanceMode,
    pub denoise: DenoiseParams,
    pub extraction: ExtractionParams,
    pub min_cells: u64,
    pub buffer_radius_px: usize,
    pub cell_size_px: usize,
    pub search_radius_px: usize,
    pub seed: u64,
    /// Accept thresholds outside their documented ranges.
    pub force: bool,
}

impl PipelineConfig {
    pub fn for_mode(mode: EnhanceMode) -> Self {
        let extraction = ExtractionParams {
            canny: CannyParams {
                edge_gradient: default_edge_gradient(mode),
                ..CannyParams::default()
            },
            ..ExtractionParams::default()
        };
        PipelineConfig {
            input: None,
            dem: None,
            occurrences: None,
            output_dir: PathBuf::from("out"),
            dimred: DimredMethod::Mnf,
            component: None,
            ica: FastIcaParams::default(),
            mode,
            denoise: DenoiseParams::default(),
            extraction,
            min_cells: DEFAULT_MIN_CELLS,
            buffer_radius_px: DEFAULT_BUFFER_RADIUS,
            cell_size_px: DEFAULT_CELL_SIZE,
            search_radius_px: DEFAULT_SEARCH_RADIUS,
            seed: 42,
            force: false,
        }
    }

    /// Builds a config from `key = value` pairs applied in order on top of the
    /// defaults for the chosen mode. `mode` is resolved first so the
    /// mode-specific defaults never override an explicit value.
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self> {
        let pairs: Vec<(&str, &str)> = pairs.into_iter().collect();
        let mode = match pairs.iter().rev().find(|(k, _)| *k == "mode") {
            Some((_, v)) => v.parse()?,
            None => EnhanceMode::Directional,
        };
        let mut cfg = PipelineConfig::for_mode(mode);
        for (k, v) in pairs {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    /// Applies one setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let bad = |what: &str| Error::Validation(format!("`{key}`: expected {what}, got `{v}`"));
        let num = || v.parse::<f64>().map_err(|_| bad("a number"));
        let int = || v.parse::<usize>().map_err(|_| bad("a non-negative integer"));
        let opt_path = || if v.is_empty() { None } else { Some(PathBuf::from(v)) };
        match key {
            "input" => self.input = opt_path(),
            "dem" => self.dem = opt_path(),
            "occurrences" => self.occurrences = opt_path(),
            "output_dir" => self.output_dir = PathBuf::from(v),
            "dimred" => self.dimred = v.parse()?,
            "component" => self.component = if v.is_empty() || v == "auto" { None } else { Some(int()?) },
            "ica_max_iter" => self.ica.max_iter = int()?,
            "ica_tol" => self.ica.tol = num()?,
            "mode" => self.mode = v.parse()?,
            "lee_window" => self.denoise.lee_window = int()?,
            "lee_sigma" => self.denoise.lee_sigma = if v.is_empty() || v == "auto" { None } else { Some(num()?) },
            "median_window" => self.denoise.median_window = int()?,
            "filter_radius" => self.extraction.canny.filter_radius = int()?,
            "edge_gradient" => self.extraction.canny.edge_gradient = num()?,
            "curve_length" => self.extraction.curve_length = int()?,
            "line_fitting_error" => self.extraction.line_fitting_error = num()?,
            "angular_difference" => self.extraction.angular_difference = num()?,
            "linking_distance" => self.extraction.linking_distance = num()?,
            "min_cells" => self.min_cells = int()? as u64,
            "buffer_radius_px" => self.buffer_radius_px = int()?,
            "cell_size_px" => self.cell_size_px = int()?,
            "search_radius_px" => self.search_radius_px = int()?,
            "seed" => self.seed = v.parse().map_err(|_| bad("an unsigned integer"))?,
            "force" => self.force = v.parse().map_err(|_| bad("true or false"))?,
            _ => return Err(Error::Validation(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// Flat echo of every setting; feeding it back through
    /// [`PipelineConfig::from_pairs`] reproduces the config.
    pub fn to_pairs(&self) -> BTreeMap<String, String> {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let opt = |o: Option<String>| o.unwrap_or_else(|| "auto".into());
        let e = &self.extraction;
        [
            ("input", path(&self.input)),
            ("dem", path(&self.dem)),
            ("occurrences", path(&self.occurrences)),
            ("output_dir", self.output_dir.display().to_string()),
            ("dimred", self.dimred.to_string()),
            ("component", opt(self.component.map(|c| c.to_string()))),
            ("ica_max_iter", self.ica.max_iter.to_string()),
            ("ica_tol", self.ica.tol.to_string()),
            ("mode", self.mode.to_string()),
            ("lee_window", self.denoise.lee_window.to_string()),
            ("lee_sigma", opt(self.denoise.lee_sigma.map(|s| s.to_string()))),
            ("median_window", self.denoise.median_window.to_string()),
            ("filter_radius", e.canny.filter_radius.to_string()),
            ("edge_gradient", e.canny.edge_gradient.to_string()),
            ("curve_length", e.curve_length.to_string()),
            ("line_fitting_error", e.line_fitting_error.to_string()),
            ("angular_difference", e.angular_difference.to_string()),
            ("linking_distance", e.linking_distance.to_string()),
            ("min_cells", self.min_cells.to_string()),
            ("buffer_radius_px", self.buffer_radius_px.to_string()),
            ("cell_size_px", self.cell_size_px.to_string()),
            ("search_radius_px", self.search_radius_px.to_string()),
            ("seed", self.seed.to_string()),
            ("force", self.force.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }

    /// Range checks; returns advisory warnings for valid but unusual settings.
    pub fn validate(&self) -> Result<Vec<String>> {
        self.extraction.validate(self.force)?;
        if !matches!(self.denoise.lee_window, 3 | 5 | 7) {
            return Err(Error::Validation("lee_window must be 3, 5 or 7".into()));
        }
        if !matches!(self.denoise.median_window, 3 | 5) {
            return Err(Error::Validation("median_window must be 3 or 5".into()));
        }
        if self.min_cells < 1 {
            return Err(Error::Validation("min_cells must be at least 1".into()));
        }
        if self.cell_size_px < 1 || self.search_radius_px < self.cell_size_px {
            return Err(Error::Validation("search_radius_px must be >= cell_size_px >= 1".into()));
        }
        if !(self.ica.tol > 0.0) || self.ica.max_iter == 0 {
            return Err(Error::Validation("ica_tol and ica_max_iter must be positive".into()));
        }
        let mut warnings = Vec::new();
        let proposed = default_edge_gradient(self.mode);
        if self.extraction.canny.edge_gradient != proposed {
            warnings.push(format!(
                "edge_gradient {} is non-default for mode {} (proposed {proposed})",
                self.extraction.canny.edge_gradient, self.mode
            ));
        }
        Ok(warnings)
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str, path: &Path) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::parse(path, i + 1, format!("expected `key = value`, got `{line}`")));
        };
        let k = k.trim();
        if k.is_empty() {
            return Err(Error::parse(path, i + 1, "empty key"));
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

pub fn read_config_file(path: impl AsRef<Path>) -> Result<Vec<(String, String)>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_text(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_keyed_defaults() {
        let d = PipelineConfig::from_pairs([]).unwrap();
        assert_eq!(d.extraction.canny.edge_gradient, 50.0);
        let l = PipelineConfig::from_pairs([("mode", "laplacian")]).unwrap();
        assert_eq!(l.extraction.canny.edge_gradient, 10.0);
        let explicit = PipelineConfig::from_pairs([("edge_gradient", "30"), ("mode", "laplacian")]).unwrap();
        assert_eq!(explicit.extraction.canny.edge_gradient, 30.0);
    }

    #[test]
    fn non_default_gradient_warns() {
        let c = PipelineConfig::from_pairs([("mode", "laplacian"), ("edge_gradient", "50")]).unwrap();
        let w = c.validate().unwrap();
        assert!(w.iter().any(|m| m.contains("non-default for mode")));
        assert!(PipelineConfig::from_pairs([]).unwrap().validate().unwrap().is_empty());
    }

    #[test]
    fn out_of_range_is_validation_error() {
        let c = PipelineConfig::from_pairs([("curve_length", "60")]).unwrap();
        assert!(c.validate().unwrap_err().is_validation());
        assert!(PipelineConfig::from_pairs([("bogus", "1")]).unwrap_err().is_validation());
    }

    #[test]
    fn pairs_round_trip() {
        let mut c = PipelineConfig::for_mode(EnhanceMode::Laplacian);
        c.dem = Some("dem.asc".into());
        c.component = Some(2);
        c.denoise.lee_sigma = Some(3.25);
        c.ica.tol = 1e-5;
        let pairs = c.to_pairs();
        let back = PipelineConfig::from_pairs(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str()))).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn config_text_parsing() {
        let p = Path::new("c.cfg");
        let kv = parse_config_text("# comment\nmode = laplacian  # trailing\n\nseed=7\n", p).unwrap();
        assert_eq!(kv, vec![("mode".into(), "laplacian".into()), ("seed".into(), "7".into())]);
        let err = parse_config_text("mode laplacian\n", p).unwrap_err();
        assert!(err.to_string().contains("line 1"));
    }
}
