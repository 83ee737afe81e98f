//! `lineament` command-line front end.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};
use lineament_core::error::{Error, Result};
use lineament_core::pipeline::{self, PipelineConfig, SceneSpec};
use lineament_core::raster::{self, GeoRef, VectorFormat};
use lineament_core::vectorize::LineamentSet;
use lineament_core::{analyze, dimred, enhance, hydro, vectorize};

#[derive(Debug, Parser)]
#[command(name = "lineament", version, about = "Semi-automated geological lineament extraction")]
struct Cli {
    /// Worker threads; falls back to LINEAMENT_THREADS, then to all cores.
    #[arg(long, global = true, env = "LINEAMENT_THREADS")]
    threads: Option<usize>,

    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Full pipeline: dimred, filtering, extraction, stream removal, analyses.
    Run(StageArgs),
    /// Dimensionality reduction; writes components.bsq, component.asc, transform.json.
    Dimred(StageArgs),
    /// Denoise, enhance and extract lineaments from a single-band grid.
    Extract {
        /// Single-band ASCII grid, e.g. component.asc from `dimred`.
        #[arg(long)]
        image: PathBuf,
        #[command(flatten)]
        stage: StageArgs,
    },
    /// Derive streams from the DEM and drop lineaments that follow them.
    Hydro {
        /// Lineaments to filter (GeoJSON).
        #[arg(long)]
        lineaments: PathBuf,
        #[command(flatten)]
        stage: StageArgs,
    },
    /// Density, rose diagram and occurrence correlation.
    Analyze {
        /// Lineaments to analyse (GeoJSON).
        #[arg(long)]
        lineaments: PathBuf,
        /// ASCII grid that defines the analysis extent; defaults to the DEM.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[command(flatten)]
        stage: StageArgs,
    },
    /// Generate a synthetic scene with ground truth.
    Synth {
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Scene description as JSON; defaults to the 512×512 benchmark scene.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Length-weighted recall and precision of found lineaments against truth.
    Score {
        #[arg(long)]
        found: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// ASCII grid whose georeference maps world to pixel coordinates.
        #[arg(long)]
        reference: PathBuf,
        /// Match tolerance in pixels.
        #[arg(long, default_value_t = 3.0)]
        tol: f64,
    },
}

#[derive(Debug, Args)]
struct StageArgs {
    /// Key-value configuration file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Accept thresholds outside their documented ranges.
    #[arg(long)]
    force: bool,

    #[command(flatten)]
    keys: KeyArgs,
}

macro_rules! key_args {
    ($($field:ident: $help:literal,)*) => {
        /// One flag per configuration key, named exactly like the key.
        #[derive(Debug, Default, Args)]
        struct KeyArgs {
            $(
                #[arg(long = stringify!($field), value_name = "VALUE", help = $help)]
                $field: Option<String>,
            )*
        }

        impl KeyArgs {
            fn pairs(&self) -> Vec<(&'static str, String)> {
                let mut out = Vec::new();
                $(
                    if let Some(v) = &self.$field {
                        out.push((stringify!($field), v.clone()));
                    }
                )*
                out
            }
        }
    };
}

key_args! {
    input: "Multiband raster (.bsq with .hdr.json sidecar)",
    dem: "DEM as an ASCII grid on the raster grid",
    occurrences: "Occurrence points CSV (x,y,label)",
    output_dir: "Output directory",
    dimred: "pca | ica | mnf",
    component: "Component index, or auto",
    ica_max_iter: "FastICA iteration cap",
    ica_tol: "FastICA convergence tolerance",
    mode: "directional | laplacian",
    lee_window: "Lee filter window (odd)",
    lee_sigma: "Lee noise sigma, or auto",
    median_window: "Median filter window (odd)",
    filter_radius: "Canny Gaussian radius, pixels [3, 8]",
    edge_gradient: "Canny high threshold, 0-255 scale [10, 70]",
    curve_length: "Minimum curve length, pixels [10, 50]",
    line_fitting_error: "Polyline tolerance, pixels [2, 5]",
    angular_difference: "Linking angle limit, degrees [3, 20]",
    linking_distance: "Linking gap limit, pixels [10, 50]",
    min_cells: "Flow accumulation threshold for streams",
    buffer_radius_px: "Stream buffer radius, pixels",
    cell_size_px: "Density cell size, pixels",
    search_radius_px: "Density search radius, pixels",
    seed: "Random seed",
}

impl StageArgs {
    /// Config file entries first, then flags, so flags win.
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut pairs: Vec<(String, String)> = match &self.config {
            // a malformed config file is a user error, not a runtime failure
            Some(path) => pipeline::read_config_file(path).map_err(|e| match e {
                Error::Parse { .. } => Error::Validation(e.to_string()),
                other => other,
            })?,
            None => Vec::new(),
        };
        pairs.extend(self.keys.pairs().into_iter().map(|(k, v)| (k.to_string(), v)));
        if self.force {
            pairs.push(("force".into(), "true".into()));
        }
        let cfg = PipelineConfig::from_pairs(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())))?;
        for w in cfg.validate()? {
            log::warn!("{w}");
        }
        Ok(cfg)
    }
}

fn required<'a>(value: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
    value
        .as_deref()
        .ok_or_else(|| Error::Validation(format!("`{key}` is required (flag --{key} or config key)")))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

fn run(stage: &StageArgs) -> Result<()> {
    let cfg = stage.resolve()?;
    let report = pipeline::run_pipeline(&cfg)?;
    let c = &report.counts;
    println!(
        "lineaments: {} raw, {} after stream removal; outputs in {}",
        c.lineaments_raw,
        c.lineaments_final,
        cfg.output_dir.display()
    );
    if let Some(bin) = report.rose_dominant_bin_deg {
        println!("dominant strike class: [{bin}, {})", bin + 10.0);
    }
    Ok(())
}

fn run_dimred(stage: &StageArgs) -> Result<()> {
    let cfg = stage.resolve()?;
    let r = raster::read_multiband(required(&cfg.input, "input")?)?;
    let (stack, report) = dimred::reduce(&r, cfg.dimred, &cfg.ica)?;
    if !report.converged {
        log::warn!("{} did not converge; using the best iterate", cfg.dimred);
    }
    let out = cfg.output_dir.as_path();
    create_dir(out)?;
    raster::write_multiband(&stack.components, out.join("components.bsq"), None)?;
    let gray = dimred::select_component(&stack, cfg.component)?;
    raster::write_ascii_grid(&gray, out.join("component.asc"))?;
    write_json(&out.join("transform.json"), &report)?;
    println!("{} components ({}); selected component written to component.asc", stack.len(), cfg.dimred);
    Ok(())
}

fn run_extract(image: &Path, stage: &StageArgs) -> Result<()> {
    let cfg = stage.resolve()?;
    let gray = raster::read_ascii_grid(image)?.rescaled_to_byte_range();
    let clean = enhance::denoise(&gray, &cfg.denoise)?;
    let enhanced = enhance::enhance(&clean, cfg.mode);
    let set = vectorize::extract_union(&enhanced, &cfg.extraction)?;
    let out = cfg.output_dir.as_path();
    create_dir(out)?;
    raster::write_lineaments(&set, out.join("lineaments_raw.geojson"), VectorFormat::GeoJson)?;
    println!("{} lineaments written to lineaments_raw.geojson", set.len());
    Ok(())
}

fn run_hydro(lineaments: &Path, stage: &StageArgs) -> Result<()> {
    let cfg = stage.resolve()?;
    let dem = raster::read_ascii_grid(required(&cfg.dem, "dem")?)?;
    let set = raster::read_lineaments(lineaments, dem.georef())?;
    let flow = hydro::d8_flow(&hydro::fill_sinks(&dem));
    let streams = hydro::streams(&flow, cfg.min_cells)?;
    let buf = hydro::buffer(&streams, cfg.buffer_radius_px);
    let kept = hydro::remove_stream_lineaments(&set, &buf)?;
    let out = cfg.output_dir.as_path();
    create_dir(out)?;
    streams.write_ascii(out.join("streams.asc"))?;
    raster::write_lineaments(&kept, out.join("lineaments.geojson"), VectorFormat::GeoJson)?;
    println!(
        "{} stream cells; kept {} of {} lineaments",
        streams.count(),
        kept.len(),
        set.len()
    );
    Ok(())
}

fn run_analyze(lineaments: &Path, reference: Option<&Path>, stage: &StageArgs) -> Result<()> {
    let cfg = stage.resolve()?;
    let grid_path = match reference {
        Some(p) => p,
        None => required(&cfg.dem, "dem")?,
    };
    let grid = raster::read_ascii_grid(grid_path)?;
    let set = raster::read_lineaments(lineaments, grid.georef())?;
    let out = cfg.output_dir.as_path();
    create_dir(out)?;
    let d = analyze::density(&set, cfg.cell_size_px, cfg.search_radius_px, grid.width(), grid.height())?;
    d.write_ascii(out.join("density.asc"))?;
    let rose = analyze::rose(&set);
    rose.write_csv(out.join("rose.csv"))?;
    if let Some(bin) = rose.dominant_bin() {
        println!("dominant strike class: [{bin}, {})", bin + 10.0);
    }
    if let Some(path) = &cfg.occurrences {
        let pts = raster::read_points(path)?;
        let curve = analyze::correlate_occurrences(&d, &pts);
        curve.write_csv(out.join("correlation.csv"))?;
        println!("occurrence AUC: {:.3} over {} points", curve.auc, curve.n_points);
    }
    Ok(())
}

fn run_synth(out: &Path, seed: u64, spec: Option<&Path>) -> Result<()> {
    let spec: SceneSpec = match spec {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::Io {
                path: p.to_path_buf(),
                source: e,
            })?;
            serde_json::from_str(&text)?
        }
        None => SceneSpec::benchmark(),
    };
    let scene = pipeline::make_synthetic(&spec, seed)?;
    create_dir(out)?;
    raster::write_multiband(&scene.raster, out.join("scene.bsq"), None)?;
    raster::write_ascii_grid(&scene.dem, out.join("dem.asc"))?;
    raster::write_points(&scene.occurrences, out.join("occurrences.csv"))?;
    raster::write_lineaments(&scene.truth, out.join("truth.geojson"), VectorFormat::GeoJson)?;
    write_json(&out.join("spec.json"), &spec)?;
    let cfg = format!(
        "# synthetic scene, seed {seed}\ninput = {}\ndem = {}\noccurrences = {}\noutput_dir = {}\nseed = {seed}\n",
        out.join("scene.bsq").display(),
        out.join("dem.asc").display(),
        out.join("occurrences.csv").display(),
        out.join("run").display(),
    );
    write_text(&out.join("run.cfg"), &cfg)?;
    println!(
        "{}x{}x{} scene with {} truth lineaments written to {}",
        spec.width,
        spec.height,
        spec.bands,
        scene.truth.len(),
        out.display()
    );
    Ok(())
}

fn run_score(found: &Path, truth: &Path, reference: &Path, tol: f64) -> Result<()> {
    let georef: GeoRef = raster::read_ascii_grid(reference)?.georef().clone();
    let found: LineamentSet = raster::read_lineaments(found, &georef)?;
    let truth = raster::read_lineaments(truth, &georef)?;
    let score = pipeline::score_against_truth(&found, &truth, tol)?;
    println!("{}", serde_json::to_string_pretty(&score)?);
    Ok(())
}

fn configure_threads(threads: Option<usize>) -> Result<()> {
    let Some(n) = threads else { return Ok(()) };
    if n == 0 {
        return Err(Error::Validation("--threads must be at least 1".into()));
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidInput(format!("cannot configure thread pool: {e}")))?;
    #[cfg(not(feature = "parallel"))]
    log::debug!("built without the parallel feature; ignoring --threads {n}");
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    configure_threads(cli.threads)?;
    match &cli.command {
        Command::Run(stage) => run(stage),
        Command::Dimred(stage) => run_dimred(stage),
        Command::Extract { image, stage } => run_extract(image, stage),
        Command::Hydro { lineaments, stage } => run_hydro(lineaments, stage),
        Command::Analyze {
            lineaments,
            reference,
            stage,
        } => run_analyze(lineaments, reference.as_deref(), stage),
        Command::Synth { out, seed, spec } => run_synth(out, *seed, spec.as_deref()),
        Command::Score {
            found,
            truth,
            reference,
            tol,
        } => run_score(found, truth, reference, *tol),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();

    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
