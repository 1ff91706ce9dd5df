//! Batch front-end behind the `satcoex` binary.
//!
//! Exit codes: 0 ok, 2 I/O, 3 invalid input or config, 4 numerical quality.

mod validate;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::aggregator::{
    cdf_around, load_clutter, load_geometry, run_city, run_footprint, write_csv, Category,
    PercentileRow, RunManifest, ScenarioConfig,
};
use crate::error::{Error, Result};
use crate::geomstats::{extract_stats, load_dataset, merge_and_convexify, StatsParams};

pub use validate::{run_validation, CheckResult, Fault, Level};

#[derive(Parser, Debug)]
#[command(name = "satcoex", version, about = "Aggregate U6G base-station interference at a GEO satellite")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Scenario config (TOML), or a manifest.json from an earlier run.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    /// Overrides `sampling.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Leaves wall-clock timings out of the manifest so reruns compare byte for byte.
    #[arg(long, global = true)]
    pub deterministic: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Building dataset -> azimuth-conditioned geometry statistics (JSON).
    Geostats {
        dataset: PathBuf,
        /// Output file (default: <out-dir>/geostats.json).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 5.0)]
        azimuth_step: f64,
        #[arg(long, default_value_t = 5.0)]
        height_bin: f64,
        #[arg(long, default_value_t = 20.0)]
        area_bin: f64,
        #[arg(long, default_value_t = 5.0)]
        distance_bin: f64,
        /// Facades closer than this (m) count as shared when merging buildings.
        #[arg(long, default_value_t = 0.5)]
        merge_tolerance: f64,
    },
    /// City aggregate: CDF and INR percentiles.
    City,
    /// Footprint clusters, per-cluster and aggregate INR for every urban ratio.
    Footprint,
    /// Oracle, analytic-CF and monotonicity checks.
    Validate {
        #[arg(long, value_enum, default_value_t = Level::Fast)]
        level: Level,
        /// Negative control: breaks a component on purpose.
        #[arg(long, value_enum)]
        inject_fault: Option<Fault>,
    },
}

impl ValueEnum for Level {
    fn value_variants<'a>() -> &'a [Self] {
        &[Level::Fast, Level::Full]
    }
    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(match self {
            Level::Fast => "fast",
            Level::Full => "full",
        }))
    }
}

impl ValueEnum for Fault {
    fn value_variants<'a>() -> &'a [Self] {
        &[Fault::PhaseUnwrap]
    }
    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(match self {
            Fault::PhaseUnwrap => "phase-unwrap",
        }))
    }
}

/// Parses `args`, runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 3 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let c = &cli.common;
    if let Some(n) = c.threads {
        if n == 0 {
            return Err(Error::invalid("--threads must be >= 1"));
        }
        // Fails only if a global pool already exists (e.g. a second call in one process).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match &cli.command {
        Command::Geostats { dataset, out, azimuth_step, height_bin, area_bin, distance_bin, merge_tolerance } => {
            let params = StatsParams {
                azimuth_step_deg: *azimuth_step,
                height_bin_m: *height_bin,
                area_bin_m2: *area_bin,
                distance_bin_m: *distance_bin,
            };
            let out = out.clone().unwrap_or_else(|| c.out_dir.join("geostats.json"));
            cmd_geostats(dataset, &out, params, *merge_tolerance)
        }
        Command::City => {
            let cfg = load_config(c)?;
            cmd_city(&cfg, c)
        }
        Command::Footprint => {
            let cfg = load_config(c)?;
            cmd_footprint(&cfg, c)
        }
        Command::Validate { level, inject_fault } => {
            let seed = c.seed.unwrap_or(42);
            let results = run_validation(*level, *inject_fault, seed)?;
            for r in &results {
                println!("{r}");
            }
            create_dir(&c.out_dir)?;
            let path = c.out_dir.join("validation.json");
            let s = serde_json::to_string_pretty(&results).map_err(|e| Error::invalid(e.to_string()))?;
            std::fs::write(&path, s).map_err(|e| Error::io(&path, e))?;
            let mut failed: Vec<&str> = Vec::new();
            for r in results.iter().filter(|r| !r.pass) {
                if !failed.contains(&r.invariant.as_str()) {
                    failed.push(&r.invariant);
                }
            }
            if failed.is_empty() {
                Ok(())
            } else {
                Err(Error::Numeric(format!("validation failed: {}", failed.join(", "))))
            }
        }
    }
}

/// Config from TOML, or the `config` snapshot of a run manifest.
pub fn load_config(c: &Common) -> Result<ScenarioConfig> {
    let path = c.config.as_ref().ok_or_else(|| Error::invalid("--config is required"))?;
    let mut cfg = if path.extension().is_some_and(|e| e == "json") {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Parse {
            file: path.display().to_string(),
            line: e.line(),
            msg: e.to_string(),
        })?;
        let snap = v.get("config").cloned().ok_or_else(|| Error::invalid("manifest has no config"))?;
        let cfg: ScenarioConfig = serde_json::from_value(snap).map_err(|e| Error::Parse {
            file: path.display().to_string(),
            line: 0,
            msg: e.to_string(),
        })?;
        cfg.validate()?;
        cfg
    } else {
        ScenarioConfig::load(path)?
    };
    if let Some(s) = c.seed {
        cfg.sampling.seed = s;
    }
    Ok(cfg)
}

fn create_dir(p: &Path) -> Result<()> {
    std::fs::create_dir_all(p).map_err(|e| Error::io(p, e))
}

pub fn cmd_geostats(dataset: &Path, out: &Path, params: StatsParams, merge_tol: f64) -> Result<()> {
    let polys = load_dataset(dataset)?;
    let merged = merge_and_convexify(&polys, merge_tol)?;
    let stats = extract_stats(&merged, params)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    stats.save(out)?;
    println!("{} polygons ({} after merging) -> {}", polys.len(), merged.len(), out.display());
    Ok(())
}

#[derive(Serialize)]
struct CdfRow<'a> {
    series: &'a str,
    interference_dbm: f64,
    psd_dbm_per_mhz: f64,
    inr_db: f64,
    cdf: f64,
}

#[derive(Serialize)]
struct InrRow {
    series: String,
    ratio_urban: Option<f64>,
    percentile: f64,
    level_dbm: f64,
    psd_dbm_per_mhz: f64,
    inr_db: f64,
    exceeds_threshold: bool,
}

fn psd_offset(cfg: &ScenarioConfig) -> f64 {
    10.0 * (cfg.bandwidth_hz / 1e6).log10()
}

fn cdf_rows<'a>(series: &'a str, cdf: &crate::distengine::Cdf, cfg: &ScenarioConfig) -> Vec<CdfRow<'a>> {
    cdf.x
        .iter()
        .zip(&cdf.cdf)
        .map(|(&x, &p)| {
            let dbm = 10.0 * x.log10();
            CdfRow {
                series,
                interference_dbm: dbm,
                psd_dbm_per_mhz: dbm - psd_offset(cfg),
                inr_db: dbm - cfg.noise_dbm(),
                cdf: p,
            }
        })
        .collect()
}

/// Largest isotonic correction tolerated before a run is flagged.
const MAX_CDF_ADJUSTMENT: f64 = 0.02;

fn finish(mut manifest: RunManifest, c: &Common, outputs: Vec<PathBuf>) -> Result<()> {
    manifest.outputs = outputs;
    manifest.deterministic = c.deterministic;
    if c.deterministic {
        manifest.timings.iter_mut().for_each(|t| t.seconds = 0.0);
        manifest.threads = 0;
    }
    let path = c.out_dir.join("manifest.json");
    manifest.outputs.push(path.clone());
    manifest.write(&path)?;
    if manifest.quality.cdf_max_adjustment > MAX_CDF_ADJUSTMENT {
        return Err(Error::Numeric(format!(
            "CDF needed a monotonicity correction of {:.3} (limit {MAX_CDF_ADJUSTMENT}); increase sampling.points_per_decade",
            manifest.quality.cdf_max_adjustment
        )));
    }
    Ok(())
}

pub fn cmd_city(cfg: &ScenarioConfig, c: &Common) -> Result<()> {
    let mut m = RunManifest::new("city", cfg);
    let stats = m.time("geometry", || load_geometry(cfg))?;
    let geo = stats.at(cfg.sat_azimuth_deg);
    let clutter = m.time("clutter", || load_clutter(cfg, &geo))?;
    let run = m.time("aggregate", || run_city(cfg, &geo, clutter.as_ref()))?;

    let mut series = vec![("aggregate".to_string(), run.cdf.clone())];
    for cat in Category::ALL {
        if let Some((cf, mean)) = run.aggregate.category(cat)? {
            series.push((cat.label(), cdf_around(&cf, mean, 400)?));
        }
    }
    create_dir(&c.out_dir)?;
    let cdf_path = c.out_dir.join("city_cdf.csv");
    let rows: Vec<CdfRow> = series.iter().flat_map(|(s, cdf)| cdf_rows(s, cdf, cfg)).collect();
    write_csv(&cdf_path, &rows)?;
    let inr_path = c.out_dir.join("city_inr.csv");
    let inr: Vec<InrRow> = run
        .percentiles
        .iter()
        .map(|p| InrRow {
            series: "aggregate".into(),
            ratio_urban: None,
            percentile: p.percentile,
            level_dbm: p.level_dbm,
            psd_dbm_per_mhz: p.level_dbm - psd_offset(cfg),
            inr_db: p.inr_db,
            exceeds_threshold: p.inr_db > cfg.inr_threshold_db,
        })
        .collect();
    write_csv(&inr_path, &inr)?;

    for p in &run.percentiles {
        println!("{:>4.0}th percentile: I = {:.2} dBm, INR = {:.2} dB", p.percentile, p.level_dbm, p.inr_db);
    }
    println!("Q = {:.2}, mean = {:.2} dBm", run.q, 10.0 * run.mean_mw.log10());
    m.quality.cdf_max_adjustment = series.iter().map(|s| s.1.max_adjustment).fold(0.0, f64::max);
    m.quality.truncation_estimate = run.cdf.truncation_estimate;
    m.quality.cf_cutoff_omega = run.cf.omega().last().copied().unwrap_or(0.0);
    m.summary = serde_json::json!({
        "q": run.q,
        "mean_dbm": 10.0 * run.mean_mw.log10(),
        "noise_dbm": cfg.noise_dbm(),
        "alpha_db": run.link.alpha_db,
        "percentiles": run.percentiles,
    });
    finish(m, c, vec![cdf_path, inr_path])
}

#[derive(Serialize)]
struct ClusterRow {
    cluster: usize,
    sat_gain_dbi: f64,
    elevation_deg: f64,
    area_km2: f64,
    mean_slant_km: f64,
    q_unit: f64,
    alpha_db: f64,
}

pub fn cmd_footprint(cfg: &ScenarioConfig, c: &Common) -> Result<()> {
    let mut m = RunManifest::new("footprint", cfg);
    let t = Instant::now();
    let stats = m.time("geometry", || load_geometry(cfg))?;
    let geo = stats.at(cfg.sat_azimuth_deg);
    let clutter = m.time("clutter", || load_clutter(cfg, &geo))?;
    let fp = m.time("footprint", || run_footprint(cfg, &geo, clutter.as_ref()))?;

    create_dir(&c.out_dir)?;
    let cl_path = c.out_dir.join("clusters.csv");
    let rows: Vec<ClusterRow> = fp
        .links
        .iter()
        .zip(&fp.clusters)
        .map(|(l, g)| ClusterRow {
            cluster: l.cluster,
            sat_gain_dbi: l.sat_gain_dbi,
            elevation_deg: l.elevation_deg,
            area_km2: l.area_km2,
            mean_slant_km: g.mean_slant_m / 1e3,
            q_unit: l.q_unit,
            alpha_db: l.link.alpha_db,
        })
        .collect();
    write_csv(&cl_path, &rows)?;

    let names: Vec<String> = fp.links.iter().map(|l| format!("GC{}", l.cluster)).collect();
    let mut inr = Vec::new();
    let mut cdfs = Vec::new();
    let mut max_adj = 0.0f64;
    for r in &fp.runs {
        let mut push = |series: &str, rows: &[PercentileRow]| {
            for p in rows {
                inr.push(InrRow {
                    series: series.to_string(),
                    ratio_urban: Some(r.ratio_urban),
                    percentile: p.percentile,
                    level_dbm: p.level_dbm,
                    psd_dbm_per_mhz: p.level_dbm - psd_offset(cfg),
                    inr_db: p.inr_db,
                    exceeds_threshold: p.inr_db > cfg.inr_threshold_db,
                });
            }
        };
        push("aggregate", &r.aggregate);
        for (name, (_, rows)) in names.iter().zip(&r.clusters) {
            push(name, rows);
        }
        let cf = fp.cf(r.ratio_urban)?;
        let cdf = cdf_around(&cf, r.aggregate_mean_mw, 400)?;
        max_adj = max_adj.max(cdf.max_adjustment);
        cdfs.push((r.ratio_urban, cdf));
    }
    let inr_path = c.out_dir.join("footprint_inr.csv");
    write_csv(&inr_path, &inr)?;

    #[derive(Serialize)]
    struct FpCdfRow {
        ratio_urban: f64,
        interference_dbm: f64,
        psd_dbm_per_mhz: f64,
        inr_db: f64,
        cdf: f64,
    }
    let cdf_path = c.out_dir.join("footprint_cdf.csv");
    let rows: Vec<FpCdfRow> = cdfs
        .iter()
        .flat_map(|(r, cdf)| {
            cdf_rows("aggregate", cdf, cfg).into_iter().map(move |x| FpCdfRow {
                ratio_urban: *r,
                interference_dbm: x.interference_dbm,
                psd_dbm_per_mhz: x.psd_dbm_per_mhz,
                inr_db: x.inr_db,
                cdf: x.cdf,
            })
        })
        .collect();
    write_csv(&cdf_path, &rows)?;

    for l in &fp.links {
        println!(
            "GC{}: G_s {:.0} dBi, psi_s {:.0} deg, {:.0} km2",
            l.cluster, l.sat_gain_dbi, l.elevation_deg, l.area_km2
        );
    }
    for r in &fp.runs {
        let p: Vec<String> = r.aggregate.iter().map(|p| format!("{:.0}th {:.2} dB", p.percentile, p.inr_db)).collect();
        println!("R_a {:.3}: mean {:.2} dBm, INR {}", r.ratio_urban, 10.0 * r.aggregate_mean_mw.log10(), p.join(", "));
    }
    log::info!("footprint done in {:.1}s", t.elapsed().as_secs_f64());
    m.quality.cdf_max_adjustment = max_adj;
    m.quality.cf_cutoff_omega = fp.per_cluster.first().and_then(|a| a.grid.values().last().copied()).unwrap_or(0.0);
    m.summary = serde_json::json!({
        "clusters": fp.clusters.len(),
        "ratio_urban": fp.runs.iter().map(|r| serde_json::json!({
            "ratio_urban": r.ratio_urban,
            "mean_dbm": 10.0 * r.aggregate_mean_mw.log10(),
            "percentiles": r.aggregate,
        })).collect::<Vec<_>>(),
    });
    finish(m, c, vec![cl_path, inr_path, cdf_path])
}
