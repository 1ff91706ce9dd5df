//! Inputs resolved from a config, CSV writers and the run manifest.

use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{Method, ScenarioConfig};
use crate::clutter::{synthetic_table, ClutterTable};
use crate::error::{Error, Result};
use crate::geomstats::{extract_stats, merge_and_convexify, synthetic_city, AzimuthHistograms, GeoStats};

/// Geometry statistics from the configured file, or from a synthetic city.
pub fn load_geometry(cfg: &ScenarioConfig) -> Result<GeoStats> {
    match &cfg.geometry.stats {
        Some(p) => GeoStats::load(p),
        None => {
            let polys = synthetic_city(cfg.geometry.city, cfg.geometry.seed)?;
            let merged = merge_and_convexify(&polys, cfg.geometry.merge_tolerance_m)?;
            extract_stats(&merged, cfg.geometry.stats_params)
        }
    }
}

/// Clutter table required by the method: loaded, synthesized, or none (GSMI).
pub fn load_clutter(cfg: &ScenarioConfig, geo: &AzimuthHistograms) -> Result<Option<ClutterTable>> {
    if cfg.method == Method::Gsmi {
        return Ok(None);
    }
    if let Some(p) = &cfg.clutter.table {
        return ClutterTable::load(p).map(Some);
    }
    if cfg.clutter.synthetic && cfg.method == Method::Smi {
        return synthetic_table(
            geo,
            &cfg.clutter.elevations_deg,
            &cfg.clutter.bs_heights_m,
            cfg.frequency_hz,
            cfg.clutter.n_samples,
            cfg.sampling.seed ^ 0xC1u64,
        )
        .map(Some);
    }
    Err(Error::MissingClutter {
        sign: "any".into(),
        kind: if cfg.method == Method::Smi { "clutter" } else { "reflection" }.into(),
        elevation_deg: cfg.sat_elevation_deg,
        bs_height_m: f64::NAN,
    })
}

/// Serializes rows to CSV (header from the field names).
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::invalid(format!("{}: {other:?}", path.display())),
    }
}

#[derive(Clone, Debug, Serialize, Default)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize, Default)]
pub struct QualityMetrics {
    /// Largest isotonic correction applied to an inverted CDF.
    pub cdf_max_adjustment: f64,
    /// Largest frequency carried by the reported CFs.
    pub cf_cutoff_omega: f64,
    pub truncation_estimate: f64,
}

/// Everything needed to reproduce a run's outputs.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: ScenarioConfig,
    pub seeds: Vec<(String, u64)>,
    pub threads: usize,
    pub deterministic: bool,
    pub timings: Vec<StageTiming>,
    pub outputs: Vec<PathBuf>,
    pub quality: QualityMetrics,
    pub summary: serde_json::Value,
}

impl RunManifest {
    pub fn new(command: &str, config: &ScenarioConfig) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config: config.clone(),
            seeds: vec![("sampling".into(), config.sampling.seed), ("geometry".into(), config.geometry.seed)],
            threads: rayon::current_num_threads(),
            deterministic: false,
            timings: Vec::new(),
            outputs: Vec::new(),
            quality: QualityMetrics::default(),
            summary: serde_json::Value::Null,
        }
    }

    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let t = std::time::Instant::now();
        let out = f();
        self.timings.push(StageTiming { stage: stage.into(), seconds: t.elapsed().as_secs_f64() });
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let s = serde_json::to_string_pretty(self).map_err(|e| Error::invalid(e.to_string()))?;
        std::fs::write(path, s).map_err(|e| Error::io(path, e))
    }
}
