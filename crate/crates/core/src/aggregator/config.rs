//! Scenario configuration (TOML). Keys follow the usual simulation-parameter
//! names; every field has a default so a config only lists what it changes.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::footprint::TessellationParams;
use crate::antenna::{ArrayConfig, BsClass};
use crate::error::{Error, Result};
use crate::geomstats::{CityParams, StatsParams};
use crate::linkbudget::{fspl, noise_floor, SatGeometry};
use crate::modes::{InterferenceMode, Placement};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Array gain plus clutter gain, one positive and one negative mode.
    #[default]
    Smi,
    /// Clutter-free, all modes weighted by their occurrence probability.
    Gsmi,
    /// As `Gsmi`, with a reflection-gain draw per bounce.
    GsmiReflection,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RangeMode {
    /// One slant range (`sat_distance_m`) for every cluster.
    #[default]
    Fixed,
    /// Each cluster uses the mean slant range of its pixels.
    PerCluster,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    /// Geometry statistics file; when absent a synthetic city is generated.
    pub stats: Option<PathBuf>,
    pub city: CityParams,
    pub stats_params: StatsParams,
    pub merge_tolerance_m: f64,
    pub seed: u64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig {
            stats: None,
            city: CityParams::default(),
            stats_params: StatsParams::default(),
            merge_tolerance_m: 0.5,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClutterConfig {
    pub table: Option<PathBuf>,
    /// Generate a knife-edge table when no file is given.
    pub synthetic: bool,
    pub elevations_deg: Vec<f64>,
    pub bs_heights_m: Vec<f64>,
    pub n_samples: usize,
}

impl Default for ClutterConfig {
    fn default() -> Self {
        ClutterConfig {
            table: None,
            synthetic: false,
            elevations_deg: vec![10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0],
            bs_heights_m: (1..=16).map(|k| 5.0 * k as f64).collect(),
            n_samples: 20_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    /// Gain draws per mode and category.
    pub n_theta: usize,
    /// Cross-section draws per occurrence probability.
    pub n_occurrence: usize,
    pub points_per_decade: usize,
    pub step_db: f64,
    pub seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig { n_theta: 50_000, n_occurrence: 50_000, points_per_decade: 2048, step_db: 0.25, seed: 42 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayOverrides {
    #[serde(rename = "macro")]
    pub macro_bs: ArrayConfig,
    pub micro: ArrayConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct FootprintConfig {
    pub satellite: SatGeometry,
    pub tessellation: TessellationParams,
    pub range: RangeMode,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub method: Method,
    pub frequency_hz: f64,
    pub bandwidth_hz: f64,
    pub sat_azimuth_deg: f64,
    /// Satellite elevation seen from the city (city runs).
    pub sat_elevation_deg: f64,
    /// Satellite gain toward the city (city runs).
    pub sat_gain_dbi: f64,
    pub sat_distance_m: f64,
    pub cell_radius_m: f64,
    /// Macro BS density per m^2; default one macro per three hexagonal cells.
    pub density_per_m2: Option<f64>,
    pub area_km2: f64,
    pub loading: f64,
    pub tdd_activity: f64,
    /// Fraction of outdoor UEs.
    pub outdoor_fraction: f64,
    pub ratio_urban: Vec<f64>,
    pub ratio_built: f64,
    pub t_sys_k: f64,
    pub inr_threshold_db: f64,
    pub polarization_loss_db: f64,
    pub micro_per_macro: f64,
    /// Fixes the macro BS count of a city run instead of area x density.
    pub q_override: Option<f64>,
    /// Pins every occurrence probability (GSMI), mainly for oracle runs.
    pub occurrence_override: Option<f64>,
    pub array_config: u8,
    pub arrays: Option<ArrayOverrides>,
    pub bs_classes: Vec<BsClass>,
    /// Restricts the mode set (all applicable modes when absent).
    pub modes: Option<Vec<InterferenceMode>>,
    pub placement: Placement,
    pub percentiles: Vec<f64>,
    pub geometry: GeometryConfig,
    pub clutter: ClutterConfig,
    pub sampling: SamplingConfig,
    pub footprint: FootprintConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            method: Method::Smi,
            frequency_hz: 6e9,
            bandwidth_hz: 100e6,
            sat_azimuth_deg: 45.0,
            sat_elevation_deg: 40.0,
            sat_gain_dbi: 20.0,
            sat_distance_m: 35_000e3,
            cell_radius_m: 300.0,
            density_per_m2: None,
            area_km2: 181.76,
            loading: 0.2,
            tdd_activity: 0.75,
            outdoor_fraction: 0.3,
            ratio_urban: vec![0.05, 0.10],
            ratio_built: 0.01,
            t_sys_k: 800.0,
            inr_threshold_db: -10.5,
            polarization_loss_db: 3.0,
            micro_per_macro: 9.0,
            q_override: None,
            occurrence_override: None,
            array_config: 1,
            arrays: None,
            bs_classes: vec![BsClass::Macro, BsClass::Micro],
            modes: None,
            placement: Placement::SingleStreet,
            percentiles: vec![50.0, 80.0],
            geometry: GeometryConfig::default(),
            clutter: ClutterConfig::default(),
            sampling: SamplingConfig::default(),
            footprint: FootprintConfig::default(),
        }
    }
}

/// Area of a hexagonal macro cell whose side is half the cell radius.
pub fn hex_cell_area(cell_radius_m: f64) -> f64 {
    let side = cell_radius_m / 2.0;
    1.5 * 3f64.sqrt() * side * side
}

impl ScenarioConfig {
    /// Ten macro BSs (five indoor, five outdoor), DP and GR modes, synthetic
    /// clutter at 40 deg only. Small enough for brute-force Monte-Carlo.
    pub fn toy(method: Method) -> Self {
        let mut c = ScenarioConfig {
            method,
            q_override: Some(10.0),
            outdoor_fraction: 0.5,
            bs_classes: vec![BsClass::Macro],
            modes: Some(vec![InterferenceMode::DP, InterferenceMode::GR]),
            ..Default::default()
        };
        c.clutter.synthetic = true;
        c.clutter.elevations_deg = vec![40.0];
        c.clutter.n_samples = 5000;
        c
    }

    /// Parses and validates; relative paths are resolved against the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text, &path.display().to_string())?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.geometry.stats, &mut cfg.clutter.table].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse(text: &str, name: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e.span().map_or(0, |s| text[..s.start].lines().count().max(1));
            Error::Parse { file: name.to_string(), line, msg: e.message().to_string() }
        })
    }

    /// Collects every problem before failing.
    pub fn validate(&self) -> Result<()> {
        let mut errs: Vec<String> = Vec::new();
        let mut unit = |name: &str, v: f64| {
            if !(0.0..=1.0).contains(&v) {
                errs.push(format!("{name} = {v} must lie in [0, 1]"));
            }
        };
        unit("loading", self.loading);
        unit("tdd_activity", self.tdd_activity);
        unit("outdoor_fraction", self.outdoor_fraction);
        unit("ratio_built", self.ratio_built);
        for &r in &self.ratio_urban {
            unit("ratio_urban", r);
        }
        if let Some(p) = self.occurrence_override {
            unit("occurrence_override", p);
        }
        let positive = [
            ("frequency_hz", self.frequency_hz),
            ("bandwidth_hz", self.bandwidth_hz),
            ("sat_distance_m", self.sat_distance_m),
            ("cell_radius_m", self.cell_radius_m),
            ("t_sys_k", self.t_sys_k),
            ("sampling.step_db", self.sampling.step_db),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                errs.push(format!("{name} = {v} must be positive"));
            }
        }
        if !(self.area_km2 >= 0.0) {
            errs.push("area_km2 must be >= 0".into());
        }
        if !(self.sat_elevation_deg > 0.0 && self.sat_elevation_deg <= 90.0) {
            errs.push(format!("sat_elevation_deg = {} must be in (0, 90]", self.sat_elevation_deg));
        }
        if self.density_per_m2.is_some_and(|l| !(l > 0.0)) {
            errs.push("density_per_m2 must be positive".into());
        }
        if self.q_override.is_some_and(|q| !(q >= 0.0)) {
            errs.push("q_override must be >= 0".into());
        }
        if !(self.micro_per_macro >= 0.0) {
            errs.push("micro_per_macro must be >= 0".into());
        }
        if !matches!(self.array_config, 1 | 2) && self.arrays.is_none() {
            errs.push(format!("array_config = {} (expected 1 or 2, or an [arrays] table)", self.array_config));
        }
        if let Some(a) = &self.arrays {
            for (n, c) in [("arrays.macro", &a.macro_bs), ("arrays.micro", &a.micro)] {
                if let Err(e) = c.validate() {
                    errs.push(format!("{n}: {e}"));
                }
            }
        }
        if self.bs_classes.is_empty() {
            errs.push("bs_classes is empty".into());
        }
        if self.modes.as_ref().is_some_and(|m| m.is_empty()) {
            errs.push("modes is empty".into());
        }
        if self.percentiles.iter().any(|p| !(*p > 0.0 && *p < 100.0)) {
            errs.push("percentiles must lie in (0, 100)".into());
        }
        if self.sampling.n_theta < 100 || self.sampling.n_occurrence < 100 {
            errs.push("sampling.n_theta and sampling.n_occurrence must be >= 100".into());
        }
        if self.sampling.points_per_decade < 16 {
            errs.push("sampling.points_per_decade must be >= 16".into());
        }
        match self.method {
            Method::Smi => {
                if self.clutter.table.is_none() && !self.clutter.synthetic {
                    errs.push("method = \"smi\" needs clutter.table or clutter.synthetic = true".into());
                }
            }
            Method::GsmiReflection => {
                if self.clutter.table.is_none() {
                    errs.push("method = \"gsmi_reflection\" needs clutter.table with reflection entries".into());
                }
            }
            Method::Gsmi => {}
        }
        if self.clutter.synthetic && (self.clutter.elevations_deg.is_empty() || self.clutter.bs_heights_m.is_empty()) {
            errs.push("synthetic clutter needs elevations_deg and bs_heights_m".into());
        }
        if let Err(e) = self.footprint.satellite.validate() {
            errs.push(format!("footprint.satellite: {e}"));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::invalid(format!("{} configuration error(s):\n  {}", errs.len(), errs.join("\n  "))))
        }
    }

    pub fn array(&self, class: BsClass) -> ArrayConfig {
        match &self.arrays {
            Some(a) => match class {
                BsClass::Macro => a.macro_bs.clone(),
                BsClass::Micro => a.micro.clone(),
            },
            None => ArrayConfig::preset(self.array_config, class),
        }
    }

    /// Macro BSs per m^2.
    pub fn density(&self) -> f64 {
        self.density_per_m2.unwrap_or_else(|| 1.0 / (3.0 * hex_cell_area(self.cell_radius_m)))
    }

    /// Expected number of full-power macro BSs in the city.
    pub fn city_q(&self) -> f64 {
        self.q_override
            .unwrap_or_else(|| self.area_km2 * 1e6 * self.density() * self.loading * self.tdd_activity)
    }

    /// Expected full-power macro BSs over `area_m2` of footprint for urban ratio `r_a`.
    pub fn cluster_q(&self, area_m2: f64, r_a: f64) -> f64 {
        self.density() * self.loading * self.tdd_activity * r_a * self.ratio_built * area_m2
    }

    pub fn noise_dbm(&self) -> f64 {
        noise_floor(self.t_sys_k, self.bandwidth_hz)
    }

    pub fn path_loss_db(&self) -> f64 {
        fspl(self.sat_distance_m, self.frequency_hz)
    }

    /// BS count multiplier of a class relative to macro sites.
    pub fn class_multiplier(&self, class: BsClass) -> f64 {
        match class {
            BsClass::Macro => 1.0,
            BsClass::Micro => self.micro_per_macro,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn milan_q() {
        let c = ScenarioConfig::default();
        assert!((hex_cell_area(300.0) - 58_456.7).abs() < 0.1);
        assert!((c.density() - 5.7024e-6).abs() < 1e-9);
        assert!((c.city_q() - 155.47).abs() < 0.01);
        assert!((c.cluster_q(3_812_552e6, 0.05) - 1630.6).abs() < 0.1);
    }

    #[test]
    fn validation_lists_all_errors() {
        let c = ScenarioConfig { loading: 1.5, bandwidth_hz: -1.0, ..Default::default() };
        let e = c.validate().unwrap_err().to_string();
        assert!(e.contains("loading") && e.contains("bandwidth_hz") && e.contains("clutter"), "{e}");
    }

    #[test]
    fn toml_round_trip() {
        let mut c = ScenarioConfig::default();
        c.clutter.synthetic = true;
        let text = toml::to_string(&c).unwrap();
        assert_eq!(ScenarioConfig::parse(&text, "rt").unwrap(), c);
        assert!(ScenarioConfig::parse("bogus = 1", "x").is_err());
    }
}
