//! Scenario configuration, the city and footprint pipelines, run outputs and
//! the Monte-Carlo oracle.

mod config;
mod footprint;
mod oracle;
mod output;
mod pipeline;

pub use config::{
    hex_cell_area, ArrayOverrides, ClutterConfig, FootprintConfig, GeometryConfig, Method, RangeMode,
    SamplingConfig, ScenarioConfig,
};
pub use footprint::{pixel_area, tessellate_footprint, GeographicCluster, LandMask, TessellationParams};
pub use oracle::{ks_distance, mc_oracle, ModeCounting};
pub use output::{load_clutter, load_geometry, write_csv, QualityMetrics, RunManifest, StageTiming};
pub use pipeline::{
    category_cf, category_terms, category_weight, cdf_around, choose_grid, city_cf, inr_percentile, level_percentile,
    mode_set, mode_weight, per_mode_distribution, run_city, run_footprint, term_cf, ue_model, Aggregate, Category,
    CityRun, ClusterLink, FootprintRatioRun, FootprintRun, ModeTerm, PercentileRow,
};
