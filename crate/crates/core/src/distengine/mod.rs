//! dB-domain distributions, characteristic functions and their inversion.

pub mod cf;
pub mod db;
pub mod gilpelaez;

pub use cf::{
    cf_from_linear, cf_from_linear_with_floor, cf_pow, cf_product, cf_weighted_product, CharFn,
    OmegaGrid, LOG_FLOOR, POINTS_PER_DECADE,
};
pub use db::{
    db_convolve, db_mixture, db_to_linear, DbDistribution, DbUnit, LinearDistribution,
    DEFAULT_STEP_DB, FLOOR_DB,
};
pub use gilpelaez::{cf_quantile, gil_pelaez_cdf, isotonic, log_grid, raw_cdf, Cdf};
