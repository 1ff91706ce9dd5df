//! Aggregate uplink interference from terrestrial upper-6 GHz base stations at a
//! geostationary satellite, computed with characteristic functions.
//!
//! The pipeline: building footprints become azimuth-conditioned geometry
//! statistics ([`geomstats`]); array gains ([`antenna`]), clutter or
//! occurrence probabilities ([`clutter`], [`modes`]) and the satellite link
//! budget ([`linkbudget`]) give per-BS interference distributions in dB; those
//! are converted to characteristic functions, raised to the expected BS counts
//! and multiplied ([`distengine`], [`aggregator`]), then inverted to a CDF.

pub mod aggregator;
pub mod antenna;
pub mod cli;
pub mod clutter;
pub mod distengine;
pub mod error;
pub mod geomstats;
pub mod linkbudget;
pub mod modes;
pub mod rng;

pub use error::{Error, Result};
