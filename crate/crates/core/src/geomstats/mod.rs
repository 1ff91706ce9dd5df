//! Building footprints to azimuth-conditioned geometry statistics.

mod merge;
mod polygon;
mod stats;

use rand::Rng;

pub use merge::{convex_hull, merge_and_convexify};
pub use polygon::{load_dataset, parse_record, write_dataset, BuildingPolygon, Point};
pub use stats::{extract_stats, AzimuthBin, AzimuthHistograms, GeoStats, Histogram1D, StatsParams};

use crate::error::Result;
use crate::rng;

/// `n x n` square buildings of side `side`, separated by streets of width
/// `street`, all of height `height`, lower-left building at the origin.
pub fn manhattan_grid(n: usize, side: f64, street: f64, height: f64) -> Result<Vec<BuildingPolygon>> {
    let pitch = side + street;
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            out.push(BuildingPolygon::rect(i as f64 * pitch, j as f64 * pitch, side, side, height)?);
        }
    }
    Ok(out)
}

/// Parameters of [`synthetic_city`].
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CityParams {
    pub blocks_x: usize,
    pub blocks_y: usize,
    pub block_side_m: (f64, f64),
    pub street_m: (f64, f64),
    /// Median and log-spread of building heights.
    pub height_median_m: f64,
    pub height_sigma: f64,
    pub max_height_m: f64,
    pub rotation_deg: f64,
}

impl Default for CityParams {
    fn default() -> Self {
        CityParams {
            blocks_x: 12,
            blocks_y: 12,
            block_side_m: (40.0, 90.0),
            street_m: (12.0, 30.0),
            height_median_m: 18.0,
            height_sigma: 0.45,
            max_height_m: 80.0,
            rotation_deg: 0.0,
        }
    }
}

/// Irregular block grid whose blocks are split into abutting buildings of
/// log-normal height. Not any real city; a stand-in dataset for examples.
pub fn synthetic_city(params: CityParams, seed: u64) -> Result<Vec<BuildingPolygon>> {
    let mut r = rng::substream(seed, 0);
    let mut xs = vec![0.0];
    for _ in 0..params.blocks_x {
        let last = *xs.last().unwrap();
        xs.push(last + r.random_range(params.block_side_m.0..=params.block_side_m.1));
        xs.push(xs.last().unwrap() + r.random_range(params.street_m.0..=params.street_m.1));
    }
    let mut ys = vec![0.0];
    for _ in 0..params.blocks_y {
        let last = *ys.last().unwrap();
        ys.push(last + r.random_range(params.block_side_m.0..=params.block_side_m.1));
        ys.push(ys.last().unwrap() + r.random_range(params.street_m.0..=params.street_m.1));
    }
    let mut out = Vec::new();
    for bx in 0..params.blocks_x {
        for by in 0..params.blocks_y {
            let (x0, x1) = (xs[2 * bx], xs[2 * bx + 1]);
            let (y0, y1) = (ys[2 * by], ys[2 * by + 1]);
            let parts = r.random_range(1..=3usize);
            let mut cuts: Vec<f64> = (0..parts - 1).map(|_| r.random_range(0.25..0.75)).collect();
            cuts.sort_by(f64::total_cmp);
            let mut edges = vec![0.0];
            edges.extend(cuts);
            edges.push(1.0);
            for w in edges.windows(2) {
                let z: f64 = standard_normal(&mut r);
                let h = (params.height_median_m * (params.height_sigma * z).exp()).clamp(3.0, params.max_height_m);
                let (a, b) = (x0 + w[0] * (x1 - x0), x0 + w[1] * (x1 - x0));
                out.push(BuildingPolygon::rect(a, y0, b - a, y1 - y0, h.round())?.rotated(params.rotation_deg));
            }
        }
    }
    Ok(out)
}

fn standard_normal<R: Rng + ?Sized>(r: &mut R) -> f64 {
    let u1: f64 = 1.0 - r.random::<f64>();
    let u2: f64 = r.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}
