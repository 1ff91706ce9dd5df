//! Building polygons to azimuth-conditioned height / area / street-width
//! histograms, on a Manhattan grid and on a synthetic city.
//!
//!     cargo run --release --example geometry_stats

use satcoex::geomstats::{extract_stats, manhattan_grid, merge_and_convexify, synthetic_city, CityParams, StatsParams};

fn main() -> satcoex::Result<()> {
    // 20 m blocks, 20 m streets, 20 m tall: every histogram collapses to a delta.
    let grid = manhattan_grid(8, 20.0, 20.0, 20.0)?;
    let p = StatsParams { height_bin_m: 20.0, distance_bin_m: 20.0, area_bin_m2: 400.0, ..Default::default() };
    let s = extract_stats(&merge_and_convexify(&grid, 0.5)?, p)?;
    let east = s.at(90.0);
    println!("manhattan, facades facing east:");
    println!("  height   mode {:.0} m  mean {:.2} m", east.height.center(east.height.mode_bin().unwrap()), east.height.mean());
    println!("  distance mode {:.0} m  mean {:.2} m", east.distance.center(east.distance.mode_bin().unwrap()), east.distance.mean());

    let city = synthetic_city(CityParams::default(), 1)?;
    let merged = merge_and_convexify(&city, 0.5)?;
    let s = extract_stats(&merged, StatsParams::default())?;
    println!("synthetic city: {} buildings, {} after merging", city.len(), merged.len());
    // Street-grid cities only have facades facing a few azimuths.
    println!("{:>8} {:>10} {:>12}", "azimuth", "mean h (m)", "mean d (m)");
    for b in s.bins.iter().filter(|b| !b.hist.height.empty) {
        println!("{:>8.0} {:>10.1} {:>12.1}", b.azimuth_deg, b.hist.height.mean(), b.hist.distance.mean());
    }
    Ok(())
}
