//! Footprint tessellation into clusters of equal (quantized) satellite gain
//! and elevation.
//!
//!     cargo run --release --example tessellation

use satcoex::aggregator::{tessellate_footprint, TessellationParams};
use satcoex::linkbudget::SatGeometry;

fn main() -> satcoex::Result<()> {
    let t = std::time::Instant::now();
    let clusters = tessellate_footprint(&SatGeometry::default(), &TessellationParams::default())?;
    println!("{:>3} {:>6} {:>6} {:>12} {:>7} {:>10}", "GC", "G_s", "psi_s", "area km2", "pixels", "slant km");
    for (i, c) in clusters.iter().enumerate() {
        println!(
            "{:>3} {:>6.0} {:>6.0} {:>12.0} {:>7} {:>10.0}",
            i + 1,
            c.sat_gain_dbi,
            c.elevation_deg,
            c.area_m2 / 1e6,
            c.pixels.len(),
            c.mean_slant_m / 1e3
        );
    }
    println!("{} clusters in {:.2}s", clusters.len(), t.elapsed().as_secs_f64());
    Ok(())
}
