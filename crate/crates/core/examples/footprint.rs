//! Satellite footprint: geographic clusters and per-cluster / aggregate INR
//! for each urban ratio.
//!
//!     cargo run --release --example footprint -- [config.toml]

use satcoex::aggregator::{load_clutter, load_geometry, run_footprint, ScenarioConfig};

fn main() -> satcoex::Result<()> {
    let cfg = match std::env::args().nth(1) {
        Some(p) => ScenarioConfig::load(p)?,
        None => {
            let mut c = ScenarioConfig::default();
            c.clutter.synthetic = true;
            c
        }
    };
    let t = std::time::Instant::now();
    let stats = load_geometry(&cfg)?;
    let geo = stats.at(cfg.sat_azimuth_deg);
    let clutter = load_clutter(&cfg, &geo)?;
    println!("inputs ready in {:.1}s", t.elapsed().as_secs_f64());
    let fp = run_footprint(&cfg, &geo, clutter.as_ref())?;
    println!("{:>3} {:>6} {:>6} {:>12} {:>9}", "GC", "G_s", "psi_s", "area km2", "Q(R_a=1)");
    for l in &fp.links {
        println!("{:>3} {:>6.0} {:>6.0} {:>12.0} {:>9.1}", l.cluster, l.sat_gain_dbi, l.elevation_deg, l.area_km2, l.q_unit);
    }
    for r in &fp.runs {
        println!("R_a = {:.2}: mean {:.3} dBm", r.ratio_urban, 10.0 * r.aggregate_mean_mw.log10());
        for p in &r.aggregate {
            println!("  aggregate {:>4.0}th percentile INR {:7.2} dB", p.percentile, p.inr_db);
        }
        for (i, (_, rows)) in r.clusters.iter().enumerate() {
            let cells: Vec<String> = rows.iter().map(|p| format!("{:.2}", p.inr_db)).collect();
            println!("  GC{} INR {}", i + 1, cells.join(" / "));
        }
    }
    println!("total {:.1}s", t.elapsed().as_secs_f64());
    Ok(())
}
