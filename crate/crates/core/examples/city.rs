//! City aggregate with the default (Milan-sized) parameters: Q, the mean, and
//! INR percentiles for SMI and GSMI.
//!
//!     cargo run --release --example city -- [config.toml]

use satcoex::aggregator::{load_clutter, load_geometry, run_city, Method, ScenarioConfig};

fn main() -> satcoex::Result<()> {
    let base = match std::env::args().nth(1) {
        Some(p) => ScenarioConfig::load(p)?,
        None => {
            let mut c = ScenarioConfig::default();
            c.clutter.synthetic = true;
            c
        }
    };
    for method in [Method::Smi, Method::Gsmi] {
        let cfg = ScenarioConfig { method, ..base.clone() };
        let t = std::time::Instant::now();
        let stats = load_geometry(&cfg)?;
        let geo = stats.at(cfg.sat_azimuth_deg);
        let clutter = load_clutter(&cfg, &geo)?;
        let run = run_city(&cfg, &geo, clutter.as_ref())?;
        println!("{method:?}: Q = {:.1}, mean {:.2} dBm ({:.1}s)", run.q, 10.0 * run.mean_mw.log10(), t.elapsed().as_secs_f64());
        for p in &run.percentiles {
            let psd = p.level_dbm - 10.0 * (cfg.bandwidth_hz / 1e6).log10();
            println!("  {:>3.0}th: {:.2} dBm ({psd:.2} dBm/MHz), INR {:.2} dB", p.percentile, p.level_dbm, p.inr_db);
        }
    }
    Ok(())
}
