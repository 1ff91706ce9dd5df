//! Checks the CF pipeline against brute-force Monte-Carlo on the 10-BS toy city.
//!
//!     cargo run --release --example toy_oracle -- [n_trials]

use satcoex::aggregator::{
    ks_distance, load_clutter, load_geometry, mc_oracle, run_city, Method, ModeCounting, ScenarioConfig,
};
use satcoex::distengine::gil_pelaez_cdf;

fn main() -> satcoex::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200_000);
    for (method, counting) in [
        (Method::Smi, ModeCounting::Bernoulli),
        (Method::Gsmi, ModeCounting::Bernoulli),
        (Method::Gsmi, ModeCounting::Exact),
    ] {
        let mut cfg = ScenarioConfig::toy(method);
        if counting == ModeCounting::Exact {
            // Five BSs per category, so 0.4 gives exactly two carriers per mode.
            cfg.occurrence_override = Some(0.4);
        }
        let t = std::time::Instant::now();
        let stats = load_geometry(&cfg)?;
        let geo = stats.at(cfg.sat_azimuth_deg);
        let clutter = load_clutter(&cfg, &geo)?;
        let run = run_city(&cfg, &geo, clutter.as_ref())?;
        let samples = mc_oracle(&cfg, &geo, clutter.as_ref(), counting, n, 7)?;
        let ks = ks_distance(&samples, |xs| Ok(gil_pelaez_cdf(&run.cf, xs)?.cdf), 400)?;
        let mc_mean = samples.iter().sum::<f64>() / n as f64;
        println!(
            "{method:?}/{counting:?}: KS {ks:.4}, mean {:.3} dBm (MC {:.3} dBm), {:.1}s",
            10.0 * run.mean_mw.log10(),
            10.0 * mc_mean.log10(),
            t.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
