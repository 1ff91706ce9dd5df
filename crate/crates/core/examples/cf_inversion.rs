//! Characteristic functions: building one from a discrete power distribution,
//! raising it to a non-integer count, and inverting with Gil-Pelaez.
//!
//!     cargo run --release --example cf_inversion

use num_complex::Complex64;
use satcoex::distengine::{
    cf_from_linear, cf_pow, cf_quantile, db_to_linear, gil_pelaez_cdf, CharFn, DbDistribution, DbUnit, OmegaGrid,
    POINTS_PER_DECADE,
};

fn main() -> satcoex::Result<()> {
    // Gamma(3): closed-form CDF against the inversion.
    let grid = OmegaGrid::for_support(1e-3, 40.0, POINTS_PER_DECADE)?;
    let phi = CharFn::from_fn(&grid, |w| Complex64::new(1.0, -w).powi(-3));
    let xs: Vec<f64> = (1..=8).map(|k| k as f64).collect();
    let c = gil_pelaez_cdf(&phi, &xs)?;
    for (x, p) in xs.iter().zip(&c.cdf) {
        let exact = 1.0 - (-x).exp() * (1.0 + x + x * x / 2.0);
        println!("gamma(3) F({x}) = {p:.6} (exact {exact:.6})");
    }

    // A per-BS power uniform over -10..0 dB, summed over 17.3 BSs on average.
    let w = vec![1.0 / 41.0; 41];
    let one = DbDistribution::new(-10.0, 0.25, w, 0.0)?;
    let lin = db_to_linear(&one, DbUnit::DbW);
    let grid = OmegaGrid::for_support(1e-2, 30.0, POINTS_PER_DECADE)?;
    let phi = cf_from_linear(&lin, &grid);
    let agg = cf_pow(&phi, 17.3)?;
    println!("\nmean of one term {:.4}, of the 17.3-fold sum {:.4}", phi.mean(), agg.mean());
    for p in [0.5, 0.8, 0.95] {
        println!("  {:>2.0}th percentile {:.4}", p * 100.0, cf_quantile(&agg, p, 0.1, 100.0)?);
    }
    Ok(())
}
