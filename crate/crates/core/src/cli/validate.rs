//! Self-checks run by `satcoex validate`: analytic CF inversions, power-branch
//! continuity, occurrence geometry against ray casting, and (full level) the
//! CF pipeline against brute-force Monte-Carlo.

use std::fmt;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::aggregator::{
    ks_distance, load_clutter, load_geometry, mc_oracle, run_city, Method, ModeCounting, ScenarioConfig,
};
use crate::antenna::{BsClass, ServedUeModel};
use crate::distengine::{cf_pow, gil_pelaez_cdf, CharFn, OmegaGrid, POINTS_PER_DECADE};
use crate::error::Result;
use crate::geomstats::{AzimuthHistograms, Histogram1D};
use crate::modes::{mean_occurrence, p_direct, p_mode, raycast_oracle, CrossSection, InterferenceMode, Placement};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Level {
    Fast,
    Full,
}

/// Deliberate defects for negative-control runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    /// CF phases folded to the principal branch before fractional powers.
    PhaseUnwrap,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub invariant: String,
    pub metric: f64,
    pub threshold: f64,
    pub pass: bool,
    pub seconds: f64,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<28} {:<42} metric {:.3e} (limit {:.3e}, {:.1}s)",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.invariant,
            self.metric,
            self.threshold,
            self.seconds
        )
    }
}

struct Suite {
    out: Vec<CheckResult>,
}

impl Suite {
    /// `f` returns the metric; the check passes when it is finite and `<= threshold`.
    fn check(&mut self, name: &str, invariant: &str, threshold: f64, f: impl FnOnce() -> Result<f64>) {
        let t = Instant::now();
        let metric = f().unwrap_or_else(|e| {
            log::warn!("{name}: {e}");
            f64::INFINITY
        });
        self.out.push(CheckResult {
            name: name.into(),
            invariant: invariant.into(),
            metric,
            threshold,
            pass: metric.is_finite() && metric <= threshold,
            seconds: t.elapsed().as_secs_f64(),
        });
    }
}

fn exp_cf(grid: &OmegaGrid, mu: f64, shift: f64) -> CharFn {
    CharFn::from_fn(grid, move |w| Complex64::new(0.0, w * shift).exp() / Complex64::new(1.0, -w * mu))
}

/// Sup-distance between a Gil-Pelaez CDF and `exact` over `xs`.
fn inversion_error(phi: &CharFn, xs: &[f64], exact: impl Fn(f64) -> f64) -> Result<f64> {
    let c = gil_pelaez_cdf(phi, xs)?;
    Ok(xs.iter().zip(&c.cdf).map(|(&x, &p)| (p - exact(x)).abs()).fold(0.0, f64::max))
}

/// `Phi^p` for X = shift + Exp(mu) against `exp(i p w shift) (1 - i w mu)^-p`,
/// relative to |Phi^p|, up to the CF cutoff.
fn branch_error(p: f64, fault: Option<Fault>) -> Result<f64> {
    let (mu, shift) = (1.0, 6.0);
    let grid = OmegaGrid::for_support(1e-3, 50.0, POINTS_PER_DECADE)?;
    let mut phi = exp_cf(&grid, mu, shift);
    if fault == Some(Fault::PhaseUnwrap) {
        phi = phi.with_principal_phase();
    }
    let powered = cf_pow(&phi, p)?;
    let mut worst = 0.0f64;
    for (j, &w) in powered.omega().iter().enumerate() {
        let exact = (Complex64::new(0.0, p * w * shift) - p * Complex64::new(1.0, -w * mu).ln()).exp();
        worst = worst.max((powered.value(j) - exact).norm() / exact.norm());
    }
    Ok(worst)
}

fn pow_mean_error() -> Result<f64> {
    let mu = 1.0;
    let grid = OmegaGrid::for_support(1e-3, 1e3, POINTS_PER_DECADE)?;
    let phi = exp_cf(&grid, mu, 0.0);
    let mut worst = 0.0f64;
    for p in [0.3, 1.0, 17.3, 155.5] {
        worst = worst.max((cf_pow(&phi, p)?.mean() / (p * mu) - 1.0).abs());
    }
    Ok(worst)
}

fn random_heights(r: &mut impl Rng) -> Histogram1D {
    let bw = r.random_range(2.0..8.0);
    let n = r.random_range(1..8);
    let origin = r.random_range(-bw / 2.0..25.0);
    let w: Vec<f64> = (0..n).map(|_| r.random_range(0.05..1.0)).collect();
    Histogram1D::new(origin, bw, w).expect("positive weights")
}

/// Largest |image-method probability - ray-cast frequency| over random cross-sections.
fn occurrence_vs_raycast(n_configs: u64, n_draws: usize, seed: u64) -> Result<f64> {
    let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for cfg in 0..n_configs {
        let geo = AzimuthHistograms::simple(random_heights(&mut r), Histogram1D::delta(1.0));
        let d = r.random_range(5.0..60.0);
        let d1 = r.random_range(0.0..d);
        let base = CrossSection {
            d1,
            d2: d - d1,
            h1: 0.0,
            h2: 0.0,
            h_bs: if r.random_bool(0.3) { 6.0 } else { r.random_range(0.0..40.0) },
            psi_s: r.random_range(5.0..85.0),
        };
        for mode in InterferenceMode::ALL {
            let exact = p_mode(mode, &base, |x| geo.height_cdf(x))?;
            let mc = raycast_oracle(
                mode,
                |r| CrossSection { h1: geo.sample_height(r), h2: geo.sample_height(r), ..base },
                n_draws,
                seed ^ cfg,
            );
            worst = worst.max((exact - mc).abs());
        }
    }
    Ok(worst)
}

/// Largest drop of P_DP between consecutive elevations (0 when monotone).
fn direct_monotone(cfg: &ScenarioConfig, seed: u64) -> Result<f64> {
    let stats = load_geometry(cfg)?;
    let geo = stats.at(cfg.sat_azimuth_deg);
    let ue = ServedUeModel::new(BsClass::Micro, cfg.cell_radius_m / 4.0, false);
    let p: Vec<f64> = [20.0, 50.0, 80.0]
        .iter()
        .map(|&psi| mean_occurrence(InterferenceMode::DP, &geo, &ue, psi, Placement::SingleStreet, 50_000, seed))
        .collect::<Result<_>>()?;
    Ok(p.windows(2).map(|w| (w[0] - w[1]).max(0.0)).fold(0.0, f64::max))
}

fn toy_ks(method: Method, n_trials: usize, seed: u64) -> Result<f64> {
    let cfg = ScenarioConfig::toy(method);
    let stats = load_geometry(&cfg)?;
    let geo = stats.at(cfg.sat_azimuth_deg);
    let clutter = load_clutter(&cfg, &geo)?;
    let run = run_city(&cfg, &geo, clutter.as_ref())?;
    let samples = mc_oracle(&cfg, &geo, clutter.as_ref(), ModeCounting::Bernoulli, n_trials, seed)?;
    ks_distance(
        &samples,
        |xs| {
            let pos: Vec<f64> = xs.iter().map(|x| x.max(f64::MIN_POSITIVE)).collect();
            Ok(gil_pelaez_cdf(&run.cf, &pos)?.cdf)
        },
        500,
    )
}

/// Runs the suite. Individual failures are reported in the results, not as errors.
pub fn run_validation(level: Level, fault: Option<Fault>, seed: u64) -> Result<Vec<CheckResult>> {
    let mut s = Suite { out: Vec::new() };
    s.check("gil-pelaez exponential", "inversion sup-error", 1e-3, || {
        let mu = 2.0;
        let grid = OmegaGrid::for_support(mu * 1e-3, mu * 20.0, POINTS_PER_DECADE)?;
        let xs: Vec<f64> = (1..=200).map(|k| k as f64 * mu * 0.04).collect();
        inversion_error(&exp_cf(&grid, mu, 0.0), &xs, |x| 1.0 - (-x / mu).exp())
    });
    s.check("gil-pelaez gamma(3)", "inversion sup-error", 1e-3, || {
        let grid = OmegaGrid::for_support(1e-3, 40.0, POINTS_PER_DECADE)?;
        let phi = CharFn::from_fn(&grid, |w| Complex64::new(1.0, -w).powi(-3));
        let xs: Vec<f64> = (1..=200).map(|k| k as f64 * 0.08).collect();
        inversion_error(&phi, &xs, |x| 1.0 - (-x).exp() * (1.0 + x + x * x / 2.0))
    });
    s.check("cf power 2.5", "fractional-power branch continuity", 1e-6, || branch_error(2.5, fault));
    s.check("cf power 17.3", "fractional-power branch continuity", 1e-6, || branch_error(17.3, fault));
    s.check("cf power mean", "mean linear in the exponent", 5e-3, pow_mean_error);
    s.check("direct path 30 m uniform", "closed-form occurrence probability", 5e-4, || {
        let h = Histogram1D::uniform(0.0, 30.0);
        let cs = CrossSection { d1: 5.0, d2: 20.0, h1: 0.0, h2: 0.0, h_bs: 6.0, psi_s: 30.0 };
        Ok((p_direct(&cs, |x| h.cdf(x))? - 0.585).abs())
    });
    let city = ScenarioConfig::toy(Method::Gsmi);
    s.check("direct path vs elevation", "P_DP non-decreasing in elevation", 0.0, || direct_monotone(&city, seed));
    let (n_cfg, n_draw) = match level {
        Level::Fast => (10, 50_000),
        Level::Full => (100, 100_000),
    };
    s.check("image method vs ray casting", "occurrence probability oracle", 0.01, || {
        occurrence_vs_raycast(n_cfg, n_draw, seed)
    });
    if level == Level::Full {
        s.check("smi toy vs monte-carlo", "CF pipeline KS distance", 0.02, || toy_ks(Method::Smi, 1_000_000, seed));
        s.check("gsmi toy vs monte-carlo", "CF pipeline KS distance", 0.03, || toy_ks(Method::Gsmi, 1_000_000, seed));
    }
    Ok(s.out)
}
