//! Brute-force Monte-Carlo of the city aggregate, used to validate the CF
//! pipeline. Every trial draws fresh geometry, gains and losses for each BS.

use rand::Rng;

use super::config::{Method, ScenarioConfig};
use super::pipeline::{category_weight, mode_set, mode_weight, ue_model, Category};
use crate::antenna::sample_gain;
use crate::clutter::{ClutterTable, LossKind};
use crate::error::{Error, Result};
use crate::geomstats::AzimuthHistograms;
use crate::linkbudget::LinkTerms;
use crate::modes::InterferenceMode;
use crate::rng::{derive_seed, par_chunks};

/// How GSMI mode counts are realized per trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ModeCounting {
    /// Each of the category's BSs carries the mode with probability `P_l`.
    #[default]
    Bernoulli,
    /// Exactly `P_l * Q` BSs carry the mode (must be an integer).
    Exact,
}

struct Source {
    cat: Category,
    mode: InterferenceMode,
    count: usize,
    prob: f64,
}

fn integer(x: f64, what: &str) -> Result<usize> {
    let r = x.round();
    if (x - r).abs() > 1e-6 || r < 0.0 {
        return Err(Error::invalid(format!("the oracle needs an integer {what}, got {x}")));
    }
    Ok(r as usize)
}

/// Sorted samples (mW) of the city aggregate over `n_trials` trials.
pub fn mc_oracle(
    cfg: &ScenarioConfig,
    geo: &AzimuthHistograms,
    clutter: Option<&ClutterTable>,
    counting: ModeCounting,
    n_trials: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let q = cfg.city_q();
    let psi = cfg.sat_elevation_deg;
    let link = LinkTerms::new(cfg.sat_gain_dbi, cfg.path_loss_db(), cfg.polarization_loss_db);
    let mut sources = Vec::new();
    for cat in Category::ALL {
        let w = category_weight(cfg, cat);
        if w == 0.0 {
            continue;
        }
        let n_bs = integer(w * q, &format!("BS count for {}", cat.label()))?;
        for mode in mode_set(cfg, cat.class) {
            let p = mode_weight(mode, cat, cfg, geo, psi, derive_seed(seed, 7 + mode as u64))?;
            let (count, prob) = match (cfg.method, counting) {
                (Method::Smi, _) | (_, ModeCounting::Bernoulli) => (n_bs, p),
                (_, ModeCounting::Exact) => (integer(p * n_bs as f64, "occurrence count")?, 1.0),
            };
            sources.push(Source { cat, mode, count, prob: if cfg.method == Method::Smi { 1.0 } else { prob } });
        }
    }
    let table = match cfg.method {
        Method::Gsmi => None,
        _ => Some(clutter.ok_or_else(|| Error::invalid("the oracle needs a clutter table for this method"))?),
    };
    // Resolve the loss lookups up front so the trial loop cannot fail.
    if let Some(t) = table {
        for s in &sources {
            let kind = if cfg.method == Method::Smi { LossKind::Clutter } else { LossKind::Reflection };
            if cfg.method == Method::GsmiReflection && s.mode == InterferenceMode::DP {
                continue;
            }
            t.lookup(s.mode.sign(), kind, psi, 6.0)?;
        }
    }
    let arrays: Vec<_> = sources.iter().map(|s| cfg.array(s.cat.class)).collect();
    let ues: Vec<_> = sources.iter().map(|s| ue_model(cfg, s.cat)).collect();
    let chunks = par_chunks(n_trials, seed, |rng, _, len| {
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            let mut total = 0.0;
            for (k, s) in sources.iter().enumerate() {
                let aod = s.mode.aod(psi, cfg.sat_azimuth_deg);
                let base = arrays[k].tx_power_dbm() + link.alpha_db;
                for _ in 0..s.count {
                    if s.prob < 1.0 && rng.random::<f64>() >= s.prob {
                        continue;
                    }
                    let d = sample_gain(aod, &arrays[k], &ues[k], geo, rng);
                    if d.gain_db == f64::NEG_INFINITY {
                        continue;
                    }
                    let loss = match (cfg.method, table) {
                        (Method::Smi, Some(t)) => {
                            t.lookup(s.mode.sign(), LossKind::Clutter, psi, d.bs_height_m).unwrap().sample(rng)
                        }
                        (Method::GsmiReflection, Some(t)) => {
                            let (b, g) = s.mode.bounces();
                            let mut l = 0.0;
                            for _ in 0..b + g {
                                l += t
                                    .lookup(s.mode.sign(), LossKind::Reflection, psi, d.bs_height_m)
                                    .unwrap()
                                    .sample(rng);
                            }
                            l
                        }
                        _ => 0.0,
                    };
                    total += 10f64.powf((base + d.gain_db - loss) / 10.0);
                }
            }
            out.push(total);
        }
        out
    });
    let mut all: Vec<f64> = chunks.into_iter().flatten().collect();
    all.sort_by(f64::total_cmp);
    Ok(all)
}

/// Kolmogorov-Smirnov distance between sorted samples and a continuous CDF,
/// checked at `n_points` order statistics; the gaps between them can hide at
/// most `1 / n_points` more.
pub fn ks_distance(sorted: &[f64], cdf: impl Fn(&[f64]) -> Result<Vec<f64>>, n_points: usize) -> Result<f64> {
    let n = sorted.len();
    if n == 0 {
        return Err(Error::invalid("no samples"));
    }
    let idx: Vec<usize> = (1..=n_points).map(|k| (k * n / (n_points + 1)).min(n - 1)).collect();
    let xs: Vec<f64> = idx.iter().map(|&i| sorted[i]).collect();
    let f = cdf(&xs)?;
    let mut worst = 0.0f64;
    for (&i, &fx) in idx.iter().zip(&f) {
        // Empirical CDF just below and at sorted[i], accounting for ties.
        let x = sorted[i];
        let below = sorted.partition_point(|&v| v < x) as f64 / n as f64;
        let at = sorted.partition_point(|&v| v <= x) as f64 / n as f64;
        worst = worst.max((fx - at).abs()).max((fx - below).abs());
    }
    Ok(worst)
}
