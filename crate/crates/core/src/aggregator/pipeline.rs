//! Per-mode dB chains, their characteristic functions and the city and
//! footprint compositions.
//!
//! A per-BS interference term of mode `l` is `P_tx + G_a + G_c + alpha` (dBm).
//! A category (BS class x UE location) contributes `prod_l Phi_l^(w_l Q)`,
//! where `w_l` is 1 (SMI) or the mean occurrence probability (GSMI). The city
//! raises the outdoor categories to `beta` and the indoor ones to `1 - beta`.

use std::collections::BTreeMap;

use serde::Serialize;

use super::config::{Method, RangeMode, ScenarioConfig};
use super::footprint::{tessellate_footprint, GeographicCluster};
use crate::antenna::{sample_gains, BsClass, GainDraw, ServedUeModel};
use crate::clutter::{ClutterTable, LossKind};
use crate::distengine::{
    cf_from_linear_with_floor, cf_pow, cf_product, cf_quantile, cf_weighted_product, db_convolve, db_mixture,
    db_to_linear, gil_pelaez_cdf, log_grid, CharFn, Cdf, DbDistribution, DbUnit, OmegaGrid, LOG_FLOOR,
};
use crate::error::{Error, Result};
use crate::geomstats::AzimuthHistograms;
use crate::linkbudget::{fspl, LinkTerms};
use crate::modes::{mean_occurrence, InterferenceMode};
use crate::rng::derive_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Category {
    pub class: BsClass,
    pub indoor: bool,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category { class: BsClass::Micro, indoor: true },
        Category { class: BsClass::Micro, indoor: false },
        Category { class: BsClass::Macro, indoor: true },
        Category { class: BsClass::Macro, indoor: false },
    ];

    pub fn label(&self) -> String {
        let c = match self.class {
            BsClass::Micro => "micro",
            BsClass::Macro => "macro",
        };
        format!("{c}_{}", if self.indoor { "indoor" } else { "outdoor" })
    }

    fn tag(&self) -> u64 {
        (matches!(self.class, BsClass::Macro) as u64) * 2 + self.indoor as u64
    }
}

/// Served-UE geometry of a category: macro cells of radius `d_c`, micro
/// cells of `d_c / 4`.
pub fn ue_model(cfg: &ScenarioConfig, cat: Category) -> ServedUeModel {
    let radius = match cat.class {
        BsClass::Macro => cfg.cell_radius_m,
        BsClass::Micro => cfg.cell_radius_m / 4.0,
    };
    ServedUeModel::new(cat.class, radius, cat.indoor)
}

/// Modes aggregated for a BS class under the configured method. SMI uses one
/// representative per sign (DP, GR) since clutter tables are per sign.
pub fn mode_set(cfg: &ScenarioConfig, class: BsClass) -> Vec<InterferenceMode> {
    let base: Vec<InterferenceMode> = match cfg.method {
        Method::Smi => vec![InterferenceMode::DP, InterferenceMode::GR],
        _ => InterferenceMode::for_class(class).to_vec(),
    };
    match &cfg.modes {
        Some(only) => base.into_iter().filter(|m| only.contains(m)).collect(),
        None => base,
    }
}

/// Weight of a category in the city composition (beta or 1 - beta) times the
/// per-site BS multiplier.
pub fn category_weight(cfg: &ScenarioConfig, cat: Category) -> f64 {
    if !cfg.bs_classes.contains(&cat.class) {
        return 0.0;
    }
    let w = if cat.indoor { 1.0 - cfg.outdoor_fraction } else { cfg.outdoor_fraction };
    w * cfg.class_multiplier(cat.class)
}

/// Mixes per-draw gains with a per-draw loss distribution chosen by `key`.
fn convolve_by_group<K: Ord>(
    draws: &[GainDraw],
    step: f64,
    key: impl Fn(&GainDraw) -> Result<K>,
    dist: impl Fn(&K) -> Result<Option<DbDistribution>>,
) -> Result<DbDistribution> {
    let mut groups: BTreeMap<K, Vec<f64>> = BTreeMap::new();
    for d in draws {
        groups.entry(key(d)?).or_default().push(d.gain_db);
    }
    let mut parts = Vec::with_capacity(groups.len());
    for (k, gains) in &groups {
        let g = DbDistribution::from_samples(gains, step)?;
        let combined = match dist(k)? {
            Some(l) => db_convolve(&g, &l),
            None => g,
        };
        parts.push((gains.len() as f64 / draws.len() as f64, combined));
    }
    db_mixture(&parts.iter().map(|(w, d)| (*w, d)).collect::<Vec<_>>())
}

/// dBm distribution of one BS's interference through `mode` at the satellite.
#[allow(clippy::too_many_arguments)]
pub fn per_mode_distribution(
    mode: InterferenceMode,
    cat: Category,
    cfg: &ScenarioConfig,
    geo: &AzimuthHistograms,
    clutter: Option<&ClutterTable>,
    psi_s: f64,
    alpha_db: f64,
    seed: u64,
) -> Result<DbDistribution> {
    let arr = cfg.array(cat.class);
    let ue = ue_model(cfg, cat);
    let step = cfg.sampling.step_db;
    let aod = mode.aod(psi_s, cfg.sat_azimuth_deg);
    let draws = sample_gains(aod, &arr, &ue, geo, cfg.sampling.n_theta, seed);
    if draws.iter().all(|d| d.gain_db == f64::NEG_INFINITY) {
        return Err(Error::invalid(format!("all gain draws for {mode} ({}) are shielded", cat.label())));
    }
    let need = |kind: LossKind| {
        clutter.ok_or_else(|| Error::MissingClutter {
            sign: mode.sign().to_string(),
            kind: kind.to_string(),
            elevation_deg: psi_s,
            bs_height_m: f64::NAN,
        })
    };
    let chain = match cfg.method {
        Method::Gsmi => DbDistribution::from_samples(&draws.iter().map(|d| d.gain_db).collect::<Vec<_>>(), step)?,
        Method::Smi => {
            let table = need(LossKind::Clutter)?;
            let entries = table.entries();
            convolve_by_group(
                &draws,
                step,
                |d| {
                    let e = table.lookup(mode.sign(), LossKind::Clutter, psi_s, d.bs_height_m)?;
                    Ok(entries.iter().position(|x| std::ptr::eq(x, e)).unwrap())
                },
                |&i| Ok(Some(entries[i].gain_pdf(step)?)),
            )?
        }
        Method::GsmiReflection => {
            let (b, g) = mode.bounces();
            let n = b + g;
            if n == 0 {
                DbDistribution::from_samples(&draws.iter().map(|d| d.gain_db).collect::<Vec<_>>(), step)?
            } else {
                let table = need(LossKind::Reflection)?;
                let entries = table.entries();
                convolve_by_group(
                    &draws,
                    step,
                    |d| {
                        let e = table.lookup(mode.sign(), LossKind::Reflection, psi_s, d.bs_height_m)?;
                        Ok(entries.iter().position(|x| std::ptr::eq(x, e)).unwrap())
                    },
                    |&i| {
                        let one = entries[i].gain_pdf(step)?;
                        let mut acc = one.clone();
                        for _ in 1..n {
                            acc = db_convolve(&acc, &one);
                        }
                        Ok(Some(acc))
                    },
                )?
            }
        }
    };
    Ok(chain.shifted(arr.tx_power_dbm() + alpha_db))
}

/// Exponent weight of a mode: 1 for SMI, the mean occurrence probability otherwise.
pub fn mode_weight(
    mode: InterferenceMode,
    cat: Category,
    cfg: &ScenarioConfig,
    geo: &AzimuthHistograms,
    psi_s: f64,
    seed: u64,
) -> Result<f64> {
    if cfg.method == Method::Smi {
        return Ok(1.0);
    }
    if let Some(p) = cfg.occurrence_override {
        return Ok(p);
    }
    mean_occurrence(mode, geo, &ue_model(cfg, cat), psi_s, cfg.placement, cfg.sampling.n_occurrence, seed)
}

/// One factor `Phi_l^(exponent)` of an aggregate, before its CF is built.
#[derive(Clone, Debug)]
pub struct ModeTerm {
    pub category: Category,
    pub mode: InterferenceMode,
    /// dBm at the satellite.
    pub dist: DbDistribution,
    /// Occurrence weight (1 for SMI).
    pub weight: f64,
    /// Mean linear power (mW).
    pub mean_mw: f64,
}

/// Per-mode terms of a category at one satellite elevation and link offset.
pub fn category_terms(
    cat: Category,
    cfg: &ScenarioConfig,
    geo: &AzimuthHistograms,
    clutter: Option<&ClutterTable>,
    psi_s: f64,
    alpha_db: f64,
    seed: u64,
) -> Result<Vec<ModeTerm>> {
    mode_set(cfg, cat.class)
        .into_iter()
        .map(|mode| {
            let s = derive_seed(derive_seed(seed, cat.tag()), mode as u64);
            let dist = per_mode_distribution(mode, cat, cfg, geo, clutter, psi_s, alpha_db, s)?;
            let weight = mode_weight(mode, cat, cfg, geo, psi_s, derive_seed(s, 99))?;
            let mean_mw = dist.mean_linear();
            Ok(ModeTerm { category: cat, mode, dist, weight, mean_mw })
        })
        .collect()
}

/// CF of one per-mode term on `grid`. `min_exponent` is the smallest power the
/// CF will be raised to; values that cannot survive it are truncated.
pub fn term_cf(term: &ModeTerm, grid: &OmegaGrid, min_exponent: f64) -> CharFn {
    let floor = if min_exponent > 0.0 { LOG_FLOOR / min_exponent } else { f64::NEG_INFINITY };
    cf_from_linear_with_floor(&db_to_linear(&term.dist, DbUnit::DbW), grid, floor)
}

/// `prod_l Phi_l^(w_l Q)` for one category.
pub fn category_cf(terms: &[(&ModeTerm, &CharFn)], q: f64, grid: &OmegaGrid) -> Result<CharFn> {
    if q == 0.0 || terms.is_empty() {
        return Ok(CharFn::one(grid));
    }
    cf_weighted_product(&terms.iter().map(|(t, cf)| (*cf, t.weight * q)).collect::<Vec<_>>())
}

/// `(Phi_mo Phi_Mo)^beta (Phi_mi Phi_Mi)^(1 - beta)`.
pub fn city_cf(outdoor: &[&CharFn], indoor: &[&CharFn], beta: f64) -> Result<CharFn> {
    let o = cf_pow(&cf_product(outdoor)?, beta)?;
    let i = cf_pow(&cf_product(indoor)?, 1.0 - beta)?;
    cf_product(&[&o, &i])
}

/// Terms with their CFs and unit exponents; the aggregate for a scale `s` is
/// `prod Phi^(s * exponent)`, so runs that only rescale counts reuse the CFs.
#[derive(Clone, Debug)]
pub struct Aggregate {
    pub grid: OmegaGrid,
    pub parts: Vec<(ModeTerm, CharFn, f64)>,
}

impl Aggregate {
    pub fn cf(&self, scale: f64) -> Result<CharFn> {
        let live: Vec<(&CharFn, f64)> =
            self.parts.iter().filter(|p| p.2 > 0.0).map(|(_, cf, e)| (cf, e * scale)).collect();
        if live.is_empty() || scale == 0.0 {
            return Ok(CharFn::one(&self.grid));
        }
        cf_weighted_product(&live)
    }

    /// Exact mean (mW) from the term means.
    pub fn mean(&self, scale: f64) -> f64 {
        scale * self.parts.iter().map(|(t, _, e)| t.mean_mw * e).sum::<f64>()
    }

    /// CF and mean of the terms of one category at unit scale; `None` if it has none.
    pub fn category(&self, cat: Category) -> Result<Option<(CharFn, f64)>> {
        let live: Vec<_> = self.parts.iter().filter(|p| p.0.category == cat && p.2 > 0.0).collect();
        if live.is_empty() {
            return Ok(None);
        }
        let cf = cf_weighted_product(&live.iter().map(|(_, cf, e)| (cf, *e)).collect::<Vec<_>>())?;
        Ok(Some((cf, live.iter().map(|(t, _, e)| t.mean_mw * e).sum())))
    }
}

/// Picks a common frequency grid for quantities with means in
/// `[mean_lo, mean_hi]` whose single terms reach `largest_atom`.
pub fn choose_grid(mean_lo: f64, mean_hi: f64, largest_atom: f64, per_decade: usize) -> Result<OmegaGrid> {
    if !(mean_lo > 0.0 && mean_hi >= mean_lo) {
        return Err(Error::Numeric(format!("aggregate mean range [{mean_lo}, {mean_hi}] is degenerate")));
    }
    OmegaGrid::for_support(1e-2 * mean_lo, mean_hi.max(largest_atom), per_decade)
}

fn largest_atom(terms: &[ModeTerm]) -> f64 {
    terms
        .iter()
        .filter_map(|t| t.dist.max_value())
        .map(|v| 10f64.powf(v / 10.0))
        .fold(0.0, f64::max)
}

/// Level `I` (same unit as the CF) at `percentile` percent.
pub fn level_percentile(phi: &CharFn, mean: f64, percentile: f64) -> Result<f64> {
    if !(percentile > 0.0 && percentile < 100.0) {
        return Err(Error::invalid(format!("percentile {percentile} outside (0, 100)")));
    }
    cf_quantile(phi, percentile / 100.0, mean * 1e-4, mean * 1e3)
}

/// INR (dB) at `percentile`, for a CF of interference in mW.
pub fn inr_percentile(phi: &CharFn, mean_mw: f64, noise_dbm: f64, percentile: f64) -> Result<f64> {
    let i = level_percentile(phi, mean_mw, percentile)?;
    Ok(10.0 * i.log10() - noise_dbm)
}

/// CDF of `phi` on `n` log-spaced levels spanning its 0.1 to 99.9 percentiles
/// (or two decades either side of `mean` if those cannot be bracketed).
pub fn cdf_around(phi: &CharFn, mean: f64, n: usize) -> Result<Cdf> {
    let (lo, hi) = match (level_percentile(phi, mean, 0.1), level_percentile(phi, mean, 99.9)) {
        (Ok(a), Ok(b)) if b > a => (a / 1.05, b * 1.05),
        _ => (mean * 1e-2, mean * 1e2),
    };
    gil_pelaez_cdf(phi, &log_grid(lo, hi, n))
}

#[derive(Clone, Debug, Serialize)]
pub struct PercentileRow {
    pub percentile: f64,
    pub level_dbm: f64,
    pub inr_db: f64,
}

fn percentile_rows(phi: &CharFn, mean: f64, cfg: &ScenarioConfig) -> Result<Vec<PercentileRow>> {
    cfg.percentiles
        .iter()
        .map(|&p| {
            let i = level_percentile(phi, mean, p)?;
            let level_dbm = 10.0 * i.log10();
            Ok(PercentileRow { percentile: p, level_dbm, inr_db: level_dbm - cfg.noise_dbm() })
        })
        .collect()
}

#[derive(Debug)]
pub struct CityRun {
    pub q: f64,
    pub link: LinkTerms,
    pub aggregate: Aggregate,
    pub cf: CharFn,
    pub mean_mw: f64,
    pub cdf: Cdf,
    pub percentiles: Vec<PercentileRow>,
}

/// City aggregate at the configured satellite elevation and gain.
pub fn run_city(cfg: &ScenarioConfig, geo: &AzimuthHistograms, clutter: Option<&ClutterTable>) -> Result<CityRun> {
    let q = cfg.city_q();
    let link = LinkTerms::new(cfg.sat_gain_dbi, cfg.path_loss_db(), cfg.polarization_loss_db);
    let mut terms = Vec::new();
    for cat in Category::ALL {
        let w = category_weight(cfg, cat);
        if w == 0.0 {
            continue;
        }
        for t in category_terms(cat, cfg, geo, clutter, cfg.sat_elevation_deg, link.alpha_db, cfg.sampling.seed)? {
            terms.push((t, w * q));
        }
    }
    let mean: f64 = terms.iter().map(|(t, e)| t.mean_mw * t.weight * e).sum();
    let ts: Vec<ModeTerm> = terms.iter().map(|(t, _)| t.clone()).collect();
    let grid = choose_grid(mean, mean, largest_atom(&ts), cfg.sampling.points_per_decade)?;
    let parts: Vec<(ModeTerm, CharFn, f64)> = terms
        .into_iter()
        .map(|(t, e)| {
            let exp = e * t.weight;
            let cf = term_cf(&t, &grid, exp);
            (t, cf, exp)
        })
        .collect();
    let aggregate = Aggregate { grid, parts };
    let cf = aggregate.cf(1.0)?;
    let mean_mw = aggregate.mean(1.0);
    let cdf = cdf_around(&cf, mean_mw, 400)?;
    let percentiles = percentile_rows(&cf, mean_mw, cfg)?;
    Ok(CityRun { q, link, aggregate, cf, mean_mw, cdf, percentiles })
}

#[derive(Clone, Debug, Serialize)]
pub struct ClusterLink {
    pub cluster: usize,
    pub sat_gain_dbi: f64,
    pub elevation_deg: f64,
    pub area_km2: f64,
    /// Macro BS count at an urban ratio of 1; multiply by `R_a`.
    pub q_unit: f64,
    pub link: LinkTerms,
}

#[derive(Debug)]
pub struct FootprintRatioRun {
    pub ratio_urban: f64,
    pub aggregate_mean_mw: f64,
    pub aggregate_cf_mean_mw: f64,
    pub aggregate: Vec<PercentileRow>,
    /// Per cluster: (mean mW, percentile rows).
    pub clusters: Vec<(f64, Vec<PercentileRow>)>,
}

#[derive(Debug)]
pub struct FootprintRun {
    pub clusters: Vec<GeographicCluster>,
    pub links: Vec<ClusterLink>,
    /// One aggregate per cluster, unit exponents at `R_a = 1`.
    pub per_cluster: Vec<Aggregate>,
    pub runs: Vec<FootprintRatioRun>,
}

impl FootprintRun {
    /// Footprint CF for urban ratio `r_a`: product of cluster CFs.
    pub fn cf(&self, r_a: f64) -> Result<CharFn> {
        let cfs = self.per_cluster.iter().map(|a| a.cf(r_a)).collect::<Result<Vec<_>>>()?;
        cf_product(&cfs.iter().collect::<Vec<_>>())
    }

    pub fn mean(&self, r_a: f64) -> f64 {
        self.per_cluster.iter().map(|a| a.mean(r_a)).sum()
    }
}

/// Tessellates the footprint and builds per-cluster aggregates; then evaluates
/// every configured urban ratio.
pub fn run_footprint(
    cfg: &ScenarioConfig,
    geo: &AzimuthHistograms,
    clutter: Option<&ClutterTable>,
) -> Result<FootprintRun> {
    if cfg.ratio_urban.is_empty() {
        return Err(Error::invalid("footprint runs need at least one ratio_urban value"));
    }
    let clusters = tessellate_footprint(&cfg.footprint.satellite, &cfg.footprint.tessellation)?;
    if clusters.is_empty() {
        return Err(Error::invalid("footprint tessellation produced no clusters"));
    }
    let links: Vec<ClusterLink> = clusters
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let d = match cfg.footprint.range {
                RangeMode::Fixed => cfg.sat_distance_m,
                RangeMode::PerCluster => c.mean_slant_m,
            };
            ClusterLink {
                cluster: i + 1,
                sat_gain_dbi: c.sat_gain_dbi,
                elevation_deg: c.elevation_deg,
                area_km2: c.area_m2 / 1e6,
                q_unit: cfg.cluster_q(c.area_m2, 1.0),
                link: LinkTerms::new(c.sat_gain_dbi, fspl(d, cfg.frequency_hz), cfg.polarization_loss_db),
            }
        })
        .collect();

    // Per elevation, terms at alpha = 0; clusters only shift them.
    let mut by_elev: BTreeMap<i64, Vec<(ModeTerm, f64)>> = BTreeMap::new();
    for l in &links {
        let key = (l.elevation_deg * 1000.0).round() as i64;
        if by_elev.contains_key(&key) {
            continue;
        }
        let mut terms = Vec::new();
        for cat in Category::ALL {
            let w = category_weight(cfg, cat);
            if w == 0.0 {
                continue;
            }
            let seed = derive_seed(cfg.sampling.seed, key as u64);
            for t in category_terms(cat, cfg, geo, clutter, l.elevation_deg, 0.0, seed)? {
                terms.push((t, w));
            }
        }
        by_elev.insert(key, terms);
    }
    let shifted: Vec<Vec<(ModeTerm, f64)>> = links
        .iter()
        .map(|l| {
            by_elev[&((l.elevation_deg * 1000.0).round() as i64)]
                .iter()
                .map(|(t, w)| {
                    let dist = t.dist.shifted(l.link.alpha_db);
                    let mean_mw = dist.mean_linear();
                    (ModeTerm { dist, mean_mw, ..t.clone() }, w * l.q_unit * t.weight)
                })
                .collect()
        })
        .collect();

    let r_min = cfg.ratio_urban.iter().copied().fold(f64::INFINITY, f64::min);
    let r_max = cfg.ratio_urban.iter().copied().fold(0.0, f64::max);
    let cluster_means: Vec<f64> =
        shifted.iter().map(|ts| ts.iter().map(|(t, e)| t.mean_mw * e).sum::<f64>()).collect();
    let lo = cluster_means.iter().copied().filter(|m| *m > 0.0).fold(f64::INFINITY, f64::min) * r_min;
    let hi = cluster_means.iter().sum::<f64>() * r_max;
    let all_terms: Vec<ModeTerm> = shifted.iter().flatten().map(|(t, _)| t.clone()).collect();
    let grid = choose_grid(lo, hi, largest_atom(&all_terms), cfg.sampling.points_per_decade)?;

    let per_cluster: Vec<Aggregate> = shifted
        .into_iter()
        .map(|ts| Aggregate {
            grid: grid.clone(),
            parts: ts
                .into_iter()
                .map(|(t, e)| {
                    let cf = term_cf(&t, &grid, e * r_min);
                    (t, cf, e)
                })
                .collect(),
        })
        .collect();

    let mut fp = FootprintRun { clusters, links, per_cluster, runs: Vec::new() };
    for &r_a in &cfg.ratio_urban {
        let mut cl = Vec::new();
        let mut cfs = Vec::new();
        for a in &fp.per_cluster {
            let cf = a.cf(r_a)?;
            let m = a.mean(r_a);
            cl.push((m, percentile_rows(&cf, m, cfg)?));
            cfs.push(cf);
        }
        let agg = cf_product(&cfs.iter().collect::<Vec<_>>())?;
        let mean = fp.mean(r_a);
        fp.runs.push(FootprintRatioRun {
            ratio_urban: r_a,
            aggregate_mean_mw: mean,
            aggregate_cf_mean_mw: agg.mean(),
            aggregate: percentile_rows(&agg, mean, cfg)?,
            clusters: cl,
        });
    }
    Ok(fp)
}
