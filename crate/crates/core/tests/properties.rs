use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use satcoex::aggregator::{run_city, Method, ScenarioConfig};
use satcoex::antenna::{beam_gain, gain_pdf, sample_gains, ula_factor, Aod, ArrayConfig, BsClass, ServedUeModel};
use satcoex::clutter::{synthetic_clutter, ClutterEntry, ClutterTable, LossKind};
use satcoex::distengine::{
    cf_from_linear, cf_pow, cf_product, db_convolve, gil_pelaez_cdf, log_grid, CharFn, DbDistribution,
    LinearDistribution, OmegaGrid,
};
use satcoex::geomstats::{
    extract_stats, merge_and_convexify, synthetic_city, AzimuthHistograms, BuildingPolygon, CityParams, GeoStats,
    Histogram1D, StatsParams,
};
use satcoex::linkbudget::{elevation_and_offnadir, sat_gain, EarthModel, LinkTerms, SatGeometry};
use satcoex::modes::{mean_occurrence, p_direct, p_mode, CrossSection, InterferenceMode, ModeSign, Placement};

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig { cases: n, ..ProptestConfig::default() }
}

fn small_city(seed: u64, rotation_deg: f64) -> Vec<BuildingPolygon> {
    let p = CityParams { blocks_x: 3, blocks_y: 3, rotation_deg, ..CityParams::default() };
    synthetic_city(p, seed).unwrap()
}

fn stats_of(polys: &[BuildingPolygon]) -> GeoStats {
    extract_stats(&merge_and_convexify(polys, 0.5).unwrap(), StatsParams::default()).unwrap()
}

fn same_hist(a: &Histogram1D, b: &Histogram1D, tol: f64) -> bool {
    a.empty == b.empty
        && a.weights.len() == b.weights.len()
        && (a.empty || (a.origin - b.origin).abs() < tol)
        && a.weights.iter().zip(&b.weights).all(|(x, y)| (x - y).abs() < tol)
}

fn same_azimuth(a: &AzimuthHistograms, b: &AzimuthHistograms, tol: f64) -> bool {
    same_hist(&a.height, &b.height, tol) && same_hist(&a.area, &b.area, tol) && same_hist(&a.distance, &b.distance, tol)
}

fn heights() -> impl Strategy<Value = Histogram1D> {
    (0.5f64..8.0, prop::collection::vec(0.0f64..1.0, 1..8), 0.0f64..20.0).prop_map(|(bw, mut w, o)| {
        w[0] += 0.01;
        Histogram1D::new(o, bw, w).unwrap()
    })
}

fn db_dist() -> impl Strategy<Value = DbDistribution> {
    (-40i32..40, prop::collection::vec(0.0f64..1.0, 1..12), 0.0f64..0.3).prop_map(|(o, mut w, ninf)| {
        w[0] += 0.01;
        DbDistribution::new(o as f64 * 0.25, 0.25, w, ninf).unwrap()
    })
}

fn same_db(a: &DbDistribution, b: &DbDistribution, tol: f64) -> bool {
    let xs: Vec<f64> = a.atoms().chain(b.atoms()).map(|x| x.0).collect();
    (a.neg_inf_mass() - b.neg_inf_mass()).abs() < tol && xs.iter().all(|&x| (a.cdf(x) - b.cdf(x)).abs() < tol)
}

// ---- geometry statistics ----

proptest! {
    #![proptest_config(cases(64))]

    #[test]
    fn merge_preserves_facade_area_of_rows(
        widths in prop::collection::vec(4.0f64..40.0, 1..7),
        hs in prop::collection::vec(3.0f64..60.0, 7),
        depth in 5.0f64..30.0,
        x0 in -500.0f64..500.0,
        y0 in -500.0f64..500.0,
    ) {
        let n = widths.len();
        let mut x = x0;
        let mut polys = Vec::new();
        let mut want = 0.0;
        for (i, &w) in widths.iter().enumerate() {
            polys.push(BuildingPolygon::rect(x, y0, w, depth, hs[i]).unwrap());
            let ends = (i == 0) as u8 as f64 + (i == n - 1) as u8 as f64;
            want += hs[i] * (2.0 * w + ends * depth);
            x += w;
        }
        let merged = merge_and_convexify(&polys, 0.5).unwrap();
        prop_assert_eq!(merged.len(), 1);
        let got: f64 = merged.iter().map(|p| p.facade_area()).sum();
        prop_assert!((got - want).abs() <= 0.01 * want, "{} vs {}", got, want);
    }
}

proptest! {
    #![proptest_config(cases(8))]

    #[test]
    fn histograms_are_normalized(seed in 0u64..1000) {
        let s = stats_of(&small_city(seed, 0.0));
        let all = s.bins.iter().map(|b| &b.hist).chain(std::iter::once(&s.marginal));
        for h in all {
            for one in [&h.height, &h.area, &h.distance] {
                prop_assert!(one.weights.iter().all(|w| *w >= 0.0));
                if !one.empty {
                    prop_assert!((one.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn stats_are_translation_invariant(seed in 0u64..1000, dx in -2000.0f64..2000.0, dy in -2000.0f64..2000.0) {
        let city = small_city(seed, 0.0);
        let moved: Vec<_> = city.iter().map(|p| p.translated(dx, dy)).collect();
        let (a, b) = (stats_of(&city), stats_of(&moved));
        prop_assert!(same_azimuth(&a.marginal, &b.marginal, 1e-9));
        for (x, y) in a.bins.iter().zip(&b.bins) {
            prop_assert!(same_azimuth(&x.hist, &y.hist, 1e-9), "azimuth {}", x.azimuth_deg);
        }
    }

    #[test]
    fn rotation_shifts_azimuth_conditioning(seed in 0u64..1000, k in 1i32..18) {
        let theta = 5.0 * k as f64;
        let city = small_city(seed, 0.0);
        let turned: Vec<_> = city.iter().map(|p| p.rotated(theta)).collect();
        let (a, b) = (stats_of(&city), stats_of(&turned));
        for bin in &a.bins {
            let other = &b.bins[b.bin_index(bin.azimuth_deg + theta)];
            prop_assert!(same_azimuth(&bin.hist, &other.hist, 1e-6), "azimuth {}", bin.azimuth_deg);
        }
    }
}

// ---- antenna ----

proptest! {
    #![proptest_config(cases(256))]

    #[test]
    fn matched_beam_is_maximal(n in 1u32..33, steer in -80.0f64..80.0, target in -90.0f64..90.0) {
        let peak = ula_factor(n, 0.5, steer, steer);
        prop_assert!((peak - (n * n) as f64).abs() < 1e-9);
        prop_assert!(ula_factor(n, 0.5, steer, target) <= peak * (1.0 + 1e-12));
    }

    #[test]
    fn panel_gain_is_mirror_symmetric(
        psi in -60.0f64..60.0, phi in -59.0f64..59.0, psi_u in -30.0f64..10.0, phi_u in -59.0f64..59.0,
        cfg in 1u8..3,
    ) {
        let arr = ArrayConfig::preset(cfg, BsClass::Macro);
        let a = beam_gain(Aod::new(psi, phi), Aod::new(psi_u, phi_u), 0.0, &arr).unwrap();
        let b = beam_gain(Aod::new(psi, -phi), Aod::new(psi_u, -phi_u), 0.0, &arr).unwrap();
        prop_assert!((a - b).abs() < 1e-9, "{} vs {}", a, b);
    }
}

fn two_sample_ks(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let mut worst = 0.0f64;
    for &x in a.iter().chain(&b) {
        let fa = a.partition_point(|&v| v <= x) as f64 / a.len() as f64;
        let fb = b.partition_point(|&v| v <= x) as f64 / b.len() as f64;
        worst = worst.max((fa - fb).abs());
    }
    worst
}

proptest! {
    #![proptest_config(cases(6))]

    #[test]
    fn gain_pdf_is_reproducible_and_converges(seed in 0u64..1000, psi in 5.0f64..85.0, micro in any::<bool>()) {
        let class = if micro { BsClass::Micro } else { BsClass::Macro };
        let arr = ArrayConfig::preset(1, class);
        let ue = ServedUeModel::new(class, 100.0, false);
        let geo = AzimuthHistograms::simple(Histogram1D::uniform(5.0, 40.0), Histogram1D::uniform(10.0, 30.0));
        let aod = Aod::new(psi, 30.0);
        let n = 4000;
        let a = gain_pdf(aod, &arr, &ue, &geo, n, seed).unwrap();
        prop_assert_eq!(&a, &gain_pdf(aod, &arr, &ue, &geo, n, seed).unwrap());
        let b = gain_pdf(aod, &arr, &ue, &geo, 2 * n, seed ^ 0x55).unwrap();
        let xs: Vec<f64> = a.atoms().chain(b.atoms()).map(|x| x.0).collect();
        let worst = xs.iter().map(|&x| (a.cdf(x) - b.cdf(x)).abs()).fold(0.0, f64::max);
        prop_assert!(worst < 2.0 / (n as f64).sqrt(), "sup |F_n - F_2n| = {}", worst);
    }

    #[test]
    fn gain_is_symmetric_in_azimuth(seed in 0u64..1000, psi in 5.0f64..85.0, phi in 0.0f64..180.0) {
        let arr = ArrayConfig::preset(1, BsClass::Micro);
        let ue = ServedUeModel::new(BsClass::Micro, 75.0, false);
        let geo = AzimuthHistograms::simple(Histogram1D::uniform(5.0, 40.0), Histogram1D::uniform(10.0, 30.0));
        let n = 20_000;
        let draw = |az: f64, s: u64| -> Vec<f64> {
            sample_gains(Aod::new(psi, az), &arr, &ue, &geo, n, s).iter().map(|d| d.gain_db).collect()
        };
        let d = two_sample_ks(draw(phi, seed), draw(-phi, seed + 1));
        // Two-sample critical value at the 0.1% level.
        prop_assert!(d < 1.95 * (2.0 / n as f64).sqrt(), "KS {}", d);
    }
}

// ---- link budget ----

fn spherical() -> SatGeometry {
    SatGeometry { earth_radius_m: 6_378_137.0, earth_model: EarthModel::Spherical, ..SatGeometry::default() }
}

proptest! {
    #![proptest_config(cases(512))]

    #[test]
    fn alpha_identity(g in -10.0f64..60.0, pl in 150.0f64..220.0, pol in 0.0f64..6.0) {
        let t = LinkTerms::new(g, pl, pol);
        prop_assert_eq!(t.alpha_db, g - pl - pol);
    }

    #[test]
    fn sat_gain_non_increasing(a in 0.0f64..90.0, b in 0.0f64..90.0, ls in prop::sample::select(vec![-20.0, -25.0, -30.0])) {
        let geom = SatGeometry { sidelobe_db: ls, ..SatGeometry::default() };
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(sat_gain(hi, &geom) <= sat_gain(lo, &geom) + 1e-12);
    }

    #[test]
    fn slant_range_bounds(lat in -90.0f64..90.0, lon in -180.0f64..180.0) {
        let (elev, _, slant) = elevation_and_offnadir(lat, lon, &spherical());
        if elev >= 0.0 {
            let km = slant / 1e3;
            prop_assert!((35_785.0..=41_680.0).contains(&km), "{} km at elevation {}", km, elev);
        }
    }

    #[test]
    fn visibility_boundary(lat in -90.0f64..90.0, lon in -180.0f64..180.0) {
        let geom = spherical();
        let gamma = (lat.to_radians().cos() * (lon - geom.sat_lon_deg).to_radians().cos()).acos().to_degrees();
        let (elev, _, _) = elevation_and_offnadir(lat, lon, &geom);
        if gamma < 81.25 {
            prop_assert!(elev > 0.0);
        } else if gamma > 81.35 {
            prop_assert!(elev < 0.0);
        }
    }
}

// ---- clutter ----

fn clutter_entry() -> impl Strategy<Value = ClutterEntry> {
    prop::collection::vec((0.0f64..5.0, 0.0f64..1.0), 1..10).prop_map(|steps| {
        let mut l = 0.0;
        let mut p = 0.0;
        let total: f64 = steps.iter().map(|s| s.1 + 0.01).sum();
        let mut cdf: Vec<(f64, f64)> = Vec::new();
        for (dl, dp) in steps {
            l += (dl * 4.0).round() / 4.0;
            p += (dp + 0.01) / total;
            cdf.push((l, p.min(1.0)));
        }
        cdf.last_mut().unwrap().1 = 1.0;
        ClutterEntry { sign: ModeSign::Positive, kind: LossKind::Clutter, elevation_deg: 30.0, bs_height_m: 6.0, cdf }
    })
}

proptest! {
    #![proptest_config(cases(128))]

    #[test]
    fn clutter_gain_pdf_is_normalized_and_non_positive(e in clutter_entry()) {
        let table = ClutterTable::new(vec![e.clone()]).unwrap();
        let back = ClutterTable::parse(&table.to_string(), "rt").unwrap();
        prop_assert_eq!(&back, &table);
        let g = e.gain_pdf(0.25).unwrap();
        prop_assert!((g.total_mass() - 1.0).abs() < 1e-12);
        prop_assert!(g.max_value().unwrap() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(cases(12))]

    #[test]
    fn synthetic_loss_is_monotone_for_positive_modes(
        seed in 0u64..1000, psi in 5.0f64..80.0, dpsi in 1.0f64..10.0, h in 1.0f64..40.0, dh in 1.0f64..20.0,
    ) {
        let geo = AzimuthHistograms::simple(Histogram1D::uniform(5.0, 45.0), Histogram1D::uniform(10.0, 40.0));
        let at = |p: f64, hb: f64| synthetic_clutter(&geo, ModeSign::Positive, p, hb, 6e9, 2000, seed);
        let base = at(psi, h);
        let higher_sat = at(psi + dpsi, h);
        let higher_bs = at(psi, h + dh);
        for k in 1..100 {
            let u = k as f64 / 100.0;
            prop_assert!(higher_sat.quantile(u) <= base.quantile(u));
            prop_assert!(higher_bs.quantile(u) <= base.quantile(u));
        }
    }

    #[test]
    fn sampling_reproduces_the_table(e in clutter_entry(), seed in 0u64..1000) {
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = 100_000;
        let mut xs: Vec<f64> = (0..n).map(|_| e.sample(&mut r)).collect();
        xs.sort_by(f64::total_cmp);
        let worst = e
            .cdf
            .iter()
            .map(|&(l, _)| (xs.partition_point(|&v| v <= l) as f64 / n as f64 - e.cdf_at(l)).abs())
            .fold(0.0, f64::max);
        prop_assert!(worst < 0.02, "KS {}", worst);
    }
}

// ---- modes ----

fn cross_section() -> impl Strategy<Value = CrossSection> {
    (0.0f64..60.0, 0.0f64..60.0, 0.0f64..40.0, 0.5f64..89.5)
        .prop_map(|(d1, d2, h_bs, psi_s)| CrossSection { d1, d2, h1: 0.0, h2: 0.0, h_bs, psi_s })
}

proptest! {
    #![proptest_config(cases(512))]

    #[test]
    fn occurrence_is_a_probability(cs in cross_section(), h in heights()) {
        for m in InterferenceMode::ALL {
            let p = p_mode(m, &cs, |x| h.cdf(x)).unwrap();
            prop_assert!((0.0..=1.0).contains(&p), "{} {}", m, p);
        }
    }

    #[test]
    fn direct_path_non_decreasing(cs in cross_section(), h in heights(), dpsi in 0.0f64..20.0, dh in 0.0f64..20.0, dd in 0.0f64..30.0) {
        let f = |c: &CrossSection| p_direct(c, |x| h.cdf(x)).unwrap();
        let base = f(&cs);
        let steeper = f(&CrossSection { psi_s: (cs.psi_s + dpsi).min(90.0), ..cs });
        let taller = f(&CrossSection { h_bs: cs.h_bs + dh, ..cs });
        let wider = f(&CrossSection { d2: cs.d2 + dd, ..cs });
        prop_assert!(steeper >= base && taller >= base && wider >= base);
    }
}

proptest! {
    #![proptest_config(cases(16))]

    #[test]
    fn macro_never_uses_building_first_modes(h in heights(), psi in 5.0f64..85.0, seed in 0u64..100) {
        let geo = AzimuthHistograms::simple(h, Histogram1D::uniform(10.0, 30.0));
        let bs = ServedUeModel::new(BsClass::Macro, 300.0, false);
        for m in [InterferenceMode::SB, InterferenceMode::DB] {
            prop_assert_eq!(mean_occurrence(m, &geo, &bs, psi, Placement::SingleStreet, 500, seed).unwrap(), 0.0);
        }
    }
}

#[test]
fn mode_set_cardinality() {
    assert_eq!(InterferenceMode::for_class(BsClass::Micro).len(), 5);
    assert_eq!(InterferenceMode::for_class(BsClass::Macro).len(), 3);
    let cfg = ScenarioConfig { method: Method::Gsmi, ..ScenarioConfig::default() };
    let micro = satcoex::aggregator::mode_set(&cfg, BsClass::Micro);
    let macro_ = satcoex::aggregator::mode_set(&cfg, BsClass::Macro);
    assert_eq!(micro.len(), 5);
    assert_eq!(macro_, vec![InterferenceMode::DP, InterferenceMode::GR, InterferenceMode::GB]);
}

// ---- distribution engine ----

fn linear_dist() -> impl Strategy<Value = LinearDistribution> {
    prop::collection::vec((0.01f64..100.0, 0.01f64..1.0), 1..8)
        .prop_map(|pw| LinearDistribution::new(pw.iter().map(|x| x.0).collect(), pw.iter().map(|x| x.1).collect()).unwrap())
}

fn cf_of(d: &LinearDistribution) -> CharFn {
    let grid = OmegaGrid::for_support(1e-2, 1e4, 256).unwrap();
    cf_from_linear(d, &grid)
}

fn bounded_with_unit_origin(phi: &CharFn, mean: f64) -> Result<(), TestCaseError> {
    prop_assert!((phi.value(0) - 1.0).norm() < 1e-12);
    for (j, l) in phi.log_values().iter().enumerate() {
        prop_assert!(l.re <= 1e-12, "log|phi| = {} at omega {}", l.re, phi.omega()[j]);
    }
    // |1 - phi(w)| <= w E[X] follows from phi(0) = 1.
    let w1 = phi.omega()[1];
    prop_assert!((phi.value(1) - 1.0).norm() <= w1 * mean * (1.0 + 1e-6));
    Ok(())
}

proptest! {
    #![proptest_config(cases(48))]

    #[test]
    fn cf_stays_bounded_under_pow_and_product(a in linear_dist(), b in linear_dist(), p in 0.1f64..200.0) {
        let (fa, fb) = (cf_of(&a), cf_of(&b));
        bounded_with_unit_origin(&fa, a.mean())?;
        bounded_with_unit_origin(&cf_pow(&fa, p).unwrap(), p * a.mean())?;
        bounded_with_unit_origin(&cf_product(&[&fa, &fb]).unwrap(), a.mean() + b.mean())?;
    }

    #[test]
    fn cf_pow_mean_is_linear(a in linear_dist(), p in prop::sample::select(vec![0.3, 1.0, 17.3, 155.5])) {
        let fa = cf_of(&a);
        let got = cf_pow(&fa, p).unwrap().mean();
        prop_assert!((got / (p * fa.mean()) - 1.0).abs() < 5e-3);
        prop_assert!((fa.mean() / a.mean() - 1.0).abs() < 5e-3);
    }

    #[test]
    fn db_convolve_commutes_and_associates(a in db_dist(), b in db_dist(), c in db_dist()) {
        prop_assert!(same_db(&db_convolve(&a, &b), &db_convolve(&b, &a), 1e-9));
        let left = db_convolve(&db_convolve(&a, &b), &c);
        let right = db_convolve(&a, &db_convolve(&b, &c));
        prop_assert!(same_db(&left, &right, 1e-9));
    }
}

proptest! {
    #![proptest_config(cases(16))]

    #[test]
    fn gil_pelaez_output_is_a_cdf(k in 0.5f64..20.0, theta in 1e-3f64..1e3, p in 0.3f64..50.0) {
        // Gamma(k, theta) raised to p is Gamma(k p, theta).
        let m = k * p * theta;
        let grid = OmegaGrid::for_support(m * 1e-3, m * 1e2, 1024).unwrap();
        let gamma = CharFn::from_fn(&grid, |w| Complex64::new(1.0, -w * theta).powf(-k));
        let phi = cf_pow(&gamma, p).unwrap();
        let cdf = gil_pelaez_cdf(&phi, &log_grid(m * 0.02, m * 20.0, 200)).unwrap();
        prop_assert!(cdf.cdf.iter().all(|v| (0.0..=1.0).contains(v)));
        prop_assert!(cdf.cdf.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!(cdf.max_adjustment < 1e-3, "adjustment {}", cdf.max_adjustment);
    }

    #[test]
    fn gil_pelaez_clips_and_sorts_atomic_inputs(a in linear_dist(), q in 1.0f64..50.0) {
        let phi = cf_pow(&cf_of(&a), q).unwrap();
        let m = q * a.mean();
        let cdf = gil_pelaez_cdf(&phi, &log_grid(m * 0.05, m * 20.0, 200)).unwrap();
        prop_assert!(cdf.cdf.iter().all(|v| (0.0..=1.0).contains(v)));
        prop_assert!(cdf.cdf.windows(2).all(|w| w[1] >= w[0]));
    }
}

// ---- aggregator ----

fn toy_mean(cfg: &ScenarioConfig) -> f64 {
    let geo = AzimuthHistograms::simple(Histogram1D::uniform(5.0, 35.0), Histogram1D::uniform(10.0, 30.0));
    let mut cfg = cfg.clone();
    cfg.sampling.n_theta = 2000;
    cfg.sampling.n_occurrence = 2000;
    cfg.sampling.points_per_decade = 256;
    run_city(&cfg, &geo, None).unwrap().mean_mw
}

proptest! {
    #![proptest_config(cases(6))]

    #[test]
    fn city_mean_is_linear_in_counts(k in 0.2f64..4.0) {
        let base = ScenarioConfig { method: Method::Gsmi, q_override: None, ..ScenarioConfig::toy(Method::Gsmi) };
        let m0 = toy_mean(&base);
        let scaled = [
            ScenarioConfig { loading: base.loading * k.min(1.0 / base.loading), ..base.clone() },
            ScenarioConfig { tdd_activity: base.tdd_activity * k.min(1.0 / base.tdd_activity), ..base.clone() },
            ScenarioConfig { density_per_m2: Some(base.density() * k), ..base.clone() },
            ScenarioConfig { q_override: Some(base.city_q() * k), ..base.clone() },
        ];
        for cfg in scaled {
            let want = m0 * cfg.city_q() / base.city_q();
            let got = toy_mean(&cfg);
            prop_assert!((got / want - 1.0).abs() < 1e-9, "{} vs {}", got, want);
        }
    }

    #[test]
    fn cluster_count_is_linear_in_urban_and_built_ratios(area in 1e9f64..1e13, ra in 0.01f64..1.0, rb in 0.001f64..0.1) {
        let cfg = ScenarioConfig { ratio_built: rb, ..ScenarioConfig::default() };
        let unit = ScenarioConfig { ratio_built: 1.0, ..ScenarioConfig::default() }.cluster_q(area, 1.0);
        prop_assert!((cfg.cluster_q(area, ra) / (unit * ra * rb) - 1.0).abs() < 1e-12);
    }
}
