//! Sectorized rectangular panels: element pattern, conventional beamforming
//! and Monte-Carlo gain distributions toward an interference direction.
//!
//! Angles: azimuth clockwise from North, elevation above the horizontal plane
//! at BS height. A panel with orientation `rho` and tilt `t` sees a direction
//! `(psi, phi)` at panel azimuth `phi - rho` and panel elevation `psi - t`, so
//! a negative tilt points the boresight below the horizon.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distengine::{DbDistribution, DEFAULT_STEP_DB};
use crate::error::{Error, Result};
use crate::geomstats::AzimuthHistograms;
use crate::rng;

/// Angle of departure (degrees).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aod {
    pub elevation_deg: f64,
    pub azimuth_deg: f64,
}

impl Aod {
    pub fn new(elevation_deg: f64, azimuth_deg: f64) -> Self {
        Aod { elevation_deg, azimuth_deg: wrap180(azimuth_deg) }
    }
}

/// Folds an angle into (-180, 180].
pub fn wrap180(a: f64) -> f64 {
    let mut a = a % 360.0;
    if a > 180.0 {
        a -= 360.0;
    } else if a <= -180.0 {
        a += 360.0;
    }
    a
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Hash, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum BsClass {
    Micro,
    Macro,
}

/// Panel description; field names follow the usual array-configuration tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArrayConfig {
    pub n_v: u32,
    pub n_h: u32,
    /// Vertical sub-array size (elements per RF chain).
    pub eta: u32,
    /// Transmit power per RF chain, dBm.
    pub p_t_dbm: f64,
    pub feeder_loss_db: f64,
    pub tilt_deg: f64,
    pub g_e_dbi: f64,
    pub psi_3db_deg: f64,
    pub phi_3db_deg: f64,
    /// Front-to-back ratio / side-lobe floor of the element.
    pub front_to_back_db: f64,
    pub shield_deg: f64,
    /// Element spacing in wavelengths.
    pub spacing: f64,
}

impl Default for ArrayConfig {
    fn default() -> Self {
        ArrayConfig::preset(1, BsClass::Macro)
    }
}

impl ArrayConfig {
    /// The two reference configurations (1 or 2) for macro and micro BSs.
    pub fn preset(config: u8, class: BsClass) -> Self {
        let (n_h, n_v, eta, p_t) = match (config, class) {
            (2, BsClass::Macro) => (8, 16, 2, 22.0),
            (2, BsClass::Micro) => (8, 8, 2, 16.0),
            (_, BsClass::Macro) => (8, 8, 1, 25.0),
            (_, BsClass::Micro) => (4, 8, 1, 19.0),
        };
        ArrayConfig {
            n_v,
            n_h,
            eta,
            p_t_dbm: p_t,
            feeder_loss_db: 3.0,
            tilt_deg: -10.0,
            g_e_dbi: 8.0,
            psi_3db_deg: 65.0,
            phi_3db_deg: 65.0,
            front_to_back_db: 30.0,
            shield_deg: 60.0,
            spacing: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_v == 0 || self.n_h == 0 || self.eta == 0 {
            return Err(Error::invalid("array dimensions and eta must be positive"));
        }
        if self.n_v % self.eta != 0 {
            return Err(Error::invalid(format!("eta={} must divide n_v={}", self.eta, self.n_v)));
        }
        if !(self.psi_3db_deg > 0.0 && self.phi_3db_deg > 0.0 && self.spacing > 0.0) {
            return Err(Error::invalid("beamwidths and spacing must be positive"));
        }
        if !(self.shield_deg > 0.0 && self.shield_deg <= 180.0) {
            return Err(Error::invalid("shield_deg must be in (0, 180]"));
        }
        Ok(())
    }

    /// P_T + 10 log10(N_V^2 N_H^2 / eta) - A_f.
    pub fn eirp_dbm(&self) -> f64 {
        let n2 = (self.n_v as f64 * self.n_h as f64).powi(2);
        self.p_t_dbm + 10.0 * (n2 / self.eta as f64).log10() - self.feeder_loss_db
    }

    /// Transmit term of the interference chain. Adding the array-factor peak
    /// `10 log10(N_V^2 N_H^2)` gives the EIRP.
    pub fn tx_power_dbm(&self) -> f64 {
        self.p_t_dbm - 10.0 * (self.eta as f64).log10() - self.feeder_loss_db
    }

    /// Peak of `|b^H a|^2` over both axes, dB.
    pub fn array_peak_db(&self) -> f64 {
        10.0 * (self.n_v as f64 * self.n_h as f64).powi(2).log10()
    }
}

/// Element gain (dBi) at panel-frame angles.
pub fn element_gain_panel(psi_deg: f64, phi_deg: f64, cfg: &ArrayConfig) -> f64 {
    let am = cfg.front_to_back_db;
    let ah = -(12.0 * (phi_deg / cfg.phi_3db_deg).powi(2)).min(am);
    let av = -(12.0 * (psi_deg / cfg.psi_3db_deg).powi(2)).min(am);
    cfg.g_e_dbi - (-(ah + av)).min(am)
}

/// Element gain toward `aod` for a panel at orientation 0 with the configured tilt.
pub fn element_gain(aod: Aod, cfg: &ArrayConfig) -> f64 {
    element_gain_panel(aod.elevation_deg - cfg.tilt_deg, wrap180(aod.azimuth_deg), cfg)
}

/// `|b^H(steer) a(target)|^2` for an N-element ULA, angles in degrees from broadside.
pub fn ula_factor(n: u32, spacing: f64, steer_deg: f64, target_deg: f64) -> f64 {
    let u = target_deg.to_radians().sin() - steer_deg.to_radians().sin();
    let x = 2.0 * PI * spacing * u;
    let s = (x / 2.0).sin();
    if s.abs() < 1e-12 {
        return (n as f64).powi(2);
    }
    let v = (n as f64 * x / 2.0).sin() / s;
    v * v
}

/// Total gain (dB) toward `target` while steering to `steer`, for a panel of
/// orientation `rho`. Targets outside the shielding half-angle give `-inf`.
pub fn beam_gain(target: Aod, steer: Aod, rho_deg: f64, cfg: &ArrayConfig) -> Result<f64> {
    let steer_az = wrap180(steer.azimuth_deg - rho_deg);
    if steer_az.abs() > cfg.shield_deg + 1e-9 {
        return Err(Error::invalid(format!(
            "panel at {rho_deg} deg cannot serve a UE at azimuth {} deg",
            steer.azimuth_deg
        )));
    }
    Ok(panel_gain(
        target.elevation_deg - cfg.tilt_deg,
        wrap180(target.azimuth_deg - rho_deg),
        steer.elevation_deg - cfg.tilt_deg,
        steer_az,
        cfg,
    ))
}

/// Gain with all angles already in the panel frame.
fn panel_gain(t_psi: f64, t_phi: f64, s_psi: f64, s_phi: f64, cfg: &ArrayConfig) -> f64 {
    if t_phi.abs() > cfg.shield_deg + 1e-9 {
        return f64::NEG_INFINITY;
    }
    let gh = ula_factor(cfg.n_h, cfg.spacing, s_phi, t_phi);
    let gv = ula_factor(cfg.n_v, cfg.spacing, s_psi.clamp(-90.0, 90.0), t_psi.clamp(-90.0, 90.0));
    let af = gh * gv;
    if af <= 0.0 {
        return f64::NEG_INFINITY;
    }
    10.0 * af.log10() + element_gain_panel(t_psi, t_phi, cfg)
}

/// How the served UE and the BS are placed around a panel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ServedUeModel {
    pub bs_class: BsClass,
    /// UEs are uniform over the sector of this radius...
    pub cell_radius_m: f64,
    /// ...but not closer than this to the BS.
    pub min_distance_m: f64,
    pub indoor: bool,
    pub outdoor_ue_height_m: f64,
    /// Micro BS mounting height, and the floor of the macro rooftop height.
    pub min_bs_height_m: f64,
    /// Macro height is the max of this many building-height draws.
    pub macro_height_draws: u32,
    /// Fixed UE direction and panel orientation (no randomness), for tests.
    pub fixed: Option<(Aod, f64)>,
}

impl ServedUeModel {
    pub fn new(bs_class: BsClass, cell_radius_m: f64, indoor: bool) -> Self {
        ServedUeModel {
            bs_class,
            cell_radius_m,
            min_distance_m: match bs_class {
                BsClass::Macro => 10.0,
                BsClass::Micro => 3.0,
            },
            indoor,
            outdoor_ue_height_m: 1.5,
            min_bs_height_m: 6.0,
            macro_height_draws: 3,
            fixed: None,
        }
    }

    /// UE at a fixed direction, panel orientation fixed.
    pub fn fixed(bs_class: BsClass, ue: Aod, rho_deg: f64) -> Self {
        let mut m = Self::new(bs_class, 100.0, false);
        m.fixed = Some((ue, rho_deg));
        m
    }

    pub fn sample_bs_height<R: Rng + ?Sized>(&self, geo: &AzimuthHistograms, rng: &mut R) -> f64 {
        match self.bs_class {
            BsClass::Micro => self.min_bs_height_m,
            BsClass::Macro => (0..self.macro_height_draws)
                .map(|_| geo.sample_height(rng))
                .fold(self.min_bs_height_m, f64::max),
        }
    }
}

/// One draw of the random geometry behind a gain sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GainDraw {
    pub bs_height_m: f64,
    pub ue: Aod,
    pub rho_deg: f64,
    pub gain_db: f64,
}

/// Draws UE position, heights and panel orientation, and returns the gain toward `mode`.
pub fn sample_gain<R: Rng + ?Sized>(
    mode: Aod,
    cfg: &ArrayConfig,
    ue: &ServedUeModel,
    geo: &AzimuthHistograms,
    rng: &mut R,
) -> GainDraw {
    if let Some((u, rho)) = ue.fixed {
        let g = panel_gain(
            mode.elevation_deg - cfg.tilt_deg,
            wrap180(mode.azimuth_deg - rho),
            u.elevation_deg - cfg.tilt_deg,
            wrap180(u.azimuth_deg - rho),
            cfg,
        );
        return GainDraw { bs_height_m: ue.min_bs_height_m, ue: u, rho_deg: rho, gain_db: g };
    }
    let h_bs = ue.sample_bs_height(geo, rng);
    let h_ue = if ue.indoor {
        let top = geo.sample_height(rng).max(ue.outdoor_ue_height_m);
        rng.random_range(ue.outdoor_ue_height_m..=top)
    } else {
        ue.outdoor_ue_height_m
    };
    let (r0, r1) = (ue.min_distance_m, ue.cell_radius_m.max(ue.min_distance_m));
    let r = (r0 * r0 + rng.random::<f64>() * (r1 * r1 - r0 * r0)).sqrt();
    let psi_k = (h_ue - h_bs).atan2(r).to_degrees();
    let sh = cfg.shield_deg;
    let ue_rel = rng.random_range(-sh..=sh);
    // Tri-sector macro: the panel covering the target azimuth is the one that
    // interferes, so the target is always inside its sector. Single-sector
    // micro: orientation uniform, target may fall behind the panel.
    let target_rel = match ue.bs_class {
        BsClass::Macro => rng.random_range(-sh..=sh),
        BsClass::Micro => rng.random_range(-180.0..180.0),
    };
    let rho = wrap180(mode.azimuth_deg - target_rel);
    let g = panel_gain(mode.elevation_deg - cfg.tilt_deg, target_rel, psi_k - cfg.tilt_deg, ue_rel, cfg);
    GainDraw { bs_height_m: h_bs, ue: Aod::new(psi_k, rho + ue_rel), rho_deg: rho, gain_db: g }
}

/// Monte-Carlo gain draws, reproducible for a seed and independent of threads.
pub fn sample_gains(
    mode: Aod,
    cfg: &ArrayConfig,
    ue: &ServedUeModel,
    geo: &AzimuthHistograms,
    n_samples: usize,
    seed: u64,
) -> Vec<GainDraw> {
    rng::par_samples(n_samples, seed, |r| sample_gain(mode, cfg, ue, geo, r))
}

/// Histogram (dB lattice) of the gain toward `mode`; shielded draws form the
/// `-inf` atom.
pub fn gain_pdf(
    mode: Aod,
    cfg: &ArrayConfig,
    ue: &ServedUeModel,
    geo: &AzimuthHistograms,
    n_samples: usize,
    seed: u64,
) -> Result<DbDistribution> {
    cfg.validate()?;
    let draws = sample_gains(mode, cfg, ue, geo, n_samples, seed);
    if draws.iter().all(|d| d.gain_db == f64::NEG_INFINITY) {
        return Err(Error::invalid(format!(
            "all {n_samples} gain draws toward azimuth {} are shielded; widen shield_deg or check the azimuth",
            mode.azimuth_deg
        )));
    }
    let g: Vec<f64> = draws.iter().map(|d| d.gain_db).collect();
    DbDistribution::from_samples(&g, DEFAULT_STEP_DB)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn element_anchors() {
        let c = ArrayConfig { tilt_deg: 0.0, ..ArrayConfig::default() };
        assert_eq!(element_gain(Aod::new(0.0, 0.0), &c), 8.0);
        // 12 (phi/phi3dB)^2 = 3 at phi = phi3dB/2.
        assert!((element_gain(Aod::new(0.0, 32.5), &c) - 5.0).abs() < 1e-12);
        assert!((element_gain(Aod::new(0.0, 180.0), &c) - (8.0 - 30.0)).abs() < 1e-12);
    }

    #[test]
    fn dirichlet_matches_direct_sum() {
        for &(n, s, t) in &[(8u32, 10.0f64, -25.0f64), (16, -3.0, 40.0), (4, 0.0, 0.0), (8, 30.0, 89.0)] {
            let (us, ut) = (f64::sin(s.to_radians()), f64::sin(t.to_radians()));
            let sum: Complex64 = (0..n).map(|k| Complex64::from_polar(1.0, PI * k as f64 * (ut - us))).sum();
            assert!((ula_factor(n, 0.5, s, t) - sum.norm_sqr()).abs() < 1e-9 * (n * n) as f64);
        }
    }

    #[test]
    fn matched_gain() {
        let c = ArrayConfig { tilt_deg: 0.0, ..ArrayConfig::default() };
        let a = Aod::new(0.0, 0.0);
        let g = beam_gain(a, a, 0.0, &c).unwrap();
        assert!((g - (36.1236 + 8.0)).abs() < 1e-3);
        assert_eq!(beam_gain(Aod::new(0.0, 90.0), a, 0.0, &c).unwrap(), f64::NEG_INFINITY);
        assert!(beam_gain(a, Aod::new(0.0, 90.0), 0.0, &c).is_err());
    }

    #[test]
    fn eirp_table() {
        for (cfg, class, eirp) in [(1, BsClass::Macro, 58.0), (1, BsClass::Micro, 46.0), (2, BsClass::Macro, 58.0), (2, BsClass::Micro, 46.0)] {
            let a = ArrayConfig::preset(cfg, class);
            assert!((a.eirp_dbm() - eirp).abs() < 0.2, "{cfg} {class:?} {}", a.eirp_dbm());
            assert!((a.tx_power_dbm() + a.array_peak_db() - a.eirp_dbm()).abs() < 1e-12);
        }
    }

    #[test]
    fn wrap() {
        assert_eq!(wrap180(190.0), -170.0);
        assert_eq!(wrap180(-180.0), 180.0);
        assert_eq!(wrap180(540.0), 180.0);
    }
}
