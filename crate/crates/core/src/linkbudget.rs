//! Deterministic terms of the satellite link: free-space loss, satellite
//! receive pattern, geostationary geometry and the noise floor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Free-space path loss in dB.
pub fn fspl(distance_m: f64, frequency_hz: f64) -> f64 {
    20.0 * (4.0 * std::f64::consts::PI * distance_m * frequency_hz / SPEED_OF_LIGHT).log10()
}

/// k_B * T * B in dBm.
pub fn noise_floor(t_sys_k: f64, bandwidth_hz: f64) -> f64 {
    10.0 * (BOLTZMANN * t_sys_k * bandwidth_hz).log10() + 30.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EarthModel {
    Spherical,
    /// WGS84 ellipsoid: geodetic station normal and position.
    #[default]
    Wgs84,
}

const WGS84_A: f64 = 6_378_137.0;
const WGS84_F: f64 = 1.0 / 298.257_223_563;

/// Geostationary satellite pointing at nadir.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SatGeometry {
    pub sat_lon_deg: f64,
    pub earth_radius_m: f64,
    pub orbit_radius_m: f64,
    pub max_gain_dbi: f64,
    pub beamwidth_deg: f64,
    /// Near-in sidelobe level relative to the peak (-20, -25 or -30 dB).
    pub sidelobe_db: f64,
    pub earth_model: EarthModel,
}

impl Default for SatGeometry {
    fn default() -> Self {
        SatGeometry {
            sat_lon_deg: 5.0,
            earth_radius_m: 6_371_000.0,
            orbit_radius_m: 42_164_000.0,
            max_gain_dbi: 22.0,
            beamwidth_deg: 15.0,
            sidelobe_db: -20.0,
            earth_model: EarthModel::Wgs84,
        }
    }
}

impl SatGeometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.orbit_radius_m > self.earth_radius_m && self.earth_radius_m > 0.0) {
            return Err(Error::invalid("orbit radius must exceed earth radius"));
        }
        if !(self.beamwidth_deg > 0.0) {
            return Err(Error::invalid("satellite beamwidth must be positive"));
        }
        if ![-20.0, -25.0, -30.0].contains(&self.sidelobe_db) {
            return Err(Error::invalid("sidelobe_db must be one of -20, -25, -30"));
        }
        Ok(())
    }
}

/// Single-feed circular-beam pattern: parabolic main lobe, flat near-in
/// sidelobe shelf at `G_m + L_s`, then `-25 log` decay down to 0 dBi (or to
/// the shelf, if that is already below 0 dBi).
pub fn sat_gain(off_nadir_deg: f64, geom: &SatGeometry) -> f64 {
    let psi0 = geom.beamwidth_deg / 2.0;
    let gm = geom.max_gain_dbi;
    let ls = geom.sidelobe_db;
    let a = match ls as i32 {
        -25 => 2.88,
        -30 => 3.16,
        _ => 2.58,
    };
    let b = 6.32;
    let r = off_nadir_deg.abs() / psi0;
    if r <= a {
        gm - 3.0 * r * r
    } else if r <= b {
        gm + ls
    } else {
        (gm + ls + 20.0 - 25.0 * r.log10()).max(0f64.min(gm + ls))
    }
}

/// Elevation of the satellite, off-nadir angle at the satellite and slant
/// range for a ground point, on a sphere.
pub fn elevation_and_offnadir(lat_deg: f64, lon_deg: f64, geom: &SatGeometry) -> (f64, f64, f64) {
    let (re, ro) = (geom.earth_radius_m, geom.orbit_radius_m);
    let cg = lat_deg.to_radians().cos() * (lon_deg - geom.sat_lon_deg).to_radians().cos();
    let cg = cg.clamp(-1.0, 1.0);
    let sg = (1.0 - cg * cg).sqrt();
    if sg < 1e-12 && cg > 0.0 {
        return (90.0, 0.0, ro - re);
    }
    let elev = ((cg - re / ro) / sg).atan().to_degrees();
    let slant = (re * re + ro * ro - 2.0 * re * ro * cg).sqrt();
    let off = (re * sg / slant).clamp(-1.0, 1.0).asin().to_degrees();
    (elev, off, slant)
}

/// Same triple using the configured earth model.
pub fn look_angles(lat_deg: f64, lon_deg: f64, geom: &SatGeometry) -> (f64, f64, f64) {
    match geom.earth_model {
        EarthModel::Spherical => elevation_and_offnadir(lat_deg, lon_deg, geom),
        EarthModel::Wgs84 => geodetic_look_angles(lat_deg, lon_deg, geom),
    }
}

fn geodetic_look_angles(lat_deg: f64, lon_deg: f64, geom: &SatGeometry) -> (f64, f64, f64) {
    let e2 = WGS84_F * (2.0 - WGS84_F);
    let (phi, lam) = (lat_deg.to_radians(), lon_deg.to_radians());
    let n = WGS84_A / (1.0 - e2 * phi.sin().powi(2)).sqrt();
    let p = [n * phi.cos() * lam.cos(), n * phi.cos() * lam.sin(), n * (1.0 - e2) * phi.sin()];
    let ls = geom.sat_lon_deg.to_radians();
    let s = [geom.orbit_radius_m * ls.cos(), geom.orbit_radius_m * ls.sin(), 0.0];
    let v = [s[0] - p[0], s[1] - p[1], s[2] - p[2]];
    let up = [phi.cos() * lam.cos(), phi.cos() * lam.sin(), phi.sin()];
    let range = norm(v);
    let elev = (dot(v, up) / range).clamp(-1.0, 1.0).asin().to_degrees();
    let to_pt = [-v[0], -v[1], -v[2]];
    let nadir = [-s[0], -s[1], -s[2]];
    let off = (dot(to_pt, nadir) / (range * norm(nadir))).clamp(-1.0, 1.0).acos().to_degrees();
    (elev, off, range)
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// Link terms above the clutter, all in dB.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinkTerms {
    pub path_loss_db: f64,
    pub polarization_loss_db: f64,
    pub sat_gain_dbi: f64,
    /// G_s - A_s - A_pol.
    pub alpha_db: f64,
}

impl LinkTerms {
    pub fn new(sat_gain_dbi: f64, path_loss_db: f64, polarization_loss_db: f64) -> Self {
        LinkTerms {
            path_loss_db,
            polarization_loss_db,
            sat_gain_dbi,
            alpha_db: sat_gain_dbi - path_loss_db - polarization_loss_db,
        }
    }
}
