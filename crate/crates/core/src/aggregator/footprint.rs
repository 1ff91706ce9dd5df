//! Footprint tessellation into geographic clusters.
//!
//! Pixels are 1x1 deg cells centred on integer latitude/longitude. A pixel is
//! kept when it lies inside the satellite's 3 dB contour and is mostly land
//! (bundled 1-deg land-fraction grid). Gains are quantized up to the next
//! integer dB, elevations to the nearest multiple of the step with the top
//! bucket capped so that near-nadir pixels join the highest populated one.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linkbudget::{look_angles, sat_gain, SatGeometry};

static LAND_PGM: &[u8] = include_bytes!("../../data/land_fraction_1deg.pgm");

/// Land fraction on a 1-deg grid: rows from 90N to 90S, columns from 180W to 179E.
pub struct LandMask {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl LandMask {
    pub fn bundled() -> Self {
        Self::from_pgm(LAND_PGM).expect("bundled land mask is a valid P5 file")
    }

    /// Binary PGM (P5, maxval 255) with optional `#` comments in the header.
    pub fn from_pgm(bytes: &[u8]) -> Result<Self> {
        let mut fields = Vec::new();
        let mut i = 0;
        while fields.len() < 4 && i < bytes.len() {
            match bytes[i] {
                b'#' => {
                    while i < bytes.len() && bytes[i] != b'\n' {
                        i += 1;
                    }
                }
                c if c.is_ascii_whitespace() => i += 1,
                _ => {
                    let s = i;
                    while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
                        i += 1;
                    }
                    fields.push(String::from_utf8_lossy(&bytes[s..i]).into_owned());
                }
            }
        }
        let bad = || Error::invalid("malformed PGM land mask");
        if fields.len() < 4 || fields[0] != "P5" {
            return Err(bad());
        }
        let width: usize = fields[1].parse().map_err(|_| bad())?;
        let height: usize = fields[2].parse().map_err(|_| bad())?;
        let data = bytes.get(i + 1..i + 1 + width * height).ok_or_else(bad)?.to_vec();
        Ok(LandMask { width, height, data })
    }

    /// Land fraction in [0, 1] of the pixel centred at integer (lat, lon).
    pub fn fraction(&self, lat: i32, lon: i32) -> f64 {
        let row = (90 - lat).clamp(0, self.height as i32 - 1) as usize;
        let col = (lon + 180).rem_euclid(360).min(self.width as i32 - 1) as usize;
        self.data[row * self.width + col] as f64 / 255.0
    }
}

/// Cluster of footprint pixels sharing quantized satellite gain and elevation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeographicCluster {
    pub sat_gain_dbi: f64,
    pub elevation_deg: f64,
    pub area_m2: f64,
    /// Mean slant range over the pixels (m).
    pub mean_slant_m: f64,
    pub pixels: Vec<(i32, i32)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TessellationParams {
    pub gain_step_db: f64,
    pub elevation_step_deg: f64,
    /// Elevation buckets above this are folded into it.
    pub max_elevation_bucket_deg: f64,
    /// Pixels with a smaller land fraction are dropped; 0 keeps everything.
    pub min_land_fraction: f64,
    /// Radius of the sphere used for pixel areas.
    pub area_radius_m: f64,
}

impl Default for TessellationParams {
    fn default() -> Self {
        TessellationParams {
            gain_step_db: 1.0,
            elevation_step_deg: 10.0,
            max_elevation_bucket_deg: 80.0,
            min_land_fraction: 0.5,
            area_radius_m: 6_371_000.0,
        }
    }
}

/// Area of the 1x1 deg pixel centred at `lat` on a sphere of radius `r`.
pub fn pixel_area(lat: i32, r: f64) -> f64 {
    let lo = (lat as f64 - 0.5).max(-90.0).to_radians();
    let hi = (lat as f64 + 0.5).min(90.0).to_radians();
    r * r * 1f64.to_radians() * (hi.sin() - lo.sin())
}

pub fn tessellate_footprint(geom: &SatGeometry, params: &TessellationParams) -> Result<Vec<GeographicCluster>> {
    geom.validate()?;
    if !(params.gain_step_db > 0.0 && params.elevation_step_deg > 0.0) {
        return Err(Error::invalid("quantization steps must be positive"));
    }
    let land = LandMask::bundled();
    let floor = geom.max_gain_dbi - 3.0;
    let qg = |g: f64| (g / params.gain_step_db - 1e-9).ceil() * params.gain_step_db;
    let qe = |e: f64| {
        ((e / params.elevation_step_deg).round() * params.elevation_step_deg).min(params.max_elevation_bucket_deg)
    };
    let mut groups: BTreeMap<(i64, i64), GeographicCluster> = BTreeMap::new();
    let lon0 = geom.sat_lon_deg.round() as i32;
    for lat in -90..=90 {
        for dl in -180..180 {
            let lon = lon0 + dl;
            let (elev, off, slant) = look_angles(lat as f64, lon as f64, geom);
            if elev <= 0.0 {
                continue;
            }
            let g = sat_gain(off, geom);
            if g < floor {
                continue;
            }
            let wrapped = (lon + 180).rem_euclid(360) - 180;
            if land.fraction(lat, wrapped) < params.min_land_fraction {
                continue;
            }
            let (gq, eq) = (qg(g), qe(elev));
            let key = ((gq * 1000.0).round() as i64, (eq * 1000.0).round() as i64);
            let c = groups.entry(key).or_insert_with(|| GeographicCluster {
                sat_gain_dbi: gq,
                elevation_deg: eq,
                area_m2: 0.0,
                mean_slant_m: 0.0,
                pixels: Vec::new(),
            });
            c.area_m2 += pixel_area(lat, params.area_radius_m);
            c.mean_slant_m += slant;
            c.pixels.push((lat, wrapped));
        }
    }
    Ok(groups
        .into_values()
        .map(|mut c| {
            c.mean_slant_m /= c.pixels.len() as f64;
            c
        })
        .collect())
}
