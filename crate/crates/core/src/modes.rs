//! Interference modes and their occurrence probabilities.
//!
//! Cross-section along the satellite azimuth: the BS at `x = 0`, height
//! `h_bs`; the front building (toward the satellite) has its facade at
//! `x = d2` and height `h2`; the rear building has its facade at `x = -d1` and
//! height `h1`. With `t = tan(psi_s)`, `d = d1 + d2` and `F` the height CDF
//! (`F(x) = 0` for `x < 0`), image-method thresholds give
//!
//! | mode | path exists when                                   | probability |
//! |------|----------------------------------------------------|-------------|
//! | DP   | `h2 <= h_bs + d2 t`                                | `F(h_bs + d2 t)` |
//! | SB   | `h1 > h_bs + d1 t`, `h2 <= h_bs + (2 d1 + d2) t`   | `(1 - F(h_bs + d1 t)) F(h_bs + (2 d1 + d2) t)` |
//! | DB   | `h_bs + d2 t < h2 <= h_bs + (d2 + 2d) t`, `h1 > h_bs + (d2 + d) t` | `(F(h_bs + (d2 + 2d) t) - F(h_bs + d2 t)) (1 - F(h_bs + (d2 + d) t))` |
//! | GR   | `h2 <= max(d2 t - h_bs, 0)`                        | `F(max(d2 t - h_bs, 0))` |
//! | GB   | `0 <= d1 t - h_bs < h1`, `h2 <= (2 d1 + d2) t - h_bs` | `1[d1 t >= h_bs] (1 - F(d1 t - h_bs)) F((2 d1 + d2) t - h_bs)` |
//!
//! Ground reflections use the image BS at `-h_bs`. A ray that lands on a roof
//! is lost; a zero-height building is bare ground. DB leaves toward the
//! satellite, bounces on the front then the rear facade, and must clear the
//! front roof afterwards (exactly two reflections).

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::antenna::{Aod, BsClass, ServedUeModel};
use crate::error::{Error, Result};
use crate::geomstats::AzimuthHistograms;
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum InterferenceMode {
    DP,
    SB,
    DB,
    GR,
    GB,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeSign {
    Positive,
    Negative,
}

impl fmt::Display for ModeSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModeSign::Positive => "positive",
            ModeSign::Negative => "negative",
        })
    }
}

impl fmt::Display for InterferenceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl InterferenceMode {
    pub const ALL: [InterferenceMode; 5] = [Self::DP, Self::SB, Self::DB, Self::GR, Self::GB];
    /// Rooftop BSs have no building above them to bounce off first.
    pub const ROOFTOP: [InterferenceMode; 3] = [Self::DP, Self::GR, Self::GB];

    pub fn for_class(class: BsClass) -> &'static [InterferenceMode] {
        match class {
            BsClass::Micro => &Self::ALL,
            BsClass::Macro => &Self::ROOFTOP,
        }
    }

    pub fn sign(self) -> ModeSign {
        match self {
            Self::DP | Self::SB | Self::DB => ModeSign::Positive,
            Self::GR | Self::GB => ModeSign::Negative,
        }
    }

    /// Building bounces, ground bounces.
    pub fn bounces(self) -> (u32, u32) {
        match self {
            Self::DP => (0, 0),
            Self::SB => (1, 0),
            Self::DB => (2, 0),
            Self::GR => (0, 1),
            Self::GB => (1, 1),
        }
    }

    /// Departure direction at the BS for a satellite at `(psi_s, phi_s)`.
    pub fn aod(self, psi_s: f64, phi_s: f64) -> Aod {
        match self {
            Self::DP | Self::DB => Aod::new(psi_s, phi_s),
            Self::SB => Aod::new(psi_s, phi_s + 180.0),
            Self::GR => Aod::new(-psi_s, phi_s),
            Self::GB => Aod::new(-psi_s, phi_s + 180.0),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.to_string().eq_ignore_ascii_case(s))
    }
}

/// Two-building cross-section along the satellite azimuth.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossSection {
    pub d1: f64,
    pub d2: f64,
    pub h1: f64,
    pub h2: f64,
    pub h_bs: f64,
    pub psi_s: f64,
}

impl CrossSection {
    fn check(&self) -> Result<()> {
        if !(self.psi_s > 0.0 && self.psi_s <= 90.0) {
            return Err(Error::invalid(format!("satellite elevation {} deg is not in (0, 90]", self.psi_s)));
        }
        if !(self.d1 >= 0.0 && self.d2 >= 0.0 && self.h1 >= 0.0 && self.h2 >= 0.0 && self.h_bs >= 0.0) {
            return Err(Error::invalid("cross-section distances and heights must be >= 0"));
        }
        Ok(())
    }
}

/// `F_h(h_bs + d2 tan psi)`.
pub fn p_direct(cs: &CrossSection, f_h: impl Fn(f64) -> f64) -> Result<f64> {
    p_mode(InterferenceMode::DP, cs, f_h)
}

/// Probability over `(h1, h2)` i.i.d. from `f_h` that the mode's path exists;
/// `cs.h1`/`cs.h2` are ignored.
pub fn p_mode(mode: InterferenceMode, cs: &CrossSection, f_h: impl Fn(f64) -> f64) -> Result<f64> {
    cs.check()?;
    let f = |x: f64| if x < 0.0 { 0.0 } else { f_h(x).clamp(0.0, 1.0) };
    if cs.psi_s >= 90.0 {
        return Ok(match mode {
            InterferenceMode::DP | InterferenceMode::GR => 1.0,
            _ => 0.0,
        });
    }
    let t = cs.psi_s.to_radians().tan();
    let (d1, d2, hb) = (cs.d1, cs.d2, cs.h_bs);
    let d = d1 + d2;
    let p = match mode {
        InterferenceMode::DP => f(hb + d2 * t),
        InterferenceMode::SB => (1.0 - f(hb + d1 * t)) * f(hb + (2.0 * d1 + d2) * t),
        InterferenceMode::DB => {
            (f(hb + (d2 + 2.0 * d) * t) - f(hb + d2 * t)).max(0.0) * (1.0 - f(hb + (d2 + d) * t))
        }
        InterferenceMode::GR => f((d2 * t - hb).max(0.0)),
        InterferenceMode::GB => {
            let hit = d1 * t - hb;
            if hit < 0.0 {
                0.0
            } else {
                (1.0 - f(hit)) * f((2.0 * d1 + d2) * t - hb)
            }
        }
    };
    Ok(p.clamp(0.0, 1.0))
}

/// How the BS sits between the two buildings.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// One street of width `d ~ P(d)`, BS uniform on it.
    #[default]
    SingleStreet,
    /// Rear and front distances from independent street draws.
    Independent,
}

/// Draws a cross-section (heights included) for the satellite elevation.
pub fn sample_cross_section<R: Rng + ?Sized>(
    geo: &AzimuthHistograms,
    bs: &ServedUeModel,
    psi_s: f64,
    placement: Placement,
    rng: &mut R,
) -> CrossSection {
    let (d1, d2) = match placement {
        Placement::SingleStreet => {
            let d = geo.sample_distance(rng);
            let d1 = rng.random::<f64>() * d;
            (d1, d - d1)
        }
        Placement::Independent => {
            let a = geo.sample_distance(rng) * rng.random::<f64>();
            let b = geo.sample_distance(rng) * rng.random::<f64>();
            (a, b)
        }
    };
    let h_bs = bs.sample_bs_height(geo, rng);
    let h1 = geo.sample_height(rng);
    let h2 = geo.sample_height(rng);
    CrossSection { d1, d2, h1, h2, h_bs, psi_s }
}

/// Mean occurrence probability over random cross-sections. Rooftop (macro)
/// BSs return 0 for SB and DB.
pub fn mean_occurrence(
    mode: InterferenceMode,
    geo: &AzimuthHistograms,
    bs: &ServedUeModel,
    psi_s: f64,
    placement: Placement,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    if !InterferenceMode::for_class(bs.bs_class).contains(&mode) {
        return Ok(0.0);
    }
    if n_samples == 0 {
        return Err(Error::invalid("mean_occurrence needs n_samples > 0"));
    }
    let ps = rng::par_samples(n_samples, seed, |r| {
        let cs = sample_cross_section(geo, bs, psi_s, placement, r);
        p_mode(mode, &cs, |x| geo.height_cdf(x))
    });
    let mut sum = 0.0;
    for p in ps {
        sum += p?;
    }
    Ok(sum / n_samples as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Surface {
    Ground,
    Front,
    Rear,
}

/// Traces the mode's launch ray through the cross-section (with its own
/// heights) by explicit specular reflection and reports whether it escapes
/// toward the satellite after exactly the mode's bounce sequence.
pub fn raycast(mode: InterferenceMode, cs: &CrossSection) -> bool {
    let want: &[Surface] = match mode {
        InterferenceMode::DP => &[],
        InterferenceMode::SB => &[Surface::Rear],
        InterferenceMode::DB => &[Surface::Front, Surface::Rear],
        InterferenceMode::GR => &[Surface::Ground],
        InterferenceMode::GB => &[Surface::Ground, Surface::Rear],
    };
    let a = mode.aod(cs.psi_s, 0.0);
    let (s, c) = a.elevation_deg.to_radians().sin_cos();
    let toward = a.azimuth_deg.abs() < 90.0;
    let mut dir = [if toward { c } else { -c }, s];
    let mut pos = [0.0, cs.h_bs];
    let mut hits = Vec::new();
    for _ in 0..8 {
        match next_hit(pos, dir, cs) {
            None => return hits == want && dir[0] >= 0.0 && dir[1] > 0.0,
            Some((p, surf)) => {
                let Some(surf) = surf else { return false };
                hits.push(surf);
                if hits.len() > want.len() || hits[hits.len() - 1] != want[hits.len() - 1] {
                    return false;
                }
                pos = p;
                match surf {
                    Surface::Ground => dir[1] = -dir[1],
                    _ => dir[0] = -dir[0],
                }
            }
        }
    }
    false
}

/// Nearest intersection after `pos` along `dir`; `Some((p, None))` for a roof.
fn next_hit(pos: [f64; 2], dir: [f64; 2], cs: &CrossSection) -> Option<([f64; 2], Option<Surface>)> {
    const EPS: f64 = 1e-9;
    let mut best: Option<(f64, Option<Surface>)> = None;
    let mut consider = |t: f64, s: Option<Surface>| {
        if t > EPS && best.is_none_or(|(bt, _)| t < bt) {
            best = Some((t, s));
        }
    };
    let at = |t: f64| [pos[0] + t * dir[0], pos[1] + t * dir[1]];
    let (xf, xr) = (cs.d2, -cs.d1);
    // Ground (street, or anywhere a building has zero height).
    if dir[1] < 0.0 {
        let t = -pos[1] / dir[1];
        let x = at(t)[0];
        let street = x >= xr - EPS && x <= xf + EPS;
        if street || (x > xf && cs.h2 == 0.0) || (x < xr && cs.h1 == 0.0) {
            consider(t, Some(Surface::Ground));
        }
    }
    // Facades and roofs.
    for (xw, h, surf, outward) in [(xf, cs.h2, Surface::Front, 1.0), (xr, cs.h1, Surface::Rear, -1.0)] {
        if h <= 0.0 {
            continue;
        }
        if dir[0] * outward > 0.0 {
            let t = (xw - pos[0]) / dir[0];
            let y = at(t)[1];
            if (0.0..=h).contains(&y) {
                consider(t, Some(surf));
            }
        }
        if dir[1] < 0.0 {
            let t = (h - pos[1]) / dir[1];
            let x = at(t)[0];
            if (x - xw) * outward >= 0.0 {
                consider(t, None);
            }
        }
    }
    best.map(|(t, s)| (at(t), s))
}

/// Fraction of `n` sampled cross-sections in which `raycast` succeeds.
pub fn raycast_oracle<F>(mode: InterferenceMode, sample: F, n: usize, seed: u64) -> f64
where
    F: Fn(&mut rng::Rng) -> CrossSection + Sync,
{
    let hits = rng::par_chunks(n, seed, |r, _, len| (0..len).filter(|_| raycast(mode, &sample(r))).count());
    hits.into_iter().sum::<usize>() as f64 / n.max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geomstats::Histogram1D;

    fn cs(d1: f64, d2: f64, h_bs: f64, psi: f64) -> CrossSection {
        CrossSection { d1, d2, h1: 0.0, h2: 0.0, h_bs, psi_s: psi }
    }

    #[test]
    fn direct_closed_form() {
        let h = Histogram1D::uniform(0.0, 30.0);
        let p = p_direct(&cs(5.0, 20.0, 6.0, 30.0), |x| h.cdf(x)).unwrap();
        // 6 + 20 tan 30 = 17.547; 17.547 / 30 = 0.585
        assert!((p - (6.0 + 20.0 / 3f64.sqrt()) / 30.0).abs() < 1e-12);
        assert!((p - 0.585).abs() < 5e-4);
        assert_eq!(p_direct(&cs(5.0, 20.0, 6.0, 90.0), |x| h.cdf(x)).unwrap(), 1.0);
        assert_eq!(p_direct(&cs(5.0, 20.0, 31.0, 10.0), |x| h.cdf(x)).unwrap(), 1.0);
        assert!(p_direct(&cs(5.0, 20.0, 6.0, 0.0), |x| h.cdf(x)).is_err());
    }

    #[test]
    fn flat_ground() {
        let none = |_: f64| 1.0;
        let c = cs(10.0, 10.0, 6.0, 40.0);
        let p: Vec<f64> = InterferenceMode::ALL.iter().map(|&m| p_mode(m, &c, none).unwrap()).collect();
        assert_eq!(p, vec![1.0, 0.0, 0.0, 1.0, 0.0]);
        for m in InterferenceMode::ALL {
            let want = matches!(m, InterferenceMode::DP | InterferenceMode::GR);
            assert_eq!(raycast(m, &c), want, "{m}");
        }
    }

    #[test]
    fn gr_with_ground_level_bs_is_direct() {
        let h = Histogram1D::uniform(0.0, 30.0);
        let c = cs(7.0, 13.0, 0.0, 35.0);
        let a = p_mode(InterferenceMode::GR, &c, |x| h.cdf(x)).unwrap();
        let b = p_direct(&c, |x| h.cdf(x)).unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn raycast_cases() {
        let mut c = cs(10.0, 10.0, 6.0, 30.0);
        c.h2 = 40.0;
        assert!(!raycast(InterferenceMode::DP, &c));
        // Tall rear wall, low front: single bounce escapes.
        c.h1 = 40.0;
        c.h2 = 5.0;
        assert!(raycast(InterferenceMode::SB, &c));
        // Rear building too low for a GB bounce (hit at 10 tan30 - 6 = -0.2 < 0).
        assert!(!raycast(InterferenceMode::GB, &c));
        c.d1 = 30.0;
        assert!(raycast(InterferenceMode::GB, &c));
    }

    #[test]
    fn macro_excludes_building_first_modes() {
        let geo = AzimuthHistograms::simple(Histogram1D::uniform(0.0, 30.0), Histogram1D::uniform(10.0, 30.0));
        let bs = ServedUeModel::new(BsClass::Macro, 300.0, false);
        for m in [InterferenceMode::SB, InterferenceMode::DB] {
            assert_eq!(mean_occurrence(m, &geo, &bs, 30.0, Placement::SingleStreet, 100, 1).unwrap(), 0.0);
        }
        let micro = ServedUeModel::new(BsClass::Micro, 75.0, false);
        let dp = |psi| mean_occurrence(InterferenceMode::DP, &geo, &micro, psi, Placement::SingleStreet, 2000, 1).unwrap();
        assert_eq!(dp(90.0), 1.0);
        assert!(dp(20.0) <= dp(50.0) && dp(50.0) <= dp(80.0));
    }
}
