//! Clutter-loss tables (empirical CDFs per mode sign, elevation and BS height)
//! and a synthetic knife-edge generator for when no measured table exists.
//!
//! File format: `#` starts a comment; each entry is a header line followed by
//! `loss_db, cum_prob` rows with non-decreasing loss and probability ending at 1.
//!
//! ```text
//! [entry sign=positive kind=clutter elevation_deg=20 bs_height_m=6]
//! 0, 0.35
//! 12.5, 0.8
//! 30, 1
//! ```
//!
//! The synthetic model is not a propagation model of record. It draws an
//! obstacle at `x ~ U[0, d]` with `d` and its height `h` from the geometry
//! statistics and applies single knife-edge diffraction to the ray leaving at
//! `psi_s`. Positive modes start at the BS (`h_bs`); negative modes start at
//! its ground image (`-h_bs`), so a ground bounce is only clear of the
//! obstacle when `x tan(psi_s) > h_bs + h`.

use std::fmt::{self, Write as _};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distengine::DbDistribution;
use crate::error::{Error, Result};
use crate::geomstats::AzimuthHistograms;
use crate::linkbudget::SPEED_OF_LIGHT;
use crate::modes::{InterferenceMode, ModeSign};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Clutter,
    Diffraction,
    Reflection,
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::Clutter => "clutter",
            LossKind::Diffraction => "diffraction",
            LossKind::Reflection => "reflection",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClutterEntry {
    pub sign: ModeSign,
    pub kind: LossKind,
    pub elevation_deg: f64,
    pub bs_height_m: f64,
    /// `(loss_db, cum_prob)`, loss non-decreasing, last probability 1.
    pub cdf: Vec<(f64, f64)>,
}

impl ClutterEntry {
    pub fn validate(&self) -> Result<()> {
        let what = || format!("{} {} psi={} h_bs={}", self.sign, self.kind, self.elevation_deg, self.bs_height_m);
        if self.cdf.is_empty() {
            return Err(Error::invalid(format!("empty CDF for {}", what())));
        }
        let mut prev = (f64::NEG_INFINITY, 0.0);
        for &(l, p) in &self.cdf {
            if !(l >= 0.0) || !l.is_finite() {
                return Err(Error::invalid(format!("{}: loss {l} dB must be finite and >= 0", what())));
            }
            if !(0.0..=1.0 + 1e-9).contains(&p) || l < prev.0 || p < prev.1 - 1e-12 {
                return Err(Error::invalid(format!("{}: CDF not monotone at ({l}, {p})", what())));
            }
            prev = (l, p);
        }
        if (prev.1 - 1.0).abs() > 1e-6 {
            return Err(Error::invalid(format!("{}: CDF ends at {} instead of 1", what(), prev.1)));
        }
        Ok(())
    }

    /// Smallest tabulated loss whose cumulative probability reaches `u`.
    pub fn quantile(&self, u: f64) -> f64 {
        self.cdf.iter().find(|&&(_, p)| p >= u - 1e-12).unwrap_or(self.cdf.last().unwrap()).0
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }

    pub fn cdf_at(&self, loss: f64) -> f64 {
        self.cdf.iter().take_while(|&&(l, _)| l <= loss).last().map_or(0.0, |&(_, p)| p)
    }

    /// Gain (`-loss`) distribution on the dB lattice of `step`.
    pub fn gain_pdf(&self, step: f64) -> Result<DbDistribution> {
        let mut prev = 0.0;
        let atoms: Vec<(f64, f64)> = self
            .cdf
            .iter()
            .map(|&(l, p)| {
                let w = (p - prev).max(0.0);
                prev = p;
                (-l, w)
            })
            .collect();
        DbDistribution::from_weighted_samples(atoms.iter().copied(), step)
    }

    fn header(&self) -> String {
        format!(
            "[entry sign={} kind={} elevation_deg={} bs_height_m={}]",
            self.sign, self.kind, self.elevation_deg, self.bs_height_m
        )
    }
}

/// Immutable collection of entries; lookups snap to the nearest elevation,
/// then the nearest BS height at that elevation.
#[derive(Clone, Debug, PartialEq)]
pub struct ClutterTable {
    entries: Vec<ClutterEntry>,
}

impl ClutterTable {
    pub fn new(entries: Vec<ClutterEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid("clutter table has no entries"));
        }
        for e in &entries {
            e.validate()?;
        }
        Ok(ClutterTable { entries })
    }

    /// Every query returns 0 dB loss.
    pub fn lossless() -> Self {
        let entries = [ModeSign::Positive, ModeSign::Negative]
            .into_iter()
            .map(|sign| ClutterEntry {
                sign,
                kind: LossKind::Clutter,
                elevation_deg: 45.0,
                bs_height_m: 6.0,
                cdf: vec![(0.0, 1.0)],
            })
            .collect();
        ClutterTable { entries }
    }

    pub fn entries(&self) -> &[ClutterEntry] {
        &self.entries
    }

    pub fn lookup(&self, sign: ModeSign, kind: LossKind, psi_s: f64, h_bs: f64) -> Result<&ClutterEntry> {
        let missing = || Error::MissingClutter {
            sign: sign.to_string(),
            kind: kind.to_string(),
            elevation_deg: psi_s,
            bs_height_m: h_bs,
        };
        let matching = || self.entries.iter().filter(|e| e.sign == sign && e.kind == kind);
        let closest = |best: Option<f64>, v: f64, x: f64| match best {
            Some(b) if (b - x).abs() <= (v - x).abs() => Some(b),
            _ => Some(v),
        };
        let psi = matching().fold(None, |b, e| closest(b, e.elevation_deg, psi_s)).ok_or_else(missing)?;
        let h = matching()
            .filter(|e| e.elevation_deg == psi)
            .fold(None, |b, e| closest(b, e.bs_height_m, h_bs))
            .ok_or_else(missing)?;
        Ok(matching().find(|e| e.elevation_deg == psi && e.bs_height_m == h).unwrap())
    }

    pub fn parse(text: &str, name: &str) -> Result<Self> {
        let perr = |line: usize, msg: String| Error::Parse { file: name.to_string(), line, msg };
        let mut entries: Vec<ClutterEntry> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            if let Some(body) = line.strip_prefix('[') {
                let body = body.strip_suffix(']').ok_or_else(|| perr(i + 1, "unterminated header".into()))?;
                let mut it = body.split_whitespace();
                if it.next() != Some("entry") {
                    return Err(perr(i + 1, "header must start with 'entry'".into()));
                }
                let (mut sign, mut kind, mut psi, mut h) = (None, None, None, None);
                for kv in it {
                    let (k, v) = kv.split_once('=').ok_or_else(|| perr(i + 1, format!("expected key=value, got '{kv}'")))?;
                    let num = || v.parse::<f64>().map_err(|_| perr(i + 1, format!("bad number '{v}'")));
                    match k {
                        "sign" => {
                            sign = Some(match v {
                                "positive" => ModeSign::Positive,
                                "negative" => ModeSign::Negative,
                                _ => return Err(perr(i + 1, format!("unknown sign '{v}'"))),
                            })
                        }
                        "kind" => {
                            kind = Some(match v {
                                "clutter" => LossKind::Clutter,
                                "diffraction" => LossKind::Diffraction,
                                "reflection" => LossKind::Reflection,
                                _ => return Err(perr(i + 1, format!("unknown kind '{v}'"))),
                            })
                        }
                        "elevation_deg" => psi = Some(num()?),
                        "bs_height_m" => h = Some(num()?),
                        _ => return Err(perr(i + 1, format!("unknown key '{k}'"))),
                    }
                }
                entries.push(ClutterEntry {
                    sign: sign.ok_or_else(|| perr(i + 1, "missing sign".into()))?,
                    kind: kind.unwrap_or(LossKind::Clutter),
                    elevation_deg: psi.ok_or_else(|| perr(i + 1, "missing elevation_deg".into()))?,
                    bs_height_m: h.ok_or_else(|| perr(i + 1, "missing bs_height_m".into()))?,
                    cdf: Vec::new(),
                });
                continue;
            }
            let e = entries.last_mut().ok_or_else(|| perr(i + 1, "data row before any [entry] header".into()))?;
            let (l, p) = line.split_once(',').ok_or_else(|| perr(i + 1, "expected 'loss_db, cum_prob'".into()))?;
            let l: f64 = l.trim().parse().map_err(|_| perr(i + 1, format!("bad loss '{}'", l.trim())))?;
            let p: f64 = p.trim().parse().map_err(|_| perr(i + 1, format!("bad probability '{}'", p.trim())))?;
            e.cdf.push((l, p));
        }
        Self::new(entries)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn save(&self, path: impl AsRef<Path>, comment: &str) -> Result<()> {
        let path = path.as_ref();
        let mut s = String::new();
        for l in comment.lines() {
            let _ = writeln!(s, "# {l}");
        }
        s.push_str(&self.to_string());
        std::fs::write(path, s).map_err(|e| Error::io(path, e))
    }
}

impl fmt::Display for ClutterTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            writeln!(f, "{}", e.header())?;
            for (l, p) in &e.cdf {
                // Shortest round-tripping representation.
                writeln!(f, "{l:?}, {p:?}")?;
            }
        }
        Ok(())
    }
}

/// Clutter-gain distribution (dB, `<= 0`) of `mode` at `(psi_s, h_bs)`.
pub fn clutter_gain_pdf(
    mode: InterferenceMode,
    psi_s: f64,
    h_bs: f64,
    table: &ClutterTable,
    step: f64,
) -> Result<DbDistribution> {
    table.lookup(mode.sign(), LossKind::Clutter, psi_s, h_bs)?.gain_pdf(step)
}

/// Single knife-edge diffraction loss (dB) for normalized height `nu`, clamped to [0, 60].
pub fn knife_edge_loss(nu: f64) -> f64 {
    if nu <= -0.78 {
        return 0.0;
    }
    let v = nu - 0.1;
    (6.9 + 20.0 * ((v * v + 1.0).sqrt() + v).log10()).clamp(0.0, 60.0)
}

/// Knife-edge loss of the ray leaving at `psi_s` over an obstacle of height
/// `h` at distance `x`; `source_height` is `h_bs` or `-h_bs` (ground image).
pub fn ray_loss(source_height: f64, psi_s: f64, x: f64, h: f64, wavelength: f64) -> f64 {
    if psi_s >= 90.0 {
        return 0.0;
    }
    let x = x.max(0.1);
    let clearance = source_height + x * psi_s.to_radians().tan() - h;
    knife_edge_loss(-clearance * (2.0 / (wavelength * x)).sqrt())
}

/// Loss resolution of synthetic entries.
pub const SYNTHETIC_STEP_DB: f64 = 0.25;

/// Monte-Carlo knife-edge clutter entry for one `(sign, psi_s, h_bs)`.
pub fn synthetic_clutter(
    geo: &AzimuthHistograms,
    sign: ModeSign,
    psi_s: f64,
    h_bs: f64,
    frequency_hz: f64,
    n_samples: usize,
    seed: u64,
) -> ClutterEntry {
    let lambda = SPEED_OF_LIGHT / frequency_hz;
    let src = match sign {
        ModeSign::Positive => h_bs,
        ModeSign::Negative => -h_bs,
    };
    let mut losses = rng::par_samples(n_samples.max(1), seed, |r| {
        let d = geo.sample_distance(r);
        let x = r.random::<f64>() * d;
        let h = geo.sample_height(r);
        (ray_loss(src, psi_s, x, h, lambda) / SYNTHETIC_STEP_DB).round() * SYNTHETIC_STEP_DB
    });
    losses.sort_by(f64::total_cmp);
    let n = losses.len() as f64;
    let mut cdf: Vec<(f64, f64)> = Vec::new();
    for (i, &l) in losses.iter().enumerate() {
        let p = (i + 1) as f64 / n;
        match cdf.last_mut() {
            Some(last) if last.0 == l => last.1 = p,
            _ => cdf.push((l, p)),
        }
    }
    cdf.last_mut().unwrap().1 = 1.0;
    ClutterEntry { sign, kind: LossKind::Clutter, elevation_deg: psi_s, bs_height_m: h_bs, cdf }
}

/// Synthetic table over a grid of elevations and BS heights, both signs.
pub fn synthetic_table(
    geo: &AzimuthHistograms,
    elevations: &[f64],
    bs_heights: &[f64],
    frequency_hz: f64,
    n_samples: usize,
    seed: u64,
) -> Result<ClutterTable> {
    let mut entries = Vec::new();
    let mut k = 0u64;
    for sign in [ModeSign::Positive, ModeSign::Negative] {
        for &psi in elevations {
            for &h in bs_heights {
                entries.push(synthetic_clutter(geo, sign, psi, h, frequency_hz, n_samples, rng::derive_seed(seed, k)));
                k += 1;
            }
        }
    }
    ClutterTable::new(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geomstats::Histogram1D;

    fn two_point() -> ClutterTable {
        ClutterTable::parse(
            "[entry sign=positive kind=clutter elevation_deg=20 bs_height_m=6]\n20, 0.4\n30, 1.0\n",
            "t",
        )
        .unwrap()
    }

    #[test]
    fn quantile_and_pdf() {
        let t = two_point();
        let e = t.lookup(ModeSign::Positive, LossKind::Clutter, 50.0, 25.0).unwrap();
        assert_eq!(e.quantile(0.4), 20.0);
        assert_eq!(e.quantile(0.41), 30.0);
        let g = e.gain_pdf(0.25).unwrap();
        let atoms: Vec<(f64, f64)> = g.atoms().filter(|a| a.1 > 0.0).collect();
        assert_eq!(atoms.len(), 2);
        assert!((atoms[0].0 + 30.0).abs() < 1e-12 && (atoms[0].1 - 0.6).abs() < 1e-12);
        assert!((atoms[1].0 + 20.0).abs() < 1e-12 && (atoms[1].1 - 0.4).abs() < 1e-12);
    }

    #[test]
    fn lossless_is_delta() {
        let g = clutter_gain_pdf(InterferenceMode::GB, 33.0, 17.0, &ClutterTable::lossless(), 0.25).unwrap();
        assert_eq!(g.atoms().collect::<Vec<_>>(), vec![(0.0, 1.0)]);
    }

    #[test]
    fn rejects_bad_tables() {
        let hdr = "[entry sign=negative kind=clutter elevation_deg=20 bs_height_m=6]\n";
        assert!(ClutterTable::parse(&format!("{hdr}10, 0.5\n5, 1\n"), "t").is_err());
        assert!(ClutterTable::parse(&format!("{hdr}10, 0.5\n20, 0.4\n"), "t").is_err());
        assert!(ClutterTable::parse(&format!("{hdr}-1, 1\n"), "t").is_err());
        assert!(ClutterTable::parse("# nothing\n", "t").is_err());
        assert!(ClutterTable::parse("3, 1\n", "t").is_err());
        let e = two_point().lookup(ModeSign::Negative, LossKind::Clutter, 20.0, 6.0).unwrap_err();
        assert!(matches!(e, Error::MissingClutter { .. }));
    }

    #[test]
    fn knife_edge_anchors() {
        assert_eq!(knife_edge_loss(-1.0), 0.0);
        // Grazing incidence: 6.9 + 20 log10(sqrt(1.01) - 0.1) = 6.0 dB.
        assert!((knife_edge_loss(0.0) - 6.0).abs() < 0.05);
        assert_eq!(ray_loss(6.0, 90.0, 10.0, 1000.0, 0.05), 0.0);
    }

    #[test]
    fn synthetic_round_trip_and_trend() {
        let geo = AzimuthHistograms::simple(Histogram1D::uniform(10.0, 30.0), Histogram1D::uniform(15.0, 35.0));
        let t = synthetic_table(&geo, &[20.0, 80.0], &[6.0], 6e9, 4000, 3).unwrap();
        let back = ClutterTable::parse(&t.to_string(), "rt").unwrap();
        assert_eq!(back, t);
        let e20 = t.lookup(ModeSign::Positive, LossKind::Clutter, 20.0, 6.0).unwrap();
        let e80 = t.lookup(ModeSign::Positive, LossKind::Clutter, 80.0, 6.0).unwrap();
        assert!(e20.quantile(0.5) > 0.0);
        for u in [0.2, 0.5, 0.8] {
            assert!(e80.quantile(u) <= e20.quantile(u));
        }
    }
}
