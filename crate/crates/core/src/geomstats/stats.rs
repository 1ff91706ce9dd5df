use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::merge::union_length;
use super::polygon::{dist, BuildingPolygon, Point};
use crate::error::{Error, Result};

/// Histogram on bins `[origin + k*w, origin + (k+1)*w)`. Values are spread
/// uniformly inside a bin when sampling or evaluating the CDF.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram1D {
    pub origin: f64,
    pub bin_width: f64,
    pub weights: Vec<f64>,
    /// Set when no observation fell into this histogram.
    #[serde(default)]
    pub empty: bool,
}

impl Histogram1D {
    /// Bins centred on multiples of `bin_width` (bin k covers `k*w +- w/2`).
    pub fn centered(bin_width: f64, samples: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let half = bin_width / 2.0;
        let mut raw: Vec<(i64, f64)> = Vec::new();
        for (v, w) in samples {
            if w > 0.0 && v.is_finite() {
                raw.push((((v + half) / bin_width).floor() as i64, w));
            }
        }
        Self::from_bins(bin_width, -half, raw)
    }

    fn from_bins(bin_width: f64, offset: f64, raw: Vec<(i64, f64)>) -> Self {
        if raw.is_empty() {
            return Histogram1D { origin: offset, bin_width, weights: vec![], empty: true };
        }
        let lo = raw.iter().map(|r| r.0).min().unwrap();
        let hi = raw.iter().map(|r| r.0).max().unwrap();
        let mut w = vec![0.0; (hi - lo + 1) as usize];
        for (k, x) in raw {
            w[(k - lo) as usize] += x;
        }
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
        Histogram1D { origin: offset + lo as f64 * bin_width, bin_width, weights: w, empty: false }
    }

    /// Explicit weights (normalized here).
    pub fn new(origin: f64, bin_width: f64, weights: Vec<f64>) -> Result<Self> {
        if !(bin_width > 0.0) {
            return Err(Error::invalid("histogram bin width must be positive"));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::invalid("histogram weights must be non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Ok(Histogram1D { origin, bin_width, weights: vec![], empty: true });
        }
        Ok(Histogram1D { origin, bin_width, weights: weights.iter().map(|w| w / total).collect(), empty: false })
    }

    /// Uniform distribution on `[lo, hi]` as a single bin.
    pub fn uniform(lo: f64, hi: f64) -> Self {
        Histogram1D { origin: lo, bin_width: hi - lo, weights: vec![1.0], empty: false }
    }

    pub fn delta(v: f64) -> Self {
        Histogram1D { origin: v, bin_width: 1e-9, weights: vec![1.0], empty: false }
    }

    /// Centre of bin k.
    pub fn center(&self, k: usize) -> f64 {
        self.origin + (k as f64 + 0.5) * self.bin_width
    }

    /// Index of the heaviest bin.
    pub fn mode_bin(&self) -> Option<usize> {
        self.weights.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(k, _)| k)
    }

    pub fn upper(&self) -> f64 {
        self.origin + self.weights.len() as f64 * self.bin_width
    }

    pub fn mean(&self) -> f64 {
        (0..self.weights.len()).map(|k| self.weights[k] * self.center(k)).sum()
    }

    /// Piecewise-linear CDF.
    pub fn cdf(&self, x: f64) -> f64 {
        if self.weights.is_empty() {
            return 0.0;
        }
        let t = (x - self.origin) / self.bin_width;
        if t <= 0.0 {
            return 0.0;
        }
        let k = t.floor() as usize;
        if k >= self.weights.len() {
            return 1.0;
        }
        let below: f64 = self.weights[..k].iter().sum();
        (below + self.weights[k] * (t - k as f64)).min(1.0)
    }

    /// Inverse of [`Histogram1D::cdf`].
    pub fn quantile(&self, u: f64) -> f64 {
        let mut acc = 0.0;
        for (k, &w) in self.weights.iter().enumerate() {
            if acc + w >= u && w > 0.0 {
                let f = ((u - acc) / w).clamp(0.0, 1.0);
                return self.origin + (k as f64 + f) * self.bin_width;
            }
            acc += w;
        }
        self.upper()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// The three histograms conditioned on one satellite azimuth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AzimuthHistograms {
    pub height: Histogram1D,
    pub area: Histogram1D,
    pub distance: Histogram1D,
}

impl AzimuthHistograms {
    /// Building height CDF with negative values clamped to 0.
    pub fn height_cdf(&self, h: f64) -> f64 {
        if h < 0.0 {
            0.0
        } else {
            self.height.cdf(h)
        }
    }

    pub fn sample_height<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.height.sample(rng).max(0.0)
    }

    pub fn sample_distance<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.distance.sample(rng).max(0.0)
    }

    /// Uniform height grid: a single deterministic histogram for all three.
    pub fn simple(height: Histogram1D, distance: Histogram1D) -> Self {
        AzimuthHistograms { height, area: Histogram1D::delta(1.0), distance }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AzimuthBin {
    pub azimuth_deg: f64,
    #[serde(flatten)]
    pub hist: AzimuthHistograms,
}

/// Azimuth-conditioned geometry statistics. Bin centres are
/// `-180 + k*step`, k = 1..=360/step, covering (-180, 180].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeoStats {
    pub azimuth_step_deg: f64,
    pub height_bin_m: f64,
    pub area_bin_m2: f64,
    pub distance_bin_m: f64,
    pub bins: Vec<AzimuthBin>,
    pub marginal: AzimuthHistograms,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsParams {
    pub azimuth_step_deg: f64,
    pub height_bin_m: f64,
    pub area_bin_m2: f64,
    pub distance_bin_m: f64,
}

impl Default for StatsParams {
    fn default() -> Self {
        StatsParams { azimuth_step_deg: 5.0, height_bin_m: 5.0, area_bin_m2: 20.0, distance_bin_m: 5.0 }
    }
}

impl GeoStats {
    pub fn bin_index(&self, azimuth_deg: f64) -> usize {
        let n = self.bins.len() as i64;
        ((((azimuth_deg + 180.0) / self.azimuth_step_deg).round() as i64) - 1).rem_euclid(n) as usize
    }

    /// Histograms for the bin nearest to `azimuth_deg`; empty ones fall back
    /// to the all-azimuth marginal.
    pub fn at(&self, azimuth_deg: f64) -> AzimuthHistograms {
        let b = &self.bins[self.bin_index(azimuth_deg)];
        let pick = |h: &Histogram1D, m: &Histogram1D, what: &str| {
            if h.empty {
                log::warn!("azimuth {}: empty {what} histogram, using the marginal", b.azimuth_deg);
                m.clone()
            } else {
                h.clone()
            }
        };
        AzimuthHistograms {
            height: pick(&b.hist.height, &self.marginal.height, "height"),
            area: pick(&b.hist.area, &self.marginal.area, "area"),
            distance: pick(&b.hist.distance, &self.marginal.distance, "distance"),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let s = serde_json::to_string_pretty(self).map_err(|e| Error::invalid(e.to_string()))?;
        std::fs::write(path, s).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let g: GeoStats = serde_json::from_str(&s).map_err(|e| Error::Parse {
            file: path.display().to_string(),
            line: e.line(),
            msg: e.to_string(),
        })?;
        if g.bins.is_empty() || !(g.azimuth_step_deg > 0.0) {
            return Err(Error::invalid("geostats file has no azimuth bins"));
        }
        Ok(g)
    }
}

#[derive(Clone, Copy, Debug)]
struct Facade {
    a: Point,
    b: Point,
    len: f64,
    height: f64,
    normal: Point,
    azimuth: f64,
    building: usize,
}

fn facades(polys: &[BuildingPolygon]) -> Vec<Facade> {
    let mut out = Vec::new();
    for (i, p) in polys.iter().enumerate() {
        for (a, b) in p.edges() {
            let len = dist(a, b);
            if len < 1e-9 {
                continue;
            }
            let normal = [(b[1] - a[1]) / len, -(b[0] - a[0]) / len];
            let azimuth = normal[0].atan2(normal[1]).to_degrees();
            out.push(Facade { a, b, len, height: p.height(), normal, azimuth, building: i });
        }
    }
    out
}

/// Signed angular difference folded into (-180, 180].
pub(crate) fn angle_diff(a: f64, b: f64) -> f64 {
    let mut d = (a - b) % 360.0;
    if d > 180.0 {
        d -= 360.0;
    } else if d <= -180.0 {
        d += 360.0;
    }
    d
}

/// Facing facade pairs seen from facade `i`: (distance, visible width, mean height).
fn facing_pairs(f: &[Facade], i: usize, parallel_tol: f64) -> Vec<(f64, f64, f64)> {
    let a = f[i];
    let t = [(a.b[0] - a.a[0]) / a.len, (a.b[1] - a.a[1]) / a.len];
    let n = a.normal;
    let local = |p: Point| {
        let d = [p[0] - a.a[0], p[1] - a.a[1]];
        (d[0] * t[0] + d[1] * t[1], d[0] * n[0] + d[1] * n[1])
    };
    let eps = 1e-6;
    // Edges of other buildings that reach into the strip in front of the facade.
    let mut strip: Vec<((f64, f64), (f64, f64), usize)> = Vec::new();
    for (k, g) in f.iter().enumerate() {
        if g.building == a.building {
            continue;
        }
        let (p, q) = (local(g.a), local(g.b));
        if p.1.max(q.1) <= eps || p.0.max(q.0) <= 0.0 || p.0.min(q.0) >= a.len {
            continue;
        }
        strip.push((p, q, k));
    }
    let mut cands: Vec<(f64, f64, f64, f64, usize)> = Vec::new();
    for &(p, q, k) in &strip {
        let g = f[k];
        let anti = angle_diff(g.azimuth, a.azimuth + 180.0).abs();
        if anti > parallel_tol || p.1.min(q.1) <= eps {
            continue;
        }
        let (lo, hi) = (p.0.min(q.0).max(0.0), p.0.max(q.0).min(a.len));
        if hi - lo <= eps {
            continue;
        }
        let s_at = |tt: f64| if (q.0 - p.0).abs() < 1e-12 { 0.5 * (p.1 + q.1) } else { p.1 + (q.1 - p.1) * (tt - p.0) / (q.0 - p.0) };
        let d = 0.5 * (s_at(lo) + s_at(hi));
        cands.push((d, lo, hi, g.height, k));
    }
    let mut out = Vec::new();
    for &(d, lo, hi, h, k) in &cands {
        let mut blocked: Vec<(f64, f64)> = Vec::new();
        for &(p, q, j) in &strip {
            if j == k {
                continue;
            }
            if let Some((t0, t1)) = clip_to_slab(p, q, eps, d - 1e-3) {
                let (b0, b1) = (t0.max(lo), t1.min(hi));
                if b1 > b0 {
                    blocked.push((b0, b1));
                }
            }
        }
        let visible = (hi - lo) - union_length(&mut blocked);
        if visible > eps {
            out.push((d, visible, 0.5 * (a.height + h)));
        }
    }
    out
}

/// t-range of the part of segment p-q with s in (s0, s1).
fn clip_to_slab(p: (f64, f64), q: (f64, f64), s0: f64, s1: f64) -> Option<(f64, f64)> {
    if s1 <= s0 {
        return None;
    }
    let (mut u0, mut u1) = (0.0f64, 1.0f64);
    let ds = q.1 - p.1;
    if ds.abs() < 1e-15 {
        if p.1 <= s0 || p.1 >= s1 {
            return None;
        }
    } else {
        let (a, b) = ((s0 - p.1) / ds, (s1 - p.1) / ds);
        u0 = u0.max(a.min(b));
        u1 = u1.min(a.max(b));
        if u1 <= u0 {
            return None;
        }
    }
    let t0 = p.0 + (q.0 - p.0) * u0;
    let t1 = p.0 + (q.0 - p.0) * u1;
    Some((t0.min(t1), t0.max(t1)))
}

/// Azimuth-conditioned height, facade-area and inter-building distance
/// histograms.
///
/// Height: facades whose outward normal is within half a bin of the azimuth
/// (either orientation), weighted by facade area. Area: one count per such
/// facade. Distance: facades facing the azimuth paired with the nearest facing
/// facade of another building (normals antiparallel within two bins), weighted
/// by visible width times mean pair height; width is the overlap of the two
/// facades minus parts hidden by nearer buildings.
pub fn extract_stats(polys: &[BuildingPolygon], params: StatsParams) -> Result<GeoStats> {
    if polys.is_empty() {
        return Err(Error::invalid("extract_stats needs at least one polygon"));
    }
    let StatsParams { azimuth_step_deg: step, height_bin_m, area_bin_m2, distance_bin_m } = params;
    if !(step > 0.0) || (360.0 / step - (360.0 / step).round()).abs() > 1e-9 {
        return Err(Error::invalid("azimuth step must divide 360"));
    }
    if !(height_bin_m > 0.0 && area_bin_m2 > 0.0 && distance_bin_m > 0.0) {
        return Err(Error::invalid("histogram bin widths must be positive"));
    }
    let f = facades(polys);
    let parallel_tol = 2.0 * step;
    let pairs: Vec<Vec<(f64, f64, f64)>> = {
        use rayon::prelude::*;
        (0..f.len()).into_par_iter().map(|i| facing_pairs(&f, i, parallel_tol)).collect()
    };
    let nbins = (360.0 / step).round() as usize;
    let half = step / 2.0 + 1e-9;
    let mut bins = Vec::with_capacity(nbins);
    for k in 0..nbins {
        let az = -180.0 + (k + 1) as f64 * step;
        let mut hs = Vec::new();
        let mut areas = Vec::new();
        let mut ds = Vec::new();
        for (i, fa) in f.iter().enumerate() {
            let d = angle_diff(fa.azimuth, az);
            if d.abs() <= half || (180.0 - d.abs()) <= half {
                hs.push((fa.height, fa.len * fa.height));
                areas.push((fa.len * fa.height, 1.0));
            }
            if d.abs() <= half {
                ds.extend(pairs[i].iter().map(|&(dd, w, h)| (dd, w * h)));
            }
        }
        bins.push(AzimuthBin {
            azimuth_deg: az,
            hist: AzimuthHistograms {
                height: Histogram1D::centered(height_bin_m, hs),
                area: Histogram1D::centered(area_bin_m2, areas),
                distance: Histogram1D::centered(distance_bin_m, ds),
            },
        });
    }
    let marginal = AzimuthHistograms {
        height: Histogram1D::centered(height_bin_m, f.iter().map(|fa| (fa.height, fa.len * fa.height))),
        area: Histogram1D::centered(area_bin_m2, f.iter().map(|fa| (fa.len * fa.height, 1.0))),
        distance: Histogram1D::centered(distance_bin_m, pairs.iter().flatten().map(|&(d, w, h)| (d, w * h))),
    };
    Ok(GeoStats {
        azimuth_step_deg: step,
        height_bin_m,
        area_bin_m2,
        distance_bin_m,
        bins,
        marginal,
    })
}
