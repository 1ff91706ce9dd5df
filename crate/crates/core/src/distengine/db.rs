use crate::error::{Error, Result};

/// Default lattice step for dB-domain distributions.
pub const DEFAULT_STEP_DB: f64 = 0.25;

/// Values at or below this are treated as zero power (the `-inf` atom).
pub const FLOOR_DB: f64 = -250.0;

#[cfg(test)]
const NORM_TOL: f64 = 1e-9;

/// Unit of a dB-valued quantity when converting to linear scale.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DbUnit {
    /// dB relative to 1 W (or a dimensionless gain).
    DbW,
    /// dB relative to 1 mW.
    DbM,
}

/// Discrete PDF of a dB-valued variable: point masses at `origin + i*step`
/// plus an optional atom at `-inf` (zero linear power).
#[derive(Clone, Debug, PartialEq)]
pub struct DbDistribution {
    origin: f64,
    step: f64,
    weights: Vec<f64>,
    neg_inf: f64,
}

impl DbDistribution {
    /// Builds and normalizes. Weights must be non-negative with a positive total.
    pub fn new(origin: f64, step: f64, weights: Vec<f64>, neg_inf: f64) -> Result<Self> {
        if !(step > 0.0) || !origin.is_finite() {
            return Err(Error::invalid("dB grid needs a finite origin and step > 0"));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) || !(neg_inf >= 0.0) {
            return Err(Error::invalid("distribution weights must be finite and non-negative"));
        }
        let total: f64 = weights.iter().sum::<f64>() + neg_inf;
        if !(total > 0.0) {
            return Err(Error::invalid("distribution has zero total mass"));
        }
        let mut d = DbDistribution {
            origin,
            step,
            weights: weights.into_iter().map(|w| w / total).collect(),
            neg_inf: neg_inf / total,
        };
        d.trim();
        Ok(d)
    }

    pub fn delta(x: f64, step: f64) -> Self {
        if x <= FLOOR_DB {
            return DbDistribution { origin: 0.0, step, weights: vec![], neg_inf: 1.0 };
        }
        DbDistribution { origin: x, step, weights: vec![1.0], neg_inf: 0.0 }
    }

    /// Histogram of samples on the lattice `k*step` (nearest point). Samples at or
    /// below `FLOOR_DB` (including `-inf`) go to the `-inf` atom.
    pub fn from_samples(samples: &[f64], step: f64) -> Result<Self> {
        Self::from_weighted_samples(samples.iter().map(|&s| (s, 1.0)), step)
    }

    pub fn from_weighted_samples(
        samples: impl IntoIterator<Item = (f64, f64)> + Clone,
        step: f64,
    ) -> Result<Self> {
        let mut lo = i64::MAX;
        let mut hi = i64::MIN;
        for (s, _) in samples.clone() {
            if s.is_nan() {
                return Err(Error::Numeric("NaN sample in dB histogram".into()));
            }
            if s > FLOOR_DB {
                let k = (s / step).round() as i64;
                lo = lo.min(k);
                hi = hi.max(k);
            }
        }
        let mut neg_inf = 0.0;
        let n = if lo <= hi { (hi - lo + 1) as usize } else { 0 };
        let mut w = vec![0.0; n];
        for (s, wt) in samples {
            if s > FLOOR_DB {
                w[((s / step).round() as i64 - lo) as usize] += wt;
            } else {
                neg_inf += wt;
            }
        }
        let origin = if n > 0 { lo as f64 * step } else { 0.0 };
        Self::new(origin, step, w, neg_inf)
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Mass of the zero-power atom.
    pub fn neg_inf_mass(&self) -> f64 {
        self.neg_inf
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn value(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.step
    }

    /// (value, weight) for the finite atoms.
    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.weights.iter().enumerate().map(|(i, &w)| (self.value(i), w))
    }

    /// Largest finite support point, if any.
    pub fn max_value(&self) -> Option<f64> {
        (!self.weights.is_empty()).then(|| self.value(self.weights.len() - 1))
    }

    pub fn min_value(&self) -> Option<f64> {
        (!self.weights.is_empty()).then(|| self.origin)
    }

    /// P(X <= x), with `-inf` counted below everything.
    pub fn cdf(&self, x: f64) -> f64 {
        let mut acc = self.neg_inf;
        for (v, w) in self.atoms() {
            if v <= x + 1e-12 {
                acc += w;
            } else {
                break;
            }
        }
        acc.min(1.0)
    }

    /// Shifts every finite atom by `db` (adding a deterministic dB term).
    pub fn shifted(&self, db: f64) -> Self {
        let mut d = self.clone();
        d.origin += db;
        d
    }

    /// E[10^(X/10)] in the unit of the dB reference.
    pub fn mean_linear(&self) -> f64 {
        self.atoms().map(|(v, w)| w * 10f64.powf(v / 10.0)).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum::<f64>() + self.neg_inf
    }

    /// Re-bins onto the lattice `origin' + k*step` where `origin'` is the
    /// multiple of `step` nearest to the current origin. Each atom goes to its
    /// nearest new lattice point.
    pub fn resampled(&self, step: f64) -> Self {
        if (step - self.step).abs() < 1e-12 * step {
            return self.clone();
        }
        let atoms: Vec<(f64, f64)> = self.atoms().collect();
        let mut d = Self::from_weighted_samples(atoms.iter().copied(), step)
            .unwrap_or_else(|_| DbDistribution::delta(f64::NEG_INFINITY, step));
        let fin: f64 = d.weights.iter().sum();
        let scale = if fin > 0.0 { (1.0 - self.neg_inf) / fin } else { 0.0 };
        d.weights.iter_mut().for_each(|w| *w *= scale);
        d.neg_inf = self.neg_inf;
        d
    }

    fn trim(&mut self) {
        let first = self.weights.iter().position(|&w| w > 0.0);
        match first {
            None => {
                self.weights.clear();
                self.origin = 0.0;
            }
            Some(f) => {
                let last = self.weights.iter().rposition(|&w| w > 0.0).unwrap();
                self.weights.truncate(last + 1);
                self.weights.drain(..f);
                self.origin += f as f64 * self.step;
            }
        }
    }

    #[cfg(test)]
    pub(crate) fn check_normalized(&self) -> bool {
        (self.total_mass() - 1.0).abs() < NORM_TOL
    }
}

/// Distribution of the sum of two independent dB-valued variables
/// (logarithmic convolution). Steps must agree; the coarser input is
/// re-binned to the finer step otherwise.
pub fn db_convolve(a: &DbDistribution, b: &DbDistribution) -> DbDistribution {
    if (a.step - b.step).abs() > 1e-12 * a.step.max(b.step) {
        let step = a.step.min(b.step);
        return db_convolve(&a.resampled(step), &b.resampled(step));
    }
    let neg_inf = a.neg_inf + b.neg_inf - a.neg_inf * b.neg_inf;
    if a.weights.is_empty() || b.weights.is_empty() {
        return DbDistribution { origin: 0.0, step: a.step, weights: vec![], neg_inf: 1.0 };
    }
    let mut w = vec![0.0; a.weights.len() + b.weights.len() - 1];
    for (i, &x) in a.weights.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.weights.iter().enumerate() {
            w[i + j] += x * y;
        }
    }
    let mut d = DbDistribution { origin: a.origin + b.origin, step: a.step, weights: w, neg_inf };
    d.trim();
    d
}

/// Weighted mixture of distributions sharing a step. Origins are aligned by
/// rounding to the common lattice.
pub fn db_mixture(parts: &[(f64, &DbDistribution)]) -> Result<DbDistribution> {
    let Some((_, first)) = parts.first() else {
        return Err(Error::invalid("empty mixture"));
    };
    let step = first.step;
    let parts: Vec<(f64, DbDistribution)> =
        parts.iter().map(|(w, d)| (*w, d.resampled(step))).collect();
    let lo = parts
        .iter()
        .filter(|(_, d)| !d.weights.is_empty())
        .map(|(_, d)| d.origin)
        .fold(f64::INFINITY, f64::min);
    if !lo.is_finite() {
        return DbDistribution::new(0.0, step, vec![], 1.0);
    }
    let mut w: Vec<f64> = Vec::new();
    let mut neg_inf = 0.0;
    for (pw, d) in &parts {
        neg_inf += pw * d.neg_inf;
        if d.weights.is_empty() {
            continue;
        }
        let off = ((d.origin - lo) / step).round() as usize;
        if w.len() < off + d.weights.len() {
            w.resize(off + d.weights.len(), 0.0);
        }
        for (i, &x) in d.weights.iter().enumerate() {
            w[off + i] += pw * x;
        }
    }
    DbDistribution::new(lo, step, w, neg_inf)
}

/// Discrete distribution of a non-negative linear quantity.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearDistribution {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl LinearDistribution {
    pub fn new(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::invalid("points and weights differ in length"));
        }
        if points.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
            return Err(Error::invalid("linear support must be finite and non-negative"));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::invalid("negative weight"));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::invalid("zero total mass"));
        }
        let mut pairs: Vec<(f64, f64)> = points.into_iter().zip(weights).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (points, weights) = pairs.into_iter().map(|(x, w)| (x, w / total)).unzip();
        Ok(LinearDistribution { points, weights })
    }

    pub fn delta(x: f64) -> Self {
        LinearDistribution { points: vec![x], weights: vec![1.0] }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mean(&self) -> f64 {
        self.points.iter().zip(&self.weights).map(|(x, w)| x * w).sum()
    }

    pub fn max_point(&self) -> f64 {
        self.points.last().copied().unwrap_or(0.0)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.points.iter().zip(&self.weights).filter(|(p, _)| **p <= x).map(|(_, w)| w).sum()
    }
}

/// Maps each dB atom to linear scale; the `-inf` atom becomes a mass at 0.
pub fn db_to_linear(d: &DbDistribution, unit: DbUnit) -> LinearDistribution {
    let shift = match unit {
        DbUnit::DbW => 0.0,
        DbUnit::DbM => -30.0,
    };
    let mut points = Vec::with_capacity(d.len() + 1);
    let mut weights = Vec::with_capacity(d.len() + 1);
    if d.neg_inf > 0.0 {
        points.push(0.0);
        weights.push(d.neg_inf);
    }
    for (v, w) in d.atoms() {
        if w > 0.0 {
            points.push(10f64.powf((v + shift) / 10.0));
            weights.push(w);
        }
    }
    LinearDistribution { points, weights }
}
