use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use super::db::LinearDistribution;
use crate::error::{Error, Result};

/// Default density of the log-spaced frequency grid.
pub const POINTS_PER_DECADE: usize = 2048;

/// Below this magnitude a directly evaluated CF is rounding noise.
pub const MAG_FLOOR: f64 = 1e-12;

/// Log-magnitude below which a CF is treated as zero (e^-80).
pub const LOG_FLOOR: f64 = -80.0;

const MAX_REFINE_DEPTH: u32 = 24;

/// Frequency grid: `0` followed by log-spaced points (rad per unit of x).
#[derive(Clone, Debug, PartialEq)]
pub struct OmegaGrid(Arc<Vec<f64>>);

impl OmegaGrid {
    pub fn log_spaced(lo: f64, hi: f64, per_decade: usize) -> Result<Self> {
        if !(lo > 0.0 && hi > lo) || per_decade == 0 {
            return Err(Error::invalid("omega grid needs 0 < lo < hi"));
        }
        let decades = (hi / lo).log10();
        let n = (decades * per_decade as f64).ceil() as usize + 1;
        let mut w = Vec::with_capacity(n + 1);
        w.push(0.0);
        for k in 0..n {
            w.push(lo * 10f64.powf(k as f64 / per_decade as f64));
        }
        Ok(OmegaGrid(Arc::new(w)))
    }

    /// Grid suited to a non-negative variable whose CDF is wanted on
    /// `[x_min, x_max]`: spans `[1e-3/x_max, 1e3/x_min]`.
    pub fn for_support(x_min: f64, x_max: f64, per_decade: usize) -> Result<Self> {
        if !(x_min > 0.0 && x_max >= x_min) {
            return Err(Error::invalid("support bounds must satisfy 0 < x_min <= x_max"));
        }
        Self::log_spaced(1e-3 / x_max, 1e3 / x_min, per_decade)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn same(&self, other: &OmegaGrid) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}

/// Characteristic function sampled on an [`OmegaGrid`], stored as its
/// continuous logarithm. Beyond `cutoff` the function is taken to be 0.
#[derive(Clone, Debug)]
pub struct CharFn {
    grid: OmegaGrid,
    log: Vec<Complex64>,
}

impl CharFn {
    /// Constant 1 (the CF of a zero variable).
    pub fn one(grid: &OmegaGrid) -> Self {
        CharFn { grid: grid.clone(), log: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    /// Samples an arbitrary CF, unwrapping the phase. The log-derivative is
    /// taken numerically; see [`CharFn::from_fn_with_derivative`].
    pub fn from_fn<F>(grid: &OmegaGrid, f: F) -> Self
    where
        F: Fn(f64) -> Complex64 + Sync,
    {
        let w1 = grid.values().get(1).copied().unwrap_or(1.0);
        // d log Phi from the log of a ratio: exact for a linear phase, so the
        // branch prediction holds even where the phase turns fast.
        let fd = |w: f64| {
            let e = 1e-9 * w.max(w1);
            let v = f(w);
            (v, v * (f(w + e) / f(w - e)).ln() / (2.0 * e))
        };
        Self::from_fn_with_derivative(grid, MAG_FLOOR.ln(), fd)
    }

    /// Samples `(Phi, dPhi/dw)` and builds the continuous log. Each phase step
    /// is taken on the 2*pi branch closest to the trapezoid prediction from
    /// `d arg Phi / dw`; intervals where that slope changes too much are
    /// bisected. Stops once `ln|Phi| < log_floor`.
    pub fn from_fn_with_derivative<F>(grid: &OmegaGrid, log_floor: f64, f: F) -> Self
    where
        F: Fn(f64) -> (Complex64, Complex64) + Sync,
    {
        let w = grid.values();
        let vals: Vec<(Complex64, Complex64)> = w.par_iter().map(|&om| f(om)).collect();
        let mut log = Vec::with_capacity(w.len());
        log.push(Complex64::new(0.0, 0.0));
        let mut phase = 0.0;
        for j in 1..w.len() {
            let v = vals[j].0;
            let m = v.norm();
            if !(m > 0.0) || m.ln() < log_floor {
                break;
            }
            phase += phase_increment(&f, (w[j - 1], vals[j - 1]), (w[j], vals[j]), 0);
            log.push(Complex64::new(m.ln().min(0.0), phase));
        }
        CharFn { grid: grid.clone(), log }
    }

    /// Wraps precomputed log values (continuous phase expected).
    pub fn from_log(grid: &OmegaGrid, mut log: Vec<Complex64>) -> Result<Self> {
        if log.len() > grid.len() {
            return Err(Error::invalid("more log values than grid points"));
        }
        if let Some(first) = log.first_mut() {
            *first = Complex64::new(0.0, 0.0);
        }
        Ok(CharFn { grid: grid.clone(), log })
    }

    pub fn grid(&self) -> &OmegaGrid {
        &self.grid
    }

    pub fn omega(&self) -> &[f64] {
        &self.grid.values()[..self.log.len()]
    }

    pub fn log_values(&self) -> &[Complex64] {
        &self.log
    }

    /// Number of grid points carrying non-negligible values.
    pub fn cutoff(&self) -> usize {
        self.log.len()
    }

    pub fn value(&self, j: usize) -> Complex64 {
        if j < self.log.len() {
            self.log[j].exp()
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    /// Mean from the slope at the origin, `Im log Phi(w1) / w1`.
    pub fn mean(&self) -> f64 {
        if self.log.len() < 3 {
            return f64::NAN;
        }
        // Richardson on the first two points removes the w^2 term of Im log Phi.
        let (w1, w2) = (self.grid.values()[1], self.grid.values()[2]);
        let (m1, m2) = (self.log[1].im / w1, self.log[2].im / w2);
        (m1 * w2 * w2 - m2 * w1 * w1) / (w2 * w2 - w1 * w1)
    }

    /// Same magnitudes with every phase folded to (-pi, pi]. Only useful as a
    /// broken-unwrap fixture for the validation suite.
    #[doc(hidden)]
    pub fn with_principal_phase(&self) -> CharFn {
        let log = self.log.iter().map(|l| Complex64::new(l.re, wrap(l.im))).collect();
        CharFn { grid: self.grid.clone(), log }
    }

    fn truncate_below_floor(&mut self) {
        if let Some(k) = self.log.iter().position(|l| l.re < LOG_FLOOR) {
            self.log.truncate(k.max(1));
        }
    }
}

type Sample = (f64, (Complex64, Complex64));

/// Continuous phase change of `f` between two samples.
fn phase_increment<F>(f: &F, a: Sample, b: Sample, depth: u32) -> f64
where
    F: Fn(f64) -> (Complex64, Complex64),
{
    let (w0, (v0, d0)) = a;
    let (w1, (v1, d1)) = b;
    let s0 = (d0 / v0).im;
    let s1 = (d1 / v1).im;
    let h = w1 - w0;
    let principal = wrap(v1.arg() - v0.arg());
    if ((s1 - s0) * h).abs() > 0.5 && depth < MAX_REFINE_DEPTH {
        let wm = 0.5 * (w0 + w1);
        let m = f(wm);
        if m.0.norm() > 0.0 {
            return phase_increment(f, a, (wm, m), depth + 1) + phase_increment(f, (wm, m), b, depth + 1);
        }
    }
    let predicted = 0.5 * h * (s0 + s1);
    let k = ((predicted - principal) / (2.0 * PI)).round();
    principal + 2.0 * PI * k
}

fn wrap(a: f64) -> f64 {
    let mut a = a % (2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    } else if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

/// Phi(w) = sum_i w_i exp(i w x_i), truncated where |Phi| drops below
/// `max(MAG_FLOOR, exp(log_floor))`.
pub fn cf_from_linear(d: &LinearDistribution, grid: &OmegaGrid) -> CharFn {
    cf_from_linear_with_floor(d, grid, MAG_FLOOR.ln())
}

/// As [`cf_from_linear`] with an explicit log-magnitude floor. A caller that
/// will raise the result to a power `p` can pass `LOG_FLOOR / p`, since the
/// powered CF is negligible there anyway.
pub fn cf_from_linear_with_floor(d: &LinearDistribution, grid: &OmegaGrid, log_floor: f64) -> CharFn {
    let w_max = *grid.values().last().unwrap_or(&0.0);
    // Atoms with w_max*x < 1e-3 are replaced by their first three moments;
    // the dropped cubic term is below 2e-10 relative to their mass.
    let small = 1e-3 / w_max.max(f64::MIN_POSITIVE);
    let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
    let mut big_x = Vec::new();
    let mut big_w = Vec::new();
    for (&x, &w) in d.points().iter().zip(d.weights()) {
        if x < small {
            m0 += w;
            m1 += w * x;
            m2 += w * x * x;
        } else {
            big_x.push(x);
            big_w.push(w);
        }
    }
    let eval = |om: f64| -> (Complex64, Complex64) {
        let mut re = m0 - 0.5 * om * om * m2;
        let mut im = om * m1;
        let mut dre = -om * m2;
        let mut dim = m1;
        for (x, w) in big_x.iter().zip(&big_w) {
            let (s, c) = (om * x).sin_cos();
            re += w * c;
            im += w * s;
            dre -= w * x * s;
            dim += w * x * c;
        }
        (Complex64::new(re, im), Complex64::new(dre, dim))
    };
    CharFn::from_fn_with_derivative(grid, log_floor.max(MAG_FLOOR.ln()), eval)
}

/// Phi^p through the continuous logarithm.
pub fn cf_pow(phi: &CharFn, p: f64) -> Result<CharFn> {
    if !(p >= 0.0) || !p.is_finite() {
        return Err(Error::invalid(format!("cf_pow exponent must be finite and >= 0, got {p}")));
    }
    let mut out = CharFn { grid: phi.grid.clone(), log: phi.log.iter().map(|l| l * p).collect() };
    if p > 0.0 {
        out.truncate_below_floor();
    } else {
        out.log = vec![Complex64::new(0.0, 0.0); phi.grid.len()];
    }
    Ok(out)
}

/// Pointwise product (sum of logs). All factors must share one grid.
pub fn cf_product(factors: &[&CharFn]) -> Result<CharFn> {
    let Some(first) = factors.first() else {
        return Err(Error::invalid("cf_product of an empty list"));
    };
    if factors.iter().any(|f| !f.grid.same(&first.grid)) {
        return Err(Error::invalid("cf_product: factors live on different omega grids"));
    }
    let n = factors.iter().map(|f| f.log.len()).min().unwrap_or(0);
    let mut log = vec![Complex64::new(0.0, 0.0); n];
    for f in factors {
        for (acc, l) in log.iter_mut().zip(&f.log) {
            *acc += l;
        }
    }
    let mut out = CharFn { grid: first.grid.clone(), log };
    out.truncate_below_floor();
    Ok(out)
}

/// `prod_k Phi_k^{p_k}` in one pass.
pub fn cf_weighted_product(factors: &[(&CharFn, f64)]) -> Result<CharFn> {
    let powered = factors
        .iter()
        .map(|(f, p)| cf_pow(f, *p))
        .collect::<Result<Vec<_>>>()?;
    if powered.is_empty() {
        return Err(Error::invalid("cf_weighted_product of an empty list"));
    }
    cf_product(&powered.iter().collect::<Vec<_>>())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> OmegaGrid {
        OmegaGrid::for_support(1e-2, 10.0, 256).unwrap()
    }

    #[test]
    fn value_at_zero_is_one() {
        let d = LinearDistribution::new(vec![0.5, 2.0], vec![0.3, 0.7]).unwrap();
        let cf = cf_from_linear(&d, &grid());
        assert_eq!(cf.value(0), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn point_mass_phase_is_linear() {
        let x0 = 3.0;
        let g = grid();
        let cf = cf_from_linear(&LinearDistribution::delta(x0), &g);
        assert_eq!(cf.cutoff(), g.len());
        for (w, l) in cf.omega().iter().zip(cf.log_values()) {
            assert!(l.re.abs() < 1e-12);
            assert!((l.im - w * x0).abs() < 1e-6 * (1.0 + w * x0), "w={w}");
        }
    }

    #[test]
    fn two_point_matches_cosine_form() {
        // p e^{iwa} + (1-p) e^{iwb}: modulus^2 = p^2 + (1-p)^2 + 2p(1-p)cos(w(b-a)).
        let (a, b, p) = (1.0, 4.0, 0.3);
        let d = LinearDistribution::new(vec![a, b], vec![p, 1.0 - p]).unwrap();
        let g = OmegaGrid::log_spaced(1e-3, 5.0, 512).unwrap();
        let cf = cf_from_linear(&d, &g);
        for (j, &w) in g.values().iter().enumerate().take(cf.cutoff()) {
            let m2 = p * p + (1.0 - p) * (1.0 - p) + 2.0 * p * (1.0 - p) * (w * (b - a)).cos();
            assert!((cf.value(j).norm_sqr() - m2).abs() < 1e-10);
        }
    }

    #[test]
    fn integer_power_equals_product() {
        let d = LinearDistribution::new(vec![0.2, 1.0, 5.0], vec![0.2, 0.5, 0.3]).unwrap();
        let cf = cf_from_linear(&d, &grid());
        let sq = cf_pow(&cf, 2.0).unwrap();
        let pr = cf_product(&[&cf, &cf]).unwrap();
        for j in 0..sq.cutoff().min(pr.cutoff()) {
            let (a, b) = (sq.value(j), pr.value(j));
            assert!((a - b).norm() <= 1e-9 * b.norm().max(1e-300));
        }
    }

    #[test]
    fn product_with_one_is_identity() {
        let d = LinearDistribution::new(vec![0.2, 1.0], vec![0.5, 0.5]).unwrap();
        let g = grid();
        let cf = cf_from_linear(&d, &g);
        let one = CharFn::one(&g);
        let p = cf_product(&[&cf, &one]).unwrap();
        assert_eq!(p.log_values(), cf.log_values());
    }

    #[test]
    fn negative_exponent_rejected() {
        let g = grid();
        assert!(cf_pow(&CharFn::one(&g), -1.0).is_err());
    }

    #[test]
    fn mismatched_grids_rejected() {
        let a = CharFn::one(&grid());
        let b = CharFn::one(&OmegaGrid::log_spaced(1.0, 10.0, 8).unwrap());
        assert!(cf_product(&[&a, &b]).is_err());
    }

    #[test]
    fn mean_from_slope() {
        let d = LinearDistribution::new(vec![0.5, 2.0, 7.0], vec![0.2, 0.5, 0.3]).unwrap();
        let g = OmegaGrid::for_support(1e-2, 7.0, 512).unwrap();
        let cf = cf_from_linear(&d, &g);
        assert!((cf.mean() / d.mean() - 1.0).abs() < 1e-9);
    }
}
