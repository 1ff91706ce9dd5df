//! CDF recovery from a sampled characteristic function:
//! `F(x) = 1/2 - (1/pi) int_0^inf Im[exp(-iwx) Phi(w)] / w dw`.
//!
//! Between grid points `log Phi` is taken linear in `w` and `1/w` linear as
//! well, which makes each panel integrable in closed form however fast
//! `exp(-iwx)` oscillates (a Filon-type rule). The first panel `[0, w1]` uses
//! the series of `int (e^{zw} - 1)/w dw`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::cf::CharFn;
use crate::error::{Error, Result};

/// Inverted CDF on an x grid plus quality metrics.
#[derive(Clone, Debug, Serialize)]
pub struct Cdf {
    pub x: Vec<f64>,
    pub cdf: Vec<f64>,
    /// Largest change made by clipping and the isotonic pass.
    pub max_adjustment: f64,
    /// Bound on the neglected tail beyond the last CF sample.
    pub truncation_estimate: f64,
}

impl Cdf {
    /// Linear interpolation in log x; `None` outside the grid.
    pub fn quantile(&self, p: f64) -> Option<f64> {
        let k = self.cdf.iter().position(|&c| c >= p)?;
        if k == 0 {
            return (self.cdf[0] == p).then_some(self.x[0]);
        }
        let (c0, c1) = (self.cdf[k - 1], self.cdf[k]);
        let (l0, l1) = (self.x[k - 1].ln(), self.x[k].ln());
        let t = if c1 > c0 { (p - c0) / (c1 - c0) } else { 1.0 };
        Some((l0 + t * (l1 - l0)).exp())
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.x.iter().position(|&v| v > x) {
            None => *self.cdf.last().unwrap_or(&1.0),
            Some(0) => 0.0,
            Some(k) => {
                let t = (x - self.x[k - 1]) / (self.x[k] - self.x[k - 1]);
                self.cdf[k - 1] + t * (self.cdf[k] - self.cdf[k - 1])
            }
        }
    }
}

/// CDF at each x (> 0), clipped to [0, 1] and made non-decreasing.
pub fn gil_pelaez_cdf(phi: &CharFn, xs: &[f64]) -> Result<Cdf> {
    if xs.iter().any(|x| !(*x > 0.0)) {
        return Err(Error::invalid("Gil-Pelaez x grid must be positive"));
    }
    if xs.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("Gil-Pelaez x grid must be sorted"));
    }
    let raw: Vec<(f64, f64)> = xs.par_iter().map(|&x| raw_cdf(phi, x)).collect();
    let trunc = raw.iter().map(|r| r.1).fold(0.0, f64::max);
    let raw: Vec<f64> = raw.into_iter().map(|r| r.0).collect();
    let clipped: Vec<f64> = raw.iter().map(|v| v.clamp(0.0, 1.0)).collect();
    let mono = isotonic(&clipped);
    let max_adjustment = raw.iter().zip(&mono).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(Cdf { x: xs.to_vec(), cdf: mono, max_adjustment, truncation_estimate: trunc })
}

/// Raw (unclipped) F(x) and the tail-truncation bound at that x.
pub fn raw_cdf(phi: &CharFn, x: f64) -> (f64, f64) {
    let w = phi.omega();
    let l = phi.log_values();
    let n = l.len();
    if n < 2 {
        // Nothing beyond w = 0: no information. Report the midpoint.
        return (0.5, 0.5);
    }
    let mut acc = first_panel(w[1], l[1], x);
    for j in 1..n - 1 {
        acc += panel(w[j], w[j + 1], l[j], l[j + 1], x);
    }
    // Tail: extend the last slope and keep the leading asymptotic term.
    let (wn, ln) = (w[n - 1], l[n - 1]);
    let s = (l[n - 1] - l[n - 2]) / (w[n - 1] - w[n - 2]);
    let c = Complex64::new(s.re.min(0.0), s.im - x);
    let a = (ln - Complex64::new(0.0, wn * x)).exp();
    let mut trunc = a.norm() / (PI * wn * c.norm().max(1e-300));
    if c.norm() * wn > 10.0 {
        acc += (-a / (c * wn)).im;
    } else {
        trunc = trunc.max(a.norm());
    }
    (0.5 - acc / PI, trunc)
}

/// Quantile by bisection in log x on the un-monotonized CDF.
pub fn cf_quantile(phi: &CharFn, p: f64, lo: f64, hi: f64) -> Result<f64> {
    if !(0.0 < p && p < 1.0) {
        return Err(Error::invalid("quantile level must be in (0,1)"));
    }
    let (flo, fhi) = (raw_cdf(phi, lo).0, raw_cdf(phi, hi).0);
    if !(flo <= p && fhi >= p) {
        return Err(Error::Numeric(format!(
            "quantile {p} not bracketed: CDF spans [{flo:.4}, {fhi:.4}] on [{lo:.3e}, {hi:.3e}]"
        )));
    }
    let (mut a, mut b) = (lo.ln(), hi.ln());
    for _ in 0..80 {
        let m = 0.5 * (a + b);
        if raw_cdf(phi, m.exp()).0 < p {
            a = m;
        } else {
            b = m;
        }
        if b - a < 1e-10 {
            break;
        }
    }
    Ok((0.5 * (a + b)).exp())
}

// int_0^{w1} Im[exp(z w)] / w dw with z = L1/w1 - i x, i.e. Im Ein(z w1).
fn first_panel(w1: f64, l1: Complex64, x: f64) -> f64 {
    let z = l1 / w1 - Complex64::new(0.0, x);
    let u = z * w1;
    if u.norm() <= 4.0 {
        // sum_{k>=1} u^k / (k k!)
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = Complex64::new(0.0, 0.0);
        for k in 1..60 {
            term *= u / k as f64;
            let t = term / k as f64;
            sum += t;
            if t.norm() < 1e-17 * sum.norm().max(1e-300) {
                break;
            }
        }
        sum.im
    } else {
        // Rare: large x relative to the grid start. Composite midpoint in w.
        let m = 4000;
        let h = w1 / m as f64;
        (0..m)
            .map(|k| {
                let om = (k as f64 + 0.5) * h;
                (z * om).exp().im / om * h
            })
            .sum()
    }
}

// int_{w0}^{w1} Im[exp(-iwx + L(w))] / w dw with L and 1/w linear on the panel.
fn panel(w0: f64, w1: f64, l0: Complex64, l1: Complex64, x: f64) -> f64 {
    let h = w1 - w0;
    let s = (l1 - l0) / h;
    let c = Complex64::new(s.re, s.im - x);
    let a = (l0 - Complex64::new(0.0, w0 * x)).exp();
    if a.norm() < 1e-300 {
        return 0.0;
    }
    let alpha = 1.0 / w0;
    let beta = (1.0 / w1 - 1.0 / w0) / h;
    let zz = c * h;
    let (e1, e2) = expint_moments(zz);
    (a * (e1 * (h * alpha) + e2 * (h * h * beta))).im
}

// (int_0^1 e^{zu} du, int_0^1 u e^{zu} du).
fn expint_moments(z: Complex64) -> (Complex64, Complex64) {
    if z.norm() < 1e-2 {
        let z2 = z * z;
        let z3 = z2 * z;
        let e1 = 1.0 + z / 2.0 + z2 / 6.0 + z3 / 24.0 + z2 * z2 / 120.0;
        let e2 = 0.5 + z / 3.0 + z2 / 8.0 + z3 / 30.0 + z2 * z2 / 144.0;
        (e1, e2)
    } else {
        let ez = z.exp();
        let e1 = (ez - 1.0) / z;
        let e2 = (ez * (z - 1.0) + 1.0) / (z * z);
        (e1, e2)
    }
}

/// Pool-adjacent-violators isotonic regression (equal weights).
pub fn isotonic(y: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(y.len());
    for &v in y {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (m2, n2) = blocks[blocks.len() - 1];
            let (m1, n1) = blocks[blocks.len() - 2];
            if m1 <= m2 {
                break;
            }
            blocks.pop();
            let n = n1 + n2;
            *blocks.last_mut().unwrap() = ((m1 * n1 as f64 + m2 * n2 as f64) / n as f64, n);
        }
    }
    blocks.into_iter().flat_map(|(m, n)| std::iter::repeat_n(m, n)).collect()
}

/// `n` log-spaced points on [lo, hi].
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::super::cf::{cf_from_linear, OmegaGrid, POINTS_PER_DECADE};
    use super::super::db::LinearDistribution;
    use super::*;

    #[test]
    fn isotonic_pools_violators() {
        assert_eq!(isotonic(&[0.1, 0.3, 0.2, 0.4]), vec![0.1, 0.25, 0.25, 0.4]);
        assert_eq!(isotonic(&[0.0, 1.0]), vec![0.0, 1.0]);
    }

    #[test]
    fn exponential_median() {
        let mu = 2.5;
        let g = OmegaGrid::for_support(mu * 1e-3, mu * 10.0, POINTS_PER_DECADE).unwrap();
        let cf = CharFn::from_fn(&g, |w| 1.0 / Complex64::new(1.0, -w * mu));
        let c = gil_pelaez_cdf(&cf, &[mu * 2f64.ln()]).unwrap();
        assert!((c.cdf[0] - 0.5).abs() < 1e-3, "{}", c.cdf[0]);
    }

    #[test]
    fn point_mass_step() {
        let x0 = 1.0;
        let g = OmegaGrid::for_support(1e-3, 10.0, POINTS_PER_DECADE).unwrap();
        let cf = cf_from_linear(&LinearDistribution::delta(x0), &g);
        let xs = log_grid(0.5, 2.0, 61);
        let c = gil_pelaez_cdf(&cf, &xs).unwrap();
        // Step happens between the neighbours of x0.
        let k = xs.iter().position(|&x| x >= x0).unwrap();
        assert!(c.cdf[k - 1] < 0.05 && c.cdf[k + 1] > 0.95, "{:?}", &c.cdf[k - 2..k + 3]);
    }

    fn gamma3_cdf(x: f64, theta: f64) -> f64 {
        let t = x / theta;
        1.0 - (-t).exp() * (1.0 + t + t * t / 2.0)
    }

    #[test]
    fn gamma3_sup_error() {
        let theta = 0.7;
        let g = OmegaGrid::for_support(theta * 1e-2, theta * 30.0, POINTS_PER_DECADE).unwrap();
        let cf = CharFn::from_fn(&g, |w| Complex64::new(1.0, -w * theta).powi(-3));
        let xs = log_grid(theta * 1e-2, theta * 30.0, 400);
        let c = gil_pelaez_cdf(&cf, &xs).unwrap();
        let err = xs.iter().zip(&c.cdf).map(|(&x, &f)| (f - gamma3_cdf(x, theta)).abs()).fold(0.0, f64::max);
        assert!(err < 1e-4, "sup error {err}");
        assert!(c.max_adjustment < 1e-4);
    }

    #[test]
    fn fractional_power_of_gamma_is_gamma() {
        // (1 - iw)^{-3} raised to 1/3 is the unit exponential; needs the
        // continuous branch since arg runs down to -3pi/2.
        let g = OmegaGrid::for_support(1e-3, 30.0, POINTS_PER_DECADE).unwrap();
        let cf = CharFn::from_fn(&g, |w| Complex64::new(1.0, -w).powi(-3));
        let e = super::super::cf::cf_pow(&cf, 1.0 / 3.0).unwrap();
        let xs = log_grid(1e-3, 30.0, 200);
        let c = gil_pelaez_cdf(&e, &xs).unwrap();
        let err = xs.iter().zip(&c.cdf).map(|(&x, &f)| (f - (1.0 - (-x).exp())).abs()).fold(0.0, f64::max);
        assert!(err < 1e-3, "sup error {err}");
    }
}
