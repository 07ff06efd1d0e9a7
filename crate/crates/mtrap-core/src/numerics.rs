//! Shared numerical kernels: dense 2-D arrays, finite-difference stencils,
//! quadrature, and monotone cubic interpolation.

use crate::error::{GeomError, Result};
use crate::scalar::Real;

/// Row-major dense matrix indexed as `(i, j)` = (u-index, v-index).
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<R> {
    nu: usize,
    nv: usize,
    data: Vec<R>,
}

impl<R: Real> Mat<R> {
    pub fn zeros(nu: usize, nv: usize) -> Self {
        Self {
            nu,
            nv,
            data: vec![R::zero(); nu * nv],
        }
    }

    pub fn from_fn(nu: usize, nv: usize, mut f: impl FnMut(usize, usize) -> R) -> Self {
        let mut data = Vec::with_capacity(nu * nv);
        for i in 0..nu {
            for j in 0..nv {
                data.push(f(i, j));
            }
        }
        Self { nu, nv, data }
    }

    pub fn from_vec(nu: usize, nv: usize, data: Vec<R>) -> Result<Self> {
        if data.len() != nu * nv {
            return Err(GeomError::InvalidGrid(format!(
                "field length {} does not match shape [{nu}, {nv}]",
                data.len()
            )));
        }
        Ok(Self { nu, nv, data })
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn nv(&self) -> usize {
        self.nv
    }

    pub fn at(&self, i: usize, j: usize) -> R {
        self.data[i * self.nv + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: R) {
        self.data[i * self.nv + j] = x;
    }

    pub fn data(&self) -> &[R] {
        &self.data
    }

    pub fn into_data(self) -> Vec<R> {
        self.data
    }

    pub fn row(&self, i: usize) -> Vec<R> {
        (0..self.nv).map(|j| self.at(i, j)).collect()
    }

    pub fn col(&self, j: usize) -> Vec<R> {
        (0..self.nu).map(|i| self.at(i, j)).collect()
    }

    pub fn map(&self, f: impl Fn(R) -> R) -> Self {
        Self {
            nu: self.nu,
            nv: self.nv,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn zip(&self, other: &Self, f: impl Fn(R, R) -> R) -> Self {
        debug_assert_eq!((self.nu, self.nv), (other.nu, other.nv));
        Self {
            nu: self.nu,
            nv: self.nv,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn max_abs(&self) -> R {
        self.data
            .iter()
            .fold(R::zero(), |acc, &x| acc.max(x.abs()))
    }

    /// Max |entry| over the interior (margin nodes stripped on every side).
    pub fn max_abs_interior(&self, margin: usize) -> R {
        let mut worst = R::zero();
        for i in margin..self.nu.saturating_sub(margin) {
            for j in margin..self.nv.saturating_sub(margin) {
                worst = worst.max(self.at(i, j).abs());
            }
        }
        worst
    }

    /// Derivative along index `i` (the u-direction), uniform spacing `h`.
    /// 4th-order central stencil inside, 4th-order one-sided at the edges.
    pub fn d_du(&self, h: R) -> Self {
        let mut out = Self::zeros(self.nu, self.nv);
        for j in 0..self.nv {
            let col: Vec<R> = (0..self.nu).map(|i| self.at(i, j)).collect();
            let d = deriv4(&col, h);
            for (i, di) in d.into_iter().enumerate() {
                out.set(i, j, di);
            }
        }
        out
    }

    /// Derivative along index `j` (the v-direction), analogous stencils.
    pub fn d_dv(&self, h: R) -> Self {
        let mut out = Self::zeros(self.nu, self.nv);
        for i in 0..self.nu {
            let row: Vec<R> = (0..self.nv).map(|j| self.at(i, j)).collect();
            let d = deriv4(&row, h);
            for (j, dj) in d.into_iter().enumerate() {
                out.set(i, j, dj);
            }
        }
        out
    }
}

/// 4th-order first derivative of uniformly spaced samples (one-sided 5-point
/// stencils on the two boundary layers). Needs at least 5 samples.
pub fn deriv4<R: Real>(y: &[R], h: R) -> Vec<R> {
    let n = y.len();
    assert!(n >= 5, "deriv4 needs at least 5 samples, got {n}");
    let c = |x: f64| R::of(x);
    let twelve_h = c(12.0) * h;
    let mut out = vec![R::zero(); n];
    out[0] = (y[0] * c(-25.0) + y[1] * c(48.0) + y[2] * c(-36.0) + y[3] * c(16.0) + y[4] * c(-3.0))
        / twelve_h;
    out[1] =
        (y[0] * c(-3.0) + y[1] * c(-10.0) + y[2] * c(18.0) + y[3] * c(-6.0) + y[4]) / twelve_h;
    for i in 2..n - 2 {
        out[i] = (y[i - 2] - y[i + 2] + (y[i + 1] - y[i - 1]) * c(8.0)) / twelve_h;
    }
    out[n - 2] = (y[n - 1] * c(3.0) + y[n - 2] * c(10.0) + y[n - 3] * c(-18.0) + y[n - 4] * c(6.0)
        - y[n - 5])
        / twelve_h;
    out[n - 1] = (y[n - 1] * c(25.0) + y[n - 2] * c(-48.0) + y[n - 3] * c(36.0)
        + y[n - 4] * c(-16.0)
        + y[n - 5] * c(3.0))
        / twelve_h;
    out
}

/// Composite Simpson rule over uniformly spaced samples.
///
/// Needs an odd sample count; with an even count the last interval is closed
/// with a 3-point Newton-Cotes correction so callers need not special-case.
pub fn simpson<R: Real>(y: &[R], h: R) -> R {
    let n = y.len();
    assert!(n >= 3, "simpson needs at least 3 samples");
    let c = |x: f64| R::of(x);
    let pairs = (n - 1) / 2;
    let mut s = R::zero();
    for k in 0..pairs {
        let i = 2 * k;
        s = s + (y[i] + y[i + 1] * c(4.0) + y[i + 2]) * h / c(3.0);
    }
    if (n - 1) % 2 == 1 {
        // trailing interval via the 3-point right-end rule
        let (a, b, cc) = (y[n - 3], y[n - 2], y[n - 1]);
        s = s + (-a + b * c(8.0) + cc * c(5.0)) * h / c(12.0);
    }
    s
}

/// Cumulative integral of uniformly spaced samples, 4th order: each cell is
/// integrated with the cubic through its four nearest samples.
pub fn cumint4<R: Real>(y: &[R], h: R) -> Vec<R> {
    let n = y.len();
    assert!(n >= 4, "cumint4 needs at least 4 samples, got {n}");
    let c = |x: f64| R::of(x);
    let w24 = h / c(24.0);
    let mut out = vec![R::zero(); n];
    for i in 0..n - 1 {
        let inc = if i == 0 {
            (y[0] * c(9.0) + y[1] * c(19.0) - y[2] * c(5.0) + y[3]) * w24
        } else if i == n - 2 {
            (y[n - 4] - y[n - 3] * c(5.0) + y[n - 2] * c(19.0) + y[n - 1] * c(9.0)) * w24
        } else {
            (-y[i - 1] + y[i] * c(13.0) + y[i + 1] * c(13.0) - y[i + 2]) * w24
        };
        out[i + 1] = out[i] + inc;
    }
    out
}

/// Cumulative integral anchored at interior index `i0`: result is zero there,
/// negative of the reversed integral below it.
pub fn cumint4_from<R: Real>(y: &[R], h: R, i0: usize) -> Vec<R> {
    let n = y.len();
    let mut out = vec![R::zero(); n];
    if i0 + 1 < n {
        let fwd = cumint4(&y[i0..], h);
        for (k, v) in fwd.into_iter().enumerate() {
            out[i0 + k] = v;
        }
    }
    if i0 > 0 {
        let rev: Vec<R> = y[..=i0].iter().rev().copied().collect();
        let back = cumint4(&rev, h);
        for (k, v) in back.into_iter().enumerate() {
            out[i0 - k] = -v;
        }
    }
    out
}

/// Cubic (4-point Lagrange) interpolation of uniform samples at fractional
/// index `s`; the stencil is clamped at the ends.
pub fn interp_cubic<R: Real>(y: &[R], s: R) -> R {
    let n = y.len();
    assert!(n >= 4, "interp_cubic needs at least 4 samples");
    let c = |x: f64| R::of(x);
    let mut i = s.floor().to_f64_lossy() as isize;
    i = i.clamp(1, n as isize - 3);
    let i = i as usize;
    let t = s - R::of(i as f64);
    let (a, b, d, e) = (y[i - 1], y[i], y[i + 1], y[i + 2]);
    let one = R::one();
    let two = c(2.0);
    let six = c(6.0);
    a * (-t * (t - one) * (t - two) / six)
        + b * ((t * t - one) * (t - two) / two)
        + d * (-t * (t + one) * (t - two) / two)
        + e * (t * (t * t - one) / six)
}

pub fn linspace<R: Real>(a: R, b: R, n: usize) -> Vec<R> {
    assert!(n >= 2);
    let h = (b - a) / R::of((n - 1) as f64);
    (0..n)
        .map(|k| if k == n - 1 { b } else { a + h * R::of(k as f64) })
        .collect()
}

/// Monotone cubic interpolant (Fritsch-Carlson slopes) over strictly
/// increasing abscissae. Preserves monotonicity of the data.
#[derive(Debug, Clone)]
pub struct MonotoneCubic<R> {
    x: Vec<R>,
    y: Vec<R>,
    d: Vec<R>,
}

impl<R: Real> MonotoneCubic<R> {
    pub fn new(x: Vec<R>, y: Vec<R>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(GeomError::InvalidGrid(
                "monotone cubic needs >= 2 matching samples".into(),
            ));
        }
        let mut h = vec![R::zero(); n - 1];
        let mut delta = vec![R::zero(); n - 1];
        for i in 0..n - 1 {
            h[i] = x[i + 1] - x[i];
            if h[i] <= R::zero() {
                return Err(GeomError::InvalidGrid(
                    "abscissae must be strictly increasing".into(),
                ));
            }
            delta[i] = (y[i + 1] - y[i]) / h[i];
        }
        let mut d = vec![R::zero(); n];
        if n == 2 {
            d[0] = delta[0];
            d[1] = delta[0];
            return Ok(Self { x, y, d });
        }
        let three = R::of(3.0);
        let endpoint = |h0: R, h1: R, d0: R, d1: R| {
            let mut e = ((h0 + h0 + h1) * d0 - h0 * d1) / (h0 + h1);
            if e.signum() != d0.signum() || d0 == R::zero() {
                e = R::zero();
            } else if d0.signum() != d1.signum() && e.abs() > three * d0.abs() {
                e = three * d0;
            }
            e
        };
        d[0] = endpoint(h[0], h[1], delta[0], delta[1]);
        d[n - 1] = endpoint(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        for i in 1..n - 1 {
            let (dm, dp) = (delta[i - 1], delta[i]);
            if dm == R::zero() || dp == R::zero() || dm.signum() != dp.signum() {
                d[i] = R::zero();
            } else {
                let w1 = R::of(2.0) * h[i] + h[i - 1];
                let w2 = h[i] + R::of(2.0) * h[i - 1];
                d[i] = (w1 + w2) / (w1 / dm + w2 / dp);
            }
        }
        Ok(Self { x, y, d })
    }

    fn segment(&self, x: R) -> usize {
        let n = self.x.len();
        match self
            .x
            .binary_search_by(|a| a.partial_cmp(&x).unwrap_or(std::cmp::Ordering::Less))
        {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        }
    }

    pub fn eval(&self, x: R) -> R {
        let i = self.segment(x);
        let h = self.x[i + 1] - self.x[i];
        let t = (x - self.x[i]) / h;
        let (y0, y1, d0, d1) = (self.y[i], self.y[i + 1], self.d[i], self.d[i + 1]);
        let one = R::one();
        let h00 = (one + R::of(2.0) * t) * (one - t) * (one - t);
        let h10 = t * (one - t) * (one - t);
        let h01 = t * t * (R::of(3.0) - R::of(2.0) * t);
        let h11 = t * t * (t - one);
        y0 * h00 + d0 * h * h10 + y1 * h01 + d1 * h * h11
    }

    pub fn deriv(&self, x: R) -> R {
        let i = self.segment(x);
        let h = self.x[i + 1] - self.x[i];
        let t = (x - self.x[i]) / h;
        let (y0, y1, d0, d1) = (self.y[i], self.y[i + 1], self.d[i], self.d[i + 1]);
        let one = R::one();
        let six = R::of(6.0);
        let dh00 = six * t * (t - one) / h;
        let dh10 = (one - t) * (one - R::of(3.0) * t);
        let dh01 = -six * t * (t - one) / h;
        let dh11 = t * (R::of(3.0) * t - R::of(2.0));
        y0 * dh00 + d0 * dh10 + y1 * dh01 + d1 * dh11
    }

    pub fn domain(&self) -> (R, R) {
        (self.x[0], *self.x.last().unwrap())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deriv4_is_exact_on_cubics() {
        let x: Vec<f64> = linspace(0.0, 2.0, 9);
        let y: Vec<f64> = x.iter().map(|&t| 1.0 + 2.0 * t - t * t * t).collect();
        let d = deriv4(&y, x[1] - x[0]);
        for (i, &t) in x.iter().enumerate() {
            assert!((d[i] - (2.0 - 3.0 * t * t)).abs() < 1e-12);
        }
    }

    #[test]
    fn cumint4_matches_analytic_integral() {
        let n = 65;
        let xs: Vec<f64> = linspace(0.0, 1.5, n);
        let h = xs[1] - xs[0];
        let y: Vec<f64> = xs.iter().map(|&t| (2.0 * t).exp()).collect();
        let i = cumint4(&y, h);
        for (k, &t) in xs.iter().enumerate() {
            let exact = ((2.0 * t).exp() - 1.0) / 2.0;
            assert!((i[k] - exact).abs() < 2e-6, "at {t}: {}", (i[k] - exact).abs());
        }
    }

    #[test]
    fn cumint4_from_interior_anchor() {
        let xs: Vec<f64> = linspace(-1.0, 1.0, 33);
        let h = xs[1] - xs[0];
        let y: Vec<f64> = xs.iter().map(|&t| t.cos()).collect();
        let i = cumint4_from(&y, h, 16);
        for (k, &t) in xs.iter().enumerate() {
            assert!((i[k] - t.sin()).abs() < 5e-7);
        }
        assert_eq!(i[16], 0.0);
    }

    #[test]
    fn simpson_handles_even_sample_counts() {
        let n = 64; // odd interval count
        let xs: Vec<f64> = linspace(0.0, 1.0, n);
        let y: Vec<f64> = xs.iter().map(|&t| t.exp()).collect();
        let s = simpson(&y, xs[1] - xs[0]);
        assert!((s - (1f64.exp() - 1.0)).abs() < 1e-8);
    }

    #[test]
    fn monotone_cubic_preserves_monotonicity_and_inverts() {
        let x: Vec<f64> = linspace(0.0, 1.0, 21);
        let y: Vec<f64> = x.iter().map(|&t| t + 0.3 * (3.0 * t).sin() * t).collect();
        assert!(y.windows(2).all(|w| w[1] > w[0]));
        let f = MonotoneCubic::new(x.clone(), y.clone()).unwrap();
        let mut prev = f.eval(0.0);
        for k in 1..400 {
            let t = k as f64 / 399.0;
            let v = f.eval(t);
            assert!(v >= prev - 1e-14, "not monotone at {t}");
            prev = v;
        }
        for (&xi, &yi) in x.iter().zip(&y) {
            assert!((f.eval(xi) - yi).abs() < 1e-14);
        }
    }

    #[test]
    fn interp_cubic_reproduces_cubics() {
        let y: Vec<f64> = (0..8).map(|i| {
            let t = i as f64;
            0.5 - t + 0.25 * t * t + 0.125 * t * t * t
        }).collect();
        for k in 0..50 {
            let s = 0.1 + k as f64 * 0.13;
            let t = s;
            let exact = 0.5 - t + 0.25 * t * t + 0.125 * t * t * t;
            assert!((interp_cubic(&y, s) - exact).abs() < 1e-11);
        }
    }
}
