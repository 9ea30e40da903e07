//! Sampled functions on the disk (polar grid) with bicubic Hermite interpolation.
//!
//! Node slopes come from fourth-order differences, so the interpolant is C¹ and
//! reproduces tensor cubics exactly.

use crate::metric::{MetricField, Vec2};
use std::f64::consts::PI;

#[inline]
pub(crate) fn hermite(t: f64) -> ([f64; 2], [f64; 2], [f64; 2], [f64; 2]) {
    // values (H0, H1), slope bases (K0, K1), and their derivatives
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h10 = t3 - 2.0 * t2 + t;
    let h11 = t3 - t2;
    let d00 = 6.0 * t2 - 6.0 * t;
    let d01 = -d00;
    let d10 = 3.0 * t2 - 4.0 * t + 1.0;
    let d11 = 3.0 * t2 - 2.0 * t;
    ([h00, h01], [h10, h11], [d00, d01], [d10, d11])
}

/// Fourth-order centred slope on a periodic sequence.
pub(crate) fn periodic_slopes(v: &[f64], h: f64, out: &mut [f64]) {
    let n = v.len();
    for j in 0..n {
        let m2 = v[(j + n - 2) % n];
        let m1 = v[(j + n - 1) % n];
        let p1 = v[(j + 1) % n];
        let p2 = v[(j + 2) % n];
        out[j] = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h);
    }
}

/// Fourth-order slopes on an open sequence (one-sided near both ends).
pub(crate) fn open_slopes(v: &[f64], h: f64, out: &mut [f64]) {
    let n = v.len();
    if n < 5 {
        for j in 0..n {
            let (a, b) = if j == 0 { (0, 1.min(n - 1)) } else if j == n - 1 { (n - 2, n - 1) } else { (j - 1, j + 1) };
            out[j] = if a == b { 0.0 } else { (v[b] - v[a]) / ((b - a) as f64 * h) };
        }
        return;
    }
    for j in 0..n {
        out[j] = if j == 0 {
            -(25.0 * v[0] - 48.0 * v[1] + 36.0 * v[2] - 16.0 * v[3] + 3.0 * v[4]) / (12.0 * h)
        } else if j == 1 {
            -(3.0 * v[0] + 10.0 * v[1] - 18.0 * v[2] + 6.0 * v[3] - v[4]) / (12.0 * h)
        } else if j == n - 2 {
            (3.0 * v[n - 1] + 10.0 * v[n - 2] - 18.0 * v[n - 3] + 6.0 * v[n - 4] - v[n - 5]) / (12.0 * h)
        } else if j == n - 1 {
            (25.0 * v[n - 1] - 48.0 * v[n - 2] + 36.0 * v[n - 3] - 16.0 * v[n - 4] + 3.0 * v[n - 5]) / (12.0 * h)
        } else {
            (v[j - 2] - 8.0 * v[j - 1] + 8.0 * v[j + 1] - v[j + 2]) / (12.0 * h)
        };
    }
}

/// Polar tensor grid: radii r_i = R·i/Nr (i = 0..=Nr), angles θ_j = 2πj/Nθ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiskGrid {
    pub nr: usize,
    pub ntheta: usize,
    pub radius: f64,
}

impl DiskGrid {
    pub fn new(nr: usize, ntheta: usize) -> Self {
        Self::with_radius(nr, ntheta, 1.0)
    }

    pub fn with_radius(nr: usize, ntheta: usize, radius: f64) -> Self {
        assert!(nr >= 4 && ntheta >= 8 && ntheta.is_multiple_of(2), "grid too small");
        DiskGrid { nr, ntheta, radius }
    }

    pub fn dr(&self) -> f64 {
        self.radius / self.nr as f64
    }

    pub fn dtheta(&self) -> f64 {
        2.0 * PI / self.ntheta as f64
    }

    pub fn len(&self) -> usize {
        (self.nr + 1) * self.ntheta
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.ntheta + j
    }

    pub fn r(&self, i: usize) -> f64 {
        self.radius * i as f64 / self.nr as f64
    }

    pub fn theta(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.ntheta as f64
    }

    pub fn point(&self, i: usize, j: usize) -> Vec2 {
        let r = self.r(i);
        let t = self.theta(j);
        Vec2::new(r * t.cos(), r * t.sin())
    }

    /// Euclidean area weights: Simpson in r (trapezoid if Nr is odd) times r dθ.
    pub fn area_weights(&self) -> Vec<f64> {
        let rw: Vec<f64> = if self.nr.is_multiple_of(2) {
            crate::util::simpson_weights(self.nr, self.radius)
        } else {
            let h = self.dr();
            (0..=self.nr).map(|i| if i == 0 || i == self.nr { 0.5 * h } else { h }).collect()
        };
        let mut w = vec![0.0; self.len()];
        for i in 0..=self.nr {
            for j in 0..self.ntheta {
                w[self.idx(i, j)] = rw[i] * self.r(i) * self.dtheta();
            }
        }
        w
    }

    /// Riemannian volume weights √det g times the area weights.
    pub fn volume_weights(&self, g: &MetricField) -> Vec<f64> {
        let mut w = self.area_weights();
        for i in 0..=self.nr {
            for j in 0..self.ntheta {
                let k = self.idx(i, j);
                if w[k] != 0.0 {
                    w[k] *= g.g(self.point(i, j)).determinant().sqrt();
                }
            }
        }
        w
    }

    /// Weights restricted to r < rmax.
    pub fn masked(&self, w: &[f64], rmax: f64) -> Vec<f64> {
        let mut out = w.to_vec();
        for i in 0..=self.nr {
            if self.r(i) >= rmax {
                for j in 0..self.ntheta {
                    out[self.idx(i, j)] = 0.0;
                }
            }
        }
        out
    }

    /// The same disk at half resolution in both directions.
    pub fn coarsen(&self, levels: u32) -> Self {
        let f = 1usize << levels;
        DiskGrid::with_radius(self.nr / f, self.ntheta / f, self.radius)
    }
}

/// A scalar sampled on a polar grid with C¹ bicubic Hermite interpolation.
#[derive(Clone, Debug)]
pub struct DiskGridFunction {
    pub grid: DiskGrid,
    values: Vec<f64>,
    fr: Vec<f64>,
    ft: Vec<f64>,
    frt: Vec<f64>,
    origin_grad: Vec2,
}

impl DiskGridFunction {
    pub fn from_fn(grid: DiskGrid, f: impl Fn(Vec2) -> f64) -> Self {
        let mut values = vec![0.0; grid.len()];
        let f0 = f(Vec2::zeros());
        for j in 0..grid.ntheta {
            values[j] = f0;
        }
        for i in 1..=grid.nr {
            for j in 0..grid.ntheta {
                values[grid.idx(i, j)] = f(grid.point(i, j));
            }
        }
        Self::from_values(grid, values)
    }

    pub fn zeros(grid: DiskGrid) -> Self {
        Self::from_values(grid, vec![0.0; grid.len()])
    }

    /// Builds from node values; the r = 0 row is replaced by its mean.
    pub fn from_values(grid: DiskGrid, mut values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len());
        let n = grid.ntheta;
        let m = values[..n].iter().sum::<f64>() / n as f64;
        for v in values[..n].iter_mut() {
            *v = m;
        }
        let (nr, dr, dt) = (grid.nr, grid.dr(), grid.dtheta());
        let mut fr = vec![0.0; grid.len()];
        let mut ft = vec![0.0; grid.len()];
        let mut frt = vec![0.0; grid.len()];
        // radial slopes: reflection through the origin, f(−r, θ) = f(r, θ + π)
        let half = n / 2;
        let mut col = vec![0.0; nr + 3];
        let mut colslope = vec![0.0; nr + 3];
        for j in 0..n {
            let jr = (j + half) % n;
            col[0] = values[grid.idx(2, jr)];
            col[1] = values[grid.idx(1, jr)];
            for i in 0..=nr {
                col[i + 2] = values[grid.idx(i, j)];
            }
            open_slopes(&col, dr, &mut colslope);
            for i in 0..=nr {
                fr[grid.idx(i, j)] = colslope[i + 2];
            }
            // the near-origin rows use centred stencils through the reflection
            for i in 0..2.min(nr) {
                let g = |k: isize| -> f64 { col[(i as isize + 2 + k) as usize] };
                fr[grid.idx(i, j)] = (g(-2) - 8.0 * g(-1) + 8.0 * g(1) - g(2)) / (12.0 * dr);
            }
        }
        let mut row = vec![0.0; n];
        for i in 0..=nr {
            periodic_slopes(&values[i * n..(i + 1) * n], dt, &mut row);
            ft[i * n..(i + 1) * n].copy_from_slice(&row);
            periodic_slopes(&fr[i * n..(i + 1) * n], dt, &mut row);
            frt[i * n..(i + 1) * n].copy_from_slice(&row);
        }
        for j in 0..n {
            ft[j] = 0.0;
        }
        let mut og = Vec2::zeros();
        for j in 0..n {
            let t = grid.theta(j);
            og += Vec2::new(t.cos(), t.sin()) * fr[j];
        }
        og *= 2.0 / n as f64;
        DiskGridFunction { grid, values, fr, ft, frt, origin_grad: og }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_values(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Value at x (bicubic Hermite; the outermost cell extrapolates slightly past R).
    #[inline]
    pub fn eval(&self, x: Vec2) -> f64 {
        let r = x.norm();
        let theta = x[1].atan2(x[0]);
        self.eval_polar(r, theta).0
    }

    /// (f, ∂_r f, ∂_θ f) at polar coordinates (r, θ).
    pub fn eval_polar(&self, r: f64, theta: f64) -> (f64, f64, f64) {
        let g = &self.grid;
        let n = g.ntheta;
        let (dr, dt) = (g.dr(), g.dtheta());
        let u = r / dr;
        let i = (u.floor() as usize).min(g.nr - 1);
        let s = u - i as f64;
        let th = theta.rem_euclid(2.0 * PI) / dt;
        let jf = th.floor();
        let t = th - jf;
        let j0 = (jf as usize) % n;
        let j1 = (j0 + 1) % n;
        let (hs, ks, dhs, dks) = hermite(s);
        let (ht, kt, dht, dkt) = hermite(t);
        let mut v = 0.0;
        let mut vr = 0.0;
        let mut vt = 0.0;
        for (a, ia) in [(0usize, i), (1, i + 1)] {
            for (b, jb) in [(0usize, j0), (1, j1)] {
                let k = ia * n + jb;
                let f = self.values[k];
                let fr = self.fr[k] * dr;
                let ft = self.ft[k] * dt;
                let frt = self.frt[k] * dr * dt;
                v += hs[a] * ht[b] * f + ks[a] * ht[b] * fr + hs[a] * kt[b] * ft + ks[a] * kt[b] * frt;
                vr += dhs[a] * ht[b] * f + dks[a] * ht[b] * fr + dhs[a] * kt[b] * ft + dks[a] * kt[b] * frt;
                vt += hs[a] * dht[b] * f + ks[a] * dht[b] * fr + hs[a] * dkt[b] * ft + ks[a] * dkt[b] * frt;
            }
        }
        (v, vr / dr, vt / dt)
    }

    /// Cartesian gradient (∂₁f, ∂₂f) of the interpolant.
    pub fn gradient(&self, x: Vec2) -> Vec2 {
        let r = x.norm();
        if r < 1e-12 {
            return self.origin_grad;
        }
        let theta = x[1].atan2(x[0]);
        let (_, fr, ft) = self.eval_polar(r, theta);
        let (s, c) = theta.sin_cos();
        Vec2::new(c * fr - s * ft / r, s * fr + c * ft / r)
    }

    /// Cartesian gradient at node (i, j) from the stored slopes.
    pub fn node_gradient(&self, i: usize, j: usize) -> Vec2 {
        if i == 0 {
            return self.origin_grad;
        }
        let k = self.grid.idx(i, j);
        let r = self.grid.r(i);
        let (s, c) = self.grid.theta(j).sin_cos();
        let (fr, ft) = (self.fr[k], self.ft[k]);
        Vec2::new(c * fr - s * ft / r, s * fr + c * ft / r)
    }

    /// Weighted inner product with another function on the same grid.
    pub fn dot(&self, other: &DiskGridFunction, w: &[f64]) -> f64 {
        self.values.iter().zip(&other.values).zip(w).map(|((a, b), w)| a * b * w).sum()
    }
}

/// A scalar on the plane with a Cartesian gradient.
pub trait ScalarField: Sync {
    fn value(&self, x: Vec2) -> f64;
    fn gradient(&self, x: Vec2) -> Vec2;
}

impl ScalarField for DiskGridFunction {
    fn value(&self, x: Vec2) -> f64 {
        self.eval(x)
    }
    fn gradient(&self, x: Vec2) -> Vec2 {
        DiskGridFunction::gradient(self, x)
    }
}

/// Closure-defined scalar field with analytic gradient.
pub struct AnalyticField<F, G> {
    pub f: F,
    pub grad: G,
}

impl<F: Fn(Vec2) -> f64 + Sync, G: Fn(Vec2) -> Vec2 + Sync> ScalarField for AnalyticField<F, G> {
    fn value(&self, x: Vec2) -> f64 {
        (self.f)(x)
    }
    fn gradient(&self, x: Vec2) -> Vec2 {
        (self.grad)(x)
    }
}

/// Smooth radial bump exp(1 − 1/(1 − |x−c|²/w²)) of height `amp`.
pub fn bump_fn(center: Vec2, width: f64, amp: f64) -> impl Fn(Vec2) -> f64 + Clone {
    move |x: Vec2| {
        let q = 1.0 - (x - center).norm_squared() / (width * width);
        if q <= 0.0 {
            0.0
        } else {
            amp * (1.0 - 1.0 / q).exp()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reproduces_polar_cubics() {
        let grid = DiskGrid::new(16, 32);
        // cubic in r; the reflection stencils only touch the two innermost rows
        let f = DiskGridFunction::from_fn(grid, |x| {
            let r = x.norm();
            1.0 + 2.0 * r - r * r + 0.5 * r * r * r
        });
        for k in 0..50 {
            let r = 0.125 + 0.875 * k as f64 / 50.0;
            let t = 0.37 * k as f64;
            let want = 1.0 + 2.0 * r - r * r + 0.5 * r * r * r;
            assert!((f.eval(Vec2::new(r * t.cos(), r * t.sin())) - want).abs() < 1e-10);
        }
    }

    #[test]
    fn cartesian_linear_accuracy() {
        let grid = DiskGrid::new(64, 128);
        let f = DiskGridFunction::from_fn(grid, |x| 0.3 + x[0] - 2.0 * x[1]);
        for k in 0..100 {
            let r = 0.99 * (k as f64 / 100.0);
            let t = 1.3 * k as f64;
            let x = Vec2::new(r * t.cos(), r * t.sin());
            assert!((f.eval(x) - (0.3 + x[0] - 2.0 * x[1])).abs() < 1e-6);
            assert!((f.gradient(x) - Vec2::new(1.0, -2.0)).norm() < 1e-5);
        }
        assert!((f.node_gradient(0, 0) - Vec2::new(1.0, -2.0)).norm() < 1e-10);
    }

    #[test]
    fn quadrature_area() {
        let grid = DiskGrid::new(64, 128);
        let w = grid.area_weights();
        let s: f64 = w.iter().sum();
        assert!((s - PI).abs() < 1e-12);
        let f = DiskGridFunction::from_fn(grid, |x| x.norm_squared());
        let ones = DiskGridFunction::from_fn(grid, |_| 1.0);
        assert!((f.dot(&ones, &w) - PI / 2.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn interpolation_is_exact_at_nodes(seed in 0u64..1000) {
            let grid = DiskGrid::new(8, 16);
            let vals: Vec<f64> = (0..grid.len()).map(|k| ((k as u64 * 2654435761 + seed) % 1000) as f64 / 1000.0).collect();
            let f = DiskGridFunction::from_values(grid, vals);
            for i in 1..=grid.nr {
                for j in 0..grid.ntheta {
                    let (v, _, _) = f.eval_polar(grid.r(i), grid.theta(j));
                    prop_assert!((v - f.at(i, j)).abs() < 1e-12);
                }
            }
        }
    }
}
