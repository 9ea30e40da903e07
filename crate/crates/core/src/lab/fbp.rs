//! Euclidean filtered backprojection f = (1/4π)|D| N f, and the convolution
//! oracle N f = 2 ∫ f(y)/|x−y| dy.

use crate::fft::Fft2;
use crate::grid::{DiskGrid, DiskGridFunction};
use crate::metric::{MetricField, Vec2};
use crate::util::{integrate_adaptive, rel_l2};
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Square node grid x_k = −L + k·d, k = 0..n, shared by the FFT transfer steps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CartesianGrid {
    pub n: usize,
    pub half_width: f64,
}

impl CartesianGrid {
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn coord(&self, k: usize) -> f64 {
        -self.half_width + k as f64 * self.spacing()
    }

    pub fn point(&self, i: usize, j: usize) -> Vec2 {
        Vec2::new(self.coord(j), self.coord(i))
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Cubic-convolution (Keys, a = −1/2) interpolation of row-major samples.
    pub fn interpolate(&self, v: &[f64], x: Vec2) -> f64 {
        self.stencil(x).iter().map(|&(k, w)| w * v[k]).sum()
    }

    /// The Keys weights at x as (row-major index, weight), nodes off the grid dropped.
    pub fn stencil(&self, x: Vec2) -> Vec<(usize, f64)> {
        let d = self.spacing();
        let (u, w) = ((x[0] + self.half_width) / d, (x[1] + self.half_width) / d);
        let (j0, i0) = (u.floor() as isize, w.floor() as isize);
        let (tu, tw) = (u - j0 as f64, w - i0 as f64);
        let (ku, kw) = (keys(tu), keys(tw));
        let n = self.n as isize;
        let mut out = Vec::with_capacity(16);
        for (a, wa) in kw.iter().enumerate() {
            let i = i0 - 1 + a as isize;
            if i < 0 || i >= n {
                continue;
            }
            for (b, wb) in ku.iter().enumerate() {
                let j = j0 - 1 + b as isize;
                if j < 0 || j >= n {
                    continue;
                }
                out.push(((i * n + j) as usize, wa * wb));
            }
        }
        out
    }
}

fn keys(t: f64) -> [f64; 4] {
    let k = |x: f64| {
        let x = x.abs();
        if x <= 1.0 {
            1.5 * x * x * x - 2.5 * x * x + 1.0
        } else if x < 2.0 {
            -0.5 * x * x * x + 2.5 * x * x - 4.0 * x + 2.0
        } else {
            0.0
        }
    };
    [k(1.0 + t), k(t), k(1.0 - t), k(2.0 - t)]
}

/// The multiplier c·|ξ| applied with zero padding.
pub struct RieszFilter {
    pub grid: CartesianGrid,
    pub pad: usize,
    fft: Fft2,
    mult: Vec<f64>,
}

impl RieszFilter {
    pub fn new(grid: CartesianGrid, pad: usize, constant: f64) -> Self {
        Self::shifted(grid, pad, constant, 0.0)
    }

    /// c·√(|ξ|² + k₀²), positive definite for k₀ > 0.
    pub fn shifted(grid: CartesianGrid, pad: usize, constant: f64, k0: f64) -> Self {
        let m = grid.n * pad;
        let d = grid.spacing();
        let freq = |k: usize| {
            let s = if k < m / 2 { k as f64 } else { k as f64 - m as f64 };
            2.0 * PI * s / (m as f64 * d)
        };
        let mut mult = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                mult[i * m + j] = constant * freq(i).hypot(freq(j)).hypot(k0) / (m * m) as f64;
            }
        }
        RieszFilter { grid, pad, fft: Fft2::new(m), mult }
    }

    /// (1/4π)|D|, the inverse of the Euclidean normal operator.
    pub fn inverse_normal(grid: CartesianGrid, pad: usize) -> Self {
        Self::new(grid, pad, 1.0 / (4.0 * PI))
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let (n, m) = (self.grid.n, self.grid.n * self.pad);
        let mut buf = vec![Complex64::new(0.0, 0.0); m * m];
        for i in 0..n {
            for j in 0..n {
                buf[i * m + j] = Complex64::new(v[i * n + j], 0.0);
            }
        }
        self.fft.process(&mut buf, false);
        buf.iter_mut().zip(&self.mult).for_each(|(z, c)| *z *= c);
        self.fft.process(&mut buf, true);
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = buf[i * m + j].re;
            }
        }
        out
    }
}

/// Euclidean N f(x) for f supported in the unit disk, at any point of the plane.
/// Full-circle trapezoid in direction for |x| < 1; Gauss–Legendre over the
/// visible sector otherwise; Simpson along each chord.
pub fn euclidean_normal_at(f: &dyn Fn(Vec2) -> f64, x: Vec2, nphi: usize, step: f64) -> f64 {
    let chord = |w: Vec2| -> f64 {
        // x + tω inside the unit disk for t ∈ [t0, t1]
        let b = x.dot(&w);
        let c = x.norm_squared() - 1.0;
        let disc = b * b - c;
        if disc <= 0.0 {
            return 0.0;
        }
        let sq = disc.sqrt();
        let (t0, t1) = ((-b - sq).max(0.0), -b + sq);
        if t1 <= t0 {
            return 0.0;
        }
        let m = (((t1 - t0) / step).ceil() as usize).max(2).div_ceil(2) * 2;
        let h = (t1 - t0) / m as f64;
        let mut s = f(x + w * t0) + f(x + w * t1);
        for k in 1..m {
            s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(x + w * (t0 + k as f64 * h));
        }
        s * h / 3.0
    };
    let r = x.norm();
    if r < 1.0 {
        let s: f64 = (0..nphi).map(|k| chord(unit(2.0 * PI * k as f64 / nphi as f64))).sum();
        return 2.0 * s * 2.0 * PI / nphi as f64;
    }
    let psi = (-x[1]).atan2(-x[0]);
    let half = (1.0 / r).asin();
    let (nodes, weights) = gauss_legendre(nphi.max(8) / 4);
    let s: f64 = nodes.iter().zip(&weights).map(|(t, w)| w * chord(unit(psi + half * t))).sum();
    2.0 * s * half
}

fn unit(a: f64) -> Vec2 {
    Vec2::new(a.cos(), a.sin())
}

/// Gauss–Legendre nodes and weights on [−1, 1] by Newton on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// Adaptive quadrature of 2 ∫ f(y)/|x−y| dy for f supported in the disk |y−c| ≤ ρ.
/// Iterated in Cartesian order; the inner variable is substituted y₂ = x₂ + a·sinh s
/// (a = |y₁ − x₁|), which absorbs the 1/|x−y| peak, and the outer integral is split
/// at the remaining logarithmic point y₁ = x₁.
pub fn convolution_oracle(f: &dyn Fn(Vec2) -> f64, c: Vec2, rho: f64, x: Vec2, tol: f64) -> f64 {
    let mut outer = |y1: f64| -> f64 {
        let h2 = rho * rho - (y1 - c[0]).powi(2);
        let a = (y1 - x[0]).abs();
        if h2 <= 0.0 || a == 0.0 {
            return 0.0;
        }
        let h = h2.sqrt();
        let (s0, s1) = (((c[1] - h - x[1]) / a).asinh(), ((c[1] + h - x[1]) / a).asinh());
        let mut inner = |s: f64| f(Vec2::new(y1, x[1] + a * s.sinh()));
        integrate_adaptive(&mut inner, s0, s1, 0.1 * tol)
    };
    let (lo, hi) = (c[0] - rho, c[0] + rho);
    let pieces = if x[0] > lo && x[0] < hi { vec![(lo, x[0]), (x[0], hi)] } else { vec![(lo, hi)] };
    2.0 * pieces.into_iter().map(|(a, b)| integrate_adaptive(&mut outer, a, b, tol)).sum::<f64>()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FbpReport {
    /// least-squares constant c in f ≈ c|D|Nf on the validation Gaussian
    pub measured_constant: f64,
    pub expected_constant: f64,
    pub validation_error: f64,
    pub relative_error: f64,
    pub radius: f64,
    pub grid: CartesianGrid,
    pub passed: bool,
}

pub const FBP_GRID: CartesianGrid = CartesianGrid { n: 128, half_width: 2.0 };
pub const FBP_PAD: usize = 4;

/// N f sampled on the Cartesian transfer grid.
pub fn cartesian_normal(f: &dyn Fn(Vec2) -> f64, grid: CartesianGrid) -> Vec<f64> {
    let step = grid.spacing() / 2.0;
    let mut out = vec![0.0; grid.len()];
    for i in 0..grid.n {
        for j in 0..grid.n {
            out[i * grid.n + j] = euclidean_normal_at(f, grid.point(i, j), 256, step);
        }
    }
    out
}

/// Samples an f given on the disk onto a fine Cartesian grid over [−1, 1]², for
/// cheap bicubic evaluation along chords.
fn resample_disk(f: &DiskGridFunction) -> (CartesianGrid, Vec<f64>) {
    let cg = CartesianGrid { n: 130, half_width: 1.0 + 1.0 / 64.0 };
    let mut v = vec![0.0; cg.len()];
    for i in 0..cg.n {
        for j in 0..cg.n {
            let x = cg.point(i, j);
            if x.norm() <= 1.0 {
                v[i * cg.n + j] = f.eval(x);
            }
        }
    }
    (cg, v)
}

/// (1/4π)|D| N f restricted to the disk grid of f.
pub fn filtered_backprojection(f: &DiskGridFunction) -> DiskGridFunction {
    let (cg, fv) = resample_disk(f);
    let fe = |x: Vec2| cg.interpolate(&fv, x);
    let nf = cartesian_normal(&fe, FBP_GRID);
    let out = RieszFilter::inverse_normal(FBP_GRID, FBP_PAD).apply(&nf);
    DiskGridFunction::from_fn(f.grid, |x| FBP_GRID.interpolate(&out, x))
}

/// Fits the multiplier constant on a Gaussian of width σ (true N, raw |D| filter),
/// then reconstructs it with the exact constant 1/4π and measures the L² error on r < 0.7.
pub fn check_fbp(grid: DiskGrid, sigma: f64) -> FbpReport {
    let gauss = move |x: Vec2| (-x.norm_squared() / (2.0 * sigma * sigma)).exp();
    let radius = 0.7;
    let w = grid.masked(&grid.volume_weights(&MetricField::euclidean()), radius);

    let nf = cartesian_normal(&gauss, FBP_GRID);
    let raw = RieszFilter::new(FBP_GRID, FBP_PAD, 1.0).apply(&nf);
    let raw_d = DiskGridFunction::from_fn(grid, |x| FBP_GRID.interpolate(&raw, x));
    let truth = DiskGridFunction::from_fn(grid, gauss);
    let c = truth.dot(&raw_d, &w) / raw_d.dot(&raw_d, &w);
    let expected = 1.0 / (4.0 * PI);
    let validation_error = (c - expected).abs() / expected;

    let rec = filtered_backprojection(&truth);
    let relative_error = rel_l2(rec.values(), truth.values(), &w);
    FbpReport {
        measured_constant: c,
        expected_constant: expected,
        validation_error,
        relative_error,
        radius,
        grid: FBP_GRID,
        passed: validation_error < 5e-2 && relative_error < 5e-2,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub nodes: usize,
    pub relative_error: f64,
    pub passed: bool,
}

/// Angular N against the convolution quadrature on every fourth ring and angle of
/// `grid` with r < 0.9 (the quadrature costs tens of milliseconds per node).
pub fn check_normal_oracle(grid: DiskGrid, nphi: usize) -> crate::error::Result<OracleReport> {
    let (c, rho) = (Vec2::new(0.15, -0.1), 0.6);
    let f = crate::grid::bump_fn(c, rho, 1.0);
    let field = crate::grid::AnalyticField { f: f.clone(), grad: |_| Vec2::zeros() };
    let g = MetricField::euclidean();
    let n = crate::xray::normal_operator(&crate::xray::operator_flow(), &g, &field, grid, nphi)?;
    let w = grid.masked(&grid.area_weights(), 0.9);
    let (mut a, mut b, mut ww, mut count) = (Vec::new(), Vec::new(), Vec::new(), 0);
    for i in 0..=grid.nr {
        for j in 0..grid.ntheta {
            let k = grid.idx(i, j);
            if w[k] == 0.0 || (i == 0 && j > 0) || i % 4 != 0 || j % 4 != 0 {
                continue;
            }
            a.push(n.values()[k]);
            b.push(convolution_oracle(&f, c, rho, grid.point(i, j), 1e-8));
            ww.push(w[k]);
            count += 1;
        }
    }
    let e = rel_l2(&a, &b, &ww);
    Ok(OracleReport { nodes: count, relative_error: e, passed: e < 1e-2 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_matches_closed_form_at_centre() {
        // f = 1 on the unit disk: 2∫ 1/|y| dy = 4π at the centre
        let v = convolution_oracle(&|_| 1.0, Vec2::zeros(), 1.0, Vec2::zeros(), 1e-10);
        assert!((v - 4.0 * PI).abs() < 1e-6, "{v}");
    }

    #[test]
    fn normal_of_gaussian_at_origin() {
        let s: f64 = 0.2;
        let f = move |x: Vec2| (-x.norm_squared() / (2.0 * s * s)).exp();
        let v = euclidean_normal_at(&f, Vec2::zeros(), 64, 0.005);
        let exact = 4.0 * PI * s * (PI / 2.0).sqrt() * libm_erf(1.0 / (s * 2f64.sqrt()));
        assert!((v - exact).abs() < 1e-8 * exact, "{v} {exact}");
    }

    fn libm_erf(x: f64) -> f64 {
        // series good to 1e-15 for x ≤ 4
        let mut s = 0.0;
        let mut t = x;
        for n in 0..200 {
            s += t / (2 * n + 1) as f64;
            t *= -x * x / (n + 1) as f64;
        }
        2.0 / PI.sqrt() * s
    }

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        let (x, w) = gauss_legendre(8);
        let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((v - 2.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn filter_is_linear_and_kills_zero() {
        let grid = CartesianGrid { n: 32, half_width: 2.0 };
        let r = RieszFilter::inverse_normal(grid, 2);
        assert!(r.apply(&vec![0.0; 1024]).iter().all(|v| *v == 0.0));
        let a: Vec<f64> = (0..1024).map(|k| ((k * 7) % 13) as f64).collect();
        let b: Vec<f64> = (0..1024).map(|k| ((k * 5) % 11) as f64 - 3.0).collect();
        let s: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let (ra, rb, rs) = (r.apply(&a), r.apply(&b), r.apply(&s));
        for k in 0..1024 {
            assert!((rs[k] - ra[k] - rb[k]).abs() < 1e-8);
        }
    }
}
