//! Boundary geometry: fan coordinates on ∂₊SM, boundary distance, scattering relation
//! and tangential boundary-metric recovery.

use crate::error::{GeoError, Result};
use crate::geodesic::{Flow, PhasePoint, GUARD};
use crate::grid::{hermite, open_slopes, periodic_slopes};
use crate::metric::{inv2, MetricField, Vec2};
use crate::util::wrap_angle;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// g-unit inward normal at a point of the circle |x| = R.
pub fn inward_normal_at(g: &MetricField, x: Vec2) -> Vec2 {
    let n = x / x.norm();
    let gi = inv2(&g.g(x));
    let v = -(gi * n);
    v / g.norm(x, v)
}

/// g-unit counterclockwise tangent at a point of the circle |x| = R.
pub fn unit_tangent_at(g: &MetricField, x: Vec2) -> Vec2 {
    let t = Vec2::new(-x[1], x[0]);
    t / g.norm(x, t)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FanCoordinate {
    pub beta: f64,
    pub alpha: f64,
}

pub fn boundary_point(radius: f64, beta: f64) -> Vec2 {
    Vec2::new(radius * beta.cos(), radius * beta.sin())
}

/// (x(β), cos α·ν + sin α·T) on the circle of radius R.
pub fn fan_phase_point_r(g: &MetricField, radius: f64, beta: f64, alpha: f64) -> PhasePoint {
    let x = boundary_point(radius, beta);
    let nu = inward_normal_at(g, x);
    let t = unit_tangent_at(g, x);
    PhasePoint::new(x, nu * alpha.cos() + t * alpha.sin())
}

pub fn fan_phase_point(g: &MetricField, beta: f64, alpha: f64) -> PhasePoint {
    fan_phase_point_r(g, 1.0, beta, alpha)
}

/// Fan coordinate of an inward (or tangent) unit vector at a boundary point.
pub fn fan_coordinate_of(g: &MetricField, p: &PhasePoint) -> FanCoordinate {
    let nu = inward_normal_at(g, p.x);
    let t = unit_tangent_at(g, p.x);
    let gm = g.g(p.x);
    let a = p.v.dot(&(gm * t)).atan2(p.v.dot(&(gm * nu)));
    FanCoordinate { beta: wrap_angle(p.x[1].atan2(p.x[0])), alpha: a }
}

/// g-length element |∂_β x|_g of the boundary circle.
pub fn arc_element(g: &MetricField, radius: f64, beta: f64) -> f64 {
    let x = boundary_point(radius, beta);
    g.norm(x, Vec2::new(-x[1], x[0]))
}

/// Discretization of ∂₊SM: β_i = 2πi/Nβ and midpoint α nodes inside the guard band.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FanSpec {
    pub nbeta: usize,
    pub nalpha: usize,
    pub guard: f64,
    pub radius: f64,
}

impl FanSpec {
    pub fn new(nbeta: usize, nalpha: usize) -> Self {
        FanSpec { nbeta, nalpha, guard: GUARD, radius: 1.0 }
    }

    pub fn with_guard(mut self, guard: f64) -> Self {
        self.guard = guard;
        self
    }

    pub fn with_radius(mut self, radius: f64) -> Self {
        self.radius = radius;
        self
    }

    pub fn band(&self) -> f64 {
        PI / 2.0 - self.guard
    }

    pub fn dbeta(&self) -> f64 {
        2.0 * PI / self.nbeta as f64
    }

    pub fn dalpha(&self) -> f64 {
        2.0 * self.band() / self.nalpha as f64
    }

    pub fn beta(&self, i: usize) -> f64 {
        self.dbeta() * i as f64
    }

    pub fn alpha(&self, j: usize) -> f64 {
        -self.band() + (j as f64 + 0.5) * self.dalpha()
    }

    pub fn len(&self) -> usize {
        self.nbeta * self.nalpha
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.nalpha + j
    }

    pub fn coords(&self) -> impl Iterator<Item = (usize, usize, f64, f64)> + '_ {
        (0..self.nbeta).flat_map(move |i| (0..self.nalpha).map(move |j| (i, j, self.beta(i), self.alpha(j))))
    }

    /// L²_μ weights cos α · |∂_β x|_g · Δβ · Δα.
    pub fn weights(&self, g: &MetricField) -> Vec<f64> {
        let mut w = vec![0.0; self.len()];
        for i in 0..self.nbeta {
            let l = arc_element(g, self.radius, self.beta(i));
            for j in 0..self.nalpha {
                w[self.idx(i, j)] = self.alpha(j).cos() * l * self.dbeta() * self.dalpha();
            }
        }
        w
    }

    pub fn coarsen(&self, levels: u32) -> Self {
        let f = 1usize << levels;
        FanSpec { nbeta: self.nbeta / f, nalpha: self.nalpha / f, ..*self }
    }
}

/// Function on the guard-banded fan.
#[derive(Clone, Debug)]
pub struct FanGrid {
    pub spec: FanSpec,
    pub values: Vec<f64>,
}

impl FanGrid {
    pub fn from_fn(spec: FanSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = spec.coords().map(|(_, _, b, a)| f(b, a)).collect();
        FanGrid { spec, values }
    }

    pub fn zeros(spec: FanSpec) -> Self {
        FanGrid { spec, values: vec![0.0; spec.len()] }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.spec.idx(i, j)]
    }

    pub fn dot(&self, other: &FanGrid, w: &[f64]) -> f64 {
        self.values.iter().zip(&other.values).zip(w).map(|((a, b), w)| a * b * w).sum()
    }

    pub fn interpolator(&self) -> FanInterp {
        FanInterp::new(self)
    }
}

/// C¹ bicubic Hermite interpolation on a fan grid; flat outside the guard band.
#[derive(Clone, Debug)]
pub struct FanInterp {
    spec: FanSpec,
    v: Vec<f64>,
    fb: Vec<f64>,
    fa: Vec<f64>,
    fab: Vec<f64>,
}

impl FanInterp {
    pub fn new(w: &FanGrid) -> Self {
        let s = w.spec;
        let (nb, na) = (s.nbeta, s.nalpha);
        let mut fb = vec![0.0; s.len()];
        let mut fa = vec![0.0; s.len()];
        let mut fab = vec![0.0; s.len()];
        let mut col = vec![0.0; nb];
        let mut out = vec![0.0; nb];
        for j in 0..na {
            for i in 0..nb {
                col[i] = w.values[s.idx(i, j)];
            }
            periodic_slopes(&col, s.dbeta(), &mut out);
            for i in 0..nb {
                fb[s.idx(i, j)] = out[i];
            }
        }
        let mut row = vec![0.0; na];
        for i in 0..nb {
            open_slopes(&w.values[i * na..(i + 1) * na], s.dalpha(), &mut row);
            fa[i * na..(i + 1) * na].copy_from_slice(&row);
            open_slopes(&fb[i * na..(i + 1) * na], s.dalpha(), &mut row);
            fab[i * na..(i + 1) * na].copy_from_slice(&row);
        }
        FanInterp { spec: s, v: w.values.clone(), fb, fa, fab }
    }

    /// Value at (β, α); the flag is true when α lies outside the guard band.
    pub fn eval(&self, beta: f64, alpha: f64) -> (f64, bool) {
        let s = &self.spec;
        let band = s.band();
        let clipped = alpha.abs() > band;
        let a = alpha.clamp(-band, band);
        let (db, da) = (s.dbeta(), s.dalpha());
        let u = wrap_angle(beta) / db;
        let i0f = u.floor();
        let tb = u - i0f;
        let i0 = (i0f as usize) % s.nbeta;
        let i1 = (i0 + 1) % s.nbeta;
        let w = (a + band) / da - 0.5;
        let j0 = (w.floor().max(0.0) as usize).min(s.nalpha - 2);
        let ta = w - j0 as f64;
        let (hb, kb, _, _) = hermite(tb);
        let (ha, ka, _, _) = hermite(ta);
        let mut val = 0.0;
        for (p, ii) in [(0usize, i0), (1, i1)] {
            for (q, jj) in [(0usize, j0), (1, j0 + 1)] {
                let k = s.idx(ii, jj);
                val += hb[p] * ha[q] * self.v[k]
                    + kb[p] * ha[q] * self.fb[k] * db
                    + hb[p] * ka[q] * self.fa[k] * da
                    + kb[p] * ka[q] * self.fab[k] * db * da;
            }
        }
        (val, clipped)
    }
}

/// Exit data of the geodesic from a fan coordinate: boundary angle β', incidence
/// angle α' of the reversed exit direction at β', and travel time τ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scatter {
    pub beta: f64,
    pub alpha: f64,
    pub tau: f64,
}

pub fn scattering_relation_with(flow: &Flow, g: &MetricField, fc: FanCoordinate) -> Result<Scatter> {
    let p = fan_phase_point_r(g, flow.radius, fc.beta, fc.alpha);
    let (tau, exit) = flow.exit(g, p)?;
    let back = fan_coordinate_of(g, &exit.reversed());
    Ok(Scatter { beta: back.beta, alpha: back.alpha, tau })
}

pub fn scattering_relation(g: &MetricField, fc: FanCoordinate) -> Result<Scatter> {
    scattering_relation_with(&Flow::default(), g, fc)
}

/// Result of the shooting method; `fallback` marks the arc-length bound used when no
/// direction brackets the target.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Distance {
    pub length: f64,
    pub alpha: f64,
    pub fallback: bool,
}

pub fn boundary_distance(g: &MetricField, b1: f64, b2: f64) -> Result<Distance> {
    boundary_distance_with(&Flow::default(), g, b1, b2)
}

pub fn boundary_distance_with(flow: &Flow, g: &MetricField, b1: f64, b2: f64) -> Result<Distance> {
    const SCAN: usize = 128;
    let target = wrap_angle(b2 - b1);
    if target == 0.0 || (2.0 * PI - target) < 1e-15 {
        return Ok(Distance { length: 0.0, alpha: 0.0, fallback: false });
    }
    let half = PI / 2.0;
    // D(α) = counterclockwise travel of the exit point, decreasing from 2π to 0
    let travel = |alpha: f64| -> Result<(f64, f64)> {
        let p = fan_phase_point_r(g, flow.radius, b1, alpha);
        let (tau, exit) = flow.exit(g, p)?;
        let d = wrap_angle(exit.x[1].atan2(exit.x[0]) - b1);
        Ok((d, tau))
    };
    let mut prev = (-half, 2.0 * PI);
    let mut bracket = None;
    for k in 0..=SCAN {
        let (a, d) = if k == SCAN {
            (half, 0.0)
        } else {
            let a = -half + (k as f64 + 0.5) * PI / SCAN as f64;
            (a, travel(a)?.0)
        };
        if prev.1 >= target && d <= target {
            bracket = Some((prev, (a, d)));
            break;
        }
        prev = (a, d);
    }
    let Some(((mut lo, mut flo), (mut hi, mut fhi))) = bracket else {
        return Ok(arc_fallback(g, flow.radius, b1, b2));
    };
    flo -= target;
    fhi -= target;
    let mut side = 0;
    for it in 0..200 {
        let mut a = (lo * fhi - hi * flo) / (fhi - flo);
        if !(a > lo && a < hi) || it % 10 == 9 {
            a = 0.5 * (lo + hi);
        }
        let (d, tau) = travel(a)?;
        let f = d - target;
        if f.abs() < 1e-10 || hi - lo < 1e-15 {
            return Ok(Distance { length: tau, alpha: a, fallback: false });
        }
        if f > 0.0 {
            lo = a;
            flo = f;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = a;
            fhi = f;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
    }
    Err(GeoError::NoBracket)
}

fn arc_fallback(g: &MetricField, radius: f64, b1: f64, b2: f64) -> Distance {
    let mut d = wrap_angle(b2 - b1);
    let mut start = b1;
    if d > PI {
        d = 2.0 * PI - d;
        start = b2;
    }
    let n = 64;
    let len: f64 = crate::util::simpson_weights(n, d)
        .iter()
        .enumerate()
        .map(|(k, w)| w * arc_element(g, radius, start + d * k as f64 / n as f64))
        .sum();
    Distance { length: len, alpha: f64::NAN, fallback: true }
}

/// Estimates |∂_β x|_g at β from q(s) = d(β, β+s)/s, s ∈ {0.1, 0.05, 0.025}, with
/// Richardson extrapolation eliminating the s and s² terms.
pub fn recover_boundary_metric(d: &dyn Fn(f64, f64) -> Result<f64>, beta: f64) -> Result<f64> {
    let s0 = 0.1;
    let q = |s: f64| -> Result<f64> {
        d(beta, beta + s).map(|v| v / s).map_err(|e| GeoError::OracleFailure(e.to_string()))
    };
    let (q1, q2, q3) = (q(s0)?, q(s0 / 2.0)?, q(s0 / 4.0)?);
    Ok((q1 - 6.0 * q2 + 8.0 * q3) / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn fan_frame_is_orthonormal() {
        let g = MetricField::sheared(0.1, 1.0);
        for k in 0..16 {
            let x = boundary_point(1.0, 0.4 * k as f64);
            let nu = inward_normal_at(&g, x);
            let t = unit_tangent_at(&g, x);
            let gm = g.g(x);
            assert!((nu.dot(&(gm * nu)) - 1.0).abs() < 1e-14);
            assert!(nu.dot(&(gm * t)).abs() < 1e-14);
            assert!(nu.dot(&x) < 0.0);
            let p = fan_phase_point(&g, 0.4 * k as f64, 0.3);
            let fc = fan_coordinate_of(&g, &p);
            assert!((fc.alpha - 0.3).abs() < 1e-13);
        }
    }

    #[test]
    fn fan_measure_euclidean() {
        let spec = FanSpec::new(64, 64);
        let w = spec.weights(&MetricField::euclidean());
        let total: f64 = w.iter().sum();
        // ∫cos α over the band is 2 cos δ_g
        let want = 2.0 * PI * 2.0 * spec.guard.cos();
        assert!((total - want).abs() < 1e-3 * want);
        assert!((total - 4.0 * PI).abs() < 0.01 * 4.0 * PI);
    }

    #[test]
    fn euclidean_scattering_closed_form() {
        let g = MetricField::euclidean();
        let s = scattering_relation(&g, FanCoordinate { beta: 0.0, alpha: PI / 4.0 }).unwrap();
        assert!((s.beta - PI / 2.0).abs() < 1e-10);
        assert!((s.alpha + PI / 4.0).abs() < 1e-10);
        assert!((s.tau - 2f64.sqrt()).abs() < 1e-10);
        let s = scattering_relation(&g, FanCoordinate { beta: 1.0, alpha: 0.0 }).unwrap();
        assert!((s.beta - (1.0 + PI)).abs() < 1e-10 && (s.tau - 2.0).abs() < 1e-10);
    }

    #[test]
    fn conformal_constant_scattering_matches_euclidean() {
        let e = MetricField::euclidean();
        let c = MetricField::conformal_constant(0.1);
        for k in 0..10 {
            let fc = FanCoordinate { beta: 0.6 * k as f64, alpha: -1.2 + 0.25 * k as f64 };
            let a = scattering_relation(&e, fc).unwrap();
            let b = scattering_relation(&c, fc).unwrap();
            assert!(crate::util::angle_diff(a.beta, b.beta).abs() < 1e-9);
            assert!((a.alpha - b.alpha).abs() < 1e-9);
            assert!((b.tau - a.tau * 0.1f64.exp()).abs() < 1e-9);
        }
    }

    #[test]
    fn scattering_involution() {
        let g = MetricField::conformal_parabolic(0.1);
        let spec = FanSpec::new(32, 32);
        for (_, _, b, a) in spec.coords() {
            let s = scattering_relation(&g, FanCoordinate { beta: b, alpha: a }).unwrap();
            let r = scattering_relation(&g, FanCoordinate { beta: s.beta, alpha: s.alpha }).unwrap();
            assert!(crate::util::angle_diff(r.beta, b).abs() < 1e-8);
            assert!((r.alpha - a).abs() < 1e-8);
        }
    }

    #[test]
    fn euclidean_distances() {
        let g = MetricField::euclidean();
        let d = boundary_distance(&g, 0.3, 0.3 + PI / 2.0).unwrap();
        assert!((d.length - 2f64.sqrt()).abs() < 1e-9);
        let d = boundary_distance(&g, 1.0, 1.0 + PI).unwrap();
        assert!((d.length - 2.0).abs() < 1e-9);
        let c = MetricField::conformal_constant(0.1);
        let d = boundary_distance(&c, 2.0, 4.5).unwrap();
        assert!((d.length - 0.1f64.exp() * 2.0 * (1.25f64).sin()).abs() < 1e-9);
        assert_eq!(boundary_distance(&g, 1.0, 1.0).unwrap().length, 0.0);
    }

    #[test]
    fn distance_symmetry_and_triangle() {
        let g = MetricField::conformal_parabolic(0.1);
        let flow = Flow::with_step(1e-2);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let (a, b, c) = (rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..2.0 * PI));
            let dab = boundary_distance_with(&flow, &g, a, b).unwrap().length;
            let dba = boundary_distance_with(&flow, &g, b, a).unwrap().length;
            let dbc = boundary_distance_with(&flow, &g, b, c).unwrap().length;
            let dac = boundary_distance_with(&flow, &g, a, c).unwrap().length;
            assert!((dab - dba).abs() < 1e-8);
            assert!(dac <= dab + dbc + 1e-8);
        }
    }

    #[test]
    fn boundary_metric_recovery() {
        for (g, want, tol) in [
            (MetricField::euclidean(), 1.0, 1e-6),
            (MetricField::conformal_constant(0.1), 0.1f64.exp(), 1e-3),
            (MetricField::conformal_parabolic(0.1), 1.0, 1e-3),
        ] {
            let d = |a: f64, b: f64| boundary_distance(&g, a, b).map(|d| d.length);
            let est = recover_boundary_metric(&d, 0.7).unwrap();
            assert!((est - want).abs() < tol, "{} {est}", g.label);
        }
    }

    #[test]
    fn fan_interp_reproduces_smooth_data() {
        let spec = FanSpec::new(64, 64);
        let f = |b: f64, a: f64| (2.0 * b).cos() * a.cos().powi(3);
        let w = FanGrid::from_fn(spec, f);
        let it = w.interpolator();
        for k in 0..100 {
            let b = 0.0613 * k as f64;
            let a = -1.5 + 0.03 * k as f64;
            let (v, clipped) = it.eval(b, a);
            assert!(!clipped);
            // half-cell extrapolation past the outermost nodes is less accurate
            let tol = if a.abs() > spec.alpha(spec.nalpha - 1) { 1e-4 } else { 1e-5 };
            assert!((v - f(b, a)).abs() < tol, "{b} {a} {}", v - f(b, a));
        }
        assert!(it.eval(0.0, 1.56).1);
    }
}
