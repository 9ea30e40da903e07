//! Geodesic flow: RK4 integration to the boundary, exit times, Jacobi fields and
//! the simplicity certificate.

use crate::error::{GeoError, Result};
use crate::grid::{DiskGrid, DiskGridFunction};
use crate::metric::{MetricField, Vec2};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const H_ODE: f64 = 1e-3;
pub const TAU_MAX: f64 = 100.0;
/// Glancing guard band half-width δ_g.
pub const GUARD: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhasePoint {
    pub x: Vec2,
    pub v: Vec2,
}

impl PhasePoint {
    pub fn new(x: Vec2, v: Vec2) -> Self {
        PhasePoint { x, v }
    }

    /// Rescales v to unit g-length.
    pub fn unit(g: &MetricField, x: Vec2, v: Vec2) -> Self {
        PhasePoint { x, v: v / g.norm(x, v) }
    }

    pub fn reversed(&self) -> Self {
        PhasePoint { x: self.x, v: -self.v }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Clone, Debug)]
pub struct GeodesicTrace {
    pub times: Vec<f64>,
    pub points: Vec<PhasePoint>,
    pub tau: f64,
    pub exit: PhasePoint,
}

/// Integration settings: step, disk radius (1 or the extended disk) and trapping timeout.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Flow {
    pub h: f64,
    pub radius: f64,
    pub tau_max: f64,
}

impl Default for Flow {
    fn default() -> Self {
        Flow { h: H_ODE, radius: 1.0, tau_max: TAU_MAX }
    }
}

#[inline]
fn rk4(g: &MetricField, p: &PhasePoint, h: f64) -> PhasePoint {
    let (x, v) = (p.x, p.v);
    let a1 = g.accel(x, v);
    let v2 = v + a1 * (0.5 * h);
    let a2 = g.accel(x + v * (0.5 * h), v2);
    let v3 = v + a2 * (0.5 * h);
    let a3 = g.accel(x + v2 * (0.5 * h), v3);
    let v4 = v + a3 * h;
    let a4 = g.accel(x + v3 * h, v4);
    PhasePoint {
        x: x + (v + v2 * 2.0 + v3 * 2.0 + v4) * (h / 6.0),
        v: v + (a1 + a2 * 2.0 + a3 * 2.0 + a4) * (h / 6.0),
    }
}

/// One RK4 step for geodesic plus a parallel-transported vector W.
fn rk4_transport(g: &MetricField, p: &PhasePoint, w: Vec2, h: f64) -> (PhasePoint, Vec2) {
    let tr = |x: Vec2, v: Vec2, w: Vec2| -> (Vec2, Vec2) {
        if g.is_flat() {
            return (Vec2::zeros(), Vec2::zeros());
        }
        let c = g.christoffel_raw(x);
        (-c.contract(v, v), -c.contract(v, w))
    };
    let (x, v) = (p.x, p.v);
    let (a1, b1) = tr(x, v, w);
    let (x2, v2, w2) = (x + v * (0.5 * h), v + a1 * (0.5 * h), w + b1 * (0.5 * h));
    let (a2, b2) = tr(x2, v2, w2);
    let (x3, v3, w3) = (x + v2 * (0.5 * h), v + a2 * (0.5 * h), w + b2 * (0.5 * h));
    let (a3, b3) = tr(x3, v3, w3);
    let (x4, v4, w4) = (x + v3 * h, v + a3 * h, w + b3 * h);
    let (a4, b4) = tr(x4, v4, w4);
    (
        PhasePoint {
            x: x + (v + v2 * 2.0 + v3 * 2.0 + v4) * (h / 6.0),
            v: v + (a1 + a2 * 2.0 + a3 * 2.0 + a4) * (h / 6.0),
        },
        w + (b1 + b2 * 2.0 + b3 * 2.0 + b4) * (h / 6.0),
    )
}

impl Flow {
    pub fn with_step(h: f64) -> Self {
        Flow { h, ..Default::default() }
    }

    pub fn extended(h: f64, radius: f64) -> Self {
        Flow { h, radius, tau_max: TAU_MAX }
    }

    #[inline]
    fn rho(&self, x: Vec2) -> f64 {
        self.radius * self.radius - x.norm_squared()
    }

    /// Integrates from p until the boundary circle is crossed, calling `visit(t, point)`
    /// at t = 0, after every full step, and at the refined exit. Returns (τ, exit phase).
    pub fn march(&self, g: &MetricField, p: PhasePoint, mut visit: impl FnMut(f64, &PhasePoint)) -> Result<(f64, PhasePoint)> {
        let rho0 = self.rho(p.x);
        let scale = self.radius * self.radius;
        let on_boundary = rho0.abs() < 1e-10 * scale;
        if rho0 < -1e-10 * scale {
            return Err(GeoError::DomainEscape { x: p.x[0], y: p.x[1] });
        }
        visit(0.0, &p);
        let inward_rate = -2.0 * p.x.dot(&p.v);
        if on_boundary && inward_rate <= 1e-14 {
            return Ok((0.0, p));
        }
        let h = self.h;
        let mut t = 0.0;
        let mut cur = p;
        let mut first = on_boundary;
        loop {
            if t > self.tau_max {
                return Err(GeoError::TrappedGeodesic { tau_max: self.tau_max });
            }
            let next = rk4(g, &cur, h);
            let rn = self.rho(next.x);
            if rn > 0.0 {
                t += h;
                cur = next;
                visit(t, &cur);
                first = false;
                continue;
            }
            // crossing in (0, h]: refine on F(s) = ρ(x(s)), divided by s for a boundary start
            let f_at = |s: f64| -> (f64, f64, PhasePoint) {
                let q = rk4(g, &cur, s);
                let r = self.rho(q.x);
                (if first { r / s } else { r }, r, q)
            };
            let (mut lo, mut flo) = (0.0, if first { inward_rate } else { self.rho(cur.x) });
            let (mut hi, mut fhi) = (h, if first { rn / h } else { rn });
            let mut exit = next;
            let mut s_exit = h;
            let mut side = 0i32;
            let mut ok = rn.abs() < 1e-12;
            let mut iter = 0;
            while !ok {
                iter += 1;
                if iter > 200 {
                    return Err(GeoError::StepUnderflow);
                }
                let mut s = (lo * fhi - hi * flo) / (fhi - flo);
                if !(s > lo && s < hi) || iter % 8 == 0 {
                    s = 0.5 * (lo + hi);
                }
                let (fs, r, q) = f_at(s);
                exit = q;
                s_exit = s;
                if r.abs() < 1e-12 {
                    ok = true;
                } else if fs > 0.0 {
                    lo = s;
                    flo = fs;
                    if side == -1 {
                        fhi *= 0.5;
                    }
                    side = -1;
                } else {
                    hi = s;
                    fhi = fs;
                    if side == 1 {
                        flo *= 0.5;
                    }
                    side = 1;
                }
                if hi - lo < 1e-16 * (1.0 + t) && !ok {
                    if r.abs() < 1e-9 {
                        ok = true;
                    } else {
                        return Err(GeoError::StepUnderflow);
                    }
                }
            }
            let tau = t + s_exit;
            visit(tau, &exit);
            return Ok((tau, exit));
        }
    }

    /// Exit time and exit phase point without storing samples. Flat metrics take the
    /// closed-form chord.
    pub fn exit(&self, g: &MetricField, p: PhasePoint) -> Result<(f64, PhasePoint)> {
        if g.is_flat() {
            return self.straight_exit(p);
        }
        self.march(g, p, |_, _| {})
    }

    fn straight_exit(&self, p: PhasePoint) -> Result<(f64, PhasePoint)> {
        let scale = self.radius * self.radius;
        let c = -self.rho(p.x);
        if c > 1e-10 * scale {
            return Err(GeoError::DomainEscape { x: p.x[0], y: p.x[1] });
        }
        let a = p.v.norm_squared();
        let b = 2.0 * p.x.dot(&p.v);
        if c.abs() < 1e-10 * scale && b >= -1e-14 {
            return Ok((0.0, p));
        }
        let disc = (b * b - 4.0 * a * c.min(0.0)).sqrt();
        let tau = if b <= 0.0 { (-b + disc) / (2.0 * a) } else { -2.0 * c.min(0.0) / (b + disc) };
        Ok((tau, PhasePoint::new(p.x + p.v * tau, p.v)))
    }

    /// Fills `times`/`points` with the trace samples from p (uniform steps plus the
    /// partial step to the exit). Flat metrics sample the closed-form chord.
    pub fn sample(&self, g: &MetricField, p: PhasePoint, times: &mut Vec<f64>, points: &mut Vec<PhasePoint>) -> Result<(f64, PhasePoint)> {
        times.clear();
        points.clear();
        if g.is_flat() {
            let (tau, exit) = self.straight_exit(p)?;
            let n = (tau / self.h).floor() as usize;
            for k in 0..=n {
                let t = k as f64 * self.h;
                if k > 0 && t >= tau {
                    break;
                }
                times.push(t);
                points.push(PhasePoint::new(p.x + p.v * t, p.v));
            }
            if tau > *times.last().unwrap() {
                times.push(tau);
                points.push(exit);
            }
            return Ok((tau, exit));
        }
        self.march(g, p, |t, q| {
            times.push(t);
            points.push(*q);
        })
    }

    /// ∫_0^τ f(γ(t), γ̇(t)) dt by Simpson-type weights on the trace samples.
    pub fn line_integral(&self, g: &MetricField, p: PhasePoint, f: impl Fn(&PhasePoint) -> f64) -> Result<(f64, f64, PhasePoint)> {
        let mut times = Vec::with_capacity(256);
        let mut points = Vec::with_capacity(256);
        let mut w = Vec::with_capacity(256);
        let (tau, exit) = self.sample(g, p, &mut times, &mut points)?;
        crate::util::trace_weights(&times, &mut w);
        let val = points.iter().zip(&w).map(|(q, w)| w * f(q)).sum();
        Ok((val, tau, exit))
    }

    pub fn integrate(&self, g: &MetricField, p: PhasePoint, dir: Direction) -> Result<GeodesicTrace> {
        let start = match dir {
            Direction::Forward => p,
            Direction::Backward => p.reversed(),
        };
        let mut times = Vec::new();
        let mut points = Vec::new();
        let (tau, exit) = self.march(g, start, |t, q| {
            times.push(t);
            points.push(*q);
        })?;
        let (points, exit) = match dir {
            Direction::Forward => (points, exit),
            Direction::Backward => (points.into_iter().map(|q| q.reversed()).collect(), exit.reversed()),
        };
        Ok(GeodesicTrace { times, points, tau, exit })
    }

    /// φ_t(p) for any real t (no boundary handling; the metric pad allows small overshoot).
    pub fn flow_for(&self, g: &MetricField, p: PhasePoint, t: f64) -> PhasePoint {
        let sgn = if t < 0.0 { -1.0 } else { 1.0 };
        let mut cur = if t < 0.0 { p.reversed() } else { p };
        let mut left = t.abs();
        while left > 0.0 {
            let s = left.min(self.h);
            cur = rk4(g, &cur, s);
            left -= s;
        }
        if sgn < 0.0 {
            cur.reversed()
        } else {
            cur
        }
    }

    /// ψ_t for X⊥: geodesic from (x, ξ⊥) with ξ parallel-transported; returns the transported ξ.
    pub fn perp_flow_for(&self, g: &MetricField, x: Vec2, xi: Vec2, xi_perp: Vec2, t: f64) -> PhasePoint {
        let mut p = PhasePoint::new(x, if t < 0.0 { -xi_perp } else { xi_perp });
        let mut w = xi;
        let mut left = t.abs();
        while left > 0.0 {
            let s = left.min(self.h);
            let (q, wn) = rk4_transport(g, &p, w, s);
            p = q;
            w = wn;
            left -= s;
        }
        PhasePoint::new(p.x, w)
    }
}

pub fn integrate_geodesic(g: &MetricField, p: PhasePoint, dir: Direction) -> Result<GeodesicTrace> {
    Flow::default().integrate(g, p, dir)
}

pub fn exit_time(g: &MetricField, p: PhasePoint) -> Result<f64> {
    Ok(Flow::default().exit(g, p)?.0)
}

/// τ̃(x,v) = τ(x,v) − τ(x,−v).
pub fn odd_exit_time(g: &MetricField, p: PhasePoint) -> Result<f64> {
    let f = Flow::default();
    Ok(f.exit(g, p)?.0 - f.exit(g, p.reversed())?.0)
}

/// Gauss curvature sampled on a polar grid (65×128 nodes by default).
pub fn curvature_grid(g: &MetricField, grid: DiskGrid) -> DiskGridFunction {
    DiskGridFunction::from_fn(grid, |x| g.gauss_curvature(x))
}

#[derive(Clone, Debug)]
pub struct JacobiSolution {
    pub times: Vec<f64>,
    pub y: Vec<f64>,
    pub tau: f64,
    pub conjugate: bool,
}

/// Solves ÿ + K(γ(t)) y = 0, y(0) = 0, ẏ(0) = 1 along the geodesic from p, with K
/// from `curv`.
pub fn jacobi_with(flow: &Flow, g: &MetricField, curv: &dyn Fn(Vec2) -> f64, p: PhasePoint) -> Result<JacobiSolution> {
    // integrate the geodesic and the Jacobi pair jointly: the geodesic samples come
    // from `march`, the Jacobi equation is advanced with RK4 using midpoint curvature
    let trace = flow.integrate(g, p, Direction::Forward)?;
    let n = trace.times.len();
    let mut y = Vec::with_capacity(n);
    let (mut yv, mut yd) = (0.0f64, 1.0f64);
    y.push(0.0);
    let mut conjugate = false;
    for k in 1..n {
        let h = trace.times[k] - trace.times[k - 1];
        let a = &trace.points[k - 1];
        let b = &trace.points[k];
        // cubic Hermite position at the step midpoint
        let mid = (a.x + b.x) * 0.5 + (a.v - b.v) * (h / 8.0);
        let (k0, km, k1) = (curv(a.x), curv(mid), curv(b.x));
        let f1 = (yd, -k0 * yv);
        let y2 = (yv + 0.5 * h * f1.0, yd + 0.5 * h * f1.1);
        let f2 = (y2.1, -km * y2.0);
        let y3 = (yv + 0.5 * h * f2.0, yd + 0.5 * h * f2.1);
        let f3 = (y3.1, -km * y3.0);
        let y4 = (yv + h * f3.0, yd + h * f3.1);
        let f4 = (y4.1, -k1 * y4.0);
        yv += h / 6.0 * (f1.0 + 2.0 * f2.0 + 2.0 * f3.0 + f4.0);
        yd += h / 6.0 * (f1.1 + 2.0 * f2.1 + 2.0 * f3.1 + f4.1);
        y.push(yv);
        if yv <= 0.0 || yv.abs() < 1e-10 {
            conjugate = true;
        }
    }
    Ok(JacobiSolution { times: trace.times, y, tau: trace.tau, conjugate })
}

pub fn jacobi_scalar(g: &MetricField, p: PhasePoint) -> Result<JacobiSolution> {
    let k = curvature_grid(g, DiskGrid::new(64, 128));
    jacobi_with(&Flow::default(), g, &|x| k.eval(x), p)
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SimplicityReport {
    pub convex: bool,
    pub nontrapping: bool,
    pub no_conjugate: bool,
    pub tau_max_observed: f64,
    pub min_second_fundamental_form: f64,
    pub conjugate_count: usize,
    pub trapped_count: usize,
    pub fan_nbeta: usize,
    pub fan_nalpha: usize,
}

impl SimplicityReport {
    pub fn simple(&self) -> bool {
        self.convex && self.nontrapping && self.no_conjugate
    }
}

/// Second fundamental form II(T,T) = ⟨∇_T T, ν⟩_g of the circle |x| = R at angle β,
/// T the g-unit tangent and ν the g-unit inward normal.
pub fn second_fundamental_form(g: &MetricField, radius: f64, beta: f64) -> f64 {
    let (s, c) = beta.sin_cos();
    let x = Vec2::new(radius * c, radius * s);
    let cp = Vec2::new(-radius * s, radius * c);
    let cpp = -x;
    let acc = cpp + g.christoffel_raw(x).contract(cp, cp);
    let gm = g.g(x);
    let nu = crate::boundary::inward_normal_at(g, x);
    acc.dot(&(gm * nu)) / cp.dot(&(gm * cp))
}

/// Fan of boundary-inward directions used by the certifier: Nβ angles and Nα + 1
/// incidence angles spanning the guard band inclusively (so α = 0 is sampled).
pub fn certify_fan(nbeta: usize, nalpha: usize, guard: f64) -> Vec<(f64, f64)> {
    let a = PI / 2.0 - guard;
    let mut out = Vec::with_capacity(nbeta * (nalpha + 1));
    for i in 0..nbeta {
        let beta = 2.0 * PI * i as f64 / nbeta as f64;
        for j in 0..=nalpha {
            out.push((beta, -a + 2.0 * a * j as f64 / nalpha as f64));
        }
    }
    out
}

pub fn certify_simple(g: &MetricField) -> SimplicityReport {
    certify_simple_with(g, &Flow::default(), 64, 64)
}

pub fn certify_simple_with(g: &MetricField, flow: &Flow, nbeta: usize, nalpha: usize) -> SimplicityReport {
    let mut min_ii = f64::INFINITY;
    for i in 0..128 {
        let beta = 2.0 * PI * i as f64 / 128.0;
        min_ii = min_ii.min(second_fundamental_form(g, flow.radius, beta));
    }
    let kgrid = curvature_grid(g, DiskGrid::with_radius(64, 128, flow.radius));
    let curv = |x: Vec2| kgrid.eval(x);
    let mut tau_max: f64 = 0.0;
    let mut conj = 0;
    let mut trapped = 0;
    for (beta, alpha) in certify_fan(nbeta, nalpha, GUARD) {
        let p = crate::boundary::fan_phase_point_r(g, flow.radius, beta, alpha);
        match jacobi_with(flow, g, &curv, p) {
            Ok(sol) => {
                tau_max = tau_max.max(sol.tau);
                if sol.conjugate {
                    conj += 1;
                }
            }
            Err(_) => trapped += 1,
        }
    }
    SimplicityReport {
        convex: min_ii > 0.0,
        nontrapping: trapped == 0,
        no_conjugate: conj == 0,
        tau_max_observed: tau_max,
        min_second_fundamental_form: min_ii,
        conjugate_count: conj,
        trapped_count: trapped,
        fan_nbeta: nbeta,
        fan_nalpha: nalpha + 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_interior(g: &MetricField, rng: &mut ChaCha8Rng) -> PhasePoint {
        let r = rng.gen_range(0.0..0.98f64).sqrt();
        let t = rng.gen_range(0.0..2.0 * PI);
        let a = rng.gen_range(0.0..2.0 * PI);
        PhasePoint::unit(g, Vec2::new(r * t.cos(), r * t.sin()), Vec2::new(a.cos(), a.sin()))
    }

    #[test]
    fn euclidean_exit_closed_form() {
        let g = MetricField::euclidean();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut worst: f64 = 0.0;
        for _ in 0..2000 {
            let p = random_interior(&g, &mut rng);
            let xv = p.x.dot(&p.v);
            let want = -xv + (xv * xv + 1.0 - p.x.norm_squared()).sqrt();
            let tau = integrate_geodesic(&g, p, Direction::Forward).unwrap().tau;
            worst = worst.max((tau - want).abs());
            assert!((exit_time(&g, p).unwrap() - want).abs() < 1e-12);
        }
        assert!(worst < 1e-9, "{worst}");
        let t = integrate_geodesic(&g, PhasePoint::new(Vec2::zeros(), Vec2::new(1.0, 0.0)), Direction::Forward).unwrap();
        assert!((t.tau - 1.0).abs() < 1e-12);
        assert!((t.exit.x - Vec2::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn conformal_constant_scaling() {
        let c = 0.1;
        let g = MetricField::conformal_constant(c);
        let p = PhasePoint::new(Vec2::zeros(), Vec2::new((-c).exp(), 0.0));
        assert!((exit_time(&g, p).unwrap() - c.exp()).abs() < 1e-10);
    }

    #[test]
    fn outgoing_boundary_start_is_degenerate() {
        let g = MetricField::euclidean();
        let p = PhasePoint::new(Vec2::new(1.0, 0.0), Vec2::new(0.6, 0.8));
        let t = integrate_geodesic(&g, p, Direction::Forward).unwrap();
        assert_eq!(t.tau, 0.0);
        assert_eq!(t.times.len(), 1);
    }

    #[test]
    fn glancing_exit_time_vanishes() {
        let g = MetricField::euclidean();
        let mut last = f64::INFINITY;
        for k in 1..8 {
            let alpha = PI / 2.0 - 10f64.powi(-k);
            let p = crate::boundary::fan_phase_point(&g, 0.3, alpha);
            let tau = exit_time(&g, p).unwrap();
            assert!((tau - 2.0 * alpha.cos()).abs() < 1e-9);
            assert!(tau < last);
            last = tau;
        }
    }

    #[test]
    fn unit_speed_and_reversibility() {
        let metrics = [
            MetricField::euclidean(),
            MetricField::conformal_constant(0.1),
            MetricField::conformal_parabolic(0.1),
            MetricField::sheared(0.1, 1.0),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for g in &metrics {
            for _ in 0..20 {
                let p = random_interior(g, &mut rng);
                let tr = integrate_geodesic(g, p, Direction::Forward).unwrap();
                for q in &tr.points {
                    assert!((g.norm(q.x, q.v) - 1.0).abs() < 1e-7, "{}", g.label);
                    assert!(q.x.norm() <= 1.0 + 1e-9);
                }
                assert!((tr.exit.x.norm() - 1.0).abs() < 1e-10);
                let back = Flow::default().flow_for(g, tr.exit, -tr.tau);
                assert!((back.x - p.x).norm() < 1e-7, "{}", g.label);
            }
        }
    }

    #[test]
    fn fourth_order_convergence() {
        let g = MetricField::conformal_parabolic(0.5);
        let p = crate::boundary::fan_phase_point(&g, 0.4, 0.6);
        let exit = |h: f64| Flow::with_step(h).exit(&g, p).unwrap().1.x;
        let reference = exit(0.1 / 4.0 / 4.0);
        let e1 = (exit(0.1) - reference).norm();
        let e2 = (exit(0.05) - reference).norm();
        assert!(e1 / e2 >= 8.0, "{e1} {e2}");
    }

    #[test]
    fn odd_exit_time_is_odd() {
        let g = MetricField::conformal_parabolic(0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let p = random_interior(&g, &mut rng);
            let a = odd_exit_time(&g, p).unwrap();
            let b = odd_exit_time(&g, p.reversed()).unwrap();
            assert!((a + b).abs() < 1e-9);
            let t = exit_time(&g, p).unwrap();
            let tr = exit_time(&g, p.reversed()).unwrap();
            assert!((a + tr - t).abs() < 1e-12);
        }
    }

    #[test]
    fn boundary_inward_odd_exit_equals_exit() {
        let g = MetricField::euclidean();
        let p = crate::boundary::fan_phase_point(&g, 0.0, PI / 4.0);
        assert!((odd_exit_time(&g, p).unwrap() - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn jacobi_euclidean_is_linear() {
        let g = MetricField::euclidean();
        let p = crate::boundary::fan_phase_point(&g, 1.0, 0.2);
        let sol = jacobi_scalar(&g, p).unwrap();
        assert!(!sol.conjugate);
        for (t, y) in sol.times.iter().zip(&sol.y) {
            assert!((t - y).abs() < 1e-12);
        }
    }

    #[test]
    fn second_fundamental_form_euclidean() {
        let g = MetricField::euclidean();
        for k in 0..8 {
            assert!((second_fundamental_form(&g, 1.0, k as f64) - 1.0).abs() < 1e-12);
        }
        // conformal e^{2λ}: II = e^{−λ}(1 + ∂_rλ) on the unit circle
        let g = MetricField::conformal_parabolic(0.1);
        assert!((second_fundamental_form(&g, 1.0, 0.3) - 0.8).abs() < 1e-8);
    }

    #[test]
    fn certify_euclidean() {
        let rep = certify_simple_with(&MetricField::euclidean(), &Flow::with_step(1e-2), 16, 16);
        assert!(rep.simple());
        assert!((rep.tau_max_observed - 2.0).abs() < 1e-6);
    }
}
