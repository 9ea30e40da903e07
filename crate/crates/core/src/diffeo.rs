//! Disk diffeomorphisms, pullback metrics and the boundary normal gauge.

use crate::error::{GeoError, Result};
use crate::metric::{fd_deriv, inv2, Mat2, MetricExpr, MetricField, MetricKind, Vec2};
use crate::util::{bump, smooth_step};
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

const H_JAC: f64 = 1e-6;

pub trait DiffeoMap: Send + Sync {
    fn forward(&self, x: Vec2) -> Vec2;
    fn jacobian(&self, x: Vec2) -> Option<Mat2> {
        let _ = x;
        None
    }
    /// [∂₁J, ∂₂J] if available analytically.
    fn hessian(&self, _x: Vec2) -> Option<[Mat2; 2]> {
        None
    }
    fn inverse(&self, _y: Vec2) -> Option<Vec2> {
        None
    }
}

#[derive(Clone)]
pub struct DiskDiffeo {
    pub label: String,
    pub boundary_fixing: bool,
    map: Arc<dyn DiffeoMap>,
}

impl fmt::Debug for DiskDiffeo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DiskDiffeo({})", self.label)
    }
}

impl DiskDiffeo {
    pub fn new(label: impl Into<String>, boundary_fixing: bool, map: Arc<dyn DiffeoMap>) -> Self {
        DiskDiffeo { label: label.into(), boundary_fixing, map }
    }

    pub fn identity() -> Self {
        Self::new("identity", true, Arc::new(Linear(Mat2::identity())))
    }

    pub fn rotation(theta0: f64) -> Self {
        let (s, c) = theta0.sin_cos();
        Self::new(format!("rotation {theta0}"), false, Arc::new(Linear(Mat2::new(c, -s, s, c))))
    }

    /// x ↦ x + amp·b(|x|)·x/|x| with b a bump of height 1 supported in (r1, r2).
    pub fn radial_bump(amp: f64, r1: f64, r2: f64) -> Self {
        Self::new(format!("radial amp={amp} support=({r1},{r2})"), true, Arc::new(RadialBump { amp, r1, r2 }))
    }

    /// Polar twist θ ↦ θ + amp·(r−1)·χ(r) with χ = 1 near the boundary and 0 for r < 1 − width.
    pub fn twist(amp: f64, width: f64) -> Self {
        Self::new(format!("twist amp={amp} width={width}"), true, Arc::new(Twist { amp, width }))
    }

    /// self ∘ inner.
    pub fn compose(&self, inner: &DiskDiffeo) -> Self {
        Self::new(
            format!("{} ∘ {}", self.label, inner.label),
            self.boundary_fixing && inner.boundary_fixing,
            Arc::new(Composed { outer: self.clone(), inner: inner.clone() }),
        )
    }

    pub fn forward(&self, x: Vec2) -> Vec2 {
        self.map.forward(x)
    }

    pub fn jacobian(&self, x: Vec2) -> Mat2 {
        if let Some(j) = self.map.jacobian(x) {
            return j;
        }
        let e1 = Vec2::new(H_JAC, 0.0);
        let e2 = Vec2::new(0.0, H_JAC);
        let c1 = (self.map.forward(x + e1) - self.map.forward(x - e1)) / (2.0 * H_JAC);
        let c2 = (self.map.forward(x + e2) - self.map.forward(x - e2)) / (2.0 * H_JAC);
        Mat2::from_columns(&[c1, c2])
    }

    pub fn has_analytic_hessian(&self) -> bool {
        self.map.hessian(Vec2::zeros()).is_some()
    }

    pub fn hessian(&self, x: Vec2) -> [Mat2; 2] {
        if let Some(h) = self.map.hessian(x) {
            return h;
        }
        // fourth-order differences of the Jacobian
        let a = fd_deriv(|y| self.jacobian(y), x, 2e-4);
        let b = fd_deriv(|y| self.jacobian(y), x, 1e-4);
        [(b[0] * 4.0 - a[0]) / 3.0, (b[1] * 4.0 - a[1]) / 3.0]
    }

    /// Inverse map, analytic if supplied, else Newton iteration.
    pub fn inverse(&self, y: Vec2) -> Vec2 {
        if let Some(x) = self.map.inverse(y) {
            return x;
        }
        let mut x = y;
        for _ in 0..50 {
            let r = self.forward(x) - y;
            if r.norm() < 1e-14 {
                break;
            }
            let j = self.jacobian(x);
            x -= inv2(&j) * r;
        }
        x
    }

    /// Checks the boundary-fixing flag (1e−10 on 256 boundary points) and det J > 0
    /// on a polar verification grid. Returns the minimum determinant.
    pub fn verify(&self) -> Result<f64> {
        if self.boundary_fixing {
            for i in 0..256 {
                let t = 2.0 * PI * i as f64 / 256.0;
                let x = Vec2::new(t.cos(), t.sin());
                let d = (self.forward(x) - x).norm();
                if d > 1e-10 {
                    return Err(GeoError::InvalidSpec(format!("{} moves boundary by {d:.3e}", self.label)));
                }
            }
        }
        let mut min_det = f64::INFINITY;
        for i in 0..=32 {
            let r = i as f64 / 32.0;
            for j in 0..64 {
                let t = 2.0 * PI * j as f64 / 64.0;
                let d = self.jacobian(Vec2::new(r * t.cos(), r * t.sin())).determinant();
                min_det = min_det.min(d);
            }
        }
        if !(min_det > 0.0) {
            return Err(GeoError::GaugeNotInjective { det: min_det });
        }
        Ok(min_det)
    }
}

struct Linear(Mat2);

impl DiffeoMap for Linear {
    fn forward(&self, x: Vec2) -> Vec2 {
        self.0 * x
    }
    fn jacobian(&self, _x: Vec2) -> Option<Mat2> {
        Some(self.0)
    }
    fn hessian(&self, _x: Vec2) -> Option<[Mat2; 2]> {
        Some([Mat2::zeros(), Mat2::zeros()])
    }
    fn inverse(&self, y: Vec2) -> Option<Vec2> {
        Some(inv2(&self.0) * y)
    }
}

struct RadialBump {
    amp: f64,
    r1: f64,
    r2: f64,
}

impl RadialBump {
    /// m(r) = 1 + amp·b(r)/r and its first two derivatives.
    fn m(&self, r: f64) -> (f64, f64, f64) {
        let (b, db, d2b) = bump(r, self.r1, self.r2);
        if b == 0.0 {
            return (1.0, 0.0, 0.0);
        }
        let a = self.amp;
        (
            1.0 + a * b / r,
            a * (db / r - b / (r * r)),
            a * (d2b / r - 2.0 * db / (r * r) + 2.0 * b / (r * r * r)),
        )
    }
}

impl DiffeoMap for RadialBump {
    fn forward(&self, x: Vec2) -> Vec2 {
        let r = x.norm();
        x * self.m(r).0
    }
    fn jacobian(&self, x: Vec2) -> Option<Mat2> {
        let r = x.norm();
        let (m, dm, _) = self.m(r);
        if dm == 0.0 {
            return Some(Mat2::identity() * m);
        }
        Some(Mat2::identity() * m + x * x.transpose() * (dm / r))
    }
    fn hessian(&self, x: Vec2) -> Option<[Mat2; 2]> {
        let r = x.norm();
        let (_, dm, d2m) = self.m(r);
        if dm == 0.0 && d2m == 0.0 {
            return Some([Mat2::zeros(), Mat2::zeros()]);
        }
        let c = d2m / r - dm / (r * r);
        let mut out = [Mat2::zeros(), Mat2::zeros()];
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    let dij = if i == j { 1.0 } else { 0.0 };
                    let dik = if i == k { 1.0 } else { 0.0 };
                    let djk = if j == k { 1.0 } else { 0.0 };
                    out[k][(i, j)] = dm * x[k] / r * dij
                        + c * (x[k] / r) * x[i] * x[j]
                        + dm / r * (dik * x[j] + x[i] * djk);
                }
            }
        }
        Some(out)
    }
    fn inverse(&self, y: Vec2) -> Option<Vec2> {
        let rho = y.norm();
        if rho == 0.0 {
            return Some(y);
        }
        let r = crate::util::newton_scalar(rho, rho, |r| {
            let (b, db, _) = bump(r, self.r1, self.r2);
            (r + self.amp * b, 1.0 + self.amp * db)
        });
        Some(y * (r / rho))
    }
}

struct Twist {
    amp: f64,
    width: f64,
}

impl Twist {
    fn omega(&self, r: f64) -> (f64, f64) {
        let (chi, dchi) = smooth_step((r - (1.0 - self.width)) / (0.8 * self.width));
        let dchi = dchi / (0.8 * self.width);
        (self.amp * (r - 1.0) * chi, self.amp * (chi + (r - 1.0) * dchi))
    }
}

impl DiffeoMap for Twist {
    fn forward(&self, x: Vec2) -> Vec2 {
        let (w, _) = self.omega(x.norm());
        let (s, c) = w.sin_cos();
        Vec2::new(c * x[0] - s * x[1], s * x[0] + c * x[1])
    }
    fn jacobian(&self, x: Vec2) -> Option<Mat2> {
        let r = x.norm();
        let (w, dw) = self.omega(r);
        let (s, c) = w.sin_cos();
        let rot = Mat2::new(c, -s, s, c);
        if dw == 0.0 {
            return Some(rot);
        }
        let drot = Mat2::new(-s, -c, c, -s);
        Some(rot + drot * x * x.transpose() * (dw / r))
    }
    fn inverse(&self, y: Vec2) -> Option<Vec2> {
        let (w, _) = self.omega(y.norm());
        let (s, c) = (-w).sin_cos();
        Some(Vec2::new(c * y[0] - s * y[1], s * y[0] + c * y[1]))
    }
}

struct Composed {
    outer: DiskDiffeo,
    inner: DiskDiffeo,
}

impl DiffeoMap for Composed {
    fn forward(&self, x: Vec2) -> Vec2 {
        self.outer.forward(self.inner.forward(x))
    }
    fn jacobian(&self, x: Vec2) -> Option<Mat2> {
        let y = self.inner.forward(x);
        Some(self.outer.jacobian(y) * self.inner.jacobian(x))
    }
    fn inverse(&self, y: Vec2) -> Option<Vec2> {
        Some(self.inner.inverse(self.outer.inverse(y)))
    }
}

/// Ψ*g = DΨᵀ g(Ψ) DΨ. Derivatives are analytic when Ψ supplies its second
/// derivatives, otherwise central differences of the composite.
pub fn pullback(psi: &DiskDiffeo, g: &MetricField) -> MetricField {
    MetricField::new(
        MetricKind::Pullback,
        format!("pullback of {} under {}", g.label, psi.label),
        g.regularity.saturating_sub(1).max(2),
        Arc::new(PullbackExpr { psi: psi.clone(), base: g.clone(), analytic: psi.has_analytic_hessian() }),
    )
}

struct PullbackExpr {
    psi: DiskDiffeo,
    base: MetricField,
    analytic: bool,
}

impl MetricExpr for PullbackExpr {
    fn eval(&self, x: Vec2) -> Mat2 {
        let y = self.psi.forward(x);
        let j = self.psi.jacobian(x);
        j.transpose() * self.base.g(y) * j
    }
    fn deriv(&self, x: Vec2) -> Option<[Mat2; 2]> {
        if !self.analytic {
            return None;
        }
        let y = self.psi.forward(x);
        let j = self.psi.jacobian(x);
        let h = self.psi.hessian(x);
        let g = self.base.g(y);
        let dg = self.base.deriv(y);
        let mut out = [Mat2::zeros(); 2];
        for k in 0..2 {
            let dgk = dg[0] * j[(0, k)] + dg[1] * j[(1, k)];
            out[k] = h[k].transpose() * g * j + j.transpose() * g * h[k] + j.transpose() * dgk * j;
        }
        Some(out)
    }
    fn flat(&self) -> bool {
        false
    }
}

/// Trigonometric interpolant of a smooth periodic function from M samples.
#[derive(Clone, Debug)]
pub struct TrigInterp {
    a0: f64,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl TrigInterp {
    pub fn from_samples(vals: &[f64]) -> Self {
        let m = vals.len();
        let kmax = (m - 1) / 2;
        let mut a = vec![0.0; kmax + 1];
        let mut b = vec![0.0; kmax + 1];
        let a0 = vals.iter().sum::<f64>() / m as f64;
        for k in 1..=kmax {
            let mut sa = 0.0;
            let mut sb = 0.0;
            for (i, v) in vals.iter().enumerate() {
                let t = 2.0 * PI * (k * i) as f64 / m as f64;
                sa += v * t.cos();
                sb += v * t.sin();
            }
            a[k] = 2.0 * sa / m as f64;
            b[k] = 2.0 * sb / m as f64;
        }
        TrigInterp { a0, a, b }
    }

    /// (value, derivative) at θ via the cosine/sine recurrence.
    pub fn eval(&self, theta: f64) -> (f64, f64) {
        let (s1, c1) = theta.sin_cos();
        let (mut c, mut s) = (1.0, 0.0);
        let mut v = self.a0;
        let mut d = 0.0;
        for k in 1..self.a.len() {
            let cn = c * c1 - s * s1;
            let sn = s * c1 + c * s1;
            c = cn;
            s = sn;
            let kf = k as f64;
            v += self.a[k] * c + self.b[k] * s;
            d += kf * (self.b[k] * c - self.a[k] * s);
        }
        (v, d)
    }
}

/// φ(θ,r) = (θ + (r−1)a₁χ, r + (r−1)(a₂−1)χ) in polar coordinates.
struct Gauge {
    a1: TrigInterp,
    a2: TrigInterp,
    eps: f64,
}

impl Gauge {
    fn chi(&self, r: f64) -> (f64, f64) {
        let w = 0.8 * self.eps;
        let (c, d) = smooth_step((r - (1.0 - self.eps)) / w);
        (c, d / w)
    }

    /// Polar image (θ', r') and its polar Jacobian ∂(θ',r')/∂(θ,r).
    fn polar(&self, theta: f64, r: f64) -> (f64, f64, Mat2) {
        let (chi, dchi) = self.chi(r);
        if chi == 0.0 && dchi == 0.0 {
            return (theta, r, Mat2::identity());
        }
        let (a1, da1) = self.a1.eval(theta);
        let (a2, da2) = self.a2.eval(theta);
        let s = r - 1.0;
        let tp = theta + s * a1 * chi;
        let rp = r + s * (a2 - 1.0) * chi;
        let dchi_s = chi + s * dchi;
        let jac = Mat2::new(1.0 + s * da1 * chi, a1 * dchi_s, s * da2 * chi, 1.0 + (a2 - 1.0) * dchi_s);
        (tp, rp, jac)
    }
}

impl DiffeoMap for Gauge {
    fn forward(&self, x: Vec2) -> Vec2 {
        let r = x.norm();
        if r < 1.0 - self.eps {
            return x;
        }
        let theta = x[1].atan2(x[0]);
        let (tp, rp, _) = self.polar(theta, r);
        Vec2::new(rp * tp.cos(), rp * tp.sin())
    }
    fn jacobian(&self, x: Vec2) -> Option<Mat2> {
        let r = x.norm();
        if r < 1.0 - self.eps {
            return Some(Mat2::identity());
        }
        let theta = x[1].atan2(x[0]);
        let (tp, rp, jp) = self.polar(theta, r);
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = tp.sin_cos();
        // columns ∂/∂θ, ∂/∂r of the polar parametrization
        let dp_out = Mat2::new(-rp * sp, cp, rp * cp, sp);
        let dp_in = Mat2::new(-r * st, ct, r * ct, st);
        Some(dp_out * jp * inv2(&dp_in))
    }
}

/// Gauge coefficients at the boundary: a₂ = √(g_θθ/det), a₁ = −(g_θr/g_θθ)·a₂,
/// so that ∂_r ↦ a₁∂_θ + a₂∂_r is the g-unit inward-pointing normal at r = 1.
fn gauge_coefficients(g: &MetricField, theta: f64, sign: f64) -> (f64, f64) {
    let (gtt, gtr, grr) = g.polar_components(theta, 1.0);
    let det = gtt * grr - gtr * gtr;
    let a2 = (gtt / det).sqrt();
    (sign * -(gtr / gtt) * a2, a2)
}

/// Max over 64 boundary samples of |g'_θr| + |g'_rr − 1| for the pulled-back metric.
pub fn gauge_residual(g: &MetricField, phi: &DiskDiffeo) -> f64 {
    let pb = pullback(phi, g);
    let mut worst: f64 = 0.0;
    for i in 0..64 {
        let t = 2.0 * PI * i as f64 / 64.0;
        let (_, gtr, grr) = pb.polar_components(t, 1.0);
        worst = worst.max(gtr.abs()).max((grr - 1.0).abs());
    }
    worst
}

/// Boundary-fixing diffeomorphism φ with φ*g in boundary normal form at r = 1:
/// g'_θr(θ,1) = 0 and g'_rr(θ,1) = 1.
pub fn boundary_normal_gauge(g: &MetricField) -> Result<DiskDiffeo> {
    const SAMPLES: usize = 64;
    const FLOOR: f64 = 0.05;
    const TOL: f64 = 1e-6;
    let mut eps = 0.25;
    let mut last_err = GeoError::GaugeNotInjective { det: 0.0 };
    while eps >= 1.0 / 64.0 {
        for &sign in &[1.0, -1.0] {
            let mut a1 = Vec::with_capacity(SAMPLES);
            let mut a2 = Vec::with_capacity(SAMPLES);
            for i in 0..SAMPLES {
                let t = 2.0 * PI * i as f64 / SAMPLES as f64;
                let (p, q) = gauge_coefficients(g, t, sign);
                a1.push(p);
                a2.push(q);
            }
            let map = Gauge { a1: TrigInterp::from_samples(&a1), a2: TrigInterp::from_samples(&a2), eps };
            let phi = DiskDiffeo::new(format!("boundary normal gauge eps={eps}"), true, Arc::new(map));
            // injectivity on the annulus
            let mut min_det = f64::INFINITY;
            for i in 0..=16 {
                let r = 1.0 - eps + eps * i as f64 / 16.0;
                for j in 0..64 {
                    let t = 2.0 * PI * j as f64 / 64.0;
                    let d = phi.jacobian(Vec2::new(r * t.cos(), r * t.sin())).determinant();
                    min_det = min_det.min(d);
                }
            }
            if !(min_det > FLOOR) {
                last_err = GeoError::GaugeNotInjective { det: min_det };
                continue;
            }
            let res = gauge_residual(g, &phi);
            if res < TOL {
                return Ok(phi);
            }
            last_err = GeoError::GaugeCheck { residual: res };
        }
        eps *= 0.5;
    }
    Err(last_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::MetricField;

    fn sample_points() -> Vec<Vec2> {
        let mut pts = Vec::new();
        for i in 0..32 {
            let r = (i as f64 + 0.5) / 32.0;
            for j in 0..64 {
                let t = 2.0 * PI * j as f64 / 64.0;
                pts.push(Vec2::new(r * t.cos(), r * t.sin()));
            }
        }
        pts
    }

    #[test]
    fn identity_pullback_is_identity() {
        let g = MetricField::sheared(0.1, 1.0);
        let p = pullback(&DiskDiffeo::identity(), &g);
        for x in sample_points() {
            assert!((p.g(x) - g.g(x)).norm() < 1e-15);
        }
    }

    #[test]
    fn rotation_pullback_of_euclidean() {
        let p = pullback(&DiskDiffeo::rotation(0.7), &MetricField::euclidean());
        for x in sample_points() {
            assert!((p.g(x) - Mat2::identity()).norm() < 1e-14);
        }
    }

    #[test]
    fn diffeos_verify() {
        for d in [DiskDiffeo::radial_bump(0.05, 0.2, 0.8), DiskDiffeo::twist(0.3, 0.4), DiskDiffeo::identity()] {
            assert!(d.verify().unwrap() > 0.0, "{}", d.label);
            for x in sample_points().iter().step_by(37) {
                assert!((d.inverse(d.forward(*x)) - x).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn radial_bump_analytic_derivatives() {
        let d = DiskDiffeo::radial_bump(0.05, 0.2, 0.8);
        for x in sample_points().iter().step_by(11) {
            let j = d.jacobian(*x);
            let e = 1e-6;
            let c1 = (d.forward(x + Vec2::new(e, 0.0)) - d.forward(x - Vec2::new(e, 0.0))) / (2.0 * e);
            let c2 = (d.forward(x + Vec2::new(0.0, e)) - d.forward(x - Vec2::new(0.0, e))) / (2.0 * e);
            assert!((j.column(0) - c1).norm() < 1e-8 && (j.column(1) - c2).norm() < 1e-8);
            let h = d.hessian(*x);
            let fd = fd_deriv(|y| d.jacobian(y), *x, 1e-5);
            assert!((h[0] - fd[0]).norm() < 1e-6 && (h[1] - fd[1]).norm() < 1e-6);
        }
    }

    #[test]
    fn analytic_and_fd_pullback_derivatives_agree() {
        let g = MetricField::conformal_parabolic(0.2);
        let d = DiskDiffeo::radial_bump(0.05, 0.2, 0.8);
        let a = pullback(&d, &g);
        let struct_fd = MetricField::custom("fd", {
            let d = d.clone();
            let g = g.clone();
            move |x| {
                let j = d.jacobian(x);
                j.transpose() * g.g(d.forward(x)) * j
            }
        });
        for x in sample_points().iter().step_by(17) {
            let p = a.deriv(*x);
            let q1 = fd_deriv(|y| struct_fd.g(y), *x, 2e-4);
            let q2 = fd_deriv(|y| struct_fd.g(y), *x, 1e-4);
            let q = [(q2[0] * 4.0 - q1[0]) / 3.0, (q2[1] * 4.0 - q1[1]) / 3.0];
            assert!((p[0] - q[0]).norm() < 1e-6 && (p[1] - q[1]).norm() < 1e-6);
        }
    }

    #[test]
    fn functoriality() {
        let g = MetricField::conformal_parabolic(0.3);
        let p1 = DiskDiffeo::radial_bump(0.05, 0.2, 0.8);
        let p2 = DiskDiffeo::twist(0.2, 0.5);
        let a = pullback(&p2.compose(&p1), &g);
        let b = pullback(&p1, &pullback(&p2, &g));
        for x in sample_points() {
            assert!((a.g(x) - b.g(x)).norm() < 1e-8);
        }
    }

    #[test]
    fn christoffel_transformation_law() {
        use rand::{Rng, SeedableRng};
        let g = MetricField::sheared(0.1, 1.0);
        let psi = DiskDiffeo::twist(0.3, 0.5).compose(&DiskDiffeo::radial_bump(0.05, 0.2, 0.8));
        let pb = pullback(&psi, &g);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let r = rng.gen_range(0.0..0.95f64).sqrt();
            let t = rng.gen_range(0.0..2.0 * PI);
            let x = Vec2::new(r * t.cos(), r * t.sin());
            let y = psi.forward(x);
            let j = psi.jacobian(x);
            let ji = inv2(&j);
            let h = psi.hessian(x);
            let gb = g.christoffel_raw(y);
            let gp = pb.christoffel_raw(x);
            for i in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        let mut s = 0.0;
                        for m in 0..2 {
                            let mut inner = h[b][(m, a)];
                            for p in 0..2 {
                                for q in 0..2 {
                                    inner += gb.gamma[m][p][q] * j[(p, a)] * j[(q, b)];
                                }
                            }
                            s += ji[(i, m)] * inner;
                        }
                        assert!((gp.gamma[i][a][b] - s).abs() < 1e-5, "Γ^{i}_{a}{b} at {x:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn gauge_builtins() {
        let e = boundary_normal_gauge(&MetricField::euclidean()).unwrap();
        for x in sample_points().iter().step_by(13) {
            assert!((e.forward(*x) - x).norm() < 1e-14);
        }
        let metrics = [
            MetricField::euclidean(),
            MetricField::conformal_constant(0.1),
            MetricField::conformal_parabolic(0.1),
            MetricField::sheared(0.1, 1.0),
            pullback(&DiskDiffeo::twist(0.2, 0.4), &MetricField::euclidean()),
        ];
        for g in &metrics {
            let phi = boundary_normal_gauge(g).unwrap();
            assert!(gauge_residual(g, &phi) < 1e-6, "{}", g.label);
            assert!(phi.verify().is_ok());
        }
        let par = MetricField::conformal_parabolic(0.1);
        let phi = boundary_normal_gauge(&par).unwrap();
        let pb = pullback(&phi, &par);
        for i in 0..64 {
            let (_, _, grr) = pb.polar_components(2.0 * PI * i as f64 / 64.0, 1.0);
            assert!((grr - 1.0).abs() < 1e-8);
        }
    }
}
