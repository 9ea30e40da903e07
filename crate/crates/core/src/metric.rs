//! Riemannian metrics on the closed unit disk (plus an evaluation pad).

use crate::error::{GeoError, Result};
use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

pub type Vec2 = Vector2<f64>;
pub type Mat2 = Matrix2<f64>;

/// Metrics must be evaluable on |x| ≤ 1 + EVAL_PAD.
pub const EVAL_PAD: f64 = 0.3;
/// Central-difference step for derivatives that are not supplied analytically.
pub const H_FD: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Euclidean,
    Conformal,
    Pullback,
    Custom,
}

/// Component expression of a metric. Derivatives default to central differences.
pub trait MetricExpr: Send + Sync {
    fn eval(&self, x: Vec2) -> Mat2;
    /// Analytic first derivatives [∂₁g, ∂₂g], if available.
    fn deriv(&self, _x: Vec2) -> Option<[Mat2; 2]> {
        None
    }
    /// True when all Christoffel symbols vanish identically.
    fn flat(&self) -> bool {
        false
    }
}

/// Levi-Civita connection coefficients, `gamma[i][j][k]` = Γ^i_{jk}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Christoffel {
    pub gamma: [[[f64; 2]; 2]; 2],
}

impl Christoffel {
    pub fn zero() -> Self {
        Christoffel { gamma: [[[0.0; 2]; 2]; 2] }
    }

    /// Γ(a, b)^i = Γ^i_{jk} a^j b^k.
    pub fn contract(&self, a: Vec2, b: Vec2) -> Vec2 {
        let mut out = Vec2::zeros();
        for i in 0..2 {
            let mut s = 0.0;
            for j in 0..2 {
                for k in 0..2 {
                    s += self.gamma[i][j][k] * a[j] * b[k];
                }
            }
            out[i] = s;
        }
        out
    }
}

#[derive(Clone)]
pub struct MetricField {
    pub kind: MetricKind,
    /// Regularity class C^k of the expression (k ≥ 2).
    pub regularity: u32,
    pub label: String,
    expr: Arc<dyn MetricExpr>,
}

impl fmt::Debug for MetricField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricField")
            .field("kind", &self.kind)
            .field("label", &self.label)
            .finish()
    }
}

impl MetricField {
    pub fn new(kind: MetricKind, label: impl Into<String>, regularity: u32, expr: Arc<dyn MetricExpr>) -> Self {
        assert!(regularity >= 2);
        MetricField { kind, regularity, label: label.into(), expr }
    }

    pub fn euclidean() -> Self {
        Self::new(MetricKind::Euclidean, "euclidean", u32::MAX, Arc::new(Euclidean))
    }

    /// e^{2λ}δ with λ = c.
    pub fn conformal_constant(c: f64) -> Self {
        Self::new(
            MetricKind::Conformal,
            format!("conformal constant c={c}"),
            u32::MAX,
            Arc::new(Conformal { profile: Profile::Constant(c), scale: (2.0 * c).exp() }),
        )
    }

    /// e^{2λ}δ with λ = c(1 − |x|²).
    pub fn conformal_parabolic(c: f64) -> Self {
        Self::new(
            MetricKind::Conformal,
            format!("conformal parabolic c={c}"),
            u32::MAX,
            Arc::new(Conformal { profile: Profile::Parabolic(c), scale: 1.0 }),
        )
    }

    /// δ + s·b(x)(dx⊗dy + dy⊗dx) with b = exp(−|x|²/σ²).
    pub fn sheared(s: f64, sigma: f64) -> Self {
        Self::new(MetricKind::Custom, format!("sheared s={s} sigma={sigma}"), u32::MAX, Arc::new(Sheared { s, sigma }))
    }

    /// A metric given by closures; derivatives by central differences.
    pub fn custom(label: impl Into<String>, f: impl Fn(Vec2) -> Mat2 + Send + Sync + 'static) -> Self {
        Self::new(MetricKind::Custom, label, 2, Arc::new(FnMetric(Box::new(f))))
    }

    pub fn is_flat(&self) -> bool {
        self.expr.flat()
    }

    pub fn in_pad(x: Vec2) -> bool {
        x.norm() <= 1.0 + EVAL_PAD + 1e-9
    }

    /// Checked evaluation.
    pub fn eval(&self, x: Vec2) -> Result<Mat2> {
        if !Self::in_pad(x) {
            return Err(GeoError::DomainEscape { x: x[0], y: x[1] });
        }
        let g = self.expr.eval(x);
        if !(g[(0, 0)] > 0.0) || !(g.determinant() > 0.0) {
            return Err(GeoError::PositivityViolation { x: x[0], y: x[1] });
        }
        Ok(g)
    }

    /// Unchecked evaluation for inner loops.
    #[inline]
    pub fn g(&self, x: Vec2) -> Mat2 {
        self.expr.eval(x)
    }

    /// [∂₁g, ∂₂g], analytic when supplied, otherwise central differences.
    pub fn deriv(&self, x: Vec2) -> [Mat2; 2] {
        if let Some(d) = self.expr.deriv(x) {
            return d;
        }
        fd_deriv(|y| self.expr.eval(y), x, H_FD)
    }

    /// Second derivatives ∂_a∂_b g as [[∂₁₁, ∂₁₂], [∂₂₁, ∂₂₂]], by differences of `deriv`.
    pub fn second_deriv(&self, x: Vec2) -> [[Mat2; 2]; 2] {
        let h = if self.expr.deriv(x).is_some() { 1e-5 } else { 1e-3 };
        
        fd_deriv_pair(|y| self.deriv(y), x, h)
    }

    /// Checked Christoffel symbols.
    pub fn christoffel(&self, x: Vec2) -> Result<Christoffel> {
        self.eval(x)?;
        Ok(self.christoffel_raw(x))
    }

    pub fn christoffel_raw(&self, x: Vec2) -> Christoffel {
        if self.expr.flat() {
            return Christoffel::zero();
        }
        let g = self.expr.eval(x);
        let d = self.deriv(x);
        christoffel_from(g, d)
    }

    /// Geodesic acceleration −Γ^i_{jk} v^j v^k.
    #[inline]
    pub fn accel(&self, x: Vec2, v: Vec2) -> Vec2 {
        if self.expr.flat() {
            return Vec2::zeros();
        }
        let g = self.expr.eval(x);
        let d = self.deriv(x);
        let m = d[0] * v[0] + d[1] * v[1];
        let t1 = m * v;
        let t2 = Vec2::new(v.dot(&(d[0] * v)), v.dot(&(d[1] * v)));
        let rhs = t1 * 2.0 - t2;
        -0.5 * inv2(&g) * rhs
    }

    /// Gauss curvature from the Riemann tensor, with Christoffel derivatives by differences.
    pub fn gauss_curvature(&self, x: Vec2) -> f64 {
        if self.expr.flat() {
            return 0.0;
        }
        let h = if self.expr.deriv(x).is_some() { 1e-5 } else { 1e-3 };
        let gam = self.christoffel_raw(x);
        let e = [Vec2::new(h, 0.0), Vec2::new(0.0, h)];
        let mut dg = [[[[0.0; 2]; 2]; 2]; 2]; // dg[l][i][j][k] = ∂_l Γ^i_jk
        for l in 0..2 {
            let p = self.christoffel_raw(x + e[l]);
            let m = self.christoffel_raw(x - e[l]);
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        dg[l][i][j][k] = (p.gamma[i][j][k] - m.gamma[i][j][k]) / (2.0 * h);
                    }
                }
            }
        }
        let g = &gam.gamma;
        // R^i_{jkl} = ∂_k Γ^i_{lj} − ∂_l Γ^i_{kj} + Γ^i_{kp}Γ^p_{lj} − Γ^i_{lp}Γ^p_{kj}
        let riem = |i: usize, j: usize, k: usize, l: usize| -> f64 {
            let mut s = dg[k][i][l][j] - dg[l][i][k][j];
            for p in 0..2 {
                s += g[i][k][p] * g[p][l][j] - g[i][l][p] * g[p][k][j];
            }
            s
        };
        let gm = self.expr.eval(x);
        // R_{1212} = g_{1m} R^m_{212}
        let r1212 = gm[(0, 0)] * riem(0, 1, 0, 1) + gm[(0, 1)] * riem(1, 1, 0, 1);
        r1212 / gm.determinant()
    }

    pub fn norm(&self, x: Vec2, v: Vec2) -> f64 {
        v.dot(&(self.expr.eval(x) * v)).sqrt()
    }

    /// Polar components (g_θθ, g_θr, g_rr) at (θ, r).
    pub fn polar_components(&self, theta: f64, r: f64) -> (f64, f64, f64) {
        let (s, c) = theta.sin_cos();
        let x = Vec2::new(r * c, r * s);
        let g = self.expr.eval(x);
        let et = Vec2::new(-r * s, r * c);
        let er = Vec2::new(c, s);
        (et.dot(&(g * et)), et.dot(&(g * er)), er.dot(&(g * er)))
    }
}

pub fn inv2(g: &Mat2) -> Mat2 {
    let det = g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)];
    Mat2::new(g[(1, 1)], -g[(0, 1)], -g[(1, 0)], g[(0, 0)]) / det
}

/// Γ^i_{jk} = ½ g^{il}(∂_j g_{lk} + ∂_k g_{lj} − ∂_l g_{jk}).
pub fn christoffel_from(g: Mat2, d: [Mat2; 2]) -> Christoffel {
    let gi = inv2(&g);
    let mut out = Christoffel::zero();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                let mut s = 0.0;
                for l in 0..2 {
                    s += gi[(i, l)] * (d[j][(l, k)] + d[k][(l, j)] - d[l][(j, k)]);
                }
                out.gamma[i][j][k] = 0.5 * s;
            }
        }
    }
    out
}

pub fn fd_deriv(f: impl Fn(Vec2) -> Mat2, x: Vec2, h: f64) -> [Mat2; 2] {
    let e1 = Vec2::new(h, 0.0);
    let e2 = Vec2::new(0.0, h);
    [(f(x + e1) - f(x - e1)) / (2.0 * h), (f(x + e2) - f(x - e2)) / (2.0 * h)]
}

fn fd_deriv_pair(f: impl Fn(Vec2) -> [Mat2; 2], x: Vec2, h: f64) -> [[Mat2; 2]; 2] {
    let e = [Vec2::new(h, 0.0), Vec2::new(0.0, h)];
    let mut out = [[Mat2::zeros(); 2]; 2];
    for a in 0..2 {
        let p = f(x + e[a]);
        let m = f(x - e[a]);
        for b in 0..2 {
            out[a][b] = (p[b] - m[b]) / (2.0 * h);
        }
    }
    out
}

struct Euclidean;

impl MetricExpr for Euclidean {
    fn eval(&self, _x: Vec2) -> Mat2 {
        Mat2::identity()
    }
    fn deriv(&self, _x: Vec2) -> Option<[Mat2; 2]> {
        Some([Mat2::zeros(), Mat2::zeros()])
    }
    fn flat(&self) -> bool {
        true
    }
}

#[derive(Clone, Copy, Debug)]
enum Profile {
    Constant(f64),
    Parabolic(f64),
}

struct Conformal {
    profile: Profile,
    scale: f64,
}

impl Conformal {
    fn lambda(&self, x: Vec2) -> (f64, Vec2) {
        match self.profile {
            Profile::Constant(c) => (c, Vec2::zeros()),
            Profile::Parabolic(c) => (c * (1.0 - x.norm_squared()), -2.0 * c * x),
        }
    }
}

impl MetricExpr for Conformal {
    fn eval(&self, x: Vec2) -> Mat2 {
        match self.profile {
            Profile::Constant(_) => Mat2::identity() * self.scale,
            _ => Mat2::identity() * (2.0 * self.lambda(x).0).exp(),
        }
    }
    fn deriv(&self, x: Vec2) -> Option<[Mat2; 2]> {
        let (l, dl) = self.lambda(x);
        let e = (2.0 * l).exp();
        Some([Mat2::identity() * (2.0 * dl[0] * e), Mat2::identity() * (2.0 * dl[1] * e)])
    }
    fn flat(&self) -> bool {
        matches!(self.profile, Profile::Constant(_))
    }
}

struct Sheared {
    s: f64,
    sigma: f64,
}

impl MetricExpr for Sheared {
    fn eval(&self, x: Vec2) -> Mat2 {
        let b = (-x.norm_squared() / (self.sigma * self.sigma)).exp();
        let o = self.s * b;
        Mat2::new(1.0, o, o, 1.0)
    }
    fn deriv(&self, x: Vec2) -> Option<[Mat2; 2]> {
        let s2 = self.sigma * self.sigma;
        let b = (-x.norm_squared() / s2).exp();
        let d0 = -2.0 * x[0] / s2 * b * self.s;
        let d1 = -2.0 * x[1] / s2 * b * self.s;
        Some([Mat2::new(0.0, d0, d0, 0.0), Mat2::new(0.0, d1, d1, 0.0)])
    }
}

struct FnMetric(Box<dyn Fn(Vec2) -> Mat2 + Send + Sync>);

impl MetricExpr for FnMetric {
    fn eval(&self, x: Vec2) -> Mat2 {
        (self.0)(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_is_identity() {
        let g = MetricField::euclidean();
        assert_eq!(g.eval(Vec2::new(0.3, -0.4)).unwrap(), Mat2::identity());
        let c = g.christoffel(Vec2::new(0.1, 0.2)).unwrap();
        assert_eq!(c, Christoffel::zero());
    }

    #[test]
    fn constant_conformal_value() {
        let g = MetricField::conformal_constant(0.1);
        let m = g.eval(Vec2::new(0.5, 0.1)).unwrap();
        assert!((m[(0, 0)] - 0.2f64.exp()).abs() < 1e-15);
        assert_eq!(m[(0, 1)], 0.0);
        assert_eq!(g.christoffel(Vec2::new(0.2, 0.2)).unwrap(), Christoffel::zero());
    }

    #[test]
    fn conformal_christoffel_oracle() {
        // hand expansion for e^{2λ}δ: Γ¹₁₁ = λ₁, Γ¹₁₂ = λ₂, Γ¹₂₂ = −λ₁,
        // Γ²₁₁ = −λ₂, Γ²₁₂ = λ₁, Γ²₂₂ = λ₂
        let c = 0.7;
        let g = MetricField::conformal_parabolic(c);
        for &(x, y) in &[(0.1, 0.2), (-0.5, 0.3), (0.9, -0.1)] {
            let p = Vec2::new(x, y);
            let l1 = -2.0 * c * x;
            let l2 = -2.0 * c * y;
            let gm = g.christoffel(p).unwrap().gamma;
            let want = [[[l1, l2], [l2, -l1]], [[-l2, l1], [l1, l2]]];
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        assert!((gm[i][j][k] - want[i][j][k]).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn accel_matches_christoffel_contraction() {
        let g = MetricField::sheared(0.1, 1.0);
        let x = Vec2::new(0.3, -0.2);
        let v = Vec2::new(0.6, 0.7);
        let a = g.accel(x, v);
        let b = -g.christoffel_raw(x).contract(v, v);
        assert!((a - b).norm() < 1e-13);
    }

    #[test]
    fn fd_matches_analytic_derivatives() {
        let g = MetricField::sheared(0.1, 1.0);
        let h = MetricField::custom("sheared-fd", |x| {
            let b = (-x.norm_squared()).exp() * 0.1;
            Mat2::new(1.0, b, b, 1.0)
        });
        let x = Vec2::new(0.4, 0.5);
        let a = g.deriv(x);
        let b = h.deriv(x);
        assert!((a[0] - b[0]).norm() < 1e-9 && (a[1] - b[1]).norm() < 1e-9);
    }

    #[test]
    fn gauss_curvature_conformal() {
        // K = −e^{−2λ}Δλ, λ = c(1−r²) gives Δλ = −4c
        let c = 0.3;
        let g = MetricField::conformal_parabolic(c);
        for &(x, y) in &[(0.0, 0.0), (0.5, 0.2), (-0.7, 0.6)] {
            let p = Vec2::new(x, y);
            let lam = c * (1.0 - p.norm_squared());
            let want = (-2.0 * lam).exp() * 4.0 * c;
            assert!((g.gauss_curvature(p) - want).abs() < 1e-6);
        }
        assert_eq!(MetricField::euclidean().gauss_curvature(Vec2::new(0.1, 0.1)), 0.0);
    }

    #[test]
    fn positivity_and_domain_errors() {
        let bad = MetricField::custom("bad", |_| Mat2::new(1.0, 2.0, 2.0, 1.0));
        assert!(matches!(bad.eval(Vec2::new(0.0, 0.0)), Err(GeoError::PositivityViolation { .. })));
        let e = MetricField::euclidean();
        assert!(matches!(e.eval(Vec2::new(1.5, 0.0)), Err(GeoError::DomainEscape { .. })));
        assert!(e.eval(Vec2::new(1.29, 0.0)).is_ok());
    }
}
