//! Functions on the unit sphere bundle sampled fiberwise: Hilbert transform, the
//! vector fields X and X⊥, and lifted gradients.

use crate::error::Result;
use crate::fft::{signed_mode, trig_eval, RealFft};
use crate::geodesic::{Flow, PhasePoint};
use crate::grid::{DiskGrid, DiskGridFunction};
use crate::metric::{inv2, MetricField, Vec2};
use rustfft::num_complex::Complex64;
use std::f64::consts::PI;

/// Positively oriented g-orthonormal frame from Gram–Schmidt on (∂₁, ∂₂).
pub fn frame(g: &MetricField, x: Vec2) -> (Vec2, Vec2) {
    let m = g.g(x);
    let e1 = Vec2::new(1.0 / m[(0, 0)].sqrt(), 0.0);
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(0, 1)];
    let e2 = Vec2::new(-m[(0, 1)] / m[(0, 0)], 1.0) / (det / m[(0, 0)]).sqrt();
    (e1, e2)
}

/// Unit vector at fiber angle θ in the frame at x.
pub fn fiber_vector(frame: &(Vec2, Vec2), theta: f64) -> Vec2 {
    frame.0 * theta.cos() + frame.1 * theta.sin()
}

/// Fiber angle of v in the frame at x.
pub fn fiber_angle(g: &MetricField, x: Vec2, v: Vec2) -> f64 {
    let m = g.g(x);
    let (e1, e2) = frame(g, x);
    v.dot(&(m * e2)).atan2(v.dot(&(m * e1)))
}

/// Clockwise g-rotation by 90°: in the frame, (a, b) ↦ (b, −a).
pub fn perp(g: &MetricField, x: Vec2, v: Vec2) -> Vec2 {
    let m = g.g(x);
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(0, 1)];
    inv2(&m) * Vec2::new(v[1], -v[0]) * det.sqrt()
}

/// g-gradient g⁻¹ df of a Cartesian differential.
pub fn grad_g(g: &MetricField, x: Vec2, df: Vec2) -> Vec2 {
    inv2(&g.g(x)) * df
}

/// Hilbert multiplier −i·sgn(k).
#[inline]
pub fn hilbert_multiplier(k: i64) -> Complex64 {
    Complex64::new(0.0, -(k.signum() as f64))
}

/// Principal-value quadrature of (1/2π) ∫ u(η) (1+⟨ξ,η⟩)/⟨ξ⊥,η⟩ dη on the unit
/// circle, nodes placed symmetrically about the singularity η = ξ.
pub fn pv_hilbert(u: impl Fn(f64) -> f64, theta: f64, nodes: usize) -> f64 {
    let d = 2.0 * PI / nodes as f64;
    let xi = Vec2::new(theta.cos(), theta.sin());
    let xp = Vec2::new(xi[1], -xi[0]);
    let mut s = 0.0;
    for j in 0..nodes {
        let phi = theta - PI + (j as f64 + 0.5) * d;
        let eta = Vec2::new(phi.cos(), phi.sin());
        s += (1.0 + xi.dot(&eta)) / xp.dot(&eta) * u(phi);
    }
    s * d / (2.0 * PI)
}

/// Something that can be evaluated at phase points.
pub trait PhaseFunction: Sync {
    fn value(&self, p: &PhasePoint) -> Result<f64>;
}

impl<F: Fn(&PhasePoint) -> f64 + Sync> PhaseFunction for F {
    fn value(&self, p: &PhasePoint) -> Result<f64> {
        Ok(self(p))
    }
}

/// u(x, θ) on a polar base grid × Nφ fiber angles measured in the g-orthonormal frame.
#[derive(Clone, Debug)]
pub struct SMGridFunction {
    pub grid: DiskGrid,
    pub nphi: usize,
    /// node-major: values[node·Nφ + k] at angle 2πk/Nφ
    pub values: Vec<f64>,
}

impl SMGridFunction {
    pub fn zeros(grid: DiskGrid, nphi: usize) -> Self {
        SMGridFunction { grid, nphi, values: vec![0.0; grid.len() * nphi] }
    }

    pub fn fiber_angle(&self, k: usize) -> f64 {
        2.0 * PI * k as f64 / self.nphi as f64
    }

    pub fn from_fn(g: &MetricField, grid: DiskGrid, nphi: usize, f: impl Fn(&PhasePoint) -> f64) -> Self {
        Self::try_from_phase(g, grid, nphi, &|p: &PhasePoint| Ok(f(p))).expect("infallible")
    }

    /// Samples a fallible phase function at every node and fiber angle.
    pub fn try_from_phase(g: &MetricField, grid: DiskGrid, nphi: usize, f: &dyn Fn(&PhasePoint) -> Result<f64>) -> Result<Self> {
        let mut out = Self::zeros(grid, nphi);
        for i in 0..=grid.nr {
            for j in 0..grid.ntheta {
                let node = grid.idx(i, j);
                if i == 0 && j > 0 {
                    out.values.copy_within(0..nphi, node * nphi);
                    continue;
                }
                let x = grid.point(i, j);
                let fr = frame(g, x);
                for k in 0..nphi {
                    let v = fiber_vector(&fr, out.fiber_angle(k));
                    out.values[node * nphi + k] = f(&PhasePoint::new(x, v))?;
                }
            }
        }
        Ok(out)
    }

    pub fn fiber(&self, node: usize) -> &[f64] {
        &self.values[node * self.nphi..(node + 1) * self.nphi]
    }

    /// Fourier coefficients û_k of the fiber at a node.
    pub fn coefficients(&self, fft: &RealFft, node: usize) -> Vec<Complex64> {
        fft.spectrum(self.fiber(node))
    }

    /// Value at (node, θ) by trigonometric interpolation of the fiber.
    pub fn eval_fiber(&self, fft: &RealFft, node: usize, theta: f64) -> f64 {
        trig_eval(&self.coefficients(fft, node), theta)
    }

    fn map_spectrum(&self, m: impl Fn(i64) -> Complex64) -> Self {
        let fft = RealFft::new(self.nphi);
        let mut out = self.clone();
        for node in 0..self.grid.len() {
            let mut c = fft.spectrum(self.fiber(node));
            for (k, ck) in c.iter_mut().enumerate() {
                *ck *= m(signed_mode(k, self.nphi));
            }
            let v = fft.synthesize(&c);
            out.values[node * self.nphi..(node + 1) * self.nphi].copy_from_slice(&v);
        }
        out
    }

    /// Fiberwise even part u₊(θ) = (u(θ) + u(θ+π))/2.
    pub fn even_part(&self) -> Self {
        self.parity(1.0)
    }

    pub fn odd_part(&self) -> Self {
        self.parity(-1.0)
    }

    fn parity(&self, s: f64) -> Self {
        assert!(self.nphi.is_multiple_of(2));
        let h = self.nphi / 2;
        let mut out = self.clone();
        for node in 0..self.grid.len() {
            let f = self.fiber(node);
            for k in 0..self.nphi {
                out.values[node * self.nphi + k] = 0.5 * (f[k] + s * f[(k + h) % self.nphi]);
            }
        }
        out
    }

    pub fn hilbert(&self) -> Self {
        self.map_spectrum(hilbert_multiplier)
    }

    /// H₊u = H(u₊).
    pub fn hilbert_even(&self) -> Self {
        self.map_spectrum(|k| if k % 2 == 0 { hilbert_multiplier(k) } else { Complex64::new(0.0, 0.0) })
    }

    /// H₋u = H(u₋).
    pub fn hilbert_odd(&self) -> Self {
        self.map_spectrum(|k| if k % 2 != 0 { hilbert_multiplier(k) } else { Complex64::new(0.0, 0.0) })
    }

    /// Fiber average u₀ as a disk function.
    pub fn fiber_mean(&self) -> DiskGridFunction {
        let vals = (0..self.grid.len()).map(|n| self.fiber(n).iter().sum::<f64>() / self.nphi as f64).collect();
        DiskGridFunction::from_values(self.grid, vals)
    }

    pub fn pointwise(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut out = self.clone();
        for (o, (a, b)) in out.values.iter_mut().zip(self.values.iter().zip(&other.values)) {
            *o = f(*a, *b);
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Finite-difference flow derivatives X and X⊥ with step t.
#[derive(Clone, Copy, Debug)]
pub struct FlowDerivative {
    pub flow: Flow,
    pub t: f64,
}

impl Default for FlowDerivative {
    fn default() -> Self {
        FlowDerivative { flow: Flow::with_step(1e-4), t: 1e-4 }
    }
}

impl FlowDerivative {
    fn inside(&self, p: &PhasePoint) -> bool {
        p.x.norm() <= self.flow.radius
    }

    fn diff(&self, u: &dyn PhaseFunction, p: &PhasePoint, step: impl Fn(f64) -> PhasePoint) -> Result<(f64, bool)> {
        let t = self.t;
        let (fwd, bwd) = (step(t), step(-t));
        if self.inside(&fwd) && self.inside(&bwd) {
            return Ok(((u.value(&fwd)? - u.value(&bwd)?) / (2.0 * t), false));
        }
        // one-sided second-order stencil toward the interior
        let s = if self.inside(&fwd) { 1.0 } else { -1.0 };
        let (a, b) = (step(s * t), step(2.0 * s * t));
        Ok((s * (-3.0 * u.value(p)? + 4.0 * u.value(&a)? - u.value(&b)?) / (2.0 * t), true))
    }

    /// X u at p; the flag marks a one-sided boundary stencil.
    pub fn x(&self, g: &MetricField, u: &dyn PhaseFunction, p: &PhasePoint) -> Result<(f64, bool)> {
        self.diff(u, p, |t| self.flow.flow_for(g, *p, t))
    }

    /// X⊥ u at p along ψ_t: the geodesic from (x, ξ⊥) carrying ξ by parallel transport.
    pub fn x_perp(&self, g: &MetricField, u: &dyn PhaseFunction, p: &PhasePoint) -> Result<(f64, bool)> {
        let xp = perp(g, p.x, p.v);
        self.diff(u, p, |t| self.flow.perp_flow_for(g, p.x, p.v, xp, t))
    }

    pub fn x_field(&self, g: &MetricField, grid: DiskGrid, nphi: usize, u: &dyn PhaseFunction) -> Result<SMGridFunction> {
        SMGridFunction::try_from_phase(g, grid, nphi, &|p: &PhasePoint| Ok(self.x(g, u, p)?.0))
    }

    pub fn x_perp_field(&self, g: &MetricField, grid: DiskGrid, nphi: usize, u: &dyn PhaseFunction) -> Result<SMGridFunction> {
        SMGridFunction::try_from_phase(g, grid, nphi, &|p: &PhasePoint| Ok(self.x_perp(g, u, p)?.0))
    }
}

/// (X f, X⊥ f) = (df(v), df(v⊥)) for a scalar on the grid, as fiber-degree-one functions.
pub fn gradients(g: &MetricField, f: &DiskGridFunction, nphi: usize) -> (SMGridFunction, SMGridFunction) {
    let grid = f.grid;
    let mut xf = SMGridFunction::zeros(grid, nphi);
    let mut xp = SMGridFunction::zeros(grid, nphi);
    for i in 0..=grid.nr {
        for j in 0..grid.ntheta {
            let node = grid.idx(i, j);
            let x = grid.point(i, j);
            let df = f.node_gradient(i, j);
            let fr = frame(g, x);
            for k in 0..nphi {
                let v = fiber_vector(&fr, xf.fiber_angle(k));
                xf.values[node * nphi + k] = df.dot(&v);
                xp.values[node * nphi + k] = df.dot(&perp(g, x, v));
            }
        }
    }
    (xf, xp)
}
