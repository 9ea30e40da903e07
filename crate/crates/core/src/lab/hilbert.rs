//! 2π A*₋H₊A₊w = I X⊥ I*w.

use super::{residual, tapered_mode, GridConfig, IdentityReport, RefinementRow};
use crate::boundary::{boundary_point, FanGrid};
use crate::error::Result;
use crate::fft::{signed_mode, RealFft};
use crate::fiber::{fiber_angle, fiber_vector, frame, hilbert_multiplier, perp};
use crate::geodesic::{Flow, PhasePoint};
use crate::grid::{hermite, periodic_slopes};
use crate::metric::MetricField;
use crate::util::wrap_angle;
use crate::xray::{continuation_at, FanRays, Parity, SharpMap};
use rustfft::num_complex::Complex64;
use std::f64::consts::PI;

/// A function on the boundary fibers ∂SM, stored as fiber Fourier coefficients at
/// the Nβ boundary nodes and interpolated in β by periodic cubic Hermite.
pub struct BoundaryFiber {
    nbeta: usize,
    radius: f64,
    coef: Vec<Vec<Complex64>>,
    slope: Vec<Vec<Complex64>>,
}

impl BoundaryFiber {
    /// Samples u at Nφ frame angles on each boundary fiber.
    pub fn sample(g: &MetricField, nbeta: usize, nphi: usize, radius: f64, u: impl Fn(&PhasePoint) -> Result<f64>) -> Result<Self> {
        let fft = RealFft::new(nphi);
        let mut coef = Vec::with_capacity(nbeta);
        let mut vals = vec![0.0; nphi];
        for i in 0..nbeta {
            let x = boundary_point(radius, 2.0 * PI * i as f64 / nbeta as f64);
            let fr = frame(g, x);
            for (k, v) in vals.iter_mut().enumerate() {
                *v = u(&PhasePoint::new(x, fiber_vector(&fr, 2.0 * PI * k as f64 / nphi as f64)))?;
            }
            coef.push(fft.spectrum(&vals));
        }
        Ok(Self::from_coefficients(nbeta, radius, coef))
    }

    fn from_coefficients(nbeta: usize, radius: f64, coef: Vec<Vec<Complex64>>) -> Self {
        let nphi = coef[0].len();
        let h = 2.0 * PI / nbeta as f64;
        let mut slope = vec![vec![Complex64::new(0.0, 0.0); nphi]; nbeta];
        let (mut re, mut im) = (vec![0.0; nbeta], vec![0.0; nbeta]);
        let (mut dre, mut dim) = (vec![0.0; nbeta], vec![0.0; nbeta]);
        for k in 0..nphi {
            for i in 0..nbeta {
                re[i] = coef[i][k].re;
                im[i] = coef[i][k].im;
            }
            periodic_slopes(&re, h, &mut dre);
            periodic_slopes(&im, h, &mut dim);
            for i in 0..nbeta {
                slope[i][k] = Complex64::new(dre[i], dim[i]);
            }
        }
        BoundaryFiber { nbeta, radius, coef, slope }
    }

    /// Applies a fiber Fourier multiplier.
    pub fn multiply(&self, m: impl Fn(i64) -> Complex64) -> Self {
        let nphi = self.coef[0].len();
        let scale = |c: &Vec<Vec<Complex64>>| -> Vec<Vec<Complex64>> {
            c.iter().map(|row| row.iter().enumerate().map(|(k, z)| z * m(signed_mode(k, nphi))).collect()).collect()
        };
        BoundaryFiber { nbeta: self.nbeta, radius: self.radius, coef: scale(&self.coef), slope: scale(&self.slope) }
    }

    /// H₊: the Hilbert multiplier on even fiber modes only.
    pub fn hilbert_even(&self) -> Self {
        self.multiply(|k| if k % 2 == 0 { hilbert_multiplier(k) } else { Complex64::new(0.0, 0.0) })
    }

    /// Value at a boundary phase point.
    pub fn eval(&self, g: &MetricField, p: &PhasePoint) -> f64 {
        let beta = wrap_angle(p.x[1].atan2(p.x[0]));
        let theta = fiber_angle(g, p.x, p.v);
        let h = 2.0 * PI / self.nbeta as f64;
        let u = beta / h;
        let i0 = (u.floor() as usize) % self.nbeta;
        let i1 = (i0 + 1) % self.nbeta;
        let (hv, kv, _, _) = hermite(u - u.floor());
        let nphi = self.coef[0].len();
        let mut s = 0.0;
        for k in 0..nphi {
            let c = self.coef[i0][k] * hv[0] + self.coef[i1][k] * hv[1] + (self.slope[i0][k] * kv[0] + self.slope[i1][k] * kv[1]) * h;
            let m = signed_mode(k, nphi);
            s += (c * Complex64::from_polar(1.0, m as f64 * theta)).re;
        }
        s
    }
}

/// 2π A*₋H₊A₊w on the incoming fan of `rays`. A nonzero `twist` rotates every
/// scattering lookup about the centre (a deliberately corrupted scattering table).
pub fn boundary_side(g: &MetricField, flow: &Flow, rays: &FanRays, w: &FanGrid, nphi: usize, twist: f64) -> Result<FanGrid> {
    let wi = w.interpolator();
    let spec = w.spec;
    let rot = |p: &PhasePoint| -> PhasePoint {
        let (s, c) = twist.sin_cos();
        let r = |v: crate::metric::Vec2| crate::metric::Vec2::new(c * v[0] - s * v[1], s * v[0] + c * v[1]);
        PhasePoint::new(r(p.x), r(p.v))
    };
    let aw = BoundaryFiber::sample(g, spec.nbeta, nphi, spec.radius, |p| {
        if twist == 0.0 {
            return continuation_at(flow, g, &wi, Parity::Even, p);
        }
        let fc = crate::boundary::fan_coordinate_of(g, p);
        if fc.alpha.abs() <= PI / 2.0 {
            return Ok(wi.eval(fc.beta, fc.alpha).0);
        }
        let back = crate::xray::backward_fan(flow, g, p)?;
        Ok(wi.eval(back.beta + twist, back.alpha).0)
    })?;
    let hw = aw.hilbert_even();
    let mut out = FanGrid::zeros(spec);
    for (n, (_, _, b, a)) in spec.coords().enumerate() {
        let p = crate::boundary::fan_phase_point_r(g, spec.radius, b, a);
        out.values[n] = 2.0 * PI * (hw.eval(g, &p) - hw.eval(g, &rot(&rays.exit[n])));
    }
    Ok(out)
}

/// Both sides of the Hilbert identity; the interior side uses the disk grid of `cfg`.
pub fn hilbert_sides(g: &MetricField, cfg: &GridConfig, w: &FanGrid) -> Result<(FanGrid, FanGrid)> {
    let flow: Flow = cfg.flow();
    let rays = FanRays::trace(&flow, g, w.spec)?;
    let lhs = boundary_side(g, &flow, &rays, w, cfg.nphi, 0.0)?;

    // right: I*w on the disk, lifted to X⊥ (df(v⊥)), then integrated along the fan
    let sm = SharpMap::build(&flow, g, cfg.disk(), cfg.nphi)?;
    let h = sm.backproject(w).h;
    let rhs = rays.integrate(|p| h.gradient(p.x).dot(&perp(g, p.x, p.v)));
    Ok((lhs, rhs))
}

pub fn hilbert_row(g: &MetricField, cfg: &GridConfig, w: &dyn Fn(f64, f64) -> f64) -> Result<RefinementRow> {
    let spec = cfg.fan();
    let (lhs, rhs) = hilbert_sides(g, cfg, &FanGrid::from_fn(spec, w))?;
    let (r, a, b) = residual(&lhs.values, &rhs.values, &spec.weights(g));
    Ok(RefinementRow { grid: *cfg, residual: r, lhs_norm: a, rhs_norm: b })
}

pub fn check_hilbert_identity(g: &MetricField, cfg: &GridConfig, refine: u32, m: u32) -> Result<IdentityReport> {
    let w = tapered_mode(m);
    let rows = cfg.ladder(refine).iter().map(|c| hilbert_row(g, c, &w)).collect::<Result<Vec<_>>>()?;
    Ok(IdentityReport::new("hilbert", &g.label, rows, 5e-2, 1.8))
}
