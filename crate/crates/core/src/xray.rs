//! X-ray transform, sharp extension, backprojection, normal operator and the
//! continuation operators A±.

use crate::boundary::{fan_coordinate_of, fan_phase_point_r, FanCoordinate, FanGrid, FanInterp, FanSpec};
use crate::error::Result;
use crate::fiber::{fiber_vector, frame, PhaseFunction, SMGridFunction};
use crate::geodesic::{Flow, PhasePoint};
use crate::grid::{DiskGrid, DiskGridFunction, ScalarField};
use crate::metric::{MetricField, Vec2};
use crate::util::trace_weights;
use std::f64::consts::PI;

/// Integration step used by the boundary and interior operators.
pub const H_OP: f64 = 1e-2;

pub fn operator_flow() -> Flow {
    Flow::with_step(H_OP)
}

#[derive(Clone, Copy, Debug)]
pub struct RaySample {
    pub p: PhasePoint,
    pub w: f64,
}

/// Geodesics launched from every node of a fan grid, with quadrature weights and
/// exit data.
#[derive(Clone, Debug)]
pub struct FanRays {
    pub spec: FanSpec,
    pub flow: Flow,
    offsets: Vec<usize>,
    samples: Vec<RaySample>,
    pub tau: Vec<f64>,
    pub exit: Vec<PhasePoint>,
    /// incoming fan coordinate of the reversed exit (the scattering image)
    pub scatter: Vec<FanCoordinate>,
}

impl FanRays {
    pub fn trace(flow: &Flow, g: &MetricField, spec: FanSpec) -> Result<Self> {
        let mut offsets = Vec::with_capacity(spec.len() + 1);
        let mut samples = Vec::new();
        let mut tau = Vec::with_capacity(spec.len());
        let mut exit = Vec::with_capacity(spec.len());
        let mut scatter = Vec::with_capacity(spec.len());
        let flow = Flow { radius: spec.radius, ..*flow };
        let (mut ts, mut ps, mut ws) = (Vec::new(), Vec::new(), Vec::new());
        offsets.push(0);
        for (_, _, b, a) in spec.coords() {
            let p = fan_phase_point_r(g, spec.radius, b, a);
            let (t, e) = flow.sample(g, p, &mut ts, &mut ps)?;
            trace_weights(&ts, &mut ws);
            samples.extend(ps.iter().zip(&ws).map(|(p, w)| RaySample { p: *p, w: *w }));
            offsets.push(samples.len());
            tau.push(t);
            exit.push(e);
            scatter.push(fan_coordinate_of(g, &e.reversed()));
        }
        Ok(FanRays { spec, flow, offsets, samples, tau, exit, scatter })
    }

    pub fn ray(&self, n: usize) -> &[RaySample] {
        &self.samples[self.offsets[n]..self.offsets[n + 1]]
    }

    pub fn sample_count(&self) -> usize {
        self.samples.len()
    }

    /// ∫ F(γ, γ̇) dt over every ray.
    pub fn integrate(&self, f: impl Fn(&PhasePoint) -> f64) -> FanGrid {
        let values = (0..self.spec.len()).map(|n| self.ray(n).iter().map(|s| s.w * f(&s.p)).sum()).collect();
        FanGrid { spec: self.spec, values }
    }

    pub fn xray(&self, f: &dyn ScalarField) -> FanGrid {
        self.integrate(|p| f.value(p.x))
    }

    /// Exit times as fan data (the transform of f ≡ 1).
    pub fn exit_times(&self) -> FanGrid {
        FanGrid { spec: self.spec, values: self.tau.clone() }
    }
}

/// I f at a single fan coordinate.
pub fn xray_transform(flow: &Flow, g: &MetricField, f: &dyn ScalarField, fc: FanCoordinate) -> Result<f64> {
    let p = fan_phase_point_r(g, flow.radius, fc.beta, fc.alpha);
    Ok(flow.line_integral(g, p, |q| f.value(q.x))?.0)
}

/// Incoming fan coordinate of the geodesic through p (backward exit, reversed).
pub fn backward_fan(flow: &Flow, g: &MetricField, p: &PhasePoint) -> Result<FanCoordinate> {
    let (_, e) = flow.exit(g, p.reversed())?;
    Ok(fan_coordinate_of(g, &e.reversed()))
}

/// w^# evaluated pointwise through the backward flow.
pub struct Sharp<'a> {
    pub flow: Flow,
    pub g: &'a MetricField,
    pub w: &'a FanInterp,
}

impl PhaseFunction for Sharp<'_> {
    fn value(&self, p: &PhasePoint) -> Result<f64> {
        let fc = backward_fan(&self.flow, self.g, p)?;
        Ok(self.w.eval(fc.beta, fc.alpha).0)
    }
}

/// Backward-exit fan coordinates for every node and fiber angle of a grid.
#[derive(Clone, Debug)]
pub struct SharpMap {
    pub grid: DiskGrid,
    pub nphi: usize,
    coords: Vec<FanCoordinate>,
}

/// I*w on a grid together with the number of fiber samples that fell outside the
/// guard band.
#[derive(Clone, Debug)]
pub struct Backprojection {
    pub h: DiskGridFunction,
    pub clipped: usize,
}

impl SharpMap {
    pub fn build(flow: &Flow, g: &MetricField, grid: DiskGrid, nphi: usize) -> Result<Self> {
        let flow = Flow { radius: grid.radius, ..*flow };
        let mut coords = vec![FanCoordinate { beta: 0.0, alpha: 0.0 }; grid.len() * nphi];
        for i in 0..=grid.nr {
            for j in 0..grid.ntheta {
                let node = grid.idx(i, j);
                if i == 0 && j > 0 {
                    coords.copy_within(0..nphi, node * nphi);
                    continue;
                }
                let x = grid.point(i, j);
                let fr = frame(g, x);
                for k in 0..nphi {
                    let v = fiber_vector(&fr, 2.0 * PI * k as f64 / nphi as f64);
                    coords[node * nphi + k] = backward_fan(&flow, g, &PhasePoint::new(x, v))?;
                }
            }
        }
        Ok(SharpMap { grid, nphi, coords })
    }

    pub fn coord(&self, node: usize, k: usize) -> FanCoordinate {
        self.coords[node * self.nphi + k]
    }

    /// w^# on the grid.
    pub fn apply(&self, w: &FanInterp) -> (SMGridFunction, usize) {
        let mut out = SMGridFunction::zeros(self.grid, self.nphi);
        let mut clipped = 0;
        for (o, fc) in out.values.iter_mut().zip(&self.coords) {
            let (v, c) = w.eval(fc.beta, fc.alpha);
            *o = v;
            clipped += c as usize;
        }
        (out, clipped)
    }

    /// I*w(x) = ∫_{S_x} w^# dS by the trapezoid rule on the fiber.
    pub fn backproject(&self, w: &FanGrid) -> Backprojection {
        let (s, clipped) = self.apply(&w.interpolator());
        let m = s.fiber_mean();
        Backprojection { h: m.map(|v| 2.0 * PI * v), clipped }
    }
}

/// I*w at a single point.
pub fn backprojection_at(flow: &Flow, g: &MetricField, w: &FanInterp, x: Vec2, nphi: usize) -> Result<f64> {
    let fr = frame(g, x);
    let mut s = 0.0;
    for k in 0..nphi {
        let v = fiber_vector(&fr, 2.0 * PI * k as f64 / nphi as f64);
        let fc = backward_fan(flow, g, &PhasePoint::new(x, v))?;
        s += w.eval(fc.beta, fc.alpha).0;
    }
    Ok(s * 2.0 * PI / nphi as f64)
}

/// N f(x) = 2 ∫_{S_x} ∫_0^{τ(x,v)} f(γ_{x,v}(t)) dt dS_x(v) at every grid node.
pub fn normal_operator(flow: &Flow, g: &MetricField, f: &dyn ScalarField, grid: DiskGrid, nphi: usize) -> Result<DiskGridFunction> {
    let flow = Flow { radius: grid.radius, ..*flow };
    let mut vals = vec![0.0; grid.len()];
    let (mut ts, mut ps, mut ws) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..=grid.nr {
        for j in 0..grid.ntheta {
            if i == 0 && j > 0 {
                vals[grid.idx(i, j)] = vals[0];
                continue;
            }
            let x = grid.point(i, j);
            let fr = frame(g, x);
            let mut s = 0.0;
            for k in 0..nphi {
                let v = fiber_vector(&fr, 2.0 * PI * k as f64 / nphi as f64);
                flow.sample(g, PhasePoint::new(x, v), &mut ts, &mut ps)?;
                trace_weights(&ts, &mut ws);
                s += ps.iter().zip(&ws).map(|(q, w)| w * f.value(q.x)).sum::<f64>();
            }
            vals[grid.idx(i, j)] = 2.0 * s * 2.0 * PI / nphi as f64;
        }
    }
    Ok(DiskGridFunction::from_values(grid, vals))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

/// Data on ∂SM: the incoming sheet on the fan, and the outgoing sheet indexed by the
/// incoming fan coordinate of the reversed direction.
#[derive(Clone, Debug)]
pub struct BoundaryPairFunction {
    pub incoming: FanGrid,
    pub outgoing: FanGrid,
}

impl BoundaryPairFunction {
    /// L²_{|μ|}(∂SM) inner product.
    pub fn dot(&self, other: &Self, w: &[f64]) -> f64 {
        self.incoming.dot(&other.incoming, w) + self.outgoing.dot(&other.outgoing, w)
    }
}

/// A±w: w on ∂₊SM and ±w∘α on ∂₋SM.
pub fn continuation(rays: &FanRays, w: &FanGrid, parity: Parity) -> BoundaryPairFunction {
    let it = w.interpolator();
    // the outgoing point with reversed incoming coordinate (β_i, α_j) scatters back to
    // the reversed exit of the ray from (β_i, α_j)
    let out = rays.scatter.iter().map(|fc| parity.sign() * it.eval(fc.beta, fc.alpha).0).collect();
    BoundaryPairFunction { incoming: w.clone(), outgoing: FanGrid { spec: w.spec, values: out } }
}

/// A*±u = (u ± u∘α)|_{∂₊SM}.
pub fn continuation_adjoint(rays: &FanRays, u: &BoundaryPairFunction, parity: Parity) -> FanGrid {
    let it = u.outgoing.interpolator();
    let values = u
        .incoming
        .values
        .iter()
        .zip(&rays.scatter)
        .map(|(a, fc)| a + parity.sign() * it.eval(fc.beta, fc.alpha).0)
        .collect();
    FanGrid { spec: u.incoming.spec, values }
}

/// A±w at a boundary phase point (incoming or outgoing).
pub fn continuation_at(flow: &Flow, g: &MetricField, w: &FanInterp, parity: Parity, p: &PhasePoint) -> Result<f64> {
    let fc = fan_coordinate_of(g, p);
    if fc.alpha.abs() <= PI / 2.0 {
        return Ok(w.eval(fc.beta, fc.alpha).0);
    }
    let back = backward_fan(flow, g, p)?;
    Ok(parity.sign() * w.eval(back.beta, back.alpha).0)
}
