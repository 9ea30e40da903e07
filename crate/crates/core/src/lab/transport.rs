//! I(Xf) = −A*₋f⁰ on the incoming fan.

use super::{residual, GridConfig, IdentityReport, RefinementRow};
use crate::boundary::{boundary_point, FanGrid};
use crate::error::Result;
use crate::grid::{DiskGridFunction, ScalarField};
use crate::metric::{MetricField, Vec2};
use crate::xray::{continuation_adjoint, BoundaryPairFunction, FanRays, Parity};

/// Both sides of the transport identity on one fan.
pub fn transport_sides(rays: &FanRays, f: &dyn ScalarField) -> (FanGrid, FanGrid) {
    let spec = rays.spec;
    // Xf(x, v) = df(v)
    let lhs = rays.integrate(|p| f.gradient(p.x).dot(&p.v));
    let f0 = FanGrid::from_fn(spec, |b, _| f.value(boundary_point(spec.radius, b)));
    let pair = BoundaryPairFunction { incoming: f0.clone(), outgoing: f0 };
    let mut rhs = continuation_adjoint(rays, &pair, Parity::Odd);
    rhs.values.iter_mut().for_each(|v| *v = -*v);
    (lhs, rhs)
}

pub fn transport_row(g: &MetricField, cfg: &GridConfig, f: &dyn ScalarField) -> Result<RefinementRow> {
    let rays = FanRays::trace(&cfg.flow(), g, cfg.fan())?;
    let (lhs, rhs) = transport_sides(&rays, f);
    let (r, a, b) = residual(&lhs.values, &rhs.values, &cfg.fan().weights(g));
    Ok(RefinementRow { grid: *cfg, residual: r, lhs_norm: a, rhs_norm: b })
}

/// Transport identity for a field sampled on each refinement level's disk grid.
pub fn check_transport_identity(g: &MetricField, cfg: &GridConfig, refine: u32, f: &dyn Fn(Vec2) -> f64) -> Result<IdentityReport> {
    let rows = cfg
        .ladder(refine)
        .iter()
        .map(|c| transport_row(g, c, &DiskGridFunction::from_fn(c.disk(), f)))
        .collect::<Result<Vec<_>>>()?;
    Ok(IdentityReport::new("transport", &g.label, rows, 5e-3, 1.8))
}

/// Single-level check for an analytic field (no sampling error).
pub fn check_transport_analytic(g: &MetricField, cfg: &GridConfig, f: &dyn ScalarField) -> Result<IdentityReport> {
    let row = transport_row(g, cfg, f)?;
    Ok(IdentityReport::new("transport", &g.label, vec![row], 1e-6, 1.8))
}

/// Default smooth test field: an off-centre bump whose support reaches the boundary.
pub fn default_bump() -> impl Fn(Vec2) -> f64 + Clone {
    crate::grid::bump_fn(Vec2::new(0.3, 0.2), 1.2, 1.0)
}
