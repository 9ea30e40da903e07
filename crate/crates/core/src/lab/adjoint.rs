//! ⟨If, w⟩_{L²_μ} against ⟨f, I*w⟩_{L²(M)}.

use super::{tapered_mode, GridConfig, IdentityReport, RefinementRow};
use crate::boundary::FanGrid;
use crate::error::Result;
use crate::grid::{bump_fn, DiskGridFunction};
use crate::metric::{MetricField, Vec2};
use crate::xray::{FanRays, SharpMap};

/// Relative mismatch |⟨If,w⟩ − ⟨f,I*w⟩| / |⟨If,w⟩| on one grid.
pub fn adjointness_gap(g: &MetricField, cfg: &GridConfig, f: &dyn Fn(Vec2) -> f64, w: &dyn Fn(f64, f64) -> f64) -> Result<RefinementRow> {
    let flow = cfg.flow();
    let spec = cfg.fan();
    let fg = DiskGridFunction::from_fn(cfg.disk(), f);
    let rays = FanRays::trace(&flow, g, spec)?;
    let wf = FanGrid::from_fn(spec, w);
    let lhs = rays.xray(&fg).dot(&wf, &spec.weights(g));
    let sm = SharpMap::build(&flow, g, cfg.disk(), cfg.nphi)?;
    let bp = sm.backproject(&wf);
    let rhs = fg.dot(&bp.h, &cfg.disk().volume_weights(g));
    Ok(RefinementRow { grid: *cfg, residual: (lhs - rhs).abs() / lhs.abs(), lhs_norm: lhs, rhs_norm: rhs })
}

/// Adjointness at `refine` coarsenings of `cfg` and at `cfg` itself.
pub fn check_adjointness(g: &MetricField, cfg: &GridConfig, refine: u32) -> Result<IdentityReport> {
    let f = bump_fn(Vec2::new(0.2, -0.1), 0.6, 1.0);
    let w = tapered_mode(1);
    let w = |b: f64, a: f64| 1.0 + w(b, a) + 0.5 * (2.0 * b).sin() * a.cos().powi(3) * a.sin();
    let rows = cfg.ladder(refine).iter().map(|c| adjointness_gap(g, c, &f, &w)).collect::<Result<Vec<_>>>()?;
    Ok(IdentityReport::new("adjointness", &g.label, rows, 1e-3, 1.0))
}
