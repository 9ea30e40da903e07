//! Numerical experiments: adjointness, the transport and Hilbert identities,
//! constructive surjectivity, filtered backprojection and the boundary-rigidity chain.

pub mod adjoint;
pub mod fbp;
pub mod hilbert;
pub mod surjectivity;
pub mod thm1;
pub mod thm3;
pub mod transport;

use crate::boundary::FanSpec;
use crate::geodesic::{Flow, GUARD};
use crate::grid::DiskGrid;
use crate::xray::H_OP;
use serde::{Deserialize, Serialize};

/// Grid sizes shared by all operators: base polar grid, fan and fiber resolution,
/// plus the operator integration step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub nr: usize,
    pub ntheta: usize,
    pub nbeta: usize,
    pub nalpha: usize,
    pub nphi: usize,
    pub guard: f64,
    pub h: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { nr: 64, ntheta: 128, nbeta: 128, nalpha: 64, nphi: 256, guard: GUARD, h: H_OP }
    }
}

impl GridConfig {
    /// Halves every resolution `levels` times and doubles the step accordingly.
    pub fn coarsen(&self, levels: u32) -> Self {
        let f = 1usize << levels;
        GridConfig {
            nr: self.nr / f,
            ntheta: self.ntheta / f,
            nbeta: self.nbeta / f,
            nalpha: self.nalpha / f,
            nphi: self.nphi / f,
            guard: self.guard,
            h: self.h * f as f64,
        }
    }

    pub fn disk(&self) -> DiskGrid {
        DiskGrid::new(self.nr, self.ntheta)
    }

    pub fn fan(&self) -> FanSpec {
        FanSpec::new(self.nbeta, self.nalpha).with_guard(self.guard)
    }

    pub fn flow(&self) -> Flow {
        Flow::with_step(self.h)
    }

    /// Levels coarsest first: `refine` coarsenings down to this grid.
    pub fn ladder(&self, refine: u32) -> Vec<GridConfig> {
        (0..=refine).rev().map(|l| self.coarsen(l)).collect()
    }
}

/// One row of a refinement table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinementRow {
    pub grid: GridConfig,
    pub residual: f64,
    pub lhs_norm: f64,
    pub rhs_norm: f64,
}

/// Residuals of an identity across grid refinements (coarsest first).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub name: String,
    pub metric: String,
    pub rows: Vec<RefinementRow>,
    /// residual(coarse)/residual(fine) per doubling
    pub ratios: Vec<f64>,
    pub tolerance: f64,
    pub min_ratio: f64,
    pub passed: bool,
}

impl IdentityReport {
    pub fn new(name: &str, metric: &str, rows: Vec<RefinementRow>, tolerance: f64, min_ratio: f64) -> Self {
        let ratios: Vec<f64> = rows.windows(2).map(|w| w[0].residual / w[1].residual).collect();
        let fine = rows.last().map(|r| r.residual).unwrap_or(f64::NAN);
        let passed = fine < tolerance && ratios.iter().all(|&r| r >= min_ratio);
        IdentityReport { name: name.into(), metric: metric.into(), rows, ratios, tolerance, min_ratio, passed }
    }

    pub fn residual(&self) -> f64 {
        self.rows.last().map(|r| r.residual).unwrap_or(f64::NAN)
    }

    pub fn monotone(&self) -> bool {
        self.ratios.iter().all(|&r| r > 1.0)
    }
}

/// Fan data w(β, α) = cos(mβ)·cos α·cos²α used by the identity checks.
pub fn tapered_mode(m: u32) -> impl Fn(f64, f64) -> f64 {
    move |b: f64, a: f64| (m as f64 * b).cos() * a.cos().powi(3)
}

/// Relative L² distance of two vectors under weights, normalized by the larger norm.
pub(crate) fn residual(a: &[f64], b: &[f64], w: &[f64]) -> (f64, f64, f64) {
    let (mut d, mut na, mut nb) = (0.0, 0.0, 0.0);
    for i in 0..a.len() {
        d += w[i] * (a[i] - b[i]).powi(2);
        na += w[i] * a[i] * a[i];
        nb += w[i] * b[i] * b[i];
    }
    let scale = na.max(nb).sqrt();
    let r = if scale == 0.0 { d.sqrt() } else { d.sqrt() / scale };
    (r, na.sqrt(), nb.sqrt())
}
