//! Gauge experiment for a pair of metrics with equal boundary distances: after
//! boundary normal gauge the boundary jets and the scattering relations coincide.

use crate::boundary::{boundary_distance_with, recover_boundary_metric, scattering_relation_with, FanCoordinate};
use crate::diffeo::{boundary_normal_gauge, gauge_residual, pullback};
use crate::error::{GeoError, Result};
use crate::geodesic::{Flow, GUARD};
use crate::metric::MetricField;
use crate::util::angle_diff;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Config {
    pub pairs: usize,
    pub seed: u64,
    /// ODE step of the distance precondition (RK4 error ~h⁴ must sit below `distance_tol`)
    pub distance_h: f64,
    /// ODE step for recovery and scattering
    pub h: f64,
    pub distance_tol: f64,
    /// boundary samples for the gauged components
    pub samples: usize,
    /// boundary angles for the Richardson estimate
    pub recovery_points: usize,
    pub fan: usize,
    pub tol: f64,
}

impl Default for Theorem1Config {
    fn default() -> Self {
        Theorem1Config { pairs: 20, seed: 7, distance_h: 2.5e-3, h: 5e-3, distance_tol: 1e-6, samples: 64, recovery_points: 8, fan: 32, tol: 1e-3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Report {
    pub metric1: String,
    pub metric2: String,
    pub config: Theorem1Config,
    /// max |d₁ − d₂| over the random pairs
    pub distance_gap: f64,
    pub gauge_residuals: [f64; 2],
    /// max |g₁'(∂θ,∂θ) − g₂'(∂θ,∂θ)| etc. at r = 1 after gauging
    pub component_gap: f64,
    /// max difference of the recovered |∂_β| between the two metrics
    pub tangential_gap: f64,
    pub recovered: Vec<(f64, f64, f64)>,
    /// max |Δβ| + |Δα| of the scattering relations on the fan
    pub scattering_gap: f64,
    pub passed: bool,
}

/// Max |d₁(β₁,β₂) − d₂(β₁,β₂)| over `pairs` seeded random boundary pairs.
pub fn distance_gap(g1: &MetricField, g2: &MetricField, flow: &Flow, pairs: usize, seed: u64) -> Result<f64> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut gap: f64 = 0.0;
    for _ in 0..pairs {
        let (a, b) = (rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..2.0 * PI));
        let d1 = boundary_distance_with(flow, g1, a, b)?.length;
        let d2 = boundary_distance_with(flow, g2, a, b)?.length;
        gap = gap.max((d1 - d2).abs());
    }
    Ok(gap)
}

/// Errors with DistanceMismatch when the precondition fails.
pub fn require_equal_distances(g1: &MetricField, g2: &MetricField, flow: &Flow, pairs: usize, seed: u64, tol: f64) -> Result<f64> {
    let gap = distance_gap(g1, g2, flow, pairs, seed)?;
    if !(gap < tol) {
        return Err(GeoError::DistanceMismatch { diff: gap });
    }
    Ok(gap)
}

pub fn theorem1_experiment(g1: &MetricField, g2: &MetricField, cfg: &Theorem1Config) -> Result<Theorem1Report> {
    let flow = Flow::with_step(cfg.h);
    let distance_gap = require_equal_distances(g1, g2, &Flow::with_step(cfg.distance_h), cfg.pairs, cfg.seed, cfg.distance_tol)?;

    let phi1 = boundary_normal_gauge(g1)?;
    let phi2 = boundary_normal_gauge(g2)?;
    let gauge_residuals = [gauge_residual(g1, &phi1), gauge_residual(g2, &phi2)];
    let (n1, n2) = (pullback(&phi1, g1), pullback(&phi2, g2));

    let mut component_gap: f64 = 0.0;
    for i in 0..cfg.samples {
        let t = 2.0 * PI * i as f64 / cfg.samples as f64;
        let (a, b) = (n1.polar_components(t, 1.0), n2.polar_components(t, 1.0));
        component_gap = component_gap.max((a.0 - b.0).abs()).max((a.1 - b.1).abs()).max((a.2 - b.2).abs());
    }

    let mut recovered = Vec::with_capacity(cfg.recovery_points);
    let mut tangential_gap: f64 = 0.0;
    for i in 0..cfg.recovery_points {
        let beta = 2.0 * PI * i as f64 / cfg.recovery_points as f64;
        let est = |g: &MetricField| {
            let d = |a: f64, b: f64| boundary_distance_with(&flow, g, a, b).map(|d| d.length);
            recover_boundary_metric(&d, beta)
        };
        let (e1, e2) = (est(&n1)?, est(&n2)?);
        tangential_gap = tangential_gap.max((e1 - e2).abs());
        recovered.push((beta, e1, e2));
    }

    let mut scattering_gap: f64 = 0.0;
    let amax = PI / 2.0 - GUARD;
    for i in 0..cfg.fan {
        let beta = 2.0 * PI * i as f64 / cfg.fan as f64;
        for j in 0..cfg.fan {
            let alpha = -amax + 2.0 * amax * (j as f64 + 0.5) / cfg.fan as f64;
            let fc = FanCoordinate { beta, alpha };
            let s1 = scattering_relation_with(&flow, &n1, fc)?;
            let s2 = scattering_relation_with(&flow, &n2, fc)?;
            scattering_gap = scattering_gap.max(angle_diff(s1.beta, s2.beta).abs() + (s1.alpha - s2.alpha).abs());
        }
    }

    let passed = component_gap < cfg.tol && tangential_gap < cfg.tol && scattering_gap < cfg.tol;
    Ok(Theorem1Report {
        metric1: g1.label.clone(),
        metric2: g2.label.clone(),
        config: *cfg,
        distance_gap,
        gauge_residuals,
        component_gap,
        tangential_gap,
        recovered,
        scattering_gap,
        passed,
    })
}
