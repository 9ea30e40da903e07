use crate::config::{Command, IdentityKind, RunConfig};
use crate::output::{refinement_svg, Outputs};
use geolab::boundary::{boundary_distance_with, scattering_relation_with, FanCoordinate};
use geolab::geodesic::certify_simple_with;
use geolab::grid::{bump_fn, AnalyticField, DiskGridFunction};
use geolab::lab::fbp::{check_fbp, check_normal_oracle};
use geolab::lab::surjectivity::{solve_surjectivity, SurjectivityConfig};
use geolab::lab::thm1::{theorem1_experiment, Theorem1Config};
use geolab::lab::thm3::{check_conjugate_identity, theorem3_experiment, Theorem3Config};
use geolab::lab::transport::{check_transport_analytic, check_transport_identity, default_bump};
use geolab::lab::{adjoint::check_adjointness, hilbert::check_hilbert_identity, IdentityReport};
use geolab::laplace::{BoundaryFunction, LaplaceSolver};
use geolab::metric::{MetricKind, Vec2};
use geolab::spec::{DiffeoSpec, MetricSpec};
use geolab::xray::{normal_operator, FanRays};
use geolab::{pullback, GeoError, MetricField};
use rand::{Rng, SeedableRng};
use serde::Serialize;
use serde_json::{json, Value};
use std::f64::consts::PI;

/// One in-run assertion.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `measured < tolerance`.
    fn below(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Check { name: name.into(), measured, tolerance, passed: measured < tolerance }
    }

    fn flag(name: impl Into<String>, passed: bool) -> Self {
        Check { name: name.into(), measured: f64::from(u8::from(passed)), tolerance: 1.0, passed }
    }
}

pub enum Failure {
    /// bad flags or specification: exit 1
    Config(String),
    Io(std::io::Error),
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

/// Result payload and assertions of a run. A numerical error inside an
/// experiment becomes a failed check rather than an abort.
pub struct Outcome {
    pub result: Value,
    pub checks: Vec<Check>,
}

type Run = Result<Outcome, Failure>;

fn metric(cfg: &RunConfig) -> Result<MetricField, Failure> {
    MetricSpec::parse(&cfg.metric).and_then(|m| m.build()).map_err(|e| Failure::Config(e.to_string()))
}

fn errored(e: GeoError) -> Run {
    if let GeoError::InvalidSpec(m) = e {
        return Err(Failure::Config(m));
    }
    Ok(Outcome { result: json!({ "error": e.to_string() }), checks: vec![Check::flag("completed", false)] })
}

macro_rules! attempt {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(e) => return errored(e),
        }
    };
}

fn identity_checks(rep: &IdentityReport) -> Vec<Check> {
    let mut c = vec![Check::below(format!("{} residual", rep.name), rep.residual(), rep.tolerance)];
    for (i, r) in rep.ratios.iter().enumerate() {
        c.push(Check { name: format!("{} ratio {}", rep.name, i + 1), measured: *r, tolerance: rep.min_ratio, passed: *r >= rep.min_ratio });
    }
    c
}

fn write_identity(out: &mut Outputs, cfg: &RunConfig, stem: &str, rep: &IdentityReport) -> std::io::Result<()> {
    out.refinement(&format!("{stem}.csv"), rep)?;
    if cfg.plots {
        out.text(&format!("{stem}.svg"), &refinement_svg(rep))?;
    }
    Ok(())
}

pub fn run(cfg: &RunConfig, out: &mut Outputs) -> Run {
    match cfg.command {
        Command::Certify => certify(cfg),
        Command::Distance => distance(cfg, out),
        Command::Scatter => scatter(cfg, out),
        Command::Xray => xray(cfg, out),
        Command::Normal => normal(cfg, out),
        Command::Dn => dn(cfg, out),
        Command::Identity { kind } => identity(cfg, kind, out),
        Command::Surjectivity => surjectivity(cfg, out),
        Command::Fbp => fbp(cfg),
        Command::Thm1 => thm1(cfg, out),
        Command::Thm3 => thm3(cfg, out),
        Command::Rerun { .. } => Err(Failure::Config("a rerun cannot be rerun".into())),
    }
}

fn certify(cfg: &RunConfig) -> Run {
    let g = metric(cfg)?;
    let rep = certify_simple_with(&g, &cfg.grid.flow(), (cfg.grid.nbeta / 4).max(8), (cfg.grid.nalpha / 4).max(4));
    let checks = vec![Check::flag("convex", rep.convex), Check::flag("nontrapping", rep.nontrapping), Check::flag("no_conjugate", rep.no_conjugate)];
    Ok(Outcome { result: json!({ "metric": g.label, "simplicity": rep }), checks })
}

fn distance(cfg: &RunConfig, out: &mut Outputs) -> Run {
    let g = metric(cfg)?;
    let flow = cfg.grid.flow();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rows = Vec::with_capacity(cfg.pairs);
    let mut asym: f64 = 0.0;
    let mut oracle: f64 = 0.0;
    for _ in 0..cfg.pairs {
        let (a, b) = (rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..2.0 * PI));
        let d = attempt!(boundary_distance_with(&flow, &g, a, b));
        let back = attempt!(boundary_distance_with(&flow, &g, b, a));
        asym = asym.max((d.length - back.length).abs());
        if g.kind == MetricKind::Euclidean {
            oracle = oracle.max((d.length - 2.0 * ((a - b) / 2.0).sin().abs()).abs());
        }
        rows.push(vec![a, b, d.length, d.alpha, f64::from(u8::from(d.fallback))]);
    }
    out.csv("distances.csv", &["beta1", "beta2", "length", "alpha", "fallback"], rows)?;
    let mut checks = vec![Check::below("symmetry", asym, 1e-6)];
    if g.kind == MetricKind::Euclidean {
        checks.push(Check::below("chord oracle", oracle, 1e-8));
    }
    Ok(Outcome { result: json!({ "metric": g.label, "pairs": cfg.pairs, "max_asymmetry": asym }), checks })
}

fn scatter(cfg: &RunConfig, out: &mut Outputs) -> Run {
    let g = metric(cfg)?;
    let flow = cfg.grid.flow();
    let spec = cfg.grid.fan();
    let mut rows = Vec::with_capacity(spec.len());
    let mut involution: f64 = 0.0;
    for (_, _, beta, alpha) in spec.coords() {
        let s = attempt!(scattering_relation_with(&flow, &g, FanCoordinate { beta, alpha }));
        let back = attempt!(scattering_relation_with(&flow, &g, FanCoordinate { beta: s.beta, alpha: s.alpha }));
        involution = involution.max(geolab::util::angle_diff(back.beta, beta).abs() + (back.alpha - alpha).abs());
        rows.push(vec![beta, alpha, s.beta, s.alpha, s.tau]);
    }
    out.csv("scattering.csv", &["beta", "alpha", "beta_out", "alpha_out", "tau"], rows)?;
    Ok(Outcome { result: json!({ "metric": g.label, "fan": spec }), checks: vec![Check::below("involution", involution, 1e-6)] })
}

fn xray(cfg: &RunConfig, out: &mut Outputs) -> Run {
    let g = metric(cfg)?;
    let spec = cfg.grid.fan();
    let f = DiskGridFunction::from_fn(cfg.grid.disk(), default_bump());
    let rays = attempt!(FanRays::trace(&cfg.grid.flow(), &g, spec));
    let proj = rays.xray(&f);
    out.csv("xray.csv", &["beta", "alpha", "If"], spec.coords().zip(&proj.values).map(|((_, _, b, a), v)| vec![b, a, *v]))?;
    let rep = attempt!(check_adjointness(&g, &cfg.grid, cfg.refine.unwrap_or(2)));
    write_identity(out, cfg, "adjointness", &rep)?;
    let mut checks = vec![Check::below("adjointness", rep.residual(), rep.tolerance)];
    checks.push(Check::flag("adjointness monotone", rep.monotone()));
    Ok(Outcome { result: json!({ "metric": g.label, "adjointness": rep }), checks })
}

fn normal(cfg: &RunConfig, out: &mut Outputs) -> Run {
    let g = metric(cfg)?;
    let disk = cfg.grid.disk();
    let b = bump_fn(Vec2::new(0.15, -0.1), 0.6, 1.0);
    let field = AnalyticField { f: b, grad: |_| Vec2::zeros() };
    let n = attempt!(normal_operator(&cfg.grid.flow(), &g, &field, disk, cfg.grid.nphi));
    let rows = (0..=disk.nr).flat_map(|i| (0..disk.ntheta).map(move |j| (i, j))).map(|(i, j)| vec![disk.r(i), disk.theta(j), n.at(i, j)]);
    out.csv("normal.csv", &["r", "theta", "Nf"], rows)?;
    let mut checks = Vec::new();
    let mut result = json!({ "metric": g.label });
    if g.kind == MetricKind::Euclidean {
        let rep = attempt!(check_normal_oracle(disk, cfg.grid.nphi));
        checks.push(Check::below("convolution oracle", rep.relative_error, 1e-2));
        result["oracle"] = json!(rep);
    }
    Ok(Outcome { result, checks })
}

fn dn(cfg: &RunConfig, out: &mut Outputs) -> Run {
    let g = metric(cfg)?;
    let disk = cfg.grid.disk();
    let solver = LaplaceSolver::new(&g, disk);
    let modes = cfg.modes.unwrap_or(8);
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for k in 1..=modes {
        let (l, _) = attempt!(solver.dn(&BoundaryFunction::mode(disk.ntheta, k, false)));
        let (a, b) = l.mode_pair(k as usize);
        if g.kind == MetricKind::Euclidean {
            worst = worst.max((a + k as f64).abs() / k as f64);
        }
        rows.push(vec![k as f64, a, b]);
    }
    out.csv("dn_spectrum.csv", &["k", "cos_coefficient", "sin_coefficient"], rows)?;

    // symmetry in the boundary arc-length pairing
    let f = BoundaryFunction::from_fn(disk.ntheta, |t| t.cos() + 0.5 * (2.0 * t).sin());
    let h = BoundaryFunction::from_fn(disk.ntheta, |t| t.sin() + (3.0 * t).cos());
    let (lf, _) = attempt!(solver.dn(&f));
    let (lh, _) = attempt!(solver.dn(&h));
    let asym = (lf.dot(&h, &g) - f.dot(&lh, &g)).abs() / (lf.norm(&g) * h.norm(&g));
    let mut checks = vec![Check::below("symmetry", asym, 1e-2)];
    if g.kind == MetricKind::Euclidean {
        checks.push(Check::below("spectrum -k", worst, 1e-2));
    }
    Ok(Outcome { result: json!({ "metric": g.label, "modes": modes, "asymmetry": asym }), checks })
}

fn identity(cfg: &RunConfig, kind: IdentityKind, out: &mut Outputs) -> Run {
    let g = metric(cfg)?;
    let (reports, stem) = match kind {
        IdentityKind::Transport => {
            let bump = attempt!(check_transport_identity(&g, &cfg.grid, cfg.refine.unwrap_or(2), &default_bump()));
            let linear = AnalyticField { f: |x: Vec2| x[0], grad: |_| Vec2::new(1.0, 0.0) };
            let analytic = attempt!(check_transport_analytic(&g, &cfg.grid, &linear));
            (vec![bump, analytic], ["transport_bump", "transport_linear"].as_slice())
        }
        IdentityKind::Hilbert => (vec![attempt!(check_hilbert_identity(&g, &cfg.grid, cfg.refine.unwrap_or(1), 2))], ["hilbert"].as_slice()),
        IdentityKind::Conjugate => {
            let k = cfg.modes.unwrap_or(1);
            let rep = attempt!(check_conjugate_identity(&g, &cfg.grid, &SurjectivityConfig::default(), cfg.refine.unwrap_or(1), k, false));
            (vec![rep], ["conjugate"].as_slice())
        }
    };
    let mut checks = Vec::new();
    for (rep, stem) in reports.iter().zip(stem) {
        write_identity(out, cfg, stem, rep)?;
        checks.extend(identity_checks(rep));
    }
    Ok(Outcome { result: json!({ "metric": g.label, "reports": reports }), checks })
}

fn surjectivity(cfg: &RunConfig, out: &mut Outputs) -> Run {
    let g = metric(cfg)?;
    let disk = cfg.grid.disk();
    let f = DiskGridFunction::from_fn(disk, bump_fn(Vec2::zeros(), 0.7, 1.0));
    let s = attempt!(solve_surjectivity(&g, &f, &cfg.grid, &SurjectivityConfig::default()));
    let rows = (0..=disk.nr).flat_map(|i| (0..disk.ntheta).map(move |j| (i, j))).map(|(i, j)| vec![disk.r(i), disk.theta(j), f.at(i, j), s.backprojection.at(i, j)]);
    out.csv("backprojection.csv", &["r", "theta", "f", "Istar_w"], rows)?;
    let spec = s.w.spec;
    out.csv("w.csv", &["beta", "alpha", "w"], spec.coords().zip(&s.w.values).map(|((_, _, b, a), v)| vec![b, a, *v]))?;
    out.csv("residual_history.csv", &["iteration", "residual"], s.report.residual_history.iter().enumerate().map(|(i, r)| vec![i as f64, *r]))?;
    let r = &s.report;
    let checks = vec![
        Check::below("relative error", r.relative_error, 5e-2),
        Check { name: "iterations".into(), measured: r.iterations as f64, tolerance: 500.0, passed: r.converged && r.iterations < 500 },
        Check::flag("monotone residual", r.monotone),
    ];
    Ok(Outcome { result: json!({ "metric": g.label, "report": r }), checks })
}

fn fbp(cfg: &RunConfig) -> Run {
    let g = metric(cfg)?;
    if g.kind != MetricKind::Euclidean {
        return Err(Failure::Config("fbp requires kind:euclidean".into()));
    }
    let rep = check_fbp(cfg.grid.disk(), 0.2);
    let checks = vec![Check::below("reconstruction", rep.relative_error, 5e-2), Check::below("filter constant", rep.validation_error, 5e-2)];
    Ok(Outcome { result: json!({ "report": rep }), checks })
}

fn diffeo(cfg: &RunConfig) -> Result<geolab::DiskDiffeo, Failure> {
    DiffeoSpec::parse(&cfg.psi).and_then(|d| d.build()).map_err(|e| Failure::Config(e.to_string()))
}

fn thm1(cfg: &RunConfig, out: &mut Outputs) -> Run {
    let g1 = metric(cfg)?;
    let psi = diffeo(cfg)?;
    let g2 = pullback(&psi, &g1);
    let tc = Theorem1Config { pairs: cfg.pairs, seed: cfg.seed, h: cfg.grid.h.min(5e-3), ..Default::default() };
    let rep = match theorem1_experiment(&g1, &g2, &tc) {
        Ok(r) => r,
        Err(GeoError::DistanceMismatch { diff }) => {
            let checks = vec![Check::below("equal boundary distances", diff, tc.distance_tol)];
            return Ok(Outcome { result: json!({ "metric": g1.label, "diffeo": psi.label, "distance_gap": diff }), checks });
        }
        Err(e) => return errored(e),
    };
    out.csv("recovered.csv", &["beta", "metric1", "metric2"], rep.recovered.iter().map(|&(b, a, c)| vec![b, a, c]))?;
    let checks = vec![
        Check::below("equal boundary distances", rep.distance_gap, tc.distance_tol),
        Check::below("gauged components", rep.component_gap, tc.tol),
        Check::below("recovered tangential metric", rep.tangential_gap, tc.tol),
        Check::below("scattering relations", rep.scattering_gap, tc.tol),
    ];
    Ok(Outcome { result: json!(rep), checks })
}

fn thm3(cfg: &RunConfig, out: &mut Outputs) -> Run {
    let g = metric(cfg)?;
    let psi = diffeo(cfg)?;
    let d = Theorem3Config::default();
    let tc = Theorem3Config { grid: cfg.grid, modes: cfg.modes.unwrap_or(d.modes), refine: cfg.refine.unwrap_or(d.refine), pairs: cfg.pairs, seed: cfg.seed, ..d };
    let rep = attempt!(theorem3_experiment(&g, &psi, &tc));
    let rows = rep.modes.iter().map(|m| {
        vec![m.k as f64, f64::from(u8::from(m.sine)), m.loop_residual, m.surjectivity_error, m.identity_residuals.last().copied().unwrap_or(f64::NAN), m.cr_residual, m.cr_reference, m.dn_error]
    });
    out.csv("modes.csv", &["k", "sine", "loop_residual", "surjectivity_error", "identity_residual", "cr_residual", "cr_reference", "dn_error"], rows)?;
    write_identity(out, cfg, "conjugate_identity", &rep.identity)?;
    let mut checks: Vec<Check> = rep.stages.iter().map(|s| Check { name: s.name.clone(), measured: s.measured, tolerance: s.tolerance, passed: s.passed }).collect();
    checks.extend(rep.identity.ratios.iter().enumerate().map(|(i, r)| Check { name: format!("identity ratio {}", i + 1), measured: *r, tolerance: tc.min_ratio, passed: *r >= tc.min_ratio }));
    Ok(Outcome { result: json!(rep), checks })
}
