//! Constructive surjectivity of I*: given f on the disk, find boundary data w with
//! I*w = f. On an extended disk M₁ we look for h with N₁(φ₁h) = f on M, in the
//! regularized least-squares sense on the disk grid of f, and set w = I₁(φ₁h) on
//! the incoming fan of the unit disk. Matching only on M leaves N₁(φ₁h) free on the collar, which keeps φ₁h
//! bounded there; demanding N₁(φ₁h) = φ₁f̃ on all of M₁ forces an edge layer that
//! no grid resolves.

use super::fbp::{CartesianGrid, RieszFilter};
use super::GridConfig;
use crate::boundary::{fan_phase_point, FanGrid, FanSpec};
use crate::error::{GeoError, Result};
use crate::geodesic::{certify_simple_with, Flow};
use crate::grid::DiskGridFunction;
use crate::metric::{MetricField, Vec2};
use crate::util::{rel_l2, smooth_step};
use crate::xray::{FanRays, SharpMap};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurjectivityConfig {
    /// radius of the extended disk M₁
    pub radius: f64,
    /// φ₁ = 1 for r ≤ plateau, 0 for r ≥ cutoff
    pub plateau: f64,
    pub cutoff: f64,
    /// Cartesian unknown grid: nodes per side over [−R, R]²
    pub nodes: usize,
    /// fan of M₁ (β, α) and ray sample step
    pub nbeta: usize,
    pub nalpha: usize,
    pub step: f64,
    pub tikhonov: f64,
    /// roughness penalty σ on squared differences of φ₁h between neighbouring nodes
    pub smoothing: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SurjectivityConfig {
    fn default() -> Self {
        SurjectivityConfig {
            radius: 1.2,
            plateau: 1.05,
            cutoff: 1.15,
            nodes: 56,
            nbeta: 256,
            nalpha: 128,
            step: 0.02,
            tikhonov: 1e-6,
            smoothing: 1e-6,
            tol: 1e-6,
            max_iter: 500,
        }
    }
}

impl SurjectivityConfig {
    /// Halves the unknown grid and the fan `levels` times.
    pub fn coarsen(&self, levels: u32) -> Self {
        let f = 1usize << levels;
        SurjectivityConfig { nodes: self.nodes / f, nbeta: self.nbeta / f, nalpha: self.nalpha / f, step: self.step * f as f64, ..*self }
    }

    /// φ₁ and its profile: a smooth step from 1 to 0 across [plateau, cutoff].
    pub fn cutoff_fn(&self, x: Vec2) -> f64 {
        let r = x.norm();
        if r <= self.plateau {
            1.0
        } else if r >= self.cutoff {
            0.0
        } else {
            1.0 - smooth_step((r - self.plateau) / (self.cutoff - self.plateau)).0
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurjectivityReport {
    pub iterations: usize,
    /// relative preconditioned residual per iteration
    pub residual_history: Vec<f64>,
    pub monotone: bool,
    pub converged: bool,
    /// ‖I*w − f‖/‖f‖ on the unit disk
    pub relative_error: f64,
    /// the same misfit measured with the solver's own discrete operator
    pub fit_residual: f64,
    pub unknowns: usize,
    pub rays: usize,
    pub stagnation: Option<String>,
    pub passed: bool,
}

/// Sparse ray-sampling operator: quadrature weight times bilinear interpolation
/// onto the masked Cartesian unknowns.
struct RayMatrix {
    start: Vec<usize>,
    col: Vec<u32>,
    val: Vec<f64>,
}

impl RayMatrix {
    fn build(rays: &FanRays, cg: &CartesianGrid, index: &[Option<usize>]) -> Self {
        let d = cg.spacing();
        let mut start = vec![0];
        let (mut col, mut val) = (Vec::new(), Vec::new());
        let mut entries: Vec<(u32, f64)> = Vec::new();
        for n in 0..rays.spec.len() {
            entries.clear();
            for s in rays.ray(n) {
                let u = (s.p.x[0] + cg.half_width) / d;
                let v = (s.p.x[1] + cg.half_width) / d;
                let (j0, i0) = (u.floor() as usize, v.floor() as usize);
                let (tu, tv) = (u - j0 as f64, v - i0 as f64);
                for (di, dj, w) in [(0, 0, (1.0 - tu) * (1.0 - tv)), (0, 1, tu * (1.0 - tv)), (1, 0, (1.0 - tu) * tv), (1, 1, tu * tv)] {
                    let (i, j) = (i0 + di, j0 + dj);
                    if i >= cg.n || j >= cg.n || w == 0.0 {
                        continue;
                    }
                    if let Some(k) = index[i * cg.n + j] {
                        entries.push((k as u32, s.w * w));
                    }
                }
            }
            entries.sort_unstable_by_key(|e| e.0);
            let mut last = u32::MAX;
            for &(k, w) in &entries {
                if k == last {
                    *val.last_mut().unwrap() += w;
                } else {
                    col.push(k);
                    val.push(w);
                    last = k;
                }
            }
            start.push(col.len());
        }
        RayMatrix { start, col, val }
    }

    fn forward(&self, h: &[f64], out: &mut [f64]) {
        for (n, o) in out.iter_mut().enumerate() {
            *o = (self.start[n]..self.start[n + 1]).map(|k| self.val[k] * h[self.col[k] as usize]).sum();
        }
    }

    fn adjoint(&self, y: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (n, yn) in y.iter().enumerate() {
            for k in self.start[n]..self.start[n + 1] {
                out[self.col[k] as usize] += self.val[k] * yn;
            }
        }
    }
}

/// Normal equations of min ½‖E·C·NΦh − f‖²_Ω + ½ε‖h‖²_W + ½σ‖∇_h(Φh)‖².
///
/// N = W⁻¹K with K = BᵀW_μB returns hat-function averages of N₁u at the Cartesian
/// nodes; C = (√g)⁻¹(2 − S)√g, S the bilinear mass stencil, turns them back into
/// point values to fourth order; E is Keys interpolation onto the disk grid of f
/// and Ω its volume weights. All work vectors live on the full Cartesian grid.
struct System {
    b: RayMatrix,
    wmu: Vec<f64>,
    n: usize,
    /// full-grid index of each unknown
    unk: Vec<usize>,
    phi: Vec<f64>,
    /// d²√g on the output nodes, 0 elsewhere
    w: Vec<f64>,
    sqrt_g: Vec<f64>,
    /// rows: disk nodes, entries (full-grid index, weight)
    e: Vec<Vec<(usize, f64)>>,
    omega: Vec<f64>,
    eps: f64,
    smooth: f64,
}

impl System {
    fn k(&self, u: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.wmu.len()];
        self.b.forward(u, &mut y);
        y.iter_mut().zip(&self.wmu).for_each(|(v, w)| *v *= w);
        let mut out = vec![0.0; u.len()];
        self.b.adjoint(&y, &mut out);
        out
    }

    /// (2 − S) on the output nodes.
    fn unmass(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n;
        let at = |i: isize, j: isize| if i < 0 || j < 0 || i >= n as isize || j >= n as isize { 0.0 } else { v[i as usize * n + j as usize] };
        let c = [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0];
        let mut out = vec![0.0; v.len()];
        for i in 0..n {
            for j in 0..n {
                let k = i * n + j;
                if self.w[k] == 0.0 {
                    continue;
                }
                let mut sv = 0.0;
                for (a, ca) in c.iter().enumerate() {
                    for (b, cb) in c.iter().enumerate() {
                        sv += ca * cb * at(i as isize + a as isize - 1, j as isize + b as isize - 1);
                    }
                }
                out[k] = 2.0 * v[k] - sv;
            }
        }
        out
    }

    /// Point values of N₁u at the output nodes from u on the full grid.
    fn point_values(&self, u: &[f64]) -> Vec<f64> {
        let t: Vec<f64> = self.k(u).iter().zip(&self.w).zip(&self.sqrt_g).map(|((v, w), s)| if *w == 0.0 { 0.0 } else { v / w * s }).collect();
        self.unmass(&t).iter().zip(&self.sqrt_g).map(|(v, s)| v / s).collect()
    }

    fn interpolate(&self, t: &[f64]) -> Vec<f64> {
        self.e.iter().map(|row| row.iter().map(|&(k, c)| c * t[k]).sum()).collect()
    }

    fn expand(&self, h: &[f64]) -> Vec<f64> {
        let mut u = vec![0.0; self.n * self.n];
        for (k, &node) in self.unk.iter().enumerate() {
            u[node] = self.phi[k] * h[k];
        }
        u
    }

    /// Transpose of h ↦ E·C·NΦh applied to Ω-weighted disk values.
    fn pull(&self, q: &[f64]) -> Vec<f64> {
        let mut s = vec![0.0; self.n * self.n];
        for (row, (qv, om)) in self.e.iter().zip(q.iter().zip(&self.omega)) {
            for &(k, c) in row {
                s[k] += c * qv * om;
            }
        }
        let s: Vec<f64> = s.iter().zip(&self.sqrt_g).map(|(v, g)| if *g == 0.0 { 0.0 } else { v / g }).collect();
        let s: Vec<f64> = self.unmass(&s).iter().zip(&self.w).zip(&self.sqrt_g).map(|((v, w), g)| if *w == 0.0 { 0.0 } else { v * g / w }).collect();
        let out = self.k(&s);
        self.unk.iter().zip(&self.phi).map(|(&node, p)| p * out[node]).collect()
    }

    /// −Δ_h u with zero exterior values.
    fn neg_laplacian(&self, u: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; u.len()];
        for i in 0..n {
            for j in 0..n {
                let k = i * n + j;
                let mut s = 4.0 * u[k];
                if i > 0 { s -= u[k - n]; }
                if i + 1 < n { s -= u[k + n]; }
                if j > 0 { s -= u[k - 1]; }
                if j + 1 < n { s -= u[k + 1]; }
                out[k] = s;
            }
        }
        out
    }

    fn apply(&self, h: &[f64], out: &mut [f64]) {
        let u = self.expand(h);
        let q = self.interpolate(&self.point_values(&u));
        let p = self.pull(&q);
        let lap = self.neg_laplacian(&u);
        for k in 0..out.len() {
            let node = self.unk[k];
            out[k] = p[k] + self.eps * self.w[node] * h[k] + self.smooth * self.phi[k] * lap[node];
        }
    }
}

/// Masked-grid preconditioner W^{-1/2} R² W^{-1/2}, R the padded Riesz filter
/// √(|ξ|² + k₀²)/4π, an approximate inverse of N.
struct Preconditioner {
    filter: RieszFilter,
    nodes: Vec<usize>,
    inv_sqrt_w: Vec<f64>,
    n2: usize,
}

impl Preconditioner {
    fn apply(&self, r: &[f64], out: &mut [f64]) {
        let mut full = vec![0.0; self.n2];
        for (k, &node) in self.nodes.iter().enumerate() {
            full[node] = r[k] * self.inv_sqrt_w[k];
        }
        let z = self.filter.apply(&self.filter.apply(&full));
        for (k, &node) in self.nodes.iter().enumerate() {
            out[k] = z[node] * self.inv_sqrt_w[k];
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Outcome of a preconditioned conjugate-residual solve.
struct Pcr {
    x: Vec<f64>,
    history: Vec<f64>,
    converged: bool,
}

/// Conjugate residuals in the M-inner product: ‖b − Ax‖_M is minimized over the
/// Krylov space, so the recorded residual never increases.
fn pcr(a: &dyn Fn(&[f64], &mut [f64]), m: &dyn Fn(&[f64], &mut [f64]), b: &[f64], tol: f64, max_iter: usize) -> Pcr {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    m(&r, &mut z);
    let bnorm = dot(&r, &z).sqrt();
    let mut history = vec![1.0];
    if bnorm == 0.0 {
        return Pcr { x, history, converged: true };
    }
    let mut az = vec![0.0; n];
    a(&z, &mut az);
    let mut p = z.clone();
    let mut ap = az.clone();
    let mut q = vec![0.0; n];
    let mut zaz = dot(&z, &az);
    for _ in 0..max_iter {
        m(&ap, &mut q);
        let alpha = zaz / dot(&ap, &q);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
            z[i] -= alpha * q[i];
        }
        let rel = dot(&r, &z).max(0.0).sqrt() / bnorm;
        history.push(rel);
        if rel <= tol {
            return Pcr { x, history, converged: true };
        }
        a(&z, &mut az);
        let zaz_new = dot(&z, &az);
        let beta = zaz_new / zaz;
        zaz = zaz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
            ap[i] = az[i] + beta * ap[i];
        }
    }
    Pcr { x, history, converged: false }
}

/// Result of the extended-disk construction.
pub struct Surjection {
    pub w: FanGrid,
    /// I*w on the unit-disk grid
    pub backprojection: DiskGridFunction,
    pub report: SurjectivityReport,
}

pub fn solve_surjectivity(g: &MetricField, f: &DiskGridFunction, cfg: &GridConfig, sc: &SurjectivityConfig) -> Result<Surjection> {
    let ext = Flow::extended(sc.step, sc.radius);
    let cert = certify_simple_with(g, &Flow::extended(cfg.h.min(0.02), sc.radius), 32, 16);
    if !cert.simple() {
        return Err(GeoError::NonSimpleExtension);
    }
    let spec = cfg.fan();
    let grid = f.grid;
    if f.values().iter().all(|v| *v == 0.0) {
        let report = SurjectivityReport {
            iterations: 0,
            residual_history: vec![],
            monotone: true,
            converged: true,
            relative_error: 0.0,
            fit_residual: 0.0,
            unknowns: 0,
            rays: 0,
            stagnation: None,
            passed: true,
        };
        return Ok(Surjection { w: FanGrid::zeros(spec), backprojection: DiskGridFunction::zeros(grid), report });
    }

    // unknowns: Cartesian nodes where φ₁ > 0; outputs: nodes whose hats the rays cover
    let cg = CartesianGrid { n: sc.nodes, half_width: sc.radius };
    let d = cg.spacing();
    let n2 = cg.len();
    let mut output = vec![None; n2];
    let mut unk = Vec::new();
    for i in 0..cg.n {
        for j in 0..cg.n {
            let r = cg.point(i, j).norm();
            if r < sc.radius - 0.5 * d {
                output[i * cg.n + j] = Some(i * cg.n + j);
            }
            if r < sc.cutoff {
                unk.push(i * cg.n + j);
            }
        }
    }
    let node = |k: usize| cg.point(k / cg.n, k % cg.n);
    let phi: Vec<f64> = unk.iter().map(|&k| sc.cutoff_fn(node(k))).collect();
    let sqrt_g: Vec<f64> = (0..n2).map(|k| if output[k].is_some() { g.g(node(k)).determinant().sqrt() } else { 0.0 }).collect();
    let w: Vec<f64> = sqrt_g.iter().map(|s| d * d * s).collect();
    let e: Vec<Vec<(usize, f64)>> = (0..=grid.nr)
        .flat_map(|i| (0..grid.ntheta).map(move |j| (i, j)))
        .map(|(i, j)| cg.stencil(grid.point(i, j)).into_iter().filter(|&(k, _)| output[k].is_some()).collect())
        .collect();

    let ext_spec = FanSpec::new(sc.nbeta, sc.nalpha).with_guard(cfg.guard).with_radius(sc.radius);
    let rays = FanRays::trace(&ext, g, ext_spec)?;
    let omega = grid.volume_weights(g);
    let sys = System { b: RayMatrix::build(&rays, &cg, &output), wmu: ext_spec.weights(g), n: cg.n, unk: unk.clone(), phi, w, sqrt_g, e, omega: omega.clone(), eps: sc.tikhonov, smooth: sc.smoothing };
    let k0 = 2.0 * std::f64::consts::PI / (2.0 * sc.radius);
    let filter = RieszFilter::shifted(cg, 2, 1.0 / (4.0 * std::f64::consts::PI), k0);
    let inv_sqrt_w = unk.iter().map(|&k| 1.0 / sys.w[k].sqrt()).collect();
    let pre = Preconditioner { filter, nodes: unk.clone(), inv_sqrt_w, n2 };
    let rhs = sys.pull(f.values());
    let sol = pcr(&|x, o| sys.apply(x, o), &|x, o| pre.apply(x, o), &rhs, sc.tol, sc.max_iter);
    let monotone = sol.history.windows(2).all(|p| p[1] <= p[0] * (1.0 + 1e-12));
    let ph = sys.expand(&sol.x);
    let fit_residual = rel_l2(&sys.interpolate(&sys.point_values(&ph)), f.values(), &omega);

    // w = I₁(φ₁h) along the full M₁ geodesic through each unit-disk fan node; cubic
    // interpolation here is markedly more accurate than the bilinear one inside B
    let mut wv = FanGrid::zeros(spec);
    for (n, (_, _, b, a)) in spec.coords().enumerate() {
        let p = fan_phase_point(g, b, a);
        let fwd = ext.line_integral(g, p, |q| cg.interpolate(&ph, q.x))?.0;
        let bwd = ext.line_integral(g, p.reversed(), |q| cg.interpolate(&ph, q.x))?.0;
        wv.values[n] = fwd + bwd;
    }

    let sm = SharpMap::build(&cfg.flow(), g, grid, cfg.nphi)?;
    let bp = sm.backproject(&wv).h;
    let relative_error = rel_l2(bp.values(), f.values(), &omega);
    let last = *sol.history.last().unwrap();
    let report = SurjectivityReport {
        iterations: sol.history.len() - 1,
        monotone,
        converged: sol.converged,
        relative_error,
        fit_residual,
        unknowns: unk.len(),
        rays: ext_spec.len(),
        stagnation: (!sol.converged).then(|| GeoError::CgStagnation { residual: last }.to_string()),
        passed: relative_error < 5e-2 && sol.converged && monotone,
        residual_history: sol.history,
    };
    Ok(Surjection { w: wv, backprojection: bp, report })
}
