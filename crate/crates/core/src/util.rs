//! Small numerical helpers shared across modules.

use std::f64::consts::PI;

/// Wraps an angle into [0, 2π).
pub fn wrap_angle(a: f64) -> f64 {
    let t = a.rem_euclid(2.0 * PI);
    if t >= 2.0 * PI {
        0.0
    } else {
        t
    }
}

/// Signed angular difference a − b in (−π, π].
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    if d > PI {
        d - 2.0 * PI
    } else {
        d
    }
}

fn psi(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// C∞ step: 0 for t ≤ 0, 1 for t ≥ 1. Returns (S, S').
pub fn smooth_step(t: f64) -> (f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0);
    }
    if t >= 1.0 {
        return (1.0, 0.0);
    }
    let a = psi(t);
    let b = psi(1.0 - t);
    let da = a / (t * t);
    let db = -b / ((1.0 - t) * (1.0 - t));
    let s = a + b;
    (a / s, (da * b - a * db) / (s * s))
}

/// Compactly supported C⁷ bump (1 − s²)⁸ on (lo, hi), s the centred coordinate, with
/// peak 1 at the midpoint. Returns (b, b', b'').
pub fn bump(r: f64, lo: f64, hi: f64) -> (f64, f64, f64) {
    let k = 2.0 / (hi - lo);
    let s = (2.0 * r - lo - hi) / (hi - lo);
    if s.abs() >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let q = 1.0 - s * s;
    let q6 = q.powi(6);
    let b = q6 * q * q;
    let db = -16.0 * s * q6 * q;
    let d2b = -16.0 * q6 * q + 224.0 * s * s * q6;
    (b, k * db, k * k * d2b)
}

/// Quadrature weights for samples at times t[0..=n] that are uniform except
/// possibly the last interval. Simpson on the uniform part (3/8 rule absorbs an
/// odd count), and the final partial interval integrated through the last
/// three samples.
pub fn trace_weights(t: &[f64], w: &mut Vec<f64>) {
    w.clear();
    w.resize(t.len(), 0.0);
    let n = t.len();
    if n < 2 {
        return;
    }
    if n == 2 {
        let h = t[1] - t[0];
        w[0] = 0.5 * h;
        w[1] = 0.5 * h;
        return;
    }
    let h = t[1] - t[0];
    let last = t[n - 1] - t[n - 2];
    // number of uniform intervals
    let partial = (last - h).abs() > 1e-12 * h.max(1e-300);
    let m = if partial { n - 2 } else { n - 1 };
    if partial && m == 1 && last >= 0.1 * h {
        // one full step and a tail: the quadratic through all three samples
        let (a, b, c) = (t[0], t[1], t[2]);
        let q = (c - a) * (c - a) * (c - a);
        let s = (c - a) / 6.0;
        w[0] = s * (2.0 - last / h);
        w[1] = s * q / ((c - a) * h * last);
        w[2] = s * (2.0 - h / last);
        let _ = b;
        return;
    }
    uniform_weights(h, m, w);
    if partial {
        // quadratic through the last three samples, integrated over the last interval
        let p = t[n - 3] - t[n - 2];
        let d = last;
        w[n - 3] += -d * d * d / (6.0 * p * (p - d));
        w[n - 2] += -d * d / (6.0 * p) + d / 2.0;
        w[n - 1] += (d * d / 3.0 - p * d / 2.0) / (d - p);
    }
}

fn uniform_weights(h: f64, m: usize, w: &mut [f64]) {
    match m {
        0 => {}
        1 => {
            w[0] += 0.5 * h;
            w[1] += 0.5 * h;
        }
        _ => {
            let mut start = 0;
            if m % 2 == 1 {
                let c = 3.0 * h / 8.0;
                w[0] += c;
                w[1] += 3.0 * c;
                w[2] += 3.0 * c;
                w[3] += c;
                start = 3;
            }
            let mut i = start;
            while i + 2 <= m {
                let c = h / 3.0;
                w[i] += c;
                w[i + 1] += 4.0 * c;
                w[i + 2] += c;
                i += 2;
            }
        }
    }
}


/// Composite Simpson weights on n+1 uniform nodes (n even) spanning length L.
pub fn simpson_weights(n: usize, len: f64) -> Vec<f64> {
    assert!(n >= 2 && n.is_multiple_of(2), "simpson needs an even interval count");
    let h = len / n as f64;
    (0..=n)
        .map(|i| {
            let c = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c * h / 3.0
        })
        .collect()
}

/// Solves a Newton iteration for a scalar monotone map.
pub fn newton_scalar(mut x: f64, target: f64, f: impl Fn(f64) -> (f64, f64)) -> f64 {
    for _ in 0..60 {
        let (v, d) = f(x);
        let step = (v - target) / d;
        x -= step;
        if step.abs() < 1e-15 * (1.0 + x.abs()) {
            break;
        }
    }
    x
}

/// Relative L² mismatch ‖a − b‖/‖b‖ under nonnegative weights.
pub fn rel_l2(a: &[f64], b: &[f64], w: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..a.len() {
        num += w[i] * (a[i] - b[i]).powi(2);
        den += w[i] * b[i] * b[i];
    }
    if den == 0.0 {
        return num.sqrt();
    }
    (num / den).sqrt()
}

const GK_X: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];
const GK_WK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const GK_WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = GK_WK[7] * fc;
    let mut g = GK_WG[3] * fc;
    for i in 0..7 {
        let s = f(c - h * GK_X[i]) + f(c + h * GK_X[i]);
        k += GK_WK[i] * s;
        if i % 2 == 1 {
            g += GK_WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) quadrature on [a, b] to absolute tolerance `tol`.
pub fn integrate_adaptive(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (v, e) = gk15(f, a, b);
        // the rounding floor keeps smooth pieces from chasing a halved tolerance
        if e <= tol || e <= 1e-13 * v.abs() || depth == 0 {
            return v;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, 0.5 * tol, depth - 1) + rec(f, m, b, 0.5 * tol, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    rec(f, a, b, tol, 30)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adaptive_quadrature_handles_log_singularity() {
        // ∫_0^1 ln x dx = −1
        let v = integrate_adaptive(&mut |x: f64| if x > 0.0 { x.ln() } else { 0.0 }, 0.0, 1.0, 1e-12);
        assert!((v + 1.0).abs() < 1e-10, "{v}");
        let v = integrate_adaptive(&mut |x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-13);
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn trace_weights_integrate_cubics() {
        for n_uniform in 1..9 {
            let h = 0.1;
            for &tail in &[0.0, 0.03, 0.1, 1e-9] {
                let mut t: Vec<f64> = (0..=n_uniform).map(|i| i as f64 * h).collect();
                if tail > 0.0 {
                    t.push(n_uniform as f64 * h + tail);
                }
                let mut w = Vec::new();
                trace_weights(&t, &mut w);
                let end = *t.last().unwrap();
                let exact = end * end / 2.0 + end;
                let s: f64 = t.iter().zip(&w).map(|(x, w)| w * (x + 1.0)).sum();
                assert!((s - exact).abs() < 1e-12, "linear n={n_uniform} tail={tail}");
                let q: f64 = t.iter().zip(&w).map(|(x, w)| w * x * x).sum();
                if t.len() >= 3 && (n_uniform > 1 || tail == 0.0 || tail >= 0.1 * h) {
                    assert!((q - end.powi(3) / 3.0).abs() < 1e-12, "quadratic n={n_uniform} tail={tail}");
                }
            }
        }
    }

    #[test]
    fn smooth_step_derivative() {
        for i in 1..20 {
            let t = i as f64 / 20.0;
            let (_, d) = smooth_step(t);
            let fd = (smooth_step(t + 1e-6).0 - smooth_step(t - 1e-6).0) / 2e-6;
            assert!((d - fd).abs() < 1e-6);
        }
    }

    #[test]
    fn bump_derivatives() {
        for i in 1..30 {
            let r = 0.2 + 0.6 * i as f64 / 30.0;
            let (_, d, d2) = bump(r, 0.2, 0.8);
            let e = 1e-5;
            let fd = (bump(r + e, 0.2, 0.8).0 - bump(r - e, 0.2, 0.8).0) / (2.0 * e);
            let fd2 = (bump(r + e, 0.2, 0.8).1 - bump(r - e, 0.2, 0.8).1) / (2.0 * e);
            assert!((d - fd).abs() < 1e-6);
            assert!((d2 - fd2).abs() < 1e-4);
        }
    }
}
