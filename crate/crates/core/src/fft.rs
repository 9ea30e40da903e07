//! Real periodic transforms on fiber circles and boundary angles.

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Forward/inverse FFT pair for real periodic samples, normalized so that
/// û_k = (1/N) Σ u_j e^{−2πijk/N}.
#[derive(Clone)]
pub struct RealFft {
    pub n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl RealFft {
    pub fn new(n: usize) -> Self {
        let mut p = FftPlanner::new();
        RealFft { n, fwd: p.plan_fft_forward(n), inv: p.plan_fft_inverse(n) }
    }

    pub fn spectrum(&self, u: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = u.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.fwd.process(&mut buf);
        let s = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|c| *c *= s);
        buf
    }

    /// Real part of the synthesis Σ û_k e^{2πijk/N}.
    pub fn synthesize(&self, c: &[Complex64]) -> Vec<f64> {
        let mut buf = c.to_vec();
        self.inv.process(&mut buf);
        buf.iter().map(|z| z.re).collect()
    }
}

/// Signed frequency of FFT bin k; the Nyquist bin maps to 0.
#[inline]
pub fn signed_mode(k: usize, n: usize) -> i64 {
    if 2 * k == n {
        0
    } else if 2 * k < n {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Evaluates the trigonometric interpolant with coefficients c at angle θ (the
/// Nyquist bin is split symmetrically).
pub fn trig_eval(c: &[Complex64], theta: f64) -> f64 {
    let n = c.len();
    let mut s = c[0].re;
    for k in 1..n.div_ceil(2) {
        let e = Complex64::from_polar(1.0, k as f64 * theta);
        s += 2.0 * (c[k] * e).re;
    }
    if n.is_multiple_of(2) {
        s += c[n / 2].re * (n as f64 / 2.0 * theta).cos();
    }
    s
}

/// In-place 2D complex transform of an n×n row-major array (unnormalized both ways).
pub struct Fft2 {
    pub n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut p = FftPlanner::new();
        Fft2 { n, fwd: p.plan_fft_forward(n), inv: p.plan_fft_inverse(n) }
    }

    pub fn process(&self, buf: &mut [Complex64], inverse: bool) {
        let n = self.n;
        let plan = if inverse { &self.inv } else { &self.fwd };
        plan.process(buf);
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            for i in 0..n {
                col[i] = buf[i * n + j];
            }
            plan.process(&mut col);
            for i in 0..n {
                buf[i * n + j] = col[i];
            }
        }
    }
}
