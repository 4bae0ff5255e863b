//! Convolution of a line function with the kernel: the `a`-harmonic
//! extension off the line `x_n = y = 0` that decays at infinity.
//!
//! With `W(s)` the spherical mean of `v - v(x')` at radius `s` and
//! `e = (n - 1 - a) / 2`, unit mass gives
//! `U - v(x') = C |S| rho^{-a} int_0^inf s^{n-2} (rho^2 + s^2)^{-e} W(s) ds`.
//! Beyond the support `W` is the constant `-v(x')` and the tail integral is
//! done in the angle `s = rho tan t`.

use std::f64::consts::PI;

use super::kernel::{sphere_area, KernelSpec};
use super::line::LineFunction;
use crate::error::{invalid, Result};
use crate::field::Field;
use crate::quadrature::{adaptive, GaussJacobi};

/// `int_lo^{pi/2} sin^p t cos^q t dt` for `q > -1`.
pub(crate) fn trig_tail(p: i32, q: f64, lo: f64) -> f64 {
    let hi = PI / 2.0;
    if lo >= hi {
        return 0.0;
    }
    let rule = GaussJacobi::cached(48, q, 0.0);
    rule.integrate(lo, hi, |t| {
        let d = hi - t;
        let ratio = if d < 1e-8 { 1.0 } else { d.sin() / d };
        t.sin().powi(p) * ratio.powf(q)
    })
}

#[derive(Debug, Clone)]
pub struct Extension {
    pub kernel: KernelSpec,
    pub v: LineFunction,
    /// Relative tolerance of the radial integrals.
    pub tol: f64,
}

/// Extension of `v` by convolution with the normalized kernel.
pub fn extend(kernel: &KernelSpec, v: &LineFunction) -> Result<Extension> {
    if v.dim != kernel.line_dim() {
        return invalid(format!("line function has dimension {}, kernel expects {}", v.dim, kernel.line_dim()));
    }
    if !v.support.is_finite() {
        return invalid("line functions must be compactly supported to be extended");
    }
    if !kernel.normalized {
        return invalid("extension needs the unit-mass kernel");
    }
    Ok(Extension { kernel: *kernel, v: v.clone(), tol: 1e-11 })
}

impl Extension {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    fn breaks(&self, x: &[f64], rho: f64) -> Vec<f64> {
        let mut b = self.v.kinks_around(x);
        b.extend((-1..=6).map(|k| rho * 10f64.powi(k)));
        b
    }

    /// Returns `(U - v(x'), d_rho U)`; the derivative only when asked.
    fn integrals(&self, x: &[f64], rho: f64, derivative: bool) -> (f64, f64) {
        let k = &self.kernel;
        let a = k.a;
        let d = k.line_dim() as i32;
        let e = (d as f64 - a) / 2.0;
        let v0 = self.v.eval(x);
        let reach = self.v.support + x.iter().map(|t| t * t).sum::<f64>().sqrt();
        let breaks = self.breaks(x, rho);
        let w = |s: f64| self.v.average(x, s) - v0;
        let scale = v0.abs().max(1e-300);
        let near_i = adaptive(
            |s| s.powi(d - 1) * (rho * rho + s * s).powf(-e) * w(s),
            0.0,
            reach,
            &breaks,
            1e-15 * scale * rho.powf(a),
            self.tol,
            4000,
        )
        .value;
        let t0 = (reach / rho).atan();
        let tail_i = -v0 * rho.powf(a) * trig_tail(d - 1, -1.0 - a, t0);
        let pref = k.c * sphere_area(d as usize);
        let value = pref * rho.powf(-a) * (near_i + tail_i);
        if !derivative {
            return (value, 0.0);
        }
        let near_j = adaptive(
            |s| s.powi(d - 1) * (rho * rho + s * s).powf(-e - 1.0) * w(s),
            0.0,
            reach,
            &breaks,
            1e-15 * scale * rho.powf(a - 2.0),
            self.tol,
            4000,
        )
        .value;
        let tail_j = -v0 * rho.powf(a - 2.0) * trig_tail(d - 1, 1.0 - a, t0);
        let dr = pref * (-a * rho.powf(-a - 1.0) * (near_i + tail_i) - 2.0 * e * rho.powf(1.0 - a) * (near_j + tail_j));
        (value, dr)
    }

    /// `U(x', rho)`, with `U = v` on the line.
    pub fn eval_at(&self, x: &[f64], rho: f64) -> f64 {
        if rho == 0.0 {
            return self.v.eval(x);
        }
        self.v.eval(x) + self.integrals(x, rho, false).0
    }

    /// `d_rho U(x', rho)` for `rho > 0`.
    pub fn radial_derivative(&self, x: &[f64], rho: f64) -> f64 {
        self.integrals(x, rho, true).1
    }
}

impl Field for Extension {
    fn n(&self) -> usize {
        self.kernel.n
    }

    fn value(&self, x: &[f64]) -> f64 {
        let n = self.kernel.n;
        self.eval_at(&x[..n - 1], x[n - 1].hypot(x[n]))
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let n = self.kernel.n;
        let rho = x[n - 1].hypot(x[n]);
        let mut g = vec![0.0; n + 1];
        let step = 1e-5 * (1.0 + self.v.support);
        let mut p = x[..n - 1].to_vec();
        for i in 0..n - 1 {
            p[i] = x[i] + step;
            let hi = self.eval_at(&p, rho);
            p[i] = x[i] - step;
            let lo = self.eval_at(&p, rho);
            p[i] = x[i];
            g[i] = (hi - lo) / (2.0 * step);
        }
        if rho > 0.0 {
            let dr = self.radial_derivative(&x[..n - 1], rho);
            g[n - 1] = dr * x[n - 1] / rho;
            g[n] = dr * x[n] / rho;
        }
        g
    }
}
