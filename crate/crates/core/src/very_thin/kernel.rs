//! The Poisson kernel of the codimension-two extension problem,
//! `P(x', x_n, y) = C rho^{-a} / (|x'|^2 + rho^2)^{(n-1-a)/2}` with
//! `rho = |(x_n, y)|`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::quadrature::{adaptive, GaussJacobi};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct KernelSpec {
    pub n: usize,
    pub a: f64,
    /// Normalization constant; `1` for unnormalized kernels.
    pub c: f64,
    pub normalized: bool,
}

/// Area of the unit sphere `S^{d-1}` in `R^d`; `|S^0| = 2`.
pub fn sphere_area(d: usize) -> f64 {
    2.0 * PI.powf(d as f64 / 2.0) / libm::tgamma(d as f64 / 2.0)
}

/// `int_lo^{pi/2} sin^{n-2} t cos^{-1-a} t dt`: the kernel mass outside the
/// `x'`-ball of radius `rho tan(lo)`, up to the factor `C |S^{n-2}|`.
pub(crate) fn angular_tail(n: usize, a: f64, lo: f64) -> f64 {
    let hi = PI / 2.0;
    if lo >= hi {
        return 0.0;
    }
    // (hi - t)^{-1-a} is absorbed; the rest is smooth on [lo, hi]
    let rule = GaussJacobi::cached(40, -1.0 - a, 0.0);
    rule.integrate(lo, hi, |t| {
        let d = hi - t;
        let ratio = if d < 1e-8 { 1.0 } else { d.sin() / d };
        t.sin().powi(n as i32 - 2) * ratio.powf(-1.0 - a)
    })
}

impl KernelSpec {
    /// Unit-mass kernel; the mass is finite only for `a < 0`.
    pub fn new(n: usize, a: f64) -> Result<Self> {
        if !(2..=3).contains(&n) {
            return invalid(format!("kernel needs n in 2..=3, got {n}"));
        }
        if !(a > -1.0 && a < 0.0) {
            return invalid(format!("unit-mass normalization needs a in (-1, 0), got {a}"));
        }
        let mass = sphere_area(n - 1) * angular_tail(n, a, 0.0);
        Ok(Self { n, a, c: 1.0 / mass, normalized: true })
    }

    /// Kernel with `C = 1`, for any `a` in `(-1, 1)`.
    pub fn unnormalized(n: usize, a: f64) -> Result<Self> {
        if !(2..=3).contains(&n) || !(a > -1.0 && a < 1.0) {
            return invalid("kernel needs n in 2..=3 and a in (-1, 1)");
        }
        Ok(Self { n, a, c: 1.0, normalized: false })
    }

    pub fn line_dim(&self) -> usize {
        self.n - 1
    }

    /// `sigma = -a / 2`, the order of the induced operator on the line.
    pub fn order(&self) -> f64 {
        -self.a / 2.0
    }

    pub(crate) fn radial(&self, r2: f64, rho: f64) -> f64 {
        self.c * rho.powf(-self.a) * (r2 + rho * rho).powf(-(self.n as f64 - 1.0 - self.a) / 2.0)
    }
}

/// `P(x', x_n, y)`; rejects points on the line `x_n = y = 0`.
pub fn kernel_eval(spec: &KernelSpec, x_line: &[f64], x_n: f64, y: f64) -> Result<f64> {
    if x_line.len() != spec.line_dim() {
        return invalid(format!("expected {} line coordinates", spec.line_dim()));
    }
    let rho = x_n.hypot(y);
    if rho == 0.0 {
        return invalid("the kernel is singular on the line x_n = y = 0");
    }
    let r2: f64 = x_line.iter().map(|t| t * t).sum();
    Ok(spec.radial(r2, rho))
}

/// `int P(x', x_n, y) dx'` by direct radial integration in `x'`.
pub fn kernel_mass(spec: &KernelSpec, x_n: f64, y: f64) -> Result<f64> {
    let rho = x_n.hypot(y);
    if rho == 0.0 {
        return invalid("the kernel is singular on the line x_n = y = 0");
    }
    let d = spec.line_dim();
    let area = sphere_area(d);
    let f = |s: f64| area * s.powi(d as i32 - 1) * spec.radial(s * s, rho);
    let cut = 1e3 * rho;
    let breaks: Vec<f64> = (0..6).map(|k| rho * 10f64.powi(k - 2)).collect();
    let near = adaptive(f, 0.0, cut, &breaks, 1e-14, 1e-12, 4000).value;
    // far field: the integrand is s^{a-1} (1 + rho^2/s^2)^{...}, expand to two terms
    let e = (d as f64 - spec.a) / 2.0;
    let k = area * spec.c * rho.powf(-spec.a);
    let tail = k * (cut.powf(spec.a) / -spec.a - e * rho * rho * cut.powf(spec.a - 2.0) / (2.0 - spec.a));
    Ok(near + tail)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn beta(p: f64, q: f64) -> f64 {
        (libm::lgamma(p) + libm::lgamma(q) - libm::lgamma(p + q)).exp()
    }

    #[test]
    fn constant_matches_beta_closed_form() {
        for (n, a) in [(2, -0.5), (3, -0.5), (2, -0.25), (3, -0.8)] {
            let k = KernelSpec::new(n, a).unwrap();
            let closed = 1.0 / (sphere_area(n - 1) * 0.5 * beta((n as f64 - 1.0) / 2.0, -a / 2.0));
            assert!((k.c / closed - 1.0).abs() < 1e-10, "n={n} a={a}: {} vs {closed}", k.c);
        }
    }

    #[test]
    fn unit_mass_at_reference_points() {
        let k = KernelSpec::new(2, -0.5).unwrap();
        assert!((kernel_mass(&k, 0.3, 0.4).unwrap() - 1.0).abs() < 1e-6);
        assert!((kernel_mass(&k, -1.2, 0.05).unwrap() - 1.0).abs() < 1e-6);
        let k3 = KernelSpec::new(3, -0.3).unwrap();
        assert!((kernel_mass(&k3, 0.0, 0.7).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn homogeneity_and_radial_symmetry() {
        let k = KernelSpec::new(3, -0.5).unwrap();
        let p = kernel_eval(&k, &[0.2, -0.1], 0.3, 0.4).unwrap();
        let q = kernel_eval(&k, &[0.4, -0.2], 0.6, 0.8).unwrap();
        assert!((q / p - 2f64.powi(-2)).abs() < 1e-14);
        let r = kernel_eval(&k, &[0.2, -0.1], 0.5, 0.0).unwrap();
        assert!((r / p - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_line_points_and_positive_a() {
        let k = KernelSpec::new(2, -0.5).unwrap();
        assert!(kernel_eval(&k, &[0.1], 0.0, 0.0).is_err());
        assert!(KernelSpec::new(2, 0.2).is_err());
        assert!(KernelSpec::unnormalized(2, 0.2).is_ok());
    }
}
