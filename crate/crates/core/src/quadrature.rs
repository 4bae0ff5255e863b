//! Quadrature rules used throughout the crate.
//!
//! * [`GaussJacobi`]: nodes and weights for `(1 - t)^alpha (1 + t)^beta` on
//!   `[-1, 1]`, built with the Golub–Welsch eigenvalue method. Gauss–Legendre
//!   is the `alpha = beta = 0` case.
//! * [`adaptive`]: globally adaptive Gauss–Kronrod (G7/K15) integration.
//! * [`SphereRule`] / [`BallRule`]: product rules on the unit sphere and ball
//!   of `R^{n+1}` that absorb the weight `|y|^a` exactly, where `y` is the last
//!   coordinate.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};

/// A Gauss–Jacobi rule on `[-1, 1]` for the weight `(1 - t)^alpha (1 + t)^beta`.
#[derive(Debug, Clone)]
pub struct GaussJacobi {
    pub alpha: f64,
    pub beta: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussJacobi {
    /// Builds an `order`-point rule. Panics if `alpha` or `beta` is not `> -1`
    /// or `order == 0`; callers validate exponents before reaching here.
    pub fn new(order: usize, alpha: f64, beta: f64) -> Self {
        assert!(order > 0, "quadrature order must be positive");
        assert!(alpha > -1.0 && beta > -1.0, "Jacobi exponents must exceed -1");
        let ab = alpha + beta;
        let mut diag = vec![0.0; order];
        let mut off = vec![0.0; order.saturating_sub(1)];
        diag[0] = (beta - alpha) / (ab + 2.0);
        for (k, d) in diag.iter_mut().enumerate().skip(1) {
            let k = k as f64;
            let s = 2.0 * k + ab;
            *d = (beta * beta - alpha * alpha) / (s * (s + 2.0));
        }
        for (i, o) in off.iter_mut().enumerate() {
            let k = (i + 1) as f64;
            let s = 2.0 * k + ab;
            let b2 = if i == 0 {
                4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab).powi(2) * (3.0 + ab))
            } else {
                4.0 * k * (k + alpha) * (k + beta) * (k + ab) / (s * s * (s + 1.0) * (s - 1.0))
            };
            *o = b2.sqrt();
        }
        let mut jac = DMatrix::<f64>::zeros(order, order);
        for i in 0..order {
            jac[(i, i)] = diag[i];
            if i + 1 < order {
                jac[(i, i + 1)] = off[i];
                jac[(i + 1, i)] = off[i];
            }
        }
        let mu0 = ((ab + 1.0) * std::f64::consts::LN_2 + libm::lgamma(alpha + 1.0)
            + libm::lgamma(beta + 1.0)
            - libm::lgamma(ab + 2.0))
        .exp();
        let eig = SymmetricEigen::new(jac);
        let mut pairs: Vec<(f64, f64)> = (0..order)
            .map(|i| (eig.eigenvalues[i], mu0 * eig.eigenvectors[(0, i)].powi(2)))
            .collect();
        pairs.sort_by(|l, r| l.0.total_cmp(&r.0));
        Self {
            alpha,
            beta,
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        }
    }

    pub fn legendre(order: usize) -> Self {
        Self::new(order, 0.0, 0.0)
    }

    /// Shared, memoized rule. Profiles rebuild the same rules many times.
    pub fn cached(order: usize, alpha: f64, beta: f64) -> Arc<GaussJacobi> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, u64, u64), Arc<GaussJacobi>>>> =
            OnceLock::new();
        let key = (order, alpha.to_bits(), beta.to_bits());
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(rule) = cache.lock().unwrap().get(&key) {
            return rule.clone();
        }
        let rule = Arc::new(GaussJacobi::new(order, alpha, beta));
        cache.lock().unwrap().insert(key, rule.clone());
        rule
    }

    /// Nodes and weights mapped to `[lo, hi]`, so that the rule integrates
    /// `(hi - x)^alpha (x - lo)^beta f(x)`.
    pub fn mapped(&self, lo: f64, hi: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (hi - lo);
        let scale = half.powf(1.0 + self.alpha + self.beta);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&t, &w)| (lo + half * (t + 1.0), w * scale))
    }

    /// `int_lo^hi (hi - x)^alpha (x - lo)^beta f(x) dx`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, lo: f64, hi: f64, mut f: F) -> f64 {
        self.mapped(lo, hi).map(|(x, w)| w * f(x)).sum()
    }
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GK_WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, lo: f64, hi: f64) -> (f64, f64) {
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let fc = f(c);
    let mut kron = fc * GK_WK[7];
    let mut gauss = fc * GK_WG[3];
    for j in 0..7 {
        let dx = h * GK_NODES[j];
        let s = f(c - dx) + f(c + dx);
        kron += GK_WK[j] * s;
        if j % 2 == 1 {
            gauss += GK_WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Adaptive {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

/// Globally adaptive G7/K15 quadrature over `[lo, hi]` split first at the
/// interior `breaks`. Stops when the error estimate is below
/// `max(abs_tol, rel_tol * |value|)` or after `max_intervals` panels.
pub fn adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Adaptive {
    let mut cuts: Vec<f64> = std::iter::once(lo)
        .chain(breaks.iter().copied().filter(|&b| b > lo && b < hi))
        .chain(std::iter::once(hi))
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut panels: Vec<(f64, f64, f64, f64)> = cuts
        .windows(2)
        .map(|w| {
            let (v, e) = gk15(&mut f, w[0], w[1]);
            (w[0], w[1], v, e)
        })
        .collect();
    loop {
        let value: f64 = panels.iter().map(|p| p.2).sum();
        let error: f64 = panels.iter().map(|p| p.3).sum();
        if error <= abs_tol.max(rel_tol * value.abs()) || panels.len() >= max_intervals {
            return Adaptive { value, error, intervals: panels.len() };
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .unwrap();
        let (a, b, _, _) = panels.swap_remove(worst);
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            // panel can no longer be split in floating point
            let (v, _) = gk15(&mut f, a, b);
            panels.push((a, b, v, 0.0));
            continue;
        }
        let (v1, e1) = gk15(&mut f, a, m);
        let (v2, e2) = gk15(&mut f, m, b);
        panels.push((a, m, v1, e1));
        panels.push((m, b, v2, e2));
    }
}

/// Product rule on the unit sphere `S^n` of `R^{n+1}` with the weight
/// `|y|^a` folded into the weights.
///
/// The sphere is parametrized as a two-sheeted graph over the unit ball of
/// `R^n`, `y = ±sqrt(1 - |x|^2)`, and then in polar coordinates in `x` with
/// `s = |x|^2`. Both endpoint singularities of the resulting Jacobi weight
/// `s^{(n-2)/2} (1 - s)^{(a-1)/2}` are absorbed, so polynomials of degree up
/// to the construction degree are integrated exactly.
#[derive(Debug, Clone)]
pub struct SphereRule {
    pub n: usize,
    pub a: f64,
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl SphereRule {
    pub fn new(n: usize, a: f64, degree: usize) -> Self {
        assert!((1..=3).contains(&n), "sphere rules support n in 1..=3");
        let m = degree / 2 + 2;
        let radial = GaussJacobi::cached(m, 0.5 * (a - 1.0), 0.5 * (n as f64 - 2.0));
        let dirs = unit_sphere_rule(n, degree + 2);
        let mut points = Vec::with_capacity(2 * radial.nodes.len() * dirs.len());
        let mut weights = Vec::with_capacity(points.capacity());
        for (s, ws) in radial.mapped(0.0, 1.0) {
            let rho = s.sqrt();
            let yabs = (1.0 - s).max(0.0).sqrt();
            for (dir, wd) in &dirs {
                for sign in [1.0, -1.0] {
                    let mut p: Vec<f64> = dir.iter().map(|c| rho * c).collect();
                    p.push(sign * yabs);
                    points.push(p);
                    weights.push(0.5 * ws * wd);
                }
            }
        }
        Self { n, a, points, weights }
    }

    pub fn cached(n: usize, a: f64, degree: usize) -> Arc<SphereRule> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, u64, usize), Arc<SphereRule>>>> =
            OnceLock::new();
        let key = (n, a.to_bits(), degree);
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(rule) = cache.lock().unwrap().get(&key) {
            return rule.clone();
        }
        let rule = Arc::new(SphereRule::new(n, a, degree));
        cache.lock().unwrap().insert(key, rule.clone());
        rule
    }

    /// `int_{S^n} f |y|^a dsigma`.
    pub fn integrate<F: FnMut(&[f64]) -> f64>(&self, mut f: F) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, w)| w * f(p)).sum()
    }
}

/// Rule for the unweighted unit sphere `S^{n-1}` of `R^n`, `n <= 3`, exact for
/// polynomials of degree below `m`.
fn unit_sphere_rule(n: usize, m: usize) -> Vec<(Vec<f64>, f64)> {
    match n {
        1 => vec![(vec![1.0], 1.0), (vec![-1.0], 1.0)],
        2 => (0..m)
            .map(|j| {
                let t = 2.0 * PI * (j as f64 + 0.5) / m as f64;
                (vec![t.cos(), t.sin()], 2.0 * PI / m as f64)
            })
            .collect(),
        3 => {
            let gl = GaussJacobi::cached(m / 2 + 2, 0.0, 0.0);
            let mut out = Vec::new();
            for (&z, &wz) in gl.nodes.iter().zip(&gl.weights) {
                let r = (1.0 - z * z).sqrt();
                for j in 0..m {
                    let t = 2.0 * PI * (j as f64 + 0.5) / m as f64;
                    out.push((vec![r * t.cos(), r * t.sin(), z], wz * 2.0 * PI / m as f64));
                }
            }
            out
        }
        _ => unreachable!(),
    }
}

/// Rule for `int_{B_1} f |y|^a dX` in `R^{n+1}`: a radial Gauss–Jacobi rule
/// with weight `rho^{n+a}` times a [`SphereRule`].
#[derive(Debug, Clone)]
pub struct BallRule {
    pub sphere: Arc<SphereRule>,
    pub radial: Vec<(f64, f64)>,
}

impl BallRule {
    pub fn new(n: usize, a: f64, degree: usize) -> Self {
        let sphere = SphereRule::cached(n, a, degree);
        let rule = GaussJacobi::cached(degree / 2 + 2, 0.0, n as f64 + a);
        Self { sphere, radial: rule.mapped(0.0, 1.0).collect() }
    }

    /// `int_{B_1} f |y|^a dX`.
    pub fn integrate<F: FnMut(&[f64]) -> f64>(&self, mut f: F) -> f64 {
        let mut buf = vec![0.0; self.sphere.n + 1];
        let mut total = 0.0;
        for &(rho, wr) in &self.radial {
            let mut shell = 0.0;
            for (p, w) in self.sphere.points.iter().zip(&self.sphere.weights) {
                for (b, c) in buf.iter_mut().zip(p) {
                    *b = rho * c;
                }
                shell += w * f(&buf);
            }
            total += wr * shell;
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn beta_fn(x: f64, y: f64) -> f64 {
        (libm::lgamma(x) + libm::lgamma(y) - libm::lgamma(x + y)).exp()
    }

    #[test]
    fn legendre_integrates_polynomials() {
        let rule = GaussJacobi::legendre(6);
        let v = rule.integrate(-1.0, 1.0, |x| x.powi(10));
        assert!((v - 2.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn jacobi_matches_beta_integrals() {
        // int_0^1 x^{-1/2} (1-x)^{0.3} x^3 dx
        let rule = GaussJacobi::new(8, 0.3, -0.5);
        let v = rule.integrate(0.0, 1.0, |x| x.powi(3));
        assert!((v - beta_fn(3.5, 1.3)).abs() < 1e-13, "{v}");
    }

    #[test]
    fn adaptive_handles_kinks_and_endpoint_powers() {
        let r = adaptive(|x: f64| x.abs(), -1.0, 2.0, &[], 1e-12, 1e-12, 200);
        assert!((r.value - 2.5).abs() < 1e-10);
        let r = adaptive(|x: f64| x.sqrt(), 0.0, 1.0, &[], 1e-11, 1e-11, 500);
        assert!((r.value - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn circle_length_and_weighted_mass() {
        let rule = SphereRule::new(1, 0.0, 8);
        assert!((rule.integrate(|_| 1.0) - 2.0 * PI).abs() < 1e-12);
        // |S^n|_a = 2 pi^{n/2} Gamma((1+a)/2) / Gamma((n+1+a)/2)
        for n in 1..=3 {
            for a in [-0.5, 0.25, 0.6] {
                let rule = SphereRule::new(n, a, 8);
                let exact = 2.0 * PI.powf(n as f64 / 2.0) * libm::tgamma((1.0 + a) / 2.0)
                    / libm::tgamma((n as f64 + 1.0 + a) / 2.0);
                assert!((rule.integrate(|_| 1.0) - exact).abs() < 1e-12 * exact);
            }
        }
    }

    #[test]
    fn ball_mass() {
        let a = -0.3;
        let rule = BallRule::new(2, a, 6);
        let sphere = SphereRule::new(2, a, 6).integrate(|_| 1.0);
        let v = rule.integrate(|_| 1.0);
        assert!((v - sphere / (3.0 + a)).abs() < 1e-12);
    }
}
