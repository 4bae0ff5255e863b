//! Membership in the cone of admissible blow-ups and the weighted
//! inner product on the unit sphere.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{ext_a, la_residual, MultiPoly};
use crate::error::Result;
use crate::quadrature::SphereRule;

/// `int_{dB_1} p q |y|^a`, exact for polynomial integrands.
pub fn sphere_inner(p: &MultiPoly, q: &MultiPoly, a: f64) -> f64 {
    assert_eq!(p.n(), q.n(), "variable count mismatch");
    let deg = (p.degree() + q.degree()) as usize + 4;
    SphereRule::cached(p.n(), a, deg).integrate(|x| p.eval(x) * q.eval(x))
}

pub fn sphere_norm(p: &MultiPoly, a: f64) -> f64 {
    sphere_inner(p, p, a).sqrt()
}

/// All exponent vectors in `n` thin variables with total degree `k`.
pub(crate) fn exponents_of_degree(n: usize, k: u32) -> Vec<Vec<u32>> {
    if n == 1 {
        return vec![vec![k]];
    }
    let mut out = Vec::new();
    for first in (0..=k).rev() {
        for mut rest in exponents_of_degree(n - 1, k - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Basis `{Ext_a(x^alpha) : |alpha| = k}` of the even-in-`y`, `k`-homogeneous
/// `a`-harmonic polynomials.
pub fn homogeneous_basis(n: usize, k: u32, a: f64) -> Result<Vec<MultiPoly>> {
    exponents_of_degree(n, k)
        .into_iter()
        .map(|mut e| {
            e.push(0);
            ext_a(&MultiPoly::monomial(n, e, 1.0), a)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum MembershipFailure {
    OddDegree(u32),
    NotHomogeneous { expected: u32, found: Option<u32> },
    NotEvenInY,
    NotAHarmonic { residual: f64 },
    Negative { witness: Vec<f64>, value: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct Membership {
    pub member: bool,
    pub failures: Vec<MembershipFailure>,
}

#[derive(Debug, Clone, Copy)]
pub struct MembershipOptions {
    pub samples: usize,
    pub seed: u64,
    /// Relative tolerance for the harmonicity residual and the sign check.
    pub tol: f64,
}

impl Default for MembershipOptions {
    fn default() -> Self {
        Self { samples: 10_000, seed: 0, tol: 1e-9 }
    }
}

fn thin_sphere_samples(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    if n == 1 {
        return vec![vec![1.0], vec![-1.0]];
    }
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(count + 4 * n * n);
    // axes and pairwise diagonals first
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut v = vec![0.0; n];
            v[i] = s;
            pts.push(v);
        }
        for j in i + 1..n {
            for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let mut v = vec![0.0; n];
                v[i] = si / 2f64.sqrt();
                v[j] = sj / 2f64.sqrt();
                pts.push(v);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while pts.len() < count {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r2: f64 = v.iter().map(|c| c * c).sum();
        if r2 > 1e-4 && r2 <= 1.0 {
            let r = r2.sqrt();
            pts.push(v.into_iter().map(|c| c / r).collect());
        }
    }
    pts
}

/// Checks `p` against the definition of the admissible cone: `kappa` even,
/// `p` `kappa`-homogeneous, even in `y`, `a`-harmonic and `p(x, 0) >= 0`.
pub fn is_in_p_kappa(p: &MultiPoly, kappa: u32, a: f64, opts: &MembershipOptions) -> Membership {
    let mut failures = Vec::new();
    if kappa % 2 == 1 {
        failures.push(MembershipFailure::OddDegree(kappa));
    }
    let found = p.homogeneity();
    if !p.is_zero() && found != Some(kappa) {
        failures.push(MembershipFailure::NotHomogeneous { expected: kappa, found });
    }
    let scale = p.max_coeff().max(f64::MIN_POSITIVE);
    if !p.is_even_in_y() {
        failures.push(MembershipFailure::NotEvenInY);
    } else if let Ok(r) = la_residual(p, a) {
        let residual = r.max_coeff() / scale;
        if residual > opts.tol {
            failures.push(MembershipFailure::NotAHarmonic { residual });
        }
    }
    let n = p.n();
    let mut worst: Option<(Vec<f64>, f64)> = None;
    for x in thin_sphere_samples(n, opts.samples, opts.seed) {
        let mut pt = x.clone();
        pt.push(0.0);
        let v = p.eval(&pt);
        if v < -opts.tol * scale && worst.as_ref().is_none_or(|w| v < w.1) {
            worst = Some((x, v));
        }
    }
    if let Some((witness, value)) = worst {
        failures.push(MembershipFailure::Negative { witness, value });
    }
    Membership { member: failures.is_empty(), failures }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_poly;
    use std::f64::consts::PI;

    #[test]
    fn circle_inner_product() {
        let one = MultiPoly::constant(1, 1.0);
        assert!((sphere_inner(&one, &one, 0.0) - 2.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn odd_even_orthogonality() {
        let a = -0.3;
        let p = ext_a(&parse_poly("x1", 2).unwrap(), a).unwrap();
        let q = ext_a(&parse_poly("x1^2", 2).unwrap(), a).unwrap();
        assert!(sphere_inner(&p, &q, a).abs() < 1e-14);
    }

    #[test]
    fn members_and_non_members() {
        let opts = MembershipOptions::default();
        let p = ext_a(&parse_poly("x1^2 x2^2", 2).unwrap(), 0.0).unwrap();
        assert!(is_in_p_kappa(&p, 4, 0.0, &opts).member);
        let a = 0.4;
        let q = ext_a(&parse_poly("x1^2", 1).unwrap(), a).unwrap();
        assert!(is_in_p_kappa(&q, 2, a, &opts).member);
        let cubic = parse_poly("x1^3", 1).unwrap();
        let m = is_in_p_kappa(&cubic, 3, 0.0, &opts);
        assert!(!m.member);
        assert!(m.failures.contains(&MembershipFailure::OddDegree(3)));
        assert!(m.failures.iter().any(|f| matches!(f, MembershipFailure::Negative { .. })));
        assert!(m.failures.iter().any(|f| matches!(f, MembershipFailure::NotAHarmonic { .. })));
    }

    #[test]
    fn negative_witness_in_two_dimensions() {
        let p = ext_a(&parse_poly("x1^2 - x2^2", 2).unwrap(), 0.0).unwrap();
        let m = is_in_p_kappa(&p, 2, 0.0, &MembershipOptions::default());
        let w = m.failures.iter().find_map(|f| match f {
            MembershipFailure::Negative { witness, .. } => Some(witness.clone()),
            _ => None,
        });
        let w = w.expect("negativity must be detected");
        assert!(w[0].powi(2) < w[1].powi(2));
    }

    #[test]
    fn basis_size() {
        assert_eq!(homogeneous_basis(2, 4, 0.0).unwrap().len(), 5);
        assert_eq!(homogeneous_basis(3, 2, 0.0).unwrap().len(), 6);
    }
}
