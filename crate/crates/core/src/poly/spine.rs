use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use super::MultiPoly;

/// Orthonormal basis of the directions `xi` with `xi . grad_x p(x, 0) == 0`.
#[derive(Debug, Clone, Serialize)]
pub struct SpineBasis {
    pub vectors: Vec<Vec<f64>>,
    pub dim: usize,
    /// `p(., 0)` vanished identically, so every direction is invariant.
    pub degenerate: bool,
}

impl SpineBasis {
    /// Orthogonal projection of a thin-space vector onto the spine.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        for v in &self.vectors {
            let c: f64 = v.iter().zip(x).map(|(a, b)| a * b).sum();
            for (o, vi) in out.iter_mut().zip(v) {
                *o += c * vi;
            }
        }
        out
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        let p = self.project(x);
        let norm: f64 = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        p.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() <= tol * norm.max(1.0)
    }
}

/// Spine with the default relative singular-value cutoff `1e-6`.
pub fn spine(p: &MultiPoly) -> SpineBasis {
    spine_with_tol(p, 1e-6)
}

pub fn spine_with_tol(p: &MultiPoly, tol: f64) -> SpineBasis {
    let n = p.n();
    let trace = p.thin_trace();
    if trace.max_coeff() == 0.0 {
        return SpineBasis {
            vectors: (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect(),
            dim: n,
            degenerate: true,
        };
    }
    let mut rows: BTreeMap<Vec<u32>, Vec<f64>> = BTreeMap::new();
    for i in 0..n {
        for (e, c) in trace.derivative(i).terms() {
            rows.entry(e.clone()).or_insert_with(|| vec![0.0; n])[i] = *c;
        }
    }
    let m = DMatrix::from_fn(rows.len(), n, |r, c| rows.values().nth(r).unwrap()[c]);
    let gram = m.transpose() * &m;
    let eig = SymmetricEigen::new(gram);
    let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let mut vectors = Vec::new();
    for k in 0..n {
        if eig.eigenvalues[k].max(0.0).sqrt() <= tol * top.sqrt() {
            let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().cloned().collect();
            if let Some(first) = v.iter().find(|c| c.abs() > 1e-12) {
                if *first < 0.0 {
                    v.iter_mut().for_each(|c| *c = -*c);
                }
            }
            vectors.push(v);
        }
    }
    SpineBasis { dim: vectors.len(), vectors, degenerate: false }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{ext_a, parse_poly};

    #[test]
    fn square_of_second_coordinate() {
        let s = spine(&parse_poly("x2^2 - y^2", 2).unwrap());
        assert_eq!(s.dim, 1);
        assert!((s.vectors[0][0].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn product_of_squares_has_trivial_spine() {
        let p = ext_a(&parse_poly("x1^2 x2^2", 2).unwrap(), 0.0).unwrap();
        assert_eq!(spine(&p).dim, 0);
    }

    #[test]
    fn diagonal_square() {
        let s = spine(&parse_poly("x1^2 + 2 * x1 x2 + x2^2", 2).unwrap());
        assert_eq!(s.dim, 1);
        let r = 0.5f64.sqrt();
        assert!((s.vectors[0][0] - r).abs() < 1e-12);
        assert!((s.vectors[0][1] + r).abs() < 1e-12);
    }

    #[test]
    fn zero_trace_is_degenerate() {
        let s = spine(&parse_poly("y^2", 2).unwrap());
        assert!(s.degenerate);
        assert_eq!(s.dim, 2);
    }
}
