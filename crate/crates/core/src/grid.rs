//! Half-domain tensor grid on `[-1, 1]^n x [0, 1]`.
//!
//! Functions are even in `y`, so only `y >= 0` is stored. Node ordering is
//! axis-major with `x1` slowest and `y` fastest.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Dimension of the thin space.
    pub n: usize,
    /// Nodes per axis; odd so that `x = 0` is a node.
    pub res: usize,
    /// Weight exponent in `|y|^a`.
    pub a: f64,
}

impl GridSpec {
    pub fn new(n: usize, res: usize, a: f64) -> Self {
        Self { n, res, a }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.n) {
            return invalid(format!("n = {} is outside 1..=3", self.n));
        }
        if self.res < 17 || self.res % 2 == 0 {
            return invalid(format!("res = {} must be odd and at least 17", self.res));
        }
        if !(self.a > -1.0 && self.a < 1.0) {
            return invalid(format!("weight exponent a = {} is outside (-1, 1)", self.a));
        }
        Ok(())
    }
}

pub const HALF_WIDTH: f64 = 1.0;

#[derive(Debug, Clone, Serialize)]
pub struct Grid {
    pub spec: GridSpec,
    pub h: f64,
    /// Number of nodes along `y` (`y_k = k h`, `k < ny`).
    pub ny: usize,
    /// `int_{y_k}^{y_{k+1}} y^a dy` for each `y`-interval.
    pub face_weights_y: Vec<f64>,
    /// `int y^a dy` over the dual interval of node `k`, clipped to `[0, 1]`.
    pub cell_weights_y: Vec<f64>,
    /// Coordinates along each axis; the last entry is the `y` axis.
    pub node_coords: Vec<Vec<f64>>,
    #[serde(skip)]
    pub thin_mask: Vec<usize>,
    #[serde(skip)]
    pub verythin_mask: Vec<usize>,
    #[serde(skip)]
    strides: Vec<usize>,
}

fn weight_integral(a: f64, lo: f64, hi: f64) -> f64 {
    (hi.powf(1.0 + a) - lo.powf(1.0 + a)) / (1.0 + a)
}

impl Grid {
    pub fn new(spec: GridSpec) -> Result<Self> {
        spec.validate()?;
        let GridSpec { n, res, a } = spec;
        let h = 2.0 * HALF_WIDTH / (res - 1) as f64;
        let ny = (res + 1) / 2;
        let xs: Vec<f64> = (0..res).map(|i| -HALF_WIDTH + i as f64 * h).collect();
        let ys: Vec<f64> = (0..ny).map(|k| k as f64 * h).collect();
        let face_weights_y = (0..ny - 1)
            .map(|k| {
                // `k h` rather than `ys[k]` keeps the first face exactly `h^{1+a}/(1+a)`
                weight_integral(a, k as f64 * h, (k + 1) as f64 * h)
            })
            .collect();
        let cell_weights_y = (0..ny)
            .map(|k| {
                let lo = (k as f64 - 0.5).max(0.0) * h;
                let hi = ((k as f64 + 0.5) * h).min(HALF_WIDTH);
                weight_integral(a, lo, hi)
            })
            .collect();
        let mut node_coords = vec![xs; n];
        node_coords.push(ys);
        let mut strides = vec![1; n + 1];
        for d in (0..n).rev() {
            strides[d] = strides[d + 1] * if d + 1 == n { ny } else { res };
        }
        let mut grid = Self {
            spec,
            h,
            ny,
            face_weights_y,
            cell_weights_y,
            node_coords,
            thin_mask: Vec::new(),
            verythin_mask: Vec::new(),
            strides,
        };
        let mid = res / 2;
        for idx in 0..grid.len() {
            let ijk = grid.multi_index(idx);
            if ijk[n] != 0 {
                continue;
            }
            grid.thin_mask.push(idx);
            if ijk[n - 1] == mid {
                grid.verythin_mask.push(idx);
            }
        }
        Ok(grid)
    }

    pub fn n(&self) -> usize {
        self.spec.n
    }

    pub fn a(&self) -> f64 {
        self.spec.a
    }

    pub fn res(&self) -> usize {
        self.spec.res
    }

    pub fn len(&self) -> usize {
        self.spec.res.pow(self.spec.n as u32) * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Offset between neighbours along `axis` (`axis == n` is `y`).
    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    pub fn index(&self, ijk: &[usize]) -> usize {
        ijk.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.n() + 1];
        for (d, s) in self.strides.iter().enumerate() {
            out[d] = idx / s;
            idx %= s;
        }
        out
    }

    /// `y` index of a node.
    pub fn k_of(&self, idx: usize) -> usize {
        idx % self.ny
    }

    pub fn coords(&self, idx: usize) -> Vec<f64> {
        self.multi_index(idx)
            .iter()
            .enumerate()
            .map(|(d, &i)| self.node_coords[d][i])
            .collect()
    }

    /// True for nodes on the cube boundary (`|x_i| = 1` or `y = 1`).
    pub fn is_boundary(&self, idx: usize) -> bool {
        let ijk = self.multi_index(idx);
        let n = self.n();
        ijk[..n].iter().any(|&i| i == 0 || i + 1 == self.res()) || ijk[n] + 1 == self.ny
    }

    /// Weighted volume of all dual cells, doubled for `y < 0`.
    pub fn total_weight(&self) -> f64 {
        let res = self.res();
        let xcell = |i: usize| if i == 0 || i + 1 == res { 0.5 * self.h } else { self.h };
        let mut total = 0.0;
        for idx in 0..self.len() {
            let ijk = self.multi_index(idx);
            let vx: f64 = ijk[..self.n()].iter().map(|&i| xcell(i)).product();
            total += vx * self.cell_weights_y[ijk[self.n()]];
        }
        2.0 * total
    }

    /// JSON descriptor: spec plus derived quantities, no payload.
    pub fn descriptor(&self) -> serde_json::Value {
        serde_json::json!({
            "n": self.n(),
            "res": self.res(),
            "a": self.a(),
            "h": self.h,
            "ny": self.ny,
            "nodes": self.len(),
            "half_width": HALF_WIDTH,
            "first_face_weight": self.face_weights_y[0],
            "thin_nodes": self.thin_mask.len(),
            "verythin_nodes": self.verythin_mask.len(),
        })
    }
}
