//! Edge conductances of the weighted finite-volume discretization.
//!
//! `x`-edges on row `k` carry `h^{n-2} int y^a` over the dual `y`-interval of
//! the row; `y`-edges between rows `k` and `k+1` carry `h^{n-1} y_{k+1/2}^a`.
//! The midpoint value makes the scheme exact on `f(x) + B y^2` profiles.
//! Edges touching the codimension-two line in the `x_n` and `y` directions
//! are scaled by a near-field factor when a very thin constraint is active.

use crate::grid::Grid;

#[derive(Debug, Clone)]
pub struct Stencil<'g> {
    pub grid: &'g Grid,
    cx: Vec<f64>,
    cy: Vec<f64>,
    line: Option<(Vec<bool>, f64)>,
}

impl<'g> Stencil<'g> {
    pub fn new(grid: &'g Grid, line_mu: Option<f64>) -> Self {
        let n = grid.n() as i32;
        let h = grid.h;
        let a = grid.a();
        let cx = grid.cell_weights_y.iter().map(|m| h.powi(n - 2) * m).collect();
        let cy = (0..grid.ny - 1)
            .map(|k| h.powi(n - 1) * ((k as f64 + 0.5) * h).powf(a))
            .collect();
        let line = line_mu.map(|mu| {
            let mut flags = vec![false; grid.len()];
            for &i in &grid.verythin_mask {
                flags[i] = true;
            }
            (flags, mu)
        });
        Self { grid, cx, cy, line }
    }

    pub fn line_mu(&self) -> Option<f64> {
        self.line.as_ref().map(|l| l.1)
    }

    #[inline]
    fn factor(&self, i: usize, j: usize, axis: usize) -> f64 {
        match &self.line {
            Some((flags, mu)) if axis + 2 > self.grid.n() && (flags[i] || flags[j]) => *mu,
            _ => 1.0,
        }
    }

    /// Calls `f(j, c)` for each neighbour `j` of `idx` with conductance `c`.
    #[inline]
    pub fn for_each_neighbor(&self, idx: usize, mut f: impl FnMut(usize, f64)) {
        let g = self.grid;
        let n = g.n();
        let k = g.k_of(idx);
        let mut rem = idx;
        for d in 0..n {
            let s = g.stride(d);
            let i = rem / s;
            rem %= s;
            if i > 0 {
                f(idx - s, self.cx[k] * self.factor(idx, idx - s, d));
            }
            if i + 1 < g.res() {
                f(idx + s, self.cx[k] * self.factor(idx, idx + s, d));
            }
        }
        if k + 1 < g.ny {
            f(idx + 1, self.cy[k] * self.factor(idx, idx + 1, n));
        }
        if k > 0 {
            f(idx - 1, self.cy[k - 1] * self.factor(idx, idx - 1, n));
        }
    }

    /// Conductance of the edge from `idx` to `idx + stride(axis)`.
    pub fn conductance(&self, idx: usize, axis: usize) -> f64 {
        let j = idx + self.grid.stride(axis);
        if axis == self.grid.n() {
            self.cy[self.grid.k_of(idx)] * self.factor(idx, j, axis)
        } else {
            self.cx[self.grid.k_of(idx)] * self.factor(idx, j, axis)
        }
    }

    pub fn diag(&self, idx: usize) -> f64 {
        let mut d = 0.0;
        self.for_each_neighbor(idx, |_, c| d += c);
        d
    }

    /// `sum_j c_ij (u_j - u_i)`: the discrete `L_a u` integrated over the dual cell.
    pub fn residual(&self, u: &[f64], idx: usize) -> f64 {
        let ui = u[idx];
        let mut r = 0.0;
        self.for_each_neighbor(idx, |j, c| r += c * (u[j] - ui));
        r
    }

    /// Calls `f(i, j, c, axis)` once per edge with `j = i + stride(axis)`.
    pub fn for_each_edge(&self, mut f: impl FnMut(usize, usize, f64, usize)) {
        let g = self.grid;
        let n = g.n();
        for idx in 0..g.len() {
            let k = g.k_of(idx);
            let mut rem = idx;
            for d in 0..n {
                let s = g.stride(d);
                let i = rem / s;
                rem %= s;
                if i + 1 < g.res() {
                    f(idx, idx + s, self.cx[k] * self.factor(idx, idx + s, d), d);
                }
            }
            if k + 1 < g.ny {
                f(idx, idx + 1, self.cy[k] * self.factor(idx, idx + 1, n), n);
            }
        }
    }

    /// `1/2 sum_edges c (du)^2` over the half domain.
    pub fn energy(&self, u: &[f64]) -> f64 {
        let mut e = 0.0;
        self.for_each_edge(|i, j, c, _| e += c * (u[j] - u[i]).powi(2));
        0.5 * e
    }

    /// Converts a row-zero residual into the density of `2 lim y^a d_y u`:
    /// the discrete flux out of the half cell, counted for both sides.
    pub fn thin_flux_density(&self, residual: f64) -> f64 {
        2.0 * residual / self.grid.h.powi(self.grid.n() as i32)
    }

    /// Converts a residual on a line node into the codimension-two flux density.
    pub fn line_flux_density(&self, residual: f64) -> f64 {
        2.0 * residual / self.grid.h.powi(self.grid.n() as i32 - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    #[test]
    fn weighted_quadratic_is_discretely_harmonic() {
        for a in [-0.5, 0.0, 0.5] {
            let g = Grid::new(GridSpec::new(1, 33, a)).unwrap();
            let st = Stencil::new(&g, None);
            let u: Vec<f64> = (0..g.len())
                .map(|i| {
                    let c = g.coords(i);
                    c[0] * c[0] - c[1] * c[1] / (1.0 + a)
                })
                .collect();
            for idx in 0..g.len() {
                if !g.is_boundary(idx) {
                    assert!(st.residual(&u, idx).abs() < 1e-13, "a={a} idx={idx}");
                }
            }
        }
    }

    #[test]
    fn power_profile_flux() {
        // discrete solution depending on y only: constant flux F through
        // every y-edge, F sum_k 1 / c_k = 1; the Riemann sum tends to 1 / (1 - a)
        let a = -0.5;
        let g = Grid::new(GridSpec::new(1, 257, a)).unwrap();
        let st = Stencil::new(&g, None);
        let total: f64 = st.cy.iter().map(|c| 1.0 / c).sum();
        let mut profile = vec![0.0; g.ny];
        for k in 1..g.ny {
            profile[k] = profile[k - 1] - 1.0 / (st.cy[k - 1] * total);
        }
        let u: Vec<f64> = (0..g.len()).map(|i| profile[g.k_of(i)]).collect();
        let idx = g.index(&[100, 0]);
        let f = st.thin_flux_density(st.residual(&u, idx));
        assert!((f / (-2.0 * (1.0 - a)) - 1.0).abs() < 1e-3, "{f}");
    }

    #[test]
    fn energy_of_linear_function() {
        // |grad x1|^2 |y|^a over [-1,1] x [0,1] is 2/(1+a)
        let a = 0.3;
        let g = Grid::new(GridSpec::new(1, 33, a)).unwrap();
        let st = Stencil::new(&g, None);
        let u: Vec<f64> = (0..g.len()).map(|i| g.coords(i)[0]).collect();
        assert!((2.0 * st.energy(&u) - 2.0 / (1.0 + a)).abs() < 1e-12);
    }
}
