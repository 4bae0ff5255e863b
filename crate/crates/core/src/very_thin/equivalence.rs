//! The chain of equivalent global problems: the very thin obstacle problem
//! in `R^3`, its trace on the thin plane, and the fractional obstacle
//! problem of order `-a/2` on the line.
//!
//! The line problem is solved on `[-L, L]` by collocation. Its kernel
//! extension then supplies Dirichlet data on the cube, where the grid solver
//! computes the very thin solution independently; the restrictions of the
//! grid field to the line and to the thin plane are compared with the line
//! solution and with its extension.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::extend::{extend, Extension};
use super::fractional::{solve_fractional_obstacle, FractionalObstacleOptions, LineSolution};
use super::kernel::KernelSpec;
use super::line::LineFunction;
use crate::error::{invalid, Result};
use crate::field::{Field, ScalarField};
use crate::grid::{Grid, GridSpec};
use crate::solver::{solve, Data, ObstacleSpec, SolveOptions};

#[derive(Debug, Clone)]
pub struct EquivalenceOptions {
    pub res: usize,
    pub line: FractionalObstacleOptions,
    pub solve: SolveOptions,
}

impl Default for EquivalenceOptions {
    fn default() -> Self {
        Self { res: 65, line: FractionalObstacleOptions::default(), solve: SolveOptions::with_tol(1e-9) }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub a: f64,
    pub res: usize,
    /// Line nodes of the grid with the two restricted solutions.
    pub xs: Vec<f64>,
    pub grid_line: Vec<f64>,
    pub kernel_line: Vec<f64>,
    /// `max |grid - kernel| / max |kernel|` on the line.
    pub line_rel_linf: f64,
    /// The same, restricted to line nodes in the contact set of the line solution.
    pub contact_rel_linf: f64,
    /// Thin-plane discrepancy between the grid field and the kernel extension.
    pub plane_rel_linf: f64,
    pub contact_nodes: usize,
    pub line_sweeps: usize,
    pub grid_sweeps: usize,
}

/// Runs the chain for a compactly supported obstacle on the line of `R^3`.
pub fn equivalence_chain(psi: &LineFunction, a: f64, opts: &EquivalenceOptions) -> Result<EquivalenceReport> {
    if psi.dim != 1 {
        return invalid("the equivalence chain is implemented for n = 2 (a one-dimensional line)");
    }
    if !(a > -1.0 && a < 0.0) {
        return invalid("the very thin problem needs a in (-1, 0)");
    }
    if !psi.support.is_finite() || psi.support >= opts.line.half_width {
        return invalid("the obstacle must be compactly supported inside the line interval");
    }
    let line: LineSolution = solve_fractional_obstacle(psi, -a / 2.0, &opts.line)?;
    let w3 = line.to_line_function()?;
    let kernel = KernelSpec::new(2, a)?;
    let ext = extend(&kernel, &w3)?.with_tol(1e-9);
    let grid = Arc::new(Grid::new(GridSpec::new(2, opts.res, a))?);
    let boundary: Vec<usize> = (0..grid.len()).filter(|&i| grid.is_boundary(i)).collect();
    let mut table = vec![0.0; grid.len()];
    for (i, v) in boundary.iter().zip(eval_by_distance(&ext, &grid, &boundary)) {
        table[*i] = v;
    }
    // boundary data is looked up at the node the assembler asks about
    let lookup = ScalarField::new(grid.clone(), table);
    let boundary_data = Data::func(move |x| lookup.values[lookup.nearest_node(x)]);
    let p2 = psi.clone();
    let spec = ObstacleSpec::very_thin(Data::func(move |x| p2.eval(&x[..1])), boundary_data);
    let sol = solve(&grid, &spec, &opts.solve)?;
    let field = &sol.field;
    let step = 2.0 * opts.line.half_width / (opts.line.points - 1) as f64;
    let mut xs = Vec::new();
    let mut grid_line = Vec::new();
    let mut kernel_line = Vec::new();
    let mut contact = Vec::new();
    for &i in &grid.verythin_mask {
        let x = grid.coords(i);
        xs.push(x[0]);
        grid_line.push(field.values[i]);
        let w = w3.eval(&[x[0]]);
        kernel_line.push(w);
        let j = ((x[0] + opts.line.half_width) / step).round() as usize;
        contact.push(line.contact[j.min(line.contact.len() - 1)]);
    }
    let scale = kernel_line.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let diff = |sel: &dyn Fn(usize) -> bool| {
        (0..xs.len()).filter(|&k| sel(k)).map(|k| (grid_line[k] - kernel_line[k]).abs()).fold(0.0f64, f64::max) / scale
    };
    let line_rel_linf = diff(&|_| true);
    let contact_rel_linf = diff(&|k| contact[k]);
    let plane: Vec<usize> = grid.thin_mask.iter().copied().filter(|&i| !grid.is_boundary(i)).collect();
    let plane_rel_linf = plane
        .iter()
        .zip(eval_by_distance(&ext, &grid, &plane))
        .map(|(&i, k)| (field.values[i] - k).abs())
        .fold(0.0f64, f64::max)
        / scale;
    Ok(EquivalenceReport {
        a,
        res: opts.res,
        xs,
        grid_line,
        kernel_line,
        line_rel_linf,
        contact_rel_linf,
        plane_rel_linf,
        contact_nodes: contact.iter().filter(|c| **c).count(),
        line_sweeps: line.sweeps,
        grid_sweeps: sol.sweeps,
    })
}

/// Extension values at grid nodes of `R^3`, evaluated once per distinct
/// pair of line coordinate and distance to the line.
fn eval_by_distance(ext: &Extension, grid: &Grid, nodes: &[usize]) -> Vec<f64> {
    let key = |x: &[f64]| (x[0].to_bits(), (x[1].hypot(x[2]) * 1e12).round() as i64);
    let mut distinct = BTreeMap::new();
    for &i in nodes {
        let x = grid.coords(i);
        distinct.entry(key(&x)).or_insert(x);
    }
    let values: BTreeMap<_, f64> = distinct.into_par_iter().map(|(k, x)| (k, ext.value(&x))).collect();
    nodes.iter().map(|&i| values[&key(&grid.coords(i))]).collect()
}
