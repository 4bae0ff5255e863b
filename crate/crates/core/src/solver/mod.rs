//! Projected SOR for the weighted obstacle problem on the half-domain grid.
//!
//! The discrete problem is the symmetric linear complementarity problem
//! obtained from the edge energy in [`stencil`]. Constraints sit on the thin
//! plane `{y = 0}` or on the line `{x_n = y = 0}`.

pub mod calibrate;
pub mod stencil;

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{invalid, LabError, Result};
use crate::field::{Field, ScalarField};
use crate::grid::Grid;
use crate::poly::{is_in_p_kappa, MembershipOptions, MultiPoly};
use stencil::Stencil;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintSet {
    Thin,
    VeryThin,
}

/// Obstacle or boundary data.
#[derive(Clone)]
pub enum Data {
    Const(f64),
    Poly(MultiPoly),
    Func(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

impl Data {
    pub fn func(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Data::Func(Arc::new(f))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Data::Const(c) => *c,
            Data::Poly(p) => p.eval(x),
            Data::Func(f) => f(x),
        }
    }

    fn describe(&self) -> String {
        match self {
            Data::Const(c) => format!("const {c}"),
            Data::Poly(p) => format!("poly {p}"),
            Data::Func(_) => "callable".into(),
        }
    }
}

impl fmt::Debug for Data {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

#[derive(Debug, Clone)]
pub struct ObstacleSpec {
    pub constraint: ConstraintSet,
    /// Obstacle, evaluated at points `(x, 0)` of the constraint set.
    pub obstacle: Data,
    /// Dirichlet data on the cube boundary, even in `y`.
    pub boundary: Data,
}

impl ObstacleSpec {
    pub fn thin(obstacle: Data, boundary: Data) -> Self {
        Self { constraint: ConstraintSet::Thin, obstacle, boundary }
    }

    pub fn very_thin(obstacle: Data, boundary: Data) -> Self {
        Self { constraint: ConstraintSet::VeryThin, obstacle, boundary }
    }

    /// Hash of the textual description and of the data sampled on the grid.
    pub fn hash(&self, grid: &Grid) -> String {
        let mut h = Sha256::new();
        h.update(format!("{:?}|{}|{}", self.constraint, self.obstacle.describe(), self.boundary.describe()));
        for i in (0..grid.len()).step_by((grid.len() / 997).max(1)) {
            let x = grid.coords(i);
            h.update(self.boundary.eval(&x).to_le_bytes());
            h.update(self.obstacle.eval(&x).to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    fn constrained_nodes<'g>(&self, grid: &'g Grid) -> &'g [usize] {
        match self.constraint {
            ConstraintSet::Thin => &grid.thin_mask,
            ConstraintSet::VeryThin => &grid.verythin_mask,
        }
    }
}

/// Complementarity residuals of a discrete field. Residual quantities are
/// normalized by the stencil diagonal, so they are in units of the field.
#[derive(Debug, Clone, Default, Serialize)]
pub struct KktReport {
    pub max_obstacle_violation: f64,
    pub max_positive_flux: f64,
    pub max_complementarity: f64,
    pub interior_residual: f64,
    /// Interior constrained nodes, aligned with `flux_density`.
    pub constrained: Vec<usize>,
    /// Thin: `2 lim y^a d_y u`. Very thin: density of the line measure.
    pub flux_density: Vec<f64>,
}

impl KktReport {
    pub fn max_residual(&self) -> f64 {
        self.max_obstacle_violation
            .max(self.max_positive_flux)
            .max(self.max_complementarity)
            .max(self.interior_residual)
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_sweeps: usize,
    /// Relaxation factor; `None` picks `2 / (1 + sin(pi h / 2))`.
    pub omega: Option<f64>,
    /// Solve on the next coarser grid first and interpolate.
    pub warm_start: bool,
    pub record_energy: bool,
    /// Near-field factor for very thin constraints; `None` uses the calibrated value.
    pub line_mu: Option<f64>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_sweeps: 200_000, omega: None, warm_start: true, record_energy: false, line_mu: None }
    }
}

impl SolveOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub field: ScalarField,
    pub report: KktReport,
    pub sweeps: usize,
    /// Discrete energy after each sweep, when recorded.
    pub energy: Vec<f64>,
}

#[derive(Debug)]
pub struct NonConvergence {
    pub sweeps: usize,
    pub last_update: f64,
    pub field: ScalarField,
    pub report: KktReport,
}

impl fmt::Display for NonConvergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "no convergence after {} sweeps (last update {:.3e}, max KKT residual {:.3e})",
            self.sweeps,
            self.last_update,
            self.report.max_residual()
        )
    }
}

const FREE: u8 = 1;
const CONSTRAINED: u8 = 2;

/// Assembled discrete problem. Nodes with `kind == 0` keep their initial value.
pub(crate) struct Problem<'g> {
    pub stencil: Stencil<'g>,
    pub kind: Vec<u8>,
    pub phi: Vec<f64>,
    pub source: Vec<f64>,
    pub active: Vec<usize>,
    pub diag: Vec<f64>,
}

impl<'g> Problem<'g> {
    pub fn new(stencil: Stencil<'g>, kind: Vec<u8>, phi: Vec<f64>, source: Vec<f64>) -> Self {
        let active: Vec<usize> = (0..kind.len()).filter(|&i| kind[i] != 0).collect();
        let diag = active.iter().map(|&i| stencil.diag(i)).collect();
        Self { stencil, kind, phi, source, active, diag }
    }

    pub fn residual(&self, u: &[f64], idx: usize) -> f64 {
        self.stencil.residual(u, idx) + self.source[idx]
    }

    /// One projected SOR sweep; returns the largest nodal change.
    pub fn sweep(&self, u: &mut [f64], omega: f64) -> f64 {
        let mut max_du: f64 = 0.0;
        for (p, &i) in self.active.iter().enumerate() {
            let mut acc = self.source[i];
            self.stencil.for_each_neighbor(i, |j, c| acc += c * u[j]);
            let mut v = u[i] + omega * (acc / self.diag[p] - u[i]);
            if self.kind[i] == CONSTRAINED && v < self.phi[i] {
                v = self.phi[i];
            }
            max_du = max_du.max((v - u[i]).abs());
            u[i] = v;
        }
        max_du
    }

    pub fn energy(&self, u: &[f64]) -> f64 {
        self.stencil.energy(u) - self.active.iter().map(|&i| self.source[i] * u[i]).sum::<f64>()
    }

    pub fn report(&self, u: &[f64], constraint: ConstraintSet) -> KktReport {
        let mut r = KktReport::default();
        for (p, &i) in self.active.iter().enumerate() {
            let res = self.residual(u, i);
            let scaled = res / self.diag[p];
            if self.kind[i] == CONSTRAINED {
                let gap = u[i] - self.phi[i];
                r.max_obstacle_violation = r.max_obstacle_violation.max(-gap);
                r.max_positive_flux = r.max_positive_flux.max(scaled);
                r.max_complementarity = r.max_complementarity.max(gap.abs() * scaled.abs());
                r.constrained.push(i);
                r.flux_density.push(match constraint {
                    ConstraintSet::Thin => self.stencil.thin_flux_density(res),
                    ConstraintSet::VeryThin => self.stencil.line_flux_density(res),
                });
            } else {
                r.interior_residual = r.interior_residual.max(scaled.abs());
            }
        }
        r
    }

    /// Iterates until the update and the KKT residuals are small.
    pub fn run(
        &self,
        u: &mut [f64],
        opts: &SolveOptions,
        constraint: ConstraintSet,
    ) -> std::result::Result<(usize, Vec<f64>), (usize, f64)> {
        let omega = opts.omega.unwrap_or_else(|| default_omega(self.stencil.grid));
        let mut energy = Vec::new();
        let mut last = f64::INFINITY;
        for sweep in 1..=opts.max_sweeps {
            last = self.sweep(u, omega);
            if opts.record_energy {
                energy.push(self.energy(u));
            }
            if last < opts.tol && self.report(u, constraint).max_residual() < 10.0 * opts.tol {
                return Ok((sweep, energy));
            }
        }
        Err((opts.max_sweeps, last))
    }
}

pub fn default_omega(grid: &Grid) -> f64 {
    2.0 / (1.0 + (std::f64::consts::PI * grid.h / 2.0).sin())
}

fn validate(grid: &Grid, spec: &ObstacleSpec) -> Result<()> {
    if spec.constraint == ConstraintSet::VeryThin && grid.a() >= 0.0 {
        return invalid(format!(
            "very thin constraints need a < 0: the line has zero a-harmonic capacity for a = {}",
            grid.a()
        ));
    }
    for &i in spec.constrained_nodes(grid) {
        if grid.is_boundary(i) {
            let x = grid.coords(i);
            let (g, phi) = (spec.boundary.eval(&x), spec.obstacle.eval(&x));
            if g < phi - 1e-12 * (1.0 + phi.abs()) {
                return invalid(format!("boundary data {g} lies below the obstacle {phi} at {x:?}"));
            }
        }
    }
    Ok(())
}

fn line_mu_for(grid: &Grid, spec: &ObstacleSpec, opts: &SolveOptions) -> Option<f64> {
    match spec.constraint {
        ConstraintSet::Thin => None,
        ConstraintSet::VeryThin => Some(opts.line_mu.unwrap_or_else(|| calibrate::line_mu(grid.a()))),
    }
}

fn assemble<'g>(grid: &'g Grid, spec: &ObstacleSpec, mu: Option<f64>, shift: Option<&MultiPoly>) -> (Problem<'g>, Vec<f64>) {
    let stencil = Stencil::new(grid, mu);
    let len = grid.len();
    let mut kind = vec![FREE; len];
    let mut phi = vec![f64::NEG_INFINITY; len];
    let mut u = vec![0.0; len];
    let shifted: Vec<f64> = match shift {
        Some(p) => (0..len).map(|i| p.eval(&grid.coords(i))).collect(),
        None => vec![0.0; len],
    };
    for i in 0..len {
        if grid.is_boundary(i) {
            kind[i] = 0;
            u[i] = spec.boundary.eval(&grid.coords(i)) - shifted[i];
        }
    }
    for &i in spec.constrained_nodes(grid) {
        if kind[i] != 0 {
            kind[i] = CONSTRAINED;
            phi[i] = spec.obstacle.eval(&grid.coords(i)) - shifted[i];
        }
    }
    let mut source = vec![0.0; len];
    if shift.is_some() {
        for i in 0..len {
            if kind[i] != 0 {
                source[i] = stencil.residual(&shifted, i);
            }
        }
    }
    (Problem::new(stencil, kind, phi, source), u)
}

fn coarse_res(res: usize) -> Option<usize> {
    let c = (res + 1) / 2;
    (c >= 17 && c % 2 == 1).then_some(c)
}

fn solve_inner(grid: &Arc<Grid>, spec: &ObstacleSpec, opts: &SolveOptions, shift: Option<&MultiPoly>) -> Result<Solution> {
    validate(grid, spec)?;
    let mu = line_mu_for(grid, spec, opts);
    let (problem, mut u) = assemble(grid, spec, mu, shift);
    if opts.warm_start {
        if let Some(cres) = coarse_res(grid.res()) {
            let cgrid = Arc::new(Grid::new(crate::grid::GridSpec { res: cres, ..grid.spec })?);
            let copts = SolveOptions { tol: opts.tol * 10.0, record_energy: false, ..opts.clone() };
            let coarse = match solve_inner(&cgrid, spec, &copts, shift) {
                Ok(s) => s.field,
                Err(LabError::NotConverged(nc)) => nc.field,
                Err(e) => return Err(e),
            };
            for &i in &problem.active {
                let v = coarse.value(&grid.coords(i));
                u[i] = v.max(problem.phi[i]);
            }
        }
    }
    for &i in &problem.active {
        u[i] = u[i].max(problem.phi[i]);
    }
    let outcome = problem.run(&mut u, opts, spec.constraint);
    let report = problem.report(&u, spec.constraint);
    let mut field = ScalarField::new(grid.clone(), u);
    field.line_mu = mu;
    match outcome {
        Ok((sweeps, energy)) => Ok(Solution { field, report, sweeps, energy }),
        Err((sweeps, last_update)) => Err(LabError::NotConverged(Box::new(NonConvergence {
            sweeps,
            last_update,
            field,
            report,
        }))),
    }
}

/// Minimizes the discrete weighted energy over admissible nodal fields.
pub fn solve(grid: &Arc<Grid>, spec: &ObstacleSpec, opts: &SolveOptions) -> Result<Solution> {
    solve_inner(grid, spec, opts, None)
}

/// Solves for `v = u - p` directly: obstacle `phi - p`, boundary data `g - p`
/// and the discrete `L_a p` as a source, so that `v` equals the solution of
/// [`solve`] minus `p` on the nodes.
pub fn residual_solve(grid: &Arc<Grid>, spec: &ObstacleSpec, base: &MultiPoly, opts: &SolveOptions) -> Result<Solution> {
    let kappa = base.homogeneity().unwrap_or(u32::MAX);
    let m = is_in_p_kappa(base, kappa, grid.a(), &MembershipOptions::default());
    if base.is_zero() || !m.member {
        return invalid(format!("base polynomial is not an admissible blow-up: {:?}", m.failures));
    }
    solve_inner(grid, spec, opts, Some(base))
}

/// KKT residuals and flux densities of a nodal field for the given problem.
pub fn kkt_report(field: &ScalarField, spec: &ObstacleSpec) -> KktReport {
    let grid = &field.grid;
    let mu = match spec.constraint {
        ConstraintSet::Thin => None,
        ConstraintSet::VeryThin => Some(field.line_mu.unwrap_or_else(|| calibrate::line_mu(grid.a()))),
    };
    let (problem, _) = assemble(grid, spec, mu, None);
    problem.report(&field.values, spec.constraint)
}

/// Discrete weighted energy of a nodal field with the boundary data of `spec`
/// (boundary nodes are taken from the field).
pub fn discrete_energy(field: &ScalarField, spec: &ObstacleSpec) -> f64 {
    let (problem, _) = assemble(&field.grid, spec, field.line_mu, None);
    problem.energy(&field.values)
}

/// Relative weighted `L^2` distance to an analytic field over the half domain.
pub fn relative_l2_error(field: &ScalarField, exact: &dyn Field) -> f64 {
    let g = &field.grid;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..g.len() {
        let x = g.coords(i);
        let w = g.cell_weights_y[g.k_of(i)];
        let e = exact.value(&x);
        num += w * (field.values[i] - e).powi(2);
        den += w * e * e;
    }
    (num / den).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::poly::{ext_a, parse_poly};

    fn grid(n: usize, res: usize, a: f64) -> Arc<Grid> {
        Arc::new(Grid::new(GridSpec::new(n, res, a)).unwrap())
    }

    #[test]
    fn constant_data_gives_constant_solution() {
        let g = grid(1, 33, 0.2);
        let spec = ObstacleSpec::thin(Data::Const(0.0), Data::Const(1.0));
        let s = solve(&g, &spec, &SolveOptions::default()).unwrap();
        assert!(s.field.values.iter().all(|v| (v - 1.0).abs() < 1e-7));
    }

    #[test]
    fn extension_of_square_is_reproduced() {
        for a in [-0.5, 0.0, 0.5] {
            let g = grid(1, 33, a);
            let p = ext_a(&parse_poly("x1^2", 1).unwrap(), a).unwrap();
            let spec = ObstacleSpec::thin(Data::Const(0.0), Data::Poly(p.clone()));
            let s = solve(&g, &spec, &SolveOptions::with_tol(1e-10)).unwrap();
            assert!(relative_l2_error(&s.field, &p) < 1e-6, "a = {a}");
        }
    }

    #[test]
    fn energy_decreases_every_sweep() {
        let g = grid(1, 33, -0.3);
        let spec = ObstacleSpec::thin(
            Data::Const(0.0),
            Data::Poly(ext_a(&parse_poly("x1^2 - 0.2", 1).unwrap(), -0.3).unwrap()),
        );
        let opts = SolveOptions { record_energy: true, warm_start: false, ..SolveOptions::with_tol(1e-9) };
        let s = solve(&g, &spec, &opts).unwrap();
        for w in s.energy.windows(2) {
            assert!(w[1] <= w[0] + 1e-14 * w[0].abs());
        }
    }

    #[test]
    fn kkt_of_violating_field() {
        let g = grid(1, 17, 0.0);
        let spec = ObstacleSpec::thin(Data::Const(0.0), Data::Const(0.0));
        let mut f = ScalarField::new(g.clone(), vec![0.0; g.len()]);
        let idx = g.index(&[8, 0]);
        f.values[idx] = -0.25;
        let r = kkt_report(&f, &spec);
        assert_eq!(r.max_obstacle_violation, 0.25);
    }

    #[test]
    fn rejects_inadmissible_data() {
        let g = grid(1, 17, 0.0);
        let spec = ObstacleSpec::thin(Data::Const(1.0), Data::Const(0.0));
        assert!(matches!(solve(&g, &spec, &SolveOptions::default()), Err(LabError::Invalid(_))));
        let g = grid(2, 17, 0.3);
        let spec = ObstacleSpec::very_thin(Data::Const(0.0), Data::Const(1.0));
        assert!(matches!(solve(&g, &spec, &SolveOptions::default()), Err(LabError::Invalid(_))));
    }

    #[test]
    fn non_convergence_returns_partial_field() {
        let g = grid(1, 33, 0.0);
        let spec = ObstacleSpec::thin(Data::Const(0.0), Data::Poly(parse_poly("x1^2 - y^2", 1).unwrap()));
        let opts = SolveOptions { max_sweeps: 3, warm_start: false, ..SolveOptions::default() };
        match solve(&g, &spec, &opts) {
            Err(LabError::NotConverged(nc)) => assert_eq!(nc.sweeps, 3),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn residual_solve_rejects_odd_base() {
        let g = grid(1, 17, 0.0);
        let spec = ObstacleSpec::thin(Data::Const(0.0), Data::Const(0.0));
        let base = parse_poly("x1^3", 1).unwrap();
        assert!(residual_solve(&g, &spec, &base, &SolveOptions::default()).is_err());
    }
}
