//! Run configuration in TOML. Polynomials are written in the text form of
//! the poly module, e.g. `"x1^2 - 0.5 x2^2"`.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, LabError, Result};
use crate::grid::{Grid, GridSpec};
use crate::poly::{ext_a, parse_poly, MultiPoly};
use crate::solver::{ConstraintSet, Data, ObstacleSpec, SolveOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub n: usize,
    pub a: f64,
    pub res: usize,
    pub constraint: ConstraintSet,
    pub obstacle: String,
    pub boundary: String,
    /// Apply `Ext_a` to the boundary polynomial before sampling it.
    #[serde(default = "yes")]
    pub extend_boundary: bool,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn yes() -> bool {
    true
}

fn default_tol() -> f64 {
    1e-9
}

/// An analytic field: `Ext_a` of a thin polynomial, or a polynomial in
/// `(x, y)` taken as is.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    pub n: usize,
    pub a: f64,
    pub poly: String,
    #[serde(default = "yes")]
    pub extend: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsConfig {
    pub centers: Vec<Vec<f64>>,
    pub radii: Option<Vec<f64>>,
    pub lambdas: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BlowupConfig {
    pub centers: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanConfig {
    pub spacing: f64,
    pub half_width: Option<f64>,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self { spacing: 0.1, half_width: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelConfig {
    pub n: usize,
    pub a: f64,
    /// Bumps `(center, radius, amplitude)` on the line.
    pub bumps: Vec<(f64, f64, f64)>,
    pub points: Vec<f64>,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self { n: 2, a: -0.5, bumps: vec![(0.0, 1.0, 1.0), (0.3, 0.6, 2.0), (-0.2, 1.5, 0.5)], points: vec![0.05, 0.4] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BarrierConfig {
    pub n: usize,
    pub cases: Vec<(f64, f64)>,
    pub first_scale: i32,
    pub last_scale: i32,
}

impl Default for BarrierConfig {
    fn default() -> Self {
        Self { n: 2, cases: vec![(-0.5, 1.0), (-0.5, 0.25), (-0.25, 0.5)], first_scale: 14, last_scale: 30 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EquivalenceConfig {
    pub a: f64,
    pub res: usize,
    pub bump_radius: f64,
    pub bump_amplitude: f64,
}

impl Default for EquivalenceConfig {
    fn default() -> Self {
        Self { a: -0.5, res: 65, bump_radius: 0.5, bump_amplitude: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: String,
    pub formats: Vec<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: "out".into(), formats: vec!["csv".into(), "json".into()] }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub problem: Option<ProblemConfig>,
    pub field: Option<FieldConfig>,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default)]
    pub blowup: BlowupConfig,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default)]
    pub kernel: KernelConfig,
    #[serde(default)]
    pub barrier: BarrierConfig,
    #[serde(default)]
    pub equivalence: EquivalenceConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| LabError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Hash of the canonical printed form.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(p) = &self.problem {
            GridSpec::new(p.n, p.res, p.a).validate()?;
            if p.constraint == ConstraintSet::VeryThin && p.a >= 0.0 {
                return invalid(format!(
                    "very thin constraints need a < 0: the line has zero a-harmonic capacity for a = {}",
                    p.a
                ));
            }
            if p.constraint == ConstraintSet::VeryThin && p.n < 2 && p.obstacle.trim() != "0" {
                return invalid("with n = 1 the very thin set is a point; use a zero obstacle");
            }
            parse_poly(&p.obstacle, p.n)?;
            parse_poly(&p.boundary, p.n)?;
        }
        if let Some(f) = &self.field {
            if !(1..=3).contains(&f.n) || !(f.a > -1.0 && f.a < 1.0) {
                return invalid("field needs n in 1..=3 and a in (-1, 1)");
            }
            parse_poly(&f.poly, f.n)?;
        }
        Ok(())
    }

    pub fn grid_and_spec(&self) -> Result<(Grid, ObstacleSpec, SolveOptions)> {
        let p = self.problem.as_ref().ok_or_else(|| LabError::Invalid("config has no [problem] block".into()))?;
        let grid = Grid::new(GridSpec::new(p.n, p.res, p.a))?;
        let obstacle = parse_poly(&p.obstacle, p.n)?;
        let mut boundary = parse_poly(&p.boundary, p.n)?;
        if p.extend_boundary {
            boundary = ext_a(&boundary, p.a)?;
        }
        let obstacle = if obstacle.is_zero() { Data::Const(0.0) } else { Data::Poly(obstacle) };
        let spec = match p.constraint {
            ConstraintSet::Thin => ObstacleSpec::thin(obstacle, Data::Poly(boundary)),
            ConstraintSet::VeryThin => ObstacleSpec::very_thin(obstacle, Data::Poly(boundary)),
        };
        Ok((grid, spec, SolveOptions::with_tol(p.tol)))
    }

    /// The analytic field of the `[field]` block and its weight exponent.
    pub fn analytic_field(&self) -> Result<Option<(MultiPoly, f64)>> {
        let Some(f) = &self.field else { return Ok(None) };
        let p = parse_poly(&f.poly, f.n)?;
        let p = if f.extend { ext_a(&p, f.a)? } else { p };
        Ok(Some((p, f.a)))
    }
}
