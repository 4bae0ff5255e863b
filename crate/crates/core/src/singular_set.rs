//! Scanning the thin space for singular free-boundary points and sorting
//! them into strata by frequency, spine dimension and second blow-up.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::blowup::{blowup, BlowupOptions, FirstOutcome, SecondCase};
use crate::error::{invalid, Result};
use crate::field::{Field, Interp};
use crate::grid::HALF_WIDTH;
use crate::poly::MultiPoly;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Confidence {
    High,
    Low,
}

#[derive(Debug, Clone, Serialize)]
pub struct StratumEntry {
    pub point: Vec<f64>,
    /// `None` for contact points whose frequency is not an even integer.
    pub kappa: Option<u32>,
    pub m: Option<usize>,
    pub lambda_star: Option<f64>,
    pub stratum: String,
    pub case: Option<SecondCase>,
    pub anomalous: bool,
    /// Second blow-up too close to `kappa + 1` to decide.
    pub undecided: bool,
    pub nxt: bool,
    pub frequency: f64,
    pub confidence: Confidence,
}

#[derive(Debug, Clone, Serialize)]
pub struct StratumTable {
    pub spacing: f64,
    pub a: f64,
    pub entries: Vec<StratumEntry>,
}

fn fmt_opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(String::new, |x| x.to_string())
}

impl StratumTable {
    pub fn to_csv(&self) -> String {
        let n = self.entries.first().map_or(0, |e| e.point.len());
        let mut out: String = (1..=n).map(|i| format!("x{i},")).collect();
        out.push_str("kappa,m,lambda_star,stratum,case,anomalous,undecided,nxt,frequency,confidence\n");
        for e in &self.entries {
            for x in &e.point {
                out.push_str(&format!("{x},"));
            }
            let case = e.case.map(|c| serde_json::to_value(c).unwrap().as_str().unwrap_or("").to_string());
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                fmt_opt(&e.kappa),
                fmt_opt(&e.m),
                fmt_opt(&e.lambda_star),
                e.stratum,
                fmt_opt(&case),
                e.anomalous,
                e.undecided,
                e.nxt,
                e.frequency,
                if e.confidence == Confidence::High { "high" } else { "low" }
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }

    /// Entries in the stratum of frequency `kappa` and spine dimension `m`.
    pub fn stratum(&self, kappa: u32, m: usize) -> impl Iterator<Item = &StratumEntry> {
        self.entries.iter().filter(move |e| e.kappa == Some(kappa) && e.m == Some(m))
    }
}

pub fn stratum_tag(kappa: u32, m: usize) -> String {
    format!("S{kappa}^{m}")
}

#[derive(Debug, Clone)]
pub struct ScanOptions {
    /// Half side of the sampled thin box; defaults to `0.5` for analytic
    /// fields and to the largest box leaving room for blow-ups on grids.
    pub half_width: Option<f64>,
    /// Contact means `|u - obstacle| <= contact_tol * max |u|`.
    pub contact_tol: f64,
    /// Largest contact fraction of a small thin ball at a singular point.
    pub density_tol: f64,
    /// Margin around `kappa + 1` inside which the second blow-up is undecided.
    pub lambda_margin: f64,
    pub density_samples: usize,
    pub seed: u64,
    pub blowup: BlowupOptions,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            half_width: None,
            contact_tol: 1e-6,
            density_tol: 0.25,
            lambda_margin: 0.05,
            density_samples: 400,
            seed: 0,
            blowup: BlowupOptions::default(),
        }
    }
}

fn lattice(n: usize, half: f64, spacing: f64) -> Vec<Vec<f64>> {
    let k = (half / spacing + 1e-9).floor() as i64;
    let mut pts = vec![vec![]];
    for _ in 0..n {
        pts = pts
            .into_iter()
            .flat_map(|p: Vec<f64>| {
                (-k..=k).map(move |i| {
                    let mut q = p.clone();
                    q.push(i as f64 * spacing);
                    q
                })
            })
            .collect();
    }
    pts
}

fn thin_value(field: &dyn Field, x: &[f64]) -> f64 {
    let mut p = x.to_vec();
    p.push(0.0);
    field.value(&p)
}

/// Free boundary points of the thin space with zero contact density, each
/// with its blow-up classification. Rows are sorted by point.
pub fn scan(
    field: &dyn Field,
    spacing: f64,
    a: f64,
    obstacle: Option<&(dyn Fn(&[f64]) -> f64 + Sync)>,
    opts: &ScanOptions,
) -> Result<StratumTable> {
    if spacing <= 0.0 {
        return invalid("scan spacing must be positive");
    }
    let cubic = field.as_grid().map(|g| g.clone().with_interp(Interp::Cubic));
    let field: &dyn Field = match &cubic {
        Some(g) => g,
        None => field,
    };
    let n = field.n();
    let half = match (opts.half_width, field.as_grid()) {
        (Some(h), _) => h,
        (None, None) => 0.5,
        (None, Some(g)) => HALF_WIDTH - 16.0 * g.grid.h,
    };
    let pts = lattice(n, half, spacing);
    let phi = |x: &[f64]| obstacle.map_or(0.0, |f| f(x));
    let gap: Vec<f64> = pts.par_iter().map(|x| thin_value(field, x) - phi(x)).collect();
    let scale = gap.iter().fold(0.0f64, |m, g| m.max(g.abs())).max(f64::MIN_POSITIVE);
    let contact: Vec<bool> = gap.iter().map(|g| g.abs() <= opts.contact_tol * scale).collect();
    let side = (2.0 * (half / spacing + 1e-9).floor()) as usize + 1;
    let index = |ijk: &[usize]| ijk.iter().fold(0, |acc, &i| acc * side + i);
    // contact nodes of a lattice cell that also has non-contact nodes
    let boundary: Vec<usize> = (0..pts.len())
        .filter(|&k| contact[k])
        .filter(|&k| {
            let mut ijk = vec![0; n];
            let mut rest = k;
            for d in (0..n).rev() {
                ijk[d] = rest % side;
                rest /= side;
            }
            (0..3usize.pow(n as u32)).any(|code| {
                let mut m = ijk.clone();
                let mut c = code;
                for md in m.iter_mut() {
                    let step = c % 3;
                    c /= 3;
                    *md = match (step, *md) {
                        (0, v) => v,
                        (1, v) => v + 1,
                        (_, 0) => return false,
                        (_, v) => v - 1,
                    };
                    if *md >= side {
                        return false;
                    }
                }
                !contact[index(&m)]
            })
        })
        .collect();
    let candidates: Vec<&Vec<f64>> = boundary
        .iter()
        .map(|&k| &pts[k])
        .filter(|x| {
            let small = contact_fraction(field, x, spacing, &phi, opts, scale);
            let large = contact_fraction(field, x, 2.0 * spacing, &phi, opts, scale);
            // vanishing density: small at both radii, or decaying
            small <= opts.density_tol && (large <= opts.density_tol || small < large)
        })
        .collect();
    let mut entries: Vec<StratumEntry> =
        candidates.par_iter().map(|x| classify_point(field, x, a, opts)).collect::<Result<_>>()?;
    entries.sort_by(|p, q| p.point.partial_cmp(&q.point).unwrap_or(std::cmp::Ordering::Equal));
    Ok(StratumTable { spacing, a, entries })
}

/// Fraction of seeded random points of the thin ball `B_r(x)` in contact.
fn contact_fraction(
    field: &dyn Field,
    x: &[f64],
    r: f64,
    phi: &dyn Fn(&[f64]) -> f64,
    opts: &ScanOptions,
    scale: f64,
) -> f64 {
    let n = x.len();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut hits = 0usize;
    let mut total = 0usize;
    while total < opts.density_samples {
        let z: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if z.iter().map(|t| t * t).sum::<f64>() > 1.0 {
            continue;
        }
        let p: Vec<f64> = x.iter().zip(&z).map(|(c, t)| c + r * t).collect();
        if p.iter().any(|c| c.abs() > HALF_WIDTH) {
            continue;
        }
        total += 1;
        if (thin_value(field, &p) - phi(&p)).abs() <= opts.contact_tol * scale {
            hits += 1;
        }
    }
    hits as f64 / total as f64
}

fn classify_point(field: &dyn Field, x: &[f64], a: f64, opts: &ScanOptions) -> Result<StratumEntry> {
    let (first, second) = blowup(field, x, a, &opts.blowup)?;
    let f = match &first {
        FirstOutcome::NotSingular { frequency, .. } => {
            return Ok(StratumEntry {
                point: x.to_vec(),
                kappa: None,
                m: None,
                lambda_star: None,
                stratum: "other".into(),
                case: None,
                anomalous: false,
                undecided: false,
                nxt: false,
                frequency: *frequency,
                confidence: Confidence::Low,
            })
        }
        FirstOutcome::Singular(f) => f,
    };
    let rep = second.expect("singular points get a second blow-up");
    let kappa = f.kappa as f64;
    let lambda = rep.lambda_star.as_ref().map(|l| l.value);
    let undecided = rep.case != SecondCase::Polynomial
        && lambda.is_some_and(|l| (l - (kappa + 1.0)).abs() < opts.lambda_margin);
    let anomalous = !undecided && lambda.is_some_and(|l| l >= kappa - opts.blowup.snap_tol && l < kappa + 1.0 - opts.lambda_margin);
    let nxt = rep.nxt.polynomial_next && rep.nxt.spine_vanishing == Some(true) && rep.nxt.energy_match == Some(true);
    let shaky = f.low_confidence || rep.lambda_star.as_ref().is_some_and(|l| l.error > opts.lambda_margin);
    Ok(StratumEntry {
        point: x.to_vec(),
        kappa: Some(f.kappa),
        m: Some(f.spine.dim),
        lambda_star: lambda,
        stratum: stratum_tag(f.kappa, f.spine.dim),
        case: Some(rep.case),
        anomalous,
        undecided,
        nxt,
        frequency: f.frequency.value,
        confidence: if shaky { Confidence::Low } else { Confidence::High },
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Nondegeneracy {
    /// Supremum of the thin Laplacian over the unit ball.
    pub sup_laplacian: f64,
    /// Largest `c` with `Laplacian <= -c`, i.e. `-sup`.
    pub c_available: f64,
    pub satisfied: bool,
    /// The Laplacian is constant, so the supremum is exact.
    pub exact: bool,
}

/// Checks `Laplacian_x phi <= -c` on the thin unit ball.
pub fn nondegeneracy_check(phi: &MultiPoly, c: f64, samples: usize, seed: u64) -> Nondegeneracy {
    let n = phi.n();
    let lap = phi.laplacian_x().thin_trace();
    let exact = lap.degree() == 0;
    let at = |x: &[f64]| {
        let mut p = x.to_vec();
        p.push(0.0);
        lap.eval(&p)
    };
    let sup = if exact {
        at(&vec![0.0; n])
    } else {
        let mut pts = vec![vec![0.0; n]];
        for i in 0..n {
            for s in [1.0, -1.0] {
                let mut e = vec![0.0; n];
                e[i] = s;
                pts.push(e);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        while pts.len() < samples {
            let z: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let r2: f64 = z.iter().map(|t| t * t).sum();
            if r2 <= 1.0 {
                pts.push(z.clone());
                // also the boundary point in the same direction
                if r2 > 1e-8 {
                    pts.push(z.iter().map(|t| t / r2.sqrt()).collect());
                }
            }
        }
        pts.iter().map(|x| at(x)).fold(f64::NEG_INFINITY, f64::max)
    };
    Nondegeneracy { sup_laplacian: sup, c_available: -sup, satisfied: sup <= -c && c > 0.0, exact }
}

#[derive(Debug, Clone, Serialize)]
pub struct Isolation {
    pub isolated: bool,
    /// Other entries with frequency at least `kappa` within the radius.
    pub conflicts: Vec<Vec<f64>>,
    /// Entries of lower frequency within the radius; allowed, but reported.
    pub lower_nearby: usize,
    pub radius: f64,
}

/// Isolation of a point of spine dimension zero among strata of frequency
/// at least its own, within ten lattice spacings.
pub fn isolation_check(table: &StratumTable, point: &[f64]) -> Result<Isolation> {
    let entry = table
        .entries
        .iter()
        .find(|e| e.point.iter().zip(point).all(|(a, b)| (a - b).abs() < 1e-12))
        .ok_or_else(|| crate::error::LabError::Invalid("point is not in the table".into()))?;
    if entry.m != Some(0) {
        return invalid("isolation is only asserted for spine dimension zero");
    }
    let kappa = entry.kappa.expect("m is set only with kappa");
    let radius = 10.0 * table.spacing;
    let mut conflicts = Vec::new();
    let mut lower_nearby = 0;
    for e in &table.entries {
        let d = e.point.iter().zip(point).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        if d < 1e-12 || d > radius {
            continue;
        }
        match e.kappa {
            Some(k) if k >= kappa => conflicts.push(e.point.clone()),
            Some(_) => lower_nearby += 1,
            None => {}
        }
    }
    Ok(Isolation { isolated: conflicts.is_empty(), conflicts, lower_nearby, radius })
}
