//! The `obstacle-lab` command line.
//!
//! Every verb reads an optional TOML config, applies the command-line
//! overrides to it, writes its artifacts into the output directory and
//! finishes with `manifest.json`. The effective config is saved next to the
//! artifacts as `config.toml`, so a run can be repeated from its output.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 usage, 3 validation or parse
//! error, 4 non-convergence.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::blowup::{blowup, BlowupOptions, BlowupReport, FirstOutcome};
use crate::config::RunConfig;
use crate::diagnostics::{default_radii, geometric_radii, profile, FrequencyProfile, ProfileOptions};
use crate::error::LabError;
use crate::field::{Field, ScalarField};
use crate::grid::HALF_WIDTH;
use crate::io::{read_field, Output};
use crate::poly::{parse_poly, MultiPoly};
use crate::singular_set::{scan, ScanOptions};
use crate::solver::solve;
use crate::very_thin::{
    barrier, equivalence_chain, extend, f_a_flux, fractional_laplacian, kernel_eval, predicted_flux_constant,
    BarrierReport, EquivalenceOptions, FluxOptions, HolderOptions, KernelSpec, LineFunction,
};

#[derive(Debug, Parser)]
#[command(name = "obstacle-lab", version, about = "Thin and very thin obstacle problems with weights |y|^a")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `[output] dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the `[problem]` block; writes field.bin and kkt.json.
    Solve,
    /// Frequency, Weiss and Monneau profiles; writes profile.csv and profile.json.
    Diagnose(DiagnoseArgs),
    /// First and second blow-ups; writes blowup.json.
    Blowup(BlowupArgs),
    /// Free boundary scan and strata; writes strata.csv and strata.json.
    Scan(FieldArg),
    /// Kernel checks; writes kernel.json.
    Kernel(KernelArgs),
    /// Hölder exponents of extended barriers; writes barrier.json.
    Barrier,
    /// Very thin problem against the fractional problem on the line.
    Equivalence,
}

#[derive(Debug, Args)]
pub struct FieldArg {
    /// Binary field written by `solve`; otherwise the `[field]` block is used.
    #[arg(long)]
    pub field: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub source: FieldArg,
    /// Thin-space center, comma separated. May be repeated.
    #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
    pub center: Vec<List>,
    #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
    pub lambdas: Option<List>,
    #[arg(long, value_parser = parse_list)]
    pub radii: Option<List>,
}

#[derive(Debug, Args)]
pub struct BlowupArgs {
    #[command(flatten)]
    pub source: FieldArg,
    #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
    pub center: Vec<List>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelCheck {
    /// Flux of the extension against the fractional Laplacian of the trace.
    Symbol,
    /// Kernel value at `--at x_line..,x_n,y`.
    Eval,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    #[arg(long, value_enum, default_value = "symbol")]
    pub check: KernelCheck,
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
    pub at: Option<List>,
}

/// A comma separated list of numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct List(pub Vec<f64>);

fn parse_list(s: &str) -> std::result::Result<List, String> {
    s.split(',').map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"))).collect::<Result<_, _>>().map(List)
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Lab(LabError),
}

impl From<LabError> for CliError {
    fn from(e: LabError) -> Self {
        CliError::Lab(e)
    }
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Lab(LabError::Invalid(_) | LabError::Parse(_)) => 3,
            CliError::Lab(LabError::NotConverged(_)) => 4,
            CliError::Lab(LabError::Io(_)) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Lab(e) => write!(f, "{e}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

/// Parses `args` (program name first), runs the verb and returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli) {
        Ok(manifest) => {
            println!("{}", manifest.display());
            0
        }
        Err(e) => {
            eprintln!("obstacle-lab: {e}");
            e.code()
        }
    }
}

/// Runs a parsed command; returns the manifest path.
pub fn run(cli: &Cli) -> CliResult<PathBuf> {
    if let Some(t) = cli.threads {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build_global();
    }
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
            RunConfig::parse(&text)?
        }
        None if matches!(cli.command, Command::Solve) => return usage("solve needs --config"),
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output.dir = o.to_string_lossy().into_owned();
    }
    apply_overrides(&mut cfg, &cli.command);
    cfg.validate()?;
    let mut out = Output::new(&cfg.output.dir);
    let mut timings = Vec::new();
    let t = Instant::now();
    let name = match &cli.command {
        Command::Solve => {
            cmd_solve(&cfg, &mut out)?;
            "solve"
        }
        Command::Diagnose(args) => {
            cmd_diagnose(&cfg, &load(&cfg, &args.source)?, &mut out)?;
            "diagnose"
        }
        Command::Blowup(args) => {
            cmd_blowup(&cfg, &load(&cfg, &args.source)?, &mut out)?;
            "blowup"
        }
        Command::Scan(args) => {
            cmd_scan(&cfg, &load(&cfg, args)?, &mut out)?;
            "scan"
        }
        Command::Kernel(args) => {
            cmd_kernel(&cfg, args, &mut out)?;
            "kernel"
        }
        Command::Barrier => {
            cmd_barrier(&cfg, &mut out)?;
            "barrier"
        }
        Command::Equivalence => {
            cmd_equivalence(&cfg, &mut out)?;
            "equivalence"
        }
    };
    timings.push((name.to_string(), t.elapsed().as_secs_f64()));
    out.write("config.toml", cfg.to_toml().as_bytes())?;
    Ok(out.finish(name, &cfg.hash(), cfg.seed, timings)?)
}

fn apply_overrides(cfg: &mut RunConfig, cmd: &Command) {
    match cmd {
        Command::Diagnose(args) => {
            if !args.center.is_empty() {
                cfg.diagnostics.centers = args.center.iter().map(|c| c.0.clone()).collect();
            }
            if let Some(l) = &args.lambdas {
                cfg.diagnostics.lambdas = l.0.clone();
            }
            if let Some(r) = &args.radii {
                cfg.diagnostics.radii = Some(r.0.clone());
            }
        }
        Command::Blowup(args) if !args.center.is_empty() => cfg.blowup.centers = args.center.iter().map(|c| c.0.clone()).collect(),
        Command::Kernel(args) => {
            if let Some(a) = args.a {
                cfg.kernel.a = a;
            }
            if let Some(n) = args.n {
                cfg.kernel.n = n;
            }
        }
        _ => {}
    }
}

enum Source {
    Grid(ScalarField),
    Poly(MultiPoly, f64),
}

impl Source {
    fn field(&self) -> &dyn Field {
        match self {
            Source::Grid(f) => f,
            Source::Poly(p, _) => p,
        }
    }

    fn a(&self) -> f64 {
        match self {
            Source::Grid(f) => f.grid.a(),
            Source::Poly(_, a) => *a,
        }
    }
}

fn load(cfg: &RunConfig, arg: &FieldArg) -> CliResult<Source> {
    if let Some(path) = &arg.field {
        if !path.exists() {
            return usage(format!("field file {} does not exist", path.display()));
        }
        return Ok(Source::Grid(read_field(path)?));
    }
    match cfg.analytic_field()? {
        Some((p, a)) => Ok(Source::Poly(p, a)),
        None => usage("give --field or a [field] block in the config"),
    }
}

fn cmd_solve(cfg: &RunConfig, out: &mut Output) -> CliResult<()> {
    let (grid, spec, opts) = cfg.grid_and_spec()?;
    let sol = solve(&Arc::new(grid), &spec, &opts)?;
    out.write_field("field.bin", &sol.field)?;
    #[derive(Serialize)]
    struct Kkt<'a> {
        sweeps: usize,
        max_residual: f64,
        #[serde(flatten)]
        report: &'a crate::solver::KktReport,
    }
    out.write_json("kkt.json", &Kkt { sweeps: sol.sweeps, max_residual: sol.report.max_residual(), report: &sol.report })?;
    Ok(())
}

/// Radii for a grid field: from eight cells to the largest sphere inside the cube.
fn grid_radii(f: &ScalarField, center: &[f64]) -> Vec<f64> {
    let n = f.grid.n();
    let reach = HALF_WIDTH - center[..n].iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let lo = 8.0 * f.grid.h;
    let hi = (0.9 * reach).min(0.8);
    if hi <= 2.0 * lo {
        return vec![];
    }
    geometric_radii(lo, hi, 12)
}

fn centers_or_origin(centers: &[Vec<f64>], n: usize) -> Vec<Vec<f64>> {
    if centers.is_empty() {
        vec![vec![0.0; n]]
    } else {
        centers.to_vec()
    }
}

fn cmd_diagnose(cfg: &RunConfig, src: &Source, out: &mut Output) -> CliResult<()> {
    let field = src.field();
    let n = field.n();
    let d = &cfg.diagnostics;
    let mut profiles = Vec::new();
    for c in centers_or_origin(&d.centers, n) {
        if c.len() != n {
            return usage(format!("center {c:?} needs {n} coordinates"));
        }
        let radii = match (&d.radii, src) {
            (Some(r), _) => r.clone(),
            (None, Source::Grid(f)) => grid_radii(f, &c),
            (None, Source::Poly(..)) => default_radii(0.5),
        };
        profiles.push(profile(field, &c, &radii, &d.lambdas, src.a(), &ProfileOptions::default())?);
    }
    out.write("profile.csv", profile_csv(&profiles, n).as_bytes())?;
    if cfg.output.formats.iter().any(|f| f == "json") {
        out.write_json("profile.json", &profiles)?;
    }
    Ok(())
}

/// One row per center and radius; the monotonicity verdicts of each series
/// are repeated on every row of its center.
fn profile_csv(profiles: &[FrequencyProfile], n: usize) -> String {
    let mut out: String = (1..=n).map(|i| format!("c{i},")).collect();
    out.push_str("r,H,D,N");
    let Some(first) = profiles.first() else { return out + "\n" };
    for s in &first.weiss {
        out.push_str(&format!(",W_{}", s.lambda));
    }
    for s in &first.monneau {
        out.push_str(&format!(",H_{}", s.lambda));
    }
    out.push_str(",N_monotone");
    for s in &first.weiss {
        out.push_str(&format!(",W_{}_monotone", s.lambda));
    }
    for s in &first.monneau {
        out.push_str(&format!(",H_{}_monotone", s.lambda));
    }
    out.push('\n');
    for p in profiles {
        for i in 0..p.radii.len() {
            for x in &p.center[..n] {
                out.push_str(&format!("{x},"));
            }
            out.push_str(&format!("{},{},{},{}", p.radii[i], p.h[i], p.d[i], p.frequency[i]));
            for s in p.weiss.iter().chain(&p.monneau) {
                out.push_str(&format!(",{}", s.values[i]));
            }
            out.push_str(&format!(",{}", p.frequency_monotone));
            for s in p.weiss.iter().chain(&p.monneau) {
                out.push_str(&format!(",{}", s.monotone));
            }
            out.push('\n');
        }
    }
    out
}

#[derive(Serialize)]
struct BlowupEntry {
    center: Vec<f64>,
    first: FirstOutcome,
    second: Option<BlowupReport>,
}

fn cmd_blowup(cfg: &RunConfig, src: &Source, out: &mut Output) -> CliResult<()> {
    let n = src.field().n();
    let mut entries = Vec::new();
    for c in centers_or_origin(&cfg.blowup.centers, n) {
        if c.len() != n {
            return usage(format!("center {c:?} needs {n} coordinates"));
        }
        let (first, second) = blowup(src.field(), &c, src.a(), &BlowupOptions::default())?;
        entries.push(BlowupEntry { center: c, first, second });
    }
    out.write_json("blowup.json", &entries)?;
    Ok(())
}

fn cmd_scan(cfg: &RunConfig, src: &Source, out: &mut Output) -> CliResult<()> {
    let obstacle = match &cfg.problem {
        Some(p) if p.obstacle.trim() != "0" => Some(parse_poly(&p.obstacle, p.n)?),
        _ => None,
    };
    let phi = obstacle.map(|p| move |x: &[f64]| p.eval(x));
    let opts = ScanOptions { half_width: cfg.scan.half_width, seed: cfg.seed, ..Default::default() };
    let table = scan(
        src.field(),
        cfg.scan.spacing,
        src.a(),
        phi.as_ref().map(|f| f as &(dyn Fn(&[f64]) -> f64 + Sync)),
        &opts,
    )?;
    if cfg.output.formats.iter().any(|f| f == "csv") {
        out.write("strata.csv", table.to_csv().as_bytes())?;
    }
    if cfg.output.formats.iter().any(|f| f == "json") {
        out.write("strata.json", table.to_json().as_bytes())?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SymbolRow {
    bump: usize,
    x: f64,
    flux: f64,
    fractional: f64,
    ratio: f64,
}

#[derive(Serialize)]
struct SymbolReport {
    n: usize,
    a: f64,
    kernel_constant: f64,
    predicted_ratio: f64,
    rows: Vec<SymbolRow>,
    /// `(max - min) / |mean|` of the ratios.
    relative_spread: f64,
    consistent: bool,
}

fn cmd_kernel(cfg: &RunConfig, args: &KernelArgs, out: &mut Output) -> CliResult<()> {
    let k = &cfg.kernel;
    let kernel = KernelSpec::new(k.n, k.a)?;
    let dim = kernel.line_dim();
    let on_line = |t: f64| {
        let mut v = vec![0.0; dim];
        v[0] = t;
        v
    };
    match args.check {
        KernelCheck::Eval => {
            let Some(List(at)) = &args.at else { return usage("--check eval needs --at x_line..,x_n,y") };
            if at.len() != dim + 2 {
                return usage(format!("--at needs {} coordinates", dim + 2));
            }
            let value = kernel_eval(&kernel, &at[..dim], at[dim], at[dim + 1])?;
            #[derive(Serialize)]
            struct Eval<'a> {
                n: usize,
                a: f64,
                kernel_constant: f64,
                at: &'a [f64],
                value: f64,
            }
            out.write_json("kernel.json", &Eval { n: k.n, a: k.a, kernel_constant: kernel.c, at, value })?;
        }
        KernelCheck::Symbol => {
            let mut rows = Vec::new();
            for (i, &(c, r, amp)) in k.bumps.iter().enumerate() {
                let v = LineFunction::bump(&on_line(c), r, amp);
                let ext = extend(&kernel, &v)?;
                for &x in &k.points {
                    let flux = f_a_flux(&ext, &on_line(x), k.a, &FluxOptions::default())?.value;
                    let fractional = fractional_laplacian(&v, &on_line(x), -k.a / 2.0)?;
                    rows.push(SymbolRow { bump: i, x, flux, fractional, ratio: flux / fractional });
                }
            }
            let lo = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
            let hi = rows.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
            let mean = rows.iter().map(|r| r.ratio).sum::<f64>() / rows.len().max(1) as f64;
            let relative_spread = (hi - lo) / mean.abs();
            out.write_json(
                "kernel.json",
                &SymbolReport {
                    n: k.n,
                    a: k.a,
                    kernel_constant: kernel.c,
                    predicted_ratio: predicted_flux_constant(&kernel),
                    rows,
                    relative_spread,
                    consistent: relative_spread <= 0.02,
                },
            )?;
        }
    }
    Ok(())
}

fn cmd_barrier(cfg: &RunConfig, out: &mut Output) -> CliResult<()> {
    let b = &cfg.barrier;
    let opts = HolderOptions { first_scale: b.first_scale, last_scale: b.last_scale, ..Default::default() };
    let mut reports: Vec<BarrierReport> = Vec::new();
    for &(a, beta) in &b.cases {
        let kernel = KernelSpec::new(b.n, a)?;
        reports.push(barrier(&kernel, beta, &opts)?.1);
    }
    out.write_json("barrier.json", &reports)?;
    Ok(())
}

fn cmd_equivalence(cfg: &RunConfig, out: &mut Output) -> CliResult<()> {
    let e = &cfg.equivalence;
    let psi = LineFunction::bump(&[0.0], e.bump_radius, e.bump_amplitude);
    let opts = EquivalenceOptions { res: e.res, ..Default::default() };
    let rep = equivalence_chain(&psi, e.a, &opts)?;
    let mut csv = String::from("x,grid,kernel\n");
    for k in 0..rep.xs.len() {
        csv.push_str(&format!("{},{},{}\n", rep.xs[k], rep.grid_line[k], rep.kernel_line[k]));
    }
    out.write("equivalence.csv", csv.as_bytes())?;
    out.write_json("equivalence.json", &rep)?;
    Ok(())
}

/// Reads the manifest of an output directory.
pub fn read_manifest(dir: &Path) -> crate::Result<crate::io::Manifest> {
    let bytes = std::fs::read(dir.join("manifest.json"))?;
    serde_json::from_slice(&bytes).map_err(|e| LabError::Parse(e.to_string()))
}
