//! `rough-plaplace <norms|solve|hodge|verify>`.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::estimates::{self, EstimateReport, Experiment, ExperimentSetup, Thresholds};
use crate::grid::{Grid, ScalarField, VectorField};
use crate::hodge::{hodge_ratio_probe, PoissonSolver};
use crate::io::{read_field, write_scalar, write_vector, FieldFile};
use crate::norms::{
    grand_lebesgue_norm, lebesgue_avg_norm, luxemburg_norm, marcinkiewicz_norm, zygmund_norm, Magnitudes, ZygmundParams,
};
use crate::solver::{rough_field, solve_dirichlet, OperatorSpec, RoughKind, SolveOptions, Sym2};

#[derive(Debug, Parser)]
#[command(
    name = "rough-plaplace",
    version,
    about = "Orlicz-Zygmund norms and p-Laplace solves on the unit square"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Norms of a field file (vector fields use |f| per triangle, scalar fields |u| per node).
    Norms(NormsArgs),
    /// Solve div A(x, grad u) = div f with Dirichlet data.
    Solve(SolveArgs),
    /// Discrete Hodge decomposition F = grad(phi) + h.
    Hodge(HodgeArgs),
    /// Run one estimate experiment and check it against the thresholds.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Which {
    All,
    Luxemburg,
    Zygmund,
    Grand,
    Marcinkiewicz,
    Lebesgue,
}

#[derive(Debug, Args)]
struct NormsArgs {
    #[arg(long)]
    field: PathBuf,
    #[arg(long, value_enum, default_value = "all")]
    which: Which,
    #[arg(long)]
    q: f64,
    #[arg(long)]
    alpha: f64,
    /// Orlicz shift `a` (default: e, or the smallest e^k giving a convex Phi).
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    eps0: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long)]
    p: f64,
    /// Grid size; taken from the field files when omitted.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Vector field file with the data f.
    #[arg(long, conflicts_with = "rough", required_unless_present = "rough")]
    f: Option<PathBuf>,
    /// Generated data, e.g. `point-singularity:beta=0.5,s=1`.
    #[arg(long)]
    rough: Option<String>,
    /// Scalar field file, or `zero`.
    #[arg(long, default_value = "zero")]
    boundary: String,
    /// Matrix field file, or `identity`.
    #[arg(long = "A", default_value = "identity")]
    a_field: String,
    /// Ellipticity bounds; default to the extreme eigenvalues raised to p/2.
    #[arg(long)]
    a_ell: Option<f64>,
    #[arg(long)]
    b_ell: Option<f64>,
    /// Summary CSV `iterations,residual,energy`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Where to write the solution as a scalar field file.
    #[arg(long)]
    u: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct HodgeArgs {
    #[arg(long)]
    field: PathBuf,
    #[arg(long, requires = "p")]
    eps: Option<f64>,
    #[arg(long, requires = "eps")]
    p: Option<f64>,
    #[arg(long)]
    phi_out: Option<PathBuf>,
    #[arg(long)]
    h_out: Option<PathBuf>,
    /// CSV `residual,r1,r2` (the ratios stay empty without --eps/--p).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// energy, difference, stability, comparison, uniqueness or cauchy
    #[arg(value_parser = parse_experiment)]
    experiment: Experiment,
    #[arg(long, default_value_t = 3.0)]
    p: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 32)]
    n: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Number of generated data cases (ignored when --rough is given).
    #[arg(long, default_value_t = 1)]
    cases: usize,
    /// Data for the experiment instead of the seeded family.
    #[arg(long)]
    rough: Option<String>,
    /// `key = value` threshold overrides.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Norms(a) => norms(a),
        Command::Solve(a) => solve(a),
        Command::Hodge(a) => hodge(a),
        Command::Verify(a) => verify(a),
    }
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout()),
    })
}

fn grid_for(n: usize) -> Result<Grid> {
    Grid::new(n)
}

/// Nodal magnitudes weighted by lumped P1 masses.
fn scalar_magnitudes(grid: &Grid, u: &ScalarField) -> Result<Magnitudes> {
    let mut weights = vec![0.0; grid.num_nodes()];
    for tri in grid.triangles() {
        for &v in tri {
            weights[v] += grid.triangle_area() / 3.0;
        }
    }
    let values: Vec<f64> = u.values().iter().map(|v| v.abs()).collect();
    Magnitudes::new(&values, &weights)
}

fn norms(a: NormsArgs) -> Result<()> {
    let file = read_field(&a.field)?;
    let grid = grid_for(file.n())?;
    let g = match &file {
        FieldFile::Scalar(u) => scalar_magnitudes(&grid, u)?,
        FieldFile::Vector(f) => Magnitudes::of_vector(&grid, f),
        FieldFile::Matrix { .. } => return Err(Error::invalid("norms need a scalar or vector field")),
    };
    let mut params = ZygmundParams::with_defaults(a.q, a.alpha)?;
    if a.a.is_some() || a.eps0.is_some() {
        params = ZygmundParams::new(
            a.q,
            a.alpha,
            a.a.unwrap_or(params.a_const),
            a.eps0.unwrap_or(params.eps0),
        )?;
    }
    let all = matches!(a.which, Which::All);
    let mut rows: Vec<(&str, f64)> = Vec::new();
    if all || matches!(a.which, Which::Luxemburg) {
        rows.push(("luxemburg", luxemburg_norm(&g, &params)));
    }
    if all || matches!(a.which, Which::Zygmund) {
        rows.push(("zygmund", zygmund_norm(&g, &params)));
    }
    if all || matches!(a.which, Which::Grand) {
        rows.push(("grand", grand_lebesgue_norm(&g, a.q, a.alpha)?));
    }
    if all || matches!(a.which, Which::Marcinkiewicz) {
        rows.push(("marcinkiewicz", marcinkiewicz_norm(&g, a.q)?));
    }
    if all || matches!(a.which, Which::Lebesgue) {
        rows.push(("lebesgue", lebesgue_avg_norm(&g, a.q)?));
    }
    let mut w = csv::Writer::from_writer(output(&a.out)?);
    for (name, v) in rows {
        w.write_record([name.to_string(), format!("{v:e}")])?;
    }
    w.flush()?;
    Ok(())
}

fn expect_n(grid_n: &mut Option<usize>, n: usize, what: &str) -> Result<()> {
    match *grid_n {
        Some(m) if m != n => Err(Error::invalid(format!("{what} has n = {n}, expected {m}"))),
        _ => {
            *grid_n = Some(n);
            Ok(())
        }
    }
}

fn matrix_spec(
    grid: &Grid,
    p: f64,
    values: &[[f64; 3]],
    a_ell: Option<f64>,
    b_ell: Option<f64>,
) -> Result<OperatorSpec> {
    let mats: Vec<Sym2> = values.iter().map(|m| Sym2::new(m[0], m[1], m[2])).collect();
    if mats.len() != grid.num_triangles() {
        return Err(Error::invalid("matrix field does not match the grid"));
    }
    let (lo, hi) = mats.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), m| {
        let [l0, l1] = m.eigenvalues();
        (lo.min(l0), hi.max(l1))
    });
    if !(lo > 0.0) {
        return Err(Error::invalid("matrix field is not positive definite"));
    }
    OperatorSpec::new(
        p,
        mats,
        a_ell.unwrap_or(lo.powf(p / 2.0)),
        b_ell.unwrap_or(hi.powf(p / 2.0)),
    )
}

fn solve(a: SolveArgs) -> Result<()> {
    let mut n = a.n;
    let f_file = match &a.f {
        Some(path) => match read_field(path)? {
            FieldFile::Vector(f) => Some(f),
            _ => return Err(Error::invalid("--f must be a vector field file")),
        },
        None => None,
    };
    if let Some(f) = &f_file {
        expect_n(&mut n, f.n(), "--f")?;
    }
    let boundary = match a.boundary.as_str() {
        "zero" => None,
        path => match read_field(path)? {
            FieldFile::Scalar(b) => {
                expect_n(&mut n, b.n(), "--boundary")?;
                Some(b)
            }
            _ => return Err(Error::invalid("--boundary must be a scalar field file or `zero`")),
        },
    };
    let matrices = match a.a_field.as_str() {
        "identity" => None,
        path => match read_field(path)? {
            FieldFile::Matrix { n: m, values } => {
                expect_n(&mut n, m, "--A")?;
                Some(values)
            }
            _ => return Err(Error::invalid("--A must be a matrix field file or `identity`")),
        },
    };
    let n = n.ok_or_else(|| Error::invalid("--n is required with --rough"))?;
    let grid = grid_for(n)?;
    let f: VectorField = match (f_file, &a.rough) {
        (Some(f), _) => f,
        (None, Some(spec)) => rough_field(&spec.parse::<RoughKind>()?, &grid)?,
        (None, None) => return Err(Error::invalid("one of --f or --rough is required")),
    };
    let spec = match matrices {
        Some(values) => matrix_spec(&grid, a.p, &values, a.a_ell, a.b_ell)?,
        None => OperatorSpec::identity(&grid, a.p)?,
    };
    let boundary = boundary.unwrap_or_else(|| grid.zero_scalar());
    let result = solve_dirichlet(&grid, &spec, &f, &boundary, &SolveOptions::with_tol(a.tol))?;
    if let Some(path) = &a.u {
        write_scalar(path, &result.u)?;
    }
    let mut w = csv::Writer::from_writer(output(&a.out)?);
    w.write_record(["iterations", "residual", "energy"])?;
    w.write_record([
        result.iterations.to_string(),
        format!("{:e}", result.final_residual),
        format!("{:e}", result.energy),
    ])?;
    w.flush()?;
    Ok(())
}

fn hodge(a: HodgeArgs) -> Result<()> {
    let field = match read_field(&a.field)? {
        FieldFile::Vector(f) => f,
        _ => return Err(Error::invalid("--field must be a vector field file")),
    };
    let grid = grid_for(field.n())?;
    let solver = PoissonSolver::new(&grid);
    let dec = solver.decompose(&field)?;
    if let Some(path) = &a.phi_out {
        write_scalar(path, &dec.phi)?;
    }
    if let Some(path) = &a.h_out {
        write_vector(path, &dec.h)?;
    }
    let (r1, r2) = match (a.eps, a.p) {
        (Some(eps), Some(p)) => {
            let r = hodge_ratio_probe(&solver, &field, eps, p)?;
            (format!("{:e}", r.r1), format!("{:e}", r.r2))
        }
        _ => (String::new(), String::new()),
    };
    let mut w = csv::Writer::from_writer(output(&a.out)?);
    w.write_record(["residual", "r1", "r2"])?;
    w.write_record([format!("{:e}", dec.residual), r1, r2])?;
    w.flush()?;
    Ok(())
}

fn verify(a: VerifyArgs) -> Result<()> {
    let th = match &a.config {
        Some(path) => Thresholds::from_file(path)?,
        None => Thresholds::default(),
    };
    let grid = grid_for(a.n)?;
    let kinds: Vec<RoughKind> = match &a.rough {
        Some(s) => vec![s.parse()?],
        None if a.cases >= 1 => estimates::rough_family(a.cases, a.seed),
        None => return Err(Error::invalid("--cases must be at least 1")),
    };
    let pool = estimates::worker_pool()?;
    let setup = ExperimentSetup {
        p: a.p,
        alpha: a.alpha,
        seed: a.seed,
    };
    let (reports, checks) = pool.install(|| estimates::run_experiment(a.experiment, &setup, &grid, &kinds, &th))?;
    write_reports_to(&a.out, &reports)?;
    for c in &checks {
        eprintln!("{c}");
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::Assertion(failed.join("; ")))
    }
}

fn parse_experiment(s: &str) -> Result<Experiment> {
    s.parse()
}

fn write_reports_to(path: &Option<PathBuf>, reports: &[EstimateReport]) -> Result<()> {
    estimates::write_reports(output(path)?, reports)
}
