//! Command-line front end for `fredholm-core`.
//!
//! Every subcommand writes a machine-readable table (CSV by default, JSON on
//! request) to stdout or to `--output`. [`run`] takes argv and the two output
//! streams and returns the process exit code, so tests drive it in-process.

pub mod report;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use fredholm_core::counterexample::{self, Route, VerifyOptions};
use fredholm_core::kernel::{solve_gamma, IndexSets, KernelSpec};
use fredholm_core::operator::{
    self, ApplyOptions, Assembly, SpectralOptions, SweepOptions, DEFAULT_NODES, DEFAULT_PANELS,
    QUADRATURE_TOLERANCE,
};
use fredholm_core::QuadratureGrid;
use rayon::prelude::*;

pub use report::{Format, ReportError, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "fredholm",
    version,
    about = "Degenerate-kernel integral operator and its homogeneous solutions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve for the kernel coefficients gamma.
    Gamma {
        #[command(flatten)]
        sets: SetArgs,
        /// Write the full kernel spec ({"S","T","gamma"}) as JSON here.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Evaluate the kernel g(s, t) at the given points.
    KernelEval {
        #[command(flatten)]
        sets: SetArgs,
        /// A point `s,t`; repeat the flag for several points.
        #[arg(long = "at", value_parser = parse_point, required = true, allow_hyphen_values = true)]
        points: Vec<(f64, f64)>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Tabulate p(r) on a uniform grid.
    PScan {
        #[arg(long)]
        r_min: f64,
        #[arg(long)]
        r_max: f64,
        /// Number of evenly spaced radii, both ends included.
        #[arg(long)]
        steps: usize,
        #[arg(long, value_enum, default_value_t = RouteArg::Explicit)]
        route: RouteArg,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Locate zeros of p(r) by bracketing.
    FindRoot {
        #[arg(long, default_value_t = counterexample::DEFAULT_BRACKET.0)]
        lo: f64,
        #[arg(long, default_value_t = counterexample::DEFAULT_BRACKET.1)]
        hi: f64,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long, value_enum, default_value_t = RouteArg::Explicit)]
        route: RouteArg,
        /// Report every sign change of p on this many evenly spaced radii across [lo, hi].
        #[arg(long)]
        scan: Option<usize>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Compare the quadrature of K u_2 against the closed-form identity.
    IdentityCheck {
        /// Radius; defaults to the first root of p in (2, 2.5).
        #[arg(long)]
        r: Option<f64>,
        /// Number of sample points s = r k / points, k = 1..points.
        #[arg(long, default_value_t = 20)]
        points: usize,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Smallest singular value of I - A over a range of radii.
    Sweep {
        #[command(flatten)]
        sets: SetArgs,
        #[arg(long)]
        r_min: f64,
        #[arg(long)]
        r_max: f64,
        /// Number of evenly spaced radii, both ends included.
        #[arg(long)]
        steps: usize,
        /// Also compute at twice the panel count and report the change.
        #[arg(long)]
        refine: bool,
        #[arg(long, value_enum, default_value_t = AssemblyArg::KinkCorrected)]
        assembly: AssemblyArg,
        #[command(flatten)]
        grid: GridArgs,
        /// Debug: write the Nystrom matrix at the sweep minimum as CSV.
        #[arg(long)]
        dump_matrix: Option<PathBuf>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run the full counterexample check and print a summary.
    Verify {
        /// Check at this radius instead of the computed root.
        #[arg(long)]
        r: Option<f64>,
        #[command(flatten)]
        grid: GridArgs,
        /// Write the full report as JSON here.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Debug: write the Nystrom matrix at the checked radius as CSV.
        #[arg(long)]
        dump_matrix: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone)]
pub struct SetArgs {
    /// Comma-separated index set S.
    #[arg(long = "s", value_parser = parse_set, default_value = "0", allow_hyphen_values = true)]
    pub s: Set,
    /// Comma-separated index set T.
    #[arg(long = "t", value_parser = parse_set, default_value = "2", allow_hyphen_values = true)]
    pub t: Set,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct GridArgs {
    #[arg(long, default_value_t = DEFAULT_PANELS)]
    pub panels: usize,
    #[arg(long, default_value_t = DEFAULT_NODES)]
    pub nodes: usize,
    /// Per-integral quadrature tolerance.
    #[arg(long, default_value_t = QUADRATURE_TOLERANCE)]
    pub tol: f64,
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RouteArg {
    Explicit,
    Wronskian,
    Series,
}

impl From<RouteArg> for Route {
    fn from(r: RouteArg) -> Self {
        match r {
            RouteArg::Explicit => Route::Explicit,
            RouteArg::Wronskian => Route::Wronskian,
            RouteArg::Series => Route::Series,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AssemblyArg {
    Plain,
    KinkCorrected,
}

impl From<AssemblyArg> for Assembly {
    fn from(a: AssemblyArg) -> Self {
        match a {
            AssemblyArg::Plain => Assembly::Plain,
            AssemblyArg::KinkCorrected => Assembly::KinkCorrected,
        }
    }
}

/// A parsed comma-separated set. Validation against the other set happens later.
#[derive(Debug, Clone, PartialEq)]
pub struct Set(pub Vec<f64>);

pub fn parse_set(text: &str) -> Result<Set, String> {
    text.split(',')
        .map(|item| {
            let item = item.trim();
            item.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| format!("not a finite number: {item:?}"))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Set)
}

fn parse_point(text: &str) -> Result<(f64, f64), String> {
    match parse_set(text)?.0.as_slice() {
        [s, t] => Ok((*s, *t)),
        _ => Err(format!("expected `s,t`, got {text:?}")),
    }
}

/// A failure after argument parsing, tagged with its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<fredholm_core::Error> for Failure {
    fn from(e: fredholm_core::Error) -> Self {
        Failure {
            code: EXIT_FAILURE,
            message: e.to_string(),
        }
    }
}

impl From<ReportError> for Failure {
    fn from(e: ReportError) -> Self {
        Failure {
            code: EXIT_FAILURE,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure {
            code: EXIT_FAILURE,
            message: e.to_string(),
        }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure {
            code: EXIT_FAILURE,
            message: e.to_string(),
        }
    }
}

/// Parse `argv` (including the program name) and execute. Returns the exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(stderr, "{text}")
            } else {
                write!(stdout, "{text}")
            };
            return code;
        }
    };
    match execute(cli.command, stdout) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn kernel_spec(sets: SetArgs) -> Result<KernelSpec, Failure> {
    let sets = IndexSets::new(sets.s.0, sets.t.0)
        .map_err(|e| Failure::usage(format!("invalid index sets: {e}")))?;
    Ok(solve_gamma(sets)?)
}

fn emit(table: &Table, out: &OutputArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    match &out.output {
        Some(path) => {
            let mut file = BufWriter::new(File::create(path)?);
            table.write(out.format, &mut file)?;
            file.flush()?;
        }
        None => table.write(out.format, stdout)?,
    }
    Ok(())
}

fn apply_options(grid: GridArgs) -> ApplyOptions {
    ApplyOptions {
        panels: grid.panels,
        nodes_per_panel: grid.nodes,
        tol: grid.tol,
        ..ApplyOptions::default()
    }
}

fn default_radius() -> Result<f64, Failure> {
    let (lo, hi) = counterexample::DEFAULT_BRACKET;
    Ok(counterexample::find_root(lo, hi, 1e-12)?.root)
}

/// The Nystrom matrix as a table: the collocation node, then one column per node.
pub fn matrix_table(op: &operator::NystromOperator) -> Table {
    let n = op.dim();
    let names: Vec<String> = std::iter::once("t".to_string())
        .chain((0..n).map(|j| format!("a{j}")))
        .collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut table = Table::new(&refs);
    for (i, &node) in op.grid().nodes().iter().enumerate() {
        let row = std::iter::once(Some(node))
            .chain((0..n).map(|j| Some(op.entry(i, j))))
            .collect();
        table.push(row);
    }
    table
}

fn dump_matrix(
    spec: &KernelSpec,
    r: f64,
    opts: &SpectralOptions,
    path: &Path,
) -> Result<(), Failure> {
    let grid = QuadratureGrid::build(r, opts.panels, opts.nodes_per_panel, None)?;
    let op = operator::nystrom_matrix_with(spec, &grid, opts.assembly)?;
    let mut file = BufWriter::new(File::create(path)?);
    matrix_table(&op).write_csv(&mut file)?;
    file.flush()?;
    Ok(())
}

fn execute(command: Command, stdout: &mut dyn Write) -> Result<i32, Failure> {
    match command {
        Command::Gamma { sets, output } => {
            let spec = kernel_spec(sets)?;
            serde_json::to_writer(&mut *stdout, &serde_json::json!({ "gamma": spec.gamma() }))?;
            writeln!(stdout)?;
            if let Some(path) = output {
                let mut file = BufWriter::new(File::create(path)?);
                serde_json::to_writer(&mut file, &spec)?;
                writeln!(file)?;
                file.flush()?;
            }
        }
        Command::KernelEval { sets, points, out } => {
            let spec = kernel_spec(sets)?;
            let mut table = Table::new(&["s", "t", "g"]);
            for (s, t) in points {
                table.push(vec![Some(s), Some(t), Some(spec.eval(s, t)?)]);
            }
            emit(&table, &out, stdout)?;
        }
        Command::PScan {
            r_min,
            r_max,
            steps,
            route,
            out,
        } => {
            let mut table = Table::new(&["r", "p"]);
            for v in counterexample::p_scan(route.into(), r_min, r_max, steps)? {
                table.push(vec![Some(v.r), Some(v.value)]);
            }
            emit(&table, &out, stdout)?;
        }
        Command::FindRoot {
            lo,
            hi,
            tol,
            route,
            scan,
            out,
        } => {
            let roots = match scan {
                Some(steps) if route == RouteArg::Explicit => {
                    counterexample::scan_roots(lo, hi, steps, tol)?
                }
                Some(_) => return Err(Failure::usage("--scan uses the explicit route only")),
                None => vec![counterexample::find_root_with(route.into(), lo, hi, tol)?],
            };
            let mut table = Table::new(&["R", "lo", "hi", "residual", "iterations"]);
            for root in roots {
                table.push(vec![
                    Some(root.root),
                    Some(root.lo),
                    Some(root.hi),
                    Some(root.residual),
                    Some(root.iterations as f64),
                ]);
            }
            emit(&table, &out, stdout)?;
        }
        Command::IdentityCheck {
            r,
            points,
            grid,
            out,
        } => {
            let r = match r {
                Some(r) => r,
                None => default_radius()?,
            };
            let pts = counterexample::sample_points(r, points);
            let rows = counterexample::identity_table(r, &pts, &apply_options(grid))?;
            let mut table = Table::new(&["s", "J", "identity_rhs", "residual"]);
            for row in rows {
                table.push(vec![
                    Some(row.s),
                    Some(row.j),
                    Some(row.identity_rhs),
                    Some(row.residual),
                ]);
            }
            emit(&table, &out, stdout)?;
        }
        Command::Sweep {
            sets,
            r_min,
            r_max,
            steps,
            refine,
            assembly,
            grid,
            dump_matrix: dump,
            out,
        } => {
            let spec = kernel_spec(sets)?;
            let opts = SweepOptions {
                spectral: SpectralOptions {
                    panels: grid.panels,
                    nodes_per_panel: grid.nodes,
                    assembly: assembly.into(),
                },
                refine,
            };
            let radii = operator::sweep_radii(r_min, r_max, steps)?;
            // collect() on an indexed parallel iterator keeps the input order
            let rows: Vec<_> = radii
                .par_iter()
                .map(|&r| operator::sweep_point(&spec, r, &opts))
                .collect();
            let report = operator::ScanReport { rows };
            let mut table = Table::new(&["r", "sigma_min", "refinement_delta"]);
            for row in &report.rows {
                table.push(vec![Some(row.r), row.sigma_min, row.refinement_delta]);
            }
            emit(&table, &out, stdout)?;
            if let Some(path) = dump {
                if let Some(best) = report.argmin() {
                    dump_matrix(&spec, best.r, &opts.spectral, &path)?;
                }
            }
        }
        Command::Verify {
            r,
            grid,
            output,
            dump_matrix: dump,
        } => {
            let defaults = VerifyOptions::default();
            let opts = VerifyOptions {
                radius: r,
                apply: apply_options(grid),
                spectral: SpectralOptions {
                    panels: grid.panels,
                    nodes_per_panel: grid.nodes,
                    ..defaults.spectral
                },
                ..defaults
            };
            let report = counterexample::verify_counterexample(&opts)?;
            write!(stdout, "{}", report.summary())?;
            if let Some(path) = output {
                let mut file = BufWriter::new(File::create(path)?);
                serde_json::to_writer_pretty(&mut file, &report)?;
                writeln!(file)?;
                file.flush()?;
            }
            if let Some(path) = dump {
                dump_matrix(
                    &counterexample::counterexample_spec()?,
                    report.radius,
                    &opts.spectral,
                    &path,
                )?;
            }
            return Ok(if report.pass { EXIT_OK } else { EXIT_FAILURE });
        }
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_parsing() {
        assert_eq!(parse_set("0").unwrap(), Set(vec![0.0]));
        assert_eq!(parse_set("1, 2.5,3").unwrap(), Set(vec![1.0, 2.5, 3.0]));
        assert!(parse_set("").is_err());
        assert!(parse_set("1,,2").is_err());
        assert!(parse_set("x").is_err());
        assert!(parse_set("nan").is_err());
    }

    #[test]
    fn point_parsing() {
        assert_eq!(parse_point("2,1").unwrap(), (2.0, 1.0));
        assert!(parse_point("2").is_err());
        assert!(parse_point("1,2,3").is_err());
    }

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
