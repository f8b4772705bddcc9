use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use newton_atlas_core::experiment::{ExperimentConfig, Solver, SWEEP_EPSILONS};
use newton_atlas_core::pipeline::run_grid_orbit;
use newton_atlas_core::{LogBase, SolveOptions, StartingGrid};

use crate::config::{self, parse_degrees, parse_log_base, RunConfig};
use crate::error::{CliError, Result};
use crate::formats::{self, ExperimentSummary, Provenance};
use crate::parallel::{self, ParallelSolver, Workers};
use crate::plot;

#[derive(Debug, Parser)]
#[command(name = "newton-atlas", version, about = "Newton's method from a universal starting grid")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the starting grid for one degree.
    Grid(GridArgs),
    /// Find every root of a polynomial file.
    Solve(SolveArgs),
    /// Check the distance and area conditions on random root sets.
    Verify(VerifyArgs),
    /// Iteration counts over degrees, with fit, sweep and plots.
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GridFormat {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct SeedArg {
    /// Master seed.
    #[arg(long, env = "NEWTON_ATLAS_SEED", default_value_t = config::DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long)]
    pub degree: usize,
    /// 0 gives golden-angle phases, anything else seeds random phases.
    #[arg(long, default_value_t = 0)]
    pub phase_seed: u64,
    #[arg(long, default_value = "natural", value_parser = parse_log_base)]
    pub log_base: LogBase,
    #[arg(long)]
    pub out: PathBuf,
    /// Defaults to the extension of `--out`.
    #[arg(long, value_enum)]
    pub format: Option<GridFormat>,
    #[command(flatten)]
    pub seed: SeedArg,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub poly: PathBuf,
    #[arg(long, default_value_t = config::DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long, default_value_t = config::DEFAULT_ETA)]
    pub eta: f64,
    /// Grid file written by `grid`; otherwise the grid is built here.
    #[arg(long, conflicts_with_all = ["phase_seed", "log_base"])]
    pub grid: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub phase_seed: u64,
    #[arg(long, default_value = "natural", value_parser = parse_log_base)]
    pub log_base: LogBase,
    /// Report path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory for one JSON-lines trace per chosen orbit.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub cluster_radius: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    #[command(flatten)]
    pub seed: SeedArg,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub degree: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = config::DEFAULT_ETA)]
    pub eta: f64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    #[command(flatten)]
    pub seed: SeedArg,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Comma-separated, ascending.
    #[arg(long, default_value = config::DEFAULT_DEGREES, value_parser = parse_degree_list)]
    pub degrees: DegreeList,
    #[arg(long, default_value_t = config::DEFAULT_TRIALS)]
    pub trials: usize,
    #[arg(long, default_value_t = config::DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long, default_value_t = config::DEFAULT_ETA)]
    pub eta: f64,
    #[arg(long, default_value = "newton-atlas-out")]
    pub out: PathBuf,
    /// Skip the epsilon sweep.
    #[arg(long)]
    pub no_sweep: bool,
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    #[command(flatten)]
    pub seed: SeedArg,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeList(pub Vec<usize>);

fn parse_degree_list(s: &str) -> std::result::Result<DegreeList, String> {
    parse_degrees(s).map(DegreeList)
}

fn path_string(p: &Path) -> String {
    p.display().to_string()
}

fn workers(count: usize) -> Result<Workers> {
    Ok(Workers::new(count)?)
}

pub fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Grid(args) => run_grid(args),
        Command::Solve(args) => run_solve(args),
        Command::Verify(args) => run_verify(args),
        Command::Experiment(args) => run_experiment(args),
    }
}

fn run_grid(args: GridArgs) -> Result<()> {
    let mut cfg = RunConfig::new("grid", args.seed.seed);
    cfg.degrees = vec![args.degree];
    cfg.phase_seed = Some(args.phase_seed);
    cfg.log_base = args.log_base;
    cfg.outputs = vec![path_string(&args.out)];
    cfg.validate()?;
    let grid = newton_atlas_core::grid::build_grid_with(args.degree, args.phase_seed, args.log_base)?;
    let format = args.format.unwrap_or(match args.out.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("csv") => GridFormat::Csv,
        _ => GridFormat::Json,
    });
    let prov = Provenance::new(&cfg);
    match format {
        GridFormat::Json => formats::write_json(&args.out, &prov, &grid),
        GridFormat::Csv => formats::write_csv(&args.out, &prov, &formats::grid_rows(&grid)),
    }
}

fn load_grid(args: &SolveArgs, degree: usize) -> Result<StartingGrid> {
    match &args.grid {
        Some(path) => formats::read_grid(path),
        None => Ok(newton_atlas_core::grid::build_grid_with(degree, args.phase_seed, args.log_base)?),
    }
}

fn run_solve(args: SolveArgs) -> Result<()> {
    let mut cfg = RunConfig::new("solve", args.seed.seed);
    cfg.epsilon = Some(args.epsilon);
    cfg.eta = Some(args.eta);
    cfg.phase_seed = args.grid.is_none().then_some(args.phase_seed);
    cfg.log_base = args.log_base;
    cfg.inputs = std::iter::once(&args.poly).chain(&args.grid).map(|p| path_string(p)).collect();
    cfg.outputs = args.out.iter().map(|p| path_string(p)).collect();
    cfg.trace = args.trace.as_deref().map(path_string);
    cfg.workers = args.workers;
    cfg.validate()?;

    let p = formats::read_polynomial(&args.poly)?;
    cfg.degrees = vec![p.degree()];
    cfg.validate()?;
    let grid = load_grid(&args, p.degree())?;
    let mut opts = SolveOptions::new(args.epsilon);
    opts.eta = args.eta;
    opts.seed = args.seed.seed;
    opts.cluster_radius = args.cluster_radius;
    opts.max_iter = args.max_iter;
    opts.polynomial_id = args
        .poly
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "polynomial".into());
    if let Some(r) = opts.cluster_radius {
        if !(r > 0.0 && r.is_finite()) {
            return Err(CliError::validation(format!("cluster radius {r} must be positive")));
        }
    }
    if opts.max_iter == Some(0) {
        return Err(CliError::validation("max-iter must be at least 1"));
    }

    let pool = workers(args.workers)?;
    let report = ParallelSolver { workers: &pool }.solve(&p, &grid, &opts)?;
    let prov = Provenance::new(&cfg);
    match &args.out {
        Some(path) => formats::write_report(path, &prov, &report)?,
        None => print!("{}", formats::json_string(&prov, &report)?),
    }
    if let Some(dir) = &args.trace {
        for (i, chosen) in report.chosen_starts.iter().enumerate() {
            let trace = run_grid_orbit(&p, &grid, chosen.grid_index, &opts, true)?;
            formats::write_trace(&dir.join(format!("root-{i:04}.jsonl")), &prov, &trace.steps)?;
        }
    }
    if report.unresolved_count > 0 {
        return Err(CliError::Unresolved { unresolved: report.unresolved_count, degree: report.degree });
    }
    Ok(())
}

fn run_verify(args: VerifyArgs) -> Result<()> {
    let mut cfg = RunConfig::new("verify", args.seed.seed);
    cfg.degrees = vec![args.degree];
    cfg.trials = Some(args.trials);
    cfg.eta = Some(args.eta);
    cfg.outputs = vec![path_string(&args.out)];
    cfg.workers = args.workers;
    cfg.validate()?;
    let pool = workers(args.workers)?;
    let rows = parallel::verify_conditions(args.degree, args.trials, args.eta, args.seed.seed, &pool);
    formats::write_csv(&args.out, &Provenance::new(&cfg), &rows)
}

pub const ROWS_FILE: &str = "rows.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const PLOT_FILES: [&str; 3] = ["scaling.svg", "regimes.svg", "displacement.svg"];

fn run_experiment(args: ExperimentArgs) -> Result<()> {
    let mut cfg = RunConfig::new("experiment", args.seed.seed);
    cfg.degrees = args.degrees.0.clone();
    cfg.trials = Some(args.trials);
    cfg.epsilon = Some(args.epsilon);
    cfg.eta = Some(args.eta);
    cfg.outputs = vec![path_string(&args.out)];
    cfg.workers = args.workers;
    cfg.validate()?;
    let mut exp = ExperimentConfig::new(args.degrees.0, args.trials, args.epsilon, args.seed.seed);
    exp.eta = args.eta;
    let sweep: &[f64] = if args.no_sweep { &[] } else { &SWEEP_EPSILONS };
    let pool = workers(args.workers)?;
    let (report, stats) = parallel::run_experiment(&exp, &pool, sweep)?;

    let prov = Provenance::new(&cfg);
    formats::write_rows(&args.out.join(ROWS_FILE), &prov, &report.rows)?;
    formats::write_json(&args.out.join(SUMMARY_FILE), &prov, &ExperimentSummary::from_report(&report, ROWS_FILE))?;
    let figures = [plot::scaling_svg(&report), plot::regimes_svg(&report), plot::displacement_svg(&stats)];
    for (name, svg) in PLOT_FILES.iter().zip(figures) {
        formats::write_svg(&args.out.join(name), &prov, &svg)?;
    }
    Ok(())
}
