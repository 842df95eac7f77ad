//! `trendfit` — benchmark front end for the isotonic-regression and
//! trend-filtering solvers.
//!
//! Subcommands: `gen` (datasets), `ir` (isotonic solves), `tf` (trend
//! filtering solves), `grid` (success-rate grids). Exit codes: 0 for an
//! optimal solve or completed command, 2 when the iteration budget ran
//! out, 3 when the plain method cycled, 1 for usage or I/O errors.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use trendfit::io;
use trendfit::ir::{pav_solve, pdas_ir_solve_with_partition};
use trendfit::tf::{
    tf_solve_plain_with_partition, tf_solve_sf1_with_partition, tf_solve_sf2_with_partition,
    Sf1Config, Sf2Config,
};
use trendfit::{
    BlockPartition, IrProblem, Penalty, SignPartition, SolveReport, SolveStatus, TfProblem,
};
use trendfit_cli::gen::{generate, perturb, GenKind, GenSpec};
use trendfit_cli::grid::{run_grid, write_grid_csv, ExperimentGrid, Variant};

#[derive(Parser)]
#[command(name = "trendfit", version, about = "Isotonic regression and trend filtering benchmarks")]
struct Cli {
    /// Seed for every data-generating command.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    LinearNoise,
    Uniform,
    Perturb,
}

#[derive(Clone, Copy, ValueEnum)]
enum IrSolverArg {
    Pav,
    Pdas,
}

#[derive(Clone, Copy, ValueEnum)]
enum PenaltyArg {
    L1,
    L1pos,
}

impl From<PenaltyArg> for Penalty {
    fn from(p: PenaltyArg) -> Self {
        match p {
            PenaltyArg::L1 => Penalty::L1,
            PenaltyArg::L1pos => Penalty::L1Pos,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Plain,
    Sf1,
    Sf2,
}

#[derive(Clone, Copy, ValueEnum)]
enum StartArg {
    /// Classify each difference row by the sign of (D y)_j.
    Sign,
    /// Put every row in the active set.
    Active,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset CSV (one y per line).
    Gen {
        #[arg(long, value_enum)]
        kind: KindArg,
        /// Number of points (taken from --base when perturbing a file).
        #[arg(long)]
        n: Option<usize>,
        /// Base dataset to perturb (kind = perturb only).
        #[arg(long)]
        base: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve isotonic regression on a CSV of `y` or `y,w` lines.
    Ir {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value = "pdas")]
        solver: IrSolverArg,
        /// Block-partition JSON to warm-start from (pdas only).
        #[arg(long)]
        warm_start: Option<PathBuf>,
        /// Where to write the solve report JSON.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Where to write the fitted values, one per line.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Where to write the final block partition JSON.
        #[arg(long)]
        save_partition: Option<PathBuf>,
    },
    /// Solve trend filtering on a CSV of `y` lines.
    Tf {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value = "l1")]
        penalty: PenaltyArg,
        #[arg(long, default_value_t = 1)]
        order: usize,
        #[arg(long, default_value_t = 10.0)]
        lambda: f64,
        #[arg(long, value_enum, default_value = "sf2")]
        variant: VariantArg,
        /// SF1: consecutive non-improvements before single-index moves.
        #[arg(long, default_value_t = 5)]
        tmax: usize,
        /// SF2: reference queue length.
        #[arg(long, default_value_t = 5)]
        m: usize,
        /// SF2: proportion shrink factor.
        #[arg(long, default_value_t = 0.9)]
        ds: f64,
        /// SF2: proportion expansion factor.
        #[arg(long, default_value_t = 1.1)]
        de: f64,
        #[arg(long, default_value_t = 800)]
        max_iter: usize,
        /// Cold-start rule when no warm start is given.
        #[arg(long, value_enum, default_value = "sign")]
        start: StartArg,
        /// Sign-partition JSON to warm-start from.
        #[arg(long)]
        warm_start: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        save_partition: Option<PathBuf>,
    },
    /// Run the success-rate grid and write a CSV.
    Grid {
        /// Problem sizes (comma separated).
        #[arg(long, value_delimiter = ',', default_value = "10000")]
        sizes: Vec<usize>,
        /// Also run the large-scale sizes (adds 170000 and 330000).
        #[arg(long)]
        full: bool,
        #[arg(long, default_value_t = 10)]
        repeats: usize,
        #[arg(long, default_value_t = 10.0)]
        lambda: f64,
        #[arg(long, default_value_t = 800)]
        max_iter: usize,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "l1pos,l1")]
        penalties: Vec<PenaltyArg>,
        #[arg(long, value_delimiter = ',', default_value = "1,2")]
        orders: Vec<usize>,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "plain,sf1,sf2")]
        variants: Vec<VariantArg>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // clap would exit with 2; the interface reserves 1 for usage errors
            let _ = err.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Gen { kind, n, base, out } => cmd_gen(cli.seed, kind, n, base, out),
        Command::Ir { data, solver, warm_start, report, output, save_partition } => {
            cmd_ir(data, solver, warm_start, report, output, save_partition)
        }
        Command::Tf {
            data,
            penalty,
            order,
            lambda,
            variant,
            tmax,
            m,
            ds,
            de,
            max_iter,
            start,
            warm_start,
            report,
            output,
            save_partition,
        } => cmd_tf(TfArgs {
            data,
            penalty: penalty.into(),
            order,
            lambda,
            variant,
            sf1: Sf1Config { t_max: tmax },
            sf2: Sf2Config { queue_len: m, shrink: ds, expand: de, initial_proportion: 1.0 },
            max_iter,
            start,
            warm_start,
            report,
            output,
            save_partition,
        }),
        Command::Grid {
            sizes,
            full,
            repeats,
            lambda,
            max_iter,
            penalties,
            orders,
            variants,
            out,
        } => cmd_grid(cli.seed, sizes, full, repeats, lambda, max_iter, penalties, orders, variants, out),
    }
}

fn cmd_gen(
    seed: u64,
    kind: KindArg,
    n: Option<usize>,
    base: Option<PathBuf>,
    out: PathBuf,
) -> anyhow::Result<u8> {
    let y = match (kind, base) {
        (KindArg::Perturb, Some(path)) => {
            let (base_y, _) = io::read_data_csv(&path)
                .with_context(|| format!("reading base data {}", path.display()))?;
            if let Some(n) = n {
                if n != base_y.len() {
                    bail!("--n {n} disagrees with base file length {}", base_y.len());
                }
            }
            perturb(&base_y, seed)
        }
        (KindArg::Perturb, None) => {
            let n = n.context("--n is required when perturbing without a base file")?;
            generate(&GenSpec { kind: GenKind::Perturb, n, seed })?
        }
        (kind, Some(_)) => {
            let _ = kind;
            bail!("--base only applies to --kind perturb");
        }
        (KindArg::LinearNoise, None) => {
            let n = n.context("--n is required")?;
            generate(&GenSpec { kind: GenKind::LinearNoise, n, seed })?
        }
        (KindArg::Uniform, None) => {
            let n = n.context("--n is required")?;
            generate(&GenSpec { kind: GenKind::Uniform, n, seed })?
        }
    };
    io::write_data_csv(&out, &y)?;
    println!("wrote {} points to {}", y.len(), out.display());
    Ok(0)
}

fn summarize(label: &str, report: &SolveReport) {
    println!(
        "{label}: {:?} in {} iterations, {} merges, {} splits, objective {:.6e}, {:.3}s",
        report.status,
        report.iterations,
        report.merge_count,
        report.split_count,
        report.objective,
        report.wall_time
    );
}

fn status_exit(status: SolveStatus) -> u8 {
    match status {
        SolveStatus::Optimal => 0,
        SolveStatus::IterationLimit => 2,
        SolveStatus::Cycled => 3,
    }
}

fn cmd_ir(
    data: PathBuf,
    solver: IrSolverArg,
    warm_start: Option<PathBuf>,
    report_path: Option<PathBuf>,
    output: Option<PathBuf>,
    save_partition: Option<PathBuf>,
) -> anyhow::Result<u8> {
    let (y, w) = io::read_data_csv(&data)
        .with_context(|| format!("reading data {}", data.display()))?;
    let problem = match w {
        Some(w) => IrProblem::new(y, w)?,
        None => IrProblem::with_unit_weights(y)?,
    };

    let (theta, partition, report) = match solver {
        IrSolverArg::Pav => {
            if warm_start.is_some() {
                bail!("PAV always starts from singletons; --warm-start only applies to pdas");
            }
            let (theta, report) = pav_solve(&problem);
            let partition = partition_from_theta(&problem, &theta)?;
            (theta, partition, report)
        }
        IrSolverArg::Pdas => {
            let start = warm_start
                .map(|path| {
                    let part = io::read_block_partition(&path)
                        .with_context(|| format!("reading warm start {}", path.display()))?;
                    if part.n() != problem.len() {
                        bail!(
                            "warm-start partition is for n = {}, data has n = {}",
                            part.n(),
                            problem.len()
                        );
                    }
                    Ok(part)
                })
                .transpose()?;
            let (theta, _z, partition, report) =
                pdas_ir_solve_with_partition(&problem, start.as_ref())?;
            (theta, partition, report)
        }
    };

    if let Some(path) = output {
        io::write_data_csv(&path, &theta)?;
    }
    if let Some(path) = save_partition {
        io::write_block_partition(&path, &partition)?;
    }
    if let Some(path) = report_path {
        io::write_report(&path, &report)?;
    }
    summarize("ir", &report);
    Ok(status_exit(report.status))
}

/// Rebuilds the block structure from a fitted vector by grouping equal
/// consecutive values (adjacent blocks with exactly equal means collapse,
/// which leaves the fit unchanged).
fn partition_from_theta(problem: &IrProblem, theta: &[f64]) -> anyhow::Result<BlockPartition> {
    let mut ranges = Vec::new();
    let mut lo = 0usize;
    for i in 1..theta.len() {
        if theta[i] != theta[i - 1] {
            ranges.push((lo, i));
            lo = i;
        }
    }
    ranges.push((lo, theta.len()));
    let mut part = BlockPartition::from_ranges(theta.len(), &ranges)?;
    part.refresh_stats(problem)?;
    Ok(part)
}

struct TfArgs {
    data: PathBuf,
    penalty: Penalty,
    order: usize,
    lambda: f64,
    variant: VariantArg,
    sf1: Sf1Config,
    sf2: Sf2Config,
    max_iter: usize,
    start: StartArg,
    warm_start: Option<PathBuf>,
    report: Option<PathBuf>,
    output: Option<PathBuf>,
    save_partition: Option<PathBuf>,
}

fn cmd_tf(args: TfArgs) -> anyhow::Result<u8> {
    let (y, w) = io::read_data_csv(&args.data)
        .with_context(|| format!("reading data {}", args.data.display()))?;
    if w.is_some() {
        bail!("trend filtering uses unit weights; drop the weight column");
    }
    let problem = TfProblem::new(y, args.lambda, args.order, args.penalty)?;

    let start = match &args.warm_start {
        Some(path) => {
            let part = io::read_sign_partition(path)
                .with_context(|| format!("reading warm start {}", path.display()))?;
            if part.len() != problem.num_rows() {
                bail!(
                    "warm-start partition has m = {}, problem needs m = {}",
                    part.len(),
                    problem.num_rows()
                );
            }
            Some(part)
        }
        None => match args.start {
            StartArg::Sign => None, // solver default
            StartArg::Active => Some(SignPartition::all_active(problem.num_rows())),
        },
    };

    let (point, report, partition) = match args.variant {
        VariantArg::Plain => {
            tf_solve_plain_with_partition(&problem, start.as_ref(), args.max_iter)?
        }
        VariantArg::Sf1 => {
            tf_solve_sf1_with_partition(&problem, start.as_ref(), args.sf1, args.max_iter)?
        }
        VariantArg::Sf2 => {
            tf_solve_sf2_with_partition(&problem, start.as_ref(), args.sf2, args.max_iter)?
        }
    };

    if let Some(path) = args.output {
        io::write_data_csv(&path, &point.theta)?;
    }
    if let Some(path) = args.save_partition {
        io::write_sign_partition(&path, &partition)?;
    }
    if let Some(path) = args.report {
        io::write_report(&path, &report)?;
    }
    summarize("tf", &report);
    Ok(status_exit(report.status))
}

#[allow(clippy::too_many_arguments)]
fn cmd_grid(
    seed: u64,
    mut sizes: Vec<usize>,
    full: bool,
    repeats: usize,
    lambda: f64,
    max_iter: usize,
    penalties: Vec<PenaltyArg>,
    orders: Vec<usize>,
    variants: Vec<VariantArg>,
    out: PathBuf,
) -> anyhow::Result<u8> {
    if repeats == 0 {
        bail!("--repeats must be at least 1");
    }
    if full {
        for extra in [170_000usize, 330_000] {
            if !sizes.contains(&extra) {
                sizes.push(extra);
            }
        }
    }
    let mut combos = Vec::new();
    for &order in &orders {
        for &penalty in &penalties {
            combos.push((penalty.into(), order));
        }
    }
    let variants = variants
        .into_iter()
        .map(|v| match v {
            VariantArg::Plain => Variant::Plain,
            VariantArg::Sf1 => Variant::Sf1,
            VariantArg::Sf2 => Variant::Sf2,
        })
        .collect();
    let grid = ExperimentGrid {
        sizes,
        repeats,
        combos,
        variants,
        lambda,
        max_iter,
        seed,
        ..Default::default()
    };
    let (rows, _) = run_grid(&grid)?;
    write_grid_csv(&out, &rows)?;
    for r in &rows {
        println!(
            "n={} {} d={} {}: success {:.2}, median {:.3}s / {} iterations",
            r.n, r.penalty, r.order, r.variant, r.success, r.med_time_s, r.med_iters
        );
    }
    println!("wrote {}", out.display());
    Ok(0)
}
