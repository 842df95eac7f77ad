//! Success-rate and timing grids over problem size, penalty, order, and
//! solver variant, mirroring the benchmark table layout.

use std::fmt;
use std::path::Path;

use trendfit::tf::{tf_solve_plain, tf_solve_sf1, tf_solve_sf2, Sf1Config, Sf2Config};
use trendfit::{Penalty, Result, SolveReport, SolveStatus, TfProblem};

use crate::gen::{generate, GenKind, GenSpec};
use crate::rng::derive_seed;

/// Which update rule the trend-filtering run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Plain,
    Sf1,
    Sf2,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::Plain => write!(f, "plain"),
            Variant::Sf1 => write!(f, "sf1"),
            Variant::Sf2 => write!(f, "sf2"),
        }
    }
}

/// Grid definition. Every cell `(n, penalty, order, variant)` runs
/// `repeats` instances; the instance data depends only on `(seed, n, rep)`
/// so all variants and regularizers see identical datasets.
#[derive(Debug, Clone)]
pub struct ExperimentGrid {
    pub sizes: Vec<usize>,
    pub repeats: usize,
    pub combos: Vec<(Penalty, usize)>,
    pub variants: Vec<Variant>,
    pub lambda: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub sf1: Sf1Config,
    pub sf2: Sf2Config,
}

impl Default for ExperimentGrid {
    fn default() -> Self {
        Self {
            sizes: vec![10_000],
            repeats: 10,
            combos: vec![
                (Penalty::L1Pos, 1),
                (Penalty::L1, 1),
                (Penalty::L1Pos, 2),
                (Penalty::L1, 2),
            ],
            variants: vec![Variant::Plain, Variant::Sf1, Variant::Sf2],
            lambda: 10.0,
            max_iter: 800,
            seed: 42,
            sf1: Sf1Config::default(),
            sf2: Sf2Config::default(),
        }
    }
}

/// One output row: success fraction plus median time and iterations
/// (medians over the successful runs when any, otherwise over all runs).
#[derive(Debug, Clone)]
pub struct GridRow {
    pub n: usize,
    pub penalty: Penalty,
    pub order: usize,
    pub variant: Variant,
    pub success: f64,
    pub med_time_s: f64,
    pub med_iters: f64,
}

/// Detailed per-run outcome, kept for the acceptance checks.
#[derive(Debug, Clone)]
pub struct CellRun {
    pub n: usize,
    pub penalty: Penalty,
    pub order: usize,
    pub variant: Variant,
    pub rep: usize,
    pub report: SolveReport,
}

pub fn run_grid(grid: &ExperimentGrid) -> Result<(Vec<GridRow>, Vec<CellRun>)> {
    let mut rows = Vec::new();
    let mut runs = Vec::new();
    for &n in &grid.sizes {
        // one dataset per (n, rep), shared across combos and variants
        let data: Vec<Vec<f64>> = (0..grid.repeats)
            .map(|rep| {
                generate(&GenSpec {
                    kind: GenKind::Uniform,
                    n,
                    seed: derive_seed(grid.seed, n, rep),
                })
            })
            .collect::<Result<_>>()?;
        for &(penalty, order) in &grid.combos {
            for &variant in &grid.variants {
                let mut times = Vec::with_capacity(grid.repeats);
                let mut iters = Vec::with_capacity(grid.repeats);
                let mut successes = 0usize;
                for (rep, y) in data.iter().enumerate() {
                    let problem = TfProblem::new(y.clone(), grid.lambda, order, penalty)?;
                    let (_, report) = match variant {
                        Variant::Plain => tf_solve_plain(&problem, None, grid.max_iter)?,
                        Variant::Sf1 => tf_solve_sf1(&problem, None, grid.sf1, grid.max_iter)?,
                        Variant::Sf2 => tf_solve_sf2(&problem, None, grid.sf2, grid.max_iter)?,
                    };
                    let ok = report.status == SolveStatus::Optimal;
                    if ok {
                        successes += 1;
                    }
                    times.push((report.wall_time, ok));
                    iters.push((report.iterations as f64, ok));
                    runs.push(CellRun { n, penalty, order, variant, rep, report });
                }
                rows.push(GridRow {
                    n,
                    penalty,
                    order,
                    variant,
                    success: successes as f64 / grid.repeats as f64,
                    med_time_s: median_preferring_success(&times),
                    med_iters: median_preferring_success(&iters),
                });
            }
        }
    }
    Ok((rows, runs))
}

fn median_preferring_success(values: &[(f64, bool)]) -> f64 {
    let mut pool: Vec<f64> = values.iter().filter(|(_, ok)| *ok).map(|(v, _)| *v).collect();
    if pool.is_empty() {
        pool = values.iter().map(|(v, _)| *v).collect();
    }
    median(&mut pool)
}

pub(crate) fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty());
    values.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite"));
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

/// Writes the pinned CSV schema: `n,penalty,order,variant,success,med_time_s,med_iters`.
pub fn write_grid_csv(path: &Path, rows: &[GridRow]) -> Result<()> {
    let mut out = String::from("n,penalty,order,variant,success,med_time_s,med_iters\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.n, r.penalty, r.order, r.variant, r.success, r.med_time_s, r.med_iters
        ));
    }
    std::fs::write(path, out).map_err(trendfit::Error::from)?;
    Ok(())
}
