//! Primal-dual active-set solvers for trend filtering: subspace
//! minimization, violation detection, the standard partition update, and
//! two safeguarded variants.
//!
//! Each iteration fixes the multipliers on the signed sets (1 on positive
//! rows, the lower box edge on negative rows), solves the banded Gram
//! system for the free multipliers on the active rows, and recovers
//! `theta = y - lambda * D^T z`. Indices whose primal sign or dual box
//! constraint breaks form the violation sets; an empty union certifies
//! optimality. The plain update switches every violated index at once and
//! may cycle; SF1 falls back to single least-index moves after `t_max`
//! consecutive non-improvements, while SF2 moves a dynamically sized
//! portion of the most-violated indices against a FIFO reference queue.

use std::collections::{HashSet, VecDeque};
use std::time::Instant;

use crate::diffop::{gram_solve, RowSelection};
use crate::error::{Error, Result};
use crate::model::{
    objective_tf, PrimalDualPoint, SignLabel, SignPartition, SolveReport, SolveStatus,
    TfProblem,
};

/// Indices violating their sign or box conditions, grouped by origin.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ViolationSets {
    /// `j` in the positive set with `(D theta)_j < 0`.
    pub pos: Vec<usize>,
    /// `j` in the negative set with `(D theta)_j > 0`.
    pub neg: Vec<usize>,
    /// Active `j` with `z_j > 1`.
    pub active_high: Vec<usize>,
    /// Active `j` with `z_j` below the lower box edge.
    pub active_low: Vec<usize>,
}

impl ViolationSets {
    pub fn total(&self) -> usize {
        self.pos.len() + self.neg.len() + self.active_high.len() + self.active_low.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    /// Each violated index with the label it would move to under the
    /// standard update, in ascending index order.
    pub fn moves(&self) -> Vec<(usize, SignLabel)> {
        let mut out = Vec::with_capacity(self.total());
        out.extend(self.pos.iter().map(|&j| (j, SignLabel::Active)));
        out.extend(self.neg.iter().map(|&j| (j, SignLabel::Active)));
        out.extend(self.active_high.iter().map(|&j| (j, SignLabel::Positive)));
        out.extend(self.active_low.iter().map(|&j| (j, SignLabel::Negative)));
        out.sort_unstable_by_key(|&(j, _)| j);
        out
    }
}

/// Subspace minimizer with its violation sets and the differences
/// `D theta` (kept for ranking and diagnostics).
#[derive(Debug, Clone)]
pub struct SsmResult {
    pub point: PrimalDualPoint,
    pub violations: ViolationSets,
    pub d_theta: Vec<f64>,
}

/// Solves the subspace problem for a sign partition.
///
/// With an empty active set the solve is skipped and the multipliers are
/// just the fixed values. Gram breakdown from ill-posed selections
/// propagates as an error.
pub fn ssm(problem: &TfProblem, part: &SignPartition) -> Result<SsmResult> {
    let m = problem.num_rows();
    if part.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: part.len() });
    }
    let op = problem.diff_op();
    let n = problem.len();
    let lambda = problem.lambda();
    let lower = problem.penalty().lower_bound();

    let mut z = vec![0.0; m];
    let mut active = Vec::new();
    for (j, &label) in part.labels().iter().enumerate() {
        match label {
            SignLabel::Positive => z[j] = 1.0,
            SignLabel::Negative => z[j] = lower,
            SignLabel::Active => active.push(j),
        }
    }

    if !active.is_empty() {
        // rhs = D_A (y - lambda D_I^T z_I) / lambda, with z zero on A here
        let mut scratch_n = vec![0.0; n];
        op.apply_transpose_into(&z, &mut scratch_n);
        for (v, &yi) in scratch_n.iter_mut().zip(problem.y()) {
            *v = yi - lambda * *v;
        }
        let mut scratch_m = vec![0.0; m];
        op.apply_into(&scratch_n, &mut scratch_m);
        let rhs: Vec<f64> = active.iter().map(|&j| scratch_m[j] / lambda).collect();
        let sel = RowSelection::new(active.clone(), m)?;
        let z_active = gram_solve(&op, &sel, &rhs)?;
        for (&j, &v) in active.iter().zip(&z_active) {
            z[j] = v;
        }
    }

    let mut theta = vec![0.0; n];
    op.apply_transpose_into(&z, &mut theta);
    for (t, &yi) in theta.iter_mut().zip(problem.y()) {
        *t = yi - lambda * *t;
    }
    let mut d_theta = vec![0.0; m];
    op.apply_into(&theta, &mut d_theta);
    debug_assert!(
        active.iter().all(|&j| d_theta[j].abs() <= 1e-8),
        "active rows of D theta should vanish by construction"
    );

    let mut violations = ViolationSets::default();
    for (j, &label) in part.labels().iter().enumerate() {
        match label {
            SignLabel::Positive => {
                if d_theta[j] < 0.0 {
                    violations.pos.push(j);
                }
            }
            SignLabel::Negative => {
                if d_theta[j] > 0.0 {
                    violations.neg.push(j);
                }
            }
            SignLabel::Active => {
                if z[j] > 1.0 {
                    violations.active_high.push(j);
                } else if z[j] < lower {
                    violations.active_low.push(j);
                }
            }
        }
    }

    Ok(SsmResult { point: PrimalDualPoint { theta, z }, violations, d_theta })
}

/// The standard update: violated signed indices become active, violated
/// active indices take the sign they overshot toward. All moves land
/// atomically in one new partition.
pub fn partition_update_standard(part: &SignPartition, v: &ViolationSets) -> SignPartition {
    apply_moves(part, v.moves())
}

fn apply_moves(
    part: &SignPartition,
    moves: impl IntoIterator<Item = (usize, SignLabel)>,
) -> SignPartition {
    let mut next = part.clone();
    for (j, label) in moves {
        next.set(j, label);
    }
    next
}

/// SF1: after `t_max` consecutive iterations without improving the best
/// violation count, switch to single least-index moves.
#[derive(Debug, Clone, Copy)]
pub struct Sf1Config {
    pub t_max: usize,
}

impl Default for Sf1Config {
    fn default() -> Self {
        Self { t_max: 5 }
    }
}

/// SF2: FIFO queue of recent violation counts whose maximum is the
/// reference; the moved proportion shrinks on stagnation and grows on
/// fresh minima.
#[derive(Debug, Clone, Copy)]
pub struct Sf2Config {
    pub queue_len: usize,
    pub shrink: f64,
    pub expand: f64,
    pub initial_proportion: f64,
}

impl Default for Sf2Config {
    fn default() -> Self {
        Self { queue_len: 5, shrink: 0.9, expand: 1.1, initial_proportion: 1.0 }
    }
}

impl Sf2Config {
    fn validate(&self) -> Result<()> {
        if self.queue_len == 0 {
            return Err(Error::InvalidProblem("sf2 queue length must be positive".into()));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::InvalidProblem("sf2 shrink factor must lie in (0, 1)".into()));
        }
        if !(self.expand > 1.0) {
            return Err(Error::InvalidProblem("sf2 expand factor must exceed 1".into()));
        }
        if !(self.initial_proportion > 0.0 && self.initial_proportion <= 1.0) {
            return Err(Error::InvalidProblem("sf2 proportion must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

/// Per-iteration log of an SF1 run.
#[derive(Debug, Clone, Default)]
pub struct Sf1Trace {
    pub violation_counts: Vec<usize>,
    pub best_counts: Vec<usize>,
    pub fallback_steps: Vec<bool>,
    pub moved_counts: Vec<usize>,
}

/// Per-iteration log of an SF2 run.
#[derive(Debug, Clone, Default)]
pub struct Sf2Trace {
    pub violation_counts: Vec<usize>,
    pub reference_max: Vec<Option<usize>>,
    pub proportions: Vec<f64>,
    pub moved_counts: Vec<usize>,
}

fn default_start(problem: &TfProblem) -> SignPartition {
    SignPartition::from_slopes(problem)
}

fn partition_key(part: &SignPartition) -> u64 {
    use std::hash::{Hash, Hasher};
    let mut h = std::collections::hash_map::DefaultHasher::new();
    part.labels().hash(&mut h);
    h.finish()
}

fn finish(
    problem: &TfProblem,
    status: SolveStatus,
    iterations: usize,
    trajectory: Vec<usize>,
    point: PrimalDualPoint,
    clock: Instant,
) -> (PrimalDualPoint, SolveReport) {
    let objective = objective_tf(problem, &point.theta).expect("dimensions match");
    let report = SolveReport {
        status,
        iterations,
        merge_count: 0,
        split_count: 0,
        violation_trajectory: trajectory,
        objective,
        wall_time: clock.elapsed().as_secs_f64(),
    };
    (point, report)
}

/// Plain PDAS: full standard updates, stopping on an empty violation set,
/// a repeated partition (cycle), or the iteration budget.
///
/// With `start = None` the rows are classified by the sign of `(D y)_j`,
/// matching the convention of the cycling example.
pub fn tf_solve_plain(
    problem: &TfProblem,
    start: Option<&SignPartition>,
    max_iter: usize,
) -> Result<(PrimalDualPoint, SolveReport)> {
    let (point, report, _) = tf_solve_plain_with_partition(problem, start, max_iter)?;
    Ok((point, report))
}

/// Plain PDAS, additionally returning the partition at termination: the
/// certifying one on `Optimal`, the repeated one on `Cycled`, and the next
/// partition to try on `IterationLimit`.
pub fn tf_solve_plain_with_partition(
    problem: &TfProblem,
    start: Option<&SignPartition>,
    max_iter: usize,
) -> Result<(PrimalDualPoint, SolveReport, SignPartition)> {
    if max_iter == 0 {
        return Err(Error::InvalidProblem("max_iter must be at least 1".into()));
    }
    let clock = Instant::now();
    let mut part = start.cloned().unwrap_or_else(|| default_start(problem));
    let mut visited: HashSet<u64> = HashSet::new();
    let mut trajectory = Vec::new();
    let mut last: Option<PrimalDualPoint> = None;
    for k in 0..max_iter {
        if !visited.insert(partition_key(&part)) {
            let point = last.expect("a repeat needs at least one prior iteration");
            let (point, report) =
                finish(problem, SolveStatus::Cycled, k, trajectory, point, clock);
            return Ok((point, report, part));
        }
        let res = ssm(problem, &part)?;
        trajectory.push(res.violations.total());
        if res.violations.is_empty() {
            let (point, report) =
                finish(problem, SolveStatus::Optimal, k + 1, trajectory, res.point, clock);
            return Ok((point, report, part));
        }
        part = partition_update_standard(&part, &res.violations);
        last = Some(res.point);
    }
    let point = last.expect("max_iter >= 1");
    let (point, report) =
        finish(problem, SolveStatus::IterationLimit, max_iter, trajectory, point, clock);
    Ok((point, report, part))
}

/// SF1 per its published form: improvements reset the counter and apply
/// the standard update; after `t_max` consecutive non-improvements the
/// update degrades to moving the single smallest violated index.
pub fn tf_solve_sf1(
    problem: &TfProblem,
    start: Option<&SignPartition>,
    cfg: Sf1Config,
    max_iter: usize,
) -> Result<(PrimalDualPoint, SolveReport)> {
    let (point, report, _) = solve_sf1(problem, start, cfg, max_iter, None)?;
    Ok((point, report))
}

/// SF1, additionally returning the partition at termination.
pub fn tf_solve_sf1_with_partition(
    problem: &TfProblem,
    start: Option<&SignPartition>,
    cfg: Sf1Config,
    max_iter: usize,
) -> Result<(PrimalDualPoint, SolveReport, SignPartition)> {
    solve_sf1(problem, start, cfg, max_iter, None)
}

/// SF1 with a per-iteration trace (for invariant checks).
pub fn tf_solve_sf1_traced(
    problem: &TfProblem,
    start: Option<&SignPartition>,
    cfg: Sf1Config,
    max_iter: usize,
) -> Result<(PrimalDualPoint, SolveReport, Sf1Trace)> {
    let mut trace = Sf1Trace::default();
    let (point, report, _) = solve_sf1(problem, start, cfg, max_iter, Some(&mut trace))?;
    Ok((point, report, trace))
}

fn solve_sf1(
    problem: &TfProblem,
    start: Option<&SignPartition>,
    cfg: Sf1Config,
    max_iter: usize,
    mut trace: Option<&mut Sf1Trace>,
) -> Result<(PrimalDualPoint, SolveReport, SignPartition)> {
    if max_iter == 0 {
        return Err(Error::InvalidProblem("max_iter must be at least 1".into()));
    }
    let clock = Instant::now();
    let mut part = start.cloned().unwrap_or_else(|| default_start(problem));
    let mut trajectory = Vec::new();
    let mut best = usize::MAX;
    let mut t = 0usize;
    let mut last: Option<PrimalDualPoint> = None;
    for _ in 0..max_iter {
        let res = ssm(problem, &part)?;
        let count = res.violations.total();
        trajectory.push(count);
        if count == 0 {
            let iters = trajectory.len();
            let (point, report) =
                finish(problem, SolveStatus::Optimal, iters, trajectory, res.point, clock);
            return Ok((point, report, part));
        }
        let mut fallback = false;
        if count < best {
            t = 0;
            best = count;
            part = partition_update_standard(&part, &res.violations);
        } else {
            t += 1;
            if t <= cfg.t_max {
                part = partition_update_standard(&part, &res.violations);
            } else {
                fallback = true;
                let (j, label) = res
                    .violations
                    .moves()
                    .into_iter()
                    .next()
                    .expect("violations nonempty");
                part = apply_moves(&part, [(j, label)]);
            }
        }
        if let Some(tr) = trace.as_deref_mut() {
            tr.violation_counts.push(count);
            tr.best_counts.push(best);
            tr.fallback_steps.push(fallback);
            tr.moved_counts.push(if fallback { 1 } else { count });
        }
        last = Some(res.point);
    }
    let point = last.expect("max_iter >= 1");
    let (point, report) =
        finish(problem, SolveStatus::IterationLimit, max_iter, trajectory, point, clock);
    Ok((point, report, part))
}

/// SF2: rank violations by magnitude and move the leading portion.
///
/// The reference is the maximum of a FIFO queue of recent violation counts.
/// A count at or above the reference shrinks the portion (nothing is
/// pushed); a fresh minimum grows it again. The portion is clamped to
/// `[1/|V|, 1]` so at least one index always moves.
pub fn tf_solve_sf2(
    problem: &TfProblem,
    start: Option<&SignPartition>,
    cfg: Sf2Config,
    max_iter: usize,
) -> Result<(PrimalDualPoint, SolveReport)> {
    let (point, report, _) = solve_sf2(problem, start, cfg, max_iter, None)?;
    Ok((point, report))
}

/// SF2, additionally returning the partition at termination.
pub fn tf_solve_sf2_with_partition(
    problem: &TfProblem,
    start: Option<&SignPartition>,
    cfg: Sf2Config,
    max_iter: usize,
) -> Result<(PrimalDualPoint, SolveReport, SignPartition)> {
    solve_sf2(problem, start, cfg, max_iter, None)
}

/// SF2 with a per-iteration trace (for invariant checks).
pub fn tf_solve_sf2_traced(
    problem: &TfProblem,
    start: Option<&SignPartition>,
    cfg: Sf2Config,
    max_iter: usize,
) -> Result<(PrimalDualPoint, SolveReport, Sf2Trace)> {
    let mut trace = Sf2Trace::default();
    let (point, report, _) = solve_sf2(problem, start, cfg, max_iter, Some(&mut trace))?;
    Ok((point, report, trace))
}

fn solve_sf2(
    problem: &TfProblem,
    start: Option<&SignPartition>,
    cfg: Sf2Config,
    max_iter: usize,
    mut trace: Option<&mut Sf2Trace>,
) -> Result<(PrimalDualPoint, SolveReport, SignPartition)> {
    if max_iter == 0 {
        return Err(Error::InvalidProblem("max_iter must be at least 1".into()));
    }
    cfg.validate()?;
    let clock = Instant::now();
    let lambda = problem.lambda();
    let lower = problem.penalty().lower_bound();
    let mut part = start.cloned().unwrap_or_else(|| default_start(problem));
    let mut trajectory = Vec::new();
    let mut queue: VecDeque<usize> = VecDeque::with_capacity(cfg.queue_len);
    let mut portion = cfg.initial_proportion;
    let mut last: Option<PrimalDualPoint> = None;
    for _ in 0..max_iter {
        let res = ssm(problem, &part)?;
        let count = res.violations.total();
        trajectory.push(count);
        if count == 0 {
            let iters = trajectory.len();
            let (point, report) =
                finish(problem, SolveStatus::Optimal, iters, trajectory, res.point, clock);
            return Ok((point, report, part));
        }

        let queue_max = queue.iter().copied().max();
        let queue_min = queue.iter().copied().min();
        if queue_max.is_some_and(|mx| count >= mx) {
            // Stagnation relative to the reference: shrink, keep the queue.
            portion = (cfg.shrink * portion).max(1.0 / count as f64);
        } else if queue_min.is_some_and(|mn| count < mn) {
            if queue.len() == cfg.queue_len {
                queue.pop_front();
            }
            queue.push_back(count);
            portion = (cfg.expand * portion).min(1.0);
        } else {
            // Also covers the empty queue: the first count is just pushed.
            if queue.len() == cfg.queue_len {
                queue.pop_front();
            }
            queue.push_back(count);
        }
        portion = portion.clamp(1.0 / count as f64, 1.0);

        // Rank by the violated quantity: lambda-scaled slope magnitude for
        // signed rows, box excess for active rows. Ties go to lower index.
        let v = &res.violations;
        let mut ranked: Vec<(f64, usize, SignLabel)> =
            Vec::with_capacity(count);
        for &j in &v.pos {
            ranked.push((lambda * res.d_theta[j].abs(), j, SignLabel::Active));
        }
        for &j in &v.neg {
            ranked.push((lambda * res.d_theta[j].abs(), j, SignLabel::Active));
        }
        for &j in &v.active_high {
            ranked.push((res.point.z[j] - 1.0, j, SignLabel::Positive));
        }
        for &j in &v.active_low {
            ranked.push((lower - res.point.z[j], j, SignLabel::Negative));
        }
        ranked.sort_unstable_by(|a, b| {
            b.0.partial_cmp(&a.0).expect("violation keys are finite").then(a.1.cmp(&b.1))
        });
        let take = ((portion * count as f64).floor() as usize).clamp(1, count);
        if let Some(tr) = trace.as_deref_mut() {
            tr.violation_counts.push(count);
            tr.reference_max.push(queue.iter().copied().max());
            tr.proportions.push(portion);
            tr.moved_counts.push(take);
        }
        part = apply_moves(&part, ranked[..take].iter().map(|&(_, j, l)| (j, l)));
        last = Some(res.point);
    }
    let point = last.expect("max_iter >= 1");
    let (point, report) =
        finish(problem, SolveStatus::IterationLimit, max_iter, trajectory, point, clock);
    Ok((point, report, part))
}

/// First-order optimality of a primal-dual pair, checked directly from the
/// definitions: stationarity `theta = y - lambda D^T z`, the dual box, and
/// sign complementarity on each difference.
pub fn optimality_check_tf(problem: &TfProblem, point: &PrimalDualPoint, tol: f64) -> bool {
    let n = problem.len();
    let m = problem.num_rows();
    if point.theta.len() != n || point.z.len() != m {
        return false;
    }
    let op = problem.diff_op();
    let lambda = problem.lambda();
    let lower = problem.penalty().lower_bound();

    let dtz = op.apply_transpose(&point.z).expect("dimensions checked");
    for i in 0..n {
        if (point.theta[i] - (problem.y()[i] - lambda * dtz[i])).abs() > tol {
            return false;
        }
    }
    let d_theta = op.apply(&point.theta).expect("dimensions checked");
    for j in 0..m {
        let zj = point.z[j];
        if zj > 1.0 + tol || zj < lower - tol {
            return false;
        }
        if d_theta[j] > tol && (zj - 1.0).abs() > tol {
            return false;
        }
        if d_theta[j] < -tol && (zj - lower).abs() > tol {
            return false;
        }
    }
    true
}
