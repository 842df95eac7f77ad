//! Isotonic regression solvers: sequential PAV and the primal-dual
//! active-set method with warm starts and simultaneous run merges.
//!
//! Both solvers cache per-block weighted sums (`alpha`), weight sums
//! (`beta`), and means (`mu`), so merging two blocks costs O(1) arithmetic.
//! The PDAS solver additionally keeps a worklist of candidate violating
//! boundaries between passes; every maximal strictly-decreasing run of block
//! means either contains a boundary that violated in the previous pass or
//! touches a block merged then, so total work stays linear in `n`.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::model::{
    objective_ir, Block, BlockPartition, IrProblem, KahanSum, SolveReport, SolveStatus,
};

const NIL: usize = usize::MAX;

/// Pool-adjacent-violators with the block-sum caching trick.
///
/// Starts from singletons by construction; `iterations` in the report counts
/// data points consumed.
pub fn pav_solve(problem: &IrProblem) -> (Vec<f64>, SolveReport) {
    let start = Instant::now();
    let y = problem.y();
    let w = problem.weights();
    let n = problem.len();

    let mut blocks: Vec<Block> = Vec::with_capacity(n);
    let mut merges = 0usize;
    for i in 0..n {
        let mut b = Block { lo: i, hi: i + 1, alpha: w[i] * y[i], beta: w[i], mu: y[i] };
        while let Some(top) = blocks.last() {
            if top.mu > b.mu {
                let t = blocks.pop().unwrap();
                b.lo = t.lo;
                b.alpha += t.alpha;
                b.beta += t.beta;
                b.mu = b.alpha / b.beta;
                merges += 1;
            } else {
                break;
            }
        }
        blocks.push(b);
    }

    let partition = BlockPartition::from_blocks(n, blocks);
    let theta = partition.theta();
    let objective = objective_ir(problem, &theta).expect("dimensions match");
    let report = SolveReport {
        status: SolveStatus::Optimal,
        iterations: n,
        merge_count: merges,
        split_count: 0,
        violation_trajectory: Vec::new(),
        objective,
        wall_time: start.elapsed().as_secs_f64(),
    };
    (theta, report)
}

/// Mutable PDAS state: a doubly linked list of block slots plus the
/// worklist of boundaries to examine in the next merge pass.
#[derive(Debug, Clone)]
pub struct IrState {
    n: usize,
    lo: Vec<usize>,
    hi: Vec<usize>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    mu: Vec<f64>,
    prev: Vec<usize>,
    next: Vec<usize>,
    alive: Vec<bool>,
    head: usize,
    /// Left block of each boundary that may violate in the next pass.
    seeds: Vec<usize>,
    mark: Vec<u64>,
    epoch: u64,
    merge_count: usize,
    split_count: usize,
}

/// Initializes the PDAS state from a starting partition: sets per-block
/// means, forms the dual by cumulative sums, and splits every block at
/// every interior position with a negative multiplier (one sweep).
pub fn pdas_ir_init(problem: &IrProblem, start: &BlockPartition) -> Result<IrState> {
    if start.n() != problem.len() {
        return Err(Error::DimensionMismatch { expected: problem.len(), got: start.n() });
    }
    let y = problem.y();
    let w = problem.weights();
    let n = problem.len();

    // Resulting block ranges after the split sweep.
    let mut ranges: Vec<(usize, usize)> = Vec::with_capacity(start.num_blocks());
    let mut splits = 0usize;
    for &(lo, hi) in start.ranges().iter() {
        let mut alpha = 0.0;
        let mut beta = 0.0;
        for i in lo..hi {
            alpha += w[i] * y[i];
            beta += w[i];
        }
        let mu = alpha / beta;
        // z over interior boundaries: cut after i whenever the cumulative
        // sum of w * (y - mu) dips below zero.
        let mut cut_from = lo;
        let mut cum = 0.0;
        for i in lo..hi.saturating_sub(1) {
            cum += w[i] * (y[i] - mu);
            if cum < 0.0 {
                ranges.push((cut_from, i + 1));
                cut_from = i + 1;
                splits += 1;
            }
        }
        ranges.push((cut_from, hi));
    }

    let m = ranges.len();
    let mut state = IrState {
        n,
        lo: Vec::with_capacity(m),
        hi: Vec::with_capacity(m),
        alpha: Vec::with_capacity(m),
        beta: Vec::with_capacity(m),
        mu: Vec::with_capacity(m),
        prev: Vec::with_capacity(m),
        next: Vec::with_capacity(m),
        alive: vec![true; m],
        head: 0,
        seeds: Vec::with_capacity(m),
        mark: vec![0; m],
        epoch: 0,
        merge_count: 0,
        split_count: splits,
    };
    for (slot, &(lo, hi)) in ranges.iter().enumerate() {
        let mut alpha = 0.0;
        let mut beta = 0.0;
        for i in lo..hi {
            alpha += w[i] * y[i];
            beta += w[i];
        }
        state.lo.push(lo);
        state.hi.push(hi);
        state.alpha.push(alpha);
        state.beta.push(beta);
        state.mu.push(alpha / beta);
        state.prev.push(if slot == 0 { NIL } else { slot - 1 });
        state.next.push(if slot + 1 == m { NIL } else { slot + 1 });
        if slot + 1 < m {
            state.seeds.push(slot);
        }
    }
    Ok(state)
}

impl IrState {
    /// Merges every maximal strictly-decreasing run of block means, all at
    /// once; returns false when no run exists (the fixed point).
    ///
    /// Runs are detected against the pass-entry state before any merge is
    /// applied, so the result does not depend on processing order.
    pub fn merge_pass(&mut self) -> bool {
        self.epoch += 1;
        let seeds = std::mem::take(&mut self.seeds);
        let mut runs: Vec<(usize, usize)> = Vec::new();
        for s in seeds {
            if !self.alive[s] || self.mark[s] == self.epoch {
                continue;
            }
            let nx = self.next[s];
            if nx == NIL || !(self.mu[s] > self.mu[nx]) {
                continue;
            }
            let mut start = s;
            while self.prev[start] != NIL && self.mu[self.prev[start]] > self.mu[start] {
                start = self.prev[start];
            }
            let mut end = nx;
            while self.next[end] != NIL && self.mu[end] > self.mu[self.next[end]] {
                end = self.next[end];
            }
            let mut c = start;
            loop {
                self.mark[c] = self.epoch;
                if c == end {
                    break;
                }
                c = self.next[c];
            }
            runs.push((start, end));
        }
        if runs.is_empty() {
            return false;
        }
        for (start, end) in runs {
            let mut alpha = self.alpha[start];
            let mut beta = self.beta[start];
            let mut c = self.next[start];
            loop {
                alpha += self.alpha[c];
                beta += self.beta[c];
                self.alive[c] = false;
                self.merge_count += 1;
                let was_end = c == end;
                c = self.next[c];
                if was_end {
                    break;
                }
            }
            self.alpha[start] = alpha;
            self.beta[start] = beta;
            self.mu[start] = alpha / beta;
            self.hi[start] = self.hi[end];
            self.next[start] = c;
            if c != NIL {
                self.prev[c] = start;
            }
            if self.prev[start] != NIL {
                self.seeds.push(self.prev[start]);
            }
            if self.next[start] != NIL {
                self.seeds.push(start);
            }
        }
        true
    }

    pub fn merge_count(&self) -> usize {
        self.merge_count
    }

    pub fn split_count(&self) -> usize {
        self.split_count
    }

    /// Snapshot of the live blocks, in order, with fresh cached stats.
    pub fn partition(&self) -> BlockPartition {
        let mut blocks = Vec::new();
        let mut c = self.head_slot();
        while c != NIL {
            blocks.push(Block {
                lo: self.lo[c],
                hi: self.hi[c],
                alpha: self.alpha[c],
                beta: self.beta[c],
                mu: self.mu[c],
            });
            c = self.next[c];
        }
        BlockPartition::from_blocks(self.n, blocks)
    }

    /// Fitted values: each index takes its block mean.
    pub fn theta(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        let mut c = self.head_slot();
        while c != NIL {
            for v in &mut out[self.lo[c]..self.hi[c]] {
                *v = self.mu[c];
            }
            c = self.next[c];
        }
        out
    }

    /// Rebuilds the dual from the current blocks: cumulative sums of
    /// `w * (y - mu)` inside each block, exact zeros at block boundaries.
    pub fn reconstruct_z(&self, problem: &IrProblem) -> Vec<f64> {
        debug_assert_eq!(problem.len(), self.n);
        let y = problem.y();
        let w = problem.weights();
        let mut z = vec![0.0; self.n.saturating_sub(1)];
        let mut c = self.head_slot();
        while c != NIL {
            let (lo, hi, mu) = (self.lo[c], self.hi[c], self.mu[c]);
            let mut cum = 0.0;
            for i in lo..hi.saturating_sub(1) {
                cum += w[i] * (y[i] - mu);
                z[i] = cum;
            }
            // boundary multiplier stays exactly zero
            c = self.next[c];
        }
        z
    }

    fn head_slot(&self) -> usize {
        // head slot never dies: merges absorb rightward into the run start.
        debug_assert!(self.alive[self.head]);
        self.head
    }
}

/// Full PDAS solve: initialize from `start` (singletons when `None`),
/// then run merge passes to the fixed point.
pub fn pdas_ir_solve(
    problem: &IrProblem,
    start: Option<&BlockPartition>,
) -> Result<(Vec<f64>, Vec<f64>, SolveReport)> {
    let (theta, z, _, report) = pdas_ir_solve_with_partition(problem, start)?;
    Ok((theta, z, report))
}

/// Like [`pdas_ir_solve`] but also returns the optimal block partition,
/// which is what warm starts of related instances want.
pub fn pdas_ir_solve_with_partition(
    problem: &IrProblem,
    start: Option<&BlockPartition>,
) -> Result<(Vec<f64>, Vec<f64>, BlockPartition, SolveReport)> {
    let clock = Instant::now();
    let singletons;
    let start = match start {
        Some(p) => p,
        None => {
            singletons = BlockPartition::singletons(problem.len());
            &singletons
        }
    };
    let mut state = pdas_ir_init(problem, start)?;
    let mut passes = 0usize;
    while state.merge_pass() {
        passes += 1;
    }
    let theta = state.theta();
    let z = state.reconstruct_z(problem);
    let objective = objective_ir(problem, &theta).expect("dimensions match");
    debug_assert!(
        state.merge_count() + state.split_count() <= 2 * (problem.len() - 1).max(0)
    );
    let report = SolveReport {
        status: SolveStatus::Optimal,
        iterations: passes,
        merge_count: state.merge_count(),
        split_count: state.split_count(),
        violation_trajectory: Vec::new(),
        objective,
        wall_time: clock.elapsed().as_secs_f64(),
    };
    Ok((theta, z, state.partition(), report))
}

/// Weighted mean of a slice pair, for tests and small utilities.
#[allow(dead_code)]
pub(crate) fn weighted_mean(y: &[f64], w: &[f64]) -> f64 {
    let mut num = KahanSum::default();
    let mut den = KahanSum::default();
    for (&yi, &wi) in y.iter().zip(w) {
        num.add(wi * yi);
        den.add(wi);
    }
    num.value() / den.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1_problem() -> IrProblem {
        IrProblem::with_unit_weights(vec![6.0, 4.0, 2.0, 9.0, 11.0, 4.0]).unwrap()
    }

    #[test]
    fn pav_already_isotonic() {
        let p = IrProblem::with_unit_weights(vec![1.0, 2.0, 3.0]).unwrap();
        let (theta, report) = pav_solve(&p);
        assert_eq!(theta, vec![1.0, 2.0, 3.0]);
        assert_eq!(report.merge_count, 0);
    }

    #[test]
    fn pav_six_point_example() {
        let (theta, report) = pav_solve(&fig1_problem());
        assert_eq!(theta, vec![4.0, 4.0, 4.0, 8.0, 8.0, 8.0]);
        assert_eq!(report.merge_count, 4);
        assert_eq!(report.objective, 17.0);
    }

    #[test]
    fn pav_weighted_pair() {
        let p = IrProblem::new(vec![2.0, 1.0], vec![1.0, 3.0]).unwrap();
        let (theta, _) = pav_solve(&p);
        assert_eq!(theta, vec![1.25, 1.25]);
    }

    #[test]
    fn init_singletons_no_splits() {
        let p = fig1_problem();
        let state = pdas_ir_init(&p, &BlockPartition::singletons(6)).unwrap();
        assert_eq!(state.split_count(), 0);
        assert_eq!(state.partition().num_blocks(), 6);
        // all-zero dual for singleton blocks
        assert_eq!(state.reconstruct_z(&p), vec![0.0; 5]);
    }

    #[test]
    fn init_splits_single_block_three_points() {
        // y = (1, 3, 2) on one block: mu = 2, z = (-1, 0) -> split after 0.
        let p = IrProblem::with_unit_weights(vec![1.0, 3.0, 2.0]).unwrap();
        let state = pdas_ir_init(&p, &BlockPartition::single_block(3)).unwrap();
        assert_eq!(state.split_count(), 1);
        assert_eq!(state.partition().ranges(), vec![(0, 1), (1, 3)]);
    }

    #[test]
    fn init_splits_six_point_single_block() {
        // mu = 6; cumulative z = (0, -2, -6, -3, 2): splits after indices
        // 1, 2, 3 giving blocks {0,1}, {2}, {3}, {4,5}.
        let p = fig1_problem();
        let state = pdas_ir_init(&p, &BlockPartition::single_block(6)).unwrap();
        assert_eq!(state.split_count(), 3);
        assert_eq!(state.partition().ranges(), vec![(0, 2), (2, 3), (3, 4), (4, 6)]);
        // the subsequent merge passes still reach the optimum
        let (theta, _, _) = pdas_ir_solve(&p, Some(&BlockPartition::single_block(6))).unwrap();
        assert_eq!(theta, vec![4.0, 4.0, 4.0, 8.0, 8.0, 8.0]);
    }

    #[test]
    fn merge_pass_merges_disjoint_runs_simultaneously() {
        // means (4, 2, 9, 11, 4): runs {4,2} and {11,4} merge in one pass.
        let p = IrProblem::with_unit_weights(vec![4.0, 2.0, 9.0, 11.0, 4.0]).unwrap();
        let mut state = pdas_ir_init(&p, &BlockPartition::singletons(5)).unwrap();
        assert!(state.merge_pass());
        assert_eq!(state.partition().ranges(), vec![(0, 2), (2, 3), (3, 5)]);
        assert_eq!(state.merge_count(), 2);
        let part = state.partition();
        assert_eq!(part.blocks()[0].mu, 3.0);
        assert_eq!(part.blocks()[2].mu, 7.5);
    }

    #[test]
    fn merge_pass_no_violators() {
        let p = IrProblem::with_unit_weights(vec![1.0, 2.0, 3.0]).unwrap();
        let mut state = pdas_ir_init(&p, &BlockPartition::singletons(3)).unwrap();
        assert!(!state.merge_pass());
        assert_eq!(state.merge_count(), 0);
    }

    #[test]
    fn merge_pass_three_block_run() {
        let p = IrProblem::with_unit_weights(vec![9.0, 5.0, 1.0]).unwrap();
        let mut state = pdas_ir_init(&p, &BlockPartition::singletons(3)).unwrap();
        assert!(state.merge_pass());
        let part = state.partition();
        assert_eq!(part.num_blocks(), 1);
        assert_eq!(part.blocks()[0].mu, 5.0);
        assert_eq!(state.merge_count(), 2);
        assert!(!state.merge_pass());
    }

    #[test]
    fn equal_means_not_merged() {
        let p = IrProblem::with_unit_weights(vec![2.0, 2.0, 2.0]).unwrap();
        let mut state = pdas_ir_init(&p, &BlockPartition::singletons(3)).unwrap();
        assert!(!state.merge_pass());
        assert_eq!(state.partition().num_blocks(), 3);
    }

    #[test]
    fn pdas_six_point_merge_count() {
        let (theta, z, report) = pdas_ir_solve(&fig1_problem(), None).unwrap();
        assert_eq!(theta, vec![4.0, 4.0, 4.0, 8.0, 8.0, 8.0]);
        assert_eq!(report.merge_count, 4);
        assert_eq!(report.split_count, 0);
        // dual at the optimum: cumulative sums inside blocks, zero at cuts
        assert_eq!(z, vec![2.0, 2.0, 0.0, 1.0, 4.0]);
        assert_eq!(report.status, SolveStatus::Optimal);
    }

    #[test]
    fn pdas_single_point() {
        let p = IrProblem::with_unit_weights(vec![5.0]).unwrap();
        let (theta, z, report) = pdas_ir_solve(&p, None).unwrap();
        assert_eq!(theta, vec![5.0]);
        assert!(z.is_empty());
        assert_eq!(report.merge_count, 0);
        assert_eq!(report.iterations, 0); // no pass changed anything
    }

    #[test]
    fn pdas_matches_pav_on_fixed_examples() {
        let cases: Vec<Vec<f64>> = vec![
            vec![1.0, 2.0, 3.0],
            vec![3.0, 2.0, 1.0],
            vec![5.0, 1.0, 4.0, 2.0, 3.0],
            vec![1.0, 1.0, 1.0],
            vec![2.0, -1.0, 2.0, -1.0, 2.0, -1.0],
        ];
        for y in cases {
            let p = IrProblem::with_unit_weights(y.clone()).unwrap();
            let (pav_theta, _) = pav_solve(&p);
            let (pdas_theta, _, _) = pdas_ir_solve(&p, None).unwrap();
            for (a, b) in pav_theta.iter().zip(&pdas_theta) {
                assert!((a - b).abs() < 1e-12, "y={y:?}");
            }
        }
    }

    #[test]
    fn warm_start_from_optimal_partition_is_fixed_point() {
        let p = fig1_problem();
        let (_, _, cold) = pdas_ir_solve(&p, None).unwrap();
        assert_eq!(cold.merge_count, 4);
        let optimal = BlockPartition::from_ranges(6, &[(0, 3), (3, 6)]).unwrap();
        let (theta, _, warm) = pdas_ir_solve(&p, Some(&optimal)).unwrap();
        assert_eq!(theta, vec![4.0, 4.0, 4.0, 8.0, 8.0, 8.0]);
        assert_eq!(warm.merge_count, 0);
        assert_eq!(warm.split_count, 0);
    }

    #[test]
    fn init_rejects_wrong_size() {
        let p = fig1_problem();
        assert!(pdas_ir_init(&p, &BlockPartition::singletons(5)).is_err());
    }
}
