//! Problem definitions, partitions, solutions, and objective evaluation.
//!
//! Indices are 0-based everywhere in this crate; the file formats in
//! [`crate::io`] are 1-based and converted at the boundary.

use serde::{Deserialize, Serialize};

use crate::diffop::DiffOp;
use crate::error::{Error, Result};

/// Weighted isotonic regression instance: minimize
/// `1/2 sum_i w_i (y_i - theta_i)^2` subject to nondecreasing `theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct IrProblem {
    y: Vec<f64>,
    weights: Vec<f64>,
}

impl IrProblem {
    pub fn new(y: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::InvalidProblem("data must be nonempty".into()));
        }
        if weights.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: y.len(),
                got: weights.len(),
            });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidProblem("data must be finite".into()));
        }
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidProblem("weights must be positive and finite".into()));
        }
        Ok(Self { y, weights })
    }

    pub fn with_unit_weights(y: Vec<f64>) -> Result<Self> {
        let w = vec![1.0; y.len()];
        Self::new(y, w)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction requires n >= 1
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Regularizer kind for trend filtering: `L1` penalizes `|D theta|_1`,
/// `L1Pos` penalizes only positive differences, `|(D theta)_+|_1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Penalty {
    L1,
    L1Pos,
}

impl Penalty {
    /// Lower edge of the dual box: -1 for `L1`, 0 for `L1Pos`. The upper
    /// edge is 1 for both. Multipliers fixed on the negative set sit at
    /// this value.
    pub fn lower_bound(self) -> f64 {
        match self {
            Penalty::L1 => -1.0,
            Penalty::L1Pos => 0.0,
        }
    }
}

impl std::fmt::Display for Penalty {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Penalty::L1 => write!(f, "l1"),
            Penalty::L1Pos => write!(f, "l1pos"),
        }
    }
}

/// Trend filtering instance with unit fit weights: minimize
/// `1/2 |y - theta|^2 + lambda * g(D theta)` with `g` per [`Penalty`].
#[derive(Debug, Clone, PartialEq)]
pub struct TfProblem {
    y: Vec<f64>,
    lambda: f64,
    order: usize,
    penalty: Penalty,
}

impl TfProblem {
    pub fn new(y: Vec<f64>, lambda: f64, order: usize, penalty: Penalty) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidProblem("difference order must be at least 1".into()));
        }
        if y.len() <= order {
            return Err(Error::InvalidProblem(format!(
                "need more than {order} data points for order {order}, got {}",
                y.len()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidProblem("data must be finite".into()));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidProblem("lambda must be positive and finite".into()));
        }
        Ok(Self { y, lambda, order, penalty })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn penalty(&self) -> Penalty {
        self.penalty
    }

    /// Number of difference rows, `n - order`.
    pub fn num_rows(&self) -> usize {
        self.y.len() - self.order
    }

    pub fn diff_op(&self) -> DiffOp {
        DiffOp::new(self.order, self.y.len()).expect("validated at construction")
    }
}

/// One consecutive index block `[lo, hi)` with cached weighted sum `alpha`,
/// weight sum `beta`, and mean `mu = alpha / beta`.
#[derive(Debug, Clone, Copy)]
pub struct Block {
    pub lo: usize,
    pub hi: usize,
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
}

/// Ordered consecutive blocks covering `0..n`; the isotonic active-set state.
///
/// Structural equality ignores the cached sums: two partitions are equal when
/// their block ranges agree, which is what the file format round-trips.
#[derive(Debug, Clone)]
pub struct BlockPartition {
    n: usize,
    blocks: Vec<Block>,
}

impl PartialEq for BlockPartition {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.blocks.len() == other.blocks.len()
            && self
                .blocks
                .iter()
                .zip(&other.blocks)
                .all(|(a, b)| a.lo == b.lo && a.hi == b.hi)
    }
}

impl BlockPartition {
    /// The all-singletons partition; cached sums start at zero until
    /// [`BlockPartition::refresh_stats`] or a solver fills them.
    pub fn singletons(n: usize) -> Self {
        let blocks = (0..n)
            .map(|i| Block { lo: i, hi: i + 1, alpha: 0.0, beta: 0.0, mu: 0.0 })
            .collect();
        Self { n, blocks }
    }

    /// One block spanning everything.
    pub fn single_block(n: usize) -> Self {
        Self {
            n,
            blocks: vec![Block { lo: 0, hi: n, alpha: 0.0, beta: 0.0, mu: 0.0 }],
        }
    }

    /// Builds from 0-based half-open ranges, validating contiguous coverage.
    pub fn from_ranges(n: usize, ranges: &[(usize, usize)]) -> Result<Self> {
        let mut cursor = 0usize;
        for &(lo, hi) in ranges {
            if lo != cursor {
                return Err(Error::InvalidPartition(format!(
                    "blocks must tile 0..{n}: expected next block to start at {cursor}, found {lo}"
                )));
            }
            if hi <= lo {
                return Err(Error::InvalidPartition(format!(
                    "empty or inverted block ({lo}, {hi})"
                )));
            }
            cursor = hi;
        }
        if cursor != n {
            return Err(Error::InvalidPartition(format!(
                "blocks cover 0..{cursor} but n = {n}"
            )));
        }
        let blocks = ranges
            .iter()
            .map(|&(lo, hi)| Block { lo, hi, alpha: 0.0, beta: 0.0, mu: 0.0 })
            .collect();
        Ok(Self { n, blocks })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn ranges(&self) -> Vec<(usize, usize)> {
        self.blocks.iter().map(|b| (b.lo, b.hi)).collect()
    }

    /// Recomputes `alpha`, `beta`, `mu` for every block from the problem data.
    pub fn refresh_stats(&mut self, problem: &IrProblem) -> Result<()> {
        if problem.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: problem.len() });
        }
        let y = problem.y();
        let w = problem.weights();
        for b in &mut self.blocks {
            let mut alpha = 0.0;
            let mut beta = 0.0;
            for i in b.lo..b.hi {
                alpha += w[i] * y[i];
                beta += w[i];
            }
            b.alpha = alpha;
            b.beta = beta;
            b.mu = alpha / beta;
        }
        Ok(())
    }

    /// Expands block means to a full fitted vector (requires fresh stats).
    pub fn theta(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for b in &self.blocks {
            for v in &mut out[b.lo..b.hi] {
                *v = b.mu;
            }
        }
        out
    }

    pub(crate) fn from_blocks(n: usize, blocks: Vec<Block>) -> Self {
        Self { n, blocks }
    }
}

/// Membership of one difference row in the trend-filtering partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SignLabel {
    /// `(D theta)_j > 0`; multiplier fixed at 1.
    Positive,
    /// `(D theta)_j < 0`; multiplier fixed at the lower box edge.
    Negative,
    /// `(D theta)_j = 0`; multiplier free.
    Active,
}

/// Disjoint exhaustive split of the difference rows into positive, negative,
/// and active sets; the trend-filtering active-set state.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SignPartition {
    labels: Vec<SignLabel>,
}

impl SignPartition {
    /// Everything active: the first subspace step projects onto `D theta = 0`.
    pub fn all_active(m: usize) -> Self {
        Self { labels: vec![SignLabel::Active; m] }
    }

    /// Classifies each row by the sign of `(D y)_j`, the natural cold start.
    pub fn from_slopes(problem: &TfProblem) -> Self {
        let dy = problem.diff_op().apply(problem.y()).expect("dims match");
        let labels = dy
            .iter()
            .map(|&v| {
                if v > 0.0 {
                    SignLabel::Positive
                } else if v < 0.0 {
                    SignLabel::Negative
                } else {
                    SignLabel::Active
                }
            })
            .collect();
        Self { labels }
    }

    pub fn from_labels(labels: Vec<SignLabel>) -> Self {
        Self { labels }
    }

    /// Builds from explicit 0-based index sets, validating disjoint coverage.
    pub fn from_sets(m: usize, pos: &[usize], neg: &[usize], active: &[usize]) -> Result<Self> {
        let mut labels = vec![None; m];
        let mut place = |set: &[usize], label: SignLabel| -> Result<()> {
            for &j in set {
                if j >= m {
                    return Err(Error::InvalidPartition(format!(
                        "index {j} out of range for m = {m}"
                    )));
                }
                if labels[j].is_some() {
                    return Err(Error::InvalidPartition(format!(
                        "index {j} assigned to more than one set"
                    )));
                }
                labels[j] = Some(label);
            }
            Ok(())
        };
        place(pos, SignLabel::Positive)?;
        place(neg, SignLabel::Negative)?;
        place(active, SignLabel::Active)?;
        let labels = labels
            .into_iter()
            .enumerate()
            .map(|(j, l)| {
                l.ok_or_else(|| {
                    Error::InvalidPartition(format!("index {j} missing from P, N, and A"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, j: usize) -> SignLabel {
        self.labels[j]
    }

    pub fn labels(&self) -> &[SignLabel] {
        &self.labels
    }

    pub(crate) fn set(&mut self, j: usize, label: SignLabel) {
        self.labels[j] = label;
    }

    pub fn indices_of(&self, label: SignLabel) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == label)
            .map(|(j, _)| j)
            .collect()
    }
}

/// Fitted values plus dual multipliers.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalDualPoint {
    pub theta: Vec<f64>,
    pub z: Vec<f64>,
}

/// How a solve ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    IterationLimit,
    Cycled,
}

/// Iteration counts, merge/split totals, violation trajectory (trend
/// filtering only), final objective, and wall time in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub iterations: usize,
    pub merge_count: usize,
    pub split_count: usize,
    pub violation_trajectory: Vec<usize>,
    pub objective: f64,
    pub wall_time: f64,
}

/// Compensated (Kahan) accumulator; keeps objective sums accurate at n >= 1e5.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn add(&mut self, term: f64) {
        let y = term - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Weighted least-squares objective `1/2 sum_i w_i (y_i - theta_i)^2`.
pub fn objective_ir(problem: &IrProblem, theta: &[f64]) -> Result<f64> {
    if theta.len() != problem.len() {
        return Err(Error::DimensionMismatch { expected: problem.len(), got: theta.len() });
    }
    let mut acc = KahanSum::default();
    for ((&yi, &wi), &ti) in problem.y().iter().zip(problem.weights()).zip(theta) {
        let r = yi - ti;
        acc.add(0.5 * wi * r * r);
    }
    Ok(acc.value())
}

/// Penalized objective `1/2 |y - theta|^2 + lambda * g(D theta)`.
pub fn objective_tf(problem: &TfProblem, theta: &[f64]) -> Result<f64> {
    if theta.len() != problem.len() {
        return Err(Error::DimensionMismatch { expected: problem.len(), got: theta.len() });
    }
    let mut fit = KahanSum::default();
    for (&yi, &ti) in problem.y().iter().zip(theta) {
        let r = yi - ti;
        fit.add(0.5 * r * r);
    }
    let d_theta = problem.diff_op().apply(theta)?;
    let mut reg = KahanSum::default();
    for &v in &d_theta {
        match problem.penalty() {
            Penalty::L1 => reg.add(v.abs()),
            Penalty::L1Pos => reg.add(v.max(0.0)),
        }
    }
    Ok(fit.value() + problem.lambda() * reg.value())
}
