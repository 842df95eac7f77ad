//! Slow-but-sure reference solvers and checkers for validating the fast
//! paths at desk scale. These share no numerics with the solvers they
//! check: the isotonic oracle runs projected coordinate descent on the
//! nonnegativity-constrained dual, the trend-filtering oracle on the
//! box-constrained least-squares dual, and the exhaustive oracle simply
//! tries every sign partition.


use crate::error::{Error, Result};
use crate::model::{IrProblem, SignLabel, SignPartition, TfProblem};
use crate::tf::{optimality_check_tf, ssm};

/// Sweep budget and coordinate-change tolerance for the iterative oracles.
#[derive(Debug, Clone, Copy)]
pub struct OracleConfig {
    pub max_sweeps: usize,
    pub tol: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { max_sweeps: 200_000, tol: 1e-10 }
    }
}

/// Cyclic coordinate descent with nonnegativity projection on the isotonic
/// dual; recovers `theta = y - W^{-1} D^T z`. Stops when the largest
/// coordinate change in a sweep falls below `cfg.tol`.
pub fn dual_cd_ir(problem: &IrProblem, cfg: &OracleConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = problem.len();
    if n < 2 {
        return Err(Error::InvalidProblem("dual coordinate descent needs n >= 2".into()));
    }
    let y = problem.y();
    let w = problem.weights();
    let m = n - 1;
    let mut z = vec![0.0; m];
    let mut theta: Vec<f64> = y.to_vec();
    // Hessian diagonal of the dual: 1/w_i + 1/w_{i+1}.
    let diag: Vec<f64> = (0..m).map(|i| 1.0 / w[i] + 1.0 / w[i + 1]).collect();
    let mut last_change = f64::INFINITY;
    for _ in 0..cfg.max_sweeps {
        let mut max_change = 0.0f64;
        for i in 0..m {
            // gradient coordinate: theta_{i+1} - theta_i
            let g = theta[i + 1] - theta[i];
            let candidate = (z[i] - g / diag[i]).max(0.0);
            let delta = candidate - z[i];
            if delta != 0.0 {
                z[i] = candidate;
                theta[i] -= delta / w[i];
                theta[i + 1] += delta / w[i + 1];
                max_change = max_change.max(delta.abs());
            }
        }
        if max_change < cfg.tol {
            return Ok((theta, z));
        }
        last_change = max_change;
    }
    Err(Error::NotConverged { sweeps: cfg.max_sweeps, last_change })
}

/// Projected cyclic coordinate descent on the box-constrained dual of the
/// trend-filtering problem: minimize `1/2 |y - lambda D^T z|^2` over the
/// box, then `theta = y - lambda D^T z`.
pub fn dual_cd_tf(problem: &TfProblem, cfg: &OracleConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    let op = problem.diff_op();
    let n = problem.len();
    let m = problem.num_rows();
    let lambda = problem.lambda();
    let lower = problem.penalty().lower_bound();
    let stencil = op.stencil().to_vec();
    let step_scale: f64 = stencil.iter().map(|c| c * c).sum();

    let mut z = vec![0.0; m];
    let mut theta: Vec<f64> = problem.y().to_vec();
    let mut last_change = f64::INFINITY;
    for _ in 0..cfg.max_sweeps {
        let mut max_change = 0.0f64;
        for j in 0..m {
            let mut d_theta_j = 0.0;
            for (k, &c) in stencil.iter().enumerate() {
                d_theta_j += c * theta[j + k];
            }
            let candidate = (z[j] + d_theta_j / (lambda * step_scale)).clamp(lower, 1.0);
            let delta = candidate - z[j];
            if delta != 0.0 {
                z[j] = candidate;
                for (k, &c) in stencil.iter().enumerate() {
                    theta[j + k] -= lambda * delta * c;
                }
                max_change = max_change.max(delta.abs());
            }
        }
        if max_change < cfg.tol {
            debug_assert_eq!(theta.len(), n);
            return Ok((theta, z));
        }
        last_change = max_change;
    }
    Err(Error::NotConverged { sweeps: cfg.max_sweeps, last_change })
}

/// Tries every sign partition (3^m of them) and returns the subspace
/// minimizer of the first one passing the optimality check. Limited to
/// `m <= 12`; failure to find any passing partition signals a bug in the
/// subspace solver or the checker.
pub fn exhaustive_tf(problem: &TfProblem) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = problem.num_rows();
    if m > 12 {
        return Err(Error::InvalidProblem(format!(
            "exhaustive search is limited to n - d <= 12, got {m}"
        )));
    }
    let total = 3usize.pow(m as u32);
    let mut labels = vec![SignLabel::Positive; m];
    for code in 0..total {
        let mut c = code;
        for l in labels.iter_mut() {
            *l = match c % 3 {
                0 => SignLabel::Positive,
                1 => SignLabel::Negative,
                _ => SignLabel::Active,
            };
            c /= 3;
        }
        let part = SignPartition::from_labels(labels.clone());
        let res = match ssm(problem, &part) {
            Ok(r) => r,
            Err(Error::CholeskyBreakdown { .. }) => continue,
            Err(e) => return Err(e),
        };
        if res.violations.is_empty() && optimality_check_tf(problem, &res.point, 1e-8) {
            return Ok((res.point.theta, res.point.z));
        }
    }
    Err(Error::NoOptimalPartition)
}

/// KKT verification for isotonic regression: monotone fit, nonnegative
/// multipliers, stationarity `w_i (y_i - theta_i) = z_i - z_{i-1}` with
/// zero boundary multipliers, and complementarity `z_i (theta_{i+1} -
/// theta_i) <= tol`.
pub fn kkt_check_ir(problem: &IrProblem, theta: &[f64], z: &[f64], tol: f64) -> bool {
    let n = problem.len();
    // z has length n - 1 (empty when n = 1)
    if theta.len() != n || z.len() + 1 != n {
        return false;
    }
    let y = problem.y();
    let w = problem.weights();
    for i in 0..n.saturating_sub(1) {
        if theta[i + 1] - theta[i] < -tol {
            return false;
        }
        if z[i] < -tol {
            return false;
        }
        if z[i] * (theta[i + 1] - theta[i]) > tol {
            return false;
        }
    }
    for i in 0..n {
        let z_left = if i == 0 { 0.0 } else { z[i - 1] };
        let z_right = if i + 1 == n { 0.0 } else { z[i] };
        if (w[i] * (y[i] - theta[i]) - (z_right - z_left)).abs() > tol {
            return false;
        }
    }
    true
}
