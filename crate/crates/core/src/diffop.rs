//! Discrete difference operators and the banded Gram solver behind
//! subspace minimization.
//!
//! The order-`d` operator on `R^n` has `n - d` rows; row `j` carries the
//! stencil of binomial coefficients with alternating signs over columns
//! `j..=j+d`. For `d = 1` a row reads `(1, -1)`, so applying the operator
//! yields forward differences `theta_j - theta_{j+1}`; `d = 2` gives
//! `(1, -2, 1)`, and so on. The same operator arises from the recursion
//! `D(d, n) = D(1, n-d+1) * D(d-1, n)`, which the tests use as an
//! independent construction oracle.

use crate::error::{Error, Result};

/// Order-`d` difference operator on `R^n`, stored as its row stencil.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffOp {
    order: usize,
    n: usize,
    stencil: Vec<f64>,
}

impl DiffOp {
    /// Builds the operator; requires `n > order >= 1`.
    pub fn new(order: usize, n: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidProblem(
                "difference order must be at least 1".into(),
            ));
        }
        if n <= order {
            return Err(Error::InvalidProblem(format!(
                "ambient dimension {n} must exceed difference order {order}"
            )));
        }
        // Pascal's rule with alternating signs: stencil[k] = (-1)^k C(d, k).
        let mut stencil = vec![0.0; order + 1];
        stencil[0] = 1.0;
        for row in 1..=order {
            for k in (1..=row).rev() {
                stencil[k] -= stencil[k - 1];
            }
        }
        Ok(Self { order, n, stencil })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Ambient dimension (number of columns).
    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    /// Number of rows, `n - order`.
    pub fn rows(&self) -> usize {
        self.n - self.order
    }

    /// The signed binomial row pattern, length `order + 1`.
    pub fn stencil(&self) -> &[f64] {
        &self.stencil
    }

    /// Applies the operator: `out_j = sum_k stencil[k] * theta[j + k]`.
    pub fn apply(&self, theta: &[f64]) -> Result<Vec<f64>> {
        if theta.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: theta.len(),
            });
        }
        let mut out = vec![0.0; self.rows()];
        self.apply_into(theta, &mut out);
        Ok(out)
    }

    /// Applies the adjoint: `out_i = sum_j stencil[i - j] * z[j]`.
    pub fn apply_transpose(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.rows() {
            return Err(Error::DimensionMismatch {
                expected: self.rows(),
                got: z.len(),
            });
        }
        let mut out = vec![0.0; self.n];
        self.apply_transpose_into(z, &mut out);
        Ok(out)
    }

    pub(crate) fn apply_into(&self, theta: &[f64], out: &mut [f64]) {
        debug_assert_eq!(theta.len(), self.n);
        debug_assert_eq!(out.len(), self.rows());
        for (j, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (k, &c) in self.stencil.iter().enumerate() {
                acc += c * theta[j + k];
            }
            *o = acc;
        }
    }

    pub(crate) fn apply_transpose_into(&self, z: &[f64], out: &mut [f64]) {
        debug_assert_eq!(z.len(), self.rows());
        debug_assert_eq!(out.len(), self.n);
        out.fill(0.0);
        for (j, &zj) in z.iter().enumerate() {
            if zj == 0.0 {
                continue;
            }
            for (k, &c) in self.stencil.iter().enumerate() {
                out[j + k] += c * zj;
            }
        }
    }

    /// Gram inner product of two rows at index distance `gap`
    /// (zero whenever `gap > order`).
    pub fn gram_coeff(&self, gap: usize) -> f64 {
        if gap > self.order {
            return 0.0;
        }
        self.stencil[gap..]
            .iter()
            .zip(self.stencil.iter())
            .map(|(a, b)| a * b)
            .sum()
    }
}

/// Sorted, duplicate-free subset of operator rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowSelection {
    indices: Vec<usize>,
}

impl RowSelection {
    /// Validates that `indices` is strictly increasing and within `0..rows`.
    pub fn new(indices: Vec<usize>, rows: usize) -> Result<Self> {
        for w in indices.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidPartition(
                    "row selection must be strictly increasing".into(),
                ));
            }
        }
        if let Some(&last) = indices.last() {
            if last >= rows {
                return Err(Error::InvalidPartition(format!(
                    "row index {last} out of range (operator has {rows} rows)"
                )));
            }
        }
        Ok(Self { indices })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Solves `(D_S D_S^T) x = rhs` over the selected rows by banded Cholesky.
///
/// Sorted selections keep the Gram matrix inside a positional bandwidth of
/// `order`: rows further than `order` apart have disjoint supports, so the
/// corresponding Gram entries vanish. The factorization reports a structured
/// error on a non-positive pivot instead of returning garbage.
pub fn gram_solve(op: &DiffOp, sel: &RowSelection, rhs: &[f64]) -> Result<Vec<f64>> {
    let p = sel.len();
    if p == 0 {
        return Err(Error::InvalidPartition(
            "gram_solve requires a nonempty row selection".into(),
        ));
    }
    if rhs.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: rhs.len(),
        });
    }
    let bw = op.order().min(p - 1);
    let stride = bw + 1;
    // Lower band, column-major: band[j * stride + b] = G[j + b, j].
    let mut band = vec![0.0; p * stride];
    let idx = sel.indices();
    for j in 0..p {
        for b in 0..=bw {
            if j + b >= p {
                break;
            }
            let gap = idx[j + b] - idx[j];
            band[j * stride + b] = op.gram_coeff(gap);
        }
    }
    factor_banded(&mut band, p, bw)?;
    let mut x = rhs.to_vec();
    solve_banded(&band, p, bw, &mut x);
    Ok(x)
}

/// In-place banded `L D L^T` factorization on lower-band column storage
/// (root-free Cholesky). The diagonal slot of column `j` ends up holding
/// `d_j`; the subdiagonal slots hold the unit-lower factor.
fn factor_banded(band: &mut [f64], dim: usize, bw: usize) -> Result<()> {
    let stride = bw + 1;
    for j in 0..dim {
        for k in j.saturating_sub(bw)..j {
            let ljk = band[k * stride + (j - k)];
            if ljk == 0.0 {
                continue;
            }
            let scaled = ljk * band[k * stride]; // L[j,k] * d_k
            for b in 0..=(bw - (j - k)) {
                if j + b >= dim {
                    break;
                }
                band[j * stride + b] -= scaled * band[k * stride + (j - k + b)];
            }
        }
        let pivot = band[j * stride];
        if !(pivot > 0.0) || !pivot.is_finite() {
            return Err(Error::CholeskyBreakdown {
                index: j,
                value: pivot,
            });
        }
        for b in 1..=bw {
            if j + b >= dim {
                break;
            }
            band[j * stride + b] /= pivot;
        }
    }
    Ok(())
}

/// Substitution with the banded `L D L^T` factor.
fn solve_banded(band: &[f64], dim: usize, bw: usize, x: &mut [f64]) {
    let stride = bw + 1;
    for j in 0..dim {
        let mut acc = x[j];
        for b in 1..=bw.min(j) {
            acc -= band[(j - b) * stride + b] * x[j - b];
        }
        x[j] = acc;
    }
    for j in 0..dim {
        x[j] /= band[j * stride];
    }
    for j in (0..dim).rev() {
        let mut acc = x[j];
        for b in 1..=bw {
            if j + b >= dim {
                break;
            }
            acc -= band[j * stride + b] * x[j + b];
        }
        x[j] = acc;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(op: &DiffOp) -> Vec<Vec<f64>> {
        let n = op.ambient_dim();
        (0..op.rows())
            .map(|j| {
                let mut row = vec![0.0; n];
                for (k, &c) in op.stencil().iter().enumerate() {
                    row[j + k] = c;
                }
                row
            })
            .collect()
    }

    fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let rows = a.len();
        let inner = b.len();
        let cols = b[0].len();
        let mut out = vec![vec![0.0; cols]; rows];
        for i in 0..rows {
            for k in 0..inner {
                let aik = a[i][k];
                if aik == 0.0 {
                    continue;
                }
                for j in 0..cols {
                    out[i][j] += aik * b[k][j];
                }
            }
        }
        out
    }

    /// Dense realization via the recursion D(d, n) = D(1, n-d+1) D(d-1, n).
    fn dense_recursive(order: usize, n: usize) -> Vec<Vec<f64>> {
        if order == 1 {
            return dense(&DiffOp::new(1, n).unwrap());
        }
        let left = dense(&DiffOp::new(1, n - order + 1).unwrap());
        let right = dense_recursive(order - 1, n);
        matmul(&left, &right)
    }

    /// Plain Gaussian elimination, used as the gram_solve oracle.
    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
                .unwrap();
            a.swap(col, piv);
            b.swap(col, piv);
            let d = a[col][col];
            for r in 0..n {
                if r != col && a[r][col] != 0.0 {
                    let f = a[r][col] / d;
                    for c in col..n {
                        let v = a[col][c];
                        a[r][c] -= f * v;
                    }
                    b[r] -= f * b[col];
                }
            }
        }
        (0..n).map(|i| b[i] / a[i][i]).collect()
    }

    #[test]
    fn first_order_rows() {
        let op = DiffOp::new(1, 3).unwrap();
        assert_eq!(dense(&op), vec![vec![1.0, -1.0, 0.0], vec![0.0, 1.0, -1.0]]);
    }

    #[test]
    fn second_order_rows() {
        let op = DiffOp::new(2, 4).unwrap();
        assert_eq!(
            dense(&op),
            vec![vec![1.0, -2.0, 1.0, 0.0], vec![0.0, 1.0, -2.0, 1.0]]
        );
    }

    #[test]
    fn third_order_stencil_matches_recursion() {
        let op = DiffOp::new(3, 5).unwrap();
        assert_eq!(op.stencil(), &[1.0, -3.0, 3.0, -1.0]);
        assert_eq!(dense(&op), dense_recursive(3, 5));
    }

    #[test]
    fn stencil_matches_recursion_up_to_order_three() {
        for order in 1..=3 {
            for n in (order + 1)..=30 {
                let op = DiffOp::new(order, n).unwrap();
                assert_eq!(dense(&op), dense_recursive(order, n), "d={order} n={n}");
            }
        }
    }

    #[test]
    fn rejects_small_dimension() {
        assert!(DiffOp::new(2, 2).is_err());
        assert!(DiffOp::new(0, 5).is_err());
    }

    #[test]
    fn apply_first_order() {
        let op = DiffOp::new(1, 3).unwrap();
        assert_eq!(op.apply(&[1.0, 2.0, 4.0]).unwrap(), vec![-1.0, -2.0]);
    }

    #[test]
    fn transpose_of_single_row() {
        let op = DiffOp::new(1, 2).unwrap();
        assert_eq!(op.apply_transpose(&[1.0]).unwrap(), vec![1.0, -1.0]);
    }

    #[test]
    fn apply_dimension_checked() {
        let op = DiffOp::new(1, 3).unwrap();
        assert!(op.apply(&[1.0, 2.0]).is_err());
        assert!(op.apply_transpose(&[1.0]).is_err());
    }

    #[test]
    fn gram_single_row() {
        // d=1, n=2, S={row 0}: Gram = [2]; 2 z = -2 gives z = -1.
        let op = DiffOp::new(1, 2).unwrap();
        let sel = RowSelection::new(vec![0], op.rows()).unwrap();
        let z = gram_solve(&op, &sel, &[-2.0]).unwrap();
        assert_eq!(z, vec![-1.0]);
    }

    #[test]
    fn gram_matches_displayed_tridiagonal() {
        let op = DiffOp::new(1, 3).unwrap();
        assert_eq!(op.gram_coeff(0), 2.0);
        assert_eq!(op.gram_coeff(1), -1.0);
        assert_eq!(op.gram_coeff(2), 0.0);
    }

    #[test]
    fn gram_solve_rejects_empty_selection() {
        let op = DiffOp::new(1, 4).unwrap();
        let sel = RowSelection::new(vec![], op.rows()).unwrap();
        assert!(gram_solve(&op, &sel, &[]).is_err());
    }

    #[test]
    fn row_selection_validates() {
        assert!(RowSelection::new(vec![0, 0], 4).is_err());
        assert!(RowSelection::new(vec![2, 1], 4).is_err());
        assert!(RowSelection::new(vec![4], 4).is_err());
        assert!(RowSelection::new(vec![0, 3], 4).is_ok());
    }

    /// Adjoint identity <D theta, z> = <theta, D^T z> on random-ish data.
    #[test]
    fn adjoint_identity() {
        let op = DiffOp::new(2, 50).unwrap();
        let theta: Vec<f64> = (0..50).map(|i| ((i * 37 + 11) % 101) as f64 * 0.13).collect();
        let z: Vec<f64> = (0..48).map(|i| ((i * 53 + 5) % 89) as f64 * 0.07 - 3.0).collect();
        let lhs: f64 = op
            .apply(&theta)
            .unwrap()
            .iter()
            .zip(&z)
            .map(|(a, b)| a * b)
            .sum();
        let rhs: f64 = op
            .apply_transpose(&z)
            .unwrap()
            .iter()
            .zip(&theta)
            .map(|(a, b)| a * b)
            .sum();
        assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn gram_solve_matches_dense_lu() {
        // Deterministic pseudo-random selections over several shapes.
        let mut state = 0x4d595df4d0f33173u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            state >> 33
        };
        for &(order, n) in &[(1usize, 40usize), (2, 60), (3, 80), (2, 200)] {
            let op = DiffOp::new(order, n).unwrap();
            let rows = op.rows();
            let mut indices: Vec<usize> = (0..rows).filter(|_| next() % 3 != 0).collect();
            if indices.is_empty() {
                indices.push(0);
            }
            let sel = RowSelection::new(indices.clone(), rows).unwrap();
            let rhs: Vec<f64> = (0..sel.len())
                .map(|_| (next() % 1000) as f64 / 100.0 - 5.0)
                .collect();
            let banded = gram_solve(&op, &sel, &rhs).unwrap();

            let gram: Vec<Vec<f64>> = (0..sel.len())
                .map(|a| {
                    (0..sel.len())
                        .map(|b| {
                            let gap = indices[a].abs_diff(indices[b]);
                            op.gram_coeff(gap)
                        })
                        .collect()
                })
                .collect();
            let reference = dense_solve(gram, rhs);
            for (x, y) in banded.iter().zip(&reference) {
                assert!(
                    (x - y).abs() <= 1e-10 * y.abs().max(1.0),
                    "d={order} n={n}: {x} vs {y}"
                );
            }
        }
    }
}
