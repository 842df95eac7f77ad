//! Solvers for isotonic regression and one-dimensional trend filtering.
//!
//! Two problem families share this crate:
//!
//! * **Isotonic regression** — weighted least squares under the chain
//!   constraint `theta_1 <= ... <= theta_n`, solved either by the
//!   classical pool-adjacent-violators sweep ([`ir::pav_solve`]) or by a
//!   primal-dual active-set method ([`ir::pdas_ir_solve`]) that merges
//!   whole runs of violating blocks per pass and accepts warm-start
//!   partitions.
//! * **Trend filtering** — `1/2 |y - theta|^2 + lambda * g(D theta)` with
//!   an order-`d` difference operator and `g` either the l1 norm or the
//!   positive-part l1 norm. The active-set framework in [`tf`] alternates
//!   banded subspace solves with partition updates; safeguarded variants
//!   guarantee progress where the plain update cycles.
//!
//! The [`oracle`] module holds independent slow solvers and KKT checkers
//! used by the test suites; [`io`] defines the CSV and JSON interchange
//! formats.

pub mod diffop;
pub mod error;
pub mod io;
pub mod ir;
pub mod model;
pub mod oracle;
pub mod tf;

pub use error::{Error, Result};
pub use model::{
    objective_ir, objective_tf, Block, BlockPartition, IrProblem, Penalty, PrimalDualPoint,
    SignLabel, SignPartition, SolveReport, SolveStatus, TfProblem,
};
