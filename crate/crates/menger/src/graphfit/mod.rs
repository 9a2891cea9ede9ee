//! Best approximating lines, Whitney intervals on a base line, and the Lipschitz
//! graph built from a stopping-time tree.

mod balance;
mod beta;
mod whitney;

pub use balance::{balanced_ball_test, maximal_doubling_below, BalanceVerdict};
pub use beta::{beta2, line_residual, BetaResult, COLLINEAR_MOMENT};
pub use whitney::*;
