//! Krylov methods and the solution strategies built on them.

mod approaches;
mod krylov;

pub use approaches::{
    p_hat_from_p_tilde, recover_control, solve, solve_bp_pcg, solve_diag_minres, solve_inexact_schur, solve_mg_minres,
    BpSolution, MixedSolution, SchurSolution, SolveOptions, SolverKind, BP_SCALING,
};
pub use krylov::{default_max_iterations, minres, pcg, KrylovOptions, SolveStats, SolveStatus};
