//! Desired states, error functionals and the numerical experiments:
//! convergence studies, regularization sweeps and spectral reports.

mod norms;
pub mod report;
mod spectral;
mod study;
mod sweep;
mod target;

pub use norms::{eoc, l2_error, l2_error_fn};
pub use spectral::{
    power_iteration, rayleigh_extremes, spectral_report, Extremes, MassInverse, MassSolver, SpectralReport,
};
pub use study::{run_study, solve_level, EocTable, LevelResult, LevelSetup, RunConfig};
pub use sweep::{
    default_rho_values, fit_slope, rho_sweep, run_sweep, SlopeFit, SweepPoint, SweepReport, FIT_THRESHOLD,
};
pub use target::{evaluate_target, Target};
