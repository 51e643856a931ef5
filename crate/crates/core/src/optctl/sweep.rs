use serde::Serialize;

use super::norms::l2_error;
use super::study::LevelSetup;
use super::target::Target;
use crate::error::{Error, Result};
use crate::solvers::{solve_mg_minres, SolveOptions};

/// Error points whose value exceeds this multiple of the baseline error are
/// taken to be dominated by regularization.
pub const FIT_THRESHOLD: f64 = 3.0;

#[derive(Clone, Debug, Serialize)]
pub struct SweepPoint {
    pub rho: f64,
    pub l2_error: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Number of points entering the fit.
    pub points: usize,
    pub baseline_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub dim: usize,
    pub level: usize,
    pub target: Target,
    pub points: Vec<SweepPoint>,
    pub fit: Option<SlopeFit>,
}

/// `rho = h^4 4^j` for `j = 0, 1, ...` up to and including 1.
pub fn default_rho_values(h: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut rho = h.powi(4);
    while rho <= 1.0 * (1.0 + 1e-12) {
        out.push(rho);
        rho *= 4.0;
    }
    out
}

/// Solves with the multigrid approach for each `rho` and records the state
/// error.
pub fn rho_sweep(
    setup: &LevelSetup,
    target: Target,
    rho_values: &[f64],
    opts: &SolveOptions,
    quad_order: usize,
) -> Result<Vec<SweepPoint>> {
    let base = setup.problem(target, 1.0, quad_order)?;
    rho_values
        .iter()
        .map(|&rho| {
            let mut problem = base.clone();
            problem.rho = rho;
            let mg = setup.multigrid(rho)?;
            let sol = solve_mg_minres(&problem, &mg, opts)?;
            Ok(SweepPoint {
                rho,
                l2_error: l2_error(setup.mesh(), &sol.u, target, quad_order)?,
                iterations: sol.stats.iterations,
                converged: sol.stats.converged,
            })
        })
        .collect()
}

/// Ordinary least squares of `log e` against `log rho` over the points with
/// error above `FIT_THRESHOLD * baseline`. `None` with fewer than two such
/// points.
pub fn fit_slope(points: &[SweepPoint], baseline: f64) -> Option<SlopeFit> {
    let xy: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.l2_error > FIT_THRESHOLD * baseline)
        .map(|p| (p.rho.ln(), p.l2_error.ln()))
        .collect();
    let (slope, intercept) = least_squares(&xy)?;
    Some(SlopeFit {
        slope,
        intercept,
        points: xy.len(),
        baseline_error: baseline,
    })
}

fn least_squares(xy: &[(f64, f64)]) -> Option<(f64, f64)> {
    if xy.len() < 2 {
        return None;
    }
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Sweep over `rho_values` (default grid when empty) with the first value's
/// error as the fitting baseline.
pub fn run_sweep(
    dim: usize,
    level: usize,
    target: Target,
    rho_values: &[f64],
    opts: &SolveOptions,
    quad_order: usize,
) -> Result<SweepReport> {
    let setup = LevelSetup::new(dim, level)?;
    let rhos = if rho_values.is_empty() {
        default_rho_values(setup.h())
    } else {
        rho_values.to_vec()
    };
    if rhos.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
        return Err(Error::InvalidArgument("sweep values of rho must be positive".into()));
    }
    let points = rho_sweep(&setup, target, &rhos, opts, quad_order)?;
    let fit = points.first().and_then(|p0| fit_slope(&points, p0.l2_error));
    Ok(SweepReport {
        dim,
        level,
        target,
        points,
        fit,
    })
}
