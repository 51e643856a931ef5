//! The four solution strategies for the discrete optimality system.
//!
//! | kind          | system                              | method | preconditioner                     |
//! |---------------|-------------------------------------|--------|------------------------------------|
//! | `mg-minres`   | `[[M, K], [K, -M/rho]]`             | MINRES | `blockdiag(C_mg, C_mg / rho)`      |
//! | `diag-minres` | `[[M, K], [K, -M/rho]]`             | MINRES | `blockdiag(D, D / rho)`            |
//! | `bp-pcg`      | Bramble–Pasciak transformed system  | CG     | `blockdiag(0.75 D, D)`             |
//! | `inex-sc-pcg` | `(rho K lump(M)^-1 K + M) u = f`    | CG     | diagonal mass surrogate            |
//!
//! `D = diag(M)` and `C_mg^-1` is one multigrid W-cycle for `M + sqrt(rho) K`.

use serde::{Deserialize, Serialize};

use super::krylov::{default_max_iterations, minres, pcg, KrylovOptions, SolveStats};
use crate::assembly::{AssembledProblem, MassDiagonal};
use crate::error::{Error, Result};
use crate::linalg::{
    BpTransformedOperator, DiagonalInverse, FnOperator, InexactSchurOperator, LinearOperator, MixedSaddleOperator,
};
use crate::multigrid::MgHierarchy;

/// Diagonal weight of the Bramble–Pasciak inner preconditioner `C = 0.25 diag(M)`.
pub const BP_SCALING: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolverKind {
    #[serde(rename = "mg-minres")]
    MgMinres,
    #[serde(rename = "diag-minres")]
    DiagMinres,
    #[serde(rename = "bp-pcg")]
    BpPcg,
    #[serde(rename = "inex-sc-pcg")]
    InexactSchurPcg,
}

impl SolverKind {
    pub const ALL: [SolverKind; 4] = [Self::MgMinres, Self::DiagMinres, Self::BpPcg, Self::InexactSchurPcg];

    pub fn name(self) -> &'static str {
        match self {
            Self::MgMinres => "mg-minres",
            Self::DiagMinres => "diag-minres",
            Self::BpPcg => "bp-pcg",
            Self::InexactSchurPcg => "inex-sc-pcg",
        }
    }
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown solver `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    pub rtol: f64,
    /// `None` selects [`default_max_iterations`] of the problem size.
    pub max_iterations: Option<usize>,
    /// Preconditioner of the inexact Schur complement system.
    pub diag_variant: MassDiagonal,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-11,
            max_iterations: None,
            diag_variant: MassDiagonal::Lump,
        }
    }
}

impl SolveOptions {
    fn krylov(&self, n: usize) -> KrylovOptions {
        KrylovOptions::new(
            self.rtol,
            self.max_iterations.unwrap_or_else(|| default_max_iterations(n)),
        )
    }
}

/// State and scaled adjoint `p_hat = -p` of the mixed system.
#[derive(Clone, Debug)]
pub struct MixedSolution {
    pub u: Vec<f64>,
    pub p_hat: Vec<f64>,
    pub stats: SolveStats,
}

/// State and adjoint `p_tilde = p / sqrt(rho)` of the Bramble–Pasciak system.
#[derive(Clone, Debug)]
pub struct BpSolution {
    pub u: Vec<f64>,
    pub p_tilde: Vec<f64>,
    pub stats: SolveStats,
}

/// State approximation of the inexact Schur complement system.
#[derive(Clone, Debug)]
pub struct SchurSolution {
    pub u: Vec<f64>,
    pub stats: SolveStats,
}

fn split(x: Vec<f64>, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut first = x;
    let second = first.split_off(n);
    (first, second)
}

fn mixed_rhs(problem: &AssembledProblem) -> Vec<f64> {
    let mut b = problem.f.clone();
    b.resize(2 * problem.n(), 0.0);
    b
}

fn positive_rho(rho: f64) -> Result<()> {
    if rho > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("rho must be positive, got {rho}")))
    }
}

/// MINRES on the mixed system with the multigrid block preconditioner.
/// `mg` must be built for `problem.rho` on the problem's level.
pub fn solve_mg_minres(problem: &AssembledProblem, mg: &MgHierarchy, opts: &SolveOptions) -> Result<MixedSolution> {
    positive_rho(problem.rho)?;
    let n = problem.n();
    if mg.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: mg.dim(),
        });
    }
    let op = MixedSaddleOperator::new(problem.m(), problem.k(), problem.rho)?;
    let rho = problem.rho;
    let prec = FnOperator::new(2 * n, |r: &[f64], z: &mut [f64]| {
        let (r1, r2) = r.split_at(n);
        let (z1, z2) = z.split_at_mut(n);
        mg.apply(r1, z1);
        mg.apply(r2, z2);
        for v in z2.iter_mut() {
            *v *= rho;
        }
    });
    let (x, stats) = minres(&op, &prec, &mixed_rhs(problem), opts.krylov(n))?;
    let (u, p_hat) = split(x, n);
    Ok(MixedSolution { u, p_hat, stats })
}

/// MINRES on the mixed system with `blockdiag(diag(M), diag(M) / rho)`.
pub fn solve_diag_minres(problem: &AssembledProblem, opts: &SolveOptions) -> Result<MixedSolution> {
    positive_rho(problem.rho)?;
    let n = problem.n();
    let op = MixedSaddleOperator::new(problem.m(), problem.k(), problem.rho)?;
    let d = &problem.ops.m_diag;
    let mut blocks = d.clone();
    blocks.extend(d.iter().map(|v| v / problem.rho));
    let prec = DiagonalInverse::new(&blocks)?;
    let (x, stats) = minres(&op, &prec, &mixed_rhs(problem), opts.krylov(n))?;
    let (u, p_hat) = split(x, n);
    Ok(MixedSolution { u, p_hat, stats })
}

/// CG on the Bramble–Pasciak transformed system with `C = 0.25 diag(M)`.
///
/// The first preconditioner block `M - C` is replaced by its diagonal
/// `0.75 diag(M)` so that applying the preconditioner stays diagonal.
pub fn solve_bp_pcg(problem: &AssembledProblem, opts: &SolveOptions) -> Result<BpSolution> {
    positive_rho(problem.rho)?;
    let n = problem.n();
    let op = BpTransformedOperator::with_scaled_mass_diagonal(problem.m(), problem.k(), problem.rho, BP_SCALING)?;
    let zero = vec![0.0; n];
    let minus_f: Vec<f64> = problem.f.iter().map(|v| -v).collect();
    let rhs = op.transform_rhs(&zero, &minus_f);
    let d = &problem.ops.m_diag;
    let mut blocks: Vec<f64> = d.iter().map(|v| (1.0 - BP_SCALING) * v).collect();
    blocks.extend_from_slice(d);
    let prec = DiagonalInverse::new(&blocks)?;
    let (x, stats) = pcg(&op, &prec, &rhs, opts.krylov(n))?;
    let (p_tilde, u) = split(x, n);
    Ok(BpSolution { u, p_tilde, stats })
}

/// CG on `(rho K lump(M)^-1 K + M) u = f` with the selected diagonal
/// preconditioner. Accepts `rho = 0`, where the system reduces to `M u = f`.
pub fn solve_inexact_schur(problem: &AssembledProblem, opts: &SolveOptions) -> Result<SchurSolution> {
    let n = problem.n();
    let op = InexactSchurOperator::new(problem.m(), problem.k(), problem.rho, &problem.ops.m_lump)?;
    let prec = DiagonalInverse::new(problem.ops.mass_diagonal(opts.diag_variant))?;
    let (u, stats) = pcg(&op, &prec, &problem.f, opts.krylov(n))?;
    Ok(SchurSolution { u, stats })
}

/// Control `z = p_hat / rho` from the gradient equation `p + rho z = 0`.
pub fn recover_control(p_hat: &[f64], rho: f64) -> Result<Vec<f64>> {
    if rho == 0.0 || !rho.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "cannot recover control for rho = {rho}"
        )));
    }
    Ok(p_hat.iter().map(|p| p / rho).collect())
}

/// `p_hat = -sqrt(rho) p_tilde`.
pub fn p_hat_from_p_tilde(p_tilde: &[f64], rho: f64) -> Vec<f64> {
    let s = rho.sqrt();
    p_tilde.iter().map(|p| -s * p).collect()
}

/// Runs the selected approach and returns the state coefficients.
/// `mg` is required for [`SolverKind::MgMinres`] only.
pub fn solve(
    kind: SolverKind,
    problem: &AssembledProblem,
    mg: Option<&MgHierarchy>,
    opts: &SolveOptions,
) -> Result<(Vec<f64>, SolveStats)> {
    match kind {
        SolverKind::MgMinres => {
            let mg = mg.ok_or_else(|| Error::InvalidArgument("mg-minres needs a multigrid hierarchy".into()))?;
            let s = solve_mg_minres(problem, mg, opts)?;
            Ok((s.u, s.stats))
        }
        SolverKind::DiagMinres => {
            let s = solve_diag_minres(problem, opts)?;
            Ok((s.u, s.stats))
        }
        SolverKind::BpPcg => {
            let s = solve_bp_pcg(problem, opts)?;
            Ok((s.u, s.stats))
        }
        SolverKind::InexactSchurPcg => {
            let s = solve_inexact_schur(problem, opts)?;
            Ok((s.u, s.stats))
        }
    }
}
