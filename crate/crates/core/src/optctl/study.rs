use std::sync::Arc;

use serde::Serialize;

use super::norms::{eoc, l2_error};
use super::target::Target;
use crate::assembly::{assemble_load, AssembledProblem, FeOperators, MassDiagonal};
use crate::error::{Error, Result};
use crate::mesh::{build_hierarchy, MeshHierarchy, StructuredSimplicialMesh};
use crate::multigrid::{build_mg, MgHierarchy};
use crate::solvers::{solve, SolveOptions, SolveStats, SolverKind};

/// Parameters of a convergence study over a range of levels.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub dim: usize,
    pub min_level: usize,
    pub max_level: usize,
    pub target: Target,
    pub solver: SolverKind,
    /// `rho = h^rho_exponent` on every level.
    pub rho_exponent: f64,
    pub rtol: f64,
    pub quad_order: usize,
    pub diag_variant: MassDiagonal,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dim: 3,
            min_level: 1,
            max_level: 5,
            target: Target::Smooth,
            solver: SolverKind::MgMinres,
            rho_exponent: 4.0,
            rtol: 1e-11,
            quad_order: 4,
            diag_variant: MassDiagonal::Lump,
            max_iterations: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim != 2 && self.dim != 3 {
            return Err(Error::InvalidDimension(self.dim));
        }
        if self.min_level == 0 || self.min_level > self.max_level {
            return Err(Error::InvalidArgument(format!(
                "invalid level range {}..{}",
                self.min_level, self.max_level
            )));
        }
        if !(self.rtol > 0.0 && self.rtol < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "rtol must lie in (0, 1), got {}",
                self.rtol
            )));
        }
        if !self.rho_exponent.is_finite() {
            return Err(Error::InvalidArgument("rho exponent must be finite".into()));
        }
        Ok(())
    }

    pub fn rho(&self, h: f64) -> f64 {
        h.powf(self.rho_exponent)
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            rtol: self.rtol,
            max_iterations: self.max_iterations,
            diag_variant: self.diag_variant,
        }
    }
}

/// Mesh hierarchy and target-independent operators of one level.
pub struct LevelSetup {
    hierarchy: MeshHierarchy,
    ops: Arc<FeOperators>,
}

impl LevelSetup {
    pub fn new(dim: usize, level: usize) -> Result<Self> {
        let hierarchy = build_hierarchy(dim, level)?;
        let ops = Arc::new(FeOperators::assemble(hierarchy.mesh(level))?);
        Ok(Self { hierarchy, ops })
    }

    pub fn level(&self) -> usize {
        self.hierarchy.max_level()
    }

    pub fn mesh(&self) -> &StructuredSimplicialMesh {
        self.hierarchy.mesh(self.level())
    }

    pub fn hierarchy(&self) -> &MeshHierarchy {
        &self.hierarchy
    }

    pub fn ops(&self) -> &Arc<FeOperators> {
        &self.ops
    }

    pub fn h(&self) -> f64 {
        self.ops.h
    }

    pub fn n(&self) -> usize {
        self.ops.n()
    }

    pub fn problem(&self, target: Target, rho: f64, quad_order: usize) -> Result<AssembledProblem> {
        let f = assemble_load(self.mesh(), |x| target.evaluate(x), quad_order)?;
        AssembledProblem::new(self.ops.clone(), f, rho)
    }

    pub fn multigrid(&self, rho: f64) -> Result<MgHierarchy> {
        build_mg(&self.hierarchy, &self.ops.m, &self.ops.k, rho)
    }
}

/// One row of a convergence table.
#[derive(Clone, Debug, Serialize)]
pub struct LevelResult {
    pub level: usize,
    pub h: f64,
    pub rho: f64,
    pub n_h: usize,
    pub l2_error: f64,
    /// Absent on the first level of a study.
    pub eoc: Option<f64>,
    pub stats: SolveStats,
}

/// Solves one level and measures the state error. `mg` is built on demand
/// for the multigrid approach when not supplied.
pub fn solve_level(
    setup: &LevelSetup,
    problem: &AssembledProblem,
    target: Target,
    solver: SolverKind,
    mg: Option<&MgHierarchy>,
    opts: &SolveOptions,
    quad_order: usize,
) -> Result<(LevelResult, Vec<f64>)> {
    let owned;
    let mg = match (solver, mg) {
        (SolverKind::MgMinres, None) => {
            owned = setup.multigrid(problem.rho)?;
            Some(&owned)
        }
        (_, mg) => mg,
    };
    let (u, stats) = solve(solver, problem, mg, opts)?;
    let l2 = l2_error(setup.mesh(), &u, target, quad_order)?;
    let row = LevelResult {
        level: setup.level(),
        h: setup.h(),
        rho: problem.rho,
        n_h: setup.n(),
        l2_error: l2,
        eoc: None,
        stats,
    };
    Ok((row, u))
}

#[derive(Clone, Debug, Serialize)]
pub struct EocTable {
    pub dim: usize,
    pub target: Target,
    pub solver: SolverKind,
    pub rho_exponent: f64,
    pub rows: Vec<LevelResult>,
}

impl EocTable {
    /// Orders rows by level and fills in the EOC between consecutive levels.
    pub fn new(dim: usize, target: Target, solver: SolverKind, rho_exponent: f64, mut rows: Vec<LevelResult>) -> Self {
        rows.sort_by_key(|r| r.level);
        for i in 1..rows.len() {
            let adjacent = rows[i].level == rows[i - 1].level + 1;
            rows[i].eoc = if adjacent {
                eoc(rows[i - 1].l2_error, rows[i].l2_error).ok()
            } else {
                None
            };
        }
        Self {
            dim,
            target,
            solver,
            rho_exponent,
            rows,
        }
    }

    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(|r| r.stats.converged)
    }

    /// Copy with every wall time set to zero, for reproducible output.
    pub fn without_timing(&self) -> Self {
        let mut out = self.clone();
        for r in &mut out.rows {
            r.stats.wall_time = 0.0;
        }
        out
    }
}

/// Runs the study level by level. Non-converged solves are kept as flagged
/// rows; other failures abort.
pub fn run_study(cfg: &RunConfig) -> Result<EocTable> {
    cfg.validate()?;
    let opts = cfg.solve_options();
    let mut rows = Vec::new();
    for level in cfg.min_level..=cfg.max_level {
        let setup = LevelSetup::new(cfg.dim, level)?;
        let rho = cfg.rho(setup.h());
        let problem = setup.problem(cfg.target, rho, cfg.quad_order)?;
        let (row, _) = solve_level(&setup, &problem, cfg.target, cfg.solver, None, &opts, cfg.quad_order)?;
        rows.push(row);
    }
    Ok(EocTable::new(cfg.dim, cfg.target, cfg.solver, cfg.rho_exponent, rows))
}
