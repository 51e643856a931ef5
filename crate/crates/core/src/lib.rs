//! Finite element discretization and fast iterative solvers for
//! L2-regularized tracking-type elliptic optimal control problems on the
//! unit cube.

pub mod assembly;
pub mod error;
pub mod linalg;
pub mod mesh;
pub mod multigrid;
pub mod optctl;
pub mod quadrature;
pub mod solvers;

pub use assembly::{AssembledProblem, FeOperators, MassDiagonal};
pub use error::{Error, Result};
pub use linalg::{CsrMatrix, DenseMatrix, LinearOperator};
pub use mesh::{build_hierarchy, build_mesh, interior_dofs, MeshHierarchy, StructuredSimplicialMesh};
pub use multigrid::{build_mg, MgConfig, MgHierarchy};
pub use optctl::{run_study, EocTable, LevelResult, RunConfig, Target};
pub use solvers::{SolveOptions, SolveStats, SolverKind};
