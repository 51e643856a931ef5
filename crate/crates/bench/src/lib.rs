//! Shared setup for the kernel benchmarks.

use ellopt_core::optctl::LevelSetup;
use ellopt_core::{AssembledProblem, MgHierarchy, Target};

/// One level of the three-dimensional benchmark with `rho = h^4`.
pub struct Fixture {
    pub setup: LevelSetup,
    pub problem: AssembledProblem,
    pub mg: MgHierarchy,
}

impl Fixture {
    pub fn new(level: usize) -> Self {
        let setup = LevelSetup::new(3, level).expect("level setup");
        let rho = setup.h().powi(4);
        let problem = setup.problem(Target::Smooth, rho, 4).expect("problem");
        let mg = setup.multigrid(rho).expect("multigrid");
        Self { setup, problem, mg }
    }

    /// A deterministic non-trivial vector of the interior dimension.
    pub fn vector(&self) -> Vec<f64> {
        (0..self.setup.n())
            .map(|i| ((i * 7919) % 1000) as f64 / 500.0 - 1.0)
            .collect()
    }
}
