use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::study::LevelSetup;
use crate::assembly::FeOperators;
use crate::error::{Error, Result};
use crate::linalg::vector::{dot, scale};
use crate::linalg::{CsrMatrix, DiagonalInverse, LuFactorization};
use crate::solvers::{pcg, KrylovOptions};

/// Largest problem size factorized densely for mass solves.
pub const DENSE_MASS_LIMIT: usize = 400;
pub const POWER_MAX_STEPS: usize = 10_000;
pub const POWER_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MassSolver {
    Dense,
    /// Jacobi-preconditioned CG to near machine precision.
    Iterative,
}

/// Exact action of `M^-1`.
pub enum MassInverse<'a> {
    Dense(LuFactorization),
    Iterative { m: &'a CsrMatrix, jacobi: DiagonalInverse },
}

impl<'a> MassInverse<'a> {
    pub fn new(m: &'a CsrMatrix, method: MassSolver) -> Result<Self> {
        Ok(match method {
            MassSolver::Dense => Self::Dense(LuFactorization::new(&m.to_dense())?),
            MassSolver::Iterative => Self::Iterative {
                m,
                jacobi: DiagonalInverse::new(&m.diagonal())?,
            },
        })
    }

    pub fn for_size(m: &'a CsrMatrix) -> Result<Self> {
        let method = if m.n_rows() <= DENSE_MASS_LIMIT {
            MassSolver::Dense
        } else {
            MassSolver::Iterative
        };
        Self::new(m, method)
    }

    pub fn method(&self) -> MassSolver {
        match self {
            Self::Dense(_) => MassSolver::Dense,
            Self::Iterative { .. } => MassSolver::Iterative,
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        match self {
            Self::Dense(lu) => Ok(lu.solve(b)),
            Self::Iterative { m, jacobi } => {
                let (x, stats) = pcg(*m, jacobi, b, KrylovOptions::new(1e-14, 10 * b.len().max(10)))?;
                if !stats.converged && stats.final_prec_residual > 1e-12 * stats.initial_prec_residual {
                    return Err(Error::InvalidArgument("mass solve did not converge".into()));
                }
                Ok(x)
            }
        }
    }
}

/// `lambda_max(M^-1 K)` by power iteration with the generalized Rayleigh
/// quotient. Returns the estimate and the number of steps.
pub fn power_iteration(k: &CsrMatrix, minv: &MassInverse<'_>, m: &CsrMatrix, seed: u64) -> Result<(f64, usize)> {
    let n = k.n_rows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut lambda = 0.0;
    for step in 1..=POWER_MAX_STEPS {
        let mx = m.mul_vec(&x);
        let kx = k.mul_vec(&x);
        let mnorm2 = dot(&x, &mx);
        let next = dot(&x, &kx) / mnorm2;
        if step > 1 && (next - lambda).abs() <= POWER_TOL * next {
            return Ok((next, step));
        }
        lambda = next;
        x = minv.solve(&kx)?;
        let s = 1.0 / dot(&x, &m.mul_vec(&x)).sqrt();
        scale(s, &mut x);
    }
    Err(Error::PowerIteration(POWER_MAX_STEPS))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Extremes {
    pub min: f64,
    pub max: f64,
}

/// Extremes of `(S v, v) / (M v, v)` and `(A v, v) / (M v, v)` over random
/// vectors, with `S = rho K M^-1 K + M` and `A = M + sqrt(rho) K`.
pub fn rayleigh_extremes(
    ops: &FeOperators,
    minv: &MassInverse<'_>,
    rho: f64,
    samples: usize,
    seed: u64,
) -> Result<(Extremes, Extremes)> {
    let n = ops.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = Extremes {
        min: f64::INFINITY,
        max: f64::NEG_INFINITY,
    };
    let mut a = s;
    for _ in 0..samples {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mv = dot(&v, &ops.m.mul_vec(&v));
        let kv = ops.k.mul_vec(&v);
        let vkv = dot(&v, &kv);
        let t = minv.solve(&kv)?;
        let qs = (rho * dot(&t, &kv) + mv) / mv;
        let qa = (mv + rho.sqrt() * vkv) / mv;
        s.min = s.min.min(qs);
        s.max = s.max.max(qs);
        a.min = a.min.min(qa);
        a.max = a.max.max(qa);
    }
    Ok((s, a))
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralReport {
    pub dim: usize,
    pub level: usize,
    pub h: f64,
    pub rho: f64,
    pub n_h: usize,
    pub lambda_max_minv_k: f64,
    pub lambda_max_minv_k_times_h2: f64,
    pub power_iterations: usize,
    pub rayleigh_s_over_m_min: f64,
    pub rayleigh_s_over_m_max: f64,
    pub rayleigh_a_over_m_min: f64,
    pub rayleigh_a_over_m_max: f64,
    pub samples: usize,
    pub mass_solver: MassSolver,
}

/// Spectral quantities of one level with `rho = h^rho_exponent`.
pub fn spectral_report(
    dim: usize,
    level: usize,
    rho_exponent: f64,
    samples: usize,
    seed: u64,
) -> Result<SpectralReport> {
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let setup = LevelSetup::new(dim, level)?;
    let ops = setup.ops();
    let h = setup.h();
    let rho = h.powf(rho_exponent);
    let minv = MassInverse::for_size(&ops.m)?;
    let (lambda, steps) = power_iteration(&ops.k, &minv, &ops.m, seed)?;
    let (s, a) = rayleigh_extremes(ops, &minv, rho, samples, seed.wrapping_add(1))?;
    Ok(SpectralReport {
        dim,
        level,
        h,
        rho,
        n_h: ops.n(),
        lambda_max_minv_k: lambda,
        lambda_max_minv_k_times_h2: lambda * h * h,
        power_iterations: steps,
        rayleigh_s_over_m_min: s.min,
        rayleigh_s_over_m_max: s.max,
        rayleigh_a_over_m_min: a.min,
        rayleigh_a_over_m_max: a.max,
        samples,
        mass_solver: minv.method(),
    })
}
