//! Geometric multigrid for `A = M + sqrt(rho) K` on the nested interior-dof
//! hierarchy.
//!
//! Coarse operators are Galerkin products `P^T A P`, the coarsest level is
//! solved by dense LU, and a cycle uses forward Gauss–Seidel before and
//! backward Gauss–Seidel after the coarse correction, so the preconditioner
//! is symmetric. [`MgHierarchy`] implements [`LinearOperator`] as the action
//! `z = C^-1 r` of `k` cycles from a zero initial guess.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::vector::{dot, scale};
use crate::linalg::{CsrMatrix, DenseMatrix, LinearOperator, LuFactorization};
use crate::mesh::MeshHierarchy;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cycle {
    V,
    W,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MgConfig {
    pub cycle: Cycle,
    pub pre_sweeps: usize,
    pub post_sweeps: usize,
    /// Cycles per preconditioner application.
    pub cycles: usize,
}

impl Default for MgConfig {
    fn default() -> Self {
        Self {
            cycle: Cycle::W,
            pre_sweeps: 2,
            post_sweeps: 2,
            cycles: 1,
        }
    }
}

struct Level {
    a: CsrMatrix,
    diag: Vec<f64>,
}

pub struct MgHierarchy {
    /// Coarsest first.
    levels: Vec<Level>,
    /// `prolongations[i]` maps level `i` to level `i + 1`.
    prolongations: Vec<CsrMatrix>,
    restrictions: Vec<CsrMatrix>,
    coarse: LuFactorization,
    config: MgConfig,
}

fn checked_diagonal(a: &CsrMatrix) -> Result<Vec<f64>> {
    let d = a.diagonal();
    match d.iter().position(|&v| v == 0.0) {
        Some(i) => Err(Error::ZeroDiagonal(i)),
        None => Ok(d),
    }
}

/// Builds the hierarchy for `A = M + sqrt(rho) K` with the default W(2,2)
/// configuration. `m` and `k` live on the finest level of `hier`.
pub fn build_mg(hier: &MeshHierarchy, m: &CsrMatrix, k: &CsrMatrix, rho: f64) -> Result<MgHierarchy> {
    build_mg_with(hier, m, k, rho, MgConfig::default())
}

pub fn build_mg_with(
    hier: &MeshHierarchy,
    m: &CsrMatrix,
    k: &CsrMatrix,
    rho: f64,
    config: MgConfig,
) -> Result<MgHierarchy> {
    if !(rho > 0.0) {
        return Err(Error::InvalidArgument(format!("rho must be positive, got {rho}")));
    }
    let n = hier.mesh(hier.max_level()).num_interior();
    for a in [m, k] {
        if a.n_rows() != n || a.n_cols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: a.n_rows(),
            });
        }
    }
    let finest = m.add_scaled(rho.sqrt(), k)?;
    MgHierarchy::from_operator(finest, hier.prolongations().to_vec(), config)
}

impl MgHierarchy {
    /// Galerkin hierarchy below an arbitrary SPD finest operator.
    pub fn from_operator(finest: CsrMatrix, prolongations: Vec<CsrMatrix>, config: MgConfig) -> Result<Self> {
        if config.cycles == 0 {
            return Err(Error::InvalidArgument("at least one cycle per application".into()));
        }
        let restrictions: Vec<CsrMatrix> = prolongations.iter().map(CsrMatrix::transpose).collect();
        let mut mats = vec![finest];
        for (p, r) in prolongations.iter().zip(&restrictions).rev() {
            let fine = mats.last().expect("nonempty");
            if p.n_rows() != fine.n_rows() {
                return Err(Error::DimensionMismatch {
                    expected: fine.n_rows(),
                    found: p.n_rows(),
                });
            }
            let coarse = r.matmul(&fine.matmul(p)?)?;
            // Remove rounding asymmetry so the cycle stays exactly symmetric.
            let mut coarse = coarse.add_scaled(1.0, &coarse.transpose())?;
            scale(0.5, coarse.values_mut());
            mats.push(coarse);
        }
        mats.reverse();
        let coarse = LuFactorization::new(&mats[0].to_dense())?;
        let levels = mats
            .into_iter()
            .map(|a| {
                Ok(Level {
                    diag: checked_diagonal(&a)?,
                    a,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            levels,
            prolongations,
            restrictions,
            coarse,
            config,
        })
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    /// Operator on level `i` (0 = coarsest).
    pub fn operator(&self, i: usize) -> &CsrMatrix {
        &self.levels[i].a
    }

    pub fn finest(&self) -> &CsrMatrix {
        &self.levels[self.levels.len() - 1].a
    }

    pub fn config(&self) -> MgConfig {
        self.config
    }

    /// `z = C^-1 r`: `k` cycles on `A z = r` from `z = 0`.
    pub fn mg_apply(&self, r: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; r.len()];
        self.apply(r, &mut z);
        z
    }

    fn cycle(&self, l: usize, b: &[f64], x: &mut [f64]) {
        if l == 0 {
            self.coarse.solve_into(b, x);
            return;
        }
        let level = &self.levels[l];
        for _ in 0..self.config.pre_sweeps {
            sweep(&level.a, &level.diag, x, b, Direction::Forward);
        }
        let mut r = b.to_vec();
        level.a.spmv_acc_unchecked(-1.0, x, 1.0, &mut r);
        let restr = &self.restrictions[l - 1];
        let mut rc = vec![0.0; restr.n_rows()];
        restr.spmv_unchecked(&r, &mut rc);
        let mut xc = vec![0.0; rc.len()];
        // Next level exact: one visit suffices.
        let visits = match self.config.cycle {
            Cycle::W if l > 1 => 2,
            _ => 1,
        };
        for _ in 0..visits {
            self.cycle(l - 1, &rc, &mut xc);
        }
        self.prolongations[l - 1].spmv_acc_unchecked(1.0, &xc, 1.0, x);
        for _ in 0..self.config.post_sweeps {
            sweep(&level.a, &level.diag, x, b, Direction::Backward);
        }
    }

    /// Asymptotic energy-norm contraction factor of the stationary iteration
    /// `x <- x + C^-1 (b - A x)`, estimated from `iterations` steps on a
    /// random initial error.
    pub fn measure_contraction(&self, iterations: usize, seed: u64) -> f64 {
        let a = self.finest();
        let n = a.n_rows();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut e: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let energy = |v: &[f64]| dot(v, &a.mul_vec(v)).sqrt();
        let mut prev = energy(&e);
        let mut ratio = 0.0;
        for _ in 0..iterations.max(1) {
            // error propagation with b = 0
            let mut r = a.mul_vec(&e);
            scale(-1.0, &mut r);
            let c = self.mg_apply(&r);
            for (ei, ci) in e.iter_mut().zip(&c) {
                *ei += ci;
            }
            let cur = energy(&e);
            if prev == 0.0 || cur == 0.0 {
                return ratio;
            }
            ratio = cur / prev;
            // rescale to stay clear of underflow
            let s = 1.0 / cur;
            scale(s, &mut e);
            prev = 1.0;
        }
        ratio
    }
}

impl LinearOperator for MgHierarchy {
    fn dim(&self) -> usize {
        self.finest().n_rows()
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.fill(0.0);
        let top = self.levels.len() - 1;
        for _ in 0..self.config.cycles {
            self.cycle(top, r, z);
        }
    }
}

fn sweep(a: &CsrMatrix, diag: &[f64], x: &mut [f64], b: &[f64], direction: Direction) {
    let offsets = a.row_offsets();
    let cols = a.col_indices();
    let vals = a.values();
    let mut relax = |i: usize| {
        let mut s = b[i];
        for k in offsets[i]..offsets[i + 1] {
            let j = cols[k];
            if j != i {
                s -= vals[k] * x[j];
            }
        }
        x[i] = s / diag[i];
    };
    match direction {
        Direction::Forward => (0..a.n_rows()).for_each(&mut relax),
        Direction::Backward => (0..a.n_rows()).rev().for_each(&mut relax),
    }
}

/// One in-place Gauss–Seidel sweep on `A x = b`.
pub fn gauss_seidel_sweep(a: &CsrMatrix, x: &mut [f64], b: &[f64], direction: Direction) -> Result<()> {
    let n = a.n_rows();
    if a.n_cols() != n || x.len() != n || b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: if x.len() != n { x.len() } else { b.len() },
        });
    }
    let diag = checked_diagonal(a)?;
    sweep(a, &diag, x, b, direction);
    Ok(())
}

/// Dense copy of the preconditioner action, for small-level checks.
pub fn dense_action(mg: &MgHierarchy) -> DenseMatrix {
    let n = mg.dim();
    let mut out = DenseMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = mg.mg_apply(&e);
        e[j] = 0.0;
        for (i, v) in col.into_iter().enumerate() {
            out[(i, j)] = v;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_matrices, DofSet};
    use crate::linalg::dense_solve;
    use crate::linalg::vector::norm;
    use crate::mesh::build_hierarchy;
    use proptest::prelude::{any, prop_assert, proptest, ProptestConfig};

    fn setup(dim: usize, level: usize) -> (MgHierarchy, CsrMatrix, CsrMatrix) {
        let hier = build_hierarchy(dim, level).unwrap();
        let (k, m) = assemble_matrices(hier.mesh(level), DofSet::Interior).unwrap();
        let rho = hier.mesh(level).h().powi(4);
        (build_mg(&hier, &m, &k, rho).unwrap(), m, k)
    }

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn two_by_two_forward_sweep() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 2.0)]).unwrap();
        let mut x = [0.0, 0.0];
        gauss_seidel_sweep(&a, &mut x, &[3.0, 3.0], Direction::Forward).unwrap();
        assert_eq!(x, [1.5, 0.75]);
    }

    #[test]
    fn diagonal_system_solved_in_one_sweep() {
        let a = CsrMatrix::from_diagonal(&[2.0, 4.0, 8.0]);
        let mut x = [0.0; 3];
        gauss_seidel_sweep(&a, &mut x, &[2.0, 2.0, 2.0], Direction::Backward).unwrap();
        assert_eq!(x, [1.0, 0.5, 0.25]);
    }

    #[test]
    fn zero_diagonal_rejected() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]).unwrap();
        let mut x = [0.0; 2];
        assert!(matches!(
            gauss_seidel_sweep(&a, &mut x, &[1.0, 1.0], Direction::Forward),
            Err(Error::ZeroDiagonal(0))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]
        #[test]
        fn sweeps_reduce_energy_error(seed in any::<u64>()) {
            // For SPD A each Gauss–Seidel sweep is an A-norm contraction.
            let (mg, _, _) = setup(2, 2);
            let a = mg.finest();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let b = random_vec(&mut rng, a.n_rows());
            let exact = dense_solve(&a.to_dense(), &b).unwrap();
            let mut x = vec![0.0; a.n_rows()];
            let err = |x: &[f64]| {
                let e: Vec<f64> = x.iter().zip(&exact).map(|(a, b)| a - b).collect();
                dot(&e, &a.mul_vec(&e))
            };
            let mut prev = err(&x);
            for dir in [Direction::Forward, Direction::Backward, Direction::Forward] {
                gauss_seidel_sweep(a, &mut x, &b, dir).unwrap();
                let cur = err(&x);
                prop_assert!(cur < prev);
                prev = cur;
            }
        }
    }

    #[test]
    fn single_level_is_exact_solve() {
        let (mg, _, _) = setup(3, 1);
        assert_eq!(mg.num_levels(), 1);
        let b: Vec<f64> = (0..27).map(|i| (i as f64).sin()).collect();
        let z = mg.mg_apply(&b);
        let x = dense_solve(&mg.finest().to_dense(), &b).unwrap();
        for (a, b) in z.iter().zip(&x) {
            assert!((a - b).abs() < 1e-13 * norm(&x));
        }
    }

    #[test]
    fn zero_in_zero_out() {
        let (mg, _, _) = setup(3, 2);
        assert!(mg.mg_apply(&vec![0.0; 343]).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn galerkin_levels_symmetric_positive_diagonal() {
        let (mg, _, _) = setup(3, 3);
        assert_eq!(mg.num_levels(), 3);
        for l in 0..3 {
            let a = mg.operator(l);
            assert_eq!(a.symmetry_defect(), 0.0);
            assert!(a.diagonal().iter().all(|&d| d > 0.0));
        }
        assert_eq!(mg.operator(0).n_rows(), 27);
    }

    #[test]
    fn action_is_symmetric_positive_definite() {
        let (mg, _, _) = setup(3, 3);
        let n = mg.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let r = random_vec(&mut rng, n);
            let s = random_vec(&mut rng, n);
            let cr = mg.mg_apply(&r);
            let cs = mg.mg_apply(&s);
            let (lhs, rhs) = (dot(&cr, &s), dot(&r, &cs));
            assert!((lhs - rhs).abs() <= 1e-11 * lhs.abs().max(rhs.abs()));
            assert!(dot(&cr, &r) > 0.0);
        }
    }

    #[test]
    fn v_cycle_is_also_symmetric() {
        let hier = build_hierarchy(2, 3).unwrap();
        let (k, m) = assemble_matrices(hier.mesh(3), DofSet::Interior).unwrap();
        let cfg = MgConfig {
            cycle: Cycle::V,
            pre_sweeps: 1,
            post_sweeps: 1,
            cycles: 2,
        };
        let mg = build_mg_with(&hier, &m, &k, 1.0, cfg).unwrap();
        let d = dense_action(&mg);
        let defect = (0..d.n_rows())
            .flat_map(|i| (0..d.n_cols()).map(move |j| (i, j)))
            .map(|(i, j)| (d[(i, j)] - d[(j, i)]).abs())
            .fold(0.0, f64::max);
        assert!(defect < 1e-12);
    }

    #[test]
    fn contraction_is_small_for_mass_dominated_operator() {
        for level in 2..=3 {
            let (mg, _, _) = setup(3, level);
            let eta = mg.measure_contraction(8, 5);
            assert!(eta > 0.0 && eta <= 0.5, "level {level}: {eta}");
        }
    }

    #[test]
    fn rejects_nonpositive_rho() {
        let hier = build_hierarchy(3, 1).unwrap();
        let (k, m) = assemble_matrices(hier.mesh(1), DofSet::Interior).unwrap();
        assert!(build_mg(&hier, &m, &k, 0.0).is_err());
    }
}
