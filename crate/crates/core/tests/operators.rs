//! Block operators, mass surrogates and preconditioners against dense
//! references and sampled spectral bounds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ellopt_core::assembly::{assemble_load, assemble_matrices, DofSet};
use ellopt_core::linalg::vector::{dot, rel_diff};
use ellopt_core::linalg::{
    BpTransformedOperator, DenseMatrix, DiagonalInverse, InexactSchurOperator, MixedSaddleOperator,
};
use ellopt_core::optctl::{l2_error, LevelSetup};
use ellopt_core::solvers::{pcg, KrylovOptions, BP_SCALING};
use ellopt_core::{build_mesh, CsrMatrix, LinearOperator, Target};

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn block(a: &DenseMatrix, b: &DenseMatrix, c: &DenseMatrix, d: &DenseMatrix) -> DenseMatrix {
    let n = a.n_rows();
    let mut out = DenseMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = a[(i, j)];
            out[(i, n + j)] = b[(i, j)];
            out[(n + i, j)] = c[(i, j)];
            out[(n + i, n + j)] = d[(i, j)];
        }
    }
    out
}

fn diagonal(d: &[f64]) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(d.len(), d.len());
    for (i, v) in d.iter().enumerate() {
        out[(i, i)] = *v;
    }
    out
}

/// Applies `op` to every unit vector and compares with `dense`.
fn assert_matches(op: &dyn LinearOperator, dense: &DenseMatrix, tol: f64) {
    let n = op.dim();
    let scale = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| dense[(i, j)].abs())
        .fold(0.0, f64::max);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = op.apply_vec(&e);
        for i in 0..n {
            assert!((col[i] - dense[(i, j)]).abs() <= tol * scale, "entry ({i}, {j})");
        }
    }
}

fn level_one() -> (LevelSetup, f64) {
    let setup = LevelSetup::new(3, 1).unwrap();
    let rho = setup.h().powi(4);
    (setup, rho)
}

#[test]
fn mixed_operator_matches_dense_blocks() {
    let (setup, rho) = level_one();
    let ops = setup.ops();
    let (k, m) = (ops.k.to_dense(), ops.m.to_dense());
    let op = MixedSaddleOperator::new(&ops.m, &ops.k, rho).unwrap();
    assert_matches(&op, &block(&m, &k, &k, &m.scaled(-1.0 / rho)), 1e-13);
}

#[test]
fn bp_operator_matches_dense_product() {
    let (setup, rho) = level_one();
    let ops = setup.ops();
    let n = ops.n();
    let sr = rho.sqrt();
    let (k, m) = (ops.k.to_dense(), ops.m.to_dense());
    let c_inv: Vec<f64> = ops.m.diagonal().iter().map(|d| 1.0 / (BP_SCALING * d)).collect();
    let c_inv = diagonal(&c_inv);
    let eye = DenseMatrix::identity(n);
    let t = block(
        &m.matmul(&c_inv).add(&eye.scaled(-1.0)),
        &DenseMatrix::zeros(n, n),
        &k.matmul(&c_inv).scaled(sr),
        &eye.scaled(-1.0),
    );
    let a = block(&m, &k.scaled(sr), &k.scaled(sr), &m.scaled(-1.0));
    let op = BpTransformedOperator::with_scaled_mass_diagonal(&ops.m, &ops.k, rho, BP_SCALING).unwrap();
    assert_matches(&op, &t.matmul(&a), 1e-12);
}

#[test]
fn inexact_schur_matches_dense_formation() {
    let (setup, rho) = level_one();
    let ops = setup.ops();
    let (k, m) = (ops.k.to_dense(), ops.m.to_dense());
    let inv: Vec<f64> = ops.m_lump.iter().map(|d| 1.0 / d).collect();
    let dense = k.matmul(&diagonal(&inv)).matmul(&k).scaled(rho).add(&m);
    let op = InexactSchurOperator::new(&ops.m, &ops.k, rho, &ops.m_lump).unwrap();
    assert_matches(&op, &dense, 1e-12);
}

#[test]
fn interior_stiffness_row_sums_balance_boundary_couplings() {
    let mesh = build_mesh(3, 1).unwrap();
    let (k_full, _) = assemble_matrices(&mesh, DofSet::All).unwrap();
    let k = &LevelSetup::new(3, 1).unwrap().ops().k.clone();
    let sums = k.mul_vec(&vec![1.0; k.n_rows()]);
    for (r, &v) in mesh.interior_vertices().iter().enumerate() {
        let (cols, vals) = k_full.row(v);
        let boundary: f64 = cols
            .iter()
            .zip(vals)
            .filter(|(c, _)| mesh.is_boundary(**c))
            .map(|(_, a)| a)
            .sum();
        assert!((sums[r] + boundary).abs() < 1e-14, "row {r}");
    }
}

#[test]
fn indicator_load_is_exact_at_order_two() {
    for level in 1..=3 {
        let mesh = build_mesh(3, level).unwrap();
        let f2 = assemble_load(&mesh, |x| Target::CubeIndicator.evaluate(x), 2).unwrap();
        let f4 = assemble_load(&mesh, |x| Target::CubeIndicator.evaluate(x), 4).unwrap();
        assert!(f2.iter().zip(&f4).all(|(a, b)| (a - b).abs() < 1e-14));
    }
}

#[test]
fn indicator_norm_from_zero_state() {
    let mesh = build_mesh(3, 2).unwrap();
    let e = l2_error(&mesh, &vec![0.0; mesh.num_interior()], Target::CubeIndicator, 4).unwrap();
    assert!((e - 0.125f64.sqrt()).abs() < 1e-12);
}

#[test]
fn pcg_solves_random_spd_system() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 50;
    let g = DenseMatrix::from_rows(&(0..n).map(|_| random_vec(&mut rng, n)).collect::<Vec<_>>()).unwrap();
    let a = g.transpose().matmul(&g).add(&DenseMatrix::identity(n).scaled(n as f64));
    let a = CsrMatrix::from_dense(&a);
    let b = random_vec(&mut rng, n);
    let jacobi = DiagonalInverse::new(&a.diagonal()).unwrap();
    let (x, stats) = pcg(&a, &jacobi, &b, KrylovOptions::new(1e-12, 500)).unwrap();
    assert!(stats.converged);
    let r: Vec<f64> = a.mul_vec(&x).iter().zip(&b).map(|(ax, bi)| bi - ax).collect();
    assert!(dot(&r, &r).sqrt() <= 1e-10 * dot(&b, &b).sqrt());
}

/// Sampled extremes of `(A v, v) / (B v, v)`.
fn sampled_quotients(a: &CsrMatrix, b: &dyn Fn(&[f64]) -> f64, samples: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples).fold((f64::INFINITY, 0.0f64), |(lo, hi), _| {
        let v = random_vec(&mut rng, a.n_rows());
        let q = dot(&v, &a.mul_vec(&v)) / b(&v);
        (lo.min(q), hi.max(q))
    })
}

#[test]
fn mass_quotients_scale_like_h_cubed() {
    let bounds: Vec<(f64, f64)> = (1..=3)
        .map(|level| {
            let s = LevelSetup::new(3, level).unwrap();
            let h3 = s.h().powi(3);
            sampled_quotients(&s.ops().m, &|v| h3 * dot(v, v), 100, level as u64)
        })
        .collect();
    for w in bounds.windows(2) {
        assert!(w[1].0 / w[0].0 < 1.2 && w[0].0 / w[1].0 < 1.2, "{bounds:?}");
        assert!(w[1].1 / w[0].1 < 1.2 && w[0].1 / w[1].1 < 1.2, "{bounds:?}");
    }
}

/// Sampled quotients against each diagonal surrogate stay in one fixed
/// interval on every level. The lumped bound of one holds because the mass
/// entries are non-negative.
#[test]
fn mass_surrogates_are_spectrally_equivalent() {
    for level in 1..=3 {
        let s = LevelSetup::new(3, level).unwrap();
        let ops = s.ops();
        for (d, lo, hi) in [
            (&ops.m_diag, 0.5, 2.5),
            (&ops.m_lump, 0.2, 1.0 + 1e-12),
            (&ops.m_area, 0.05, 0.25),
        ] {
            let (a, b) = sampled_quotients(
                &ops.m,
                &|v| v.iter().zip(d.iter()).map(|(x, w)| w * x * x).sum(),
                100,
                7,
            );
            assert!(a >= lo && b <= hi, "level {level}: [{a}, {b}] outside [{lo}, {hi}]");
        }
    }
}

#[test]
fn shifted_operator_dominates_mass() {
    let mut upper = Vec::new();
    for level in 1..=3 {
        let s = LevelSetup::new(3, level).unwrap();
        let ops = s.ops();
        let a = ops.m.add_scaled(s.h().powi(2), &ops.k).unwrap();
        let (lo, hi) = sampled_quotients(&a, &|v| dot(v, &ops.m.mul_vec(v)), 100, 11);
        assert!(lo >= 1.0);
        upper.push(hi);
    }
    let (min, max) = upper
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    assert!(max / min < 2.0, "{upper:?}");
}

#[test]
fn multigrid_is_a_contraction_on_each_level() {
    for level in 2..=4 {
        let s = LevelSetup::new(3, level).unwrap();
        let mg = s.multigrid(s.h().powi(4)).unwrap();
        let eta = mg.measure_contraction(20, 3);
        assert!(eta < 0.5, "level {level}: {eta}");
    }
}

#[test]
fn bp_recovered_adjoint_matches_mixed_solve() {
    use ellopt_core::solvers::{p_hat_from_p_tilde, solve_bp_pcg, solve_diag_minres};
    let (setup, rho) = level_one();
    let problem = setup.problem(Target::Pyramid, rho, 4).unwrap();
    let opts = ellopt_core::SolveOptions::default();
    let mixed = solve_diag_minres(&problem, &opts).unwrap();
    let bp = solve_bp_pcg(&problem, &opts).unwrap();
    assert!(rel_diff(&p_hat_from_p_tilde(&bp.p_tilde, rho), &mixed.p_hat) < 1e-7);
    assert!(rel_diff(&bp.u, &mixed.u) < 1e-7);
}
