use super::csr::CsrMatrix;
use super::vector::scale;
use crate::error::{Error, Result};

/// A square linear map applied in place of a matrix.
///
/// Preconditioners implement the same trait: `apply` evaluates `C^-1 r`.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;

    /// `y = Op x`; `y` is fully overwritten.
    fn apply(&self, x: &[f64], y: &mut [f64]);

    fn apply_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.apply(x, &mut y);
        y
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply(x, y)
    }
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        debug_assert_eq!(self.n_rows(), self.n_cols());
        self.n_rows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.spmv_unchecked(x, y);
    }
}

/// Wraps a closure as an operator of fixed dimension.
pub struct FnOperator<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64], &mut [f64]) + Sync> FnOperator<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&[f64], &mut [f64]) + Sync> LinearOperator for FnOperator<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (self.f)(x, y)
    }
}

/// Inverse of a positive diagonal matrix, `y = D^-1 x`.
#[derive(Clone, Debug)]
pub struct DiagonalInverse {
    inv: Vec<f64>,
}

impl DiagonalInverse {
    pub fn new(diag: &[f64]) -> Result<Self> {
        if let Some((i, &v)) = diag.iter().enumerate().find(|(_, &v)| v <= 0.0 || !v.is_finite()) {
            return Err(Error::NonPositive {
                what: "diagonal preconditioner",
                index: i,
                value: v,
            });
        }
        Ok(Self {
            inv: diag.iter().map(|d| 1.0 / d).collect(),
        })
    }

    pub fn inverse_entries(&self) -> &[f64] {
        &self.inv
    }
}

impl LinearOperator for DiagonalInverse {
    fn dim(&self) -> usize {
        self.inv.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for ((yi, xi), di) in y.iter_mut().zip(x).zip(&self.inv) {
            *yi = xi * di;
        }
    }
}

fn check_pair(m: &CsrMatrix, k: &CsrMatrix) -> Result<usize> {
    let n = m.n_rows();
    for a in [m, k] {
        if a.n_rows() != n || a.n_cols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: a.n_cols(),
            });
        }
    }
    Ok(n)
}

/// The symmetric indefinite mixed system `[[M, K], [K, -M/rho]]` acting on
/// stacked `[u; p_hat]`.
#[derive(Clone, Copy, Debug)]
pub struct MixedSaddleOperator<'a> {
    m: &'a CsrMatrix,
    k: &'a CsrMatrix,
    rho: f64,
    n: usize,
}

impl<'a> MixedSaddleOperator<'a> {
    pub fn new(m: &'a CsrMatrix, k: &'a CsrMatrix, rho: f64) -> Result<Self> {
        if !(rho > 0.0) {
            return Err(Error::InvalidArgument(format!("rho must be positive, got {rho}")));
        }
        let n = check_pair(m, k)?;
        Ok(Self { m, k, rho, n })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }
}

impl LinearOperator for MixedSaddleOperator<'_> {
    fn dim(&self) -> usize {
        2 * self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let (u, p) = x.split_at(self.n);
        let (r1, r2) = y.split_at_mut(self.n);
        self.m.spmv_unchecked(u, r1);
        self.k.spmv_acc_unchecked(1.0, p, 1.0, r1);
        self.k.spmv_unchecked(u, r2);
        self.m.spmv_acc_unchecked(-1.0 / self.rho, p, 1.0, r2);
    }
}

/// The Bramble–Pasciak transformed matrix acting on stacked `[p_tilde; u]`.
///
/// With `w = M p + sqrt(rho) K u` and `s = sqrt(rho) K p - M u` the action is
/// `r1 = M C^-1 w - w` and `r2 = sqrt(rho) K C^-1 w - s`; the block matrix
/// itself is never formed. Symmetric positive definite whenever `C < M`.
#[derive(Clone, Debug)]
pub struct BpTransformedOperator<'a> {
    m: &'a CsrMatrix,
    k: &'a CsrMatrix,
    sqrt_rho: f64,
    c_m: Vec<f64>,
    c_inv: Vec<f64>,
    n: usize,
}

impl<'a> BpTransformedOperator<'a> {
    pub fn new(m: &'a CsrMatrix, k: &'a CsrMatrix, rho: f64, c_m: Vec<f64>) -> Result<Self> {
        if !(rho > 0.0) {
            return Err(Error::InvalidArgument(format!("rho must be positive, got {rho}")));
        }
        let n = check_pair(m, k)?;
        if c_m.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: c_m.len(),
            });
        }
        if let Some(i) = c_m.iter().position(|&c| c == 0.0) {
            return Err(Error::ZeroDiagonal(i));
        }
        let c_inv = c_m.iter().map(|c| 1.0 / c).collect();
        Ok(Self {
            m,
            k,
            sqrt_rho: rho.sqrt(),
            c_m,
            c_inv,
            n,
        })
    }

    /// `C_M = factor * diag(M)`.
    pub fn with_scaled_mass_diagonal(m: &'a CsrMatrix, k: &'a CsrMatrix, rho: f64, factor: f64) -> Result<Self> {
        let c = m.diagonal().into_iter().map(|d| factor * d).collect();
        Self::new(m, k, rho, c)
    }

    pub fn c_m(&self) -> &[f64] {
        &self.c_m
    }

    /// Transformed right-hand side `T [g1; g2]` of the untransformed system
    /// `[[M, sqrt(rho) K], [sqrt(rho) K, -M]] [p; u] = [g1; g2]`.
    pub fn transform_rhs(&self, g1: &[f64], g2: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; 2 * n];
        let cg: Vec<f64> = g1.iter().zip(&self.c_inv).map(|(g, c)| g * c).collect();
        let (r1, r2) = out.split_at_mut(n);
        self.m.spmv_unchecked(&cg, r1);
        for (ri, gi) in r1.iter_mut().zip(g1) {
            *ri -= gi;
        }
        self.k.spmv_unchecked(&cg, r2);
        scale(self.sqrt_rho, r2);
        for (ri, gi) in r2.iter_mut().zip(g2) {
            *ri -= gi;
        }
        out
    }
}

impl LinearOperator for BpTransformedOperator<'_> {
    fn dim(&self) -> usize {
        2 * self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.n;
        let (p, u) = x.split_at(n);
        let (r1, r2) = y.split_at_mut(n);
        let mut w = vec![0.0; n];
        self.m.spmv_unchecked(p, &mut w);
        self.k.spmv_acc_unchecked(self.sqrt_rho, u, 1.0, &mut w);
        // r2 <- s
        self.m.spmv_unchecked(u, r2);
        self.k.spmv_acc_unchecked(self.sqrt_rho, p, -1.0, r2);
        let cw: Vec<f64> = w.iter().zip(&self.c_inv).map(|(a, b)| a * b).collect();
        self.k.spmv_acc_unchecked(self.sqrt_rho, &cw, -1.0, r2);
        for (ri, wi) in r1.iter_mut().zip(&w) {
            *ri = -wi;
        }
        self.m.spmv_acc_unchecked(1.0, &cw, 1.0, r1);
    }
}

/// The inexact Schur complement `rho K lump(M)^-1 K + M`.
#[derive(Clone, Debug)]
pub struct InexactSchurOperator<'a> {
    m: &'a CsrMatrix,
    k: &'a CsrMatrix,
    rho: f64,
    lump_inv: Vec<f64>,
}

impl<'a> InexactSchurOperator<'a> {
    pub fn new(m: &'a CsrMatrix, k: &'a CsrMatrix, rho: f64, lump: &[f64]) -> Result<Self> {
        if !(rho >= 0.0) {
            return Err(Error::InvalidArgument(format!("rho must be non-negative, got {rho}")));
        }
        let n = check_pair(m, k)?;
        if lump.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: lump.len(),
            });
        }
        let lump_inv = DiagonalInverse::new(lump)?.inverse_entries().to_vec();
        Ok(Self { m, k, rho, lump_inv })
    }
}

impl LinearOperator for InexactSchurOperator<'_> {
    fn dim(&self) -> usize {
        self.lump_inv.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let mut t = vec![0.0; x.len()];
        self.k.spmv_unchecked(x, &mut t);
        for (ti, di) in t.iter_mut().zip(&self.lump_inv) {
            *ti *= di;
        }
        self.m.spmv_unchecked(x, y);
        self.k.spmv_acc_unchecked(self.rho, &t, 1.0, y);
    }
}
