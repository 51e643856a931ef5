//! Sparse and dense kernels plus the matrix-free block operators of the three
//! equivalent formulations of the discrete optimality system.

mod block;
mod csr;
mod dense;
pub mod mtx;
pub mod vector;

pub use block::{
    BpTransformedOperator, DiagonalInverse, FnOperator, InexactSchurOperator, LinearOperator, MixedSaddleOperator,
};
pub use csr::CsrMatrix;
pub use dense::{dense_solve, DenseMatrix, LuFactorization};
