use rayon::prelude::*;

use super::dense::DenseMatrix;
use crate::error::{Error, Result};

/// Rows per rayon task in the parallel kernels. Below this the serial path is
/// used; either way every output row is accumulated left to right, so the
/// result does not depend on the thread count.
const PAR_ROW_CHUNK: usize = 2048;

/// Compressed sparse row matrix with sorted column indices in every row.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_parts(
        n_rows: usize,
        n_cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_offsets.len() != n_rows + 1 {
            return Err(Error::DimensionMismatch {
                expected: n_rows + 1,
                found: row_offsets.len(),
            });
        }
        if col_indices.len() != values.len() || row_offsets[n_rows] != values.len() {
            return Err(Error::DimensionMismatch {
                expected: row_offsets[n_rows],
                found: values.len(),
            });
        }
        for i in 0..n_rows {
            let (lo, hi) = (row_offsets[i], row_offsets[i + 1]);
            if lo > hi {
                return Err(Error::InvalidArgument(format!("row offsets decrease at row {i}")));
            }
            let cols = &col_indices[lo..hi];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidArgument(format!(
                    "column indices of row {i} are not strictly increasing"
                )));
            }
            if cols.last().is_some_and(|&c| c >= n_cols) {
                return Err(Error::InvalidArgument(format!("column index out of range in row {i}")));
            }
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: diag.to_vec(),
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are
    /// summed in the order they appear.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        for &(r, c, _) in triplets {
            if r >= n_rows || c >= n_cols {
                return Err(Error::InvalidArgument(format!(
                    "triplet ({r}, {c}) outside {n_rows}x{n_cols}"
                )));
            }
        }
        order.sort_by_key(|&k| (triplets[k].0, triplets[k].1));
        let mut row_offsets = vec![0usize; n_rows + 1];
        let mut col_indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for k in order {
            let (r, c, v) = triplets[k];
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_indices.push(c);
                values.push(v);
                row_offsets[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n_rows {
            row_offsets[i + 1] += row_offsets[i];
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn from_dense(a: &DenseMatrix) -> Self {
        let mut triplets = Vec::new();
        for i in 0..a.n_rows() {
            for j in 0..a.n_cols() {
                let v = a[(i, j)];
                if v != 0.0 {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(a.n_rows(), a.n_cols(), &triplets).expect("indices in range")
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.row_offsets[i], self.row_offsets[i + 1]);
        (&self.col_indices[lo..hi], &self.values[lo..hi])
    }

    /// Position of entry `(i, j)` in the value array, if stored.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let (lo, hi) = (self.row_offsets[i], self.row_offsets[i + 1]);
        self.col_indices[lo..hi].binary_search(&j).ok().map(|k| lo + k)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |k| self.values[k])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows.min(self.n_cols)).map(|i| self.get(i, i)).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.row(i).1.iter().sum()).collect()
    }

    fn check_spmv(&self, x: &[f64], y: &[f64]) -> Result<()> {
        if x.len() != self.n_cols {
            return Err(Error::DimensionMismatch {
                expected: self.n_cols,
                found: x.len(),
            });
        }
        if y.len() != self.n_rows {
            return Err(Error::DimensionMismatch {
                expected: self.n_rows,
                found: y.len(),
            });
        }
        Ok(())
    }

    #[inline]
    fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let (lo, hi) = (self.row_offsets[i], self.row_offsets[i + 1]);
        let mut acc = 0.0;
        for k in lo..hi {
            acc += self.values[k] * x[self.col_indices[k]];
        }
        acc
    }

    /// `y = A x`.
    pub fn spmv(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        self.check_spmv(x, y)?;
        self.spmv_unchecked(x, y);
        Ok(())
    }

    pub(crate) fn spmv_unchecked(&self, x: &[f64], y: &mut [f64]) {
        if self.n_rows >= 2 * PAR_ROW_CHUNK {
            y.par_chunks_mut(PAR_ROW_CHUNK).enumerate().for_each(|(c, chunk)| {
                let base = c * PAR_ROW_CHUNK;
                for (k, yi) in chunk.iter_mut().enumerate() {
                    *yi = self.row_dot(base + k, x);
                }
            });
        } else {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = self.row_dot(i, x);
            }
        }
    }

    /// `y = alpha A x + beta y`.
    pub fn spmv_acc(&self, alpha: f64, x: &[f64], beta: f64, y: &mut [f64]) -> Result<()> {
        self.check_spmv(x, y)?;
        self.spmv_acc_unchecked(alpha, x, beta, y);
        Ok(())
    }

    pub(crate) fn spmv_acc_unchecked(&self, alpha: f64, x: &[f64], beta: f64, y: &mut [f64]) {
        let update = |i: usize, yi: &mut f64| {
            *yi = alpha * self.row_dot(i, x) + beta * *yi;
        };
        if self.n_rows >= 2 * PAR_ROW_CHUNK {
            y.par_chunks_mut(PAR_ROW_CHUNK).enumerate().for_each(|(c, chunk)| {
                let base = c * PAR_ROW_CHUNK;
                for (k, yi) in chunk.iter_mut().enumerate() {
                    update(base + k, yi);
                }
            });
        } else {
            for (i, yi) in y.iter_mut().enumerate() {
                update(i, yi);
            }
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols, "spmv dimension mismatch");
        let mut y = vec![0.0; self.n_rows];
        self.spmv_unchecked(x, &mut y);
        y
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &c in &self.col_indices {
            counts[c + 1] += 1;
        }
        for j in 0..self.n_cols {
            counts[j + 1] += counts[j];
        }
        let row_offsets = counts.clone();
        let mut next = counts;
        let mut col_indices = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                let k = next[c];
                col_indices[k] = i;
                values[k] = v;
                next[c] += 1;
            }
        }
        Self {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_offsets,
            col_indices,
            values,
        }
    }

    /// Sparse product `self * other` (row-wise Gustavson accumulation).
    pub fn matmul(&self, other: &CsrMatrix) -> Result<Self> {
        if self.n_cols != other.n_rows {
            return Err(Error::DimensionMismatch {
                expected: self.n_cols,
                found: other.n_rows,
            });
        }
        let n = other.n_cols;
        let rows: Vec<(Vec<usize>, Vec<f64>)> = (0..self.n_rows)
            .into_par_iter()
            .map_init(
                || (vec![usize::MAX; n], vec![0.0; n]),
                |(marker, acc), i| {
                    let mut cols = Vec::new();
                    let (ac, av) = self.row(i);
                    for (&k, &a) in ac.iter().zip(av) {
                        let (bc, bv) = other.row(k);
                        for (&j, &b) in bc.iter().zip(bv) {
                            if marker[j] != i {
                                marker[j] = i;
                                acc[j] = 0.0;
                                cols.push(j);
                            }
                            acc[j] += a * b;
                        }
                    }
                    cols.sort_unstable();
                    let vals = cols.iter().map(|&j| acc[j]).collect();
                    (cols, vals)
                },
            )
            .collect();
        let mut row_offsets = Vec::with_capacity(self.n_rows + 1);
        row_offsets.push(0);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        for (cols, vals) in rows {
            col_indices.extend(cols);
            values.extend(vals);
            row_offsets.push(col_indices.len());
        }
        Ok(Self {
            n_rows: self.n_rows,
            n_cols: n,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// `self + alpha * other` on the union of both sparsity patterns.
    pub fn add_scaled(&self, alpha: f64, other: &CsrMatrix) -> Result<Self> {
        if self.n_rows != other.n_rows || self.n_cols != other.n_cols {
            return Err(Error::DimensionMismatch {
                expected: self.n_rows,
                found: other.n_rows,
            });
        }
        let mut row_offsets = Vec::with_capacity(self.n_rows + 1);
        row_offsets.push(0);
        let mut col_indices = Vec::with_capacity(self.nnz().max(other.nnz()));
        let mut values = Vec::with_capacity(self.nnz().max(other.nnz()));
        for i in 0..self.n_rows {
            let (ac, av) = self.row(i);
            let (bc, bv) = other.row(i);
            let (mut p, mut q) = (0, 0);
            while p < ac.len() || q < bc.len() {
                let ca = ac.get(p).copied().unwrap_or(usize::MAX);
                let cb = bc.get(q).copied().unwrap_or(usize::MAX);
                if ca == cb {
                    col_indices.push(ca);
                    values.push(av[p] + alpha * bv[q]);
                    p += 1;
                    q += 1;
                } else if ca < cb {
                    col_indices.push(ca);
                    values.push(av[p]);
                    p += 1;
                } else {
                    col_indices.push(cb);
                    values.push(alpha * bv[q]);
                    q += 1;
                }
            }
            row_offsets.push(col_indices.len());
        }
        Ok(Self {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                d[(i, j)] += v;
            }
        }
        d
    }

    /// Largest `|a_ij - a_ji|` over stored entries.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }
}
