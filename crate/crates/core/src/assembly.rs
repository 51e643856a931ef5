//! P1 stiffness, mass and load assembly on the interior dofs of a
//! [`StructuredSimplicialMesh`].
//!
//! Element matrices are exact (constant gradients, closed-form mass). Work is
//! split into fixed chunks of elements: element contributions of a chunk are
//! computed in parallel, then scattered serially in element order, so the
//! assembled values do not depend on the number of threads.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use crate::mesh::StructuredSimplicialMesh;
use crate::quadrature::SimplexRule;

const ELEMENT_CHUNK: usize = 1 << 15;

/// Which vertices carry degrees of freedom.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DofSet {
    /// Interior vertices only (homogeneous Dirichlet data eliminated).
    Interior,
    /// Every vertex; used for pre-elimination checks.
    All,
}

/// Diagonal approximations of the mass matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MassDiagonal {
    /// `diag(M)`.
    Diag,
    /// Row sums of the full mass matrix.
    Lump,
    /// Measure of the support of each basis function.
    Area,
}

impl std::str::FromStr for MassDiagonal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "diag" => Ok(Self::Diag),
            "lump" => Ok(Self::Lump),
            "area" => Ok(Self::Area),
            other => Err(Error::InvalidArgument(format!("unknown mass diagonal `{other}`"))),
        }
    }
}

impl std::fmt::Display for MassDiagonal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Diag => "diag",
            Self::Lump => "lump",
            Self::Area => "area",
        })
    }
}

/// Volume and barycentric gradients of one simplex.
#[derive(Clone, Copy, Debug)]
pub struct ElementGeometry {
    pub volume: f64,
    pub grads: [[f64; 3]; 4],
}

pub fn element_geometry(mesh: &StructuredSimplicialMesh, t: usize) -> Result<ElementGeometry> {
    let dim = mesh.dim();
    let s = mesh.simplex(t);
    let x0 = mesh.vertex(s[0]);
    // Columns of the Jacobian are the edge vectors from vertex 0.
    let mut jac = [[0.0; 3]; 3];
    for c in 0..dim {
        let x = mesh.vertex(s[c + 1]);
        for r in 0..dim {
            jac[r][c] = x[r] - x0[r];
        }
    }
    let mut grads = [[0.0; 3]; 4];
    let det = match dim {
        2 => {
            let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
            if det == 0.0 {
                return Err(Error::DegenerateElement(t));
            }
            // Rows of J^-1.
            grads[1] = [jac[1][1] / det, -jac[0][1] / det, 0.0];
            grads[2] = [-jac[1][0] / det, jac[0][0] / det, 0.0];
            det
        }
        _ => {
            let cof =
                |r0: usize, r1: usize, c0: usize, c1: usize| jac[r0][c0] * jac[r1][c1] - jac[r0][c1] * jac[r1][c0];
            let det = jac[0][0] * cof(1, 2, 1, 2) - jac[0][1] * cof(1, 2, 0, 2) + jac[0][2] * cof(1, 2, 0, 1);
            if det == 0.0 {
                return Err(Error::DegenerateElement(t));
            }
            // Row i of J^-1 is the i-th row of adj(J) / det.
            grads[1] = [cof(1, 2, 1, 2) / det, -cof(0, 2, 1, 2) / det, cof(0, 1, 1, 2) / det];
            grads[2] = [-cof(1, 2, 0, 2) / det, cof(0, 2, 0, 2) / det, -cof(0, 1, 0, 2) / det];
            grads[3] = [cof(1, 2, 0, 1) / det, -cof(0, 2, 0, 1) / det, cof(0, 1, 0, 1) / det];
            det
        }
    };
    for d in 0..3 {
        grads[0][d] = -(1..=dim).map(|i| grads[i][d]).sum::<f64>();
    }
    let factorial = if dim == 2 { 2.0 } else { 6.0 };
    Ok(ElementGeometry {
        volume: det.abs() / factorial,
        grads,
    })
}

/// Exact element stiffness matrix, row-major `(dim+1)^2` entries.
fn element_stiffness(geo: &ElementGeometry, dim: usize) -> [f64; 16] {
    let n = dim + 1;
    let mut ke = [0.0; 16];
    for i in 0..n {
        for j in 0..n {
            let g: f64 = (0..dim).map(|d| geo.grads[i][d] * geo.grads[j][d]).sum();
            ke[i * n + j] = geo.volume * g;
        }
    }
    ke
}

/// Exact P1 element mass entry: `|T| (1 + delta_ij) / ((d+1)(d+2))`.
#[inline]
fn element_mass(volume: f64, dim: usize, i: usize, j: usize) -> f64 {
    let denom = ((dim + 1) * (dim + 2)) as f64;
    if i == j {
        2.0 * volume / denom
    } else {
        volume / denom
    }
}

fn dof_of(mesh: &StructuredSimplicialMesh, dofs: DofSet, v: usize) -> Option<usize> {
    match dofs {
        DofSet::Interior => mesh.interior_index(v),
        DofSet::All => Some(v),
    }
}

fn num_dofs(mesh: &StructuredSimplicialMesh, dofs: DofSet) -> usize {
    match dofs {
        DofSet::Interior => mesh.num_interior(),
        DofSet::All => mesh.num_vertices(),
    }
}

/// Zero-valued CSR matrix with the P1 coupling pattern on `dofs`.
fn sparsity_pattern(mesh: &StructuredSimplicialMesh, dofs: DofSet) -> CsrMatrix {
    let n = num_dofs(mesh, dofs);
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
    for s in mesh.simplices() {
        for &a in s {
            let Some(ra) = dof_of(mesh, dofs, a) else { continue };
            for &b in s {
                if let Some(cb) = dof_of(mesh, dofs, b) {
                    rows[ra].push(cb);
                }
            }
        }
    }
    let mut row_offsets = Vec::with_capacity(n + 1);
    row_offsets.push(0);
    let mut col_indices = Vec::new();
    for mut r in rows {
        r.sort_unstable();
        r.dedup();
        col_indices.extend(r);
        row_offsets.push(col_indices.len());
    }
    let values = vec![0.0; col_indices.len()];
    CsrMatrix::from_parts(n, n, row_offsets, col_indices, values).expect("sorted pattern")
}

fn geometry_chunk(mesh: &StructuredSimplicialMesh, range: std::ops::Range<usize>) -> Result<Vec<ElementGeometry>> {
    range
        .into_par_iter()
        .map(|t| {
            let g = element_geometry(mesh, t)?;
            if g.volume <= 0.0 {
                return Err(Error::DegenerateElement(t));
            }
            Ok(g)
        })
        .collect()
}

fn scatter(
    mesh: &StructuredSimplicialMesh,
    dofs: DofSet,
    target: &mut CsrMatrix,
    t: usize,
    local: impl Fn(usize, usize) -> f64,
) {
    let s = mesh.simplex(t);
    for (i, &a) in s.iter().enumerate() {
        let Some(ra) = dof_of(mesh, dofs, a) else { continue };
        for (j, &b) in s.iter().enumerate() {
            if let Some(cb) = dof_of(mesh, dofs, b) {
                let k = target.position(ra, cb).expect("entry in pattern");
                target.values_mut()[k] += local(i, j);
            }
        }
    }
}

/// Assembles stiffness and mass matrices on `dofs` in a single element pass.
pub fn assemble_matrices(mesh: &StructuredSimplicialMesh, dofs: DofSet) -> Result<(CsrMatrix, CsrMatrix)> {
    let dim = mesh.dim();
    let n = dim + 1;
    let mut k = sparsity_pattern(mesh, dofs);
    let mut m = k.clone();
    let n_el = mesh.num_simplices();
    for start in (0..n_el).step_by(ELEMENT_CHUNK) {
        let end = (start + ELEMENT_CHUNK).min(n_el);
        let geos = geometry_chunk(mesh, start..end)?;
        for (offset, geo) in geos.iter().enumerate() {
            let t = start + offset;
            let ke = element_stiffness(geo, dim);
            scatter(mesh, dofs, &mut k, t, |i, j| ke[i * n + j]);
            scatter(mesh, dofs, &mut m, t, |i, j| element_mass(geo.volume, dim, i, j));
        }
    }
    Ok((k, m))
}

/// Stiffness matrix on the interior dofs.
pub fn assemble_stiffness(mesh: &StructuredSimplicialMesh) -> Result<CsrMatrix> {
    Ok(assemble_matrices(mesh, DofSet::Interior)?.0)
}

/// Consistent mass matrix on the interior dofs.
pub fn assemble_mass(mesh: &StructuredSimplicialMesh) -> Result<CsrMatrix> {
    Ok(assemble_matrices(mesh, DofSet::Interior)?.1)
}

/// Diagonal surrogate of the interior mass matrix `m`.
pub fn mass_diagonal(m: &CsrMatrix, mesh: &StructuredSimplicialMesh, variant: MassDiagonal) -> Result<Vec<f64>> {
    let n = mesh.num_interior();
    if m.n_rows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: m.n_rows(),
        });
    }
    let out = match variant {
        MassDiagonal::Diag => m.diagonal(),
        // Row sums of the interior matrix; boundary columns do not contribute.
        MassDiagonal::Lump => m.row_sums(),
        MassDiagonal::Area => {
            let mut out = vec![0.0; n];
            for t in 0..mesh.num_simplices() {
                let vol = mesh.signed_volume(t);
                for &v in mesh.simplex(t) {
                    if let Some(r) = mesh.interior_index(v) {
                        out[r] += vol;
                    }
                }
            }
            out
        }
    };
    if let Some((i, &v)) = out.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
        return Err(Error::NonPositive {
            what: "mass diagonal",
            index: i,
            value: v,
        });
    }
    Ok(out)
}

/// Load vector `f_l = int target * phi_l` on the interior dofs using the
/// symmetric simplex rule of the given order (1, 2 or 4).
pub fn assemble_load<F>(mesh: &StructuredSimplicialMesh, target: F, quad_order: usize) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let dim = mesh.dim();
    let rule = SimplexRule::new(dim, quad_order)?;
    let mut f = vec![0.0; mesh.num_interior()];
    let n_el = mesh.num_simplices();
    for start in (0..n_el).step_by(ELEMENT_CHUNK) {
        let end = (start + ELEMENT_CHUNK).min(n_el);
        let local: Vec<[f64; 4]> = (start..end)
            .into_par_iter()
            .map(|t| {
                let s = mesh.simplex(t);
                let vol = mesh.signed_volume(t);
                let mut out = [0.0; 4];
                let mut x = [0.0; 3];
                for (p, w) in rule.points.iter().zip(&rule.weights) {
                    x.fill(0.0);
                    for (i, &v) in s.iter().enumerate() {
                        for (xd, vd) in x.iter_mut().zip(mesh.vertex(v)) {
                            *xd += p[i] * vd;
                        }
                    }
                    let val = w * vol * target(&x[..dim]);
                    for (o, pi) in out.iter_mut().zip(p) {
                        *o += val * pi;
                    }
                }
                out
            })
            .collect();
        for (offset, contrib) in local.iter().enumerate() {
            for (i, &v) in mesh.simplex(start + offset).iter().enumerate() {
                if let Some(r) = mesh.interior_index(v) {
                    f[r] += contrib[i];
                }
            }
        }
    }
    Ok(f)
}

/// Target-independent finite element data of one level.
#[derive(Clone, Debug)]
pub struct FeOperators {
    pub k: CsrMatrix,
    pub m: CsrMatrix,
    pub m_diag: Vec<f64>,
    pub m_lump: Vec<f64>,
    pub m_area: Vec<f64>,
    pub h: f64,
    pub dim: usize,
}

impl FeOperators {
    pub fn assemble(mesh: &StructuredSimplicialMesh) -> Result<Self> {
        let (k, m) = assemble_matrices(mesh, DofSet::Interior)?;
        Ok(Self {
            m_diag: mass_diagonal(&m, mesh, MassDiagonal::Diag)?,
            m_lump: mass_diagonal(&m, mesh, MassDiagonal::Lump)?,
            m_area: mass_diagonal(&m, mesh, MassDiagonal::Area)?,
            k,
            m,
            h: mesh.h(),
            dim: mesh.dim(),
        })
    }

    pub fn n(&self) -> usize {
        self.m.n_rows()
    }

    pub fn mass_diagonal(&self, variant: MassDiagonal) -> &[f64] {
        match variant {
            MassDiagonal::Diag => &self.m_diag,
            MassDiagonal::Lump => &self.m_lump,
            MassDiagonal::Area => &self.m_area,
        }
    }
}

/// Matrices, load vector and regularization parameter of one discrete
/// optimal control problem.
#[derive(Clone, Debug)]
pub struct AssembledProblem {
    pub ops: Arc<FeOperators>,
    pub f: Vec<f64>,
    pub rho: f64,
}

impl AssembledProblem {
    pub fn new(ops: Arc<FeOperators>, f: Vec<f64>, rho: f64) -> Result<Self> {
        if f.len() != ops.n() {
            return Err(Error::DimensionMismatch {
                expected: ops.n(),
                found: f.len(),
            });
        }
        if !(rho >= 0.0) || !rho.is_finite() {
            return Err(Error::InvalidArgument(format!("invalid rho {rho}")));
        }
        Ok(Self { ops, f, rho })
    }

    pub fn k(&self) -> &CsrMatrix {
        &self.ops.k
    }

    pub fn m(&self) -> &CsrMatrix {
        &self.ops.m
    }

    pub fn n(&self) -> usize {
        self.ops.n()
    }

    pub fn h(&self) -> f64 {
        self.ops.h
    }
}
