//! Structured simplicial meshes of the unit square/cube and their nested
//! hierarchies.
//!
//! Every level is a Freudenthal (Kuhn) triangulation of a uniform grid: each
//! grid cell is split into `dim!` simplices, one per ordering of the
//! coordinate axes. Level `l` has `2^(l+1) + 1` vertices per axis, so level 1
//! of the unit cube has 125 vertices and 384 tetrahedra. Because the Kuhn
//! triangulation of the half-spaced grid refines the coarser one, the
//! hierarchy is nested by construction and the canonical P1 prolongation is
//! plain edge-midpoint interpolation.

use std::io::Write;

use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;

/// One uniform refinement level of `(0,1)^dim`.
#[derive(Clone, Debug)]
pub struct StructuredSimplicialMesh {
    dim: usize,
    level: usize,
    n_per_axis: usize,
    h: f64,
    vertices: Vec<f64>,
    simplices: Vec<usize>,
    is_boundary: Vec<bool>,
    interior_index: Vec<Option<usize>>,
    interior_vertices: Vec<usize>,
}

fn axis_permutations(dim: usize) -> &'static [&'static [usize]] {
    match dim {
        2 => &[&[0, 1], &[1, 0]],
        _ => &[&[0, 1, 2], &[0, 2, 1], &[1, 0, 2], &[1, 2, 0], &[2, 0, 1], &[2, 1, 0]],
    }
}

/// Builds the Freudenthal triangulation of the unit hypercube at `level`.
pub fn build_mesh(dim: usize, level: usize) -> Result<StructuredSimplicialMesh> {
    if dim != 2 && dim != 3 {
        return Err(Error::InvalidDimension(dim));
    }
    if level < 1 {
        return Err(Error::InvalidLevel(level));
    }
    let cells = 1usize << (level + 1);
    let n = cells + 1;
    let h = 1.0 / cells as f64;
    let n_vertices = n.pow(dim as u32);

    let mut vertices = Vec::with_capacity(n_vertices * dim);
    let mut is_boundary = Vec::with_capacity(n_vertices);
    let mut grid = [0usize; 3];
    for v in 0..n_vertices {
        grid_coords(v, n, dim, &mut grid);
        let mut boundary = false;
        for &g in &grid[..dim] {
            vertices.push(g as f64 * h);
            boundary |= g == 0 || g == cells;
        }
        is_boundary.push(boundary);
    }

    let mut interior_index = vec![None; n_vertices];
    let mut interior_vertices = Vec::with_capacity((n - 2).pow(dim as u32));
    for v in 0..n_vertices {
        if !is_boundary[v] {
            interior_index[v] = Some(interior_vertices.len());
            interior_vertices.push(v);
        }
    }

    let perms = axis_permutations(dim);
    let n_cells = cells.pow(dim as u32);
    let mut simplices = Vec::with_capacity(n_cells * perms.len() * (dim + 1));
    let mut stride = [1usize; 3];
    for d in 1..dim {
        stride[d] = stride[d - 1] * n;
    }
    let mut cell = [0usize; 3];
    for c in 0..n_cells {
        grid_coords(c, cells, dim, &mut cell);
        let origin: usize = (0..dim).map(|d| cell[d] * stride[d]).sum();
        for perm in perms {
            let mut simplex = [0usize; 4];
            simplex[0] = origin;
            let mut current = origin;
            for (i, &axis) in perm.iter().enumerate() {
                current += stride[axis];
                simplex[i + 1] = current;
            }
            // Odd axis orderings produce negatively oriented simplices.
            if permutation_is_odd(perm) {
                simplex.swap(dim - 1, dim);
            }
            simplices.extend_from_slice(&simplex[..=dim]);
        }
    }

    Ok(StructuredSimplicialMesh {
        dim,
        level,
        n_per_axis: n,
        h,
        vertices,
        simplices,
        is_boundary,
        interior_index,
        interior_vertices,
    })
}

fn grid_coords(index: usize, n: usize, dim: usize, out: &mut [usize; 3]) {
    let mut rest = index;
    for slot in out.iter_mut().take(dim) {
        *slot = rest % n;
        rest /= n;
    }
}

fn permutation_is_odd(perm: &[usize]) -> bool {
    let mut inversions = 0;
    for i in 0..perm.len() {
        for j in i + 1..perm.len() {
            if perm[i] > perm[j] {
                inversions += 1;
            }
        }
    }
    inversions % 2 == 1
}

/// Map from global vertex index to contiguous interior dof index.
pub fn interior_dofs(mesh: &StructuredSimplicialMesh) -> Vec<Option<usize>> {
    mesh.interior_index.clone()
}

impl StructuredSimplicialMesh {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn n_per_axis(&self) -> usize {
        self.n_per_axis
    }

    /// Mesh size `2^-(level+1)`.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn num_vertices(&self) -> usize {
        self.is_boundary.len()
    }

    pub fn num_simplices(&self) -> usize {
        self.simplices.len() / (self.dim + 1)
    }

    /// Number of interior degrees of freedom `N_h`.
    pub fn num_interior(&self) -> usize {
        self.interior_vertices.len()
    }

    pub fn vertex(&self, v: usize) -> &[f64] {
        &self.vertices[v * self.dim..(v + 1) * self.dim]
    }

    pub fn simplex(&self, t: usize) -> &[usize] {
        let k = self.dim + 1;
        &self.simplices[t * k..(t + 1) * k]
    }

    pub fn simplices(&self) -> impl ExactSizeIterator<Item = &[usize]> + '_ {
        self.simplices.chunks_exact(self.dim + 1)
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.is_boundary[v]
    }

    pub fn interior_index(&self, v: usize) -> Option<usize> {
        self.interior_index[v]
    }

    /// Global vertex index of every interior dof, in dof order.
    pub fn interior_vertices(&self) -> &[usize] {
        &self.interior_vertices
    }

    /// Signed volume of simplex `t`.
    pub fn signed_volume(&self, t: usize) -> f64 {
        let s = self.simplex(t);
        let x0 = self.vertex(s[0]);
        let mut jac = [[0.0; 3]; 3];
        for (col, &v) in s[1..].iter().enumerate() {
            let x = self.vertex(v);
            for row in 0..self.dim {
                jac[row][col] = x[row] - x0[row];
            }
        }
        match self.dim {
            2 => 0.5 * (jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0]),
            _ => det3(&jac) / 6.0,
        }
    }

    /// Nodal interpolant of `f` on the interior dofs.
    pub fn interpolate<F: Fn(&[f64]) -> f64>(&self, f: F) -> Vec<f64> {
        self.interior_vertices.iter().map(|&v| f(self.vertex(v))).collect()
    }

    /// Evaluates the P1 function with interior coefficients `coeffs` (zero on
    /// the boundary) at an arbitrary point of the closed unit cube.
    pub fn evaluate(&self, coeffs: &[f64], point: &[f64]) -> f64 {
        let cells = self.n_per_axis - 1;
        let mut origin = [0usize; 3];
        let mut local = [(0.0f64, 0usize); 3];
        for d in 0..self.dim {
            let s = point[d] / self.h;
            let c = (s.floor() as usize).min(cells - 1);
            origin[d] = c;
            local[d] = (s - c as f64, d);
        }
        // Sort local coordinates descending: that ordering picks the Kuhn
        // simplex, and consecutive differences are the barycentric weights.
        let local = &mut local[..self.dim];
        local.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut stride = [1usize; 3];
        for d in 1..self.dim {
            stride[d] = stride[d - 1] * self.n_per_axis;
        }
        let mut vertex: usize = (0..self.dim).map(|d| origin[d] * stride[d]).sum();
        let nodal = |v: usize| self.interior_index[v].map_or(0.0, |i| coeffs[i]);
        let mut value = (1.0 - local[0].0) * nodal(vertex);
        for i in 0..self.dim {
            vertex += stride[local[i].1];
            let next = if i + 1 < self.dim { local[i + 1].0 } else { 0.0 };
            value += (local[i].0 - next) * nodal(vertex);
        }
        value
    }

    /// Plain-text dump: one `v x y [z]` line per vertex, then one
    /// `s i j k [l]` line per simplex.
    pub fn write_dump<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for v in 0..self.num_vertices() {
            write!(out, "v")?;
            for x in self.vertex(v) {
                write!(out, " {x}")?;
            }
            writeln!(out)?;
        }
        for s in self.simplices() {
            write!(out, "s")?;
            for i in s {
                write!(out, " {i}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Nested meshes for levels `1..=max_level` with interior-dof prolongations.
#[derive(Clone, Debug)]
pub struct MeshHierarchy {
    meshes: Vec<StructuredSimplicialMesh>,
    prolongations: Vec<CsrMatrix>,
}

pub fn build_hierarchy(dim: usize, max_level: usize) -> Result<MeshHierarchy> {
    if max_level < 1 {
        return Err(Error::InvalidLevel(max_level));
    }
    let meshes = (1..=max_level)
        .map(|l| build_mesh(dim, l))
        .collect::<Result<Vec<_>>>()?;
    let prolongations = meshes.windows(2).map(|pair| prolongation(&pair[0], &pair[1])).collect();
    Ok(MeshHierarchy { meshes, prolongations })
}

impl MeshHierarchy {
    pub fn dim(&self) -> usize {
        self.meshes[0].dim()
    }

    pub fn max_level(&self) -> usize {
        self.meshes.len()
    }

    pub fn meshes(&self) -> &[StructuredSimplicialMesh] {
        &self.meshes
    }

    /// Mesh at refinement level `level` (1-based).
    pub fn mesh(&self, level: usize) -> &StructuredSimplicialMesh {
        &self.meshes[level - 1]
    }

    /// Prolongations ordered from coarsest pair upwards; entry `i` maps level
    /// `i+1` to level `i+2`.
    pub fn prolongations(&self) -> &[CsrMatrix] {
        &self.prolongations
    }
}

/// Canonical P1 interpolation from `coarse` to the once-refined `fine` mesh,
/// restricted to interior dofs on both sides.
fn prolongation(coarse: &StructuredSimplicialMesh, fine: &StructuredSimplicialMesh) -> CsrMatrix {
    let dim = fine.dim;
    let nf = fine.n_per_axis;
    let nc = coarse.n_per_axis;
    let mut row_offsets = Vec::with_capacity(fine.num_interior() + 1);
    let mut col_indices = Vec::new();
    let mut values = Vec::new();
    row_offsets.push(0);
    let mut grid = [0usize; 3];
    for &v in fine.interior_vertices() {
        grid_coords(v, nf, dim, &mut grid);
        let mut base = 0;
        let mut offset = 0;
        let mut stride = 1;
        for &g in &grid[..dim] {
            base += (g / 2) * stride;
            offset += (g % 2) * stride;
            stride *= nc;
        }
        if offset == 0 {
            let c = coarse.interior_index[base].expect("coincident vertex must be interior");
            col_indices.push(c);
            values.push(1.0);
        } else {
            for end in [base, base + offset] {
                if let Some(c) = coarse.interior_index[end] {
                    col_indices.push(c);
                    values.push(0.5);
                }
            }
        }
        row_offsets.push(col_indices.len());
    }
    CsrMatrix::from_parts(
        fine.num_interior(),
        coarse.num_interior(),
        row_offsets,
        col_indices,
        values,
    )
    .expect("prolongation pattern is sorted by construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_level_one_counts() {
        let mesh = build_mesh(3, 1).unwrap();
        assert_eq!(mesh.num_vertices(), 125);
        assert_eq!(mesh.num_simplices(), 384);
        assert_eq!(mesh.h(), 0.25);
        assert_eq!(mesh.num_interior(), 27);
    }

    #[test]
    fn cube_level_two_counts() {
        let mesh = build_mesh(3, 2).unwrap();
        assert_eq!(mesh.num_vertices(), 729);
        assert_eq!(mesh.h(), 0.125);
        assert_eq!(mesh.num_interior(), 343);
    }

    #[test]
    fn square_level_one() {
        let mesh = build_mesh(2, 1).unwrap();
        assert_eq!(mesh.num_vertices(), 25);
        assert_eq!(mesh.num_simplices(), 32);
        let area: f64 = (0..32).map(|t| mesh.signed_volume(t)).sum();
        assert!((area - 1.0).abs() < 1e-14);
    }

    #[test]
    fn vertex_counts_follow_level_table() {
        // Only levels 1-4 are cheap enough to build in a unit test.
        for (level, expected) in [(1, 125), (2, 729), (3, 4913), (4, 35937)] {
            let mesh = build_mesh(3, level).unwrap();
            assert_eq!(mesh.num_vertices(), expected);
            assert_eq!(mesh.num_simplices(), 6 * (1usize << (level + 1)).pow(3));
        }
    }

    #[test]
    fn volumes_positive_and_partition_unity() {
        for dim in [2, 3] {
            for level in 1..=3 {
                let mesh = build_mesh(dim, level).unwrap();
                let mut total = 0.0;
                for t in 0..mesh.num_simplices() {
                    let vol = mesh.signed_volume(t);
                    assert!(vol > 0.0);
                    total += vol;
                }
                assert!((total - 1.0).abs() < 1e-12, "dim {dim} level {level}: {total}");
            }
        }
    }

    #[test]
    fn boundary_flags() {
        let mesh = build_mesh(3, 1).unwrap();
        assert!(mesh.is_boundary(0));
        assert_eq!(mesh.interior_index(0), None);
        let center = 2 + 5 * (2 + 5 * 2);
        assert!(!mesh.is_boundary(center));
        assert!(mesh.interior_index(center).is_some());
        let interior = (0..125).filter(|&v| !mesh.is_boundary(v)).count();
        assert_eq!(interior, 27);
    }

    #[test]
    fn interior_order_is_lexicographic_zyx() {
        let mesh = build_mesh(3, 1).unwrap();
        let coords: Vec<_> = mesh
            .interior_vertices()
            .iter()
            .map(|&v| {
                let x = mesh.vertex(v);
                (x[2], x[1], x[0])
            })
            .collect();
        assert!(coords.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(build_mesh(4, 1), Err(Error::InvalidDimension(4))));
        assert!(matches!(build_mesh(1, 1), Err(Error::InvalidDimension(1))));
        assert!(matches!(build_mesh(3, 0), Err(Error::InvalidLevel(0))));
        assert!(build_hierarchy(3, 0).is_err());
    }

    #[test]
    fn hierarchy_shapes() {
        let single = build_hierarchy(3, 1).unwrap();
        assert_eq!(single.meshes().len(), 1);
        assert!(single.prolongations().is_empty());

        let hier = build_hierarchy(3, 2).unwrap();
        assert_eq!(hier.meshes().len(), 2);
        let p = &hier.prolongations()[0];
        assert_eq!((p.n_rows(), p.n_cols()), (343, 27));
    }

    #[test]
    fn prolongation_row_structure() {
        let hier = build_hierarchy(3, 2).unwrap();
        let p = &hier.prolongations()[0];
        let fine = hier.mesh(2);
        let n = fine.n_per_axis();
        for (row, &v) in fine.interior_vertices().iter().enumerate() {
            let (cols, vals) = p.row(row);
            let mut g = [0usize; 3];
            grid_coords(v, n, 3, &mut g);
            if g.iter().all(|c| c % 2 == 0) {
                assert_eq!(vals, &[1.0]);
            } else {
                assert!(cols.len() <= 2);
                assert!(vals.iter().all(|&x| x == 0.5));
            }
        }
    }

    #[test]
    fn prolongation_reproduces_sine_interpolant_at_coarse_points() {
        let hier = build_hierarchy(3, 3).unwrap();
        let f = |x: &[f64]| x.iter().map(|&t| (std::f64::consts::PI * t).sin()).product();
        for l in 1..3 {
            let coarse = hier.mesh(l);
            let fine = hier.mesh(l + 1);
            let vc = coarse.interpolate(f);
            let vf = hier.prolongations()[l - 1].mul_vec(&vc);
            for (row, &v) in fine.interior_vertices().iter().enumerate() {
                let x = fine.vertex(v);
                let on_coarse = x
                    .iter()
                    .all(|&t| ((t / coarse.h()).round() * coarse.h() - t).abs() < 1e-15);
                if on_coarse {
                    assert!((vf[row] - f(x)).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn evaluate_reproduces_nodal_values() {
        let mesh = build_mesh(3, 2).unwrap();
        let coeffs: Vec<f64> = (0..mesh.num_interior()).map(|i| (i as f64).sin()).collect();
        for (i, &v) in mesh.interior_vertices().iter().enumerate() {
            assert!((mesh.evaluate(&coeffs, mesh.vertex(v)) - coeffs[i]).abs() < 1e-14);
        }
        assert_eq!(mesh.evaluate(&coeffs, &[0.0, 0.3, 0.7]), 0.0);
    }

    #[test]
    fn dump_has_one_line_per_entity() {
        let mesh = build_mesh(2, 1).unwrap();
        let mut buf = Vec::new();
        mesh.write_dump(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), 25);
        assert_eq!(text.lines().filter(|l| l.starts_with("s ")).count(), 32);
    }
}
