use rayon::prelude::*;

use super::target::Target;
use crate::error::{Error, Result};
use crate::mesh::StructuredSimplicialMesh;
use crate::quadrature::SimplexRule;

const SUM_CHUNK: usize = 1 << 12;

/// `|| u_h - target ||_{L2}` for interior coefficients `u` (zero boundary
/// values) by per-element quadrature of the given order.
///
/// Element contributions are summed in fixed chunks, so the result does not
/// depend on the number of threads.
pub fn l2_error(mesh: &StructuredSimplicialMesh, u: &[f64], target: Target, quad_order: usize) -> Result<f64> {
    l2_error_fn(mesh, u, |x| target.evaluate(x), quad_order)
}

pub fn l2_error_fn<F>(mesh: &StructuredSimplicialMesh, u: &[f64], target: F, quad_order: usize) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if u.len() != mesh.num_interior() {
        return Err(Error::DimensionMismatch {
            expected: mesh.num_interior(),
            found: u.len(),
        });
    }
    let dim = mesh.dim();
    let rule = SimplexRule::new(dim, quad_order)?;
    let element = |t: usize| {
        let s = mesh.simplex(t);
        let vals: Vec<f64> = s
            .iter()
            .map(|&v| mesh.interior_index(v).map_or(0.0, |i| u[i]))
            .collect();
        let mut acc = 0.0;
        let mut x = [0.0; 3];
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            x.fill(0.0);
            let mut uh = 0.0;
            for (i, &v) in s.iter().enumerate() {
                uh += p[i] * vals[i];
                for (xd, vd) in x.iter_mut().zip(mesh.vertex(v)) {
                    *xd += p[i] * vd;
                }
            }
            let d = uh - target(&x[..dim]);
            acc += w * d * d;
        }
        acc * mesh.signed_volume(t)
    };
    let n = mesh.num_simplices();
    let partial: Vec<f64> = (0..n.div_ceil(SUM_CHUNK))
        .into_par_iter()
        .map(|c| (c * SUM_CHUNK..((c + 1) * SUM_CHUNK).min(n)).map(element).sum())
        .collect();
    Ok(partial.iter().sum::<f64>().sqrt())
}

/// Experimental order of convergence `log2(e_coarse / e_fine)`.
pub fn eoc(e_coarse: f64, e_fine: f64) -> Result<f64> {
    for e in [e_coarse, e_fine] {
        if !(e > 0.0) || !e.is_finite() {
            return Err(Error::NonPositive {
                what: "error for eoc",
                index: 0,
                value: e,
            });
        }
    }
    Ok((e_coarse / e_fine).log2())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_mesh;
    use proptest::prelude::*;

    #[test]
    fn zero_coefficients_give_target_norm() {
        let mesh = build_mesh(3, 2).unwrap();
        let zero = vec![0.0; mesh.num_interior()];
        let e1 = l2_error(&mesh, &zero, Target::Smooth, 4).unwrap();
        // the quadrature integrates sin^2 only approximately on coarse meshes
        assert!((e1 - 0.125f64.sqrt()).abs() < 1e-3, "{e1}");
        let e3 = l2_error(&mesh, &zero, Target::CubeIndicator, 4).unwrap();
        assert!((e3 - 0.125f64.sqrt()).abs() < 1e-14, "{e3}");
    }

    #[test]
    fn smooth_target_norm_converges_with_refinement() {
        let mesh = build_mesh(3, 4).unwrap();
        let zero = vec![0.0; mesh.num_interior()];
        let e = l2_error(&mesh, &zero, Target::Smooth, 4).unwrap();
        assert!((e - 0.353_553_390_593_273_8).abs() < 1e-7, "{e}");
    }

    #[test]
    fn interpolation_error_is_second_order() {
        let e: Vec<f64> = (2..=3)
            .map(|level| {
                let mesh = build_mesh(3, level).unwrap();
                let u = mesh.interpolate(|x| Target::Smooth.evaluate(x));
                l2_error(&mesh, &u, Target::Smooth, 4).unwrap()
            })
            .collect();
        assert!(e[1] < e[0]);
        let rate = eoc(e[0], e[1]).unwrap();
        assert!((1.8..2.2).contains(&rate), "{rate}");
    }

    #[test]
    fn exact_for_discrete_functions() {
        let mesh = build_mesh(2, 2).unwrap();
        let u = mesh.interpolate(|x| Target::Pyramid.evaluate(x));
        let e = l2_error_fn(&mesh, &u, |x| mesh.evaluate(&u, x), 4).unwrap();
        assert!(e < 1e-14);
    }

    #[test]
    fn eoc_examples() {
        let r = eoc(3.04904e-1, 7.14457e-2).unwrap();
        assert!((r - 2.09).abs() < 5e-3);
        assert_eq!(eoc(0.3, 0.3).unwrap(), 0.0);
        assert!((eoc(4.0 * 0.1, 0.1).unwrap() - 2.0).abs() < 1e-15);
        assert!(eoc(0.0, 1.0).is_err());
        assert!(eoc(1.0, -1.0).is_err());
    }

    proptest! {
        #[test]
        fn eoc_is_antisymmetric(a in 1e-12f64..1e3, b in 1e-12f64..1e3) {
            let ab = eoc(a, b).unwrap();
            let ba = eoc(b, a).unwrap();
            prop_assert!((ab + ba).abs() <= 1e-12 * ab.abs().max(1.0));
        }
    }
}
