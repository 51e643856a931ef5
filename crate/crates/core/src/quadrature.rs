//! Symmetric quadrature rules on simplices in barycentric form.
//!
//! Weights sum to one; multiply by the simplex volume to integrate.

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct SimplexRule {
    /// Barycentric coordinates of each point (`dim + 1` entries used).
    pub points: Vec<[f64; 4]>,
    pub weights: Vec<f64>,
}

impl SimplexRule {
    /// Rule for `dim`-simplices exact for polynomials of total degree
    /// `order` (order 4 uses a degree-5 rule on tetrahedra).
    pub fn new(dim: usize, order: usize) -> Result<Self> {
        match (dim, order) {
            (2, 1) | (3, 1) => Ok(centroid(dim)),
            (2, 2) => Ok(triangle_degree2()),
            (3, 2) => Ok(tet_degree2()),
            (2, 4) => Ok(triangle_degree4()),
            (3, 4) => Ok(tet_degree5()),
            (2, _) | (3, _) => Err(Error::QuadratureOrder(order)),
            _ => Err(Error::InvalidDimension(dim)),
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

fn centroid(dim: usize) -> SimplexRule {
    let c = 1.0 / (dim + 1) as f64;
    let mut p = [0.0; 4];
    p[..=dim].fill(c);
    SimplexRule {
        points: vec![p],
        weights: vec![1.0],
    }
}

/// All distinct permutations of `base` over its first `n` slots.
fn orbit(base: [f64; 4], n: usize) -> Vec<[f64; 4]> {
    let mut out: Vec<[f64; 4]> = Vec::new();
    let mut idx: Vec<usize> = (0..n).collect();
    permute(&mut idx, 0, &mut |perm| {
        let mut p = [0.0; 4];
        for (slot, &k) in perm.iter().enumerate() {
            p[slot] = base[k];
        }
        if !out.contains(&p) {
            out.push(p);
        }
    });
    out
}

fn permute(idx: &mut Vec<usize>, start: usize, visit: &mut dyn FnMut(&[usize])) {
    if start == idx.len() {
        visit(idx);
        return;
    }
    for i in start..idx.len() {
        idx.swap(start, i);
        permute(idx, start + 1, visit);
        idx.swap(start, i);
    }
}

fn from_orbits(n: usize, orbits: &[([f64; 4], f64)]) -> SimplexRule {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for &(base, w) in orbits {
        for p in orbit(base, n) {
            points.push(p);
            weights.push(w);
        }
    }
    SimplexRule { points, weights }
}

fn triangle_degree2() -> SimplexRule {
    let (a, b) = (2.0 / 3.0, 1.0 / 6.0);
    from_orbits(3, &[([a, b, b, 0.0], 1.0 / 3.0)])
}

fn triangle_degree4() -> SimplexRule {
    let a = 0.445_948_490_915_964_9;
    let b = 0.091_576_213_509_770_74;
    from_orbits(
        3,
        &[
            ([a, a, 1.0 - 2.0 * a, 0.0], 0.223_381_589_678_011_5),
            ([b, b, 1.0 - 2.0 * b, 0.0], 0.109_951_743_655_321_9),
        ],
    )
}

fn tet_degree2() -> SimplexRule {
    let s5 = 5.0f64.sqrt();
    let a = (5.0 + 3.0 * s5) / 20.0;
    let b = (5.0 - s5) / 20.0;
    from_orbits(4, &[([a, b, b, b], 0.25)])
}

fn tet_degree5() -> SimplexRule {
    let a1 = 0.310_885_919_263_300_6;
    let a2 = 0.092_735_250_310_891_2;
    let a3 = 0.045_503_704_125_649_6;
    from_orbits(
        4,
        &[
            ([a1, a1, a1, 1.0 - 3.0 * a1], 0.112_687_925_718_015_9),
            ([a2, a2, a2, 1.0 - 3.0 * a2], 0.073_493_043_116_361_9),
            ([a3, a3, 0.5 - a3, 0.5 - a3], 0.042_546_020_777_081_5),
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    /// Exact average of a barycentric monomial over a `dim`-simplex:
    /// `dim! * prod(a_i!) / (dim + sum a_i)!`.
    fn exact_average(dim: usize, exps: &[u32]) -> f64 {
        let total: u32 = exps.iter().sum();
        factorial(dim as u32) * exps.iter().map(|&e| factorial(e)).product::<f64>() / factorial(dim as u32 + total)
    }

    fn check_exactness(dim: usize, order: usize, degree: u32) {
        let rule = SimplexRule::new(dim, order).unwrap();
        let wsum: f64 = rule.weights.iter().sum();
        assert!((wsum - 1.0).abs() < 1e-14);
        let n = dim + 1;
        let mut exps = vec![0u32; n];
        loop {
            let total: u32 = exps.iter().sum();
            if total <= degree {
                let q: f64 = rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(p, w)| w * (0..n).map(|i| p[i].powi(exps[i] as i32)).product::<f64>())
                    .sum();
                let exact = exact_average(dim, &exps);
                assert!(
                    (q - exact).abs() < 1e-14,
                    "dim {dim} order {order} exps {exps:?}: {q} vs {exact}"
                );
            }
            // next multi-index in [0, degree]^n
            let mut i = 0;
            loop {
                if i == n {
                    return;
                }
                exps[i] += 1;
                if exps[i] <= degree {
                    break;
                }
                exps[i] = 0;
                i += 1;
            }
        }
    }

    #[test]
    fn triangle_rules_are_exact() {
        check_exactness(2, 1, 1);
        check_exactness(2, 2, 2);
        check_exactness(2, 4, 4);
    }

    #[test]
    fn tetrahedron_rules_are_exact() {
        check_exactness(3, 1, 1);
        check_exactness(3, 2, 2);
        check_exactness(3, 4, 5);
    }

    #[test]
    fn point_counts() {
        assert_eq!(SimplexRule::new(3, 4).unwrap().len(), 14);
        assert_eq!(SimplexRule::new(3, 2).unwrap().len(), 4);
        assert_eq!(SimplexRule::new(2, 4).unwrap().len(), 6);
    }

    #[test]
    fn unsupported_orders() {
        assert!(matches!(SimplexRule::new(3, 3), Err(Error::QuadratureOrder(3))));
        assert!(matches!(SimplexRule::new(3, 0), Err(Error::QuadratureOrder(0))));
    }
}
