//! Cotangent finite-element discretization on triangulated shapes.

use super::{DiscreteLB, LBMethod, SparseSym};
use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use nalgebra::DVector;

/// Assembles the cotangent stiffness matrix and the lumped barycentric mass
/// matrix. Off-diagonal `S_ij = -(cot a_ij + cot b_ij)/2` over the triangles
/// sharing edge `(i,j)`; diagonals make rows sum to zero. `M_ii` is one third
/// of the incident triangle area, so `trace(M)` is the total surface area.
pub fn assemble_cotan(shape: &PointCloud) -> Result<DiscreteLB> {
    let tris = shape
        .triangles()
        .ok_or_else(|| Error::MissingConnectivity("cotan assembly needs triangles".into()))?;
    if tris.is_empty() {
        return Err(Error::MissingConnectivity("empty triangle list".into()));
    }
    let pts = shape.points();
    let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(tris.len() * 12);
    let mut mass = vec![0.0f64; shape.len()];
    for (s, t) in tris.iter().enumerate() {
        let area = crate::geometry::triangle_area(pts, t);
        if !(area > 0.0) {
            return Err(Error::DegenerateInput(format!(
                "triangle {s} has zero area"
            )));
        }
        for &v in t {
            mass[v] += area / 3.0;
        }
        // Corner angle at t[c] faces edge (t[a], t[b]).
        for c in 0..3 {
            let (i, j, k) = (t[(c + 1) % 3], t[(c + 2) % 3], t[c]);
            let u = pts.row(i) - pts.row(k);
            let v = pts.row(j) - pts.row(k);
            let cot = u.dot(&v) / (2.0 * area);
            let w = cot / 2.0;
            triplets.push((i, j, -w));
            triplets.push((j, i, -w));
            triplets.push((i, i, w));
            triplets.push((j, j, w));
        }
    }
    let stiffness = SparseSym::from_triplets(shape.len(), triplets);
    DiscreteLB::new(stiffness, DVector::from_vec(mass), LBMethod::CotanFem, 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_shape, ShapeKind};
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    #[test]
    fn rows_sum_to_zero() {
        let mesh = generate_shape(ShapeKind::BumpySphere, 162, 3).unwrap();
        let lb = assemble_cotan(&mesh).unwrap();
        let sums = lb.stiffness().row_sums();
        assert!(sums.iter().all(|&s| s.abs() < 1e-10));
        assert!(lb.stiffness().symmetry_defect() < 1e-12);
    }

    #[test]
    fn equilateral_pair_shared_edge_weight() {
        // Two unit-edge equilateral triangles sharing edge (0,1). Both angles
        // opposite to the edge are 60 degrees: S_01 = -(cot60 + cot60)/2.
        let h = 3.0f64.sqrt() / 2.0;
        let pts = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 1.0, 0.0, 0.5, h, 0.5, -h]);
        let mesh = crate::geometry::PointCloud::new(pts, Some(vec![[0, 1, 2], [0, 3, 1]]), "pair")
            .unwrap();
        let lb = assemble_cotan(&mesh).unwrap();
        let expect = -1.0 / 3.0f64.sqrt();
        assert_relative_eq!(lb.stiffness().get(0, 1), expect, epsilon = 1e-12);
        assert_relative_eq!(lb.stiffness().get(1, 0), expect, epsilon = 1e-12);
    }

    #[test]
    fn mass_trace_approximates_sphere_area() {
        let mesh = generate_shape(ShapeKind::Sphere, 642, 0).unwrap();
        let lb = assemble_cotan(&mesh).unwrap();
        let area: f64 = lb.mass_diag().iter().sum();
        let exact = 4.0 * std::f64::consts::PI;
        assert!((area - exact).abs() / exact < 0.02, "area {area} vs {exact}");
    }

    #[test]
    fn stiffness_is_positive_semidefinite() {
        use rand::Rng;
        let mesh = generate_shape(ShapeKind::BumpySphere, 162, 1).unwrap();
        let lb = assemble_cotan(&mesh).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        use rand::SeedableRng;
        for _ in 0..20 {
            let x = nalgebra::DVector::from_fn(mesh.len(), |_, _| rng.gen_range(-1.0..1.0));
            let q = lb.stiffness().quadratic_form(&x);
            assert!(q >= -1e-10 * x.norm_squared(), "x^T S x = {q}");
        }
    }

    #[test]
    fn zero_area_triangle_is_rejected() {
        let pts = DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 1.0, 0.0, 2.0, 0.0]);
        let mesh = crate::geometry::PointCloud::new(pts, Some(vec![[0, 1, 2]]), "flat").unwrap();
        assert!(matches!(
            assemble_cotan(&mesh),
            Err(Error::DegenerateInput(_))
        ));
    }
}
