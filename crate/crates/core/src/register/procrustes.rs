//! Closed-form orthogonal alignment at a fixed coupling, and the full
//! registration energy.

use super::types::OrthogonalMatrix;
use crate::eigenmap::Embedding;
use crate::error::{Error, Result};
use crate::transport::TransportPlan;
use nalgebra::DMatrix;

pub(crate) fn check_pair(p: &Embedding, q: &Embedding) -> Result<()> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch(format!(
            "embeddings have dimensions {} and {}",
            p.dim(),
            q.dim()
        )));
    }
    Ok(())
}

pub(crate) fn check_plan(p: &Embedding, q: &Embedding, plan: &TransportPlan) -> Result<()> {
    if plan.source_size() != p.len() || plan.target_size() != q.len() {
        return Err(Error::DimensionMismatch(format!(
            "plan is {}x{} for embeddings with {} and {} points",
            plan.source_size(),
            plan.target_size(),
            p.len(),
            q.len()
        )));
    }
    let tol = crate::transport::MARGINAL_TOL;
    for i in 0..p.len() {
        if (plan.row_marginal()[i] - p.measure()[i]).abs() > tol {
            return Err(Error::DimensionMismatch(format!(
                "plan row marginal {i} disagrees with the source measure"
            )));
        }
    }
    for j in 0..q.len() {
        if (plan.col_marginal()[j] - q.measure()[j]).abs() > tol {
            return Err(Error::DimensionMismatch(format!(
                "plan column marginal {j} disagrees with the target measure"
            )));
        }
    }
    Ok(())
}

/// The minimizer of `sum_ij sigma_ij |p_i R - q_j|^2` over `O(n)`:
/// `R = U V^T` from the SVD `P^T sigma Q = U D V^T`.
///
/// With zero singular values any completion of the SVD basis is optimal; the
/// returned matrix is the one the decomposition happens to produce, which is
/// deterministic for fixed input bits but not otherwise distinguished.
pub fn procrustes(
    p: &Embedding,
    q: &Embedding,
    plan: &TransportPlan,
) -> Result<OrthogonalMatrix> {
    check_pair(p, q)?;
    check_plan(p, q, plan)?;
    let n = p.dim();
    // C = P^T (sigma Q), accumulated through the sparse plan.
    let mut sq = DMatrix::zeros(p.len(), n);
    for &(i, j, w) in plan.entries() {
        for k in 0..n {
            sq[(i, k)] += w * q.coords()[(j, k)];
        }
    }
    let c = p.coords().transpose() * sq;
    let svd = c.svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V^T");
    OrthogonalMatrix::try_new(u * vt)
}

/// Full registration energy `sum_ij sigma_ij |p_i R - q_j|^2`.
pub fn energy(
    p: &Embedding,
    q: &Embedding,
    r: &OrthogonalMatrix,
    plan: &TransportPlan,
) -> Result<f64> {
    check_pair(p, q)?;
    check_plan(p, q, plan)?;
    if r.dim() != p.dim() {
        return Err(Error::DimensionMismatch(format!(
            "rotation is {}x{} for {}-dim embeddings",
            r.dim(),
            r.dim(),
            p.dim()
        )));
    }
    let pr = p.coords() * r.matrix();
    let total = plan
        .entries()
        .iter()
        .map(|&(i, j, w)| {
            let diff = pr.row(i) - q.coords().row(j);
            w * diff.norm_squared()
        })
        .sum();
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigenmap::Embedding;
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, DVector};
    use rand::SeedableRng;

    fn embedding(rows: &[f64], l: usize, n: usize) -> Embedding {
        let coords = DMatrix::from_row_slice(l, n, rows);
        let measure = DVector::from_element(l, 1.0 / l as f64);
        Embedding::from_parts(coords, measure, 2, "test").unwrap()
    }

    #[test]
    fn self_alignment_is_identity() {
        let p = embedding(&[1.0, 0.0, 0.0, 1.0, 2.0, -1.0], 3, 2);
        let plan = TransportPlan::diagonal(p.measure().clone());
        let r = procrustes(&p, &p, &plan).unwrap();
        assert!((r.matrix() - DMatrix::<f64>::identity(2, 2)).norm() < 1e-10);
        assert!(energy(&p, &p, &r, &plan).unwrap() < 1e-20);
    }

    #[test]
    fn quarter_turn_is_recovered_exactly() {
        let p = embedding(&[1.0, 0.0, 0.0, 1.0], 2, 2);
        let q = embedding(&[0.0, 1.0, -1.0, 0.0], 2, 2);
        let plan = TransportPlan::diagonal(p.measure().clone());
        let r = procrustes(&p, &q, &plan).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert!((r.matrix() - expect).norm() < 1e-12);
        assert!(energy(&p, &q, &r, &plan).unwrap() < 1e-24);
    }

    #[test]
    fn beats_random_rotations() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        use rand::Rng;
        let l = 12;
        let n = 4;
        let rows: Vec<f64> = (0..l * n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let qrows: Vec<f64> = (0..l * n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let p = embedding(&rows, l, n);
        let q = embedding(&qrows, l, n);
        let plan = TransportPlan::diagonal(p.measure().clone());
        let best = procrustes(&p, &q, &plan).unwrap();
        let e_best = energy(&p, &q, &best, &plan).unwrap();
        for _ in 0..100 {
            let r = OrthogonalMatrix::random(n, &mut rng);
            let e = energy(&p, &q, &r, &plan).unwrap();
            assert!(e_best <= e + 1e-12, "procrustes {e_best} beaten by {e}");
        }
    }

    #[test]
    fn marginal_mismatch_is_rejected() {
        let p = embedding(&[1.0, 0.0, 0.0, 1.0], 2, 2);
        let other = DVector::from_vec(vec![0.9, 0.1]);
        let plan = TransportPlan::diagonal(other);
        assert!(matches!(
            procrustes(&p, &p, &plan),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn scalar_reflection_case() {
        // 1-dim embeddings {2} and {-2}: O(1) = {-1, +1}, optimum is -1.
        let p = embedding(&[2.0], 1, 1);
        let q = embedding(&[-2.0], 1, 1);
        let plan = TransportPlan::diagonal(p.measure().clone());
        let r = procrustes(&p, &q, &plan).unwrap();
        assert_relative_eq!(r.matrix()[(0, 0)], -1.0, epsilon = 1e-15);
    }
}
