//! From plans to maps: the row-stochastic correspondence matrix
//! `diag(1/mu) sigma` and the interpolative image `p_i -> (1/mu_i) sum_j
//! sigma_ij q_j`.

use super::TransportPlan;
use crate::error::{Error, Result};
use crate::geometry::Correspondence;
use nalgebra::DMatrix;

/// Normalizes a plan into a row-stochastic correspondence; row `i` of the
/// result reads "source point `i` maps to each target with this probability".
/// The argmax assignment breaks ties by lowest index.
pub fn plan_to_map(plan: &TransportPlan) -> Result<Correspondence> {
    let mut pi = DMatrix::zeros(plan.source_size(), plan.target_size());
    for &(i, j, v) in plan.entries() {
        pi[(i, j)] += v / plan.row_marginal()[i];
    }
    Correspondence::from_matrix(pi)
}

/// Pushes target coordinates back through the plan: row `i` of the output is
/// the `sigma`-weighted barycenter of the targets that receive mass from
/// source point `i`. Works in embedding or ambient coordinates.
pub fn interpolated_image(plan: &TransportPlan, targets: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if targets.nrows() != plan.target_size() {
        return Err(Error::DimensionMismatch(format!(
            "plan has {} targets, coordinates have {} rows",
            plan.target_size(),
            targets.nrows()
        )));
    }
    let mut out = DMatrix::zeros(plan.source_size(), targets.ncols());
    for &(i, j, v) in plan.entries() {
        let w = v / plan.row_marginal()[i];
        for k in 0..targets.ncols() {
            out[(i, k)] += w * targets[(j, k)];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DVector;

    #[test]
    fn diagonal_plan_maps_identically() {
        let mu = DVector::from_vec(vec![0.25, 0.35, 0.4]);
        let plan = TransportPlan::diagonal(mu);
        let corr = plan_to_map(&plan).unwrap();
        assert_eq!(corr.assignment(), &[0, 1, 2]);
        assert_eq!(corr.matrix(), &DMatrix::identity(3, 3));
        let targets = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let img = interpolated_image(&plan, &targets).unwrap();
        assert_eq!(img, targets);
    }

    #[test]
    fn product_coupling_rows_equal_target_marginal() {
        let mu = DVector::from_vec(vec![0.5, 0.5]);
        let nu = DVector::from_vec(vec![0.2, 0.3, 0.5]);
        let plan = TransportPlan::product(mu, nu.clone());
        let corr = plan_to_map(&plan).unwrap();
        for i in 0..2 {
            for j in 0..3 {
                assert_relative_eq!(corr.matrix()[(i, j)], nu[j], epsilon = 1e-15);
            }
        }
        // Every interpolated row is the nu-barycenter of the targets.
        let targets = DMatrix::from_row_slice(3, 1, &[1.0, 10.0, 100.0]);
        let img = interpolated_image(&plan, &targets).unwrap();
        let bary = 0.2 * 1.0 + 0.3 * 10.0 + 0.5 * 100.0;
        for i in 0..2 {
            assert_relative_eq!(img[(i, 0)], bary, epsilon = 1e-12);
        }
    }

    #[test]
    fn interpolates_the_documented_two_by_two_case() {
        let mu = DVector::from_vec(vec![0.5, 0.5]);
        let nu = DVector::from_vec(vec![0.25, 0.75]);
        let plan = TransportPlan::new(
            vec![(0, 0, 0.25), (0, 1, 0.25), (1, 1, 0.5)],
            mu,
            nu,
        )
        .unwrap();
        let targets = DMatrix::from_row_slice(2, 1, &[0.0, 2.0]);
        let img = interpolated_image(&plan, &targets).unwrap();
        assert_relative_eq!(img[(0, 0)], 1.0, epsilon = 1e-14);
        assert_relative_eq!(img[(1, 0)], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let mu = DVector::from_vec(vec![1.0]);
        let plan = TransportPlan::diagonal(mu);
        let targets = DMatrix::zeros(3, 2);
        assert!(matches!(
            interpolated_image(&plan, &targets),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
