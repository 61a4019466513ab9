//! Closed-form 1D optimal transport.
//!
//! Both sides are sorted, weights are accumulated into prefix sums, and mass
//! is assigned by intersecting the half-open prefix intervals
//! `(s_{i-1}, s_i]` and `(h_{j-1}, h_j]` in a single merge pass. The result
//! is the monotone coupling, which is optimal for squared-distance cost on
//! the line. `O(N log N)` from sorting.

use super::{check_weights, TransportPlan};
use crate::error::{Error, Result};
use nalgebra::DVector;

/// Solves 1D optimal transport between weighted point sets on the line,
/// returning the optimal plan (indexed by the points' original positions)
/// and the squared-distance cost.
pub fn ot_1d(
    x: &[f64],
    mu: &DVector<f64>,
    y: &[f64],
    nu: &DVector<f64>,
) -> Result<(TransportPlan, f64)> {
    if x.len() != mu.len() || y.len() != nu.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} points with {} weights vs {} points with {} weights",
            x.len(),
            mu.len(),
            y.len(),
            nu.len()
        )));
    }
    check_weights(mu, "source")?;
    check_weights(nu, "target")?;
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput("non-finite coordinate".into()));
    }

    let order_x = sorted_order(x);
    let order_y = sorted_order(y);
    let s = prefix_sums(&order_x, mu);
    let h = prefix_sums(&order_y, nu);

    let (lx, ly) = (x.len(), y.len());
    let mut entries = Vec::with_capacity(lx + ly - 1);
    let mut cost = 0.0f64;
    let (mut i, mut j) = (0usize, 0usize);
    while i < lx && j < ly {
        let hi = s[i + 1].min(h[j + 1]);
        let lo = s[i].max(h[j]);
        let mass = hi - lo;
        if mass > 0.0 {
            let (xi, yj) = (order_x[i], order_y[j]);
            entries.push((xi, yj, mass));
            let d = x[xi] - y[yj];
            cost += mass * d * d;
        }
        // Half-open interval convention: on exact prefix ties advance both.
        if s[i + 1] < h[j + 1] {
            i += 1;
        } else if h[j + 1] < s[i + 1] {
            j += 1;
        } else {
            i += 1;
            j += 1;
        }
    }
    let plan = TransportPlan::new(entries, mu.clone(), nu.clone())?;
    Ok((plan, cost))
}

/// Indices sorted by value; stable so equal values keep input order.
fn sorted_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    order
}

/// Prefix sums of the permuted weights, with the final entry pinned to
/// exactly one so accumulated rounding cannot leave unmatched tail mass.
fn prefix_sums(order: &[usize], w: &DVector<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(order.len() + 1);
    out.push(0.0);
    let mut acc = 0.0;
    for &idx in order {
        acc += w[idx];
        out.push(acc);
    }
    *out.last_mut().unwrap() = 1.0;
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn uniform(n: usize) -> DVector<f64> {
        DVector::from_element(n, 1.0 / n as f64)
    }

    #[test]
    fn equal_sizes_uniform_weights_give_sorted_identity() {
        let x = [3.0, 1.0, 2.0];
        let y = [10.0, 30.0, 20.0];
        let (plan, _) = ot_1d(&x, &uniform(3), &y, &uniform(3)).unwrap();
        // sorted x: 1,2,3 (indices 1,2,0); sorted y: 10,20,30 (indices 0,2,1)
        let mut entries = plan.entries().to_vec();
        entries.sort_unstable_by_key(|&(i, j, _)| (i, j));
        assert_eq!(entries.len(), 3);
        for &(i, j, v) in &entries {
            assert_relative_eq!(v, 1.0 / 3.0, epsilon = 1e-15);
            let rank_x = [2, 0, 1][i]; // rank of x[i] in sorted order
            let rank_y = [0, 2, 1][j];
            assert_eq!(rank_x, rank_y);
        }
    }

    #[test]
    fn identical_inputs_cost_zero() {
        let x = [0.5, -1.0, 2.0, 7.0];
        let mu = DVector::from_vec(vec![0.1, 0.2, 0.3, 0.4]);
        let (plan, cost) = ot_1d(&x, &mu, &x, &mu).unwrap();
        assert_eq!(cost, 0.0);
        for &(i, j, _) in plan.entries() {
            assert_eq!(i, j);
        }
    }

    #[test]
    fn two_by_two_case_from_lp_oracle() {
        // x=(0,1) mu=(.5,.5) vs y=(0,2) nu=(.25,.75):
        // sigma = [[.25,.25],[0,.5]], cost = .25*4 + .5*1 = 1.5
        let x = [0.0, 1.0];
        let y = [0.0, 2.0];
        let mu = DVector::from_vec(vec![0.5, 0.5]);
        let nu = DVector::from_vec(vec![0.25, 0.75]);
        let (plan, cost) = ot_1d(&x, &mu, &y, &nu).unwrap();
        assert_relative_eq!(cost, 1.5, epsilon = 1e-14);
        let d = plan.to_dense();
        assert_relative_eq!(d[(0, 0)], 0.25, epsilon = 1e-14);
        assert_relative_eq!(d[(0, 1)], 0.25, epsilon = 1e-14);
        assert_relative_eq!(d[(1, 0)], 0.0, epsilon = 1e-14);
        assert_relative_eq!(d[(1, 1)], 0.5, epsilon = 1e-14);
    }

    #[test]
    fn rejects_unnormalized_weights() {
        let x = [0.0, 1.0];
        let w = DVector::from_vec(vec![0.5, 0.6]);
        assert!(ot_1d(&x, &w, &x, &w).is_err());
    }

    #[test]
    fn plan_is_monotone_and_sparse() {
        let x = [0.3, -2.0, 5.0, 1.1, 0.0];
        let y = [4.0, 4.5, -3.0];
        let mu = DVector::from_vec(vec![0.1, 0.3, 0.2, 0.25, 0.15]);
        let nu = DVector::from_vec(vec![0.5, 0.2, 0.3]);
        let (plan, _) = ot_1d(&x, &mu, &y, &nu).unwrap();
        assert!(plan.nnz() <= x.len() + y.len() - 1);
        assert!(plan.is_monotone_under(&x, &y));
    }
}
