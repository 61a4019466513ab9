//! Gaussian-kernel graph Laplacian for point clouds without connectivity.
//!
//! This path trades accuracy for generality: it is a low-order approximation
//! of the Laplace-Beltrami operator, but needs nothing beyond coordinates.

use super::{DiscreteLB, LBMethod, SparseSym};
use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use nalgebra::DVector;

/// Assembles `S = D - W` with `w_ij = exp(-|u_i - u_j|^2 / (4 * bandwidth))`
/// over k-nearest-neighbor pairs symmetrized by union, and the diagonal mass
/// `M_ii = measure_i / bandwidth`. The `1/bandwidth` mass scale is a
/// pragmatic calibration; downstream embeddings only need the relative
/// spectral structure.
pub fn assemble_kernel(
    shape: &PointCloud,
    bandwidth: f64,
    neighbors: usize,
    intrinsic_dim: u32,
) -> Result<DiscreteLB> {
    if !(bandwidth > 0.0) {
        return Err(Error::DegenerateInput(format!(
            "bandwidth must be positive, got {bandwidth}"
        )));
    }
    if neighbors < 4 {
        return Err(Error::DegenerateInput(format!(
            "need at least 4 neighbors, got {neighbors}"
        )));
    }
    let len = shape.len();
    let k = neighbors.min(len.saturating_sub(1));
    let pts = shape.points();

    // Union-symmetrized kNN edge set. Brute force; desk scale.
    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(len * k);
    let mut dist_row: Vec<(f64, usize)> = Vec::with_capacity(len);
    for i in 0..len {
        dist_row.clear();
        for j in 0..len {
            if j == i {
                continue;
            }
            let d2 = (pts.row(i) - pts.row(j)).norm_squared();
            dist_row.push((d2, j));
        }
        dist_row
            .sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite distances"));
        for &(_, j) in dist_row.iter().take(k) {
            edges.push((i.min(j), i.max(j)));
        }
    }
    edges.sort_unstable();
    edges.dedup();

    let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(edges.len() * 4);
    for (i, j) in edges {
        let d2 = (pts.row(i) - pts.row(j)).norm_squared();
        let w = (-d2 / (4.0 * bandwidth)).exp();
        triplets.push((i, j, -w));
        triplets.push((j, i, -w));
        triplets.push((i, i, w));
        triplets.push((j, j, w));
    }
    let stiffness = SparseSym::from_triplets(len, triplets);
    let mass = DVector::from_fn(len, |i, _| shape.measure()[i] / bandwidth);
    DiscreteLB::new(stiffness, mass, LBMethod::KernelGraph, intrinsic_dim)
}

/// Deterministic default bandwidth: the median squared distance to the
/// `ceil(k/2)`-th nearest neighbor.
pub fn default_bandwidth(shape: &PointCloud, neighbors: usize) -> f64 {
    let len = shape.len();
    let k = neighbors.clamp(1, len.saturating_sub(1));
    let mid = k.div_ceil(2);
    let pts = shape.points();
    let mut per_point: Vec<f64> = Vec::with_capacity(len);
    let mut dist_row: Vec<f64> = Vec::with_capacity(len);
    for i in 0..len {
        dist_row.clear();
        for j in 0..len {
            if j != i {
                dist_row.push((pts.row(i) - pts.row(j)).norm_squared());
            }
        }
        dist_row.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite distances"));
        per_point.push(dist_row[mid - 1]);
    }
    per_point.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite"));
    per_point[per_point.len() / 2]
}
