//! Shape ingestion, synthetic shape generation, probability measures and
//! the connectivity-transfer quality test.

mod generate;
mod io;
mod transfer;

pub use generate::{euler_characteristic, generate_shape, ShapeKind};
pub use io::{load_shape, write_ply, write_xyz, ShapeFormat};
pub use transfer::{transfer_connectivity, TransferOutcome};

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use std::collections::HashMap;

/// Tolerance for "measure sums to one" checks.
pub const MEASURE_SUM_TOL: f64 = 1e-12;

/// A sampled shape: point coordinates, optional triangle connectivity and a
/// probability measure over the samples.
///
/// Invariants enforced at construction:
/// - measure entries are strictly positive and sum to 1 within 1e-12,
/// - triangle indices are in range and no triangle repeats a vertex,
/// - no two points are identical.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: DMatrix<f64>,
    triangles: Option<Vec<[usize; 3]>>,
    measure: DVector<f64>,
    name: String,
}

impl PointCloud {
    /// Builds a cloud with the uniform measure `1/len`.
    pub fn new(
        points: DMatrix<f64>,
        triangles: Option<Vec<[usize; 3]>>,
        name: impl Into<String>,
    ) -> Result<Self> {
        let len = points.nrows();
        if len == 0 {
            return Err(Error::DegenerateInput("point cloud is empty".into()));
        }
        let uniform = DVector::from_element(len, 1.0 / len as f64);
        Self::with_measure(points, triangles, uniform, name)
    }

    /// Builds a cloud with an explicit measure.
    pub fn with_measure(
        points: DMatrix<f64>,
        triangles: Option<Vec<[usize; 3]>>,
        measure: DVector<f64>,
        name: impl Into<String>,
    ) -> Result<Self> {
        let len = points.nrows();
        if len == 0 {
            return Err(Error::DegenerateInput("point cloud is empty".into()));
        }
        for v in points.iter() {
            if !v.is_finite() {
                return Err(Error::Parse("non-finite coordinate".into()));
            }
        }
        if measure.len() != len {
            return Err(Error::DimensionMismatch(format!(
                "measure has {} entries for {} points",
                measure.len(),
                len
            )));
        }
        if measure.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::DegenerateInput(
                "measure entries must be strictly positive".into(),
            ));
        }
        let total: f64 = measure.iter().sum();
        if (total - 1.0).abs() > MEASURE_SUM_TOL {
            return Err(Error::DegenerateInput(format!(
                "measure sums to {total:.17}, expected 1"
            )));
        }
        if let Some(tris) = &triangles {
            validate_triangles(tris, len)?;
        }
        check_distinct_points(&points)?;
        Ok(Self {
            points,
            triangles,
            measure,
            name: name.into(),
        })
    }

    /// Number of points.
    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    /// Ambient dimension of the coordinates.
    pub fn ambient_dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> &DMatrix<f64> {
        &self.points
    }

    pub fn triangles(&self) -> Option<&[[usize; 3]]> {
        self.triangles.as_deref()
    }

    pub fn measure(&self) -> &DVector<f64> {
        &self.measure
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Copy of this cloud carrying a different measure.
    pub fn replace_measure(&self, measure: DVector<f64>) -> Result<Self> {
        Self::with_measure(
            self.points.clone(),
            self.triangles.clone(),
            measure,
            self.name.clone(),
        )
    }

    /// Copy with vertices re-indexed by `perm`: new point `perm[i]` is old
    /// point `i`. Triangles and measure follow. The ground-truth permutation
    /// fixtures in the registration tests are built with this.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let len = self.len();
        if perm.len() != len {
            return Err(Error::DimensionMismatch(format!(
                "permutation has {} entries for {} points",
                perm.len(),
                len
            )));
        }
        let mut seen = vec![false; len];
        for &p in perm {
            if p >= len || seen[p] {
                return Err(Error::DegenerateInput("not a permutation".into()));
            }
            seen[p] = true;
        }
        let mut points = DMatrix::zeros(len, self.ambient_dim());
        let mut measure = DVector::zeros(len);
        for i in 0..len {
            points.set_row(perm[i], &self.points.row(i));
            measure[perm[i]] = self.measure[i];
        }
        let triangles = self
            .triangles
            .as_ref()
            .map(|tris| tris.iter().map(|t| t.map(|v| perm[v])).collect());
        Self::with_measure(points, triangles, measure, format!("{}-perm", self.name))
    }

    /// Total unique (undirected) edge length of the triangulation.
    pub fn total_edge_length(&self) -> Option<f64> {
        let tris = self.triangles.as_ref()?;
        let mut edges: Vec<(usize, usize)> = Vec::with_capacity(tris.len() * 3);
        for t in tris {
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                edges.push((a.min(b), a.max(b)));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        let mut total = 0.0;
        for (a, b) in edges {
            total += (self.points.row(a) - self.points.row(b)).norm();
        }
        Some(total)
    }
}

fn validate_triangles(tris: &[[usize; 3]], len: usize) -> Result<()> {
    for (s, t) in tris.iter().enumerate() {
        if t.iter().any(|&v| v >= len) {
            return Err(Error::DegenerateInput(format!(
                "triangle {s} references vertex out of range (have {len} vertices)"
            )));
        }
        if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
            return Err(Error::DegenerateInput(format!(
                "triangle {s} repeats a vertex index"
            )));
        }
    }
    Ok(())
}

fn check_distinct_points(points: &DMatrix<f64>) -> Result<()> {
    let mut seen: HashMap<Vec<u64>, usize> = HashMap::with_capacity(points.nrows());
    for i in 0..points.nrows() {
        let key: Vec<u64> = points.row(i).iter().map(|v| v.to_bits()).collect();
        if let Some(&other) = seen.get(&key) {
            return Err(Error::DegenerateInput(format!(
                "points {other} and {i} are identical"
            )));
        }
        seen.insert(key, i);
    }
    Ok(())
}

/// A registration outcome in map form: the row-stochastic matrix
/// `diag(1/mu) * sigma` together with its row-argmax assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct Correspondence {
    pi: DMatrix<f64>,
    assignment: Vec<usize>,
}

/// Tolerance for "row of a stochastic matrix sums to one".
pub const ROW_STOCHASTIC_TOL: f64 = 1e-10;

impl Correspondence {
    /// Validates that `pi` is row-stochastic and extracts the row-argmax
    /// assignment (ties broken by lowest index).
    pub fn from_matrix(pi: DMatrix<f64>) -> Result<Self> {
        if pi.nrows() == 0 || pi.ncols() == 0 {
            return Err(Error::DegenerateInput("empty correspondence matrix".into()));
        }
        let mut assignment = Vec::with_capacity(pi.nrows());
        for i in 0..pi.nrows() {
            let row = pi.row(i);
            let mut sum = 0.0;
            let mut best = 0usize;
            let mut best_val = f64::NEG_INFINITY;
            for (j, &v) in row.iter().enumerate() {
                if v < 0.0 {
                    return Err(Error::DegenerateInput(format!(
                        "negative entry at ({i},{j})"
                    )));
                }
                sum += v;
                if v > best_val {
                    best_val = v;
                    best = j;
                }
            }
            if (sum - 1.0).abs() > ROW_STOCHASTIC_TOL {
                return Err(Error::DegenerateInput(format!(
                    "row {i} sums to {sum:.17}, expected 1"
                )));
            }
            assignment.push(best);
        }
        Ok(Self { pi, assignment })
    }

    /// Deterministic identity assignment on `n` points.
    pub fn identity(n: usize) -> Self {
        Self {
            pi: DMatrix::identity(n, n),
            assignment: (0..n).collect(),
        }
    }

    /// Assignment-only correspondence: row `i` carries all mass at
    /// `assignment[i]`.
    pub fn from_assignment(assignment: Vec<usize>, target_size: usize) -> Result<Self> {
        let n = assignment.len();
        if n == 0 {
            return Err(Error::DegenerateInput("empty assignment".into()));
        }
        let mut pi = DMatrix::zeros(n, target_size);
        for (i, &j) in assignment.iter().enumerate() {
            if j >= target_size {
                return Err(Error::DegenerateInput(format!(
                    "assignment[{i}] = {j} out of range for {target_size} targets"
                )));
            }
            pi[(i, j)] = 1.0;
        }
        Ok(Self { pi, assignment })
    }

    pub fn source_size(&self) -> usize {
        self.pi.nrows()
    }

    pub fn target_size(&self) -> usize {
        self.pi.ncols()
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.pi
    }
}

/// Replaces the measure by the barycentric dual area of each vertex (one
/// third of the total area of its incident triangles), normalized to sum 1.
pub fn voronoi_measure(shape: &PointCloud) -> Result<PointCloud> {
    let tris = shape
        .triangles()
        .ok_or_else(|| Error::MissingConnectivity("voronoi measure needs triangles".into()))?;
    let mut weights = vec![0.0f64; shape.len()];
    for t in tris {
        let area = triangle_area(shape.points(), t);
        for &v in t {
            weights[v] += area / 3.0;
        }
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateInput("mesh has zero total area".into()));
    }
    if let Some(i) = weights.iter().position(|&w| !(w > 0.0)) {
        return Err(Error::DegenerateInput(format!(
            "vertex {i} has no incident area; its measure would be zero"
        )));
    }
    let measure = DVector::from_iterator(weights.len(), weights.iter().map(|w| w / total));
    shape.replace_measure(measure)
}

/// Area of a triangle with vertices in arbitrary ambient dimension.
pub(crate) fn triangle_area(points: &DMatrix<f64>, t: &[usize; 3]) -> f64 {
    let u = points.row(t[1]) - points.row(t[0]);
    let v = points.row(t[2]) - points.row(t[0]);
    let uu = u.dot(&u);
    let vv = v.dot(&v);
    let uv = u.dot(&v);
    0.5 * (uu * vv - uv * uv).max(0.0).sqrt()
}
