//! Scale-invariant spectral embedding: point `u_i` maps to the row
//! `(phi_1(u_i)/lambda_1^{d/4}, ..., phi_n(u_i)/lambda_n^{d/4})`.
//!
//! Scaling the shape multiplies eigenvalues by `1/c` and eigenfunctions by
//! `c^{-1/2}` (for `d = 2`, metric scale `c`), so the quotient is invariant.
//! Truncations are nested: the first `m` columns of an `n`-column embedding
//! equal the `m`-column embedding exactly.

use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::laplace::LBSpectrum;
use nalgebra::{DMatrix, DVector};

/// A shape mapped into `R^n`, with its probability measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    coords: DMatrix<f64>,
    measure: DVector<f64>,
    intrinsic_dim: u32,
    source_name: String,
}

impl Embedding {
    pub fn from_parts(
        coords: DMatrix<f64>,
        measure: DVector<f64>,
        intrinsic_dim: u32,
        source_name: impl Into<String>,
    ) -> Result<Self> {
        if coords.nrows() != measure.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} embedded points, {} measure entries",
                coords.nrows(),
                measure.len()
            )));
        }
        if measure.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::DegenerateInput(
                "measure entries must be strictly positive".into(),
            ));
        }
        Ok(Self {
            coords,
            measure,
            intrinsic_dim,
            source_name: source_name.into(),
        })
    }

    /// Number of embedded points.
    pub fn len(&self) -> usize {
        self.coords.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.nrows() == 0
    }

    /// Embedding dimension `n`.
    pub fn dim(&self) -> usize {
        self.coords.ncols()
    }

    /// Row-per-point coordinate matrix.
    pub fn coords(&self) -> &DMatrix<f64> {
        &self.coords
    }

    pub fn measure(&self) -> &DVector<f64> {
        &self.measure
    }

    pub fn intrinsic_dim(&self) -> u32 {
        self.intrinsic_dim
    }

    pub fn source_name(&self) -> &str {
        &self.source_name
    }

    /// First `m` columns; exactly the embedding built with `m` eigenpairs.
    pub fn truncated(&self, m: usize) -> Result<Self> {
        if m == 0 || m > self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "cannot truncate {}-dim embedding to {m}",
                self.dim()
            )));
        }
        Ok(Self {
            coords: self.coords.columns(0, m).into_owned(),
            measure: self.measure.clone(),
            intrinsic_dim: self.intrinsic_dim,
            source_name: self.source_name.clone(),
        })
    }

    /// Replaces the point set by `coords * r`, keeping the measure.
    pub fn rotated(&self, r: &DMatrix<f64>) -> Result<Self> {
        if r.nrows() != self.dim() || r.ncols() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "rotation is {}x{} for a {}-dim embedding",
                r.nrows(),
                r.ncols(),
                self.dim()
            )));
        }
        Ok(Self {
            coords: &self.coords * r,
            measure: self.measure.clone(),
            intrinsic_dim: self.intrinsic_dim,
            source_name: format!("{}-rot", self.source_name),
        })
    }
}

/// Builds the embedding from the first `n` eigenpairs of `spectrum`.
pub fn embed(spectrum: &LBSpectrum, shape: &PointCloud, n: usize) -> Result<Embedding> {
    if n == 0 || n > spectrum.len() {
        return Err(Error::DimensionMismatch(format!(
            "requested {n} columns from a spectrum with {} pairs",
            spectrum.len()
        )));
    }
    if shape.len() != spectrum.sample_count() {
        return Err(Error::DimensionMismatch(format!(
            "shape has {} points, spectrum sampled on {}",
            shape.len(),
            spectrum.sample_count()
        )));
    }
    let d = spectrum.intrinsic_dim();
    let exponent = d as f64 / 4.0;
    let phi = spectrum.eigenfunctions();
    let mut coords = DMatrix::zeros(shape.len(), n);
    for k in 0..n {
        let lambda = spectrum.eigenvalues()[k];
        if !(lambda > 0.0) {
            return Err(Error::DegenerateInput(format!(
                "eigenvalue {k} is {lambda}, cannot scale"
            )));
        }
        let scale = lambda.powf(exponent);
        for i in 0..shape.len() {
            coords[(i, k)] = phi[(i, k)] / scale;
        }
    }
    Embedding::from_parts(coords, shape.measure().clone(), d, shape.name())
}

/// Nested truncations of the same spectrum over a strictly increasing
/// schedule of dimensions, e.g. `{3, 5, 10, 20, 30, 50, 80, 120, 150, 200}`.
pub fn multiscale_embed(
    spectrum: &LBSpectrum,
    shape: &PointCloud,
    schedule: &[usize],
) -> Result<Vec<Embedding>> {
    if schedule.is_empty() {
        return Err(Error::DegenerateInput("empty multiscale schedule".into()));
    }
    if schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::DegenerateInput(format!(
            "schedule {schedule:?} must be strictly increasing"
        )));
    }
    if schedule[0] == 0 {
        return Err(Error::DegenerateInput("schedule starts at 0".into()));
    }
    schedule.iter().map(|&n| embed(spectrum, shape, n)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_shape, ShapeKind};
    use crate::laplace::{assemble_cotan, solve_spectrum, LBMethod, LBSpectrum};

    fn synthetic_spectrum() -> (LBSpectrum, PointCloud) {
        // Two points, one eigenpair: phi = 2, lambda = 4, d = 2.
        let phi = DMatrix::from_row_slice(2, 1, &[2.0, 2.0]);
        let spec = LBSpectrum::from_parts(vec![4.0], phi, LBMethod::CotanFem, 2).unwrap();
        let pts = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]);
        let pc = PointCloud::new(pts, None, "pair").unwrap();
        (spec, pc)
    }

    #[test]
    fn direct_formula_arithmetic() {
        let (spec, pc) = synthetic_spectrum();
        let e = embed(&spec, &pc, 1).unwrap();
        // 2 / 4^(2/4) = 1
        assert_eq!(e.coords()[(0, 0)], 1.0);
    }

    #[test]
    fn nestedness_is_exact() {
        let mesh = generate_shape(ShapeKind::BumpySphere, 162, 2).unwrap();
        let spec = solve_spectrum(&assemble_cotan(&mesh).unwrap(), 5).unwrap();
        let wide = embed(&spec, &mesh, 5).unwrap();
        let narrow = embed(&spec, &mesh, 3).unwrap();
        assert_eq!(wide.truncated(3).unwrap().coords(), narrow.coords());
    }

    #[test]
    fn multiscale_schedule_checks() {
        let mesh = generate_shape(ShapeKind::BumpySphere, 162, 2).unwrap();
        let spec = solve_spectrum(&assemble_cotan(&mesh).unwrap(), 10).unwrap();
        assert!(multiscale_embed(&spec, &mesh, &[3, 3, 5]).is_err());
        assert!(multiscale_embed(&spec, &mesh, &[5, 3]).is_err());
        assert!(multiscale_embed(&spec, &mesh, &[3, 5, 20]).is_err()); // beyond spectrum
        let levels = multiscale_embed(&spec, &mesh, &[3, 5, 10]).unwrap();
        assert_eq!(levels.len(), 3);
        assert_eq!(
            levels[2].truncated(3).unwrap().coords(),
            levels[0].coords()
        );
        let single = multiscale_embed(&spec, &mesh, &[3]).unwrap();
        assert_eq!(single[0].coords(), embed(&spec, &mesh, 3).unwrap().coords());
    }

    #[test]
    fn paper_ladder_is_accepted_with_enough_pairs() {
        let mesh = generate_shape(ShapeKind::BumpySphere, 252, 4).unwrap();
        let spec = solve_spectrum(&assemble_cotan(&mesh).unwrap(), 200).unwrap();
        let ladder = [3usize, 5, 10, 20, 30, 50, 80, 120, 150, 200];
        let levels = multiscale_embed(&spec, &mesh, &ladder).unwrap();
        assert_eq!(levels.len(), ladder.len());
        assert_eq!(levels.last().unwrap().dim(), 200);
    }
}
