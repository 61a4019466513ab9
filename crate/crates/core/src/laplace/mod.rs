//! Discrete Laplace-Beltrami operators and their leading nontrivial
//! eigenpairs.
//!
//! Two discretizations are provided: cotangent finite elements for
//! triangulated shapes and a Gaussian-kernel graph Laplacian for bare point
//! clouds. Both yield a symmetric positive semidefinite stiffness matrix `S`
//! paired with a diagonal (lumped) mass matrix `M`; the eigenproblem solved
//! is `S phi = lambda M phi`.

mod cotan;
mod eigen;
mod kernel;
mod sparse;

pub use cotan::assemble_cotan;
pub use eigen::solve_spectrum;
pub use kernel::{assemble_kernel, default_bandwidth};
pub use sparse::SparseSym;

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Which discretization produced an operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LBMethod {
    CotanFem,
    KernelGraph,
}

impl LBMethod {
    pub(crate) fn tag(self) -> u8 {
        match self {
            LBMethod::CotanFem => 0,
            LBMethod::KernelGraph => 1,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(LBMethod::CotanFem),
            1 => Ok(LBMethod::KernelGraph),
            t => Err(Error::Parse(format!("unknown method tag {t}"))),
        }
    }
}

/// Stiffness/mass pair discretizing the Laplace-Beltrami operator.
///
/// `S` is symmetric positive semidefinite with `S 1 = 0` (constants are
/// harmonic); the mass matrix is lumped and kept as its diagonal.
#[derive(Debug, Clone)]
pub struct DiscreteLB {
    stiffness: SparseSym,
    mass_diag: DVector<f64>,
    method: LBMethod,
    intrinsic_dim: u32,
}

impl DiscreteLB {
    pub(crate) fn new(
        stiffness: SparseSym,
        mass_diag: DVector<f64>,
        method: LBMethod,
        intrinsic_dim: u32,
    ) -> Result<Self> {
        if stiffness.dim() != mass_diag.len() {
            return Err(Error::DimensionMismatch(format!(
                "stiffness is {}x{} but mass has {} entries",
                stiffness.dim(),
                stiffness.dim(),
                mass_diag.len()
            )));
        }
        if mass_diag.iter().any(|&m| !(m > 0.0)) {
            return Err(Error::DegenerateInput(
                "mass diagonal must be strictly positive".into(),
            ));
        }
        if intrinsic_dim == 0 {
            return Err(Error::DegenerateInput("intrinsic dimension 0".into()));
        }
        Ok(Self {
            stiffness,
            mass_diag,
            method,
            intrinsic_dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.stiffness.dim()
    }

    pub fn stiffness(&self) -> &SparseSym {
        &self.stiffness
    }

    pub fn mass_diag(&self) -> &DVector<f64> {
        &self.mass_diag
    }

    pub fn method(&self) -> LBMethod {
        self.method
    }

    pub fn intrinsic_dim(&self) -> u32 {
        self.intrinsic_dim
    }
}

/// Leading nontrivial eigenpairs of a [`DiscreteLB`]: ascending eigenvalues
/// `0 < lambda_1 <= ... <= lambda_n` and M-orthonormal eigenfunctions as the
/// columns of an `l x n` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LBSpectrum {
    eigenvalues: Vec<f64>,
    eigenfunctions: DMatrix<f64>,
    method: LBMethod,
    intrinsic_dim: u32,
}

impl LBSpectrum {
    pub(crate) fn from_parts(
        eigenvalues: Vec<f64>,
        eigenfunctions: DMatrix<f64>,
        method: LBMethod,
        intrinsic_dim: u32,
    ) -> Result<Self> {
        if eigenvalues.len() != eigenfunctions.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{} eigenvalues, {} eigenfunction columns",
                eigenvalues.len(),
                eigenfunctions.ncols()
            )));
        }
        if eigenvalues.first().map_or(false, |&l| l <= 0.0) {
            return Err(Error::DegenerateInput(
                "trivial or negative eigenvalue in nontrivial spectrum".into(),
            ));
        }
        Ok(Self {
            eigenvalues,
            eigenfunctions,
            method,
            intrinsic_dim,
        })
    }

    /// Number of sample points.
    pub fn sample_count(&self) -> usize {
        self.eigenfunctions.nrows()
    }

    /// Number of eigenpairs.
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Eigenfunctions sampled on the shape, one column per eigenpair.
    pub fn eigenfunctions(&self) -> &DMatrix<f64> {
        &self.eigenfunctions
    }

    pub fn method(&self) -> LBMethod {
        self.method
    }

    pub fn intrinsic_dim(&self) -> u32 {
        self.intrinsic_dim
    }

    /// Groups eigenvalues into numerical multiplicity clusters: consecutive
    /// eigenvalues whose relative gap is below `gap_tol` share a group.
    pub fn multiplicity_groups(&self, gap_tol: f64) -> Vec<Vec<usize>> {
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for (k, &l) in self.eigenvalues.iter().enumerate() {
            match groups.last_mut() {
                Some(g) => {
                    let prev = self.eigenvalues[*g.last().unwrap()];
                    let scale = prev.abs().max(l.abs()).max(f64::MIN_POSITIVE);
                    if (l - prev).abs() / scale <= gap_tol {
                        g.push(k);
                    } else {
                        groups.push(vec![k]);
                    }
                }
                None => groups.push(vec![k]),
            }
        }
        groups
    }
}
