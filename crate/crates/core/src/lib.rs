//! Non-rigid registration of point clouds sampled from (near-)isometric
//! manifolds.
//!
//! Shapes are mapped to a scale-invariant spectral embedding built from the
//! Laplace-Beltrami eigensystem, then registered in the embedding space by
//! minimizing a robust (sliced-)Wasserstein distance over an orthogonal
//! ambiguity matrix, coarse-to-fine over the embedding dimension.
//!
//! Pipeline outline:
//! 1. [`geometry`] loads or generates a shape and attaches a probability
//!    measure (uniform or barycentric-dual area).
//! 2. [`laplace`] assembles a discrete Laplace-Beltrami operator (cotangent
//!    FEM on meshes, Gaussian-kernel graph on bare clouds) and solves for the
//!    leading nontrivial eigenpairs.
//! 3. [`eigenmap`] maps points to rows `phi_k(u_i) / lambda_k^{d/4}`.
//! 4. [`transport`] supplies discrete optimal-transport solvers: the
//!    closed-form 1D solver used by the sliced methods, and an exact
//!    transportation-simplex solver used as oracle and by the full
//!    Wasserstein alternation.
//! 5. [`register`] minimizes the registration energy over couplings and an
//!    orthogonal matrix, single-scale or coarse-to-fine.

pub mod container;
pub mod eigenmap;
pub mod error;
pub mod geometry;
pub mod laplace;
pub mod register;
pub mod transport;

pub use error::{Error, Result};
