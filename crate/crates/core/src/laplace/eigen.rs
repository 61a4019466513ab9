//! Solver for the generalized symmetric eigenproblem `S phi = lambda M phi`.
//!
//! With the lumped (diagonal) mass matrix the pencil reduces to a standard
//! symmetric problem on `B = M^{-1/2} S M^{-1/2}`, solved densely. Dense
//! decomposition is adequate at desk scale (a few thousand points) and
//! resolves eigenvalue multiplicities cleanly, which matters on symmetric
//! shapes such as spheres.

use super::{DiscreteLB, LBSpectrum};
use crate::error::{Error, Result};
use faer::{Mat, Par, Side};
use nalgebra::{DMatrix, DVector};
use std::sync::Once;

/// Relative residual each returned eigenpair must satisfy.
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-8;

static FAER_SETUP: Once = Once::new();

/// Computes the `n` smallest nontrivial eigenpairs of `(S, M)`, ascending,
/// with M-orthonormal eigenfunctions.
///
/// The trivial pair (zero eigenvalue, constant eigenfunction) is excluded.
/// Within each column the sign is normalized so the entry of largest
/// magnitude is positive; this makes repeated solves reproducible but does
/// not resolve the sign ambiguity across different shapes, which stays with
/// the registration layer.
pub fn solve_spectrum(op: &DiscreteLB, n: usize) -> Result<LBSpectrum> {
    let len = op.dim();
    if n == 0 || n + 2 > len {
        return Err(Error::DegenerateInput(format!(
            "requested {n} eigenpairs from an operator on {len} points (need 1 <= n <= l-2)"
        )));
    }
    // Deterministic single-threaded decomposition; schedule-independent.
    FAER_SETUP.call_once(|| faer::set_global_parallelism(Par::Seq));

    let inv_sqrt_m: Vec<f64> = op.mass_diag().iter().map(|&m| 1.0 / m.sqrt()).collect();
    let mut b = Mat::<f64>::zeros(len, len);
    for i in 0..len {
        for (j, v) in op.stiffness().row(i) {
            b[(i, j)] += v * inv_sqrt_m[i] * inv_sqrt_m[j];
        }
    }
    let evd = b
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::ConvergenceFailure(format!("dense eigensolver failed: {e:?}")))?;

    let mut order: Vec<usize> = (0..len).collect();
    order.sort_by(|&a, &c| {
        evd.S()[a]
            .partial_cmp(&evd.S()[c])
            .expect("finite eigenvalues")
    });
    let lambda_max = evd.S()[order[len - 1]].abs().max(f64::MIN_POSITIVE);
    let zero_tol = 1e-8 * lambda_max;
    // Exactly one zero mode on a connected shape.
    if evd.S()[order[0]].abs() > zero_tol {
        return Err(Error::ConvergenceFailure(format!(
            "no trivial eigenvalue found (smallest is {:.3e})",
            evd.S()[order[0]]
        )));
    }
    if evd.S()[order[1]].abs() <= zero_tol {
        return Err(Error::DegenerateInput(
            "operator has multiple zero modes (disconnected shape)".into(),
        ));
    }

    let mut eigenvalues = Vec::with_capacity(n);
    let mut eigenfunctions = DMatrix::zeros(len, n);
    for k in 0..n {
        let src = order[k + 1];
        eigenvalues.push(evd.S()[src]);
        for i in 0..len {
            // phi = M^{-1/2} v keeps M-orthonormality.
            eigenfunctions[(i, k)] = evd.U()[(i, src)] * inv_sqrt_m[i];
        }
        normalize_column_sign(&mut eigenfunctions, k);
    }

    validate_pairs(op, &eigenvalues, &eigenfunctions)?;
    LBSpectrum::from_parts(
        eigenvalues,
        eigenfunctions,
        op.method(),
        op.intrinsic_dim(),
    )
}

fn normalize_column_sign(phi: &mut DMatrix<f64>, k: usize) {
    let mut best = 0usize;
    let mut best_abs = -1.0f64;
    for i in 0..phi.nrows() {
        let a = phi[(i, k)].abs();
        if a > best_abs {
            best_abs = a;
            best = i;
        }
    }
    if phi[(best, k)] < 0.0 {
        for i in 0..phi.nrows() {
            phi[(i, k)] = -phi[(i, k)];
        }
    }
}

fn validate_pairs(op: &DiscreteLB, lambda: &[f64], phi: &DMatrix<f64>) -> Result<()> {
    let len = op.dim();
    for (k, &l) in lambda.iter().enumerate() {
        let col = DVector::from_fn(len, |i, _| phi[(i, k)]);
        let s_phi = op.stiffness().matvec(&col);
        let m_phi = DVector::from_fn(len, |i, _| op.mass_diag()[i] * col[i]);
        let residual = (&s_phi - l * &m_phi).norm();
        let scale = s_phi.norm().max(f64::MIN_POSITIVE);
        if residual > EIGEN_RESIDUAL_TOL * scale {
            return Err(Error::ConvergenceFailure(format!(
                "eigenpair {k} residual {residual:.3e} exceeds {EIGEN_RESIDUAL_TOL:.0e} * {scale:.3e}"
            )));
        }
        // M-orthonormality against earlier columns.
        for k2 in 0..=k {
            let col2 = phi.column(k2);
            let dot: f64 = (0..len).map(|i| col[i] * op.mass_diag()[i] * col2[i]).sum();
            let expect = if k2 == k { 1.0 } else { 0.0 };
            if (dot - expect).abs() > 1e-8 {
                return Err(Error::ConvergenceFailure(format!(
                    "M-orthonormality defect {:.3e} between pairs {k2} and {k}",
                    (dot - expect).abs()
                )));
            }
        }
    }
    Ok(())
}
