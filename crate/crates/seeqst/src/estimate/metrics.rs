//! State fidelity and element-wise reconstruction error.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sim::DensityMatrix;
use crate::subsets::{elements_of_subset, ElementIndex, SubsetKey};

/// sqrt of a Hermitian PSD matrix via eigendecomposition, clamping small
/// negative eigenvalues to zero.
fn hermitian_sqrt(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let eig = m.clone().symmetric_eigen();
    let roots = eig.eigenvalues.map(|v| Complex64::new(v.max(0.0).sqrt(), 0.0));
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.adjoint()
}

/// Fidelity F(rho, sigma) = (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2 for
/// Hermitian matrices; eigenvalues are clamped at zero so numerically
/// slightly negative inputs do not produce NaN. The result is clamped to
/// [0, 1].
pub fn fidelity_hermitian(rho: &DMatrix<Complex64>, sigma: &DMatrix<Complex64>) -> Result<f64> {
    if rho.nrows() != sigma.nrows() || rho.ncols() != sigma.ncols() || rho.nrows() != rho.ncols() {
        return Err(Error::DimensionMismatch {
            expected: rho.nrows(),
            got: sigma.nrows(),
        });
    }
    let sqrt_rho = hermitian_sqrt(rho);
    let inner = &sqrt_rho * sigma * &sqrt_rho;
    // hermitize away rounding asymmetry before the second decomposition
    let inner = (inner.clone() + inner.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = inner.symmetric_eigen();
    let root_sum: f64 = eig.eigenvalues.iter().map(|&v| v.max(0.0).sqrt()).sum();
    Ok((root_sum * root_sum).clamp(0.0, 1.0))
}

/// Uhlmann fidelity between two density matrices.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    fidelity_hermitian(rho.matrix(), sigma.matrix())
}

/// Mean absolute deviation of estimated elements from the truth over the
/// union of the given subsets. Every element of every subset in the group
/// must have an estimate.
pub fn delta_err(
    estimates: &BTreeMap<ElementIndex, Complex64>,
    truth: &DensityMatrix,
    group: &[SubsetKey],
) -> Result<f64> {
    if group.is_empty() {
        return Err(Error::EmptyInput("subset group"));
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for k in group {
        for e in elements_of_subset(k) {
            let est = estimates
                .get(&e)
                .ok_or(Error::MissingEstimate {
                    row: e.row(),
                    col: e.col(),
                })?;
            total += (est - truth.entry(e.row(), e.col())).norm();
            count += 1;
        }
    }
    Ok(total / count as f64)
}
