//! Thin layer over `faer` for the dense complex operations used here.

use faer::{Mat, Side};
use num_complex::Complex64;

use crate::{Error, Result};

pub(crate) type CMat = Mat<Complex64>;

/// Eigen-decomposition of a Hermitian matrix: ascending real eigenvalues and
/// orthonormal eigenvectors as columns.
pub(crate) fn hermitian_eigen(matrix: &CMat) -> Result<(Vec<f64>, CMat)> {
    let evd = matrix
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::EigenSolver { residual: f64::INFINITY })?;
    let values = evd.S().column_vector().iter().map(|v| v.re).collect();
    Ok((values, evd.U().to_owned()))
}

/// Eigen-decomposition of a general complex matrix.
pub(crate) fn general_eigen(matrix: &CMat) -> Result<(Vec<Complex64>, CMat)> {
    let evd = matrix.eigen().map_err(|_| Error::EigenSolver { residual: f64::INFINITY })?;
    let values = evd.S().column_vector().iter().copied().collect();
    Ok((values, evd.U().to_owned()))
}

pub(crate) fn max_abs(matrix: &CMat) -> f64 {
    let mut m = 0.0_f64;
    for j in 0..matrix.ncols() {
        for i in 0..matrix.nrows() {
            m = m.max(matrix[(i, j)].norm());
        }
    }
    m
}

/// `max |A - B|` elementwise.
pub(crate) fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut m = 0.0_f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    m
}

/// `‖A†A - 1‖_max`.
pub(crate) fn unitarity_defect(matrix: &CMat) -> f64 {
    let product = matrix.adjoint() * matrix;
    let identity = CMat::identity(matrix.ncols(), matrix.ncols());
    max_abs_diff(&product, &identity)
}

/// `V diag(phases) V†`.
pub(crate) fn reassemble(vectors: &CMat, phases: &[Complex64]) -> CMat {
    let n = vectors.nrows();
    let scaled = CMat::from_fn(n, phases.len(), |i, j| vectors[(i, j)] * phases[j]);
    scaled * vectors.adjoint()
}

pub(crate) fn column(matrix: &CMat, j: usize) -> Vec<Complex64> {
    (0..matrix.nrows()).map(|i| matrix[(i, j)]).collect()
}

pub(crate) fn from_columns(columns: &[Vec<Complex64>]) -> CMat {
    let n = columns.first().map_or(0, Vec::len);
    CMat::from_fn(n, columns.len(), |i, j| columns[j][i])
}

pub(crate) fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn mat_vec(matrix: &CMat, v: &[Complex64]) -> Vec<Complex64> {
    (0..matrix.nrows())
        .map(|i| (0..matrix.ncols()).map(|j| matrix[(i, j)] * v[j]).sum())
        .collect()
}

/// `⟨a|b⟩ = Σ conj(a_i) b_i`.
pub(crate) fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_hermitian() {
        let m = CMat::from_fn(2, 2, |i, j| if i == j { 0.0.into() } else { 1.0.into() });
        let (values, vectors) = hermitian_eigen(&m).unwrap();
        assert!((values[0] + 1.0).abs() < 1e-14);
        assert!((values[1] - 1.0).abs() < 1e-14);
        assert!(unitarity_defect(&vectors) < 1e-14);
    }

    #[test]
    fn reassemble_identity() {
        let v = CMat::identity(3, 3);
        let phases = vec![Complex64::new(2.0, 0.0); 3];
        let m = reassemble(&v, &phases);
        assert!((m[(1, 1)] - 2.0).norm() < 1e-15);
        assert_eq!(m[(0, 1)], Complex64::new(0.0, 0.0));
    }
}
