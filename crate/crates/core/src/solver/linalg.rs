//! Finite-difference gradients and nullspace projection.

use nalgebra::{DMatrix, DVector};

use super::SolverError;

/// Relative singular-value threshold for rank decisions.
const RANK_TOL: f64 = 1e-10;

/// Central-difference gradient of `f` at `x` with step `h`.
pub fn numerical_gradient<F>(f: &F, x: &[f64], h: f64) -> Result<DVector<f64>, SolverError>
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    let mut probe = x.to_vec();
    let mut g = DVector::zeros(x.len());
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = f(&probe);
        probe[i] = x[i] - h;
        let down = f(&probe);
        probe[i] = x[i];
        if !(up.is_finite() && down.is_finite()) {
            return Err(SolverError::NonFinite {
                what: "function".into(),
                coordinate: Some(i),
            });
        }
        g[i] = (up - down) / (2.0 * h);
    }
    Ok(g)
}

/// Orthonormal basis of the column space of `j`, with rank detected by SVD.
fn range_basis(j: &DMatrix<f64>) -> DMatrix<f64> {
    let p = j.nrows();
    if j.ncols() == 0 || p == 0 {
        return DMatrix::zeros(p, 0);
    }
    let svd = j.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let sigma_max = svd.singular_values.max();
    if sigma_max.is_nan() || sigma_max <= 0.0 {
        return DMatrix::zeros(p, 0);
    }
    let keep: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > RANK_TOL * sigma_max)
        .map(|(i, _)| i)
        .collect();
    u.select_columns(&keep)
}

/// Orthonormal basis (as columns) of the nullspace of `jᵀ`, where the
/// columns of `j` are constraint gradients.
pub fn nullspace_basis(j: &DMatrix<f64>) -> DMatrix<f64> {
    let p = j.nrows();
    let range = range_basis(j);
    let r = range.ncols();
    if r == 0 {
        return DMatrix::identity(p, p);
    }
    // Completing the range to a full orthogonal basis: the Householder
    // factor of [U_r | 0] starts with span(U_r); the rest is its complement.
    let mut padded = DMatrix::zeros(p, p);
    padded.columns_mut(0, r).copy_from(&range);
    let q = padded.qr().q();
    q.columns(r, p - r).into_owned()
}

/// `v` with its components along the columns of `j` removed.
pub fn project(j: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    let range = range_basis(j);
    if range.ncols() == 0 {
        return v.clone();
    }
    v - &range * (range.transpose() * v)
}
