//! Thin helpers over `nalgebra` for the dense symmetric systems used by the
//! estimators.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Cholesky factorisation, failing with a [`Error::Singular`] tagged by `ctx`.
pub fn cholesky(a: &Mat, ctx: &str) -> Result<Cholesky<f64, Dyn>> {
    let sym = symmetrize(a);
    Cholesky::new(sym).ok_or_else(|| Error::Singular(ctx.to_string()))
}

/// Inverse of a symmetric positive-definite matrix.
pub fn spd_inverse(a: &Mat, ctx: &str) -> Result<Mat> {
    let inv = cholesky(a, ctx)?.inverse();
    Ok(symmetrize(&inv))
}

/// `(a + a') / 2`.
pub fn symmetrize(a: &Mat) -> Mat {
    (a + a.transpose()) * 0.5
}

/// Log-determinant of an SPD matrix via its Cholesky factor.
pub fn spd_logdet(a: &Mat, ctx: &str) -> Result<f64> {
    let l = cholesky(a, ctx)?;
    Ok(2.0 * l.l().diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

/// Least-squares coefficients `(X'X)^{-1} X'Y` for every column of `y`.
pub fn ols(x: &Mat, y: &Mat) -> Result<Mat> {
    let xtx = x.transpose() * x;
    let chol = cholesky(&xtx, "OLS cross-product")?;
    Ok(chol.solve(&(x.transpose() * y)))
}

/// Symmetric square root factor `S` with `S S' = a` for a positive
/// semi-definite `a`; small negative eigenvalues are clipped to zero.
pub fn psd_factor(a: &Mat) -> Mat {
    let eig = symmetrize(a).symmetric_eigen();
    let scale = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * Mat::from_diagonal(&scale)
}
