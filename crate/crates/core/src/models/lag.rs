//! Lag-order selection by the Akaike information criterion.
//!
//! Every candidate order is fitted by OLS on the same estimation sample,
//! the one left after dropping the first `pmax` observations, so the
//! criteria are comparable. Ties go to the smaller order.

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::models::var_design;

fn aic_orders(y: &Mat, pmax: usize) -> Result<Vec<f64>> {
    let (t, n) = y.shape();
    if pmax == 0 {
        return Err(Error::InvalidArgument("pmax must be at least 1".into()));
    }
    if t <= pmax + 1 + n * pmax {
        return Err(Error::InsufficientData(format!(
            "{t} observations for AIC search up to {pmax} lags"
        )));
    }
    let (x_full, y_eff) = var_design(y, pmax)?;
    let te = y_eff.nrows() as f64;
    (1..=pmax)
        .map(|p| {
            let x = x_full.columns(0, 1 + n * p).into_owned();
            let b = linalg::ols(&x, &y_eff)?;
            let r = &y_eff - &x * b;
            let sigma = (r.transpose() * &r) / te;
            let logdet = if n == 1 {
                sigma[(0, 0)].ln()
            } else {
                sigma.determinant().ln()
            };
            if !logdet.is_finite() {
                return Err(Error::Singular(format!("residual covariance at p={p}")));
            }
            Ok(te * logdet + 2.0 * (n * (1 + n * p)) as f64)
        })
        .collect()
}

fn argmin_first(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x < v[best] {
            best = i;
        }
    }
    best + 1
}

/// AIC-optimal AR order in `1..=pmax` for a univariate series.
pub fn select_lag_aic(dy: &[f64], pmax: usize) -> Result<usize> {
    if pmax == 1 {
        return Ok(1);
    }
    if dy.len() <= pmax + 1 {
        return Err(Error::InsufficientData(format!(
            "{} observations for AIC search up to {pmax} lags",
            dy.len()
        )));
    }
    let y = Mat::from_column_slice(dy.len(), 1, dy);
    Ok(argmin_first(&aic_orders(&y, pmax)?))
}

/// AIC-optimal VAR order in `1..=pmax` (criterion `T log|Sigma| + 2 n k`).
pub fn select_var_lag_aic(y: &Mat, pmax: usize) -> Result<usize> {
    if pmax == 1 {
        return Ok(1);
    }
    Ok(argmin_first(&aic_orders(y, pmax)?))
}
