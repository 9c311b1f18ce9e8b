//! Model estimation: random walks, ARIMA, conjugate Bayesian AR/VAR and
//! VAR with Cholesky stochastic volatility.
//!
//! Multivariate data are passed as `T x n` matrices, one column per variable
//! and one row per month, oldest first.

mod arima;
mod conjugate;
mod lag;
mod optim;
mod rw;
mod sv;

pub use arima::{fit_arima, ArimaFit};
pub use conjugate::{
    ar_residual_variances, fit_bar, fit_bvar_minnesota, fit_bvar_strict_minnesota, niw_update,
    ConjugatePosterior, MinnesotaPosterior, NaturalConjugatePrior,
};
pub use lag::{select_lag_aic, select_var_lag_aic};
pub use optim::{nelder_mead, NelderMeadOptions, NelderMeadResult};
pub use rw::{fit_rw, RandomWalkFit};
pub use sv::{fit_bvar_sv, SvConfig, SvDraw, SvDraws, SvRun};
pub(crate) use sv::unit_lower_inverse;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;

/// Dimensions of a VAR(p) with intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarSpec {
    pub n: usize,
    pub p: usize,
    pub include_intercept: bool,
    pub variable_names: Vec<String>,
}

impl VarSpec {
    pub fn new(variable_names: Vec<String>, p: usize) -> Result<Self> {
        let spec = Self {
            n: variable_names.len(),
            p,
            include_intercept: true,
            variable_names,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 {
            return Err(Error::InvalidArgument(format!(
                "VAR needs n >= 1 and p >= 1, got n={} p={}",
                self.n, self.p
            )));
        }
        if self.variable_names.len() != self.n {
            return Err(Error::Dimension("variable_names length differs from n".into()));
        }
        if !self.include_intercept {
            return Err(Error::InvalidArgument("VAR models always include an intercept".into()));
        }
        Ok(())
    }

    /// Regressors per equation: intercept plus `n * p` lags.
    pub fn k(&self) -> usize {
        1 + self.n * self.p
    }
}

/// Minnesota shrinkage hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinnesotaPrior {
    pub lambda_overall: f64,
    pub lambda_cross: f64,
    pub lambda_lagdecay: f64,
    /// Prior standard deviation of intercepts relative to the residual scale.
    pub intercept_scale: f64,
    pub own_mean_first_lag: f64,
}

impl Default for MinnesotaPrior {
    fn default() -> Self {
        Self {
            lambda_overall: 0.2,
            lambda_cross: 0.5,
            lambda_lagdecay: 2.0,
            intercept_scale: 100.0,
            own_mean_first_lag: 0.0,
        }
    }
}

impl MinnesotaPrior {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lambda_overall > 0.0
            && self.lambda_cross > 0.0
            && self.lambda_cross <= 1.0
            && self.lambda_lagdecay > 0.0
            && self.intercept_scale > 0.0
            && self.own_mean_first_lag.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid Minnesota prior {self:?}")))
        }
    }

    /// Lag-`lag` shrinkage factor `lambda_overall / lag^lambda_lagdecay`.
    pub(crate) fn lag_scale(&self, lag: usize) -> f64 {
        self.lambda_overall / (lag as f64).powf(self.lambda_lagdecay)
    }
}

/// Estimated model ready for forecasting.
#[derive(Debug, Clone)]
pub enum ModelPosterior {
    RandomWalk(RandomWalkFit),
    Arima(ArimaFit),
    /// Normal-inverse-Wishart posterior (BAR is the `n = 1` case).
    Conjugate(ConjugatePosterior),
    /// Equation-by-equation Minnesota posterior with fixed diagonal covariance.
    Minnesota(MinnesotaPosterior),
    Sv(SvDraws),
}

impl ModelPosterior {
    /// Number of variables the model forecasts.
    pub fn n_vars(&self) -> usize {
        match self {
            ModelPosterior::RandomWalk(_) | ModelPosterior::Arima(_) => 1,
            ModelPosterior::Conjugate(c) => c.n(),
            ModelPosterior::Minnesota(m) => m.n(),
            ModelPosterior::Sv(s) => s.n(),
        }
    }

    /// Lags needed in the history to forecast.
    pub fn lags(&self) -> usize {
        match self {
            ModelPosterior::RandomWalk(_) => 0,
            ModelPosterior::Arima(_) => 1,
            ModelPosterior::Conjugate(c) => c.lags,
            ModelPosterior::Minnesota(m) => m.lags,
            ModelPosterior::Sv(s) => s.lags,
        }
    }
}

/// Stacks lagged regressors: row `t - p` holds `[1, y_{t-1}', ..., y_{t-p}']`
/// for `t = p..T`; returns `(X, Y)` with `Y` the matching rows of `y`.
pub fn var_design(y: &Mat, p: usize) -> Result<(Mat, Mat)> {
    let (t, n) = y.shape();
    if t <= p {
        return Err(Error::InsufficientData(format!(
            "{t} observations for a VAR with {p} lags"
        )));
    }
    let rows = t - p;
    let k = 1 + n * p;
    let mut x = Mat::zeros(rows, k);
    for r in 0..rows {
        let tt = r + p;
        x[(r, 0)] = 1.0;
        for lag in 1..=p {
            for v in 0..n {
                x[(r, 1 + (lag - 1) * n + v)] = y[(tt - lag, v)];
            }
        }
    }
    let yy = y.rows(p, rows).into_owned();
    Ok((x, yy))
}

/// Regressor vector `[1, y_T', ..., y_{T-p+1}']` from the last `p` rows.
pub(crate) fn last_regressors(history: &Mat, p: usize) -> Vec<f64> {
    let (t, n) = history.shape();
    let mut x = vec![0.0; 1 + n * p];
    x[0] = 1.0;
    for lag in 1..=p {
        for v in 0..n {
            x[1 + (lag - 1) * n + v] = history[(t - lag, v)];
        }
    }
    x
}

/// Column matrix from a slice.
pub fn column(values: &[f64]) -> Mat {
    Mat::from_column_slice(values.len(), 1, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn design_layout() {
        let y = Mat::from_row_slice(4, 2, &[1.0, 10.0, 2.0, 20.0, 3.0, 30.0, 4.0, 40.0]);
        let (x, yy) = var_design(&y, 2).unwrap();
        assert_eq!(x.shape(), (2, 5));
        assert_eq!(x.row(0).iter().copied().collect::<Vec<_>>(), vec![1.0, 2.0, 20.0, 1.0, 10.0]);
        assert_eq!(yy[(1, 1)], 40.0);
        assert_eq!(last_regressors(&y, 2), vec![1.0, 4.0, 40.0, 3.0, 30.0]);
        assert!(var_design(&y, 4).is_err());
    }

    #[test]
    fn var_spec_validation() {
        assert!(VarSpec::new(vec!["a".into()], 0).is_err());
        assert_eq!(VarSpec::new(vec!["a".into(), "b".into()], 3).unwrap().k(), 7);
        assert!(MinnesotaPrior::default().validate().is_ok());
        let bad = MinnesotaPrior {
            lambda_cross: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
