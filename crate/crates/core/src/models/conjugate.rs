//! Closed-form conjugate posteriors for AR and VAR models.
//!
//! VAR coefficients `B` (`k x n`, one column per equation) take the
//! matric-normal / inverse-Wishart prior
//! `B | Sigma ~ MN(B0, Sigma, V0)`, `Sigma ~ IW(S0, nu0)`, which updates to
//! `Vn = (V0^-1 + X'X)^-1`, `Bn = Vn (V0^-1 B0 + X'Y)`, `nu_n = nu0 + T`,
//! `Sn = S0 + (Y - X Bn)'(Y - X Bn) + (Bn - B0)' V0^-1 (Bn - B0)`.
//!
//! The BAR path works with scalar normal-inverse-gamma algebra on vectors
//! and must coincide with the `n = 1` VAR.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat, Vector};
use crate::models::{var_design, MinnesotaPrior, VarSpec};

/// Posterior of a conjugate (N-IW) VAR, or of a BAR when `n = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjugatePosterior {
    /// `k x n` posterior mean of the coefficients (intercept row first).
    pub coef_mean: Mat,
    /// `k x k` row covariance `Vn`; `Cov(vec B | Sigma) = Sigma (x) Vn`.
    pub coef_row_cov: Mat,
    /// Inverse-Wishart scale `Sn`.
    pub sigma_scale: Mat,
    pub sigma_dof: f64,
    pub lags: usize,
}

impl ConjugatePosterior {
    pub fn n(&self) -> usize {
        self.coef_mean.ncols()
    }

    /// Posterior mean of `Sigma`, `Sn / (nu_n - n - 1)`.
    pub fn sigma_mean(&self) -> Mat {
        &self.sigma_scale / (self.sigma_dof - self.n() as f64 - 1.0)
    }
}

/// Equation-by-equation Minnesota posterior with `Sigma` fixed at the
/// diagonal of univariate AR residual variances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinnesotaPosterior {
    pub coef_mean: Mat,
    /// Posterior covariance of each equation's coefficients.
    pub coef_cov: Vec<Mat>,
    pub sigma: Mat,
    pub lags: usize,
}

impl MinnesotaPosterior {
    pub fn n(&self) -> usize {
        self.coef_mean.ncols()
    }
}

/// Normal-inverse-gamma prior for a single AR equation:
/// `beta | s2 ~ N(mean, s2 diag(var_scale))`, `s2 ~ IG(shape, scale)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NaturalConjugatePrior {
    pub mean: Vec<f64>,
    pub var_scale: Vec<f64>,
    pub shape: f64,
    pub scale: f64,
}

impl NaturalConjugatePrior {
    /// Minnesota-style prior for an AR(`p`) with residual scale `sigma2`,
    /// matching the `n = 1` VAR prior used by [`fit_bvar_minnesota`].
    pub fn minnesota(sigma2: f64, p: usize, prior: &MinnesotaPrior) -> Self {
        let mut mean = vec![0.0; p + 1];
        mean[1] = prior.own_mean_first_lag;
        let mut var_scale = Vec::with_capacity(p + 1);
        var_scale.push(prior.intercept_scale.powi(2));
        for lag in 1..=p {
            var_scale.push(prior.lag_scale(lag).powi(2) / sigma2);
        }
        // IW(S0, nu0) in one dimension is IG(nu0 / 2, S0 / 2) with nu0 = 3
        Self {
            mean,
            var_scale,
            shape: 1.5,
            scale: 0.5 * sigma2,
        }
    }
}

/// Residual variance of a univariate AR(`p`) with intercept fitted by OLS to
/// each column of `y`; the scale input of the Minnesota prior.
pub fn ar_residual_variances(y: &Mat, p: usize) -> Result<Vec<f64>> {
    (0..y.ncols())
        .map(|v| {
            let col = y.column(v).into_owned();
            let (x, yy) = var_design(&Mat::from_column_slice(col.len(), 1, col.as_slice()), p)?;
            let dof = x.nrows() as f64 - x.ncols() as f64;
            if dof < 1.0 {
                return Err(Error::InsufficientData(format!(
                    "AR({p}) scale for variable {v} needs more observations"
                )));
            }
            let s2 = match linalg::ols(&x, &yy) {
                Ok(b) => {
                    let r = &yy - &x * b;
                    r.norm_squared() / dof
                }
                Err(_) => 0.0,
            };
            if s2 > 0.0 && s2.is_finite() {
                Ok(s2)
            } else {
                let c = yy.column(0);
                let m = c.mean();
                let var = c.iter().map(|u| (u - m).powi(2)).sum::<f64>() / (c.len() as f64 - 1.0);
                if var > 0.0 {
                    Ok(var)
                } else {
                    Err(Error::Degenerate(format!("variable {v}")))
                }
            }
        })
        .collect()
}

/// Normal-inverse-gamma posterior of an AR(`p`) with intercept on `dy`.
pub fn fit_bar(dy: &[f64], p: usize, prior: &NaturalConjugatePrior) -> Result<ConjugatePosterior> {
    let k = p + 1;
    if p == 0 || dy.len() <= p + 1 {
        return Err(Error::InsufficientData(format!(
            "BAR({p}) needs more than {} observations, got {}",
            p + 1,
            dy.len()
        )));
    }
    if prior.mean.len() != k || prior.var_scale.len() != k {
        return Err(Error::Dimension(format!("BAR({p}) prior must have {k} entries")));
    }
    let rows = dy.len() - p;
    let x = Mat::from_fn(rows, k, |r, c| if c == 0 { 1.0 } else { dy[r + p - c] });
    let y = Vector::from_column_slice(&dy[p..]);
    let prior_prec = Vector::from_iterator(k, prior.var_scale.iter().map(|v| 1.0 / v));
    let b0 = Vector::from_column_slice(&prior.mean);

    let mut precision = x.transpose() * &x;
    for i in 0..k {
        precision[(i, i)] += prior_prec[i];
    }
    let chol = linalg::cholesky(&precision, "BAR posterior precision (singular design)")?;
    let rhs = prior_prec.component_mul(&b0) + x.transpose() * &y;
    let mean = chol.solve(&rhs);
    let resid = &y - &x * &mean;
    let dev = &mean - &b0;
    let quad: f64 = dev.iter().zip(prior_prec.iter()).map(|(d, w)| d * d * w).sum();
    let shape = prior.shape + 0.5 * rows as f64;
    let scale = prior.scale + 0.5 * (resid.norm_squared() + quad);
    Ok(ConjugatePosterior {
        coef_mean: Mat::from_column_slice(k, 1, mean.as_slice()),
        coef_row_cov: linalg::symmetrize(&chol.inverse()),
        sigma_scale: Mat::from_element(1, 1, 2.0 * scale),
        sigma_dof: 2.0 * shape,
        lags: p,
    })
}

pub(crate) struct MinnesotaMoments {
    /// `k x n` prior mean.
    pub b0: Mat,
    /// Residual scales from univariate ARs.
    pub sigma2: Vec<f64>,
}

pub(crate) fn minnesota_moments(y: &Mat, spec: &VarSpec, prior: &MinnesotaPrior) -> Result<MinnesotaMoments> {
    let sigma2 = ar_residual_variances(y, spec.p)?;
    let mut b0 = Mat::zeros(spec.k(), spec.n);
    for v in 0..spec.n {
        b0[(1 + v, v)] = prior.own_mean_first_lag;
    }
    Ok(MinnesotaMoments { b0, sigma2 })
}

/// Prior variance of coefficient `row` in equation `eq` under the
/// equation-specific Minnesota pattern.
pub(crate) fn minnesota_variance(
    row: usize,
    eq: usize,
    n: usize,
    sigma2: &[f64],
    prior: &MinnesotaPrior,
) -> f64 {
    if row == 0 {
        return (prior.intercept_scale).powi(2) * sigma2[eq];
    }
    let lag = (row - 1) / n + 1;
    let var = (row - 1) % n;
    let base = prior.lag_scale(lag).powi(2);
    if var == eq {
        base
    } else {
        base * prior.lambda_cross.powi(2) * sigma2[eq] / sigma2[var]
    }
}

fn check_dims(y: &Mat, spec: &VarSpec) -> Result<()> {
    spec.validate()?;
    if y.ncols() != spec.n {
        return Err(Error::Dimension(format!(
            "data has {} columns, spec has {} variables",
            y.ncols(),
            spec.n
        )));
    }
    if y.nrows() <= spec.n * spec.p + 1 {
        return Err(Error::InsufficientData(format!(
            "VAR({}) with {} variables needs more than {} observations, got {}",
            spec.p,
            spec.n,
            spec.n * spec.p + 1,
            y.nrows()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Parse("non-finite value in VAR data".into()));
    }
    Ok(())
}

/// Normal-inverse-Wishart BVAR with Minnesota-style prior moments.
///
/// The Kronecker structure shares one prior row covariance across
/// equations, so `lambda_cross` has no effect here; it is honoured by
/// [`fit_bvar_strict_minnesota`] and the stochastic-volatility sampler.
pub fn fit_bvar_minnesota(y: &Mat, spec: &VarSpec, prior: &MinnesotaPrior) -> Result<ConjugatePosterior> {
    check_dims(y, spec)?;
    prior.validate()?;
    let (x, yy) = var_design(y, spec.p)?;
    let m = minnesota_moments(y, spec, prior)?;
    let n = spec.n;
    let k = spec.k();

    let mut v0_inv = vec![0.0; k];
    v0_inv[0] = 1.0 / prior.intercept_scale.powi(2);
    for (row, w) in v0_inv.iter_mut().enumerate().skip(1) {
        let lag = (row - 1) / n + 1;
        let var = (row - 1) % n;
        *w = m.sigma2[var] / prior.lag_scale(lag).powi(2);
    }
    let nu0 = n as f64 + 2.0;
    let s0 = Mat::from_diagonal(&Vector::from_iterator(
        n,
        m.sigma2.iter().map(|s| s * (nu0 - n as f64 - 1.0)),
    ));

    niw_update(&x, &yy, &m.b0, &v0_inv, &s0, nu0, spec.p)
}

/// Normal-inverse-Wishart update from a design `(x, y)`: prior
/// `B | Σ ~ MN(b0, diag(1 / v0_inv), Σ)`, `Σ ~ IW(s0, nu0)`.
pub fn niw_update(
    x: &Mat,
    yy: &Mat,
    b0: &Mat,
    v0_inv: &[f64],
    s0: &Mat,
    nu0: f64,
    lags: usize,
) -> Result<ConjugatePosterior> {
    let (k, n) = (x.ncols(), yy.ncols());
    if x.nrows() != yy.nrows() || b0.shape() != (k, n) || v0_inv.len() != k || s0.shape() != (n, n) {
        return Err(Error::Dimension("inconsistent NIW prior or design dimensions".into()));
    }
    let mut precision = x.transpose() * x;
    for i in 0..k {
        precision[(i, i)] += v0_inv[i];
    }
    let chol = linalg::cholesky(&precision, "BVAR posterior precision (singular moment matrix)")?;
    let mut rhs = x.transpose() * yy;
    for i in 0..k {
        for j in 0..n {
            rhs[(i, j)] += v0_inv[i] * b0[(i, j)];
        }
    }
    let bn = chol.solve(&rhs);
    let resid = yy - x * &bn;
    let dev = &bn - b0;
    let mut weighted = dev.clone();
    for i in 0..k {
        for j in 0..n {
            weighted[(i, j)] *= v0_inv[i];
        }
    }
    let sn = s0.clone() + resid.transpose() * &resid + dev.transpose() * weighted;
    Ok(ConjugatePosterior {
        coef_mean: bn,
        coef_row_cov: linalg::symmetrize(&chol.inverse()),
        sigma_scale: linalg::symmetrize(&sn),
        sigma_dof: nu0 + x.nrows() as f64,
        lags,
    })
}

/// Classic Minnesota BVAR: independent normal priors per equation with the
/// error covariance fixed at the univariate AR residual variances.
pub fn fit_bvar_strict_minnesota(
    y: &Mat,
    spec: &VarSpec,
    prior: &MinnesotaPrior,
) -> Result<MinnesotaPosterior> {
    check_dims(y, spec)?;
    prior.validate()?;
    let (x, yy) = var_design(y, spec.p)?;
    let m = minnesota_moments(y, spec, prior)?;
    let (n, k) = (spec.n, spec.k());
    let xtx = x.transpose() * &x;
    let xty = x.transpose() * &yy;
    let mut coef_mean = Mat::zeros(k, n);
    let mut coef_cov = Vec::with_capacity(n);
    for eq in 0..n {
        let s2 = m.sigma2[eq];
        let mut precision = &xtx / s2;
        let mut rhs = xty.column(eq) / s2;
        for row in 0..k {
            let w = 1.0 / minnesota_variance(row, eq, n, &m.sigma2, prior);
            precision[(row, row)] += w;
            rhs[row] += w * m.b0[(row, eq)];
        }
        let chol = linalg::cholesky(&precision, "Minnesota equation precision")?;
        coef_mean.set_column(eq, &chol.solve(&rhs));
        coef_cov.push(linalg::symmetrize(&chol.inverse()));
    }
    Ok(MinnesotaPosterior {
        coef_mean,
        coef_cov,
        sigma: Mat::from_diagonal(&Vector::from_column_slice(&m.sigma2)),
        lags: spec.p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn ar1(phi: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut y = vec![0.0];
        for _ in 1..n {
            let e: f64 = StandardNormal.sample(&mut rng);
            y.push(phi * y.last().unwrap() + e);
        }
        y
    }

    #[test]
    fn bar_recovers_persistence() {
        let y = ar1(0.8, 1000, 3);
        let prior = NaturalConjugatePrior::minnesota(1.0, 1, &MinnesotaPrior::default());
        let post = fit_bar(&y, 1, &prior).unwrap();
        assert!((post.coef_mean[(1, 0)] - 0.8).abs() < 0.05);
    }

    #[test]
    fn bar_matches_single_variable_bvar() {
        let y = ar1(0.4, 120, 8);
        let mp = MinnesotaPrior::default();
        for p in [1, 3] {
            let ym = Mat::from_column_slice(y.len(), 1, &y);
            let spec = VarSpec::new(vec!["y".into()], p).unwrap();
            let bvar = fit_bvar_minnesota(&ym, &spec, &mp).unwrap();
            let s2 = ar_residual_variances(&ym, p).unwrap()[0];
            let bar = fit_bar(&y, p, &NaturalConjugatePrior::minnesota(s2, p, &mp)).unwrap();
            assert!((&bvar.coef_mean - &bar.coef_mean).abs().max() < 1e-10);
            assert!((&bvar.coef_row_cov - &bar.coef_row_cov).abs().max() < 1e-10);
            assert!((&bvar.sigma_scale - &bar.sigma_scale).abs().max() < 1e-10);
            assert!((bvar.sigma_dof - bar.sigma_dof).abs() < 1e-12);
        }
    }

    #[test]
    fn strict_minnesota_dogmatic_limit() {
        let y = ar1(0.5, 80, 1);
        let ym = Mat::from_column_slice(y.len(), 1, &y);
        let spec = VarSpec::new(vec!["y".into()], 2).unwrap();
        let prior = MinnesotaPrior {
            lambda_overall: 1e-8,
            intercept_scale: 1e-8,
            own_mean_first_lag: 0.9,
            ..Default::default()
        };
        let post = fit_bvar_strict_minnesota(&ym, &spec, &prior).unwrap();
        assert!((post.coef_mean[(1, 0)] - 0.9).abs() < 1e-8);
        assert!(post.coef_mean[(2, 0)].abs() < 1e-8);
    }

    #[test]
    fn dimension_errors() {
        let y = Mat::zeros(3, 2);
        let spec = VarSpec::new(vec!["a".into(), "b".into()], 1).unwrap();
        assert!(matches!(
            fit_bvar_minnesota(&y, &spec, &MinnesotaPrior::default()),
            Err(Error::InsufficientData(_))
        ));
        let spec3 = VarSpec::new(vec!["a".into(), "b".into(), "c".into()], 1).unwrap();
        assert!(matches!(
            fit_bvar_minnesota(&Mat::zeros(40, 2), &spec3, &MinnesotaPrior::default()),
            Err(Error::Dimension(_))
        ));
    }
}
