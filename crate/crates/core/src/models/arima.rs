//! ARIMA(p,1,q) with p, q in {0, 1}, estimated on the differenced series by
//! exact Gaussian maximum likelihood.
//!
//! The ARMA part is cast in state-space form with two-dimensional
//! state `[y_t, theta e_t]`; the Kalman filter delivers the prediction-error
//! decomposition and `sigma2` is concentrated out.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::models::optim::{nelder_mead, NelderMeadOptions};
use crate::stats;

const MIN_OBS: usize = 20;
/// Starting points in the unconstrained (atanh) parameter space.
const STARTS: [(f64, f64); 3] = [(0.0, 0.0), (0.5, 0.3), (-0.5, -0.3)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArimaFit {
    pub ar: Option<f64>,
    pub ma: Option<f64>,
    pub sigma2: f64,
    pub loglik: f64,
}

impl ArimaFit {
    pub fn phi(&self) -> f64 {
        self.ar.unwrap_or(0.0)
    }

    pub fn theta(&self) -> f64 {
        self.ma.unwrap_or(0.0)
    }

    pub(crate) fn state_space(&self) -> StateSpace {
        StateSpace::new(self.phi(), self.theta())
    }

    /// Filters `dy` and returns the one-step-ahead predicted state and its
    /// covariance (in units of `sigma2`).
    pub(crate) fn predicted_state(&self, dy: &[f64]) -> Result<(Vec<f64>, Mat)> {
        let ss = self.state_space();
        let out = ss.filter(dy)?;
        Ok((out.next_state, out.next_cov))
    }
}

/// `alpha_{t+1} = T alpha_t + R e_t`, `y_t = alpha_t[0]`.
#[derive(Debug, Clone)]
pub(crate) struct StateSpace {
    pub(crate) t: Mat,
    pub(crate) r: Vec<f64>,
}

pub(crate) struct FilterOutput {
    sum_log_f: f64,
    sum_v2_f: f64,
    next_state: Vec<f64>,
    next_cov: Mat,
}

impl StateSpace {
    pub(crate) fn new(phi: f64, theta: f64) -> Self {
        let mut t = Mat::zeros(2, 2);
        t[(0, 0)] = phi;
        t[(0, 1)] = 1.0;
        Self {
            t,
            r: vec![1.0, theta],
        }
    }

    pub(crate) fn dim(&self) -> usize {
        self.r.len()
    }

    /// Unconditional state covariance: solves `P = T P T' + R R'`.
    fn stationary_cov(&self) -> Result<Mat> {
        let m = self.dim();
        let mut a = Mat::identity(m * m, m * m);
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    for l in 0..m {
                        a[(i * m + j, k * m + l)] -= self.t[(i, k)] * self.t[(j, l)];
                    }
                }
            }
        }
        let rhs = Mat::from_fn(m * m, 1, |idx, _| self.r[idx / m] * self.r[idx % m]);
        let sol = a
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Singular("ARMA stationary covariance".into()))?;
        Ok(Mat::from_fn(m, m, |i, j| sol[(i * m + j, 0)]))
    }

    pub(crate) fn filter(&self, y: &[f64]) -> Result<FilterOutput> {
        let m = self.dim();
        let mut a = vec![0.0; m];
        let mut p = self.stationary_cov()?;
        let rr = Mat::from_fn(m, m, |i, j| self.r[i] * self.r[j]);
        let mut sum_log_f = 0.0;
        let mut sum_v2_f = 0.0;
        for &obs in y {
            let f = p[(0, 0)];
            if !(f > 1e-12) || !f.is_finite() {
                return Err(Error::Singular("ARMA innovation variance".into()));
            }
            let v = obs - a[0];
            sum_log_f += f.ln();
            sum_v2_f += v * v / f;
            // filtered state
            let gain: Vec<f64> = (0..m).map(|i| p[(i, 0)] / f).collect();
            let af: Vec<f64> = (0..m).map(|i| a[i] + gain[i] * v).collect();
            let pf = Mat::from_fn(m, m, |i, j| p[(i, j)] - gain[i] * p[(0, j)]);
            // prediction
            a = (0..m)
                .map(|i| (0..m).map(|j| self.t[(i, j)] * af[j]).sum())
                .collect();
            p = &self.t * pf * self.t.transpose() + &rr;
        }
        Ok(FilterOutput {
            sum_log_f,
            sum_v2_f,
            next_state: a,
            next_cov: p,
        })
    }

    /// Concentrated log-likelihood and the implied `sigma2`.
    fn concentrated_loglik(&self, y: &[f64]) -> Result<(f64, f64)> {
        let out = self.filter(y)?;
        let n = y.len() as f64;
        let sigma2 = out.sum_v2_f / n;
        if !(sigma2 > 0.0) {
            return Err(Error::Estimation {
                message: "zero innovation variance".into(),
                best_loglik: f64::NEG_INFINITY,
            });
        }
        let ll = -0.5 * n * ((2.0 * std::f64::consts::PI).ln() + sigma2.ln() + 1.0)
            - 0.5 * out.sum_log_f;
        Ok((ll, sigma2))
    }
}

/// Fits ARIMA(`ar`,1,`ma`) to the already differenced series `dy`.
/// No constant is included.
pub fn fit_arima(dy: &[f64], ar: usize, ma: usize) -> Result<ArimaFit> {
    if ar > 1 || ma > 1 {
        return Err(Error::InvalidArgument(format!(
            "unsupported order ARIMA({ar},1,{ma}); AR and MA orders must be 0 or 1"
        )));
    }
    if dy.len() < MIN_OBS {
        return Err(Error::InsufficientData(format!(
            "ARIMA needs {MIN_OBS} differenced observations, got {}",
            dy.len()
        )));
    }
    if dy.iter().any(|v| !v.is_finite()) {
        return Err(Error::Parse("non-finite value in ARIMA input".into()));
    }
    if dy.iter().all(|v| *v == dy[0]) || stats::sample_variance(dy) <= 0.0 {
        return Err(Error::Estimation {
            message: "zero-variance input".into(),
            best_loglik: f64::NEG_INFINITY,
        });
    }

    let unpack = |x: &[f64]| -> (f64, f64) {
        let mut it = x.iter();
        let phi = if ar == 1 { it.next().unwrap().tanh() } else { 0.0 };
        let theta = if ma == 1 { it.next().unwrap().tanh() } else { 0.0 };
        (phi, theta)
    };
    let objective = |x: &[f64]| -> f64 {
        let (phi, theta) = unpack(x);
        match StateSpace::new(phi, theta).concentrated_loglik(dy) {
            Ok((ll, _)) => -ll,
            Err(_) => f64::INFINITY,
        }
    };

    let n_par = ar + ma;
    let mut best: Option<(f64, f64, f64, f64)> = None;
    let mut any_converged = false;
    if n_par == 0 {
        let (ll, s2) = StateSpace::new(0.0, 0.0).concentrated_loglik(dy)?;
        best = Some((0.0, 0.0, ll, s2));
        any_converged = true;
    } else {
        for &(a0, b0) in &STARTS {
            let mut x0 = Vec::with_capacity(n_par);
            if ar == 1 {
                x0.push(a0);
            }
            if ma == 1 {
                x0.push(b0);
            }
            let res = nelder_mead(objective, &x0, NelderMeadOptions::default());
            if !res.f.is_finite() {
                continue;
            }
            any_converged |= res.converged;
            let (phi, theta) = unpack(&res.x);
            let (ll, s2) = StateSpace::new(phi, theta).concentrated_loglik(dy)?;
            if best.is_none_or(|b| ll > b.2) {
                best = Some((phi, theta, ll, s2));
            }
        }
    }
    match best {
        Some((phi, theta, loglik, sigma2)) if any_converged => Ok(ArimaFit {
            ar: (ar == 1).then_some(phi),
            ma: (ma == 1).then_some(theta),
            sigma2,
            loglik,
        }),
        Some((_, _, loglik, _)) => Err(Error::Estimation {
            message: format!("ARIMA({ar},1,{ma}) did not converge from any start"),
            best_loglik: loglik,
        }),
        None => Err(Error::Estimation {
            message: format!("ARIMA({ar},1,{ma}) likelihood not finite at any start"),
            best_loglik: f64::NEG_INFINITY,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn simulate_arma(phi: f64, theta: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(n);
        let (mut y_prev, mut e_prev) = (0.0, 0.0);
        for i in 0..n + 200 {
            let e: f64 = StandardNormal.sample(&mut rng);
            let y = phi * y_prev + e + theta * e_prev;
            if i >= 200 {
                out.push(y);
            }
            y_prev = y;
            e_prev = e;
        }
        out
    }

    #[test]
    fn white_noise_ma_near_zero() {
        let y = simulate_arma(0.0, 0.0, 2000, 11);
        let fit = fit_arima(&y, 0, 1).unwrap();
        assert!(fit.theta().abs() < 0.1, "theta {}", fit.theta());
        assert!((fit.sigma2 - 1.0).abs() < 0.1);
    }

    #[test]
    fn recovers_arma11() {
        let y = simulate_arma(0.5, 0.3, 3000, 5);
        let fit = fit_arima(&y, 1, 1).unwrap();
        assert!((fit.phi() - 0.5).abs() < 0.07, "phi {}", fit.phi());
        assert!((fit.theta() - 0.3).abs() < 0.07, "theta {}", fit.theta());
    }

    #[test]
    fn exact_likelihood_of_white_noise() {
        let y = simulate_arma(0.0, 0.0, 50, 2);
        let (ll, s2) = StateSpace::new(0.0, 0.0).concentrated_loglik(&y).unwrap();
        let n = y.len() as f64;
        let s2_direct = y.iter().map(|v| v * v).sum::<f64>() / n;
        assert!((s2 - s2_direct).abs() < 1e-12);
        let ll_direct = -0.5 * n * ((2.0 * std::f64::consts::PI * s2_direct).ln() + 1.0);
        assert!((ll - ll_direct).abs() < 1e-9);
    }

    #[test]
    fn ar1_stationary_variance() {
        let p = StateSpace::new(0.6, 0.0).stationary_cov().unwrap();
        assert!((p[(0, 0)] - 1.0 / (1.0 - 0.36)).abs() < 1e-12);
    }

    #[test]
    fn rejects_degenerate_and_unsupported() {
        assert!(matches!(fit_arima(&[0.3; 40], 0, 1), Err(Error::Estimation { .. })));
        assert!(matches!(fit_arima(&[0.3; 40], 2, 2), Err(Error::InvalidArgument(_))));
        assert!(fit_arima(&[0.1, 0.2], 1, 1).is_err());
    }
}
