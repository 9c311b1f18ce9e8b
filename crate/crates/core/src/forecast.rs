//! Iterated multi-step forecasts, level conversion, sign forecasts and
//! predictive simulation.
//!
//! Models are fitted on growth rates. `history` is always a `T x n` matrix
//! in the model's variable order (for ARIMA and RW, a single column of
//! `Δr`). Point forecasts plug in posterior means (or MLEs) and feed each
//! forecast back as input. Predictive draws additionally sample parameters
//! where a posterior exists, and are indexed by an RNG stream derived from
//! `(seed, draw)` so results do not depend on thread scheduling.

use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat, Vector};
use crate::models::{last_regressors, ArimaFit, ConjugatePosterior, MinnesotaPosterior, ModelPosterior, SvDraws};
use crate::rng::{job_rng, JobRng};
use crate::stats;
use crate::timeseries::MonthDate;

/// Largest admissible one-step log change of a point forecast.
pub const MAX_ABS_DLOG: f64 = 10.0;
/// Smallest number of predictive draws accepted.
pub const MIN_DRAWS: usize = 500;

/// One forecast of one model at one origin and horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastRecord {
    pub model: String,
    pub origin: MonthDate,
    pub horizon: usize,
    pub target: MonthDate,
    /// Observed level at the origin.
    pub origin_level: f64,
    /// Plug-in point forecast in levels.
    pub point: f64,
    /// Mean of the predictive level draws, when densities are computed.
    pub draw_mean: Option<f64>,
    pub sign: i8,
    pub quantiles: Option<QuantileGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub draws: Option<Vec<f64>>,
    pub realized: Option<f64>,
}

impl ForecastRecord {
    pub fn error(&self) -> Option<f64> {
        self.realized.map(|r| r - self.point)
    }

    pub fn realized_sign(&self) -> Option<i8> {
        self.realized.map(|r| sign_forecast(r, self.origin_level))
    }
}

/// Empirical quantiles at `alpha_j = j / J`, `j = 1..J-1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileGrid {
    pub j: usize,
    pub values: Vec<f64>,
}

impl QuantileGrid {
    pub fn alphas(&self) -> Vec<f64> {
        alpha_grid(self.j)
    }
}

pub fn alpha_grid(j: usize) -> Vec<f64> {
    (1..j).map(|i| i as f64 / j as f64).collect()
}

/// Quantiles of `draws` on the `j/J` grid by linear interpolation of the
/// order statistics at position `(n - 1) alpha`.
pub fn quantile_grid(draws: &[f64], j: usize) -> Result<QuantileGrid> {
    if draws.is_empty() {
        return Err(Error::InvalidArgument("quantile grid of an empty draw set".into()));
    }
    if j < 2 {
        return Err(Error::InvalidArgument(format!("quantile grid needs J >= 2, got {j}")));
    }
    if draws.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence("non-finite predictive draw".into()));
    }
    let sorted = stats::sorted_copy(draws);
    let values = alpha_grid(j)
        .into_iter()
        .map(|a| stats::quantile_sorted(&sorted, a))
        .collect();
    Ok(QuantileGrid { j, values })
}

/// `exp(r_last + cumsum(dlog))`.
pub fn to_levels(r_last: f64, dlog: &[f64]) -> Result<Vec<f64>> {
    if !r_last.is_finite() || dlog.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite input to level conversion".into()));
    }
    let mut acc = r_last;
    dlog.iter()
        .enumerate()
        .map(|(h, d)| {
            acc += d;
            let level = acc.exp();
            if level.is_finite() {
                Ok(level)
            } else {
                Err(Error::Divergence(format!("level overflow at horizon {}", h + 1)))
            }
        })
        .collect()
}

/// Direction of change: `-1`, `0` or `+1`, with exact ties mapped to `0`.
pub fn sign_forecast(point: f64, origin_level: f64) -> i8 {
    let d = point - origin_level;
    if d > 0.0 {
        1
    } else if d < 0.0 {
        -1
    } else {
        0
    }
}

fn check_history(post: &ModelPosterior, history: &Mat, horizon: usize) -> Result<()> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("forecast horizon must be at least 1".into()));
    }
    if history.ncols() != post.n_vars() {
        return Err(Error::Dimension(format!(
            "history has {} columns, model has {} variables",
            history.ncols(),
            post.n_vars()
        )));
    }
    if history.nrows() < post.lags().max(1) {
        return Err(Error::InsufficientData(format!(
            "history of {} rows for a model with {} lags",
            history.nrows(),
            post.lags()
        )));
    }
    Ok(())
}

/// `horizon x n` matrix of plug-in growth-rate forecasts.
pub fn iterate_point_forecast(post: &ModelPosterior, history: &Mat, horizon: usize) -> Result<Mat> {
    check_history(post, history, horizon)?;
    let out = match post {
        ModelPosterior::RandomWalk(rw) => {
            let d = if rw.with_drift { rw.drift } else { 0.0 };
            Mat::from_element(horizon, 1, d)
        }
        ModelPosterior::Arima(fit) => {
            let dy: Vec<f64> = history.column(0).iter().copied().collect();
            let (state, _) = fit.predicted_state(&dy)?;
            arima_path(fit, state, horizon)
        }
        ModelPosterior::Conjugate(c) => var_path(&c.coef_mean, c.lags, history, horizon),
        ModelPosterior::Minnesota(m) => var_path(&m.coef_mean, m.lags, history, horizon),
        ModelPosterior::Sv(s) => var_path(&s.coef_mean(), s.lags, history, horizon),
    };
    if let Some((idx, v)) = out.iter().enumerate().find(|(_, v)| !(v.abs() <= MAX_ABS_DLOG)) {
        return Err(Error::Divergence(format!(
            "point forecast of {v} log units at horizon {} exceeds the blow-up guard",
            idx % horizon + 1
        )));
    }
    Ok(out)
}

fn arima_path(fit: &ArimaFit, mut state: Vec<f64>, horizon: usize) -> Mat {
    let ss = fit.state_space();
    let mut out = Mat::zeros(horizon, 1);
    for h in 0..horizon {
        out[(h, 0)] = state[0];
        state = (0..2).map(|i| (0..2).map(|j| ss.t[(i, j)] * state[j]).sum()).collect();
    }
    out
}

/// Iterates `y' = x' B` for `horizon` steps.
fn var_path(coef: &Mat, p: usize, history: &Mat, horizon: usize) -> Mat {
    let n = coef.ncols();
    let mut buf = history.rows(history.nrows() - p, p).into_owned();
    let mut out = Mat::zeros(horizon, n);
    for h in 0..horizon {
        let x = last_regressors(&buf, p);
        let y = var_step(coef, &x);
        out.row_mut(h).copy_from_slice(&y);
        push_row(&mut buf, &y);
    }
    out
}

fn var_step(coef: &Mat, x: &[f64]) -> Vec<f64> {
    (0..coef.ncols())
        .map(|v| (0..coef.nrows()).map(|r| coef[(r, v)] * x[r]).sum())
        .collect()
}

/// Drops the oldest row of `buf` and appends `y`.
fn push_row(buf: &mut Mat, y: &[f64]) {
    let p = buf.nrows();
    for r in 0..p - 1 {
        let next = buf.row(r + 1).into_owned();
        buf.row_mut(r).copy_from(&next);
    }
    buf.row_mut(p - 1).copy_from_slice(y);
}

/// `M` simulated growth-rate paths, each `horizon x n`.
#[derive(Debug, Clone)]
pub struct PredictiveDraws {
    pub paths: Vec<Mat>,
}

impl PredictiveDraws {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn horizon(&self) -> usize {
        self.paths.first().map_or(0, |p| p.nrows())
    }

    /// Growth-rate draws of variable `var` at horizon `h` (1-based).
    pub fn dlog(&self, var: usize, h: usize) -> Vec<f64> {
        self.paths.iter().map(|p| p[(h - 1, var)]).collect()
    }

    /// Level draws of variable `var`, one vector per horizon.
    pub fn levels(&self, var: usize, r_last: f64) -> Result<Vec<Vec<f64>>> {
        let horizon = self.horizon();
        let mut out = vec![Vec::with_capacity(self.len()); horizon];
        for p in &self.paths {
            let path: Vec<f64> = p.column(var).iter().copied().collect();
            for (h, lv) in to_levels(r_last, &path)?.into_iter().enumerate() {
                out[h].push(lv);
            }
        }
        Ok(out)
    }
}

fn gauss(rng: &mut JobRng) -> f64 {
    StandardNormal.sample(rng)
}

fn normals(rng: &mut JobRng, n: usize) -> Vector {
    Vector::from_iterator(n, (0..n).map(|_| gauss(rng)))
}

/// Simulates `m` predictive paths from `post` given `history`.
pub fn simulate_predictive(
    post: &ModelPosterior,
    history: &Mat,
    horizon: usize,
    m: usize,
    seed: u64,
) -> Result<PredictiveDraws> {
    check_history(post, history, horizon)?;
    if m < MIN_DRAWS {
        return Err(Error::InvalidArgument(format!(
            "predictive simulation needs at least {MIN_DRAWS} draws, got {m}"
        )));
    }
    let sampler = Sampler::new(post, history)?;
    let paths = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut rng = job_rng(seed, i as u64, "predictive");
            sampler.path(i, history, horizon, &mut rng)
        })
        .collect::<Result<Vec<Mat>>>()?;
    Ok(PredictiveDraws { paths })
}

/// Per-model quantities precomputed once for all draws.
enum Sampler<'a> {
    RandomWalk {
        drift: f64,
        sd: f64,
    },
    Arima {
        fit: &'a ArimaFit,
        state: Vec<f64>,
        state_factor: Mat,
    },
    Conjugate {
        post: &'a ConjugatePosterior,
        scale_inv_factor: Mat,
        row_factor: Mat,
    },
    Minnesota {
        post: &'a MinnesotaPosterior,
        coef_factors: Vec<Mat>,
        sigma_factor: Mat,
    },
    Sv {
        draws: &'a SvDraws,
        b0_inv: Vec<Mat>,
    },
}

impl<'a> Sampler<'a> {
    fn new(post: &'a ModelPosterior, history: &Mat) -> Result<Self> {
        Ok(match post {
            ModelPosterior::RandomWalk(rw) => Sampler::RandomWalk {
                drift: if rw.with_drift { rw.drift } else { 0.0 },
                sd: rw.sigma2.max(0.0).sqrt(),
            },
            ModelPosterior::Arima(fit) => {
                let dy: Vec<f64> = history.column(0).iter().copied().collect();
                let (state, cov) = fit.predicted_state(&dy)?;
                Sampler::Arima {
                    fit,
                    state,
                    state_factor: linalg::psd_factor(&(cov * fit.sigma2)),
                }
            }
            ModelPosterior::Conjugate(c) => {
                let n = c.n() as f64;
                if !(c.sigma_dof > n - 1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "inverse-Wishart degrees of freedom {} not above n - 1",
                        c.sigma_dof
                    )));
                }
                let scale_inv = linalg::spd_inverse(&c.sigma_scale, "inverse-Wishart scale")?;
                Sampler::Conjugate {
                    post: c,
                    scale_inv_factor: linalg::cholesky(&scale_inv, "inverse-Wishart scale inverse")?.l(),
                    row_factor: linalg::psd_factor(&c.coef_row_cov),
                }
            }
            ModelPosterior::Minnesota(mp) => Sampler::Minnesota {
                post: mp,
                coef_factors: mp.coef_cov.iter().map(linalg::psd_factor).collect(),
                sigma_factor: linalg::psd_factor(&mp.sigma),
            },
            ModelPosterior::Sv(s) => {
                if s.draws.is_empty() {
                    return Err(Error::InvalidArgument("SV posterior without draws".into()));
                }
                Sampler::Sv {
                    draws: s,
                    b0_inv: s.draws.iter().map(|d| crate::models::unit_lower_inverse(&d.b0)).collect(),
                }
            }
        })
    }

    fn path(&self, index: usize, history: &Mat, horizon: usize, rng: &mut JobRng) -> Result<Mat> {
        let out = match self {
            Sampler::RandomWalk { drift, sd } => {
                Mat::from_fn(horizon, 1, |_, _| drift + sd * gauss(rng))
            }
            Sampler::Arima {
                fit,
                state,
                state_factor,
            } => {
                let ss = fit.state_space();
                let z = normals(rng, 2);
                let mut alpha: Vec<f64> = (0..2).map(|i| state[i] + (state_factor.row(i) * &z)[0]).collect();
                let sd = fit.sigma2.sqrt();
                let mut out = Mat::zeros(horizon, 1);
                for h in 0..horizon {
                    out[(h, 0)] = alpha[0];
                    let e = sd * gauss(rng);
                    alpha = (0..2)
                        .map(|i| (0..2).map(|j| ss.t[(i, j)] * alpha[j]).sum::<f64>() + ss.r[i] * e)
                        .collect();
                }
                out
            }
            Sampler::Conjugate {
                post,
                scale_inv_factor,
                row_factor,
            } => {
                let n = post.n();
                // Sigma^-1 ~ Wishart(Sn^-1, nu) by the Bartlett decomposition
                let mut a = Mat::zeros(n, n);
                for i in 0..n {
                    let chi = ChiSquared::new(post.sigma_dof - i as f64)
                        .map_err(|e| Error::InvalidArgument(format!("chi-square draw: {e}")))?;
                    a[(i, i)] = chi.sample(rng).sqrt();
                    for j in 0..i {
                        a[(i, j)] = gauss(rng);
                    }
                }
                let la = scale_inv_factor * a;
                let precision = &la * la.transpose();
                let sigma = linalg::spd_inverse(&precision, "Wishart draw")?;
                let sigma_factor = linalg::cholesky(&sigma, "inverse-Wishart draw")?.l();
                let k = post.coef_mean.nrows();
                let z = Mat::from_fn(k, n, |_, _| gauss(rng));
                let coef = &post.coef_mean + row_factor * z * sigma_factor.transpose();
                simulate_var(&coef, &sigma_factor, post.lags, history, horizon, rng)
            }
            Sampler::Minnesota {
                post,
                coef_factors,
                sigma_factor,
            } => {
                let k = post.coef_mean.nrows();
                let mut coef = post.coef_mean.clone();
                for (eq, f) in coef_factors.iter().enumerate() {
                    let dev = f * normals(rng, k);
                    for r in 0..k {
                        coef[(r, eq)] += dev[r];
                    }
                }
                simulate_var(&coef, sigma_factor, post.lags, history, horizon, rng)
            }
            Sampler::Sv { draws, b0_inv } => {
                let which = index % draws.draws.len();
                let d = &draws.draws[which];
                let n = d.coef.ncols();
                let p = draws.lags;
                let t_last = d.h.nrows() - 1;
                let mut h_cur: Vec<f64> = (0..n).map(|i| d.h[(t_last, i)]).collect();
                let mut buf = history.rows(history.nrows() - p, p).into_owned();
                let mut out = Mat::zeros(horizon, n);
                for step in 0..horizon {
                    for i in 0..n {
                        let e = gauss(rng);
                        h_cur[i] = d.mu[i] + d.phi[i] * (h_cur[i] - d.mu[i]) + d.sigma2[i].sqrt() * e;
                    }
                    let z = Vector::from_iterator(
                        n,
                        (0..n).map(|i| (h_cur[i] / 2.0).exp() * gauss(rng)),
                    );
                    let u = &b0_inv[which] * z;
                    let mean = var_step(&d.coef, &last_regressors(&buf, p));
                    let y: Vec<f64> = (0..n).map(|i| mean[i] + u[i]).collect();
                    out.row_mut(step).copy_from_slice(&y);
                    push_row(&mut buf, &y);
                }
                out
            }
        };
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence(format!("non-finite predictive path in draw {index}")));
        }
        Ok(out)
    }
}

fn simulate_var(coef: &Mat, sigma_factor: &Mat, p: usize, history: &Mat, horizon: usize, rng: &mut JobRng) -> Mat {
    let n = coef.ncols();
    let mut buf = history.rows(history.nrows() - p, p).into_owned();
    let mut out = Mat::zeros(horizon, n);
    for step in 0..horizon {
        let mean = var_step(coef, &last_regressors(&buf, p));
        let u = sigma_factor * normals(rng, n);
        let y: Vec<f64> = (0..n).map(|i| mean[i] + u[i]).collect();
        out.row_mut(step).copy_from_slice(&y);
        push_row(&mut buf, &y);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{fit_bar, fit_rw, NaturalConjugatePrior, RandomWalkFit, SvDraw};

    fn rw(drift: f64, sigma2: f64, with_drift: bool) -> ModelPosterior {
        ModelPosterior::RandomWalk(RandomWalkFit {
            drift,
            sigma2,
            with_drift,
        })
    }

    fn ar1(phi: f64) -> ModelPosterior {
        let mut coef = Mat::zeros(2, 1);
        coef[(1, 0)] = phi;
        ModelPosterior::Conjugate(ConjugatePosterior {
            coef_mean: coef,
            coef_row_cov: Mat::zeros(2, 2),
            sigma_scale: Mat::identity(1, 1),
            sigma_dof: 10.0,
            lags: 1,
        })
    }

    #[test]
    fn rw_forecasts_no_change() {
        let f = iterate_point_forecast(&rw(0.3, 1.0, false), &Mat::from_element(5, 1, 0.2), 6).unwrap();
        assert!(f.iter().all(|v| *v == 0.0));
        let levels = to_levels(100f64.ln(), f.column(0).as_slice()).unwrap();
        assert!(levels.iter().all(|l| (l - 100.0).abs() < 1e-12));
    }

    #[test]
    fn drift_accumulates() {
        let fit = fit_rw(&[0.0, 0.1, 0.2, 0.3], true).unwrap();
        let f = iterate_point_forecast(&ModelPosterior::RandomWalk(fit), &Mat::zeros(3, 1), 4).unwrap();
        let levels = to_levels(0.3, f.column(0).as_slice()).unwrap();
        for (h, l) in levels.iter().enumerate() {
            assert!((l.ln() - (0.3 + 0.1 * (h + 1) as f64)).abs() < 1e-12);
        }
    }

    #[test]
    fn ar1_decays_geometrically() {
        let hist = Mat::from_column_slice(3, 1, &[0.0, 0.7, 0.2]);
        let f = iterate_point_forecast(&ar1(0.5), &hist, 3).unwrap();
        assert_eq!(f.column(0).as_slice(), &[0.1, 0.05, 0.025]);
    }

    #[test]
    fn guard_stops_explosive_paths() {
        let hist = Mat::from_column_slice(1, 1, &[1.0]);
        assert!(matches!(iterate_point_forecast(&ar1(3.0), &hist, 5), Err(Error::Divergence(_))));
    }

    #[test]
    fn level_examples() {
        let l = to_levels(100f64.ln(), &[0.01, 0.01]).unwrap();
        assert!((l[0] - 100.0 * 0.01f64.exp()).abs() < 1e-10);
        assert!((l[1] - 100.0 * 0.02f64.exp()).abs() < 1e-10);
        assert!((l[0] - 101.00501670841679).abs() < 1e-9);
        assert!(to_levels(0.0, &[800.0]).is_err());
        assert!(to_levels(f64::NAN, &[0.0]).is_err());
    }

    #[test]
    fn sign_examples() {
        assert_eq!(sign_forecast(105.0, 100.0), 1);
        assert_eq!(sign_forecast(100.0, 100.0), 0);
        assert_eq!(sign_forecast(99.999, 100.0), -1);
    }

    #[test]
    fn quantile_grid_examples() {
        let g = quantile_grid(&[1.0], 20).unwrap();
        let alphas = g.alphas();
        assert_eq!(alphas.len(), 19);
        assert!((alphas[0] - 0.05).abs() < 1e-15 && (alphas[18] - 0.95).abs() < 1e-15);
        assert!(g.values.iter().all(|v| *v == 1.0));
        let draws: Vec<f64> = (1..=100).map(f64::from).collect();
        let g = quantile_grid(&draws, 2).unwrap();
        assert_eq!(g.values, vec![50.5]);
        assert!(quantile_grid(&[], 20).is_err());
        assert!(quantile_grid(&[1.0], 1).is_err());
    }

    #[test]
    fn degenerate_rw_draws_equal_point() {
        let post = rw(0.01, 0.0, true);
        let hist = Mat::zeros(3, 1);
        let d = simulate_predictive(&post, &hist, 4, 500, 1).unwrap();
        let point = iterate_point_forecast(&post, &hist, 4).unwrap();
        assert!(d.paths.iter().all(|p| p == &point));
    }

    #[test]
    fn rw_variance_scales_with_horizon() {
        let sigma2 = 0.04;
        let post = rw(0.0, sigma2, false);
        let d = simulate_predictive(&post, &Mat::zeros(2, 1), 3, 100_000, 5).unwrap();
        let lv = d.levels(0, 0.0).unwrap();
        for (h, draws) in lv.iter().enumerate() {
            let logs: Vec<f64> = draws.iter().map(|v| v.ln()).collect();
            let var = stats::sample_variance(&logs);
            let expect = (h + 1) as f64 * sigma2;
            assert!((var / expect - 1.0).abs() < 0.05, "h={} var={var}", h + 1);
        }
    }

    #[test]
    fn simulation_is_reproducible_and_needs_enough_draws() {
        let y: Vec<f64> = (0..80).map(|i| ((i * 7919) % 13) as f64 / 13.0 - 0.5).collect();
        let sigma2 = stats::sample_variance(&y);
        let fit = fit_bar(&y, 1, &NaturalConjugatePrior::minnesota(sigma2, 1, &Default::default())).unwrap();
        let post = ModelPosterior::Conjugate(fit);
        let hist = Mat::from_column_slice(y.len(), 1, &y);
        let a = simulate_predictive(&post, &hist, 3, 600, 9).unwrap();
        let b = simulate_predictive(&post, &hist, 3, 600, 9).unwrap();
        assert_eq!(a.paths, b.paths);
        assert!(simulate_predictive(&post, &hist, 3, 100, 9).is_err());
    }

    #[test]
    fn sv_without_vol_noise_keeps_constant_variance() {
        let mu = -1.0;
        let draw = SvDraw {
            coef: Mat::zeros(2, 1),
            b0: Mat::identity(1, 1),
            h: Mat::from_element(5, 1, 3.0),
            mu: vec![mu],
            phi: vec![0.0],
            sigma2: vec![0.0],
        };
        let post = ModelPosterior::Sv(SvDraws {
            draws: vec![draw],
            lags: 1,
            seed: 0,
        });
        let d = simulate_predictive(&post, &Mat::zeros(5, 1), 3, 20_000, 2).unwrap();
        for h in 1..=3 {
            let v = stats::sample_variance(&d.dlog(0, h));
            assert!((v / mu.exp() - 1.0).abs() < 0.05, "h={h} var={v}");
        }
    }

    #[test]
    fn ar1_draws_center_on_point_path() {
        let post = ar1(0.5);
        let hist = Mat::from_column_slice(2, 1, &[0.0, 0.4]);
        let d = simulate_predictive(&post, &hist, 2, 20_000, 3).unwrap();
        assert!((stats::mean(&d.dlog(0, 1)) - 0.2).abs() < 0.02);
        assert!((stats::mean(&d.dlog(0, 2)) - 0.1).abs() < 0.02);
    }
}
