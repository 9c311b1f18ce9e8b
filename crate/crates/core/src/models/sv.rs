//! BVAR with Cholesky multivariate stochastic volatility.
//!
//! `y_t = B' x_t + u_t`, `B0 u_t = e_t`, `e_t ~ N(0, diag(exp(h_t)))`, so
//! `Sigma_t^-1 = B0' D_t^-1 B0` with `B0` unit lower triangular. Each log
//! variance follows `h_{i,t} = mu_i + phi_i (h_{i,t-1} - mu_i) + eps_{i,t}`
//! with a stationary initial condition.
//!
//! One Gibbs sweep draws
//! 1. `vec(B)` from its Gaussian conditional (GLS with time-varying weights),
//! 2. the free rows of `B0` by weighted regressions of each residual on the
//!    preceding ones,
//! 3. each `h_i` path through the 7-component mixture approximation of
//!    `log chi2_1` and forward-filtering backward-sampling,
//! 4. `mu_i` (normal), `phi_i` (truncated normal proposal with a
//!    Metropolis correction for the initial condition) and `sigma2_i`
//!    (inverse gamma).

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat, Vector};
use crate::models::conjugate::{minnesota_moments, minnesota_variance};
use crate::models::{var_design, MinnesotaPrior, VarSpec};
use crate::rng::JobRng;

/// Mixture weights, means and variances approximating `log chi2_1`.
const KSC_PROB: [f64; 7] = [0.00730, 0.10556, 0.00002, 0.04395, 0.34001, 0.24566, 0.25750];
const KSC_MEAN: [f64; 7] = [
    -10.12999, -3.97281, -8.56686, 2.77786, 0.61942, 1.79518, -1.08819,
];
const KSC_VAR: [f64; 7] = [5.79596, 2.61369, 5.17950, 0.16735, 0.64009, 0.34023, 1.26261];
const KSC_OFFSET: f64 = 1.2704;

/// Priors and guards for the volatility block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvConfig {
    pub phi_mean: f64,
    pub phi_sd: f64,
    /// `phi` is restricted to `(-phi_bound, phi_bound)`.
    pub phi_bound: f64,
    pub mu_mean: f64,
    pub mu_var: f64,
    pub sigma2_shape: f64,
    pub sigma2_scale: f64,
    /// Prior variance of the free `B0` elements (zero mean).
    pub b0_var: f64,
    /// Abort when any log-variance leaves `[-h_guard, h_guard]`.
    pub h_guard: f64,
}

impl Default for SvConfig {
    fn default() -> Self {
        Self {
            phi_mean: 0.95,
            phi_sd: 0.04,
            phi_bound: 0.995,
            mu_mean: 0.0,
            mu_var: 10.0,
            sigma2_shape: 5.0,
            sigma2_scale: 0.16,
            b0_var: 10.0,
            h_guard: 50.0,
        }
    }
}

/// MCMC run length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvRun {
    pub draws: usize,
    pub burn: usize,
    pub thin: usize,
}

impl Default for SvRun {
    fn default() -> Self {
        Self {
            draws: 5000,
            burn: 2000,
            thin: 1,
        }
    }
}

/// One retained draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvDraw {
    /// `k x n` coefficients.
    pub coef: Mat,
    /// Unit lower-triangular impact matrix.
    pub b0: Mat,
    /// `T x n` log-variance paths over the estimation sample.
    pub h: Mat,
    pub mu: Vec<f64>,
    pub phi: Vec<f64>,
    pub sigma2: Vec<f64>,
}

impl SvDraw {
    /// `Sigma_t = B0^-1 D_t B0^-T` at row `t` of the path.
    pub fn sigma_at(&self, t: usize) -> Mat {
        let n = self.b0.nrows();
        let b0_inv = unit_lower_inverse(&self.b0);
        let d = Mat::from_diagonal(&Vector::from_iterator(n, (0..n).map(|i| self.h[(t, i)].exp())));
        linalg::symmetrize(&(&b0_inv * d * b0_inv.transpose()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvDraws {
    pub draws: Vec<SvDraw>,
    pub lags: usize,
    pub seed: u64,
}

impl SvDraws {
    pub fn n(&self) -> usize {
        self.draws[0].coef.ncols()
    }

    pub fn draw_count(&self) -> usize {
        self.draws.len()
    }

    pub fn coef_mean(&self) -> Mat {
        let mut acc = Mat::zeros(self.draws[0].coef.nrows(), self.n());
        for d in &self.draws {
            acc += &d.coef;
        }
        acc / self.draws.len() as f64
    }

    /// Posterior mean of `h_{i,t}` paths.
    pub fn h_mean(&self) -> Mat {
        let mut acc = Mat::zeros(self.draws[0].h.nrows(), self.n());
        for d in &self.draws {
            acc += &d.h;
        }
        acc / self.draws.len() as f64
    }

    /// Posterior mean of `exp(h_{i,t})`.
    pub fn vol_mean(&self) -> Mat {
        let mut acc = Mat::zeros(self.draws[0].h.nrows(), self.n());
        for d in &self.draws {
            acc += d.h.map(f64::exp);
        }
        acc / self.draws.len() as f64
    }

    pub fn b0_mean(&self) -> Mat {
        let n = self.n();
        let mut acc = Mat::zeros(n, n);
        for d in &self.draws {
            acc += &d.b0;
        }
        acc / self.draws.len() as f64
    }
}

/// Inverse of a unit lower-triangular matrix by forward substitution.
pub(crate) fn unit_lower_inverse(b0: &Mat) -> Mat {
    let n = b0.nrows();
    let mut inv = Mat::identity(n, n);
    for col in 0..n {
        for row in col + 1..n {
            let s: f64 = (col..row).map(|k| b0[(row, k)] * inv[(k, col)]).sum();
            inv[(row, col)] = -s;
        }
    }
    inv
}

fn std_normal(rng: &mut JobRng) -> f64 {
    StandardNormal.sample(rng)
}

/// `mean + L^-T z` with `L L' = precision`: a draw from `N(mean, precision^-1)`.
fn draw_from_precision(precision: &Mat, rhs: &Vector, rng: &mut JobRng, ctx: &str) -> Result<Vector> {
    let chol = linalg::cholesky(precision, ctx)?;
    let mean = chol.solve(rhs);
    let z = Vector::from_iterator(rhs.len(), (0..rhs.len()).map(|_| std_normal(rng)));
    let dev = chol
        .l()
        .transpose()
        .solve_upper_triangular(&z)
        .ok_or_else(|| Error::Singular(ctx.to_string()))?;
    Ok(mean + dev)
}

fn inverse_gamma(shape: f64, scale: f64, rng: &mut JobRng) -> Result<f64> {
    let g = Gamma::new(shape, 1.0 / scale)
        .map_err(|e| Error::InvalidArgument(format!("inverse-gamma ({shape}, {scale}): {e}")))?;
    Ok(1.0 / g.sample(rng))
}

struct State {
    coef: Mat,
    b0: Mat,
    h: Mat,
    mu: Vec<f64>,
    phi: Vec<f64>,
    sigma2: Vec<f64>,
}

/// Gibbs sampler for the BVAR-SV model; reproducible for a given `seed`.
pub fn fit_bvar_sv(
    y: &Mat,
    spec: &VarSpec,
    prior: &MinnesotaPrior,
    cfg: &SvConfig,
    run: SvRun,
    seed: u64,
) -> Result<SvDraws> {
    spec.validate()?;
    prior.validate()?;
    let (t_all, n) = y.shape();
    if n != spec.n {
        return Err(Error::Dimension(format!("data has {n} columns, spec has {}", spec.n)));
    }
    if t_all <= spec.n * spec.p + 10 {
        return Err(Error::InsufficientData(format!(
            "SV-BVAR needs more than {} observations, got {t_all}",
            spec.n * spec.p + 10
        )));
    }
    if run.draws == 0 || run.burn == 0 || run.thin == 0 {
        return Err(Error::InvalidArgument("draws, burn and thin must be positive".into()));
    }
    if !(cfg.phi_bound > 0.0 && cfg.phi_bound < 1.0) {
        return Err(Error::InvalidArgument("phi_bound must lie in (0, 1)".into()));
    }
    let mut rng = crate::rng::seeded(seed);
    let (x, yy) = var_design(y, spec.p)?;
    let te = x.nrows();
    let k = spec.k();
    let moments = minnesota_moments(y, spec, prior)?;

    // prior for vec(B), equation blocks of length k
    let nk = n * k;
    let mut prior_prec = vec![0.0; nk];
    let mut prior_mean = vec![0.0; nk];
    for eq in 0..n {
        for row in 0..k {
            prior_prec[eq * k + row] = 1.0 / minnesota_variance(row, eq, n, &moments.sigma2, prior);
            prior_mean[eq * k + row] = moments.b0[(row, eq)];
        }
    }

    let coef0 = linalg::ols(&x, &yy).unwrap_or_else(|_| moments.b0.clone());
    let resid0 = &yy - &x * &coef0;
    let mut state = State {
        coef: coef0,
        b0: Mat::identity(n, n),
        h: Mat::from_fn(te, n, |_, i| {
            let c = resid0.column(i);
            (c.norm_squared() / te as f64).max(1e-12).ln()
        }),
        mu: (0..n)
            .map(|i| (resid0.column(i).norm_squared() / te as f64).max(1e-12).ln())
            .collect(),
        phi: vec![cfg.phi_mean.clamp(-cfg.phi_bound, cfg.phi_bound); n],
        sigma2: vec![cfg.sigma2_scale / (cfg.sigma2_shape - 1.0).max(1.0); n],
    };

    let total = run.burn + run.draws * run.thin;
    let mut kept = Vec::with_capacity(run.draws);
    for iter in 0..total {
        draw_coefficients(&mut state, &x, &yy, &prior_prec, &prior_mean, &mut rng)?;
        let resid = &yy - &x * &state.coef;
        draw_b0(&mut state, &resid, cfg, &mut rng)?;
        let structural = &resid * state.b0.transpose();
        for i in 0..n {
            let e: Vec<f64> = structural.column(i).iter().copied().collect();
            let mut h: Vec<f64> = state.h.column(i).iter().copied().collect();
            draw_log_vol(&e, &mut h, state.mu[i], state.phi[i], state.sigma2[i], &mut rng);
            if let Some(bad) = h.iter().position(|v| v.abs() > cfg.h_guard || !v.is_finite()) {
                return Err(Error::Divergence(format!(
                    "log-volatility of variable {i} reached {} at t={bad} in sweep {iter} (mu={:.3}, phi={:.3}, sigma2={:.4})",
                    h[bad], state.mu[i], state.phi[i], state.sigma2[i]
                )));
            }
            let (mu, phi, s2) = draw_vol_params(&h, state.mu[i], state.phi[i], state.sigma2[i], cfg, &mut rng)?;
            state.mu[i] = mu;
            state.phi[i] = phi;
            state.sigma2[i] = s2;
            state.h.set_column(i, &Vector::from_vec(h));
        }
        if iter >= run.burn && (iter - run.burn).is_multiple_of(run.thin) {
            kept.push(SvDraw {
                coef: state.coef.clone(),
                b0: state.b0.clone(),
                h: state.h.clone(),
                mu: state.mu.clone(),
                phi: state.phi.clone(),
                sigma2: state.sigma2.clone(),
            });
        }
    }
    Ok(SvDraws {
        draws: kept,
        lags: spec.p,
        seed,
    })
}

fn draw_coefficients(
    state: &mut State,
    x: &Mat,
    yy: &Mat,
    prior_prec: &[f64],
    prior_mean: &[f64],
    rng: &mut JobRng,
) -> Result<()> {
    let (te, k) = x.shape();
    let n = yy.ncols();
    let nk = n * k;
    let mut precision = Mat::zeros(nk, nk);
    let mut rhs = Vector::zeros(nk);
    for i in 0..nk {
        precision[(i, i)] = prior_prec[i];
        rhs[i] = prior_prec[i] * prior_mean[i];
    }
    // Sigma_t^-1 = sum_l w_{l,t} b_l b_l' with b_l the l-th row of B0
    for l in 0..n {
        let w: Vec<f64> = (0..te).map(|t| (-state.h[(t, l)]).exp()).collect();
        let mut xwx = Mat::zeros(k, k);
        for t in 0..te {
            let row = x.row(t);
            for a in 0..k {
                let wa = w[t] * row[a];
                for b in a..k {
                    xwx[(a, b)] += wa * row[b];
                }
            }
        }
        for a in 0..k {
            for b in 0..a {
                xwx[(a, b)] = xwx[(b, a)];
            }
        }
        // x_t * w_t * (b_l' y_t)
        let mut xwy = Vector::zeros(k);
        for t in 0..te {
            let by: f64 = (0..n).map(|j| state.b0[(l, j)] * yy[(t, j)]).sum();
            for a in 0..k {
                xwy[a] += w[t] * by * x[(t, a)];
            }
        }
        for i in 0..n {
            let bi = state.b0[(l, i)];
            if bi == 0.0 {
                continue;
            }
            for a in 0..k {
                rhs[i * k + a] += bi * xwy[a];
            }
            for j in 0..n {
                let bij = bi * state.b0[(l, j)];
                if bij == 0.0 {
                    continue;
                }
                for a in 0..k {
                    for b in 0..k {
                        precision[(i * k + a, j * k + b)] += bij * xwx[(a, b)];
                    }
                }
            }
        }
    }
    let beta = draw_from_precision(&precision, &rhs, rng, "SV coefficient precision")?;
    state.coef = Mat::from_column_slice(k, n, beta.as_slice());
    Ok(())
}

fn draw_b0(state: &mut State, resid: &Mat, cfg: &SvConfig, rng: &mut JobRng) -> Result<()> {
    let (te, n) = resid.shape();
    for i in 1..n {
        // u_i = -sum_{j<i} b0_ij u_j + e_i,  Var(e_i,t) = exp(h_i,t)
        let mut precision = Mat::identity(i, i) / cfg.b0_var;
        let mut rhs = Vector::zeros(i);
        for t in 0..te {
            let w = (-state.h[(t, i)]).exp();
            for a in 0..i {
                let za = -resid[(t, a)];
                rhs[a] += w * za * resid[(t, i)];
                for b in 0..i {
                    precision[(a, b)] += w * za * -resid[(t, b)];
                }
            }
        }
        let row = draw_from_precision(&precision, &rhs, rng, "B0 row precision")?;
        for a in 0..i {
            state.b0[(i, a)] = row[a];
        }
    }
    Ok(())
}

/// Mixture-indicator draw followed by forward-filter backward-sample of one
/// log-variance path.
fn draw_log_vol(e: &[f64], h: &mut [f64], mu: f64, phi: f64, sigma2: f64, rng: &mut JobRng) {
    let te = e.len();
    let mean_sq = e.iter().map(|v| v * v).sum::<f64>() / te as f64;
    let offset = (1e-8 * mean_sq).max(1e-300);
    let ystar: Vec<f64> = e.iter().map(|v| (v * v + offset).ln()).collect();

    let mut obs = vec![0.0; te];
    let mut obs_var = vec![0.0; te];
    let mut probs = [0.0; 7];
    for t in 0..te {
        let mut total = 0.0;
        for j in 0..7 {
            let m = h[t] + KSC_MEAN[j] - KSC_OFFSET;
            let d = ystar[t] - m;
            probs[j] = KSC_PROB[j] * (-0.5 * d * d / KSC_VAR[j]).exp() / KSC_VAR[j].sqrt();
            total += probs[j];
        }
        let mut u: f64 = rng.random::<f64>() * total;
        let mut comp = 6;
        for (j, p) in probs.iter().enumerate() {
            if u < *p {
                comp = j;
                break;
            }
            u -= p;
        }
        if total <= 0.0 || !total.is_finite() {
            // far tail: pick the widest component
            comp = 0;
        }
        obs[t] = ystar[t] - KSC_MEAN[comp] + KSC_OFFSET;
        obs_var[t] = KSC_VAR[comp];
    }

    let mut af = vec![0.0; te];
    let mut pf = vec![0.0; te];
    let mut a = mu;
    let mut p = sigma2 / (1.0 - phi * phi);
    for t in 0..te {
        let gain = p / (p + obs_var[t]);
        af[t] = a + gain * (obs[t] - a);
        pf[t] = p * (1.0 - gain);
        a = mu + phi * (af[t] - mu);
        p = phi * phi * pf[t] + sigma2;
    }
    h[te - 1] = af[te - 1] + pf[te - 1].sqrt() * std_normal(rng);
    for t in (0..te - 1).rev() {
        let pred_var = phi * phi * pf[t] + sigma2;
        let g = pf[t] * phi / pred_var;
        let mean = af[t] + g * (h[t + 1] - mu - phi * (af[t] - mu));
        let var = (pf[t] - g * g * pred_var).max(0.0);
        h[t] = mean + var.sqrt() * std_normal(rng);
    }
}

fn draw_vol_params(
    h: &[f64],
    _mu: f64,
    phi: f64,
    sigma2: f64,
    cfg: &SvConfig,
    rng: &mut JobRng,
) -> Result<(f64, f64, f64)> {
    let te = h.len();

    // mu | phi, sigma2, h
    let prec = 1.0 / cfg.mu_var
        + (1.0 - phi * phi) / sigma2
        + (te - 1) as f64 * (1.0 - phi).powi(2) / sigma2;
    let tail: f64 = (1..te).map(|t| h[t] - phi * h[t - 1]).sum();
    let num = cfg.mu_mean / cfg.mu_var + (1.0 - phi * phi) * h[0] / sigma2 + (1.0 - phi) * tail / sigma2;
    let mu = num / prec + std_normal(rng) / prec.sqrt();

    // phi | mu, sigma2, h: conjugate proposal from t >= 2, MH on the initial condition
    let prior_prec = 1.0 / cfg.phi_sd.powi(2);
    let sxx: f64 = (1..te).map(|t| (h[t - 1] - mu).powi(2)).sum();
    let sxy: f64 = (1..te).map(|t| (h[t - 1] - mu) * (h[t] - mu)).sum();
    let post_prec = prior_prec + sxx / sigma2;
    let post_mean = (cfg.phi_mean * prior_prec + sxy / sigma2) / post_prec;
    let post_sd = 1.0 / post_prec.sqrt();
    let mut new_phi = phi;
    for _ in 0..100 {
        let cand = post_mean + post_sd * std_normal(rng);
        if cand.abs() < cfg.phi_bound {
            let log_init = |f: f64| 0.5 * (1.0 - f * f).ln() - 0.5 * (1.0 - f * f) * (h[0] - mu).powi(2) / sigma2;
            if rng.random::<f64>().ln() < log_init(cand) - log_init(phi) {
                new_phi = cand;
            }
            break;
        }
    }
    let phi = new_phi;

    // sigma2 | mu, phi, h
    let mut ss = (1.0 - phi * phi) * (h[0] - mu).powi(2);
    for t in 1..te {
        ss += (h[t] - mu - phi * (h[t - 1] - mu)).powi(2);
    }
    let s2 = inverse_gamma(cfg.sigma2_shape + 0.5 * te as f64, cfg.sigma2_scale + 0.5 * ss, rng)?;
    Ok((mu, phi, s2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_lower_inverse_is_inverse() {
        let b0 = Mat::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.5, 1.0, 0.0, -0.3, 0.8, 1.0]);
        let inv = unit_lower_inverse(&b0);
        assert!((&b0 * inv - Mat::identity(3, 3)).abs().max() < 1e-14);
    }

    #[test]
    fn mixture_matches_log_chi2_moments() {
        // log chi2_1 has mean -1.2704 and variance pi^2 / 2
        let mean: f64 = (0..7).map(|j| KSC_PROB[j] * (KSC_MEAN[j] - KSC_OFFSET)).sum();
        let second: f64 = (0..7)
            .map(|j| KSC_PROB[j] * (KSC_VAR[j] + (KSC_MEAN[j] - KSC_OFFSET).powi(2)))
            .sum();
        assert!((mean + 1.2704).abs() < 1e-3);
        let var = second - mean * mean;
        assert!((var - std::f64::consts::PI.powi(2) / 2.0).abs() < 0.05, "var {var}");
        assert!((KSC_PROB.iter().sum::<f64>() - 1.0).abs() < 1e-4);
    }

    use rand::SeedableRng;

    fn corr(a: &[f64], b: &[f64]) -> f64 {
        crate::stats::correlation(a, b)
    }

    /// n = 1 SV series with zero conditional mean; returns (y, true h).
    fn simulate_sv(mu: f64, phi: f64, sigma: f64, t: usize, seed: u64) -> (Mat, Vec<f64>) {
        let mut rng = JobRng::seed_from_u64(seed);
        let mut h = Vec::with_capacity(t);
        let mut y = Vec::with_capacity(t);
        let mut cur = mu + sigma / (1.0 - phi * phi).sqrt() * std_normal(&mut rng);
        for _ in 0..t {
            h.push(cur);
            y.push((cur / 2.0).exp() * std_normal(&mut rng));
            cur = mu + phi * (cur - mu) + sigma * std_normal(&mut rng);
        }
        (Mat::from_column_slice(t, 1, &y), h)
    }

    fn short_run() -> SvRun {
        SvRun {
            draws: 600,
            burn: 400,
            thin: 1,
        }
    }

    #[test]
    fn recovers_log_volatility_path() {
        let spec = VarSpec::new(vec!["y".into()], 1).unwrap();
        let mut hits = 0;
        for seed in 0..10 {
            let (y, h_true) = simulate_sv(-1.0, 0.95, 0.2, 800, 100 + seed);
            let fit = fit_bvar_sv(&y, &spec, &MinnesotaPrior::default(), &SvConfig::default(), short_run(), seed).unwrap();
            let h_hat: Vec<f64> = fit.h_mean().column(0).iter().copied().collect();
            if corr(&h_hat, &h_true[1..]) > 0.6 {
                hits += 1;
            }
        }
        assert!(hits >= 8, "{hits}/10 seeds above 0.6");
    }

    #[test]
    fn homoskedastic_volatility_is_flat() {
        let spec = VarSpec::new(vec!["y".into()], 1).unwrap();
        let (y, _) = simulate_sv(0.0, 0.0, 0.0, 400, 7);
        let fit = fit_bvar_sv(&y, &spec, &MinnesotaPrior::default(), &SvConfig::default(), short_run(), 3).unwrap();
        let vol = fit.vol_mean();
        let col = vol.column(0);
        let ratio = col.max() / col.min();
        assert!(ratio < 2.0, "ratio {ratio}");
    }

    #[test]
    fn recovers_impact_matrix_and_keeps_sigma_pd() {
        let mut rng = JobRng::seed_from_u64(9);
        let t = 600;
        let mut y = Mat::zeros(t, 2);
        for r in 0..t {
            let e1 = std_normal(&mut rng);
            let e2 = 0.3 * std_normal(&mut rng);
            // B0 u = e with B0 = [[1, 0], [0.5, 1]] so u2 = e2 - 0.5 u1
            y[(r, 0)] = e1;
            y[(r, 1)] = e2 - 0.5 * e1;
        }
        let spec = VarSpec::new(vec!["a".into(), "b".into()], 1).unwrap();
        let fit = fit_bvar_sv(&y, &spec, &MinnesotaPrior::default(), &SvConfig::default(), short_run(), 5).unwrap();
        let b = fit.b0_mean()[(1, 0)];
        assert!((b - 0.5).abs() < 0.15, "b0 {b}");
        for d in fit.draws.iter().step_by(50) {
            assert_eq!(d.b0[(0, 1)], 0.0);
            assert_eq!(d.b0[(0, 0)], 1.0);
            for tt in [0, t / 2, t - 2] {
                assert!(linalg::cholesky(&d.sigma_at(tt), "test").is_ok());
            }
            assert!(d.phi.iter().all(|p| p.abs() < 1.0));
            assert!(d.sigma2.iter().all(|s| *s > 0.0));
        }
    }

    #[test]
    fn seed_fixes_every_draw() {
        let spec = VarSpec::new(vec!["y".into()], 1).unwrap();
        let (y, _) = simulate_sv(-1.0, 0.9, 0.3, 150, 1);
        let run = SvRun { draws: 50, burn: 20, thin: 1 };
        let a = fit_bvar_sv(&y, &spec, &MinnesotaPrior::default(), &SvConfig::default(), run, 77).unwrap();
        let b = fit_bvar_sv(&y, &spec, &MinnesotaPrior::default(), &SvConfig::default(), run, 77).unwrap();
        assert_eq!(a, b);
        let c = fit_bvar_sv(&y, &spec, &MinnesotaPrior::default(), &SvConfig::default(), run, 78).unwrap();
        assert_ne!(a.draws[0].h, c.draws[0].h);
    }

    #[test]
    fn rejects_short_samples() {
        let y = Mat::zeros(12, 1);
        let spec = VarSpec::new(vec!["y".into()], 1).unwrap();
        assert!(fit_bvar_sv(&y, &spec, &MinnesotaPrior::default(), &SvConfig::default(), SvRun::default(), 1).is_err());
    }
}
