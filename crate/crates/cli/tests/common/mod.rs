//! Reference implementations written from the textbook formulas, kept free
//! of calls into the library's numerical code.

#![allow(dead_code)]

use carbon_forecast::linalg::Mat;

/// Dense Chow-Lin GLS: monthly `X beta + V C' (C V C')^-1 (y_a - C X beta)`
/// with AR(1) covariance `V_ij = rho^|i-j| / (1 - rho^2)` and annual sums.
pub fn chow_lin_gls(annual: &[f64], indicator: &[f64], rho: f64, constant: bool) -> (Vec<f64>, Vec<f64>) {
    let months = indicator.len();
    let years = annual.len();
    assert_eq!(months, 12 * years);
    let k = if constant { 2 } else { 1 };
    let x = Mat::from_fn(months, k, |i, j| if constant && j == 0 { 1.0 } else { indicator[i] });
    let v = Mat::from_fn(months, months, |i, j| {
        rho.powi((i as i32 - j as i32).abs()) / (1.0 - rho * rho)
    });
    let c = Mat::from_fn(years, months, |a, i| if i / 12 == a { 1.0 } else { 0.0 });
    let ya = Mat::from_column_slice(years, 1, annual);
    let va = &c * &v * c.transpose();
    let va_inv = va.try_inverse().expect("aggregated covariance is invertible");
    let xa = &c * &x;
    let lhs = xa.transpose() * &va_inv * &xa;
    let beta = lhs.try_inverse().expect("GLS moment matrix is invertible") * xa.transpose() * &va_inv * &ya;
    let resid = &ya - &xa * &beta;
    let monthly = &x * &beta + &v * c.transpose() * &va_inv * resid;
    (monthly.iter().copied().collect(), beta.iter().copied().collect())
}

/// Pinball form of the quantile score: `2 alpha (R - q)` when the
/// realization lies above `q`, `2 (1 - alpha) (q - R)` otherwise.
pub fn pinball(alpha: f64, q: f64, realized: f64) -> f64 {
    if realized > q {
        2.0 * alpha * (realized - q)
    } else {
        2.0 * (1.0 - alpha) * (q - realized)
    }
}

/// Weighted quantile CRPS by direct summation over `alpha_j = j / J`.
pub fn qcrps_brute(quantiles: &[f64], realized: f64, weight: impl Fn(f64) -> f64) -> f64 {
    let j = quantiles.len() + 1;
    let mut total = 0.0;
    for (idx, q) in quantiles.iter().enumerate() {
        let alpha = (idx + 1) as f64 / j as f64;
        total += weight(alpha) * pinball(alpha, *q, realized);
    }
    total / (j - 1) as f64
}

/// OLS of `y` on `x` through the normal equations.
pub fn ols(x: &Mat, y: &Mat) -> Mat {
    let xtx = x.transpose() * x;
    xtx.lu().solve(&(x.transpose() * y)).expect("full-rank design")
}

/// Design with rows `[1, y_{t-1}', ..., y_{t-p}']` for `t = p..T`.
pub fn lagged_design(y: &Mat, p: usize) -> (Mat, Mat) {
    let (t, n) = y.shape();
    let x = Mat::from_fn(t - p, 1 + n * p, |r, c| {
        if c == 0 {
            1.0
        } else {
            let lag = (c - 1) / n + 1;
            y[(r + p - lag, (c - 1) % n)]
        }
    });
    let yy = Mat::from_fn(t - p, n, |r, c| y[(r + p, c)]);
    (x, yy)
}

/// One-sample t statistic `mean / (s / sqrt(n))`.
pub fn t_statistic(d: &[f64]) -> f64 {
    let n = d.len() as f64;
    let m = d.iter().sum::<f64>() / n;
    let s2 = d.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
    m / (s2 / n).sqrt()
}

/// Pesaran-Timmermann statistic from raw direction pairs.
pub fn pt_direct(pairs: &[(bool, bool)]) -> f64 {
    let n = pairs.len() as f64;
    let hits = pairs.iter().filter(|(f, r)| f == r).count() as f64;
    let fx = pairs.iter().filter(|(f, _)| *f).count() as f64 / n;
    let ry = pairs.iter().filter(|(_, r)| *r).count() as f64 / n;
    let p = hits / n;
    let ps = ry * fx + (1.0 - ry) * (1.0 - fx);
    let var_p = ps * (1.0 - ps) / n;
    let var_ps = (2.0 * ry - 1.0).powi(2) * fx * (1.0 - fx) / n
        + (2.0 * fx - 1.0).powi(2) * ry * (1.0 - ry) / n
        + 4.0 * ry * fx * (1.0 - ry) * (1.0 - fx) / (n * n);
    (p - ps) / (var_p - var_ps).sqrt()
}

pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
