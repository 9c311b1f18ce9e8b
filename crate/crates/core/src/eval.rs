//! Forecast scoring and tests of predictive ability.
//!
//! Point accuracy is measured by RMSFE relative to a benchmark and by the
//! success ratio of sign forecasts; densities by the quantile score averaged
//! over the `j/J` grid, optionally weighted towards the center or a tail.
//! Loss differentials `d_t = L(bench) - L(model)` are positive when the
//! model is more accurate.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::error::{Error, Result};
use crate::forecast::{ForecastRecord, QuantileGrid};
use crate::stats;
use crate::timeseries::MonthDate;

/// Region emphasised by the weighted quantile score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Center,
    Right,
    Left,
}

impl Region {
    pub const ALL: [Region; 3] = [Region::Center, Region::Right, Region::Left];

    pub fn weight(self, alpha: f64) -> f64 {
        match self {
            Region::Center => alpha * (1.0 - alpha),
            Region::Right => alpha * alpha,
            Region::Left => (1.0 - alpha) * (1.0 - alpha),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Region::Center => "center",
            Region::Right => "right",
            Region::Left => "left",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Region {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "center" | "centre" => Ok(Region::Center),
            "right" => Ok(Region::Right),
            "left" => Ok(Region::Left),
            other => Err(Error::InvalidArgument(format!("unknown region '{other}'"))),
        }
    }
}

pub fn rmsfe(errors: &[f64]) -> Result<f64> {
    if errors.is_empty() {
        return Err(Error::InsufficientData("RMSFE of an empty error set".into()));
    }
    Ok((errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt())
}

/// `RMSFE(model) / RMSFE(benchmark)`.
pub fn relative_rmsfe(model: &[f64], benchmark: &[f64]) -> Result<f64> {
    if model.len() != benchmark.len() {
        return Err(Error::Dimension(format!(
            "{} model errors against {} benchmark errors",
            model.len(),
            benchmark.len()
        )));
    }
    let b = rmsfe(benchmark)?;
    if b == 0.0 {
        return Err(Error::Degenerate("benchmark RMSFE is zero".into()));
    }
    Ok(rmsfe(model)? / b)
}

/// Share of exactly matching signs.
pub fn success_ratio(forecast: &[i8], realized: &[i8]) -> Result<f64> {
    if forecast.len() != realized.len() || forecast.is_empty() {
        return Err(Error::Dimension(format!(
            "success ratio needs equal non-empty lengths, got {} and {}",
            forecast.len(),
            realized.len()
        )));
    }
    let hits = forecast.iter().zip(realized).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / forecast.len() as f64)
}

/// Quantile score at level `alpha`: `2 [1(R <= q) - alpha] (q - R)`.
pub fn quantile_score(alpha: f64, q: f64, realized: f64) -> f64 {
    let ind = if realized <= q { 1.0 } else { 0.0 };
    2.0 * (ind - alpha) * (q - realized)
}

fn check_grid(grid: &QuantileGrid) -> Result<()> {
    if grid.j < 2 || grid.values.len() != grid.j - 1 {
        return Err(Error::Dimension(format!(
            "quantile grid mismatch: {} values for J = {}",
            grid.values.len(),
            grid.j
        )));
    }
    Ok(())
}

fn weighted_score(grid: &QuantileGrid, realized: f64, weight: impl Fn(f64) -> f64) -> Result<f64> {
    check_grid(grid)?;
    let sum: f64 = grid
        .alphas()
        .into_iter()
        .zip(&grid.values)
        .map(|(a, q)| weight(a) * quantile_score(a, *q, realized))
        .sum();
    Ok(sum / (grid.j - 1) as f64)
}

/// Quantile-based CRPS: mean quantile score over the grid.
pub fn qcrps(grid: &QuantileGrid, realized: f64) -> Result<f64> {
    weighted_score(grid, realized, |_| 1.0)
}

/// Quantile-weighted CRPS with region weights `nu(alpha)`.
pub fn weighted_qcrps(grid: &QuantileGrid, realized: f64, region: Region) -> Result<f64> {
    weighted_score(grid, realized, |a| region.weight(a))
}

/// Bartlett-kernel long-run variance of `d` with `lags` autocovariances,
/// weights `1 - k / (lags + 1)`, autocovariances with denominator `n`.
pub fn hac_variance(d: &[f64], lags: usize) -> f64 {
    let mut v = stats::autocovariance(d, 0);
    for k in 1..=lags.min(d.len().saturating_sub(1)) {
        let w = 1.0 - k as f64 / (lags + 1) as f64;
        v += 2.0 * w * stats::autocovariance(d, k);
    }
    v
}

/// Statistic and p-value of a test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

pub const DM_MIN_OBS: usize = 10;

/// Diebold-Mariano test of equal squared-error loss for `h`-step forecasts:
/// Bartlett HAC with `h - 1` lags, Harvey-Leybourne-Newbold small-sample
/// factor and a two-sided Student-t p-value with `n - 1` degrees of freedom.
pub fn dm_test(d: &[f64], h: usize) -> Result<TestResult> {
    let n = d.len();
    if n < DM_MIN_OBS {
        return Err(Error::InsufficientData(format!("DM test needs {DM_MIN_OBS} observations, got {n}")));
    }
    if h == 0 {
        return Err(Error::InvalidArgument("DM horizon must be at least 1".into()));
    }
    if d.iter().all(|v| *v == 0.0) {
        return Ok(TestResult {
            statistic: 0.0,
            p_value: 1.0,
        });
    }
    let nf = n as f64;
    let lrv = hac_variance(d, h - 1);
    if !(lrv > 0.0) {
        return Err(Error::Degenerate("loss differential has zero long-run variance".into()));
    }
    let hf = h as f64;
    let harvey = ((nf + 1.0 - 2.0 * hf + hf * (hf - 1.0) / nf) / nf).sqrt();
    let statistic = harvey * stats::mean(d) / (lrv / nf).sqrt();
    let t = StudentsT::new(0.0, 1.0, nf - 1.0).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let p_value = 2.0 * (1.0 - t.cdf(statistic.abs()));
    Ok(TestResult { statistic, p_value })
}

/// Pesaran-Timmermann test on the binary events "up" versus "not up".
pub fn pt_test(forecast: &[i8], realized: &[i8]) -> Result<TestResult> {
    if forecast.len() != realized.len() {
        return Err(Error::Dimension("PT test needs equal lengths".into()));
    }
    let n = forecast.len();
    if n < 10 {
        return Err(Error::InsufficientData(format!("PT test needs 10 observations, got {n}")));
    }
    let (mut n11, mut n10, mut n01, mut n00) = (0, 0, 0, 0);
    for (f, r) in forecast.iter().zip(realized) {
        match (*f > 0, *r > 0) {
            (true, true) => n11 += 1,
            (true, false) => n10 += 1,
            (false, true) => n01 += 1,
            (false, false) => n00 += 1,
        }
    }
    pt_from_table(n11, n10, n01, n00)
}

/// PT statistic from a 2x2 table: `n_fr` counts forecast `f` (1 = up)
/// against realization `r`.
pub fn pt_from_table(n11: usize, n10: usize, n01: usize, n00: usize) -> Result<TestResult> {
    let n = (n11 + n10 + n01 + n00) as f64;
    let p = (n11 + n00) as f64 / n;
    let px = (n11 + n10) as f64 / n;
    let py = (n11 + n01) as f64 / n;
    if px <= 0.0 || px >= 1.0 || py <= 0.0 || py >= 1.0 {
        return Err(Error::Degenerate(format!(
            "PT test undefined for degenerate margins (forecast up share {px}, realized up share {py})"
        )));
    }
    let p_star = py * px + (1.0 - py) * (1.0 - px);
    let v_p = p_star * (1.0 - p_star) / n;
    let v_p_star = (2.0 * py - 1.0).powi(2) * px * (1.0 - px) / n
        + (2.0 * px - 1.0).powi(2) * py * (1.0 - py) / n
        + 4.0 * py * px * (1.0 - py) * (1.0 - px) / (n * n);
    let var = v_p - v_p_star;
    if !(var > 0.0) {
        return Err(Error::Degenerate("PT variance is not positive".into()));
    }
    let statistic = (p - p_star) / var.sqrt();
    let p_value = 1.0 - Normal::standard().cdf(statistic);
    Ok(TestResult { statistic, p_value })
}

/// One-sided 5% critical values of the fluctuation test keyed by
/// `mu = m / n`.
pub const FLUCTUATION_CV_05: [(f64, f64); 9] = [
    (0.1, 3.176),
    (0.2, 2.938),
    (0.3, 2.770),
    (0.4, 2.624),
    (0.5, 2.475),
    (0.6, 2.352),
    (0.7, 2.248),
    (0.8, 2.080),
    (0.9, 1.975),
];

/// Linear interpolation in `mu`, clamped to the ends of the table.
pub fn interpolate_cv(table: &[(f64, f64)], mu: f64) -> Result<f64> {
    if table.is_empty() || table.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::InvalidArgument("critical-value table must be non-empty and increasing in mu".into()));
    }
    if mu <= table[0].0 {
        return Ok(table[0].1);
    }
    let last = table[table.len() - 1];
    if mu >= last.0 {
        return Ok(last.1);
    }
    let i = table.iter().position(|(m, _)| *m > mu).unwrap();
    let (m0, c0) = table[i - 1];
    let (m1, c1) = table[i];
    Ok(c0 + (c1 - c0) * (mu - m0) / (m1 - m0))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FluctuationOptions {
    /// Bartlett lags of the long-run variance.
    pub hac_lags: usize,
    /// Use the in-window long-run variance instead of the full-sample one.
    pub window_se: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluctuationResult {
    pub window: usize,
    pub mu: f64,
    /// Index in `d` of the first window center, `(m - 1) / 2`.
    pub first_center: usize,
    pub path: Vec<f64>,
    pub max_statistic: f64,
    pub cv_one_sided_5pct: f64,
    pub reject: bool,
}

/// Rolling centered-window fluctuation test of equal accuracy:
/// `F_t = sum_{window} d_j / (sqrt(m) sigma)` at every full window.
pub fn fluctuation_test(
    d: &[f64],
    m: usize,
    table: &[(f64, f64)],
    opts: FluctuationOptions,
) -> Result<FluctuationResult> {
    let n = d.len();
    if m == 0 || m.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("fluctuation window must be odd, got {m}")));
    }
    if m > n {
        return Err(Error::InvalidArgument(format!("fluctuation window {m} exceeds sample size {n}")));
    }
    let mu = m as f64 / n as f64;
    let cv = interpolate_cv(table, mu)?;
    let full_sd = hac_variance(d, opts.hac_lags).max(0.0).sqrt();
    let scale = (m as f64).sqrt();
    let path: Vec<f64> = (0..=n - m)
        .map(|s| {
            let w = &d[s..s + m];
            let sum: f64 = w.iter().sum();
            let sd = if opts.window_se {
                hac_variance(w, opts.hac_lags).max(0.0).sqrt()
            } else {
                full_sd
            };
            if sd > 0.0 {
                sum / (scale * sd)
            } else {
                0.0
            }
        })
        .collect();
    let max_statistic = path.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(FluctuationResult {
        window: m,
        mu,
        first_center: (m - 1) / 2,
        reject: max_statistic > cv,
        path,
        max_statistic,
        cv_one_sided_5pct: cv,
    })
}

/// Scores of one model at one horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub model: String,
    pub horizon: usize,
    pub n_obs: usize,
    pub rmsfe: f64,
    pub relative_rmsfe: f64,
    pub success_ratio: f64,
    pub qcrps: Option<f64>,
    pub wqcrps_center: Option<f64>,
    pub wqcrps_right: Option<f64>,
    pub wqcrps_left: Option<f64>,
    pub dm_statistic: Option<f64>,
    pub dm_p_value: Option<f64>,
    pub pt_statistic: Option<f64>,
    pub pt_p_value: Option<f64>,
}

type Cell<'a> = BTreeMap<MonthDate, &'a ForecastRecord>;

fn cells(records: &[ForecastRecord]) -> BTreeMap<(String, usize), Cell<'_>> {
    let mut out: BTreeMap<(String, usize), Cell<'_>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.realized.is_some()) {
        out.entry((r.model.clone(), r.horizon)).or_default().insert(r.target, r);
    }
    out
}

/// Squared-error loss differential `e_bench^2 - e_model^2` on common targets.
pub fn loss_differential(
    records: &[ForecastRecord],
    model: &str,
    benchmark: &str,
    horizon: usize,
) -> Result<(Vec<MonthDate>, Vec<f64>)> {
    let all = cells(records);
    let get = |id: &str| {
        all.get(&(id.to_string(), horizon))
            .ok_or_else(|| Error::InvalidArgument(format!("no realized records for model '{id}' at h={horizon}")))
    };
    let m = get(model)?;
    let b = get(benchmark)?;
    let mut dates = Vec::new();
    let mut d = Vec::new();
    for (target, rm) in m {
        if let Some(rb) = b.get(target) {
            dates.push(*target);
            d.push(rb.error().unwrap().powi(2) - rm.error().unwrap().powi(2));
        }
    }
    Ok((dates, d))
}

/// One [`ScoreReport`] per (model, horizon), relative to `benchmark`.
/// Test statistics that are undefined on the sample are left empty.
pub fn score_records(records: &[ForecastRecord], benchmark: &str) -> Result<Vec<ScoreReport>> {
    let all = cells(records);
    let horizons: BTreeSet<usize> = all.keys().map(|(_, h)| *h).collect();
    let mut out = Vec::new();
    for ((model, h), cell) in &all {
        let bench = all.get(&(benchmark.to_string(), *h)).ok_or_else(|| {
            Error::InvalidArgument(format!("benchmark '{benchmark}' has no realized records at h={h}"))
        })?;
        let common: Vec<(&ForecastRecord, &ForecastRecord)> = cell
            .iter()
            .filter_map(|(t, r)| bench.get(t).map(|b| (*r, *b)))
            .collect();
        if common.is_empty() {
            continue;
        }
        let e_m: Vec<f64> = common.iter().map(|(r, _)| r.error().unwrap()).collect();
        let e_b: Vec<f64> = common.iter().map(|(_, b)| b.error().unwrap()).collect();
        let signs_f: Vec<i8> = common.iter().map(|(r, _)| r.sign).collect();
        let signs_r: Vec<i8> = common.iter().map(|(r, _)| r.realized_sign().unwrap()).collect();
        let d: Vec<f64> = e_b.iter().zip(&e_m).map(|(b, m)| b * b - m * m).collect();

        let density = common.iter().all(|(r, _)| r.quantiles.is_some());
        let avg = |f: &dyn Fn(&QuantileGrid, f64) -> Result<f64>| -> Result<Option<f64>> {
            if !density {
                return Ok(None);
            }
            let mut s = 0.0;
            for (r, _) in &common {
                s += f(r.quantiles.as_ref().unwrap(), r.realized.unwrap())?;
            }
            Ok(Some(s / common.len() as f64))
        };
        let dm = if model == benchmark { None } else { dm_test(&d, *h).ok() };
        let pt = pt_test(&signs_f, &signs_r).ok();
        out.push(ScoreReport {
            model: model.clone(),
            horizon: *h,
            n_obs: common.len(),
            rmsfe: rmsfe(&e_m)?,
            relative_rmsfe: relative_rmsfe(&e_m, &e_b)?,
            success_ratio: success_ratio(&signs_f, &signs_r)?,
            qcrps: avg(&|g, r| qcrps(g, r))?,
            wqcrps_center: avg(&|g, r| weighted_qcrps(g, r, Region::Center))?,
            wqcrps_right: avg(&|g, r| weighted_qcrps(g, r, Region::Right))?,
            wqcrps_left: avg(&|g, r| weighted_qcrps(g, r, Region::Left))?,
            dm_statistic: dm.map(|t| t.statistic),
            dm_p_value: dm.map(|t| t.p_value),
            pt_statistic: pt.map(|t| t.statistic),
            pt_p_value: pt.map(|t| t.p_value),
        });
    }
    debug_assert!(out.iter().all(|r| horizons.contains(&r.horizon)));
    Ok(out)
}
