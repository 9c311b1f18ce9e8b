//! Chow-Lin temporal disaggregation of annual totals to monthly values.
//!
//! The monthly target follows `y = X beta + u` with AR(1) residuals
//! `u_t = rho u_{t-1} + e_t`. Only yearly sums `Y = C y` are observed. Given
//! `rho`, `beta` is the GLS estimate on the aggregated system and the annual
//! residual is spread across months with `V C' (C V C')^{-1}`. `rho` maximises
//! the concentrated Gaussian log-likelihood of the annual regression.
//!
//! The AR(1) covariance is never materialised as a dense `12N x 12N` matrix;
//! the aggregated blocks are summed directly from a table of powers of `rho`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat, Vector};
use crate::timeseries::{MonthDate, MonthlySeries, Transform};

/// Largest admissible `|rho|`.
pub const RHO_BOUND: f64 = 0.99;
const GRID_STEP: f64 = 0.01;
const GOLDEN_TOL: f64 = 1e-7;

/// Annual totals indexed by calendar year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnualSeries {
    pub start_year: i32,
    values: Vec<f64>,
}

impl AnnualSeries {
    pub fn new(start_year: i32, values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "annual series needs at least 2 observations, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse("annual series contains non-finite values".into()));
        }
        Ok(Self { start_year, values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn end_year(&self) -> i32 {
        self.start_year + self.values.len() as i32 - 1
    }

    pub fn value_for(&self, year: i32) -> Option<f64> {
        let k = year - self.start_year;
        (k >= 0 && (k as usize) < self.values.len()).then(|| self.values[k as usize])
    }

    /// Years up to and including `last_year`.
    pub fn through(&self, last_year: i32) -> Result<Self> {
        let keep = (last_year - self.start_year + 1).clamp(0, self.values.len() as i32) as usize;
        Self::new(self.start_year, self.values[..keep].to_vec())
    }
}

/// How the AR(1) coefficient is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RhoChoice {
    /// Maximum likelihood on (-0.99, 0.99): grid search then golden section.
    Estimate,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChowLinResult {
    pub monthly: MonthlySeries,
    pub rho: f64,
    /// Intercept first when one is included.
    pub beta: Vec<f64>,
    pub fit_loglik: f64,
}

/// Pointwise weighted average with weights rescaled to sum to one.
pub fn weighted_indicator(series: &[MonthlySeries], weights: &[f64]) -> Result<MonthlySeries> {
    if series.is_empty() || series.len() != weights.len() {
        return Err(Error::Dimension(format!(
            "{} series with {} weights",
            series.len(),
            weights.len()
        )));
    }
    let first = &series[0];
    if series
        .iter()
        .any(|s| s.len() != first.len() || s.start != first.start)
    {
        return Err(Error::Dimension(
            "indicator components differ in length or start".into(),
        ));
    }
    if weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::InvalidArgument("weights must be nonnegative".into()));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidArgument("weights sum to zero".into()));
    }
    let values = (0..first.len())
        .map(|t| {
            series
                .iter()
                .zip(weights)
                .map(|(s, w)| w / total * s.values()[t])
                .sum()
        })
        .collect();
    MonthlySeries::new("weighted_indicator", first.start, values)
}

/// Aggregated quantities that depend only on `rho`.
struct Ar1Blocks {
    /// `C V C'`, years x years.
    va: Mat,
    /// `V C'`, months x years.
    vc: Mat,
}

fn ar1_blocks(rho: f64, months: usize, years: usize) -> Ar1Blocks {
    let scale = 1.0 / (1.0 - rho * rho);
    let pow: Vec<f64> = (0..months).map(|d| rho.powi(d as i32) * scale).collect();
    // vc[i, b] = sum over j in year b of rho^|i-j| / (1 - rho^2)
    let mut vc = Mat::zeros(months, years);
    for i in 0..months {
        for b in 0..years {
            vc[(i, b)] = (12 * b..12 * b + 12).map(|j| pow[i.abs_diff(j)]).sum();
        }
    }
    let mut va = Mat::zeros(years, years);
    for a in 0..years {
        for b in 0..years {
            va[(a, b)] = (12 * a..12 * a + 12).map(|i| vc[(i, b)]).sum();
        }
    }
    Ar1Blocks { va, vc }
}

struct GlsFit {
    beta: Vector,
    monthly: Vector,
    loglik: f64,
}

fn gls_fit(annual: &Vector, x: &Mat, rho: f64) -> Result<GlsFit> {
    let years = annual.len();
    let months = x.nrows();
    let k = x.ncols();
    let mut xa = Mat::zeros(years, k);
    for a in 0..years {
        for c in 0..k {
            xa[(a, c)] = (12 * a..12 * a + 12).map(|i| x[(i, c)]).sum();
        }
    }
    let blocks = ar1_blocks(rho, months, years);
    let va_chol = linalg::cholesky(&blocks.va, "aggregated AR(1) covariance")?;
    let vinv_xa = va_chol.solve(&xa);
    let xtx = xa.transpose() * &vinv_xa;
    let xtx_chol = linalg::cholesky(&xtx, "Chow-Lin regressor cross-product (collinear indicator)")?;
    let beta = xtx_chol.solve(&(vinv_xa.transpose() * annual));
    let resid = annual - &xa * &beta;
    let vinv_r = va_chol.solve(&resid);
    let monthly = x * &beta + &blocks.vc * &vinv_r;

    let n = years as f64;
    let sigma2 = (resid.dot(&vinv_r) / n).max(f64::MIN_POSITIVE);
    let logdet = 2.0 * va_chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let loglik =
        -0.5 * n * ((2.0 * std::f64::consts::PI).ln() + sigma2.ln() + 1.0) - 0.5 * logdet;
    Ok(GlsFit {
        beta,
        monthly,
        loglik,
    })
}

fn maximize_rho(annual: &Vector, x: &Mat) -> Result<(f64, GlsFit)> {
    let steps = (2.0 * RHO_BOUND / GRID_STEP).round() as i32;
    let mut best: Option<(f64, GlsFit)> = None;
    for s in 0..=steps {
        let rho = -RHO_BOUND + s as f64 * GRID_STEP;
        let fit = gls_fit(annual, x, rho)?;
        if best.as_ref().is_none_or(|(_, b)| fit.loglik > b.loglik) {
            best = Some((rho, fit));
        }
    }
    let (grid_rho, grid_fit) = best.expect("grid is nonempty");

    let mut lo = (grid_rho - GRID_STEP).max(-RHO_BOUND);
    let mut hi = (grid_rho + GRID_STEP).min(RHO_BOUND);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - ratio * (hi - lo);
    let mut d = lo + ratio * (hi - lo);
    let mut fc = gls_fit(annual, x, c)?.loglik;
    let mut fd = gls_fit(annual, x, d)?.loglik;
    while hi - lo > GOLDEN_TOL {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - ratio * (hi - lo);
            fc = gls_fit(annual, x, c)?.loglik;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + ratio * (hi - lo);
            fd = gls_fit(annual, x, d)?.loglik;
        }
    }
    let rho = 0.5 * (lo + hi);
    let fit = gls_fit(annual, x, rho)?;
    if fit.loglik >= grid_fit.loglik {
        Ok((rho, fit))
    } else {
        Ok((grid_rho, grid_fit))
    }
}

/// Chow-Lin disaggregation over `12 * years` indicator months plus up to 11
/// trailing months that are extrapolated without an aggregation constraint.
fn chow_lin_core(
    annual: &AnnualSeries,
    indicator: &MonthlySeries,
    constant: bool,
    rho: RhoChoice,
) -> Result<ChowLinResult> {
    let years = annual.len();
    let months = indicator.len();
    if years < 2 {
        return Err(Error::InsufficientData("Chow-Lin needs at least 2 annual observations".into()));
    }
    if indicator.start != MonthDate::new(annual.start_year, 1)? {
        return Err(Error::Alignment(format!(
            "indicator starts {} but annual data starts {}",
            indicator.start, annual.start_year
        )));
    }
    if months < 12 * years || months >= 12 * (years + 1) {
        return Err(Error::Dimension(format!(
            "indicator has {months} months for {years} annual observations"
        )));
    }
    let k = if constant { 2 } else { 1 };
    if k > years {
        return Err(Error::InsufficientData(format!(
            "{k} regressors with {years} annual observations"
        )));
    }
    let mut x = Mat::zeros(months, k);
    for (t, v) in indicator.values().iter().enumerate() {
        if constant {
            x[(t, 0)] = 1.0;
        }
        x[(t, k - 1)] = *v;
    }
    let y = Vector::from_column_slice(annual.values());

    let (rho, fit) = match rho {
        RhoChoice::Fixed(r) => {
            if !(r.abs() < 1.0) {
                return Err(Error::InvalidArgument(format!("rho {r} outside (-1, 1)")));
            }
            (r, gls_fit(&y, &x, r)?)
        }
        RhoChoice::Estimate => maximize_rho(&y, &x)?,
    };
    let monthly = MonthlySeries::with_transform(
        "disaggregated",
        indicator.start,
        fit.monthly.iter().copied().collect(),
        Transform::None,
    )?;
    Ok(ChowLinResult {
        monthly,
        rho,
        beta: fit.beta.iter().copied().collect(),
        fit_loglik: fit.loglik,
    })
}

/// Disaggregates `annual` using an indicator covering exactly the same years.
pub fn chow_lin(
    annual: &AnnualSeries,
    indicator: &MonthlySeries,
    constant: bool,
    rho: RhoChoice,
) -> Result<ChowLinResult> {
    if indicator.len() != 12 * annual.len() {
        return Err(Error::Dimension(format!(
            "indicator has {} months, expected {}",
            indicator.len(),
            12 * annual.len()
        )));
    }
    chow_lin_core(annual, indicator, constant, rho)
}

/// Disaggregates over the whole indicator span.
///
/// Complete indicator years without an annual value reuse the last available
/// annual total. Months of a trailing incomplete year are extrapolated from
/// the fitted regression and the AR(1) residual projection.
pub fn disaggregate(
    annual: &AnnualSeries,
    indicator: &MonthlySeries,
    constant: bool,
    rho: RhoChoice,
) -> Result<ChowLinResult> {
    let first_year = indicator.start.year();
    if indicator.start.month() != 1 {
        return Err(Error::Alignment(format!(
            "indicator must start in January, starts {}",
            indicator.start
        )));
    }
    if annual.start_year > first_year {
        return Err(Error::Alignment(format!(
            "annual data starts {} after indicator year {first_year}",
            annual.start_year
        )));
    }
    let full_years = indicator.len() / 12;
    let mut values = Vec::with_capacity(full_years);
    for y in first_year..first_year + full_years as i32 {
        let v = annual
            .value_for(y)
            .or_else(|| (y > annual.end_year()).then(|| *annual.values().last().unwrap()))
            .expect("years before the annual end are covered");
        values.push(v);
    }
    let aligned = AnnualSeries::new(first_year, values)?;
    chow_lin_core(&aligned, indicator, constant, rho)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jan(y: i32) -> MonthDate {
        MonthDate::new(y, 1).unwrap()
    }

    #[test]
    fn flat_indicator_splits_uniformly() {
        let annual = AnnualSeries::new(2015, vec![120.0, 240.0, 60.0]).unwrap();
        let ind = MonthlySeries::new("ip", jan(2015), vec![3.0; 36]).unwrap();
        let r = chow_lin(&annual, &ind, false, RhoChoice::Fixed(0.0)).unwrap();
        for (i, v) in r.monthly.values().iter().enumerate() {
            let expect = annual.values()[i / 12] / 12.0;
            assert!((v - expect).abs() < 1e-10, "month {i}: {v} vs {expect}");
        }
    }

    #[test]
    fn proportional_indicator_recovers_truth() {
        let truth: Vec<f64> = (0..48)
            .map(|t| 100.0 + 10.0 * (t as f64 * 0.7).sin() - 0.3 * t as f64)
            .collect();
        let annual: Vec<f64> = truth.chunks(12).map(|c| c.iter().sum()).collect();
        let annual = AnnualSeries::new(2016, annual).unwrap();
        let ind = MonthlySeries::new("ip", jan(2016), truth.iter().map(|v| 0.37 * v).collect())
            .unwrap();
        for constant in [false, true] {
            let r = chow_lin(&annual, &ind, constant, RhoChoice::Estimate).unwrap();
            for (a, b) in r.monthly.values().iter().zip(&truth) {
                assert!((a - b).abs() < 1e-8, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn aggregation_constraint_for_many_rhos() {
        let ind: Vec<f64> = (0..60).map(|t| 50.0 + (t as f64).cos() * 5.0 + t as f64).collect();
        let ind = MonthlySeries::new("ip", jan(2010), ind).unwrap();
        let annual = AnnualSeries::new(2010, vec![900.0, 1000.0, 950.0, 1200.0, 1100.0]).unwrap();
        for rho in [-0.9, -0.3, 0.0, 0.5, 0.95] {
            let r = chow_lin(&annual, &ind, true, RhoChoice::Fixed(rho)).unwrap();
            for (y, chunk) in r.monthly.values().chunks(12).enumerate() {
                let s: f64 = chunk.iter().sum();
                assert!(((s - annual.values()[y]) / annual.values()[y]).abs() < 1e-9);
            }
        }
        let est = chow_lin(&annual, &ind, true, RhoChoice::Estimate).unwrap();
        assert!(est.rho.abs() <= RHO_BOUND);
    }

    #[test]
    fn scaling_annual_scales_output() {
        let ind: Vec<f64> = (0..36).map(|t| 10.0 + ((t * 7) % 5) as f64).collect();
        let ind = MonthlySeries::new("ip", jan(2010), ind).unwrap();
        let a1 = AnnualSeries::new(2010, vec![150.0, 170.0, 160.0]).unwrap();
        let a2 = AnnualSeries::new(2010, vec![450.0, 510.0, 480.0]).unwrap();
        let r1 = chow_lin(&a1, &ind, true, RhoChoice::Fixed(0.6)).unwrap();
        let r2 = chow_lin(&a2, &ind, true, RhoChoice::Fixed(0.6)).unwrap();
        for (a, b) in r1.monthly.values().iter().zip(r2.monthly.values()) {
            assert!((3.0 * a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn errors() {
        let ind = MonthlySeries::new("ip", jan(2010), vec![1.0; 36]).unwrap();
        let annual = AnnualSeries::new(2010, vec![12.0, 12.0, 12.0]).unwrap();
        // a constant indicator plus an intercept is collinear
        assert!(matches!(
            chow_lin(&annual, &ind, true, RhoChoice::Fixed(0.2)),
            Err(Error::Singular(_))
        ));
        assert!(AnnualSeries::new(2010, vec![1.0]).is_err());
        let short = MonthlySeries::new("ip", jan(2010), vec![1.0; 30]).unwrap();
        assert!(chow_lin(&annual, &short, false, RhoChoice::Estimate).is_err());
    }

    #[test]
    fn weighted_indicator_examples() {
        let s1 = MonthlySeries::new("a", jan(2010), vec![1.0, 1.0]).unwrap();
        let s3 = MonthlySeries::new("b", jan(2010), vec![3.0, 3.0]).unwrap();
        let w = weighted_indicator(&[s1.clone(), s3], &[1.0, 3.0]).unwrap();
        assert_eq!(w.values(), &[2.5, 2.5]);
        assert_eq!(weighted_indicator(std::slice::from_ref(&s1), &[1.0]).unwrap().values(), s1.values());
        let same = weighted_indicator(&[s1.clone(), s1.clone()], &[0.2, 5.0]).unwrap();
        for (a, b) in same.values().iter().zip(s1.values()) {
            assert!((a - b).abs() < 1e-15);
        }
        let long = MonthlySeries::new("c", jan(2010), vec![1.0; 3]).unwrap();
        assert!(weighted_indicator(&[s1, long], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn disaggregate_carries_forward_and_extrapolates() {
        let ind: Vec<f64> = (0..45).map(|t| 20.0 + (t as f64 * 0.4).sin()).collect();
        let ind = MonthlySeries::new("ip", jan(2018), ind).unwrap();
        // 2018, 2019 known; 2020 is carried forward; 9 months of 2021 extrapolated
        let annual = AnnualSeries::new(2018, vec![240.0, 235.0]).unwrap();
        let r = disaggregate(&annual, &ind, true, RhoChoice::Estimate).unwrap();
        assert_eq!(r.monthly.len(), 45);
        let sums: Vec<f64> = r.monthly.values()[..36].chunks(12).map(|c| c.iter().sum()).collect();
        assert!((sums[2] - 235.0).abs() < 1e-8);
        assert!(r.monthly.values()[36..].iter().all(|v| v.is_finite()));
    }
}
