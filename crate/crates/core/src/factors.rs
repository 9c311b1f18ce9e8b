//! Principal-component factors of a standardised predictor panel.

use std::collections::BTreeMap;

use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::stats;
use crate::timeseries::{common_range, MonthlySeries, PredictorClass, PredictorPanel};

#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel {
    /// Predictors x factors; columns are orthonormal.
    pub loadings: Mat,
    /// Principal-component scores, one series per factor.
    pub factors: Vec<MonthlySeries>,
    /// All eigenvalues of the correlation matrix, descending.
    pub eigenvalues: Vec<f64>,
    /// Share of total variance explained by each retained factor.
    pub variance_shares: Vec<f64>,
    pub predictor_names: Vec<String>,
}

impl FactorModel {
    pub fn k(&self) -> usize {
        self.factors.len()
    }
}

fn panel_matrix(panel: &PredictorPanel) -> Mat {
    let (t, n) = (panel.n_obs(), panel.n_predictors());
    Mat::from_fn(t, n, |i, j| panel.value(j, i))
}

/// First `k` principal components of the panel's correlation matrix.
///
/// Each factor is signed so that its largest-magnitude loading is positive.
pub fn extract_factors(panel: &PredictorPanel, k: usize) -> Result<FactorModel> {
    let n = panel.n_predictors();
    let t = panel.n_obs();
    if k == 0 || k > n || k + 1 > t {
        return Err(Error::InvalidArgument(format!(
            "factor count {k} outside 1..={}",
            n.min(t.saturating_sub(1))
        )));
    }
    let x = panel_matrix(panel);
    let corr = (x.transpose() * &x) / (t as f64 - 1.0);
    let eig = SymmetricEigen::new(corr);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let trace: f64 = eigenvalues.iter().sum();

    let mut loadings = Mat::zeros(n, k);
    for (c, &i) in order.iter().take(k).enumerate() {
        let mut v = eig.eigenvectors.column(i).into_owned();
        let pivot = v
            .iter()
            .copied()
            .max_by(|a, b| a.abs().total_cmp(&b.abs()))
            .unwrap_or(0.0);
        if pivot < 0.0 {
            v.neg_mut();
        }
        loadings.set_column(c, &v);
    }
    let scores = &x * &loadings;
    let factors = (0..k)
        .map(|c| {
            MonthlySeries::new(
                format!("factor{}", c + 1),
                panel.start(),
                scores.column(c).iter().copied().collect(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FactorModel {
        loadings,
        factors,
        variance_shares: eigenvalues.iter().take(k).map(|e| e / trace).collect(),
        eigenvalues,
        predictor_names: panel.series().iter().map(|s| s.name.clone()).collect(),
    })
}

/// R-squared of an OLS regression of `factor` on `predictor` with intercept,
/// computed on the overlapping sample.
pub fn factor_r2(factor: &MonthlySeries, predictor: &MonthlySeries) -> Result<f64> {
    let (start, end) = common_range(&[factor, predictor])?;
    let f = factor.slice(start, end)?;
    let p = predictor.slice(start, end)?;
    if f.len() < 3 {
        return Err(Error::InsufficientData("R-squared needs 3 common observations".into()));
    }
    let pm = stats::mean(p.values());
    let sxx: f64 = p.values().iter().map(|v| (v - pm).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Degenerate(predictor.name.clone()));
    }
    let fm = stats::mean(f.values());
    let syy: f64 = f.values().iter().map(|v| (v - fm).powi(2)).sum();
    if !(syy > 0.0) {
        return Err(Error::Degenerate(factor.name.clone()));
    }
    let sxy: f64 = p
        .values()
        .iter()
        .zip(f.values())
        .map(|(a, b)| (a - pm) * (b - fm))
        .sum();
    Ok((sxy * sxy / (sxx * syy)).clamp(0.0, 1.0))
}

/// One row of the per-predictor R-squared table.
#[derive(Debug, Clone, PartialEq)]
pub struct R2Row {
    pub predictor: String,
    pub class: PredictorClass,
    pub r2: Vec<f64>,
}

pub fn r2_table(model: &FactorModel, panel: &PredictorPanel) -> Result<Vec<R2Row>> {
    panel
        .series()
        .iter()
        .map(|s| {
            let class = panel
                .class_of(&s.name)
                .ok_or_else(|| Error::InvalidArgument(format!("no class for `{}`", s.name)))?;
            let r2 = model
                .factors
                .iter()
                .map(|f| factor_r2(f, s))
                .collect::<Result<Vec<_>>>()?;
            Ok(R2Row {
                predictor: s.name.clone(),
                class,
                r2,
            })
        })
        .collect()
}

/// Class-level decomposition of factor `which` (zero-based): the sum over
/// predictors in a class of `loading * standardized value`. The class series
/// add up to the factor score at every date.
pub fn factor_contributions(
    model: &FactorModel,
    panel: &PredictorPanel,
    which: usize,
) -> Result<BTreeMap<PredictorClass, MonthlySeries>> {
    if which >= model.k() {
        return Err(Error::InvalidArgument(format!(
            "factor index {which} but model has {} factors",
            model.k()
        )));
    }
    if panel.n_predictors() != model.loadings.nrows() {
        return Err(Error::Dimension("panel does not match factor model".into()));
    }
    let t = panel.n_obs();
    let mut sums: BTreeMap<PredictorClass, Vec<f64>> = BTreeMap::new();
    for (j, s) in panel.series().iter().enumerate() {
        let class = panel
            .class_of(&s.name)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown class for `{}`", s.name)))?;
        let w = model.loadings[(j, which)];
        let acc = sums.entry(class).or_insert_with(|| vec![0.0; t]);
        for (a, v) in acc.iter_mut().zip(s.values()) {
            *a += w * v;
        }
    }
    sums.into_iter()
        .map(|(c, v)| Ok((c, MonthlySeries::new(c.as_str(), panel.start(), v)?)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MovingAverage {
    /// Symmetric window; dated at the window centre.
    Centered,
    /// Trailing window; dated at the last observation.
    Backward,
}

/// Arithmetic moving average without end padding.
pub fn moving_average(s: &MonthlySeries, window: usize, mode: MovingAverage) -> Result<MonthlySeries> {
    if window == 0 || window > s.len() {
        return Err(Error::InvalidArgument(format!(
            "window {window} invalid for {} observations",
            s.len()
        )));
    }
    if mode == MovingAverage::Centered && window.is_multiple_of(2) {
        return Err(Error::InvalidArgument("centered window must be odd".into()));
    }
    let values: Vec<f64> = s
        .values()
        .windows(window)
        .map(|w| w.iter().sum::<f64>() / window as f64)
        .collect();
    let offset = match mode {
        MovingAverage::Centered => (window - 1) / 2,
        MovingAverage::Backward => window - 1,
    };
    MonthlySeries::with_transform(
        s.name.clone(),
        s.start.add_months(offset as i64),
        values,
        s.transform,
    )
}
