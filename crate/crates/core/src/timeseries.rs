//! Calendar-month series, transforms and predictor panels.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::stats;

/// A calendar month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MonthDate {
    year: i32,
    month: u32,
}

impl MonthDate {
    pub fn new(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::InvalidArgument(format!("month {month} outside 1..12")));
        }
        Ok(Self { year, month })
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn month(self) -> u32 {
        self.month
    }

    fn index(self) -> i64 {
        self.year as i64 * 12 + (self.month as i64 - 1)
    }

    fn from_index(idx: i64) -> Self {
        Self {
            year: idx.div_euclid(12) as i32,
            month: idx.rem_euclid(12) as u32 + 1,
        }
    }

    pub fn succ(self) -> Self {
        self.add_months(1)
    }

    pub fn pred(self) -> Self {
        self.add_months(-1)
    }

    pub fn add_months(self, k: i64) -> Self {
        Self::from_index(self.index() + k)
    }

    /// Signed number of months from `self` to `other`.
    pub fn months_until(self, other: MonthDate) -> i64 {
        other.index() - self.index()
    }
}

impl fmt::Display for MonthDate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for MonthDate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (y, m) = s
            .split_once('-')
            .ok_or_else(|| Error::Parse(format!("expected YYYY-MM, got `{s}`")))?;
        let year = y
            .parse::<i32>()
            .map_err(|_| Error::Parse(format!("bad year in `{s}`")))?;
        let month = m
            .parse::<u32>()
            .map_err(|_| Error::Parse(format!("bad month in `{s}`")))?;
        MonthDate::new(year, month).map_err(|_| Error::Parse(format!("bad month in `{s}`")))
    }
}

impl Serialize for MonthDate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MonthDate {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Transformation already applied to a series' values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    #[default]
    None,
    Log,
    Diff,
    LogDiff,
}

impl FromStr for Transform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" | "" => Ok(Transform::None),
            "log" => Ok(Transform::Log),
            "diff" => Ok(Transform::Diff),
            "log_diff" | "logdiff" | "dlog" => Ok(Transform::LogDiff),
            other => Err(Error::Parse(format!("unknown transform `{other}`"))),
        }
    }
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Transform::None => "none",
            Transform::Log => "log",
            Transform::Diff => "diff",
            Transform::LogDiff => "log_diff",
        })
    }
}

/// Predictor groups used when decomposing factor contributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictorClass {
    EconomicActivity,
    Energy,
    Technical,
    Weather,
}

impl PredictorClass {
    pub const ALL: [PredictorClass; 4] = [
        PredictorClass::EconomicActivity,
        PredictorClass::Energy,
        PredictorClass::Technical,
        PredictorClass::Weather,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PredictorClass::EconomicActivity => "economic_activity",
            PredictorClass::Energy => "energy",
            PredictorClass::Technical => "technical",
            PredictorClass::Weather => "weather",
        }
    }
}

impl FromStr for PredictorClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "economic_activity" | "activity" => Ok(PredictorClass::EconomicActivity),
            "energy" => Ok(PredictorClass::Energy),
            "technical" => Ok(PredictorClass::Technical),
            "weather" => Ok(PredictorClass::Weather),
            other => Err(Error::Parse(format!("unknown predictor class `{other}`"))),
        }
    }
}

impl fmt::Display for PredictorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A complete, finite monthly series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthlySeries {
    pub name: String,
    pub start: MonthDate,
    values: Vec<f64>,
    pub transform: Transform,
}

impl MonthlySeries {
    pub fn new(name: impl Into<String>, start: MonthDate, values: Vec<f64>) -> Result<Self> {
        Self::with_transform(name, start, values, Transform::None)
    }

    pub fn with_transform(
        name: impl Into<String>,
        start: MonthDate,
        values: Vec<f64>,
        transform: Transform,
    ) -> Result<Self> {
        let name = name.into();
        if values.is_empty() {
            return Err(Error::InsufficientData(format!("series `{name}` is empty")));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parse(format!(
                "series `{name}` has a missing or non-finite value at {}",
                start.add_months(i as i64)
            )));
        }
        Ok(Self {
            name,
            start,
            values,
            transform,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Date of the last observation.
    pub fn end(&self) -> MonthDate {
        self.start.add_months(self.values.len() as i64 - 1)
    }

    pub fn date_at(&self, i: usize) -> MonthDate {
        self.start.add_months(i as i64)
    }

    pub fn dates(&self) -> impl Iterator<Item = MonthDate> + '_ {
        (0..self.values.len()).map(|i| self.date_at(i))
    }

    pub fn index_of(&self, date: MonthDate) -> Option<usize> {
        let k = self.start.months_until(date);
        (k >= 0 && (k as usize) < self.values.len()).then_some(k as usize)
    }

    pub fn value_at(&self, date: MonthDate) -> Option<f64> {
        self.index_of(date).map(|i| self.values[i])
    }

    /// Sub-series on the inclusive range `[from, to]`.
    pub fn slice(&self, from: MonthDate, to: MonthDate) -> Result<Self> {
        let (Some(a), Some(b)) = (self.index_of(from), self.index_of(to)) else {
            return Err(Error::Alignment(format!(
                "range {from}..{to} not inside `{}` ({}..{})",
                self.name,
                self.start,
                self.end()
            )));
        };
        if a > b {
            return Err(Error::Alignment(format!("empty range {from}..{to}")));
        }
        Ok(Self {
            name: self.name.clone(),
            start: from,
            values: self.values[a..=b].to_vec(),
            transform: self.transform,
        })
    }

    /// Observations dated on or before `date`.
    pub fn through(&self, date: MonthDate) -> Result<Self> {
        self.slice(self.start, date.min(self.end()))
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

/// `log(x_{t+1}) - log(x_t)`, one observation shorter than the input.
pub fn log_diff(s: &MonthlySeries) -> Result<MonthlySeries> {
    if let Some((i, &v)) = s.values.iter().enumerate().find(|(_, v)| **v <= 0.0) {
        return Err(Error::NonPositive {
            series: s.name.clone(),
            date: s.date_at(i),
            value: v,
        });
    }
    if s.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "log difference of `{}` needs at least 2 observations",
            s.name
        )));
    }
    let values = s.values.windows(2).map(|w| w[1].ln() - w[0].ln()).collect();
    Ok(MonthlySeries {
        name: s.name.clone(),
        start: s.start.succ(),
        values,
        transform: Transform::LogDiff,
    })
}

/// First difference.
pub fn diff(s: &MonthlySeries) -> Result<MonthlySeries> {
    if s.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "difference of `{}` needs at least 2 observations",
            s.name
        )));
    }
    Ok(MonthlySeries {
        name: s.name.clone(),
        start: s.start.succ(),
        values: s.values.windows(2).map(|w| w[1] - w[0]).collect(),
        transform: Transform::Diff,
    })
}

/// Natural logarithm, rejecting non-positive values.
pub fn log(s: &MonthlySeries) -> Result<MonthlySeries> {
    if let Some((i, &v)) = s.values.iter().enumerate().find(|(_, v)| **v <= 0.0) {
        return Err(Error::NonPositive {
            series: s.name.clone(),
            date: s.date_at(i),
            value: v,
        });
    }
    Ok(MonthlySeries {
        name: s.name.clone(),
        start: s.start,
        values: s.values.iter().map(|v| v.ln()).collect(),
        transform: Transform::Log,
    })
}

/// Applies `transform` to a raw (untransformed) series.
pub fn apply_transform(s: &MonthlySeries, transform: Transform) -> Result<MonthlySeries> {
    match transform {
        Transform::None => Ok(s.clone()),
        Transform::Log => log(s),
        Transform::Diff => diff(s),
        Transform::LogDiff => log_diff(s),
    }
}

/// Inverse of [`log_diff`]: rebuilds levels from a first level and log changes.
pub fn levels_from_log_diff(first_level: f64, dlog: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(dlog.len() + 1);
    let mut acc = first_level.ln();
    out.push(first_level);
    for d in dlog {
        acc += d;
        out.push(acc.exp());
    }
    out
}

/// A standardised series along with the moments used, so the transform can
/// be inverted or reapplied to new data.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardized {
    pub series: MonthlySeries,
    pub mean: f64,
    pub sd: f64,
}

/// Demeans and scales to unit sample variance (`n - 1` denominator).
pub fn standardize(s: &MonthlySeries) -> Result<Standardized> {
    if s.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "standardizing `{}` needs at least 2 observations",
            s.name
        )));
    }
    let mean = stats::mean(&s.values);
    let sd = stats::sample_sd(&s.values);
    if !(sd > 0.0) || sd < 1e-14 * mean.abs().max(1.0) {
        return Err(Error::Degenerate(s.name.clone()));
    }
    Ok(Standardized {
        series: standardize_with(s, mean, sd),
        mean,
        sd,
    })
}

/// Applies fixed standardisation moments.
pub fn standardize_with(s: &MonthlySeries, mean: f64, sd: f64) -> MonthlySeries {
    MonthlySeries {
        name: s.name.clone(),
        start: s.start,
        values: s.values.iter().map(|v| (v - mean) / sd).collect(),
        transform: s.transform,
    }
}

/// Multiple of the interquartile range beyond which an observation is flagged.
pub const OUTLIER_IQR_MULTIPLE: f64 = 20.0;

/// Dates whose distance from the median exceeds twenty interquartile ranges.
/// Observations are only reported, never altered.
pub fn flag_outliers(s: &MonthlySeries) -> Result<Vec<MonthDate>> {
    if s.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "outlier screening of `{}` needs at least 4 observations",
            s.name
        )));
    }
    let med = stats::median(&s.values);
    let threshold = OUTLIER_IQR_MULTIPLE * stats::iqr(&s.values);
    Ok(s.values
        .iter()
        .enumerate()
        .filter(|(_, v)| (*v - med).abs() > threshold)
        .map(|(i, _)| s.date_at(i))
        .collect())
}

/// Standardised predictors on a common monthly sample.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorPanel {
    series: Vec<MonthlySeries>,
    class_of: BTreeMap<String, PredictorClass>,
    /// Moments removed from each series, in series order.
    moments: Vec<(f64, f64)>,
}

impl PredictorPanel {
    pub fn series(&self) -> &[MonthlySeries] {
        &self.series
    }

    pub fn class_of(&self, name: &str) -> Option<PredictorClass> {
        self.class_of.get(name).copied()
    }

    pub fn classes(&self) -> &BTreeMap<String, PredictorClass> {
        &self.class_of
    }

    pub fn moments(&self) -> &[(f64, f64)] {
        &self.moments
    }

    pub fn n_predictors(&self) -> usize {
        self.series.len()
    }

    pub fn n_obs(&self) -> usize {
        self.series[0].len()
    }

    pub fn start(&self) -> MonthDate {
        self.series[0].start
    }

    pub fn end(&self) -> MonthDate {
        self.series[0].end()
    }

    /// Observation `t` of predictor `j`.
    pub fn value(&self, j: usize, t: usize) -> f64 {
        self.series[j].values[t]
    }
}

/// Latest common start and earliest common end of `series`.
pub fn common_range(series: &[&MonthlySeries]) -> Result<(MonthDate, MonthDate)> {
    let start = series
        .iter()
        .map(|s| s.start)
        .max()
        .ok_or_else(|| Error::Alignment("no series supplied".into()))?;
    let end = series.iter().map(|s| s.end()).min().unwrap();
    if start > end {
        return Err(Error::Alignment(format!(
            "series have no common months (latest start {start}, earliest end {end})"
        )));
    }
    Ok((start, end))
}

/// Truncates every series to the maximal common range and standardises each
/// one on that range.
pub fn align_panel(series: &[(MonthlySeries, PredictorClass)]) -> Result<PredictorPanel> {
    let refs: Vec<&MonthlySeries> = series.iter().map(|(s, _)| s).collect();
    let (start, end) = common_range(&refs)?;
    let mut out = Vec::with_capacity(series.len());
    let mut class_of = BTreeMap::new();
    let mut moments = Vec::with_capacity(series.len());
    for (s, class) in series {
        let z = standardize(&s.slice(start, end)?)?;
        if class_of.insert(s.name.clone(), *class).is_some() {
            return Err(Error::InvalidArgument(format!(
                "duplicate predictor name `{}`",
                s.name
            )));
        }
        moments.push((z.mean, z.sd));
        out.push(z.series);
    }
    Ok(PredictorPanel {
        series: out,
        class_of,
        moments,
    })
}

/// Aligns a panel but standardises with externally supplied moments, e.g.
/// moments frozen from an initial estimation window.
pub fn align_panel_with_moments(
    series: &[(MonthlySeries, PredictorClass)],
    moments: &[(f64, f64)],
) -> Result<PredictorPanel> {
    if moments.len() != series.len() {
        return Err(Error::Dimension(format!(
            "{} moment pairs for {} series",
            moments.len(),
            series.len()
        )));
    }
    let refs: Vec<&MonthlySeries> = series.iter().map(|(s, _)| s).collect();
    let (start, end) = common_range(&refs)?;
    let mut out = Vec::with_capacity(series.len());
    let mut class_of = BTreeMap::new();
    for ((s, class), &(m, sd)) in series.iter().zip(moments) {
        if !(sd > 0.0) {
            return Err(Error::Degenerate(s.name.clone()));
        }
        out.push(standardize_with(&s.slice(start, end)?, m, sd));
        class_of.insert(s.name.clone(), *class);
    }
    Ok(PredictorPanel {
        series: out,
        class_of,
        moments: moments.to_vec(),
    })
}
