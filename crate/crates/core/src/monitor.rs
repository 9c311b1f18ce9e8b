//! Market-monitoring indices built from forecast records.
//!
//! All indices are dated by forecast origin. Price pressure compares the
//! twelve point forecasts issued at an origin with the range of the twelve
//! most recent observed levels.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factors::{moving_average, MovingAverage};
use crate::forecast::ForecastRecord;
use crate::timeseries::{MonthDate, MonthlySeries};

/// Months of trailing history and forecast horizons used by price pressure.
pub const PRESSURE_WINDOW: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PressureKind {
    Demand,
    PriceUp,
    PriceDown,
}

impl PressureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PressureKind::Demand => "demand",
            PressureKind::PriceUp => "price_up",
            PressureKind::PriceDown => "price_down",
        }
    }
}

impl fmt::Display for PressureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Up,
    Down,
}

/// Origin-dated index values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureIndex {
    pub kind: PressureKind,
    pub origins: Vec<MonthDate>,
    pub values: Vec<f64>,
}

impl PressureIndex {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value_at(&self, origin: MonthDate) -> Option<f64> {
        self.origins.iter().position(|o| *o == origin).map(|i| self.values[i])
    }

    /// Backward moving average for presentation. Gaps in the origin dates
    /// split the index into separately smoothed runs.
    pub fn smoothed(&self, window: usize) -> Result<PressureIndex> {
        let mut origins = Vec::new();
        let mut values = Vec::new();
        let mut start = 0;
        while start < self.len() {
            let mut end = start + 1;
            while end < self.len() && self.origins[end] == self.origins[end - 1].succ() {
                end += 1;
            }
            if end - start >= window {
                let run = MonthlySeries::new(self.kind.as_str(), self.origins[start], self.values[start..end].to_vec())?;
                let ma = moving_average(&run, window, MovingAverage::Backward)?;
                origins.extend(ma.dates());
                values.extend_from_slice(ma.values());
            }
            start = end;
        }
        Ok(PressureIndex {
            kind: self.kind,
            origins,
            values,
        })
    }
}

/// Point forecasts grouped by origin then horizon.
fn by_origin(records: &[ForecastRecord]) -> Result<BTreeMap<MonthDate, BTreeMap<usize, &ForecastRecord>>> {
    let mut out: BTreeMap<MonthDate, BTreeMap<usize, &ForecastRecord>> = BTreeMap::new();
    let model = records.first().map(|r| r.model.as_str());
    for r in records {
        if Some(r.model.as_str()) != model {
            return Err(Error::InvalidArgument(format!(
                "pressure indices take records of one model, found '{}' and '{}'",
                model.unwrap_or_default(),
                r.model
            )));
        }
        out.entry(r.origin).or_default().insert(r.horizon, r);
    }
    Ok(out)
}

/// `f_{t+12|t} - f_{t+1|t}` on emission-level point forecasts. Origins that
/// lack either horizon are skipped with a warning.
pub fn demand_pressure(records: &[ForecastRecord]) -> Result<PressureIndex> {
    let mut origins = Vec::new();
    let mut values = Vec::new();
    for (origin, hs) in by_origin(records)? {
        match (hs.get(&1), hs.get(&PRESSURE_WINDOW)) {
            (Some(one), Some(twelve)) => {
                origins.push(origin);
                values.push(twelve.point - one.point);
            }
            _ => log::warn!("demand pressure: origin {origin} lacks horizon 1 or 12, skipped"),
        }
    }
    Ok(PressureIndex {
        kind: PressureKind::Demand,
        origins,
        values,
    })
}

/// `(max, min)` of the levels `R_t, ..., R_{t-11}`.
fn trailing_range(history: &MonthlySeries, origin: MonthDate) -> Result<(f64, f64)> {
    let end = history.index_of(origin).ok_or_else(|| {
        Error::InsufficientData(format!("price history {} has no level at origin {origin}", history.name))
    })?;
    if end + 1 < PRESSURE_WINDOW {
        return Err(Error::InsufficientData(format!(
            "price pressure at {origin} needs {PRESSURE_WINDOW} trailing levels, have {}",
            end + 1
        )));
    }
    let w = &history.values()[end + 1 - PRESSURE_WINDOW..=end];
    let max = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = w.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((max, min))
}

fn pressure_with(
    records: &[ForecastRecord],
    history: &MonthlySeries,
    direction: Direction,
    share: impl Fn(&ForecastRecord, f64, f64) -> Result<f64>,
) -> Result<PressureIndex> {
    let mut origins = Vec::new();
    let mut values = Vec::new();
    for (origin, hs) in by_origin(records)? {
        let (max, min) = trailing_range(history, origin)?;
        let mut sum = 0.0;
        for h in 1..=PRESSURE_WINDOW {
            let r = hs.get(&h).ok_or_else(|| {
                Error::InsufficientData(format!("price pressure at {origin} is missing horizon {h}"))
            })?;
            sum += share(r, max, min)?;
        }
        origins.push(origin);
        values.push(sum / PRESSURE_WINDOW as f64);
    }
    Ok(PressureIndex {
        kind: match direction {
            Direction::Up => PressureKind::PriceUp,
            Direction::Down => PressureKind::PriceDown,
        },
        origins,
        values,
    })
}

/// Share of the twelve point forecasts above the trailing maximum
/// (`Up`) or below the trailing minimum (`Down`).
pub fn price_pressure(records: &[ForecastRecord], history: &MonthlySeries, direction: Direction) -> Result<PressureIndex> {
    pressure_with(records, history, direction, |r, max, min| {
        let hit = match direction {
            Direction::Up => r.point > max,
            Direction::Down => r.point < min,
        };
        Ok(if hit { 1.0 } else { 0.0 })
    })
}

/// Density variant: average over horizons of the share of predictive
/// draws beyond the trailing extremum.
pub fn price_pressure_density(
    records: &[ForecastRecord],
    history: &MonthlySeries,
    direction: Direction,
) -> Result<PressureIndex> {
    pressure_with(records, history, direction, |r, max, min| {
        let draws = r.draws.as_ref().filter(|d| !d.is_empty()).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "density price pressure needs stored draws ({} at {} h={})",
                r.model, r.origin, r.horizon
            ))
        })?;
        let hits = draws
            .iter()
            .filter(|v| match direction {
                Direction::Up => **v > max,
                Direction::Down => **v < min,
            })
            .count();
        Ok(hits as f64 / draws.len() as f64)
    })
}

/// Fixed-horizon approximation from current-year and next-year fixed-event
/// forecasts, with `k` months left in the current year.
pub fn fe_to_fh(current_year: f64, next_year: f64, k: u32) -> Result<f64> {
    if !(1..=12).contains(&k) {
        return Err(Error::InvalidArgument(format!("months to year end must lie in 1..=12, got {k}")));
    }
    if !current_year.is_finite() || !next_year.is_finite() {
        return Err(Error::InvalidArgument("non-finite fixed-event forecast".into()));
    }
    if k == 12 {
        return Ok(current_year);
    }
    let w = k as f64 / 12.0;
    Ok(w * current_year + (1.0 - w) * next_year)
}

/// Months until the end of the year counted from `date`: 12 in January,
/// 1 in December.
pub fn months_to_year_end(date: MonthDate) -> u32 {
    13 - date.month()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(origin: MonthDate, h: usize, point: f64) -> ForecastRecord {
        ForecastRecord {
            model: "M".into(),
            origin,
            horizon: h,
            target: origin.add_months(h as i64),
            origin_level: 100.0,
            point,
            draw_mean: None,
            sign: 0,
            quantiles: None,
            draws: None,
            realized: None,
        }
    }

    fn history() -> MonthlySeries {
        // levels 90..=101 over the twelve months ending at the origin
        MonthlySeries::new("price", MonthDate::new(2020, 1).unwrap(), (90..102).map(f64::from).collect()).unwrap()
    }

    fn origin() -> MonthDate {
        MonthDate::new(2020, 12).unwrap()
    }

    #[test]
    fn demand_pressure_examples() {
        let o = origin();
        let flat: Vec<_> = (1..=12).map(|h| record(o, h, 100.0)).collect();
        assert_eq!(demand_pressure(&flat).unwrap().values, vec![0.0]);
        let mut recs: Vec<_> = (1..=12).map(|h| record(o, h, 100.0 - (h - 1) as f64 * 5.0 / 11.0)).collect();
        recs.push(record(o.succ(), 1, 1.0));
        let idx = demand_pressure(&recs).unwrap();
        assert_eq!(idx.origins, vec![o]);
        assert!((idx.values[0] + 5.0).abs() < 1e-12);
    }

    #[test]
    fn price_pressure_examples() {
        let o = origin();
        let above: Vec<_> = (1..=12).map(|h| record(o, h, 120.0)).collect();
        assert_eq!(price_pressure(&above, &history(), Direction::Up).unwrap().values, vec![1.0]);
        assert_eq!(price_pressure(&above, &history(), Direction::Down).unwrap().values, vec![0.0]);
        let inside: Vec<_> = (1..=12).map(|h| record(o, h, 95.0)).collect();
        assert_eq!(price_pressure(&inside, &history(), Direction::Up).unwrap().values, vec![0.0]);
        assert_eq!(price_pressure(&inside, &history(), Direction::Down).unwrap().values, vec![0.0]);
        let three_below: Vec<_> = (1..=12).map(|h| record(o, h, if h <= 3 { 80.0 } else { 95.0 })).collect();
        assert_eq!(price_pressure(&three_below, &history(), Direction::Down).unwrap().values, vec![0.25]);
        // the trailing maximum itself is not a breach
        let at_max: Vec<_> = (1..=12).map(|h| record(o, h, 101.0)).collect();
        assert_eq!(price_pressure(&at_max, &history(), Direction::Up).unwrap().values, vec![0.0]);
    }

    #[test]
    fn price_pressure_needs_history_and_horizons() {
        let early = MonthDate::new(2020, 6).unwrap();
        let recs: Vec<_> = (1..=12).map(|h| record(early, h, 95.0)).collect();
        assert!(price_pressure(&recs, &history(), Direction::Up).is_err());
        let short: Vec<_> = (1..=11).map(|h| record(origin(), h, 95.0)).collect();
        assert!(price_pressure(&short, &history(), Direction::Up).is_err());
    }

    #[test]
    fn density_variant_counts_draws() {
        let o = origin();
        let recs: Vec<_> = (1..=12)
            .map(|h| {
                let mut r = record(o, h, 95.0);
                r.draws = Some(vec![80.0, 95.0, 105.0, 110.0]);
                r
            })
            .collect();
        assert_eq!(price_pressure_density(&recs, &history(), Direction::Up).unwrap().values, vec![0.5]);
        assert_eq!(price_pressure_density(&recs, &history(), Direction::Down).unwrap().values, vec![0.25]);
        let bare: Vec<_> = (1..=12).map(|h| record(o, h, 95.0)).collect();
        assert!(price_pressure_density(&bare, &history(), Direction::Up).is_err());
    }

    #[test]
    fn fixed_event_conversion() {
        assert_eq!(fe_to_fh(80.0, 100.0, 12).unwrap(), 80.0);
        assert_eq!(fe_to_fh(80.0, 100.0, 6).unwrap(), 90.0);
        for k in 1..=12 {
            assert!((fe_to_fh(42.0, 42.0, k).unwrap() - 42.0).abs() < 1e-12);
        }
        assert!(fe_to_fh(1.0, 2.0, 0).is_err());
        assert!(fe_to_fh(1.0, 2.0, 13).is_err());
        assert_eq!(months_to_year_end(MonthDate::new(2021, 1).unwrap()), 12);
        assert_eq!(months_to_year_end(MonthDate::new(2021, 12).unwrap()), 1);
    }

    #[test]
    fn smoothing_uses_backward_window() {
        let start = MonthDate::new(2021, 1).unwrap();
        let idx = PressureIndex {
            kind: PressureKind::Demand,
            origins: (0..5).map(|i| start.add_months(i)).collect(),
            values: vec![3.0, 6.0, 9.0, 12.0, 15.0],
        };
        let s = idx.smoothed(3).unwrap();
        assert_eq!(s.origins[0], start.add_months(2));
        assert_eq!(s.values, vec![6.0, 9.0, 12.0]);
    }

    #[test]
    fn mixed_models_rejected() {
        let mut recs: Vec<_> = (1..=12).map(|h| record(origin(), h, 95.0)).collect();
        recs[3].model = "other".into();
        assert!(demand_pressure(&recs).is_err());
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn up_and_down_shares_sum_to_at_most_one(
            levels in proptest::collection::vec(1.0f64..200.0, 12),
            points in proptest::collection::vec(1.0f64..200.0, 12),
        ) {
            let o = MonthDate::new(2020, 12).unwrap();
            let hist = MonthlySeries::new("p", MonthDate::new(2020, 1).unwrap(), levels).unwrap();
            let recs: Vec<ForecastRecord> = points.iter().enumerate().map(|(i, p)| ForecastRecord {
                model: "M".into(), origin: o, horizon: i + 1, target: o.add_months(i as i64 + 1),
                origin_level: 1.0, point: *p, draw_mean: None, sign: 0, quantiles: None, draws: None, realized: None,
            }).collect();
            let up = price_pressure(&recs, &hist, Direction::Up).unwrap().values[0];
            let down = price_pressure(&recs, &hist, Direction::Down).unwrap().values[0];
            prop_assert!((0.0..=1.0).contains(&up) && (0.0..=1.0).contains(&down));
            prop_assert!(up + down <= 1.0);
        }

        #[test]
        fn fixed_horizon_is_bounded_and_monotone(a in -1e3f64..1e3, b in -1e3f64..1e3, k in 1u32..=12, bump in 0.0f64..10.0) {
            let f = fe_to_fh(a, b, k).unwrap();
            prop_assert!(f >= a.min(b) - 1e-9 && f <= a.max(b) + 1e-9);
            prop_assert!(fe_to_fh(a + bump, b, k).unwrap() >= f - 1e-12);
            prop_assert!(fe_to_fh(a, b + bump, k).unwrap() >= f - 1e-12);
        }
    }
}
