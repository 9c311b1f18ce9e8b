//! Data bundles and their on-disk CSV layout.
//!
//! A bundle directory holds
//!
//! | file | columns |
//! |---|---|
//! | `price.csv` | `date`, real price level |
//! | `predictors.csv` | `date`, one column per raw predictor |
//! | `predictors_meta.csv` | `name`, `class`, `transform` |
//! | `ip.csv` | `date`, aggregate industrial production |
//! | `sector_ip.csv` | `date`, one column per sector index |
//! | `sector_weights.csv` | `sector`, `weight` |
//! | `emissions_annual.csv` | `year`, `value` |
//!
//! Dates are written `YYYY-MM`. In wide files a series may start later or
//! end earlier than others (blank cells at the edges) but may not have
//! interior gaps. Numbers use the shortest representation that parses back
//! to the same `f64`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::disagg::AnnualSeries;
use crate::error::{Error, Result};
use crate::forecast::ForecastRecord;
use crate::timeseries::{MonthDate, MonthlySeries, PredictorClass, Transform};

pub const PRICE_FILE: &str = "price.csv";
pub const PREDICTORS_FILE: &str = "predictors.csv";
pub const PREDICTORS_META_FILE: &str = "predictors_meta.csv";
pub const IP_FILE: &str = "ip.csv";
pub const SECTOR_IP_FILE: &str = "sector_ip.csv";
pub const SECTOR_WEIGHTS_FILE: &str = "sector_weights.csv";
pub const EMISSIONS_FILE: &str = "emissions_annual.csv";

/// A predictor in raw units; `series.transform` is the stationarity
/// transform to apply before standardization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawPredictor {
    pub series: MonthlySeries,
    pub class: PredictorClass,
}

/// Everything the pipeline reads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataBundle {
    /// Real price levels.
    pub price: MonthlySeries,
    pub predictors: Vec<RawPredictor>,
    /// Aggregate industrial production levels.
    pub ip: MonthlySeries,
    /// Sector production indices used to build the interpolation indicator.
    pub sector_ip: Vec<MonthlySeries>,
    pub sector_weights: Vec<f64>,
    pub emissions_annual: AnnualSeries,
}

impl DataBundle {
    pub fn validate(&self) -> Result<()> {
        if self.sector_ip.is_empty() || self.sector_ip.len() != self.sector_weights.len() {
            return Err(Error::Dimension(format!(
                "{} sector indices with {} weights",
                self.sector_ip.len(),
                self.sector_weights.len()
            )));
        }
        if self.predictors.is_empty() {
            return Err(Error::InsufficientData("bundle has no predictors".into()));
        }
        let mut names = std::collections::BTreeSet::new();
        for p in &self.predictors {
            if !names.insert(p.series.name.as_str()) {
                return Err(Error::InvalidArgument(format!("duplicate predictor name '{}'", p.series.name)));
            }
        }
        Ok(())
    }

    /// Copy with every monthly series cut at `date` and annual totals cut at
    /// the last calendar year completed by `date`.
    pub fn through(&self, date: MonthDate) -> Result<DataBundle> {
        let cut = |s: &MonthlySeries| s.through(date);
        let last_year = if date.month() == 12 { date.year() } else { date.year() - 1 };
        Ok(DataBundle {
            price: cut(&self.price)?,
            predictors: self
                .predictors
                .iter()
                .map(|p| {
                    Ok(RawPredictor {
                        series: cut(&p.series)?,
                        class: p.class,
                    })
                })
                .collect::<Result<_>>()?,
            ip: cut(&self.ip)?,
            sector_ip: self.sector_ip.iter().map(cut).collect::<Result<_>>()?,
            sector_weights: self.sector_weights.clone(),
            emissions_annual: self.emissions_annual.through(last_year)?,
        })
    }
}

fn input_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Input {
        path: path.display().to_string(),
        message: message.into(),
    }
}

fn open_reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| input_err(path, format!("cannot open: {e}")))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

fn parse_f64(path: &Path, row: usize, s: &str) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| input_err(path, format!("row {row}: cannot parse number '{s}'")))?;
    if !v.is_finite() {
        return Err(input_err(path, format!("row {row}: non-finite value '{s}'")));
    }
    Ok(v)
}

/// Reads a wide monthly file into one series per non-date column.
pub fn read_monthly_csv(path: &Path) -> Result<Vec<MonthlySeries>> {
    let mut rdr = open_reader(path)?;
    let headers = rdr.headers().map_err(|e| input_err(path, e.to_string()))?.clone();
    if headers.get(0) != Some("date") || headers.len() < 2 {
        return Err(input_err(path, "expected a 'date' column followed by series columns"));
    }
    let names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut dates = Vec::new();
    let mut cells: Vec<Vec<Option<f64>>> = vec![Vec::new(); names.len()];
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| input_err(path, e.to_string()))?;
        let date: MonthDate = rec
            .get(0)
            .unwrap_or_default()
            .parse()
            .map_err(|e| input_err(path, format!("row {row}: {e}")))?;
        if let Some(prev) = dates.last() {
            if date != MonthDate::succ(*prev) {
                return Err(input_err(path, format!("row {row}: date {date} does not follow {prev}")));
            }
        }
        dates.push(date);
        for (j, col) in cells.iter_mut().enumerate() {
            let raw = rec.get(j + 1).unwrap_or("");
            col.push(if raw.is_empty() { None } else { Some(parse_f64(path, row, raw)?) });
        }
    }
    names
        .into_iter()
        .zip(cells)
        .map(|(name, col)| {
            let first = col
                .iter()
                .position(Option::is_some)
                .ok_or_else(|| input_err(path, format!("column '{name}' is empty")))?;
            let last = col.iter().rposition(Option::is_some).unwrap();
            let values = col[first..=last]
                .iter()
                .enumerate()
                .map(|(k, v)| {
                    v.ok_or_else(|| input_err(path, format!("column '{name}' has a gap at {}", dates[first + k])))
                })
                .collect::<Result<Vec<f64>>>()?;
            MonthlySeries::new(name, dates[first], values)
        })
        .collect()
}

/// Writes series side by side over the union of their date ranges.
pub fn write_monthly_csv(path: &Path, series: &[&MonthlySeries]) -> Result<()> {
    if series.is_empty() {
        return Err(Error::InvalidArgument("nothing to write".into()));
    }
    let start = series.iter().map(|s| s.start).min().unwrap();
    let end = series.iter().map(|s| s.end()).max().unwrap();
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["date".to_string()];
    header.extend(series.iter().map(|s| s.name.clone()));
    w.write_record(&header)?;
    let mut d = start;
    while d <= end {
        let mut row = vec![d.to_string()];
        row.extend(series.iter().map(|s| s.value_at(d).map(|v| v.to_string()).unwrap_or_default()));
        w.write_record(&row)?;
        d = d.succ();
    }
    w.flush()?;
    Ok(())
}

fn single(path: &Path) -> Result<MonthlySeries> {
    let mut all = read_monthly_csv(path)?;
    if all.len() != 1 {
        return Err(input_err(path, format!("expected one series column, found {}", all.len())));
    }
    Ok(all.remove(0))
}

#[derive(Debug, Serialize, Deserialize)]
struct MetaRow {
    name: String,
    class: String,
    transform: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct WeightRow {
    sector: String,
    weight: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct AnnualRow {
    year: i32,
    value: f64,
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut rdr = open_reader(path)?;
    rdr.deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| input_err(path, format!("row {}: {e}", i + 2))))
        .collect()
}

pub fn read_bundle(dir: &Path) -> Result<DataBundle> {
    let p = |f: &str| -> PathBuf { dir.join(f) };

    let price = single(&p(PRICE_FILE))?;
    let ip = single(&p(IP_FILE))?;

    let raw = read_monthly_csv(&p(PREDICTORS_FILE))?;
    let meta_path = p(PREDICTORS_META_FILE);
    let meta: BTreeMap<String, MetaRow> = read_rows::<MetaRow>(&meta_path)?
        .into_iter()
        .map(|m| (m.name.clone(), m))
        .collect();
    let predictors = raw
        .into_iter()
        .map(|s| {
            let m = meta
                .get(&s.name)
                .ok_or_else(|| input_err(&meta_path, format!("no metadata for predictor '{}'", s.name)))?;
            let class: PredictorClass = m.class.parse().map_err(|e: Error| input_err(&meta_path, e.to_string()))?;
            let transform: Transform = m.transform.parse().map_err(|e: Error| input_err(&meta_path, e.to_string()))?;
            let name = s.name.clone();
            Ok(RawPredictor {
                series: MonthlySeries::with_transform(name, s.start, s.into_values(), transform)?,
                class,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let sector_ip = read_monthly_csv(&p(SECTOR_IP_FILE))?;
    let weights_path = p(SECTOR_WEIGHTS_FILE);
    let weights: BTreeMap<String, f64> = read_rows::<WeightRow>(&weights_path)?
        .into_iter()
        .map(|w| (w.sector, w.weight))
        .collect();
    let sector_weights = sector_ip
        .iter()
        .map(|s| {
            weights
                .get(&s.name)
                .copied()
                .ok_or_else(|| input_err(&weights_path, format!("no weight for sector '{}'", s.name)))
        })
        .collect::<Result<Vec<_>>>()?;

    let em_path = p(EMISSIONS_FILE);
    let rows = read_rows::<AnnualRow>(&em_path)?;
    if rows.is_empty() {
        return Err(input_err(&em_path, "no annual observations"));
    }
    if rows.windows(2).any(|w| w[1].year != w[0].year + 1) {
        return Err(input_err(&em_path, "years must be consecutive and increasing"));
    }
    let emissions_annual = AnnualSeries::new(rows[0].year, rows.iter().map(|r| r.value).collect())
        .map_err(|e| input_err(&em_path, e.to_string()))?;

    let bundle = DataBundle {
        price,
        predictors,
        ip,
        sector_ip,
        sector_weights,
        emissions_annual,
    };
    bundle.validate()?;
    Ok(bundle)
}

pub fn write_bundle(dir: &Path, bundle: &DataBundle) -> Result<()> {
    bundle.validate()?;
    fs::create_dir_all(dir)?;
    write_monthly_csv(&dir.join(PRICE_FILE), &[&bundle.price])?;
    write_monthly_csv(&dir.join(IP_FILE), &[&bundle.ip])?;
    let preds: Vec<&MonthlySeries> = bundle.predictors.iter().map(|p| &p.series).collect();
    write_monthly_csv(&dir.join(PREDICTORS_FILE), &preds)?;
    let mut w = csv::Writer::from_path(dir.join(PREDICTORS_META_FILE))?;
    for p in &bundle.predictors {
        w.serialize(MetaRow {
            name: p.series.name.clone(),
            class: p.class.to_string(),
            transform: p.series.transform.to_string(),
        })?;
    }
    w.flush()?;
    let sectors: Vec<&MonthlySeries> = bundle.sector_ip.iter().collect();
    write_monthly_csv(&dir.join(SECTOR_IP_FILE), &sectors)?;
    let mut w = csv::Writer::from_path(dir.join(SECTOR_WEIGHTS_FILE))?;
    for (s, wt) in bundle.sector_ip.iter().zip(&bundle.sector_weights) {
        w.serialize(WeightRow {
            sector: s.name.clone(),
            weight: *wt,
        })?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(dir.join(EMISSIONS_FILE))?;
    let a = &bundle.emissions_annual;
    for (i, v) in a.values().iter().enumerate() {
        w.serialize(AnnualRow {
            year: a.start_year + i as i32,
            value: *v,
        })?;
    }
    w.flush()?;
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per record; quantile columns `q_<j>` for `alpha = j / J`.
pub fn write_records_csv(path: &Path, records: &[ForecastRecord]) -> Result<()> {
    let j = records.iter().find_map(|r| r.quantiles.as_ref().map(|q| q.j));
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = [
        "model",
        "origin",
        "horizon",
        "target",
        "origin_level",
        "point",
        "draw_mean",
        "sign",
        "realized",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    if let Some(j) = j {
        header.extend((1..j).map(|i| format!("q_{:.2}", i as f64 / j as f64)));
    }
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![
            r.model.clone(),
            r.origin.to_string(),
            r.horizon.to_string(),
            r.target.to_string(),
            r.origin_level.to_string(),
            r.point.to_string(),
            opt(r.draw_mean),
            r.sign.to_string(),
            opt(r.realized),
        ];
        if let Some(j) = j {
            match &r.quantiles {
                Some(q) if q.j == j => row.extend(q.values.iter().map(|v| v.to_string())),
                _ => row.extend((1..j).map(|_| String::new())),
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n")?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| input_err(path, format!("cannot read: {e}")))?;
    serde_json::from_str(&text).map_err(|e| input_err(path, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(y: i32, m: u32) -> MonthDate {
        MonthDate::new(y, m).unwrap()
    }

    #[test]
    fn wide_csv_round_trip_with_ragged_edges() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        let a = MonthlySeries::new("a", d(2020, 1), vec![1.0, 0.1 + 0.2, 3.5]).unwrap();
        let b = MonthlySeries::new("b", d(2020, 2), vec![-1e-17, 7.0, 8.0, 9.0]).unwrap();
        write_monthly_csv(&path, &[&a, &b]).unwrap();
        let back = read_monthly_csv(&path).unwrap();
        assert_eq!(back, vec![a, b]);
    }

    #[test]
    fn interior_gap_and_bad_dates_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        fs::write(&path, "date,a\n2020-01,1\n2020-02,\n2020-03,3\n").unwrap();
        assert!(matches!(read_monthly_csv(&path), Err(Error::Input { .. })));
        fs::write(&path, "date,a\n2020-01,1\n2020-03,3\n").unwrap();
        assert!(read_monthly_csv(&path).is_err());
        fs::write(&path, "date,a\n2020-01,abc\n").unwrap();
        assert!(read_monthly_csv(&path).is_err());
    }

    #[test]
    fn missing_file_names_path() {
        let err = read_bundle(Path::new("/nonexistent/bundle")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/bundle/price.csv"), "{err}");
        assert_eq!(err.kind(), crate::ErrorKind::Data);
    }
}
