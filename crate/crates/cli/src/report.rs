//! Score tables: one row per horizon, one column per model, with the best
//! model of each row flagged. Ties go to the lexicographically smallest id.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;

use carbon_forecast::eval::ScoreReport;

use crate::error::{CliError, CliResult};
use crate::pipeline::{write_table, Run};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Better {
    Lower,
    Higher,
}

/// A score column extracted from the reports.
#[derive(Clone, Copy)]
pub struct Metric {
    pub name: &'static str,
    pub better: Option<Better>,
    pub get: fn(&ScoreReport) -> Option<f64>,
}

pub const METRICS: [Metric; 10] = [
    Metric { name: "relative_rmsfe", better: Some(Better::Lower), get: |s| Some(s.relative_rmsfe) },
    Metric { name: "success_ratio", better: Some(Better::Higher), get: |s| Some(s.success_ratio) },
    Metric { name: "qcrps", better: Some(Better::Lower), get: |s| s.qcrps },
    Metric { name: "wqcrps_center", better: Some(Better::Lower), get: |s| s.wqcrps_center },
    Metric { name: "wqcrps_right", better: Some(Better::Lower), get: |s| s.wqcrps_right },
    Metric { name: "wqcrps_left", better: Some(Better::Lower), get: |s| s.wqcrps_left },
    Metric { name: "dm_p_value", better: None, get: |s| s.dm_p_value },
    Metric { name: "pt_p_value", better: None, get: |s| s.pt_p_value },
    Metric { name: "rmsfe", better: Some(Better::Lower), get: |s| Some(s.rmsfe) },
    Metric { name: "dm_statistic", better: None, get: |s| s.dm_statistic },
];

/// Horizon x model table of one metric.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub metric: String,
    pub models: Vec<String>,
    pub rows: Vec<TableRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub horizon: usize,
    pub values: Vec<Option<f64>>,
    pub best: Option<String>,
}

/// Best model among `(id, value)` pairs; ties resolve to the smallest id.
pub fn best_model<'a>(cells: impl IntoIterator<Item = (&'a str, f64)>, better: Better) -> Option<&'a str> {
    let mut best: Option<(&str, f64)> = None;
    for (id, v) in cells {
        if !v.is_finite() {
            continue;
        }
        best = match best {
            None => Some((id, v)),
            Some((bid, bv)) => {
                let wins = match better {
                    Better::Lower => v < bv,
                    Better::Higher => v > bv,
                };
                if wins || (v == bv && id < bid) {
                    Some((id, v))
                } else {
                    Some((bid, bv))
                }
            }
        };
    }
    best.map(|(id, _)| id)
}

pub fn build_table(scores: &[ScoreReport], metric: &Metric, models: &[String]) -> Option<Table> {
    let mut by_cell: BTreeMap<(usize, &str), f64> = BTreeMap::new();
    for s in scores {
        if let Some(v) = (metric.get)(s) {
            by_cell.insert((s.horizon, s.model.as_str()), v);
        }
    }
    if by_cell.is_empty() {
        return None;
    }
    let mut horizons: Vec<usize> = scores.iter().map(|s| s.horizon).collect();
    horizons.sort_unstable();
    horizons.dedup();
    let rows = horizons
        .into_iter()
        .map(|h| {
            let values: Vec<Option<f64>> = models.iter().map(|m| by_cell.get(&(h, m.as_str())).copied()).collect();
            let best = metric.better.and_then(|b| {
                best_model(
                    models.iter().zip(&values).filter_map(|(m, v)| v.map(|v| (m.as_str(), v))),
                    b,
                )
                .map(str::to_string)
            });
            TableRow { horizon: h, values, best }
        })
        .collect();
    Some(Table {
        metric: metric.name.to_string(),
        models: models.to_vec(),
        rows,
    })
}

fn fmt_cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into())
}

/// Writes `report.md` and `tables/<metric>.csv`.
pub fn write_report(run: &Run, scores: &[ScoreReport], order: &[String]) -> CliResult<Vec<String>> {
    let mut models: Vec<String> = order.iter().filter(|m| scores.iter().any(|s| &s.model == *m)).cloned().collect();
    let mut extra: Vec<String> = scores
        .iter()
        .map(|s| s.model.clone())
        .filter(|m| !models.contains(m))
        .collect();
    extra.sort();
    extra.dedup();
    models.extend(extra);

    let dir = run.path("tables");
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let mut files = Vec::new();
    let mut md = String::from("# Forecast evaluation\n");
    for metric in &METRICS {
        let Some(table) = build_table(scores, metric, &models) else {
            continue;
        };
        let mut header = vec!["horizon".to_string()];
        header.extend(models.iter().cloned());
        if metric.better.is_some() {
            header.push("best".into());
        }
        let rows: Vec<Vec<String>> = table
            .rows
            .iter()
            .map(|r| {
                let mut row = vec![r.horizon.to_string()];
                row.extend(r.values.iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()));
                if metric.better.is_some() {
                    row.push(r.best.clone().unwrap_or_default());
                }
                row
            })
            .collect();
        let name = format!("tables/{}.csv", metric.name);
        write_table(&run.path(&name), &header, &rows)?;
        files.push(name);

        let _ = write!(md, "\n## {}\n\n| h | {} |\n|---|{}\n", metric.name, models.join(" | "), "---|".repeat(models.len()));
        for r in &table.rows {
            let cells: Vec<String> = models
                .iter()
                .zip(&r.values)
                .map(|(m, v)| {
                    let c = fmt_cell(*v);
                    if r.best.as_deref() == Some(m.as_str()) {
                        format!("**{c}**")
                    } else {
                        c
                    }
                })
                .collect();
            let _ = writeln!(md, "| {} | {} |", r.horizon, cells.join(" | "));
        }
    }
    let path = run.path("report.md");
    fs::write(&path, md).map_err(|e| CliError::io(&path, e))?;
    files.push("report.md".into());
    Ok(files)
}
