//! Pipeline stages. Each stage reads its inputs from the bundle or from
//! files written by earlier stages in the run directory, and returns the
//! names of the files it wrote.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use carbon_forecast::backtest::{align_evaluation_sample, interpolate_emissions, run_expanding_window, ModelSpec};
use carbon_forecast::eval::{
    fluctuation_test, loss_differential, score_records, FluctuationOptions, ScoreReport, FLUCTUATION_CV_05,
};
use carbon_forecast::factors::{extract_factors, factor_contributions, r2_table};
use carbon_forecast::forecast::ForecastRecord;
use carbon_forecast::io::{read_bundle, read_json, write_bundle, write_json, write_monthly_csv, write_records_csv, DataBundle};
use carbon_forecast::monitor::{demand_pressure, price_pressure, price_pressure_density, Direction, PressureIndex};
use carbon_forecast::synth::generate_bundle;
use carbon_forecast::timeseries::{align_panel, apply_transform, flag_outliers};
use carbon_forecast::{MonthDate, MonthlySeries};
use serde::{Deserialize, Serialize};

use crate::config::{hex_digest, Config};
use crate::error::{CliError, CliResult, Context};
use crate::report;

pub const RECORDS_JSON: &str = "records.json";
pub const EMISSION_RECORDS_JSON: &str = "records_emissions.json";
pub const SCORES_JSON: &str = "scores.json";
pub const FLUCTUATION_JSON: &str = "fluctuation.json";
pub const PRESSURE_JSON: &str = "pressure.json";
pub const MANIFEST_JSON: &str = "manifest.json";

/// A configured run writing into one output directory.
#[derive(Debug, Clone)]
pub struct Run {
    pub config: Config,
    /// Directory that relative config paths resolve against.
    pub base_dir: PathBuf,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluctuationPath {
    pub model: String,
    pub benchmark: String,
    pub horizon: usize,
    pub window: usize,
    pub mu: f64,
    pub dates: Vec<MonthDate>,
    pub statistic: Vec<f64>,
    pub max_statistic: f64,
    pub cv_one_sided_5pct: f64,
    pub reject: bool,
}

/// Price pressure indices of one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricePressure {
    pub model: String,
    pub up: PressureIndex,
    pub down: PressureIndex,
    pub up_smoothed: PressureIndex,
    pub down_smoothed: PressureIndex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandPressure {
    pub model: String,
    pub index: PressureIndex,
    pub smoothed: PressureIndex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorOutput {
    pub price: Vec<PricePressure>,
    pub demand: Option<DemandPressure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub seed: u64,
    pub config_hash: String,
    /// SHA-256 of every output file, by path relative to the run directory.
    pub outputs: BTreeMap<String, String>,
    /// Wall-clock seconds per stage; not part of `hash`.
    pub timings: BTreeMap<String, f64>,
    /// SHA-256 over version, seed, config hash and outputs.
    pub hash: String,
}

impl Manifest {
    pub fn compute_hash(version: &str, seed: u64, config_hash: &str, outputs: &BTreeMap<String, String>) -> String {
        let mut text = format!("version={version}\nseed={seed}\nconfig={config_hash}\n");
        for (name, digest) in outputs {
            text.push_str(&format!("{name}={digest}\n"));
        }
        hex_digest(text.as_bytes())
    }
}

fn csv_writer(path: &Path) -> CliResult<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    CliError::io(path, std::io::Error::other(e.to_string()))
}

/// Writes rows of string cells.
pub(crate) fn write_table(path: &Path, header: &[String], rows: &[Vec<String>]) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl Run {
    pub fn new(config: Config, base_dir: impl Into<PathBuf>, out: impl Into<PathBuf>) -> CliResult<Self> {
        let out = out.into();
        fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
        Ok(Self {
            config,
            base_dir: base_dir.into(),
            out,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// The configured input bundle, or a generated one when no data
    /// directory is set.
    pub fn bundle(&self) -> CliResult<DataBundle> {
        let bundle = match &self.config.data.dir {
            Some(dir) => read_bundle(&self.base_dir.join(dir)).context("ingest")?,
            None => generate_bundle(&self.config.synth_config()).context("synth")?.0,
        };
        bundle.validate().context("ingest")?;
        Ok(bundle)
    }

    /// Writes a synthetic bundle under `data/` and its ground truth.
    pub fn synth(&self) -> CliResult<Vec<String>> {
        let (bundle, truth) = generate_bundle(&self.config.synth_config()).context("synth")?;
        let dir = self.path("data");
        write_bundle(&dir, &bundle).context("synth")?;
        write_json(&self.path("truth.json"), &truth).context("synth")?;
        let mut files: Vec<String> = fs::read_dir(&dir)
            .map_err(|e| CliError::io(&dir, e))?
            .filter_map(|e| e.ok())
            .map(|e| format!("data/{}", e.file_name().to_string_lossy()))
            .collect();
        files.sort();
        files.push("truth.json".into());
        Ok(files)
    }

    pub fn ingest(&self, bundle: &DataBundle) -> CliResult<Vec<String>> {
        #[derive(Serialize)]
        struct SeriesInfo {
            name: String,
            class: Option<String>,
            transform: String,
            start: MonthDate,
            end: MonthDate,
            n: usize,
            outliers: Vec<MonthDate>,
        }
        let info = |s: &MonthlySeries, class: Option<String>| -> CliResult<SeriesInfo> {
            let transformed = apply_transform(s, s.transform).context("ingest")?;
            Ok(SeriesInfo {
                name: s.name.clone(),
                class,
                transform: s.transform.to_string(),
                start: s.start,
                end: s.end(),
                n: s.len(),
                outliers: flag_outliers(&transformed).context("ingest")?,
            })
        };
        let mut series = vec![info(&bundle.price, None)?, info(&bundle.ip, None)?];
        for p in &bundle.predictors {
            series.push(info(&p.series, Some(p.class.to_string()))?);
        }
        for s in &bundle.sector_ip {
            series.push(info(s, None)?);
        }
        let summary = serde_json::json!({
            "series": series,
            "sector_weights": bundle.sector_weights,
            "emissions_annual": {
                "start_year": bundle.emissions_annual.start_year,
                "end_year": bundle.emissions_annual.end_year(),
            },
        });
        write_json(&self.path("ingest.json"), &summary).context("ingest")?;
        Ok(vec!["ingest.json".into()])
    }

    pub fn interpolate(&self, bundle: &DataBundle) -> CliResult<Vec<String>> {
        let fit = interpolate_emissions(bundle, self.config.disagg.constant).context("interpolate")?;
        let monthly = fit.monthly.clone().renamed("emissions");
        write_monthly_csv(&self.path("emissions_monthly.csv"), &[&monthly]).context("interpolate")?;
        let summary = serde_json::json!({
            "rho": fit.rho,
            "beta": fit.beta,
            "loglik": fit.fit_loglik,
            "constant": self.config.disagg.constant,
        });
        write_json(&self.path("interpolation.json"), &summary).context("interpolate")?;
        Ok(vec!["emissions_monthly.csv".into(), "interpolation.json".into()])
    }

    /// Full-sample factors for inspection; backtests re-extract per window.
    pub fn factors(&self, bundle: &DataBundle) -> CliResult<Vec<String>> {
        let transformed = bundle
            .predictors
            .iter()
            .map(|p| Ok((apply_transform(&p.series, p.series.transform)?, p.class)))
            .collect::<carbon_forecast::Result<Vec<_>>>()
            .context("factors")?;
        let panel = align_panel(&transformed).context("factors")?;
        let k = self.config.factors.count.min(panel.n_predictors());
        let model = extract_factors(&panel, k).context("factors")?;
        let refs: Vec<&MonthlySeries> = model.factors.iter().collect();
        write_monthly_csv(&self.path("factors.csv"), &refs).context("factors")?;

        let fcols: Vec<String> = (1..=k).map(|c| format!("factor{c}")).collect();
        let mut header = vec!["predictor".to_string(), "class".to_string()];
        header.extend(fcols.iter().cloned());
        let rows: Vec<Vec<String>> = panel
            .series()
            .iter()
            .enumerate()
            .map(|(j, s)| {
                let mut row = vec![s.name.clone(), panel.class_of(&s.name).map(|c| c.to_string()).unwrap_or_default()];
                row.extend((0..k).map(|c| model.loadings[(j, c)].to_string()));
                row
            })
            .collect();
        write_table(&self.path("factor_loadings.csv"), &header, &rows)?;

        let r2 = r2_table(&model, &panel).context("factors")?;
        let rows: Vec<Vec<String>> = r2
            .iter()
            .map(|r| {
                let mut row = vec![r.predictor.clone(), r.class.to_string()];
                row.extend(r.r2.iter().map(|v| v.to_string()));
                row
            })
            .collect();
        write_table(&self.path("factor_r2.csv"), &header, &rows)?;

        let parts = factor_contributions(&model, &panel, 0).context("factors")?;
        let mut series: Vec<MonthlySeries> = parts.values().cloned().collect();
        series.push(model.factors[0].clone());
        let refs: Vec<&MonthlySeries> = series.iter().collect();
        write_monthly_csv(&self.path("factor1_contributions.csv"), &refs).context("factors")?;

        let summary = serde_json::json!({
            "sample_start": panel.start(),
            "sample_end": panel.end(),
            "eigenvalues": model.eigenvalues,
            "variance_shares": model.variance_shares,
        });
        write_json(&self.path("factors.json"), &summary).context("factors")?;
        Ok(vec![
            "factors.csv".into(),
            "factor_loadings.csv".into(),
            "factor_r2.csv".into(),
            "factor1_contributions.csv".into(),
            "factors.json".into(),
        ])
    }

    pub fn backtest(&self, bundle: &DataBundle) -> CliResult<Vec<String>> {
        let plan = self.config.plan()?;
        let records = run_expanding_window(bundle, &plan).context("backtest")?;
        write_json(&self.path(RECORDS_JSON), &records).context("backtest")?;
        write_records_csv(&self.path("records.csv"), &records).context("backtest")?;
        let mut files = vec![RECORDS_JSON.to_string(), "records.csv".to_string()];
        if self.config.monitor.enabled {
            if let Some(dplan) = self.config.demand_plan()? {
                let recs = run_expanding_window(bundle, &dplan).context("backtest (emissions)")?;
                write_json(&self.path(EMISSION_RECORDS_JSON), &recs).context("backtest")?;
                write_records_csv(&self.path("records_emissions.csv"), &recs).context("backtest")?;
                files.push(EMISSION_RECORDS_JSON.into());
                files.push("records_emissions.csv".into());
            }
        }
        Ok(files)
    }

    fn read_records(&self, name: &str) -> CliResult<Vec<ForecastRecord>> {
        let path = self.path(name);
        if !path.exists() {
            return Err(CliError::Incomplete(format!("{} is missing; run the backtest stage first", path.display())));
        }
        read_json(&path).context("read records")
    }

    pub fn score(&self) -> CliResult<Vec<String>> {
        let plan = self.config.plan()?;
        let all = self.read_records(RECORDS_JSON)?;
        let records = if plan.align_evaluation {
            align_evaluation_sample(&all, &plan)
        } else {
            all
        };
        let bench: ModelSpec = self
            .config
            .eval
            .benchmark
            .parse()
            .map_err(|e: carbon_forecast::Error| CliError::Config(e.to_string()))?;
        let bench = bench.id();
        let scores = score_records(&records, &bench).context("score")?;
        write_json(&self.path(SCORES_JSON), &scores).context("score")?;
        let header: Vec<String> = [
            "model",
            "horizon",
            "n_obs",
            "rmsfe",
            "relative_rmsfe",
            "success_ratio",
            "qcrps",
            "wqcrps_center",
            "wqcrps_right",
            "wqcrps_left",
            "dm_statistic",
            "dm_p_value",
            "pt_statistic",
            "pt_p_value",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        let rows: Vec<Vec<String>> = scores
            .iter()
            .map(|s| {
                vec![
                    s.model.clone(),
                    s.horizon.to_string(),
                    s.n_obs.to_string(),
                    s.rmsfe.to_string(),
                    s.relative_rmsfe.to_string(),
                    s.success_ratio.to_string(),
                    opt(s.qcrps),
                    opt(s.wqcrps_center),
                    opt(s.wqcrps_right),
                    opt(s.wqcrps_left),
                    opt(s.dm_statistic),
                    opt(s.dm_p_value),
                    opt(s.pt_statistic),
                    opt(s.pt_p_value),
                ]
            })
            .collect();
        write_table(&self.path("scores.csv"), &header, &rows)?;

        let paths = self.fluctuation_paths(&records, &bench, &plan.models)?;
        write_json(&self.path(FLUCTUATION_JSON), &paths).context("score")?;
        let header: Vec<String> = ["model", "horizon", "date", "statistic", "cv_one_sided_5pct"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let mut rows = Vec::new();
        for p in &paths {
            for (d, v) in p.dates.iter().zip(&p.statistic) {
                rows.push(vec![
                    p.model.clone(),
                    p.horizon.to_string(),
                    d.to_string(),
                    v.to_string(),
                    p.cv_one_sided_5pct.to_string(),
                ]);
            }
        }
        write_table(&self.path("fluctuation.csv"), &header, &rows)?;
        Ok(vec![
            SCORES_JSON.into(),
            "scores.csv".into(),
            FLUCTUATION_JSON.into(),
            "fluctuation.csv".into(),
        ])
    }

    fn fluctuation_paths(
        &self,
        records: &[ForecastRecord],
        bench: &str,
        models: &[ModelSpec],
    ) -> CliResult<Vec<FluctuationPath>> {
        let e = &self.config.eval;
        let horizons: Vec<usize> = if e.fluctuation_horizons.is_empty() {
            (1..=self.config.backtest.horizon).collect()
        } else {
            e.fluctuation_horizons
                .iter()
                .copied()
                .filter(|h| *h >= 1 && *h <= self.config.backtest.horizon)
                .collect()
        };
        let opts = FluctuationOptions {
            hac_lags: e.fluctuation_hac_lags,
            ..Default::default()
        };
        let mut out = Vec::new();
        for m in models.iter().map(|m| m.id()).filter(|id| id != bench) {
            for &h in &horizons {
                let (dates, d) = loss_differential(records, &m, bench, h).context("fluctuation")?;
                if d.len() < e.fluctuation_window {
                    log::warn!("fluctuation {m} h={h}: {} observations for window {}, skipped", d.len(), e.fluctuation_window);
                    continue;
                }
                let r = fluctuation_test(&d, e.fluctuation_window, &FLUCTUATION_CV_05, opts).context("fluctuation")?;
                out.push(FluctuationPath {
                    model: m.clone(),
                    benchmark: bench.to_string(),
                    horizon: h,
                    window: r.window,
                    mu: r.mu,
                    dates: dates[r.first_center..r.first_center + r.path.len()].to_vec(),
                    statistic: r.path,
                    max_statistic: r.max_statistic,
                    cv_one_sided_5pct: r.cv_one_sided_5pct,
                    reject: r.reject,
                });
            }
        }
        Ok(out)
    }

    pub fn monitor(&self, bundle: &DataBundle) -> CliResult<Vec<String>> {
        let mcfg = &self.config.monitor;
        let records = self.read_records(RECORDS_JSON)?;
        let plan = self.config.plan()?;
        let models: Vec<String> = if mcfg.price_models.is_empty() {
            plan.models.iter().map(|m| m.id()).collect()
        } else {
            mcfg.price_models
                .iter()
                .map(|id| id.parse::<ModelSpec>().map(|m| m.id()))
                .collect::<carbon_forecast::Result<_>>()
                .context("monitor")?
        };
        let mut price = Vec::new();
        for id in &models {
            let own: Vec<ForecastRecord> = records.iter().filter(|r| &r.model == id).cloned().collect();
            let index = |dir: Direction| {
                if mcfg.density {
                    price_pressure_density(&own, &bundle.price, dir)
                } else {
                    price_pressure(&own, &bundle.price, dir)
                }
            };
            let up = index(Direction::Up).context("monitor")?;
            let down = index(Direction::Down).context("monitor")?;
            price.push(PricePressure {
                model: id.clone(),
                up_smoothed: up.smoothed(mcfg.smoothing).context("monitor")?,
                down_smoothed: down.smoothed(mcfg.smoothing).context("monitor")?,
                up,
                down,
            });
        }
        let demand = match self.config.demand_plan()? {
            Some(dplan) => {
                let recs = self.read_records(EMISSION_RECORDS_JSON)?;
                let index = demand_pressure(&recs).context("monitor")?;
                Some(DemandPressure {
                    model: dplan.models[0].id(),
                    smoothed: index.smoothed(mcfg.smoothing).context("monitor")?,
                    index,
                })
            }
            None => None,
        };
        let output = MonitorOutput { price, demand };
        write_json(&self.path(PRESSURE_JSON), &output).context("monitor")?;

        let header: Vec<String> = ["model", "origin", "pp_up", "pp_down", "pp_up_smoothed", "pp_down_smoothed"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let mut rows = Vec::new();
        for p in &output.price {
            for (i, o) in p.up.origins.iter().enumerate() {
                rows.push(vec![
                    p.model.clone(),
                    o.to_string(),
                    p.up.values[i].to_string(),
                    p.down.values[i].to_string(),
                    opt(p.up_smoothed.value_at(*o)),
                    opt(p.down_smoothed.value_at(*o)),
                ]);
            }
        }
        write_table(&self.path("price_pressure.csv"), &header, &rows)?;
        let mut files = vec![PRESSURE_JSON.to_string(), "price_pressure.csv".to_string()];
        if let Some(d) = &output.demand {
            let header: Vec<String> = ["model", "origin", "demand", "demand_smoothed"]
                .iter()
                .map(|s| s.to_string())
                .collect();
            let rows: Vec<Vec<String>> = d
                .index
                .origins
                .iter()
                .zip(&d.index.values)
                .map(|(o, v)| vec![d.model.clone(), o.to_string(), v.to_string(), opt(d.smoothed.value_at(*o))])
                .collect();
            write_table(&self.path("demand_pressure.csv"), &header, &rows)?;
            files.push("demand_pressure.csv".into());
        }
        Ok(files)
    }

    pub fn report(&self) -> CliResult<Vec<String>> {
        let path = self.path(SCORES_JSON);
        if !path.exists() {
            return Err(CliError::Incomplete(format!("{} is missing; run the score stage first", path.display())));
        }
        let scores: Vec<ScoreReport> = read_json(&path).context("report")?;
        let order: Vec<String> = self.config.plan()?.models.iter().map(|m| m.id()).collect();
        report::write_report(self, &scores, &order)
    }

    /// Every stage in order, then the manifest.
    pub fn run_all(&self) -> CliResult<Manifest> {
        let mut timings = BTreeMap::new();
        let mut files = Vec::new();
        let mut timed = |name: &str, f: &mut dyn FnMut() -> CliResult<Vec<String>>| -> CliResult<()> {
            let t0 = Instant::now();
            files.extend(f()?);
            timings.insert(name.to_string(), t0.elapsed().as_secs_f64());
            Ok(())
        };
        let bundle = self.bundle()?;
        if self.config.data.dir.is_none() {
            timed("synth", &mut || self.synth())?;
        }
        timed("ingest", &mut || self.ingest(&bundle))?;
        timed("interpolate", &mut || self.interpolate(&bundle))?;
        timed("factors", &mut || self.factors(&bundle))?;
        timed("backtest", &mut || self.backtest(&bundle))?;
        timed("score", &mut || self.score())?;
        if self.config.monitor.enabled {
            timed("monitor", &mut || self.monitor(&bundle))?;
        }
        timed("report", &mut || self.report())?;
        self.write_manifest(&files, timings)
    }

    pub fn write_manifest(&self, files: &[String], timings: BTreeMap<String, f64>) -> CliResult<Manifest> {
        let mut outputs = BTreeMap::new();
        for f in files {
            let p = self.path(f);
            let bytes = fs::read(&p).map_err(|e| CliError::io(&p, e))?;
            outputs.insert(f.clone(), hex_digest(&bytes));
        }
        let version = env!("CARGO_PKG_VERSION").to_string();
        let config_hash = self.config.hash();
        let hash = Manifest::compute_hash(&version, self.config.seed, &config_hash, &outputs);
        let manifest = Manifest {
            version,
            seed: self.config.seed,
            config_hash,
            outputs,
            timings,
            hash,
        };
        write_json(&self.path(MANIFEST_JSON), &manifest).context("manifest")?;
        Ok(manifest)
    }
}
