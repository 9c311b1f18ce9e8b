//! Expanding-window out-of-sample harness.
//!
//! Each origin is an independent job. The bundle is cut at the origin, the
//! predictor panel is transformed and standardised, factors are extracted
//! and emissions are disaggregated on that window only, so nothing dated
//! after the origin reaches a fit. Realized values are attached from the
//! full bundle afterwards.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::disagg::{disaggregate, weighted_indicator, ChowLinResult, RhoChoice};
use crate::error::{Error, Result};
use crate::factors::extract_factors;
use crate::forecast::{
    iterate_point_forecast, quantile_grid, sign_forecast, simulate_predictive, to_levels, ForecastRecord,
};
use crate::io::DataBundle;
use crate::linalg::Mat;
use crate::models::{
    ar_residual_variances, column, fit_arima, fit_bar, fit_bvar_minnesota, fit_bvar_strict_minnesota, fit_bvar_sv,
    fit_rw, select_lag_aic, select_var_lag_aic, MinnesotaPrior, ModelPosterior, NaturalConjugatePrior, SvConfig,
    SvRun, VarSpec,
};
use crate::rng::derive_seed;
use crate::timeseries::{
    align_panel, apply_transform, common_range, log, log_diff, MonthDate, MonthlySeries, PredictorClass,
};

/// Variable whose level is forecast.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    #[default]
    Price,
    Emissions,
}

impl Target {
    pub fn as_str(self) -> &'static str {
        match self {
            Target::Price => "price",
            Target::Emissions => "emissions",
        }
    }

    /// Column of the target in a VAR system.
    fn var_index(self) -> usize {
        match self {
            Target::Price => 0,
            Target::Emissions => 1,
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "price" => Ok(Target::Price),
            "emissions" => Ok(Target::Emissions),
            _ => Err(Error::InvalidArgument(format!("unknown target `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LagChoice {
    Fixed(usize),
    Aic { max: usize },
}

impl LagChoice {
    fn label(self) -> String {
        match self {
            LagChoice::Fixed(p) => p.to_string(),
            LagChoice::Aic { .. } => "AIC".into(),
        }
    }
}

/// Largest order searched by `(AIC)` model ids.
pub const DEFAULT_MAX_LAG: usize = 12;

/// A model in the comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelSpec {
    RandomWalk { drift: bool },
    /// ARIMA(ar, 1, ma) on log levels, `ar, ma` in `{0, 1}`.
    Arima { ar: usize, ma: usize },
    /// Bayesian AR on growth rates.
    Bar { lags: LagChoice },
    /// `[Δr, emis, Δip]` when `factors == 0`, else `[Δr, emis, F_1..F_k]`.
    Bvar { lags: LagChoice, factors: usize, sv: bool },
}

impl ModelSpec {
    /// Stable identifier; also the textual form accepted by `FromStr`.
    pub fn id(&self) -> String {
        match *self {
            ModelSpec::RandomWalk { drift: false } => "RW".into(),
            ModelSpec::RandomWalk { drift: true } => "RWD".into(),
            ModelSpec::Arima { ar, ma } => format!("ARIMA({ar},1,{ma})"),
            ModelSpec::Bar { lags } => format!("BAR({})", lags.label()),
            ModelSpec::Bvar { lags, factors, sv } => {
                let mut s = if factors == 0 {
                    format!("BVAR({})", lags.label())
                } else {
                    format!("BFAVAR({})-F{factors}", lags.label())
                };
                if sv {
                    s.push_str("-SV");
                }
                s
            }
        }
    }

    pub fn factors(&self) -> usize {
        match self {
            ModelSpec::Bvar { factors, .. } => *factors,
            _ => 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let lag_ok = |l: LagChoice| match l {
            LagChoice::Fixed(p) => p >= 1,
            LagChoice::Aic { max } => max >= 1,
        };
        match *self {
            ModelSpec::RandomWalk { .. } => Ok(()),
            ModelSpec::Arima { ar, ma } if ar <= 1 && ma <= 1 => Ok(()),
            ModelSpec::Arima { ar, ma } => Err(Error::InvalidArgument(format!(
                "unsupported order ARIMA({ar},1,{ma}): AR and MA orders must be 0 or 1"
            ))),
            ModelSpec::Bar { lags } | ModelSpec::Bvar { lags, .. } if !lag_ok(lags) => {
                Err(Error::InvalidArgument(format!("{}: lag order must be at least 1", self.id())))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

fn parse_lag(s: &str, id: &str) -> Result<LagChoice> {
    if s.eq_ignore_ascii_case("aic") {
        return Ok(LagChoice::Aic { max: DEFAULT_MAX_LAG });
    }
    s.parse::<usize>()
        .ok()
        .filter(|p| *p >= 1)
        .map(LagChoice::Fixed)
        .ok_or_else(|| Error::InvalidArgument(format!("bad lag order in model id `{id}`")))
}

/// Splits `NAME(args)rest` into its parts.
fn split_call(s: &str) -> Option<(&str, &str, &str)> {
    let open = s.find('(')?;
    let close = s[open..].find(')')? + open;
    Some((&s[..open], &s[open + 1..close], &s[close + 1..]))
}

impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(raw: &str) -> Result<Self> {
        let id = raw.trim();
        let bad = || Error::InvalidArgument(format!("unknown model id `{id}`"));
        let spec = match id.to_ascii_uppercase().as_str() {
            "RW" => ModelSpec::RandomWalk { drift: false },
            "RWD" => ModelSpec::RandomWalk { drift: true },
            upper => {
                let (name, args, rest) = split_call(upper).ok_or_else(bad)?;
                match name {
                    "ARIMA" => {
                        let parts: Vec<&str> = args.split(',').map(str::trim).collect();
                        let ord: Vec<usize> = parts
                            .iter()
                            .map(|p| p.parse::<usize>())
                            .collect::<std::result::Result<_, _>>()
                            .map_err(|_| bad())?;
                        if ord.len() != 3 || !rest.is_empty() {
                            return Err(bad());
                        }
                        if ord[1] != 1 {
                            return Err(Error::InvalidArgument(format!(
                                "unsupported order `{id}`: only first differences are supported"
                            )));
                        }
                        ModelSpec::Arima { ar: ord[0], ma: ord[2] }
                    }
                    "BAR" if rest.is_empty() => ModelSpec::Bar { lags: parse_lag(args, id)? },
                    "BVAR" | "BFAVAR" => {
                        let lags = parse_lag(args, id)?;
                        let mut factors = 0;
                        let mut sv = false;
                        for part in rest.split('-').filter(|p| !p.is_empty()) {
                            if part == "SV" {
                                sv = true;
                            } else if let Some(k) = part.strip_prefix('F') {
                                factors = k.parse().map_err(|_| bad())?;
                            } else {
                                return Err(bad());
                            }
                        }
                        if (name == "BFAVAR") != (factors > 0) {
                            return Err(Error::InvalidArgument(format!(
                                "`{id}`: BFAVAR ids need a factor count -F<k> >= 1, BVAR ids none"
                            )));
                        }
                        ModelSpec::Bvar { lags, factors, sv }
                    }
                    _ => return Err(bad()),
                }
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Expanding-window design and estimation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestPlan {
    pub first_estimation_end: MonthDate,
    pub last_origin: MonthDate,
    /// Horizons `1..=horizon`.
    pub horizon: usize,
    pub models: Vec<ModelSpec>,
    pub target: Target,
    /// Compute predictive draws and quantiles.
    pub density: bool,
    pub seed: u64,
    /// Predictive draws per record.
    pub draws: usize,
    /// Quantile grid size `J`.
    pub quantile_levels: usize,
    pub keep_draws: bool,
    /// Use the mean of level draws as the point forecast.
    pub draw_mean_point: bool,
    /// Extend origins so every horizon covers targets
    /// `first_estimation_end + H ..= last_origin + H`.
    pub align_evaluation: bool,
    pub prior: MinnesotaPrior,
    /// Equation-by-equation Minnesota prior instead of normal-inverse-Wishart.
    pub strict_minnesota: bool,
    pub sv: SvConfig,
    pub sv_run: SvRun,
    pub chow_lin_constant: bool,
}

impl BacktestPlan {
    pub fn new(first_estimation_end: MonthDate, last_origin: MonthDate, horizon: usize, models: Vec<ModelSpec>) -> Self {
        Self {
            first_estimation_end,
            last_origin,
            horizon,
            models,
            target: Target::Price,
            density: false,
            seed: 0,
            draws: 5000,
            quantile_levels: 20,
            keep_draws: false,
            draw_mean_point: false,
            align_evaluation: false,
            prior: MinnesotaPrior::default(),
            strict_minnesota: false,
            sv: SvConfig::default(),
            sv_run: SvRun::default(),
            chow_lin_constant: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.last_origin < self.first_estimation_end {
            return Err(Error::InvalidArgument(format!(
                "last origin {} precedes first estimation end {}",
                self.last_origin, self.first_estimation_end
            )));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidArgument("horizon must be at least 1".into()));
        }
        if self.models.is_empty() {
            return Err(Error::InvalidArgument("no models in the plan".into()));
        }
        let mut ids: Vec<String> = self.models.iter().map(|m| m.id()).collect();
        ids.sort();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("duplicate model ids in the plan".into()));
        }
        for m in &self.models {
            m.validate()?;
        }
        if self.density && self.quantile_levels < 2 {
            return Err(Error::InvalidArgument("quantile grid needs J >= 2".into()));
        }
        self.prior.validate()
    }

    /// Forecast origins in chronological order.
    pub fn origins(&self) -> Vec<MonthDate> {
        let extra = if self.align_evaluation { self.horizon as i64 - 1 } else { 0 };
        let n = self.first_estimation_end.months_until(self.last_origin) + 1 + extra;
        (0..n).map(|i| self.first_estimation_end.add_months(i)).collect()
    }

    /// Common target months shared by all horizons.
    pub fn evaluation_range(&self) -> (MonthDate, MonthDate) {
        let h = self.horizon as i64;
        (self.first_estimation_end.add_months(h), self.last_origin.add_months(h))
    }
}

/// Keeps records whose target lies in the plan's common evaluation range.
pub fn align_evaluation_sample(records: &[ForecastRecord], plan: &BacktestPlan) -> Vec<ForecastRecord> {
    let (lo, hi) = plan.evaluation_range();
    records
        .iter()
        .filter(|r| r.target >= lo && r.target <= hi)
        .cloned()
        .collect()
}

/// Monthly emissions by Chow-Lin on the sector-weighted production
/// indicator over the bundle's full span.
pub fn interpolate_emissions(bundle: &DataBundle, constant: bool) -> Result<ChowLinResult> {
    let indicator = weighted_indicator(&bundle.sector_ip, &bundle.sector_weights)?;
    disaggregate(&bundle.emissions_annual, &indicator, constant, RhoChoice::Estimate)
}

/// Series derived from a bundle cut at one origin.
#[derive(Debug, Clone)]
pub struct WindowData {
    pub origin: MonthDate,
    /// Log real price.
    pub log_price: MonthlySeries,
    pub emissions: MonthlySeries,
    pub dlog_price: MonthlySeries,
    pub emis: MonthlySeries,
    pub dlog_ip: MonthlySeries,
    pub factors: Vec<MonthlySeries>,
}

impl WindowData {
    /// Builds the window from a bundle already cut at `origin`.
    pub fn build(bundle: &DataBundle, origin: MonthDate, n_factors: usize, chow_lin_constant: bool) -> Result<Self> {
        if bundle.price.end() != origin {
            return Err(Error::Alignment(format!(
                "price data end {} differs from origin {origin}",
                bundle.price.end()
            )));
        }
        let emissions = interpolate_emissions(bundle, chow_lin_constant)?.monthly;
        let factors = if n_factors > 0 {
            let transformed = bundle
                .predictors
                .iter()
                .map(|p| Ok((apply_transform(&p.series, p.series.transform)?, p.class)))
                .collect::<Result<Vec<(MonthlySeries, PredictorClass)>>>()?;
            let panel = align_panel(&transformed)?;
            extract_factors(&panel, n_factors)?.factors
        } else {
            Vec::new()
        };
        Ok(Self {
            origin,
            log_price: log(&bundle.price)?,
            dlog_price: log_diff(&bundle.price)?,
            emis: log_diff(&emissions)?,
            dlog_ip: log_diff(&bundle.ip)?,
            emissions,
            factors,
        })
    }

    /// VAR data matrix on the common sample of its columns.
    pub fn var_data(&self, factors: usize) -> Result<(Mat, Vec<String>)> {
        let mut cols: Vec<&MonthlySeries> = vec![&self.dlog_price, &self.emis];
        let mut names = vec!["dlog_price".to_string(), "emis".to_string()];
        if factors == 0 {
            cols.push(&self.dlog_ip);
            names.push("dlog_ip".into());
        } else {
            if factors > self.factors.len() {
                return Err(Error::Dimension(format!(
                    "{factors} factors requested, {} extracted",
                    self.factors.len()
                )));
            }
            for (k, f) in self.factors.iter().take(factors).enumerate() {
                cols.push(f);
                names.push(format!("factor{}", k + 1));
            }
        }
        let (start, end) = common_range(&cols)?;
        let sliced = cols.iter().map(|s| s.slice(start, end)).collect::<Result<Vec<_>>>()?;
        let t = sliced[0].len();
        Ok((Mat::from_fn(t, sliced.len(), |i, j| sliced[j].values()[i]), names))
    }

    fn univariate(&self, target: Target) -> (&MonthlySeries, &MonthlySeries) {
        match target {
            Target::Price => (&self.log_price, &self.dlog_price),
            Target::Emissions => (&self.emissions, &self.emis),
        }
    }

    /// Log level of the target at the origin.
    fn log_origin_level(&self, target: Target) -> f64 {
        match target {
            Target::Price => *self.log_price.values().last().unwrap(),
            Target::Emissions => self.emissions.values().last().unwrap().ln(),
        }
    }
}

/// A fitted model with the history it forecasts from.
struct Fitted {
    post: ModelPosterior,
    history: Mat,
    var: usize,
}

fn fit_model(spec: &ModelSpec, w: &WindowData, plan: &BacktestPlan, seed: u64) -> Result<Fitted> {
    let target = plan.target;
    match *spec {
        ModelSpec::RandomWalk { drift } => {
            let (levels, growth) = w.univariate(target);
            let logs: Vec<f64> = match target {
                Target::Price => levels.values().to_vec(),
                Target::Emissions => levels.values().iter().map(|v| v.ln()).collect(),
            };
            Ok(Fitted {
                post: ModelPosterior::RandomWalk(fit_rw(&logs, drift)?),
                history: column(growth.values()),
                var: 0,
            })
        }
        ModelSpec::Arima { ar, ma } => {
            let (_, growth) = w.univariate(target);
            Ok(Fitted {
                post: ModelPosterior::Arima(fit_arima(growth.values(), ar, ma)?),
                history: column(growth.values()),
                var: 0,
            })
        }
        ModelSpec::Bar { lags } => {
            let (_, growth) = w.univariate(target);
            let dy = growth.values();
            let p = match lags {
                LagChoice::Fixed(p) => p,
                LagChoice::Aic { max } => select_lag_aic(dy, max)?,
            };
            let sigma2 = ar_residual_variances(&column(dy), p)?[0];
            let prior = NaturalConjugatePrior::minnesota(sigma2, p, &plan.prior);
            Ok(Fitted {
                post: ModelPosterior::Conjugate(fit_bar(dy, p, &prior)?),
                history: column(dy),
                var: 0,
            })
        }
        ModelSpec::Bvar { lags, factors, sv } => {
            let (y, names) = w.var_data(factors)?;
            let p = match lags {
                LagChoice::Fixed(p) => p,
                LagChoice::Aic { max } => select_var_lag_aic(&y, max)?,
            };
            let vs = VarSpec::new(names, p)?;
            let post = if sv {
                ModelPosterior::Sv(fit_bvar_sv(&y, &vs, &plan.prior, &plan.sv, plan.sv_run, seed)?)
            } else if plan.strict_minnesota {
                ModelPosterior::Minnesota(fit_bvar_strict_minnesota(&y, &vs, &plan.prior)?)
            } else {
                ModelPosterior::Conjugate(fit_bvar_minnesota(&y, &vs, &plan.prior)?)
            };
            Ok(Fitted {
                post,
                history: y,
                var: target.var_index(),
            })
        }
    }
}

/// Stream index of an origin: months since year 0, so seeds do not depend on
/// where the plan starts.
fn origin_index(origin: MonthDate) -> u64 {
    (origin.year() as i64 * 12 + origin.month() as i64 - 1) as u64
}

fn forecast_origin(
    bundle: &DataBundle,
    plan: &BacktestPlan,
    origin: MonthDate,
    n_factors: usize,
) -> Result<Vec<ForecastRecord>> {
    let cut = bundle.through(origin)?;
    let w = WindowData::build(&cut, origin, n_factors, plan.chow_lin_constant)?;
    let r_last = w.log_origin_level(plan.target);
    let origin_level = r_last.exp();
    let h = plan.horizon;
    let mut out = Vec::with_capacity(plan.models.len() * h);
    for spec in &plan.models {
        let id = spec.id();
        let key = format!("{id}/{}", plan.target);
        let fit_seed = derive_seed(plan.seed, origin_index(origin), &format!("{key}/fit"));
        let sim_seed = derive_seed(plan.seed, origin_index(origin), &format!("{key}/predictive"));
        let fitted = fit_model(spec, &w, plan, fit_seed).inspect_err(|e| {
            log::error!("fitting {id} at origin {origin}: {e}");
        })?;
        let path = iterate_point_forecast(&fitted.post, &fitted.history, h)?;
        let dlog: Vec<f64> = path.column(fitted.var).iter().copied().collect();
        let points = to_levels(r_last, &dlog)?;
        let draws = if plan.density {
            let sims = simulate_predictive(&fitted.post, &fitted.history, h, plan.draws, sim_seed)?;
            Some(sims.levels(fitted.var, r_last)?)
        } else {
            None
        };
        for k in 0..h {
            let mut rec = ForecastRecord {
                model: id.clone(),
                origin,
                horizon: k + 1,
                target: origin.add_months(k as i64 + 1),
                origin_level,
                point: points[k],
                draw_mean: None,
                sign: 0,
                quantiles: None,
                draws: None,
                realized: None,
            };
            if let Some(d) = &draws {
                let m = d[k].iter().sum::<f64>() / d[k].len() as f64;
                rec.draw_mean = Some(m);
                rec.quantiles = Some(quantile_grid(&d[k], plan.quantile_levels)?);
                if plan.draw_mean_point {
                    rec.point = m;
                }
                if plan.keep_draws {
                    rec.draws = Some(d[k].clone());
                }
            }
            rec.sign = sign_forecast(rec.point, origin_level);
            out.push(rec);
        }
    }
    Ok(out)
}

/// Runs every model at every origin of `plan`, returning records ordered by
/// origin, plan model order and horizon. Records whose target is beyond the
/// data carry no realized value.
pub fn run_expanding_window(bundle: &DataBundle, plan: &BacktestPlan) -> Result<Vec<ForecastRecord>> {
    plan.validate()?;
    bundle.validate()?;
    let data_end = bundle.price.end();
    if plan.last_origin > data_end {
        return Err(Error::InsufficientData(format!(
            "last origin {} is after the end of the price data {data_end}",
            plan.last_origin
        )));
    }
    let origins: Vec<MonthDate> = plan.origins().into_iter().filter(|o| *o <= data_end).collect();
    if origins.len() < plan.origins().len() {
        log::warn!(
            "{} aligned origins after {data_end} dropped; the evaluation sample is incomplete",
            plan.origins().len() - origins.len()
        );
    }
    let n_factors = plan.models.iter().map(|m| m.factors()).max().unwrap_or(0);
    let per_origin = origins
        .par_iter()
        .map(|o| forecast_origin(bundle, plan, *o, n_factors))
        .collect::<Result<Vec<_>>>()?;
    let mut records: Vec<ForecastRecord> = per_origin.into_iter().flatten().collect();

    let realized_emissions = match plan.target {
        Target::Emissions => Some(interpolate_emissions(bundle, plan.chow_lin_constant)?.monthly),
        Target::Price => None,
    };
    for r in &mut records {
        r.realized = match &realized_emissions {
            Some(e) => e.value_at(r.target),
            None => bundle.price.value_at(r.target),
        };
    }
    let rank = |id: &str| plan.models.iter().position(|m| m.id() == id).unwrap_or(usize::MAX);
    records.sort_by(|a, b| {
        (a.origin, rank(&a.model), a.horizon).cmp(&(b.origin, rank(&b.model), b.horizon))
    });
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_bundle, SynthConfig};

    fn d(y: i32, m: u32) -> MonthDate {
        MonthDate::new(y, m).unwrap()
    }

    #[test]
    fn model_ids_round_trip() {
        for id in [
            "RW",
            "RWD",
            "ARIMA(1,1,1)",
            "ARIMA(0,1,1)",
            "BAR(1)",
            "BAR(AIC)",
            "BVAR(1)",
            "BVAR(2)-SV",
            "BFAVAR(1)-F2",
            "BFAVAR(1)-F1-SV",
        ] {
            let spec: ModelSpec = id.parse().unwrap();
            assert_eq!(spec.id(), id);
        }
        assert_eq!("bvar(1)-sv".parse::<ModelSpec>().unwrap().id(), "BVAR(1)-SV");
    }

    #[test]
    fn unsupported_ids_are_usage_errors() {
        for id in ["ARIMA(2,1,2)", "ARIMA(1,2,1)", "BFAVAR(1)", "BVAR(1)-F2", "BAR(0)", "LSTM", "BVAR(1)-X"] {
            let err = id.parse::<ModelSpec>().unwrap_err();
            assert_eq!(err.kind(), crate::ErrorKind::Usage, "{id}");
        }
        let msg = "ARIMA(2,1,2)".parse::<ModelSpec>().unwrap_err().to_string();
        assert!(msg.contains("unsupported order"), "{msg}");
    }

    #[test]
    fn default_geometry_gives_58_common_targets() {
        let mut plan = BacktestPlan::new(d(2017, 12), d(2022, 9), 12, vec![ModelSpec::RandomWalk { drift: false }]);
        assert_eq!(plan.origins().len(), 58);
        plan.align_evaluation = true;
        let origins = plan.origins();
        assert_eq!(origins.last().copied(), Some(d(2023, 8)));
        assert_eq!(plan.evaluation_range(), (d(2018, 12), d(2023, 9)));
        for h in 1..=12 {
            let n = origins
                .iter()
                .filter(|o| {
                    let t = o.add_months(h);
                    t >= d(2018, 12) && t <= d(2023, 9)
                })
                .count();
            assert_eq!(n, 58, "h={h}");
        }
    }

    #[test]
    fn plan_validation() {
        let rw = ModelSpec::RandomWalk { drift: false };
        assert!(BacktestPlan::new(d(2020, 1), d(2019, 1), 3, vec![rw]).validate().is_err());
        assert!(BacktestPlan::new(d(2019, 1), d(2019, 1), 0, vec![rw]).validate().is_err());
        assert!(BacktestPlan::new(d(2019, 1), d(2019, 1), 3, vec![rw, rw]).validate().is_err());
        assert!(BacktestPlan::new(d(2019, 1), d(2019, 1), 3, vec![]).validate().is_err());
    }

    fn small_bundle(seed: u64) -> DataBundle {
        generate_bundle(&SynthConfig::standard(seed)).unwrap().0
    }

    #[test]
    fn single_origin_gives_h_records_per_model() {
        let b = small_bundle(1);
        let models = vec![
            ModelSpec::RandomWalk { drift: false },
            ModelSpec::Bar { lags: LagChoice::Fixed(1) },
            ModelSpec::Bvar { lags: LagChoice::Fixed(1), factors: 2, sv: false },
        ];
        let plan = BacktestPlan::new(d(2018, 6), d(2018, 6), 5, models);
        let recs = run_expanding_window(&b, &plan).unwrap();
        assert_eq!(recs.len(), 15);
        for r in recs.iter().filter(|r| r.model == "RW") {
            assert!((r.point - r.origin_level).abs() < 1e-9 * r.origin_level);
            assert_eq!(r.sign, 0);
        }
        assert_eq!(recs[0].realized, b.price.value_at(d(2018, 7)));
    }

    #[test]
    fn emissions_target_uses_interpolated_levels() {
        let b = small_bundle(2);
        let mut plan = BacktestPlan::new(d(2019, 12), d(2019, 12), 3, vec![ModelSpec::RandomWalk { drift: false }]);
        plan.target = Target::Emissions;
        let recs = run_expanding_window(&b, &plan).unwrap();
        let full = interpolate_emissions(&b, true).unwrap().monthly;
        for r in &recs {
            assert_eq!(r.realized, full.value_at(r.target));
            assert!((r.point - r.origin_level).abs() < 1e-9 * r.origin_level);
        }
    }

    #[test]
    fn missing_future_leaves_realized_empty() {
        let b = small_bundle(3);
        let plan = BacktestPlan::new(d(2023, 8), d(2023, 9), 3, vec![ModelSpec::RandomWalk { drift: true }]);
        let recs = run_expanding_window(&b, &plan).unwrap();
        assert_eq!(recs.len(), 6);
        assert_eq!(recs.iter().filter(|r| r.realized.is_some()).count(), 1);
        let late = BacktestPlan::new(d(2023, 8), d(2023, 10), 3, vec![ModelSpec::RandomWalk { drift: true }]);
        assert!(run_expanding_window(&b, &late).is_err());
    }
}
