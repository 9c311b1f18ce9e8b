//! Run configuration: a TOML file with one section per stage.
//!
//! Every key has a default, so an empty file is a valid configuration that
//! runs the default model set on a generated standard bundle.

use std::fs;
use std::path::{Path, PathBuf};

use carbon_forecast::backtest::{BacktestPlan, ModelSpec, Target};
use carbon_forecast::models::{MinnesotaPrior, SvConfig, SvRun};
use carbon_forecast::synth::{SynthConfig, SynthSv};
use carbon_forecast::MonthDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub data: DataSection,
    pub synth: SynthSection,
    pub disagg: DisaggSection,
    pub factors: FactorsSection,
    pub backtest: BacktestSection,
    pub eval: EvalSection,
    pub monitor: MonitorSection,
}

/// Input bundle location; when absent a synthetic bundle is generated.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    /// Relative paths resolve against the config file's directory.
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    /// Seed of the generator; defaults to the run seed.
    pub seed: Option<u64>,
    pub months: usize,
    pub idiosyncratic_sd: f64,
    pub sv: bool,
    pub sv_mu: f64,
    pub sv_phi: f64,
    pub sv_sigma: f64,
}

impl Default for SynthSection {
    fn default() -> Self {
        Self {
            seed: None,
            months: 136,
            idiosyncratic_sd: 0.5,
            sv: false,
            sv_mu: (0.06f64 * 0.06).ln(),
            sv_phi: 0.95,
            sv_sigma: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DisaggSection {
    pub constant: bool,
}

impl Default for DisaggSection {
    fn default() -> Self {
        Self { constant: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FactorsSection {
    /// Factors reported by the full-sample `factors` stage.
    pub count: usize,
}

impl Default for FactorsSection {
    fn default() -> Self {
        Self { count: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BacktestSection {
    pub first_estimation_end: MonthDate,
    pub last_origin: MonthDate,
    pub horizon: usize,
    pub models: Vec<String>,
    pub target: Target,
    pub density: bool,
    pub draws: usize,
    pub quantile_levels: usize,
    pub keep_draws: bool,
    pub draw_mean_point: bool,
    pub align_evaluation: bool,
    pub strict_minnesota: bool,
    pub chow_lin_constant: bool,
    pub prior: MinnesotaPrior,
    pub sv: SvConfig,
    pub mcmc: SvRun,
}

impl Default for BacktestSection {
    fn default() -> Self {
        Self {
            first_estimation_end: MonthDate::new(2017, 12).expect("valid month"),
            last_origin: MonthDate::new(2022, 9).expect("valid month"),
            horizon: 12,
            models: ["RW", "RWD", "ARIMA(1,1,1)", "BAR(1)", "BVAR(1)", "BFAVAR(1)-F1", "BFAVAR(1)-F2"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            target: Target::Price,
            density: true,
            draws: 5000,
            quantile_levels: 20,
            keep_draws: false,
            draw_mean_point: false,
            align_evaluation: true,
            strict_minnesota: false,
            chow_lin_constant: true,
            prior: MinnesotaPrior::default(),
            sv: SvConfig::default(),
            mcmc: SvRun::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub benchmark: String,
    /// Centered rolling window of the fluctuation test; must be odd.
    pub fluctuation_window: usize,
    pub fluctuation_hac_lags: usize,
    /// Horizons with fluctuation paths; empty means all.
    pub fluctuation_horizons: Vec<usize>,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            benchmark: "RW".into(),
            fluctuation_window: 19,
            fluctuation_hac_lags: 0,
            fluctuation_horizons: vec![1, 12],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonitorSection {
    pub enabled: bool,
    /// Models whose price records feed the price pressure indices; empty
    /// means every backtest model.
    pub price_models: Vec<String>,
    /// Model whose emission forecasts feed the demand pressure index.
    pub demand_model: Option<String>,
    /// Backward moving-average window applied to the indices.
    pub smoothing: usize,
    /// Share of predictive draws beyond the trailing extremes instead of
    /// point-forecast indicators.
    pub density: bool,
}

impl Default for MonitorSection {
    fn default() -> Self {
        Self {
            enabled: true,
            price_models: Vec::new(),
            demand_model: None,
            smoothing: 3,
            density: false,
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn models(&self) -> CliResult<Vec<ModelSpec>> {
        self.backtest
            .models
            .iter()
            .map(|id| id.parse::<ModelSpec>().map_err(|e| CliError::Config(e.to_string())))
            .collect()
    }

    pub fn validate(&self) -> CliResult<()> {
        let models = self.models()?;
        self.plan_with(models.clone())
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        let ids: Vec<String> = models.iter().map(|m| m.id()).collect();
        let canonical = |id: &str| -> CliResult<String> {
            id.parse::<ModelSpec>()
                .map(|m| m.id())
                .map_err(|e| CliError::Config(e.to_string()))
        };
        if !ids.contains(&canonical(&self.eval.benchmark)?) {
            return Err(CliError::Config(format!(
                "benchmark `{}` is not among the backtest models",
                self.eval.benchmark
            )));
        }
        for id in &self.monitor.price_models {
            if !ids.contains(&canonical(id)?) {
                return Err(CliError::Config(format!("monitor model `{id}` is not among the backtest models")));
            }
        }
        if let Some(id) = &self.monitor.demand_model {
            canonical(id)?;
        }
        if self.eval.fluctuation_window.is_multiple_of(2) {
            return Err(CliError::Config("fluctuation_window must be odd".into()));
        }
        if self.monitor.density && !(self.backtest.density && self.backtest.keep_draws) {
            return Err(CliError::Config(
                "monitor.density needs backtest.density and backtest.keep_draws".into(),
            ));
        }
        if self.monitor.enabled && self.backtest.horizon < carbon_forecast::monitor::PRESSURE_WINDOW {
            return Err(CliError::Config(format!(
                "monitoring needs horizon >= {}",
                carbon_forecast::monitor::PRESSURE_WINDOW
            )));
        }
        if self.monitor.smoothing == 0 {
            return Err(CliError::Config("monitor.smoothing must be at least 1".into()));
        }
        if self.factors.count == 0 {
            return Err(CliError::Config("factors.count must be at least 1".into()));
        }
        Ok(())
    }

    fn plan_with(&self, models: Vec<ModelSpec>) -> BacktestPlan {
        let b = &self.backtest;
        let mut plan = BacktestPlan::new(b.first_estimation_end, b.last_origin, b.horizon, models);
        plan.target = b.target;
        plan.density = b.density;
        plan.seed = self.seed;
        plan.draws = b.draws;
        plan.quantile_levels = b.quantile_levels;
        plan.keep_draws = b.keep_draws;
        plan.draw_mean_point = b.draw_mean_point;
        plan.align_evaluation = b.align_evaluation;
        plan.prior = b.prior;
        plan.strict_minnesota = b.strict_minnesota;
        plan.sv = b.sv;
        plan.sv_run = b.mcmc;
        plan.chow_lin_constant = b.chow_lin_constant;
        plan
    }

    pub fn plan(&self) -> CliResult<BacktestPlan> {
        Ok(self.plan_with(self.models()?))
    }

    /// Plan for the emission forecasts behind the demand pressure index.
    pub fn demand_plan(&self) -> CliResult<Option<BacktestPlan>> {
        let Some(id) = &self.monitor.demand_model else {
            return Ok(None);
        };
        let spec: ModelSpec = id.parse().map_err(|e: carbon_forecast::Error| CliError::Config(e.to_string()))?;
        let mut plan = self.plan_with(vec![spec]);
        plan.target = Target::Emissions;
        plan.density = false;
        Ok(Some(plan))
    }

    pub fn synth_config(&self) -> SynthConfig {
        let s = &self.synth;
        let mut cfg = SynthConfig::standard(s.seed.unwrap_or(self.seed));
        cfg.t = s.months;
        cfg.idiosyncratic_sd = s.idiosyncratic_sd;
        if s.sv {
            cfg.sv = Some(SynthSv {
                mu: s.sv_mu,
                phi: s.sv_phi,
                sigma: s.sv_sigma,
            });
        }
        cfg
    }

    /// SHA-256 of the canonical JSON form of the configuration.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex_digest(json.as_bytes())
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_the_default() {
        let cfg = Config::from_toml("").unwrap();
        assert_eq!(cfg, Config::default());
        assert_eq!(cfg.plan().unwrap().horizon, 12);
    }

    #[test]
    fn partial_sections_override_defaults() {
        let cfg = Config::from_toml(
            r#"
seed = 9
[backtest]
models = ["RW", "BVAR(1)"]
last_origin = "2020-06"
[backtest.prior]
lambda_overall = 0.1
[backtest.mcmc]
draws = 100
"#,
        )
        .unwrap();
        let plan = cfg.plan().unwrap();
        assert_eq!(plan.seed, 9);
        assert_eq!(plan.models.len(), 2);
        assert_eq!(plan.last_origin, MonthDate::new(2020, 6).unwrap());
        assert_eq!(plan.prior.lambda_overall, 0.1);
        assert_eq!(plan.prior.lambda_cross, 0.5);
        assert_eq!(plan.sv_run.draws, 100);
        assert_eq!(plan.sv_run.burn, 2000);
    }

    #[test]
    fn config_errors() {
        for text in [
            "[backtest]\nmodels = [\"RW\", \"ARIMA(2,1,2)\"]",
            "[backtest]\nunknown_key = 1",
            "[eval]\nbenchmark = \"RWD\"\n[backtest]\nmodels = [\"RW\"]",
            "[eval]\nfluctuation_window = 20",
            "[monitor]\ndensity = true",
            "seed = \"x\"",
        ] {
            assert!(matches!(Config::from_toml(text), Err(CliError::Config(_))), "{text}");
        }
        let msg = Config::from_toml("[backtest]\nmodels = [\"RW\", \"ARIMA(2,1,2)\"]")
            .unwrap_err()
            .to_string();
        assert!(msg.contains("unsupported order"), "{msg}");
    }

    #[test]
    fn hash_tracks_content() {
        let a = Config::default();
        let mut b = Config::default();
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
    }
}
