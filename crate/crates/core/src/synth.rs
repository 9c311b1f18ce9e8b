//! Synthetic data bundles with a known data-generating process.
//!
//! The latent state `z_t = [Δr_t, emis_t, Δip_t, g_1t, ..., g_kt]` follows a
//! stationary VAR(1) `z_t = c + A z_{t-1} + u_t` with diagonal innovation
//! scales. Price growth loads on lagged factors, so factor-augmented models
//! have genuine predictive content. Predictors are `Λ g_t` plus
//! idiosyncratic noise; economic-activity predictors are emitted as levels
//! whose log differences carry that signal. Monthly emissions are
//! `exp(cumsum(emis))`, sector production indices track them with small
//! multiplicative noise, and annual emissions are calendar-year sums of the
//! monthly path.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::disagg::AnnualSeries;
use crate::error::{Error, Result};
use crate::io::{DataBundle, RawPredictor};
use crate::linalg::Mat;
use crate::rng::{job_rng, JobRng};
use crate::timeseries::{MonthDate, MonthlySeries, PredictorClass, Transform};

/// Number of observable variables ahead of the factors in the state.
pub const N_OBSERVED: usize = 3;
const BURN_IN: usize = 300;
const N_SECTORS: usize = 6;

/// Stochastic volatility of price-growth innovations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSv {
    pub mu: f64,
    pub phi: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    /// First month of the price and predictor series.
    pub start: MonthDate,
    /// Months of price and predictor data.
    pub t: usize,
    /// Predictors per class, in [`PredictorClass::ALL`] order.
    pub class_counts: [usize; 4],
    pub n_factors: usize,
    /// State intercepts, length `3 + n_factors`.
    pub intercept: Vec<f64>,
    /// Row-major state transition matrix.
    pub transition: Vec<Vec<f64>>,
    /// Innovation standard deviations.
    pub innovation_sd: Vec<f64>,
    /// Loading magnitude of a predictor on its own factor.
    pub loading: f64,
    /// Loading magnitude on other factors.
    pub cross_loading: f64,
    pub idiosyncratic_sd: f64,
    /// Scale of the log growth of activity predictors.
    pub activity_scale: f64,
    pub sector_noise_sd: f64,
    pub initial_price: f64,
    pub sv: Option<SynthSv>,
    pub seed: u64,
}

impl SynthConfig {
    pub fn n_predictors(&self) -> usize {
        self.class_counts.iter().sum()
    }

    pub fn state_dim(&self) -> usize {
        N_OBSERVED + self.n_factors
    }

    /// Two-factor default: 136 months from June 2012, 21 predictors.
    pub fn standard(seed: u64) -> Self {
        Self {
            start: MonthDate::new(2012, 6).expect("valid month"),
            t: 136,
            class_counts: [9, 7, 3, 2],
            n_factors: 2,
            intercept: vec![0.012, -0.0035, 0.0008, 0.0, 0.0],
            transition: vec![
                vec![0.0, 0.0, 0.0, 0.055, 0.0],
                vec![0.0, 0.3, 0.0, 0.006, 0.0],
                vec![0.0, 0.0, 0.2, 0.004, 0.0],
                vec![0.0, 0.0, 0.0, 0.9, 0.0],
                vec![0.0, 0.0, 0.0, 0.0, 0.8],
            ],
            innovation_sd: vec![0.06, 0.02, 0.008, (1.0f64 - 0.81).sqrt(), (1.0f64 - 0.64).sqrt()],
            loading: 0.85,
            cross_loading: 0.15,
            idiosyncratic_sd: 0.5,
            activity_scale: 0.01,
            sector_noise_sd: 0.005,
            initial_price: 8.0,
            sv: None,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.state_dim();
        if self.t < 120 {
            return Err(Error::InvalidArgument(format!("synthetic sample needs T >= 120, got {}", self.t)));
        }
        if self.n_factors == 0 {
            return Err(Error::InvalidArgument("at least one factor is required".into()));
        }
        if self.n_predictors() < self.n_factors {
            return Err(Error::InvalidArgument("fewer predictors than factors".into()));
        }
        if self.intercept.len() != d
            || self.innovation_sd.len() != d
            || self.transition.len() != d
            || self.transition.iter().any(|r| r.len() != d)
        {
            return Err(Error::Dimension(format!("state parameters must be of dimension {d}")));
        }
        if self.innovation_sd.iter().any(|s| !(*s >= 0.0)) || !(self.idiosyncratic_sd >= 0.0) {
            return Err(Error::InvalidArgument("standard deviations must be nonnegative".into()));
        }
        if !(self.initial_price > 0.0) {
            return Err(Error::InvalidArgument("initial price must be positive".into()));
        }
        if let Some(sv) = self.sv {
            if !(sv.phi.abs() < 1.0) || !(sv.sigma >= 0.0) {
                return Err(Error::InvalidArgument("SV persistence must satisfy |phi| < 1".into()));
            }
        }
        let radius = spectral_radius(&self.transition_matrix());
        if !(radius < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "non-stationary state dynamics: spectral radius {radius:.4}"
            )));
        }
        Ok(())
    }

    pub fn transition_matrix(&self) -> Mat {
        let d = self.transition.len();
        Mat::from_fn(d, d, |i, j| self.transition[i][j])
    }
}

fn spectral_radius(a: &Mat) -> f64 {
    a.complex_eigenvalues().iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Every latent object behind a bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthTruth {
    pub config: SynthConfig,
    /// First month of `states` (January of the start year).
    pub grid_start: MonthDate,
    /// `[Δr, emis, Δip, g...]` per month on the full grid.
    pub states: Vec<Vec<f64>>,
    pub innovations: Vec<Vec<f64>>,
    /// Log variance of price innovations when SV is on.
    pub log_vol: Option<Vec<f64>>,
    /// `n_predictors x n_factors`.
    pub loadings: Vec<Vec<f64>>,
    pub monthly_emissions: MonthlySeries,
}

impl SynthTruth {
    pub fn index_of(&self, date: MonthDate) -> Option<usize> {
        let k = self.grid_start.months_until(date);
        (k >= 0 && (k as usize) < self.states.len()).then_some(k as usize)
    }

    /// Factor path `g_k` over the grid.
    pub fn factor(&self, k: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[N_OBSERVED + k]).collect()
    }

    /// Conditional mean of the state `h` months after `origin`.
    pub fn oracle_state(&self, origin: MonthDate, h: usize) -> Result<Vec<f64>> {
        let i = self
            .index_of(origin)
            .ok_or_else(|| Error::InvalidArgument(format!("origin {origin} outside the synthetic grid")))?;
        let a = self.config.transition_matrix();
        let c = &self.config.intercept;
        let mut z = self.states[i].clone();
        for _ in 0..h {
            z = (0..z.len())
                .map(|r| c[r] + (0..z.len()).map(|k| a[(r, k)] * z[k]).sum::<f64>())
                .collect();
        }
        Ok(z)
    }

    /// Conditional means of `Δr` at horizons `1..=h` after `origin`.
    pub fn oracle_dlog_price(&self, origin: MonthDate, h: usize) -> Result<Vec<f64>> {
        (1..=h).map(|k| Ok(self.oracle_state(origin, k)?[0])).collect()
    }
}

fn gauss(rng: &mut JobRng) -> f64 {
    StandardNormal.sample(rng)
}

fn loadings(cfg: &SynthConfig, rng: &mut JobRng) -> Vec<Vec<f64>> {
    // factor 1 drives activity and energy, the others technical and weather
    let mut out = Vec::with_capacity(cfg.n_predictors());
    let own_factor = |class: usize| -> usize {
        match class {
            0 | 1 => 0,
            c => (c - 1).min(cfg.n_factors - 1),
        }
    };
    for (class, &count) in cfg.class_counts.iter().enumerate() {
        for _ in 0..count {
            let own = own_factor(class);
            let row = (0..cfg.n_factors)
                .map(|k| {
                    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    let jitter = 0.85 + 0.3 * rng.random::<f64>();
                    if k == own {
                        // keep the own loading positive for readability
                        cfg.loading * jitter
                    } else {
                        sign * cfg.cross_loading * jitter
                    }
                })
                .collect();
            out.push(row);
        }
    }
    out
}

/// Generates a bundle and its ground truth; identical seeds give identical
/// output.
pub fn generate_bundle(cfg: &SynthConfig) -> Result<(DataBundle, SynthTruth)> {
    cfg.validate()?;
    let d = cfg.state_dim();
    let a = cfg.transition_matrix();
    let lead = (cfg.start.month() - 1) as usize;
    let grid_start = MonthDate::new(cfg.start.year(), 1)?;
    let total = lead + cfg.t;

    let mut rng = job_rng(cfg.seed, 0, "synth-state");
    let mut z = vec![0.0; d];
    let mut h = cfg.sv.map(|sv| sv.mu);
    let mut states = Vec::with_capacity(total);
    let mut innovations = Vec::with_capacity(total);
    let mut log_vol = cfg.sv.map(|_| Vec::with_capacity(total));
    for step in 0..BURN_IN + total {
        if let (Some(sv), Some(hv)) = (cfg.sv, h.as_mut()) {
            *hv = sv.mu + sv.phi * (*hv - sv.mu) + sv.sigma * gauss(&mut rng);
        }
        let u: Vec<f64> = (0..d)
            .map(|i| {
                let scale = match (i, h) {
                    (0, Some(hv)) => (hv / 2.0).exp(),
                    _ => cfg.innovation_sd[i],
                };
                scale * gauss(&mut rng)
            })
            .collect();
        z = (0..d)
            .map(|r| cfg.intercept[r] + (0..d).map(|k| a[(r, k)] * z[k]).sum::<f64>() + u[r])
            .collect();
        if step >= BURN_IN {
            states.push(z.clone());
            innovations.push(u);
            if let (Some(lv), Some(hv)) = (log_vol.as_mut(), h) {
                lv.push(hv);
            }
        }
    }

    // price and aggregate production levels from the start month
    let mut r = cfg.initial_price.ln();
    let mut price = Vec::with_capacity(cfg.t);
    let mut ip_level = 100f64.ln();
    let mut ip = Vec::with_capacity(cfg.t);
    for (i, s) in states.iter().enumerate().skip(lead) {
        if i > lead {
            r += s[0];
            ip_level += s[2];
        }
        price.push(r.exp());
        ip.push(ip_level.exp());
    }
    let price = MonthlySeries::new("price", cfg.start, price)?;
    let ip = MonthlySeries::new("ip", cfg.start, ip)?;

    // monthly emissions and sector indices on the whole grid
    let mut rng_e = job_rng(cfg.seed, 1, "synth-emissions");
    let mut le = 25f64.ln();
    let mut emissions = Vec::with_capacity(total);
    for (i, s) in states.iter().enumerate() {
        if i > 0 {
            le += s[1];
        }
        emissions.push(le.exp());
    }
    let monthly_emissions = MonthlySeries::new("emissions", grid_start, emissions.clone())?;
    let sector_shares: Vec<f64> = (0..N_SECTORS).map(|_| 0.5 + rng_e.random::<f64>()).collect();
    let sector_ip = sector_shares
        .iter()
        .enumerate()
        .map(|(k, share)| {
            let values = emissions
                .iter()
                .map(|e| 4.0 * share * e * (cfg.sector_noise_sd * gauss(&mut rng_e)).exp())
                .collect();
            MonthlySeries::new(format!("sector{}", k + 1), grid_start, values)
        })
        .collect::<Result<Vec<_>>>()?;
    let total_share: f64 = sector_shares.iter().sum();
    let sector_weights: Vec<f64> = sector_shares.iter().map(|s| s / total_share).collect();

    let complete_years = total / 12;
    let annual: Vec<f64> = emissions.chunks(12).take(complete_years).map(|c| c.iter().sum()).collect();
    let emissions_annual = AnnualSeries::new(grid_start.year(), annual)?;

    // predictors
    let mut rng_p = job_rng(cfg.seed, 2, "synth-predictors");
    let lambda = loadings(cfg, &mut rng_p);
    let mut predictors = Vec::with_capacity(cfg.n_predictors());
    let mut j = 0;
    for (class_idx, &count) in cfg.class_counts.iter().enumerate() {
        let class = PredictorClass::ALL[class_idx];
        for m in 0..count {
            let signal: Vec<f64> = states[lead..]
                .iter()
                .map(|s| {
                    let common: f64 = (0..cfg.n_factors).map(|k| lambda[j][k] * s[N_OBSERVED + k]).sum();
                    common + cfg.idiosyncratic_sd * gauss(&mut rng_p)
                })
                .collect();
            let name = format!("{}_{}", class.as_str(), m + 1);
            let series = if class == PredictorClass::EconomicActivity {
                let mut level = 100f64.ln();
                let values = signal
                    .iter()
                    .enumerate()
                    .map(|(i, x)| {
                        if i > 0 {
                            level += cfg.activity_scale * x;
                        }
                        level.exp()
                    })
                    .collect();
                MonthlySeries::with_transform(name, cfg.start, values, Transform::LogDiff)?
            } else {
                // a series whose first observation is dropped by differencing
                // elsewhere is kept in levels here
                MonthlySeries::with_transform(name, cfg.start, signal, Transform::None)?
            };
            predictors.push(RawPredictor { series, class });
            j += 1;
        }
    }

    let bundle = DataBundle {
        price,
        predictors,
        ip,
        sector_ip,
        sector_weights,
        emissions_annual,
    };
    let truth = SynthTruth {
        config: cfg.clone(),
        grid_start,
        states,
        innovations,
        log_vol,
        loadings: lambda,
        monthly_emissions,
    };
    Ok((bundle, truth))
}
