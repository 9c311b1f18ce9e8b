use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

/// No-change forecaster on log levels, optionally with drift.
///
/// `sigma2` is the variance of monthly log changes used for densities: the
/// sample variance when a drift is estimated, the mean square otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomWalkFit {
    pub drift: f64,
    pub sigma2: f64,
    pub with_drift: bool,
}

/// Fits a random walk to a series of log levels.
pub fn fit_rw(log_levels: &[f64], drift: bool) -> Result<RandomWalkFit> {
    let need = if drift { 3 } else { 2 };
    if log_levels.len() < need {
        return Err(Error::InsufficientData(format!(
            "random walk{} needs {need} observations, got {}",
            if drift { " with drift" } else { "" },
            log_levels.len()
        )));
    }
    let d: Vec<f64> = log_levels.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(if drift {
        RandomWalkFit {
            drift: stats::mean(&d),
            sigma2: stats::sample_variance(&d),
            with_drift: true,
        }
    } else {
        RandomWalkFit {
            drift: 0.0,
            sigma2: d.iter().map(|v| v * v).sum::<f64>() / d.len() as f64,
            with_drift: false,
        }
    })
}
