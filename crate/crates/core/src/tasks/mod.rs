//! The two benchmark tasks, run on one walk-forward split at a time.
//!
//! Predictive utility: fit the generator on the training window, sample a
//! synthetic window, train a forecaster on it and trade its predictions on
//! the real test window. Statistical arbitrage: reconstruct real returns,
//! fit OU processes to the residuals and trade their s-scores.

mod ou;
mod predictive;
mod stat_arb;

use crate::features::FeatureError;
use crate::forecasting::ForecastError;
use crate::market_data::{MarketDataError, ReturnMatrix};
use crate::strategies::{EquityCurve, StrategyError};
use crate::tsg::TsgError;
use chrono::{DateTime, Utc};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

pub use ou::{
    fit_ou, fit_ou_with, s_score, simulate_ou, stat_arb_weights, OuError, OuFitOptions, OuParams, DF_CRITICAL_1PCT,
    MIN_OU_LENGTH,
};
pub use predictive::{run_predictive_utility, PredictionSource, PredictiveConfig};
pub use stat_arb::{run_stat_arb, ResidualSignal, StatArbConfig};

#[derive(Debug, Error)]
pub enum TaskError {
    #[error(transparent)]
    Tsg(#[from] TsgError),
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error(transparent)]
    Forecast(#[from] ForecastError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Data(#[from] MarketDataError),
    #[error(transparent)]
    Ou(#[from] OuError),
    #[error("every asset failed the OU fit: {0}")]
    AllAssetsExcluded(String),
    #[error("invalid task configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    PredictiveUtility,
    StatArb,
}

impl TaskKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TaskKind::PredictiveUtility => "predictive_utility",
            TaskKind::StatArb => "stat_arb",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Strategy label used by the stat-arb task's own signal rule.
pub const STAT_ARB_STRATEGY: &str = "ou_threshold";

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyRun {
    pub strategy: String,
    pub fee: f64,
    pub curve: EquityCurve,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyFailure {
    pub strategy: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludedAsset {
    pub asset: String,
    pub reason: String,
}

/// Wall-clock seconds of one task run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TaskTimings {
    pub fit_s: f64,
    /// Generate (predictive) or the test reconstruction (stat-arb).
    pub infer_s: f64,
    pub forecast_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskResult {
    pub task: TaskKind,
    pub model: String,
    pub tau: usize,
    pub assets: Vec<String>,
    pub timestamps: Vec<DateTime<Utc>>,
    /// Real test returns.
    pub realized: Array2<f64>,
    /// Compared with `realized` for MSE/MAE: next-hour predictions or the
    /// test reconstruction.
    pub estimate: Array2<f64>,
    /// Cross-sectional signal held over each test hour, ranked against
    /// `realized` for IC. Predictions, or `-s` for stat-arb (`NaN` for
    /// excluded assets).
    pub signal: Array2<f64>,
    pub runs: Vec<StrategyRun>,
    pub failures: Vec<StrategyFailure>,
    pub excluded: Vec<ExcludedAsset>,
    /// Stat-arb only, one entry per asset.
    pub ou: Vec<Option<OuParams>>,
    pub timings: TaskTimings,
}

impl TaskResult {
    pub fn run(&self, strategy: &str, fee: f64) -> Option<&StrategyRun> {
        self.runs.iter().find(|r| r.strategy == strategy && r.fee == fee)
    }

    /// Per-hour cross-sections for rank metrics.
    pub fn hourly_pairs(&self) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let s = self.realized.ncols();
        let actual = (0..s).map(|t| self.realized.column(t).to_vec()).collect();
        let signal = (0..s).map(|t| self.signal.column(t).to_vec()).collect();
        (actual, signal)
    }
}

pub(crate) fn check_fees(fees: &[f64]) -> Result<(), TaskError> {
    if fees.is_empty() {
        return Err(TaskError::InvalidConfig("at least one fee scenario is required".into()));
    }
    if let Some(f) = fees.iter().find(|f| !(f.is_finite() && **f >= 0.0)) {
        return Err(TaskError::InvalidConfig(format!("fee {f} must be >= 0")));
    }
    Ok(())
}

pub(crate) fn empty_result(task: TaskKind, model: &str, tau: usize, test: &ReturnMatrix) -> TaskResult {
    TaskResult {
        task,
        model: model.to_string(),
        tau,
        assets: test.assets().to_vec(),
        timestamps: test.timestamps().to_vec(),
        realized: test.values().clone(),
        estimate: Array2::zeros(test.values().dim()),
        signal: Array2::zeros(test.values().dim()),
        runs: Vec::new(),
        failures: Vec::new(),
        excluded: Vec::new(),
        ou: Vec::new(),
        timings: TaskTimings::default(),
    }
}
