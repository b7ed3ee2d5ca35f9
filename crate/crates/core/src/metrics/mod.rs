//! Evaluation metrics and cross-model ranking.
//!
//! Undefined values (zero-volatility Sharpe, short VaR samples, no valid IC
//! hours) are `NaN`; an IR whose per-hour ICs are all equal is `±inf`.
//! Serialized, `NaN` becomes JSON `null` / CSV `NA` and infinities become
//! `"inf"` / `"-inf"`.

mod rank;
mod report;

use crate::stats::{average_ranks, mean, pearson, population_std};
use crate::strategies::EquityCurve;
use crate::tsg::PhaseTimings;
use ndarray::ArrayView2;
use thiserror::Error;

pub use rank::{rank_models, rank_timings, Orientation, RankEntry, RankTable};
pub use report::{write_reports_csv, Metric, MetricsReport, ReportKey, TimingReport};

pub const HOURS_PER_YEAR: f64 = 8760.0;
pub const VAR_LEVEL: f64 = 0.05;
/// Fewest hourly returns for which VaR/ES are reported.
pub const MIN_RISK_SAMPLE: usize = 20;
/// Fewest valid pairs for an hour to count towards IC.
pub const MIN_IC_PAIRS: usize = 3;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("need at least {needed} hours, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("no {0} timings recorded")]
    MissingPhase(&'static str),
    #[error("inconsistent grouping: {0}")]
    InconsistentGrouping(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Running sums for MSE/MAE so that several splits can be pooled over all
/// `(tau, t, i)` triples.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ErrorAccumulator {
    pub sum_sq: f64,
    pub sum_abs: f64,
    pub count: usize,
}

impl ErrorAccumulator {
    pub fn add(&mut self, actual: ArrayView2<'_, f64>, predicted: ArrayView2<'_, f64>) -> Result<(), MetricsError> {
        if actual.dim() != predicted.dim() {
            return Err(MetricsError::ShapeMismatch(format!(
                "actual {:?} vs predicted {:?}",
                actual.dim(),
                predicted.dim()
            )));
        }
        for (a, p) in actual.iter().zip(predicted.iter()) {
            let e = a - p;
            self.sum_sq += e * e;
            self.sum_abs += e.abs();
        }
        self.count += actual.len();
        Ok(())
    }

    pub fn merge(&mut self, other: &ErrorAccumulator) {
        self.sum_sq += other.sum_sq;
        self.sum_abs += other.sum_abs;
        self.count += other.count;
    }

    /// `(mse, mae)`, `NaN` when empty.
    pub fn finish(&self) -> (f64, f64) {
        if self.count == 0 {
            return (f64::NAN, f64::NAN);
        }
        let n = self.count as f64;
        (self.sum_sq / n, self.sum_abs / n)
    }
}

/// MSE and MAE pooled over every split slice.
pub fn error_metrics(
    actual: &[ArrayView2<'_, f64>],
    predicted: &[ArrayView2<'_, f64>],
) -> Result<(f64, f64), MetricsError> {
    if actual.len() != predicted.len() {
        return Err(MetricsError::ShapeMismatch(format!(
            "{} actual slices vs {} predicted",
            actual.len(),
            predicted.len()
        )));
    }
    let mut acc = ErrorAccumulator::default();
    for (a, p) in actual.iter().zip(predicted) {
        acc.add(a.view(), p.view())?;
    }
    Ok(acc.finish())
}

/// Spearman correlation with average ranks for ties; `None` when either
/// side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    pearson(&average_ranks(x), &average_ranks(y))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankSummary {
    pub ic: f64,
    pub ir: f64,
    /// One entry per usable hour.
    pub per_hour: Vec<f64>,
    pub degenerate_hours: usize,
}

/// `mean / population std`, with the zero-std cases mapped to sentinels.
pub fn information_ratio(ics: &[f64]) -> f64 {
    if ics.is_empty() {
        return f64::NAN;
    }
    let m = mean(ics);
    let sd = population_std(ics);
    if sd > 0.0 {
        m / sd
    } else if m > 0.0 {
        f64::INFINITY
    } else if m < 0.0 {
        f64::NEG_INFINITY
    } else {
        f64::NAN
    }
}

/// Summarises a pooled per-hour IC series.
pub fn summarize_ic(per_hour: Vec<f64>, degenerate_hours: usize) -> RankSummary {
    let ic = if per_hour.is_empty() { f64::NAN } else { mean(&per_hour) };
    RankSummary {
        ic,
        ir: information_ratio(&per_hour),
        per_hour,
        degenerate_hours,
    }
}

/// Per-hour cross-sectional Spearman between predictions and realisations.
/// Pairs with a non-finite side are dropped; hours with fewer than three
/// pairs or a constant side are skipped and counted.
pub fn rank_metrics(actual: &[Vec<f64>], predicted: &[Vec<f64>]) -> Result<RankSummary, MetricsError> {
    if actual.len() != predicted.len() {
        return Err(MetricsError::ShapeMismatch(format!(
            "{} actual hours vs {} predicted",
            actual.len(),
            predicted.len()
        )));
    }
    let mut per_hour = Vec::with_capacity(actual.len());
    let mut degenerate = 0;
    for (t, (a, p)) in actual.iter().zip(predicted).enumerate() {
        if a.len() != p.len() {
            return Err(MetricsError::ShapeMismatch(format!(
                "hour {t}: {} actual vs {} predicted",
                a.len(),
                p.len()
            )));
        }
        let (xs, ys): (Vec<f64>, Vec<f64>) = a
            .iter()
            .zip(p)
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(x, y)| (*x, *y))
            .unzip();
        match (xs.len() >= MIN_IC_PAIRS).then(|| spearman(&ys, &xs)).flatten() {
            Some(rho) => per_hour.push(rho),
            None => degenerate += 1,
        }
    }
    Ok(summarize_ic(per_hour, degenerate))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradingMetrics {
    pub cagr: f64,
    pub sharpe: f64,
}

/// `(V_s/V_0)^(8760/s) - 1`.
pub fn cagr(v0: f64, vs: f64, hours: usize) -> f64 {
    (vs / v0).powf(HOURS_PER_YEAR / hours as f64) - 1.0
}

/// Annualised Sharpe of hourly simple returns, zero risk-free rate.
pub fn sharpe(returns: &[f64]) -> f64 {
    if returns.is_empty() {
        return f64::NAN;
    }
    let sd = population_std(returns);
    if sd > 0.0 {
        mean(returns) / sd * HOURS_PER_YEAR.sqrt()
    } else {
        f64::NAN
    }
}

pub fn trading_metrics(curve: &EquityCurve) -> Result<TradingMetrics, MetricsError> {
    let s = curve.len();
    if s < 2 {
        return Err(MetricsError::TooShort { needed: 2, got: s });
    }
    Ok(TradingMetrics {
        cagr: cagr(curve.v0, curve.final_equity(), s),
        sharpe: sharpe(&curve.simple_returns()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskMetrics {
    pub mdd: f64,
    pub var95: f64,
    pub es95: f64,
}

/// Largest `(V_u - V_t) / V_u` over `u <= t`.
pub fn max_drawdown(path: &[f64]) -> f64 {
    let mut peak = f64::NEG_INFINITY;
    let mut worst = 0.0f64;
    for &v in path {
        peak = peak.max(v);
        worst = worst.max((peak - v) / peak);
    }
    worst
}

/// Empirical quantile with plotting position `h = N p` clamped to `[1, N]`,
/// linearly interpolated between neighbouring order statistics.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let h = (n as f64 * p).clamp(1.0, n as f64);
    let lo = h.floor() as usize;
    if lo >= n {
        return sorted[n - 1];
    }
    let frac = h - lo as f64;
    sorted[lo - 1] + frac * (sorted[lo] - sorted[lo - 1])
}

/// `(VaR, ES)` at 95% of a return sample, both as positive losses.
pub fn var_es(returns: &[f64]) -> (f64, f64) {
    if returns.len() < MIN_RISK_SAMPLE {
        return (f64::NAN, f64::NAN);
    }
    let mut sorted = returns.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q = quantile(&sorted, VAR_LEVEL);
    let tail: Vec<f64> = sorted.iter().copied().filter(|r| *r <= q).collect();
    (-q, -mean(&tail))
}

pub fn risk_metrics(curve: &EquityCurve) -> RiskMetrics {
    let (var95, es95) = var_es(&curve.simple_returns());
    RiskMetrics {
        mdd: max_drawdown(&curve.path()),
        var95,
        es95,
    }
}

/// Which TSG call counts as inference for a task.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InferencePhase {
    Generate,
    Reconstruct,
}

/// `(train_time_s, infer_time_s)`: mean fit time and mean time of one
/// inference call.
pub fn timing_metrics(timings: &PhaseTimings, phase: InferencePhase) -> Result<(f64, f64), MetricsError> {
    if timings.fit_s.is_empty() {
        return Err(MetricsError::MissingPhase("fit"));
    }
    let infer = match phase {
        InferencePhase::Generate => &timings.generate_s,
        InferencePhase::Reconstruct => &timings.reconstruct_s,
    };
    if infer.is_empty() {
        return Err(MetricsError::MissingPhase(match phase {
            InferencePhase::Generate => "generate",
            InferencePhase::Reconstruct => "reconstruct",
        }));
    }
    Ok((mean(&timings.fit_s), mean(infer)))
}
