//! Prediction-to-weight rules and the hourly portfolio simulator.
//!
//! Weight functions take one prediction per asset, in asset order. Assets
//! are stored sorted by id, so "ties break by ascending asset id" is the
//! same as ties breaking by index.

mod plot;

use crate::market_data::ReturnMatrix;
use chrono::{DateTime, Utc};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;
use std::io;
use std::path::Path;
use std::str::FromStr;
use thiserror::Error;

pub use plot::equity_svg;

/// Tolerance on the gross-exposure bound of a weight vector.
pub const GROSS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum StrategyError {
    #[error("{strategy} needs at least {needed} assets, got {got}")]
    TooFewAssets {
        strategy: &'static str,
        needed: usize,
        got: usize,
    },
    #[error("all predictions are zero")]
    DegeneratePredictions,
    #[error("non-finite prediction for asset {0}")]
    NonFinitePrediction(usize),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("fee must be a finite non-negative fraction, got {0}")]
    InvalidFee(f64),
    #[error("initial capital must be positive and finite, got {0}")]
    InvalidCapital(f64),
    #[error("bankrupt at hour {hour}: equity {equity}")]
    Bankruptcy { hour: usize, equity: f64 },
    #[error("unknown strategy {0:?}")]
    UnknownStrategy(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Long the top half, short the bottom half, ±0.5 gross each side.
    HalfLs,
    /// Cross-sectional momentum: top and bottom decile.
    Csm,
    /// Long-only top quintile.
    Lotq,
    /// Prediction-proportional weights.
    Pw,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::HalfLs, Strategy::Csm, Strategy::Lotq, Strategy::Pw];

    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::HalfLs => "half_ls",
            Strategy::Csm => "csm",
            Strategy::Lotq => "lotq",
            Strategy::Pw => "pw",
        }
    }

    pub fn min_assets(&self) -> usize {
        match self {
            Strategy::HalfLs => 2,
            Strategy::Csm => 10,
            Strategy::Lotq => 5,
            Strategy::Pw => 1,
        }
    }

    pub fn weights(&self, predictions: &[f64]) -> Result<Vec<f64>, StrategyError> {
        match self {
            Strategy::HalfLs => weights_half_ls(predictions),
            Strategy::Csm => weights_csm(predictions),
            Strategy::Lotq => weights_lotq(predictions),
            Strategy::Pw => weights_pw(predictions),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = StrategyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| StrategyError::UnknownStrategy(s.to_string()))
    }
}

fn check_finite(predictions: &[f64]) -> Result<(), StrategyError> {
    match predictions.iter().position(|p| !p.is_finite()) {
        Some(i) => Err(StrategyError::NonFinitePrediction(i)),
        None => Ok(()),
    }
}

/// Indices sorted by prediction, highest first; equal predictions keep
/// ascending index order.
fn descending_order(predictions: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..predictions.len()).collect();
    idx.sort_by(|&a, &b| {
        predictions[b]
            .partial_cmp(&predictions[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    idx
}

fn require(strategy: Strategy, predictions: &[f64]) -> Result<Vec<usize>, StrategyError> {
    check_finite(predictions)?;
    if predictions.len() < strategy.min_assets() {
        return Err(StrategyError::TooFewAssets {
            strategy: strategy.as_str(),
            needed: strategy.min_assets(),
            got: predictions.len(),
        });
    }
    Ok(descending_order(predictions))
}

fn long_short(order: &[usize], k: usize) -> Vec<f64> {
    let n = order.len();
    let mut w = vec![0.0; n];
    let each = 0.5 / k as f64;
    for &i in &order[..k] {
        w[i] = each;
    }
    for &i in &order[n - k..] {
        w[i] = -each;
    }
    w
}

pub fn weights_csm(predictions: &[f64]) -> Result<Vec<f64>, StrategyError> {
    let order = require(Strategy::Csm, predictions)?;
    let k = predictions.len().div_ceil(10);
    Ok(long_short(&order, k))
}

pub fn weights_lotq(predictions: &[f64]) -> Result<Vec<f64>, StrategyError> {
    let order = require(Strategy::Lotq, predictions)?;
    let k = predictions.len().div_ceil(5);
    let mut w = vec![0.0; predictions.len()];
    for &i in &order[..k] {
        w[i] = 1.0 / k as f64;
    }
    Ok(w)
}

pub fn weights_half_ls(predictions: &[f64]) -> Result<Vec<f64>, StrategyError> {
    let order = require(Strategy::HalfLs, predictions)?;
    Ok(long_short(&order, predictions.len() / 2))
}

/// `r_i / sum_j |r_j|`.
pub fn weights_pw(predictions: &[f64]) -> Result<Vec<f64>, StrategyError> {
    check_finite(predictions)?;
    let gross: f64 = predictions.iter().map(|p| p.abs()).sum();
    if gross == 0.0 {
        return Err(StrategyError::DegeneratePredictions);
    }
    Ok(predictions.iter().map(|p| p / gross).collect())
}

/// Portfolio fractions per asset and test hour. Column `t` is the book held
/// over hour `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    assets: Vec<String>,
    timestamps: Vec<DateTime<Utc>>,
    values: Array2<f64>,
}

impl WeightMatrix {
    pub fn new(
        assets: Vec<String>,
        timestamps: Vec<DateTime<Utc>>,
        values: Array2<f64>,
    ) -> Result<Self, StrategyError> {
        if values.dim() != (assets.len(), timestamps.len()) {
            return Err(StrategyError::ShapeMismatch(format!(
                "weights {:?} for {} assets x {} hours",
                values.dim(),
                assets.len(),
                timestamps.len()
            )));
        }
        for (t, col) in values.columns().into_iter().enumerate() {
            if col.iter().any(|v| !v.is_finite()) {
                return Err(StrategyError::InvalidWeights(format!("non-finite weight at hour {t}")));
            }
            let gross: f64 = col.iter().map(|v| v.abs()).sum();
            if gross > 1.0 + GROSS_TOLERANCE {
                return Err(StrategyError::InvalidWeights(format!(
                    "gross exposure {gross} at hour {t}"
                )));
            }
        }
        Ok(Self {
            assets,
            timestamps,
            values,
        })
    }

    /// Applies `strategy` to each column of `predictions`.
    pub fn from_predictions(strategy: Strategy, predictions: &ReturnMatrix) -> Result<Self, StrategyError> {
        let (n, s) = predictions.values().dim();
        let mut values = Array2::zeros((n, s));
        for t in 0..s {
            let w = strategy.weights(&predictions.column(t).to_vec())?;
            for (i, v) in w.into_iter().enumerate() {
                values[[i, t]] = v;
            }
        }
        Self::new(predictions.assets().to_vec(), predictions.timestamps().to_vec(), values)
    }

    pub fn assets(&self) -> &[String] {
        &self.assets
    }

    pub fn timestamps(&self) -> &[DateTime<Utc>] {
        &self.timestamps
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquityCurve {
    pub v0: f64,
    pub fee: f64,
    pub timestamps: Vec<DateTime<Utc>>,
    /// `V_1..V_s`.
    pub equity: Vec<f64>,
    /// `V_t - V_{t-1}`.
    pub pnl: Vec<f64>,
    pub turnover: Vec<f64>,
}

#[derive(Serialize)]
struct CurveRow<'a> {
    timestamp: &'a str,
    equity: f64,
    pnl: f64,
    turnover: f64,
}

impl EquityCurve {
    /// Builds a curve from an equity path; pnl is derived.
    pub fn from_equity(
        v0: f64,
        fee: f64,
        timestamps: Vec<DateTime<Utc>>,
        equity: Vec<f64>,
        turnover: Vec<f64>,
    ) -> Result<Self, StrategyError> {
        if !(v0.is_finite() && v0 > 0.0) {
            return Err(StrategyError::InvalidCapital(v0));
        }
        if timestamps.len() != equity.len() || turnover.len() != equity.len() {
            return Err(StrategyError::ShapeMismatch(format!(
                "{} timestamps, {} equity values, {} turnover values",
                timestamps.len(),
                equity.len(),
                turnover.len()
            )));
        }
        if let Some(hour) = equity.iter().position(|v| !(*v > 0.0)) {
            return Err(StrategyError::Bankruptcy {
                hour,
                equity: equity[hour],
            });
        }
        let pnl = equity
            .iter()
            .enumerate()
            .map(|(t, v)| v - if t == 0 { v0 } else { equity[t - 1] })
            .collect();
        Ok(Self {
            v0,
            fee,
            timestamps,
            equity,
            pnl,
            turnover,
        })
    }

    pub fn len(&self) -> usize {
        self.equity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.equity.is_empty()
    }

    pub fn final_equity(&self) -> f64 {
        self.equity.last().copied().unwrap_or(self.v0)
    }

    /// `V_0, V_1, .., V_s`.
    pub fn path(&self) -> Vec<f64> {
        std::iter::once(self.v0).chain(self.equity.iter().copied()).collect()
    }

    /// `ΔV_t / V_{t-1}`.
    pub fn simple_returns(&self) -> Vec<f64> {
        let path = self.path();
        path.windows(2).map(|w| (w[1] - w[0]) / w[0]).collect()
    }

    /// Joins consecutive curves, each one restarted from the previous
    /// curve's final equity.
    pub fn chain(curves: &[&EquityCurve]) -> Option<EquityCurve> {
        let first = curves.first()?;
        let mut out = EquityCurve {
            v0: first.v0,
            fee: first.fee,
            timestamps: Vec::new(),
            equity: Vec::new(),
            pnl: Vec::new(),
            turnover: Vec::new(),
        };
        let mut level = first.v0;
        for c in curves {
            let scale = level / c.v0;
            for t in 0..c.len() {
                let v = c.equity[t] * scale;
                out.pnl.push(v - out.equity.last().copied().unwrap_or(first.v0));
                out.equity.push(v);
            }
            out.timestamps.extend_from_slice(&c.timestamps);
            out.turnover.extend_from_slice(&c.turnover);
            level = out.final_equity();
        }
        Some(out)
    }

    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<(), StrategyError> {
        let mut w = csv::Writer::from_writer(writer);
        for t in 0..self.len() {
            let ts = self.timestamps[t].to_rfc3339();
            w.serialize(CurveRow {
                timestamp: &ts,
                equity: self.equity[t],
                pnl: self.pnl[t],
                turnover: self.turnover[t],
            })?;
        }
        if self.is_empty() {
            w.write_record(["timestamp", "equity", "pnl", "turnover"])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<(), StrategyError> {
        let file = std::fs::File::create(path)?;
        self.write_csv(io::BufWriter::new(file))
    }
}

/// Hourly-rebalanced book on real returns.
///
/// Per hour: `g = 1 + sum_i w_i (exp(r_i) - 1)`, turnover
/// `T = sum_i |w_i(t) - w_i(t-1)|` with an empty book before the first hour,
/// and `V_t = V_{t-1} g (1 - fee T)`.
pub fn simulate(
    weights: &WeightMatrix,
    returns: &ReturnMatrix,
    fee: f64,
    v0: f64,
) -> Result<EquityCurve, StrategyError> {
    if !(fee.is_finite() && fee >= 0.0) {
        return Err(StrategyError::InvalidFee(fee));
    }
    if !(v0.is_finite() && v0 > 0.0) {
        return Err(StrategyError::InvalidCapital(v0));
    }
    if weights.values().dim() != returns.values().dim() {
        return Err(StrategyError::ShapeMismatch(format!(
            "weights {:?} vs returns {:?}",
            weights.values().dim(),
            returns.values().dim()
        )));
    }
    if weights.assets() != returns.assets() {
        return Err(StrategyError::ShapeMismatch("asset order differs".into()));
    }
    let (n, s) = returns.values().dim();
    let w = weights.values();
    let r = returns.values();
    let mut growth = 1.0;
    let mut equity = Vec::with_capacity(s);
    let mut turnover = Vec::with_capacity(s);
    for t in 0..s {
        let mut g = 1.0;
        let mut turn = 0.0;
        for i in 0..n {
            g += w[[i, t]] * r[[i, t]].exp_m1();
            let prev = if t == 0 { 0.0 } else { w[[i, t - 1]] };
            turn += (w[[i, t]] - prev).abs();
        }
        growth *= g * (1.0 - fee * turn);
        let v = v0 * growth;
        if !(v > 0.0) {
            return Err(StrategyError::Bankruptcy { hour: t, equity: v });
        }
        equity.push(v);
        turnover.push(turn);
    }
    EquityCurve::from_equity(v0, fee, returns.timestamps().to_vec(), equity, turnover)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::{prop_assert, prop_assert_eq, proptest, ProptestConfig};
    use proptest::strategy::Strategy as _;

    fn returns(values: Array2<f64>) -> ReturnMatrix {
        ReturnMatrix::from_values(values).unwrap()
    }

    fn weights_for(r: &ReturnMatrix, values: Array2<f64>) -> WeightMatrix {
        WeightMatrix::new(r.assets().to_vec(), r.timestamps().to_vec(), values).unwrap()
    }

    #[test]
    fn csm_twenty_assets() {
        let preds: Vec<f64> = (0..20).map(|i| i as f64 * 0.001).collect();
        let w = weights_csm(&preds).unwrap();
        assert_eq!(w[19], 0.25);
        assert_eq!(w[18], 0.25);
        assert_eq!(w[0], -0.25);
        assert_eq!(w[1], -0.25);
        assert_eq!(w.iter().filter(|v| **v == 0.0).count(), 16);
    }

    #[test]
    fn csm_needs_ten() {
        assert!(matches!(
            weights_csm(&[0.0; 9]),
            Err(StrategyError::TooFewAssets { needed: 10, got: 9, .. })
        ));
    }

    #[test]
    fn csm_ties_break_by_id() {
        let w = weights_csm(&[0.1; 20]).unwrap();
        assert_eq!(&w[..2], &[0.25, 0.25]);
        assert_eq!(&w[18..], &[-0.25, -0.25]);
    }

    #[test]
    fn lotq_examples() {
        let w = weights_lotq(&[0.1, 0.5, 0.3, 0.2, 0.0, -0.1, 0.4, 0.05, -0.3, 0.01]).unwrap();
        assert_eq!(w[1], 0.5);
        assert_eq!(w[6], 0.5);
        assert_eq!(w.iter().sum::<f64>(), 1.0);
        let w = weights_lotq(&[0.1, 0.5, 0.3, 0.2, 0.0]).unwrap();
        assert_eq!(w, vec![0.0, 1.0, 0.0, 0.0, 0.0]);
        let w = weights_lotq(&[-0.1, -0.5, -0.3, -0.2, -0.0]).unwrap();
        assert_eq!(w, vec![0.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(weights_lotq(&[0.0; 4]).is_err());
    }

    #[test]
    fn pw_examples() {
        assert_eq!(weights_pw(&[1.0, 1.0, 2.0]).unwrap(), vec![0.25, 0.25, 0.5]);
        assert_eq!(weights_pw(&[1.0, -1.0]).unwrap(), vec![0.5, -0.5]);
        assert!(matches!(
            weights_pw(&[0.0, 0.0, 0.0]),
            Err(StrategyError::DegeneratePredictions)
        ));
    }

    #[test]
    fn half_ls_examples() {
        assert_eq!(
            weights_half_ls(&[0.4, 0.3, 0.2, 0.1]).unwrap(),
            vec![0.25, 0.25, -0.25, -0.25]
        );
        let w = weights_half_ls(&[0.5, 0.1, 0.3, 0.2, 0.4]).unwrap();
        assert_eq!(w[2], 0.0);
        assert_eq!(weights_half_ls(&[7.0; 4]).unwrap(), vec![0.25, 0.25, -0.25, -0.25]);
        assert!(weights_half_ls(&[1.0]).is_err());
    }

    #[test]
    fn non_finite_prediction_rejected() {
        assert!(matches!(
            weights_half_ls(&[0.1, f64::NAN]),
            Err(StrategyError::NonFinitePrediction(1))
        ));
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.as_str().parse::<Strategy>().unwrap(), s);
        }
        assert!("momentum".parse::<Strategy>().is_err());
    }

    #[test]
    fn flat_book_keeps_capital() {
        let r = returns(Array2::from_elem((3, 5), 0.01));
        let curve = simulate(&weights_for(&r, Array2::zeros((3, 5))), &r, 0.0003, 10_000.0).unwrap();
        assert!(curve.equity.iter().all(|v| *v == 10_000.0));
        assert!(curve.pnl.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn two_hours_at_one_percent() {
        let r = returns(Array2::from_elem((1, 2), 1.01f64.ln()));
        let curve = simulate(&weights_for(&r, Array2::ones((1, 2))), &r, 0.0, 10_000.0).unwrap();
        assert_abs_diff_eq!(curve.final_equity(), 10_201.0, epsilon = 1e-9);
        assert_eq!(curve.turnover, vec![1.0, 0.0]);
    }

    #[test]
    fn entry_fee_drag() {
        let r = returns(Array2::zeros((1, 3)));
        let curve = simulate(&weights_for(&r, Array2::ones((1, 3))), &r, 0.0003, 10_000.0).unwrap();
        assert_abs_diff_eq!(curve.equity[0], 9997.0, epsilon = 1e-9);
        assert_abs_diff_eq!(curve.equity[2], 9997.0, epsilon = 1e-9);
    }

    #[test]
    fn bankruptcy_is_an_error() {
        let r = returns(Array2::from_elem((1, 2), -5.0));
        let w = weights_for(&r, Array2::from_elem((1, 2), -1.0));
        // a short book profits from a crash
        assert!(simulate(&w, &r, 0.0, 1.0).is_ok());
        let r = returns(Array2::from_elem((2, 1), 3.0));
        let w = weights_for(&r, Array2::from_shape_vec((2, 1), vec![-0.5, -0.5]).unwrap());
        assert!(matches!(
            simulate(&w, &r, 0.0, 1.0),
            Err(StrategyError::Bankruptcy { hour: 0, .. })
        ));
    }

    #[test]
    fn gross_bound_enforced() {
        let r = returns(Array2::zeros((2, 1)));
        assert!(WeightMatrix::new(
            r.assets().to_vec(),
            r.timestamps().to_vec(),
            Array2::from_elem((2, 1), 0.6)
        )
        .is_err());
    }

    #[test]
    fn rejects_bad_fee_and_shape() {
        let r = returns(Array2::zeros((2, 3)));
        let w = weights_for(&r, Array2::zeros((2, 3)));
        assert!(matches!(
            simulate(&w, &r, -0.01, 1.0),
            Err(StrategyError::InvalidFee(_))
        ));
        let other = returns(Array2::zeros((2, 4)));
        assert!(matches!(
            simulate(&w, &other, 0.0, 1.0),
            Err(StrategyError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn csv_layout() {
        let r = returns(Array2::from_elem((1, 2), 0.0));
        let curve = simulate(&weights_for(&r, Array2::ones((1, 2))), &r, 0.0, 100.0).unwrap();
        let mut buf = Vec::new();
        curve.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "timestamp,equity,pnl,turnover");
        assert_eq!(lines.next().unwrap(), "1970-01-01T00:00:00+00:00,100.0,0.0,1.0");
        assert_eq!(lines.count(), 1);
    }

    #[test]
    fn chain_continues_from_final_equity() {
        let r = returns(Array2::from_elem((1, 2), 0.1f64.ln_1p()));
        let w = weights_for(&r, Array2::ones((1, 2)));
        let a = simulate(&w, &r, 0.0, 100.0).unwrap();
        let b = simulate(&w, &r, 0.0, 100.0).unwrap();
        let c = EquityCurve::chain(&[&a, &b]).unwrap();
        assert_eq!(c.len(), 4);
        assert_abs_diff_eq!(c.final_equity(), 100.0 * 1.1f64.powi(4), epsilon = 1e-9);
        for (t, p) in c.pnl.iter().enumerate() {
            let prev = if t == 0 { c.v0 } else { c.equity[t - 1] };
            assert_abs_diff_eq!(*p, c.equity[t] - prev, epsilon = 1e-9);
        }
    }

    fn book(n: usize, s: usize) -> impl proptest::strategy::Strategy<Value = (Array2<f64>, Array2<f64>)> {
        (
            proptest::collection::vec(-0.05f64..0.05, n * s),
            proptest::collection::vec(-1.0f64..1.0, n * s),
        )
            .prop_map(move |(r, w)| {
                let r = Array2::from_shape_vec((n, s), r).unwrap();
                let mut w = Array2::from_shape_vec((n, s), w).unwrap();
                for mut col in w.columns_mut() {
                    let gross: f64 = col.iter().map(|v| v.abs()).sum();
                    if gross > 1.0 {
                        col.mapv_inplace(|v| v / gross);
                    }
                }
                (r, w)
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn higher_fee_never_helps((r, w) in book(4, 30), a in 0.0f64..0.01, b in 0.0f64..0.01) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let rm = returns(r);
            let wm = weights_for(&rm, w);
            let cheap = simulate(&wm, &rm, lo, 10_000.0).unwrap();
            let dear = simulate(&wm, &rm, hi, 10_000.0).unwrap();
            for t in 0..cheap.len() {
                prop_assert!(dear.equity[t] <= cheap.equity[t]);
            }
        }

        #[test]
        fn capital_scales_equity((r, w) in book(3, 20), k in -8i32..8) {
            let c = 2f64.powi(k);
            let rm = returns(r);
            let wm = weights_for(&rm, w);
            let base = simulate(&wm, &rm, 0.0003, 10_000.0).unwrap();
            let scaled = simulate(&wm, &rm, 0.0003, 10_000.0 * c).unwrap();
            for t in 0..base.len() {
                prop_assert_eq!(scaled.equity[t], base.equity[t] * c);
            }
        }

        #[test]
        fn zero_returns_only_fees((_, w) in book(3, 20), fee in 0.0f64..0.01) {
            let rm = returns(Array2::zeros((3, 20)));
            let wm = weights_for(&rm, w);
            let curve = simulate(&wm, &rm, fee, 1.0).unwrap();
            let mut v = 1.0f64;
            for t in 0..20 {
                v *= 1.0 - fee * curve.turnover[t];
                prop_assert!((curve.equity[t] - v).abs() <= 1e-12);
            }
        }

        #[test]
        fn rank_rules_ignore_monotone_transforms(
            preds in proptest::collection::vec(-1.0f64..1.0, 10..40),
            scale in 0.01f64..100.0,
            shift in -5.0f64..5.0,
        ) {
            let transformed: Vec<f64> = preds.iter().map(|p| (p * scale + shift).exp()).collect();
            for rule in [Strategy::Csm, Strategy::Lotq, Strategy::HalfLs] {
                prop_assert_eq!(rule.weights(&preds).unwrap(), rule.weights(&transformed).unwrap());
            }
        }

        #[test]
        fn gross_exposure_bounded(preds in proptest::collection::vec(-1.0f64..1.0, 10..40)) {
            for rule in Strategy::ALL {
                let w = rule.weights(&preds).unwrap();
                let gross: f64 = w.iter().map(|v| v.abs()).sum();
                prop_assert!(gross <= 1.0 + GROSS_TOLERANCE);
            }
        }
    }
}
