//! Market data: candle ingestion, log-returns, walk-forward splits and
//! descriptive statistics.
//!
//! Arrays are 0-based throughout. A split at offset `tau` trains on columns
//! `[tau - w, tau)` and tests on `[tau, tau + s)`, which is the 1-based
//! `tau-w+1 ..= tau` / `tau+1 ..= tau+s` convention shifted down by one.

mod load;
mod splits;
mod stats;

use chrono::{DateTime, Duration, Utc};
use ndarray::{s, Array2, Array3, ArrayView1, ArrayView2, Axis};
use std::ops::Range;
use std::path::PathBuf;
use thiserror::Error;

pub use load::{load_ohlc, DroppedAsset, LoadedPrices};
pub use splits::{make_splits, split_slices, SplitPlan, WindowSplit};
pub use stats::{descriptive_stats, AssetStats, HourBucket, StatsSummary};

/// Index of each price field along the last axis of a [`PriceTensor`].
pub const OPEN: usize = 0;
pub const HIGH: usize = 1;
pub const LOW: usize = 2;
pub const CLOSE: usize = 3;

#[derive(Debug, Error)]
pub enum MarketDataError {
    #[error("cannot read {path}: {reason}")]
    UnreadableSource { path: PathBuf, reason: String },
    #[error("{path}:{line}: {reason}")]
    Parse { path: PathBuf, line: usize, reason: String },
    #[error("non-positive or non-finite price for {asset} at {timestamp}")]
    NonPositivePrice { asset: String, timestamp: DateTime<Utc> },
    #[error("inconsistent candle for {asset} at {timestamp}: low/high do not bracket open/close")]
    InvalidCandle { asset: String, timestamp: DateTime<Utc> },
    #[error("{asset}: timestamps must be strictly increasing on whole UTC hours ({reason})")]
    IrregularTimestamps { asset: String, reason: String },
    #[error("no common hourly timespan across the loaded assets")]
    NoCommonTimespan,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite value at asset {asset}, column {column}")]
    NonFinite { asset: usize, column: usize },
    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("window w={w} exceeds series length l={l} (or w, s < 1)")]
    InvalidWindow { w: usize, l: usize },
    #[error("offset tau={tau} out of range for w={w}, s={s}, l={l}")]
    OffsetOutOfRange { tau: usize, w: usize, s: usize, l: usize },
}

/// Hourly OHLC prices: `values[[asset, hour, field]]` with fields ordered
/// open, high, low, close.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceTensor {
    assets: Vec<String>,
    timestamps: Vec<DateTime<Utc>>,
    values: Array3<f64>,
}

impl PriceTensor {
    pub fn new(
        assets: Vec<String>,
        timestamps: Vec<DateTime<Utc>>,
        values: Array3<f64>,
    ) -> Result<Self, MarketDataError> {
        let (n, l, f) = values.dim();
        if n != assets.len() || l != timestamps.len() || f != 4 {
            return Err(MarketDataError::ShapeMismatch(format!(
                "values {:?} vs {} assets x {} timestamps x 4",
                values.dim(),
                assets.len(),
                timestamps.len()
            )));
        }
        check_hourly(&timestamps, "tensor")?;
        for (i, asset) in assets.iter().enumerate() {
            for (t, ts) in timestamps.iter().enumerate() {
                let c = values.slice(s![i, t, ..]);
                validate_candle(asset, *ts, [c[OPEN], c[HIGH], c[LOW], c[CLOSE]])?;
            }
        }
        Ok(Self {
            assets,
            timestamps,
            values,
        })
    }

    pub fn assets(&self) -> &[String] {
        &self.assets
    }

    pub fn timestamps(&self) -> &[DateTime<Utc>] {
        &self.timestamps
    }

    pub fn values(&self) -> &Array3<f64> {
        &self.values
    }

    pub fn n_assets(&self) -> usize {
        self.assets.len()
    }

    pub fn closes(&self, asset: usize) -> ArrayView1<'_, f64> {
        self.values.slice(s![asset, .., CLOSE])
    }

    /// Hourly log-returns of the close prices. The first timestamp is
    /// consumed as the base price, so the result has one column fewer.
    pub fn log_returns(&self) -> Result<ReturnMatrix, MarketDataError> {
        log_returns(self)
    }
}

pub(crate) fn validate_candle(
    asset: &str,
    timestamp: DateTime<Utc>,
    [open, high, low, close]: [f64; 4],
) -> Result<(), MarketDataError> {
    if [open, high, low, close].iter().any(|p| !p.is_finite() || *p <= 0.0) {
        return Err(MarketDataError::NonPositivePrice {
            asset: asset.to_string(),
            timestamp,
        });
    }
    if low > open.min(close) || high < open.max(close) {
        return Err(MarketDataError::InvalidCandle {
            asset: asset.to_string(),
            timestamp,
        });
    }
    Ok(())
}

pub(crate) fn check_hourly(ts: &[DateTime<Utc>], asset: &str) -> Result<(), MarketDataError> {
    for w in ts.windows(2) {
        if w[1] - w[0] != Duration::hours(1) {
            return Err(MarketDataError::IrregularTimestamps {
                asset: asset.to_string(),
                reason: format!("{} followed by {}", w[0], w[1]),
            });
        }
    }
    Ok(())
}

/// `n x l` matrix of hourly log-returns keyed by asset identifier and the
/// timestamp at which each return is realized.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnMatrix {
    assets: Vec<String>,
    timestamps: Vec<DateTime<Utc>>,
    values: Array2<f64>,
}

impl ReturnMatrix {
    pub fn new(
        assets: Vec<String>,
        timestamps: Vec<DateTime<Utc>>,
        values: Array2<f64>,
    ) -> Result<Self, MarketDataError> {
        let (n, l) = values.dim();
        if n != assets.len() || l != timestamps.len() {
            return Err(MarketDataError::ShapeMismatch(format!(
                "values {n}x{l} vs {} assets x {} timestamps",
                assets.len(),
                timestamps.len()
            )));
        }
        if let Some(((i, t), _)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(MarketDataError::NonFinite { asset: i, column: t });
        }
        Ok(Self {
            assets,
            timestamps,
            values,
        })
    }

    /// Builds a matrix with generic asset names (`A0`, `A1`, ...) and hourly
    /// timestamps starting at the Unix epoch. Handy for synthetic data.
    pub fn from_values(values: Array2<f64>) -> Result<Self, MarketDataError> {
        let (n, l) = values.dim();
        let assets = (0..n).map(|i| format!("A{i}")).collect();
        let start = DateTime::<Utc>::from_timestamp(0, 0).expect("epoch");
        Self::new(assets, hourly_timestamps(start, l), values)
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

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn n_assets(&self) -> usize {
        self.assets.len()
    }

    /// Number of hourly columns.
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn row(&self, asset: usize) -> ArrayView1<'_, f64> {
        self.values.row(asset)
    }

    pub fn column(&self, t: usize) -> ArrayView1<'_, f64> {
        self.values.column(t)
    }

    /// Sub-matrix over a 0-based column range.
    pub fn columns(&self, range: Range<usize>) -> Result<Self, MarketDataError> {
        if range.start > range.end || range.end > self.len() {
            return Err(MarketDataError::ShapeMismatch(format!(
                "column range {range:?} outside 0..{}",
                self.len()
            )));
        }
        Ok(Self {
            assets: self.assets.clone(),
            timestamps: self.timestamps[range.clone()].to_vec(),
            values: self.values.slice(s![.., range]).to_owned(),
        })
    }

    /// Same assets and timestamps, new values.
    pub fn with_values(&self, values: Array2<f64>) -> Result<Self, MarketDataError> {
        Self::new(self.assets.clone(), self.timestamps.clone(), values)
    }

    /// Column-wise concatenation; asset lists must agree.
    pub fn concat(&self, other: &Self) -> Result<Self, MarketDataError> {
        if self.assets != other.assets {
            return Err(MarketDataError::ShapeMismatch(
                "cannot concatenate matrices with different assets".into(),
            ));
        }
        let values = ndarray::concatenate(Axis(1), &[self.values.view(), other.values.view()])
            .map_err(|e| MarketDataError::ShapeMismatch(e.to_string()))?;
        let mut timestamps = self.timestamps.clone();
        timestamps.extend_from_slice(&other.timestamps);
        Ok(Self {
            assets: self.assets.clone(),
            timestamps,
            values,
        })
    }

    /// Keeps the columns whose timestamp lies in `[start, end)`.
    pub fn restrict(&self, start: Option<DateTime<Utc>>, end: Option<DateTime<Utc>>) -> Result<Self, MarketDataError> {
        let lo = start.map_or(0, |s| self.timestamps.partition_point(|t| *t < s));
        let hi = end.map_or(self.len(), |e| self.timestamps.partition_point(|t| *t < e));
        self.columns(lo..hi.max(lo))
    }
}

pub fn hourly_timestamps(start: DateTime<Utc>, len: usize) -> Vec<DateTime<Utc>> {
    (0..len).map(|h| start + Duration::hours(h as i64)).collect()
}

/// `value[i][t] = ln(C[i][t+1] / C[i][t])`; timestamps are those of the later
/// close.
pub fn log_returns(prices: &PriceTensor) -> Result<ReturnMatrix, MarketDataError> {
    let (n, l1, _) = prices.values.dim();
    if l1 < 2 {
        return Err(MarketDataError::TooFewObservations { needed: 2, got: l1 });
    }
    let mut values = Array2::zeros((n, l1 - 1));
    for i in 0..n {
        let c = prices.closes(i);
        for t in 1..l1 {
            values[[i, t - 1]] = (c[t] / c[t - 1]).ln();
        }
    }
    ReturnMatrix::new(prices.assets.clone(), prices.timestamps[1..].to_vec(), values)
}
