//! Feature tensor: technical indicators and cross-sectional factors computed
//! from log-returns only, so real and synthetic data go through the same
//! pipeline.
//!
//! Every feature is causal: the value at hour `t` reads returns at hours
//! `<= t` (cross-sectional ranks also read other assets at `t`). Cells
//! without enough history hold the feature's neutral value.

use crate::market_data::ReturnMatrix;
use chrono::{DateTime, Utc};
use ndarray::{Array2, Array3, ArrayView1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("unknown feature {0:?}")]
    UnknownFeature(String),
    #[error("duplicate feature {0:?}")]
    DuplicateFeature(String),
    #[error("feature {name} needs {window} hours of history, series has {len}")]
    WindowTooLong { name: String, window: usize, len: usize },
    #[error("feature tensor shape {got:?}, expected {expected:?}")]
    ShapeMismatch {
        expected: (usize, usize, usize),
        got: (usize, usize, usize),
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureFamily {
    Trend,
    Momentum,
    Volatility,
    Oscillator,
    MeanReversion,
    CrossSectional,
    Lag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    SmaRatio,
    EmaRatio,
    Momentum,
    Volatility,
    Rsi,
    BollingerPctB,
    ZScore,
    RankReturn,
    RankVolatility,
    Lag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    /// Look-back lengths in hours.
    pub windows: Vec<usize>,
    pub family: FeatureFamily,
    pub neutral_value: f64,
    pub description: String,
}

impl FeatureSpec {
    fn max_window(&self) -> usize {
        self.windows.iter().copied().max().unwrap_or(1)
    }
}

fn spec(name: &str, window: usize, family: FeatureFamily, neutral: f64, desc: &str) -> FeatureSpec {
    FeatureSpec {
        name: name.to_string(),
        windows: vec![window],
        family,
        neutral_value: neutral,
        description: desc.to_string(),
    }
}

/// The built-in catalog, in tensor column order.
pub fn feature_catalog() -> Vec<FeatureSpec> {
    use FeatureFamily::*;
    let mut out = Vec::new();
    for k in [6, 24, 72] {
        out.push(spec(
            &format!("sma_ratio_{k}"),
            k,
            Trend,
            1.0,
            "price over its simple moving average",
        ));
    }
    for k in [12, 48] {
        out.push(spec(
            &format!("ema_ratio_{k}"),
            k,
            Trend,
            1.0,
            "price over its exponential moving average (alpha = 2/(k+1))",
        ));
    }
    for k in [6, 24, 72] {
        out.push(spec(
            &format!("momentum_{k}"),
            k,
            Momentum,
            0.0,
            "rolling sum of log-returns",
        ));
    }
    for k in [24, 72] {
        out.push(spec(
            &format!("vol_{k}"),
            k,
            Volatility,
            0.0,
            "rolling population std of log-returns",
        ));
    }
    out.push(spec("rsi_14", 14, Oscillator, 50.0, "Wilder RSI on log-price changes"));
    out.push(spec(
        "bollinger_pctb_20",
        20,
        Oscillator,
        0.5,
        "%B of cumulative log-price within 2-sigma bands",
    ));
    out.push(spec(
        "zscore_24",
        24,
        MeanReversion,
        0.0,
        "z-score of the latest return",
    ));
    out.push(spec(
        "xs_rank_ret_24",
        24,
        CrossSectional,
        0.5,
        "cross-sectional rank of trailing 24h return, scaled to [0, 1]",
    ));
    out.push(spec(
        "xs_rank_vol_24",
        24,
        CrossSectional,
        0.5,
        "cross-sectional rank of trailing 24h volatility, scaled to [0, 1]",
    ));
    out.push(spec("ret_lag_1", 1, Lag, 0.0, "latest realized return"));
    out.push(spec(
        "ret_lag_24",
        24,
        Lag,
        0.0,
        "return realized 24 hours before the target hour",
    ));
    out
}

fn kind_of(name: &str) -> Option<(Kind, usize)> {
    let (prefix, window) = name.rsplit_once('_')?;
    let window: usize = window.parse().ok()?;
    let kind = match prefix {
        "sma_ratio" => Kind::SmaRatio,
        "ema_ratio" => Kind::EmaRatio,
        "momentum" => Kind::Momentum,
        "vol" => Kind::Volatility,
        "rsi" => Kind::Rsi,
        "bollinger_pctb" => Kind::BollingerPctB,
        "zscore" => Kind::ZScore,
        "xs_rank_ret" => Kind::RankReturn,
        "xs_rank_vol" => Kind::RankVolatility,
        "ret_lag" => Kind::Lag,
        _ => return None,
    };
    Some((kind, window))
}

/// `n x l x d` tensor of features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTensor {
    assets: Vec<String>,
    timestamps: Vec<DateTime<Utc>>,
    names: Vec<String>,
    values: Array3<f64>,
    warmup: usize,
}

impl FeatureTensor {
    /// Wraps externally computed features (`n x l x d`), no warm-up.
    pub fn from_parts(
        assets: Vec<String>,
        timestamps: Vec<DateTime<Utc>>,
        names: Vec<String>,
        values: Array3<f64>,
    ) -> Result<Self, FeatureError> {
        let expected = (assets.len(), timestamps.len(), names.len());
        if values.dim() != expected {
            return Err(FeatureError::ShapeMismatch {
                expected,
                got: values.dim(),
            });
        }
        Ok(Self {
            assets,
            timestamps,
            names,
            values,
            warmup: 0,
        })
    }

    pub fn assets(&self) -> &[String] {
        &self.assets
    }
    pub fn timestamps(&self) -> &[DateTime<Utc>] {
        &self.timestamps
    }
    pub fn names(&self) -> &[String] {
        &self.names
    }
    pub fn values(&self) -> &Array3<f64> {
        &self.values
    }
    /// Number of leading hours where at least one feature is still at its
    /// neutral warm-up value.
    pub fn warmup(&self) -> usize {
        self.warmup
    }
    pub fn n_features(&self) -> usize {
        self.names.len()
    }
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }
    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }
    pub fn row(&self, asset: usize, t: usize) -> ArrayView1<'_, f64> {
        self.values.slice(ndarray::s![asset, t, ..])
    }
}

pub fn compute_features(returns: &ReturnMatrix, specs: &[FeatureSpec]) -> Result<FeatureTensor, FeatureError> {
    let l = returns.len();
    let n = returns.n_assets();
    let mut seen = HashSet::new();
    let mut kinds = Vec::with_capacity(specs.len());
    for sp in specs {
        if !seen.insert(sp.name.as_str()) {
            return Err(FeatureError::DuplicateFeature(sp.name.clone()));
        }
        let (kind, window) = kind_of(&sp.name).ok_or_else(|| FeatureError::UnknownFeature(sp.name.clone()))?;
        if window == 0 || sp.max_window() != window {
            return Err(FeatureError::UnknownFeature(sp.name.clone()));
        }
        if window > l {
            return Err(FeatureError::WindowTooLong {
                name: sp.name.clone(),
                window,
                len: l,
            });
        }
        kinds.push((kind, window));
    }

    let d = specs.len();
    let per_asset: Vec<Array2<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let r = returns.row(i).to_vec();
            let mut out = Array2::zeros((l, d));
            for (j, (kind, k)) in kinds.iter().enumerate() {
                let col = match kind {
                    Kind::SmaRatio => sma_ratio(&r, *k),
                    Kind::EmaRatio => ema_ratio(&r, *k),
                    Kind::Momentum | Kind::RankReturn => momentum(&r, *k),
                    Kind::Volatility | Kind::RankVolatility => volatility(&r, *k),
                    Kind::Rsi => rsi(&r, *k),
                    Kind::BollingerPctB => bollinger_pctb(&r, *k),
                    Kind::ZScore => zscore(&r, *k),
                    Kind::Lag => lag(&r, *k),
                };
                for (t, v) in col.into_iter().enumerate() {
                    out[[t, j]] = v;
                }
            }
            out
        })
        .collect();

    let mut values = Array3::zeros((n, l, d));
    for (i, a) in per_asset.iter().enumerate() {
        values.slice_mut(ndarray::s![i, .., ..]).assign(a);
    }
    for (j, (kind, k)) in kinds.iter().enumerate() {
        if matches!(kind, Kind::RankReturn | Kind::RankVolatility) {
            for t in 0..l {
                if t + 1 < *k {
                    for i in 0..n {
                        values[[i, t, j]] = 0.5;
                    }
                    continue;
                }
                let xs: Vec<f64> = (0..n).map(|i| values[[i, t, j]]).collect();
                let ranks = crate::stats::average_ranks(&xs);
                for i in 0..n {
                    values[[i, t, j]] = if n > 1 { (ranks[i] - 1.0) / (n - 1) as f64 } else { 0.5 };
                }
            }
        }
    }
    let warmup = kinds.iter().map(|(_, k)| k - 1).max().unwrap_or(0);

    Ok(FeatureTensor {
        assets: returns.assets().to_vec(),
        timestamps: returns.timestamps().to_vec(),
        names: specs.iter().map(|s| s.name.clone()).collect(),
        values,
        warmup,
    })
}

fn window_mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

const FLAT: f64 = 1e-14;

fn cumulative(r: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    r.iter()
        .map(|x| {
            acc += x;
            acc
        })
        .collect()
}

fn sma_ratio(r: &[f64], k: usize) -> Vec<f64> {
    let logp = cumulative(r);
    (0..r.len())
        .map(|t| {
            if t + 1 < k {
                return 1.0;
            }
            // price_t / mean(price_u) evaluated relative to price_t
            let rel: f64 = logp[t + 1 - k..=t].iter().map(|lp| (lp - logp[t]).exp()).sum::<f64>() / k as f64;
            1.0 / rel
        })
        .collect()
}

fn ema_ratio(r: &[f64], k: usize) -> Vec<f64> {
    let alpha = 2.0 / (k as f64 + 1.0);
    // q_t = ema_t / price_t, q_0 = 1
    let mut q = 1.0;
    r.iter()
        .enumerate()
        .map(|(t, x)| {
            if t > 0 {
                q = alpha + (1.0 - alpha) * q * (-x).exp();
            }
            if t + 1 < k {
                1.0
            } else {
                1.0 / q
            }
        })
        .collect()
}

fn momentum(r: &[f64], k: usize) -> Vec<f64> {
    (0..r.len())
        .map(|t| if t + 1 < k { 0.0 } else { r[t + 1 - k..=t].iter().sum() })
        .collect()
}

fn volatility(r: &[f64], k: usize) -> Vec<f64> {
    (0..r.len())
        .map(|t| {
            if t + 1 < k {
                0.0
            } else {
                window_mean_std(&r[t + 1 - k..=t]).1
            }
        })
        .collect()
}

fn rsi(r: &[f64], k: usize) -> Vec<f64> {
    let mut out = vec![50.0; r.len()];
    if r.len() < k {
        return out;
    }
    let kf = k as f64;
    let mut gain = r[..k].iter().map(|x| x.max(0.0)).sum::<f64>() / kf;
    let mut loss = r[..k].iter().map(|x| (-x).max(0.0)).sum::<f64>() / kf;
    for t in k - 1..r.len() {
        if t >= k {
            gain = (gain * (kf - 1.0) + r[t].max(0.0)) / kf;
            loss = (loss * (kf - 1.0) + (-r[t]).max(0.0)) / kf;
        }
        out[t] = if loss == 0.0 && gain == 0.0 {
            50.0
        } else if loss == 0.0 {
            100.0
        } else {
            100.0 - 100.0 / (1.0 + gain / loss)
        };
    }
    out
}

fn bollinger_pctb(r: &[f64], k: usize) -> Vec<f64> {
    let logp = cumulative(r);
    (0..r.len())
        .map(|t| {
            if t + 1 < k {
                return 0.5;
            }
            let (m, sd) = window_mean_std(&logp[t + 1 - k..=t]);
            if sd < FLAT {
                0.5
            } else {
                (logp[t] - (m - 2.0 * sd)) / (4.0 * sd)
            }
        })
        .collect()
}

fn zscore(r: &[f64], k: usize) -> Vec<f64> {
    (0..r.len())
        .map(|t| {
            if t + 1 < k {
                return 0.0;
            }
            let (m, sd) = window_mean_std(&r[t + 1 - k..=t]);
            if sd < FLAT {
                0.0
            } else {
                (r[t] - m) / sd
            }
        })
        .collect()
}

fn lag(r: &[f64], k: usize) -> Vec<f64> {
    (0..r.len())
        .map(|t| if t + 1 < k { 0.0 } else { r[t + 1 - k] })
        .collect()
}
