use super::{validate_candle, MarketDataError, PriceTensor, CLOSE, HIGH, LOW, OPEN};
use chrono::{DateTime, NaiveDateTime, Timelike, Utc};
use ndarray::Array3;
use serde::Deserialize;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Deserialize)]
struct CandleRow {
    timestamp: String,
    open: f64,
    high: f64,
    low: f64,
    close: f64,
    // Accepted for compatibility; not used.
    #[serde(default)]
    #[allow(dead_code)]
    volume: Option<f64>,
}

#[derive(Debug, Clone)]
struct AssetCandles {
    asset: String,
    timestamps: Vec<DateTime<Utc>>,
    ohlc: Vec<[f64; 4]>,
}

/// An asset left out of the tensor and why.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, Deserialize)]
pub struct DroppedAsset {
    pub asset: String,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct LoadedPrices {
    pub prices: PriceTensor,
    pub dropped: Vec<DroppedAsset>,
}

/// Loads a single `<ASSET>.csv` candle file or a directory of them.
///
/// Assets are aligned on the intersection of their hourly ranges; an asset
/// with any missing hour inside that range is dropped and reported. The
/// intersection is recomputed after each round of drops until stable.
pub fn load_ohlc(source: impl AsRef<Path>) -> Result<LoadedPrices, MarketDataError> {
    let source = source.as_ref();
    let meta = fs::metadata(source).map_err(|e| MarketDataError::UnreadableSource {
        path: source.to_path_buf(),
        reason: e.to_string(),
    })?;
    let files: Vec<PathBuf> = if meta.is_dir() {
        let mut files = Vec::new();
        let entries = fs::read_dir(source).map_err(|e| MarketDataError::UnreadableSource {
            path: source.to_path_buf(),
            reason: e.to_string(),
        })?;
        for entry in entries {
            let path = entry
                .map_err(|e| MarketDataError::UnreadableSource {
                    path: source.to_path_buf(),
                    reason: e.to_string(),
                })?
                .path();
            if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
                files.push(path);
            }
        }
        files
    } else {
        vec![source.to_path_buf()]
    };
    if files.is_empty() {
        return Err(MarketDataError::UnreadableSource {
            path: source.to_path_buf(),
            reason: "no .csv candle files".into(),
        });
    }

    let mut assets = files
        .iter()
        .map(|f| read_candle_file(f))
        .collect::<Result<Vec<_>, _>>()?;
    assets.sort_by(|a, b| a.asset.cmp(&b.asset));

    let mut dropped = Vec::new();
    let (start, end) = loop {
        let start = assets.iter().filter_map(|a| a.timestamps.first()).max().copied();
        let end = assets.iter().filter_map(|a| a.timestamps.last()).min().copied();
        let (start, end) = match (start, end) {
            (Some(s), Some(e)) if s <= e => (s, e),
            _ => return Err(MarketDataError::NoCommonTimespan),
        };
        let expected = ((end - start).num_hours() + 1) as usize;
        let before = assets.len();
        assets.retain(|a| {
            let inside = a.timestamps.iter().filter(|t| **t >= start && **t <= end).count();
            if inside < expected {
                dropped.push(DroppedAsset {
                    asset: a.asset.clone(),
                    reason: format!(
                        "{} of {} hourly candles missing in common range",
                        expected - inside,
                        expected
                    ),
                });
                false
            } else {
                true
            }
        });
        if assets.is_empty() {
            return Err(MarketDataError::NoCommonTimespan);
        }
        if assets.len() == before {
            break (start, end);
        }
    };

    let hours = ((end - start).num_hours() + 1) as usize;
    let mut values = Array3::zeros((assets.len(), hours, 4));
    let mut timestamps = Vec::new();
    for (i, a) in assets.iter().enumerate() {
        let first = a.timestamps.partition_point(|t| *t < start);
        for h in 0..hours {
            let c = a.ohlc[first + h];
            for (f, v) in c.iter().enumerate() {
                values[[i, h, f]] = *v;
            }
        }
        if i == 0 {
            timestamps = a.timestamps[first..first + hours].to_vec();
        }
    }
    let names = assets.into_iter().map(|a| a.asset).collect();
    for d in &dropped {
        log::warn!("dropped {}: {}", d.asset, d.reason);
    }
    Ok(LoadedPrices {
        prices: PriceTensor::new(names, timestamps, values)?,
        dropped,
    })
}

fn read_candle_file(path: &Path) -> Result<AssetCandles, MarketDataError> {
    let asset = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| MarketDataError::UnreadableSource {
            path: path.to_path_buf(),
            reason: "file name is not valid UTF-8".into(),
        })?
        .to_string();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| MarketDataError::UnreadableSource {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
    let mut timestamps = Vec::new();
    let mut ohlc = Vec::new();
    for (idx, row) in reader.deserialize::<CandleRow>().enumerate() {
        let line = idx + 2;
        let row = row.map_err(|e| MarketDataError::Parse {
            path: path.to_path_buf(),
            line,
            reason: e.to_string(),
        })?;
        let ts = parse_timestamp(&row.timestamp).ok_or_else(|| MarketDataError::Parse {
            path: path.to_path_buf(),
            line,
            reason: format!("unrecognised timestamp {:?}", row.timestamp),
        })?;
        if ts.minute() != 0 || ts.second() != 0 || ts.nanosecond() != 0 {
            return Err(MarketDataError::IrregularTimestamps {
                asset: asset.clone(),
                reason: format!("{ts} is not on a whole hour"),
            });
        }
        if let Some(prev) = timestamps.last() {
            if ts <= *prev {
                return Err(MarketDataError::IrregularTimestamps {
                    asset: asset.clone(),
                    reason: format!("{ts} does not follow {prev}"),
                });
            }
        }
        let mut candle = [0.0; 4];
        candle[OPEN] = row.open;
        candle[HIGH] = row.high;
        candle[LOW] = row.low;
        candle[CLOSE] = row.close;
        validate_candle(&asset, ts, candle)?;
        timestamps.push(ts);
        ohlc.push(candle);
    }
    if timestamps.is_empty() {
        return Err(MarketDataError::UnreadableSource {
            path: path.to_path_buf(),
            reason: "no candles".into(),
        });
    }
    Ok(AssetCandles {
        asset,
        timestamps,
        ohlc,
    })
}

/// Integer epoch milliseconds or an ISO-8601 UTC timestamp.
pub(crate) fn parse_timestamp(raw: &str) -> Option<DateTime<Utc>> {
    let raw = raw.trim();
    if let Ok(ms) = raw.parse::<i64>() {
        return DateTime::<Utc>::from_timestamp_millis(ms);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(raw) {
        return Some(dt.with_timezone(&Utc));
    }
    for fmt in [
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
    ] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(raw, fmt) {
            return Some(dt.and_utc());
        }
    }
    None
}
