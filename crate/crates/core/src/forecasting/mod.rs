//! Next-hour return forecaster trained on pooled (asset, hour) feature rows.

mod gbdt;
mod ridge;

use crate::features::FeatureTensor;
use crate::market_data::ReturnMatrix;
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use gbdt::{Node, Tree};

/// Fewest rows a forecaster is fitted on.
pub const MIN_TRAINING_ROWS: usize = 10;
const BLOB_MAGIC: &[u8; 4] = b"CTBF";
const BLOB_VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum ForecastError {
    #[error("training set is empty or has fewer than {MIN_TRAINING_ROWS} rows ({0})")]
    EmptyTrainingSet(usize),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("feature list differs from training: expected {expected:?}, got {got:?}")]
    FeatureMismatch { expected: Vec<String>, got: Vec<String> },
    #[error("invalid forecaster configuration: {0}")]
    InvalidConfig(String),
    #[error("linear system not solvable: {0}")]
    Singular(String),
    #[error("bad model blob: {0}")]
    BadBlob(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Gbdt,
    Ridge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForecasterConfig {
    pub algorithm: Algorithm,
    pub trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    /// Ridge penalty.
    pub lambda: f64,
    /// Row fraction drawn (without replacement) for each tree.
    pub subsample: f64,
    pub min_samples_leaf: usize,
    pub seed: u64,
}

impl Default for ForecasterConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Gbdt,
            trees: 100,
            max_depth: 3,
            learning_rate: 0.1,
            lambda: 1.0,
            subsample: 1.0,
            min_samples_leaf: 1,
            seed: 0,
        }
    }
}

impl ForecasterConfig {
    pub fn validate(&self) -> Result<(), ForecastError> {
        let bad = |m: String| Err(ForecastError::InvalidConfig(m));
        if self.trees < 1 {
            return bad("trees must be >= 1".into());
        }
        if self.max_depth < 1 {
            return bad("max_depth must be >= 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad(format!("learning_rate {} outside (0, 1]", self.learning_rate));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda {} must be finite and >= 0", self.lambda));
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return bad(format!("subsample {} outside (0, 1]", self.subsample));
        }
        if self.min_samples_leaf < 1 {
            return bad("min_samples_leaf must be >= 1".into());
        }
        Ok(())
    }
}

/// Design matrix with one row per `(asset, hour)` pair, asset-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub x: Array2<f64>,
    pub y: Vec<f64>,
    pub feature_names: Vec<String>,
}

impl TrainingSet {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

/// Pairs feature row `(i, t)` with the return of hour `t + 1`; the last
/// hour has no target and is dropped.
pub fn build_training_set(features: &FeatureTensor, returns: &ReturnMatrix) -> Result<TrainingSet, ForecastError> {
    if features.assets() != returns.assets() || features.timestamps() != returns.timestamps() {
        return Err(ForecastError::ShapeMismatch(
            "features and returns cover different assets or hours".into(),
        ));
    }
    let (n, l) = (returns.n_assets(), returns.len());
    if l < 2 || n == 0 {
        return Err(ForecastError::EmptyTrainingSet(0));
    }
    let d = features.n_features();
    let rows = n * (l - 1);
    let mut x = Array2::zeros((rows, d));
    let mut y = Vec::with_capacity(rows);
    let r = returns.values();
    let f = features.values();
    for i in 0..n {
        for t in 0..l - 1 {
            let row = i * (l - 1) + t;
            for j in 0..d {
                x[[row, j]] = f[[i, t, j]];
            }
            y.push(r[[i, t + 1]]);
        }
    }
    Ok(TrainingSet {
        x,
        y,
        feature_names: features.names().to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FittedModel {
    Gbdt { base: f64, trees: Vec<Tree> },
    Ridge { intercept: f64, coef: Vec<f64> },
}

/// A fitted, immutable forecaster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedForecaster {
    pub config: ForecasterConfig,
    pub feature_names: Vec<String>,
    pub model: FittedModel,
}

pub fn fit_forecaster(set: &TrainingSet, config: &ForecasterConfig) -> Result<TrainedForecaster, ForecastError> {
    config.validate()?;
    if set.len() < MIN_TRAINING_ROWS {
        return Err(ForecastError::EmptyTrainingSet(set.len()));
    }
    if set.x.nrows() != set.y.len() || set.x.ncols() != set.feature_names.len() {
        return Err(ForecastError::ShapeMismatch(format!(
            "x {:?}, {} targets, {} feature names",
            set.x.dim(),
            set.y.len(),
            set.feature_names.len()
        )));
    }
    if set.x.iter().chain(set.y.iter()).any(|v| !v.is_finite()) {
        return Err(ForecastError::ShapeMismatch("non-finite training value".into()));
    }
    let model = match config.algorithm {
        Algorithm::Gbdt => gbdt::fit(&set.x, &set.y, config),
        Algorithm::Ridge => ridge::fit(&set.x, &set.y, config.lambda)?,
    };
    Ok(TrainedForecaster {
        config: config.clone(),
        feature_names: set.feature_names.clone(),
        model,
    })
}

impl TrainedForecaster {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        match &self.model {
            FittedModel::Gbdt { base, trees } => {
                let lr = self.config.learning_rate;
                trees.iter().fold(*base, |acc, t| acc + lr * t.predict(x))
            }
            FittedModel::Ridge { intercept, coef } => intercept + coef.iter().zip(x).map(|(b, v)| b * v).sum::<f64>(),
        }
    }

    /// Predictions for hour `t + 1` of every asset from the feature rows at `t`.
    pub fn predict(&self, features: &FeatureTensor, t: usize) -> Result<Vec<f64>, ForecastError> {
        if features.names() != self.feature_names.as_slice() {
            return Err(ForecastError::FeatureMismatch {
                expected: self.feature_names.clone(),
                got: features.names().to_vec(),
            });
        }
        if t >= features.len() {
            return Err(ForecastError::ShapeMismatch(format!(
                "hour {t} outside a {}-hour feature tensor",
                features.len()
            )));
        }
        Ok((0..features.assets().len())
            .map(|i| self.predict_row(&features.row(i, t).to_vec()))
            .collect())
    }

    pub fn predict_matrix(&self, x: &Array2<f64>) -> Vec<f64> {
        x.rows()
            .into_iter()
            .map(|row| self.predict_row(&row.to_vec()))
            .collect()
    }

    /// Self-describing blob: magic, little-endian version, JSON body.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = BLOB_MAGIC.to_vec();
        out.extend_from_slice(&BLOB_VERSION.to_le_bytes());
        out.extend(serde_json::to_vec(self).expect("forecaster serializes"));
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ForecastError> {
        if bytes.len() < 6 || &bytes[..4] != BLOB_MAGIC {
            return Err(ForecastError::BadBlob("missing magic".into()));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != BLOB_VERSION {
            return Err(ForecastError::BadBlob(format!("unsupported version {version}")));
        }
        serde_json::from_slice(&bytes[6..]).map_err(|e| ForecastError::BadBlob(e.to_string()))
    }
}
