//! Time-series generator (TSG) contract.
//!
//! A model is trained on one split's training window and then used in
//! generation mode (sample a synthetic window from a seed) or reconstruction
//! mode (map real returns to a denoised version). [`TsgModelHandle`] wraps a
//! model with its fit state and records wall-clock timings for the
//! efficiency metrics.

mod baselines;
mod bundle;
mod external;
mod pca;

use crate::market_data::{hourly_timestamps, MarketDataError, ReturnMatrix};
use chrono::{DateTime, Utc};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::Instant;
use thiserror::Error;

pub use baselines::{BlockBootstrap, Gaussian, Passthrough};
pub use bundle::{
    read_bundle, read_manifest, write_bundle, BundleError, BundleMode, ExchangeBundle, Manifest, SCHEMA_VERSION,
};
pub use external::{BundleDirModel, ExternalCommandModel};
pub use pca::{pca_fit_reconstruct, PcaReconstructor, PcaSelection};

#[derive(Debug, Error)]
pub enum TsgError {
    #[error("model {0} has not been trained")]
    NotTrained(String),
    #[error("model {model} does not support {mode}")]
    ModeUnsupported { model: String, mode: &'static str },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("fit failed: {0}")]
    FitFailed(String),
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error("external model {model}: {reason}")]
    External { model: String, reason: String },
    #[error(transparent)]
    Data(#[from] MarketDataError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Capabilities {
    pub supports_generate: bool,
    pub supports_reconstruct: bool,
}

/// What a model needs to know about the window it is trained on.
#[derive(Debug, Clone)]
pub struct FitContext<'a> {
    pub train: &'a ReturnMatrix,
    pub tau: usize,
}

pub trait TsgModel: Send + Sync {
    fn id(&self) -> &str;
    fn capabilities(&self) -> Capabilities;
    /// Refits from scratch; any previous state is discarded.
    fn fit(&mut self, ctx: &FitContext<'_>) -> Result<(), TsgError>;
    /// `n x length` synthetic log-returns, deterministic in `seed`.
    fn generate(&self, n: usize, length: usize, seed: u64) -> Result<Array2<f64>, TsgError>;
    /// Same shape as `input`.
    fn reconstruct(&self, input: &ReturnMatrix) -> Result<Array2<f64>, TsgError>;
}

/// Declarative model choice, as written in bench configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Passthrough,
    Gaussian,
    BlockBootstrap {
        block: usize,
    },
    Pca {
        components: PcaSelection,
    },
    /// Adapter process invoked as `<command...> --request <dir> --response <dir>`.
    External {
        id: String,
        command: Vec<String>,
        workdir: PathBuf,
        capabilities: Capabilities,
    },
    /// Pre-computed response bundles under `<root>/tau-<tau>/<mode>/`.
    Bundles {
        id: String,
        root: PathBuf,
        capabilities: Capabilities,
    },
}

impl ModelSpec {
    pub fn build(&self) -> Result<Box<dyn TsgModel>, TsgError> {
        Ok(match self {
            ModelSpec::Passthrough => Box::new(Passthrough::default()),
            ModelSpec::Gaussian => Box::new(Gaussian::default()),
            ModelSpec::BlockBootstrap { block } => Box::new(BlockBootstrap::new(*block)?),
            ModelSpec::Pca { components } => Box::new(PcaModel::new(*components)),
            ModelSpec::External {
                id,
                command,
                workdir,
                capabilities,
            } => Box::new(ExternalCommandModel::new(
                id.clone(),
                command.clone(),
                workdir.clone(),
                *capabilities,
            )?),
            ModelSpec::Bundles { id, root, capabilities } => {
                Box::new(BundleDirModel::new(id.clone(), root.clone(), *capabilities))
            }
        })
    }
}

/// The PCA reconstructor behind the [`TsgModel`] interface.
#[derive(Debug, Clone)]
pub struct PcaModel {
    selection: PcaSelection,
    fitted: Option<PcaReconstructor>,
}

impl PcaModel {
    pub fn new(selection: PcaSelection) -> Self {
        Self {
            selection,
            fitted: None,
        }
    }

    pub fn fitted(&self) -> Option<&PcaReconstructor> {
        self.fitted.as_ref()
    }
}

impl TsgModel for PcaModel {
    fn id(&self) -> &str {
        "pca"
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            supports_generate: false,
            supports_reconstruct: true,
        }
    }

    fn fit(&mut self, ctx: &FitContext<'_>) -> Result<(), TsgError> {
        self.fitted = Some(pca_fit_reconstruct(ctx.train, self.selection)?);
        Ok(())
    }

    fn generate(&self, _: usize, _: usize, _: u64) -> Result<Array2<f64>, TsgError> {
        Err(TsgError::ModeUnsupported {
            model: "pca".into(),
            mode: "generate",
        })
    }

    fn reconstruct(&self, input: &ReturnMatrix) -> Result<Array2<f64>, TsgError> {
        let fitted = self.fitted.as_ref().ok_or_else(|| TsgError::NotTrained("pca".into()))?;
        fitted.reconstruct(input.values())
    }
}

#[derive(Debug, Clone)]
pub enum FitState {
    Untrained,
    Trained {
        tau: usize,
        assets: Vec<String>,
        train_start: DateTime<Utc>,
        train_len: usize,
    },
}

/// Wall-clock phase records for one handle.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub fit_s: Vec<f64>,
    pub generate_s: Vec<f64>,
    pub reconstruct_s: Vec<f64>,
}

impl PhaseTimings {
    pub fn merge(&mut self, other: &PhaseTimings) {
        self.fit_s.extend_from_slice(&other.fit_s);
        self.generate_s.extend_from_slice(&other.generate_s);
        self.reconstruct_s.extend_from_slice(&other.reconstruct_s);
    }
}

pub struct TsgModelHandle {
    model: Box<dyn TsgModel>,
    state: FitState,
    seed: u64,
    timings: Mutex<PhaseTimings>,
}

impl fmt::Debug for TsgModelHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TsgModelHandle")
            .field("model", &self.model.id())
            .field("state", &self.state)
            .field("seed", &self.seed)
            .finish()
    }
}

impl TsgModelHandle {
    pub fn new(model: Box<dyn TsgModel>, seed: u64) -> Self {
        Self {
            model,
            state: FitState::Untrained,
            seed,
            timings: Mutex::new(PhaseTimings::default()),
        }
    }

    pub fn from_spec(spec: &ModelSpec, seed: u64) -> Result<Self, TsgError> {
        Ok(Self::new(spec.build()?, seed))
    }

    pub fn id(&self) -> &str {
        self.model.id()
    }

    pub fn capabilities(&self) -> Capabilities {
        self.model.capabilities()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn state(&self) -> &FitState {
        &self.state
    }

    pub fn is_trained(&self) -> bool {
        matches!(self.state, FitState::Trained { .. })
    }

    pub fn model(&self) -> &dyn TsgModel {
        self.model.as_ref()
    }

    pub fn timings(&self) -> PhaseTimings {
        self.timings.lock().expect("timings lock").clone()
    }

    pub fn fit(&mut self, train: &ReturnMatrix, tau: usize) -> Result<(), TsgError> {
        if train.is_empty() || train.n_assets() == 0 {
            return Err(TsgError::FitFailed("empty training window".into()));
        }
        self.state = FitState::Untrained;
        let started = Instant::now();
        self.model.fit(&FitContext { train, tau })?;
        let elapsed = started.elapsed().as_secs_f64();
        self.timings.lock().expect("timings lock").fit_s.push(elapsed);
        self.state = FitState::Trained {
            tau,
            assets: train.assets().to_vec(),
            train_start: train.timestamps()[0],
            train_len: train.len(),
        };
        Ok(())
    }

    fn trained(&self) -> Result<(&[String], DateTime<Utc>), TsgError> {
        match &self.state {
            FitState::Trained {
                assets, train_start, ..
            } => Ok((assets, *train_start)),
            FitState::Untrained => Err(TsgError::NotTrained(self.id().to_string())),
        }
    }

    /// Synthetic window stamped with hourly timestamps from the training start.
    pub fn generate(&self, n: usize, length: usize, seed: u64) -> Result<ReturnMatrix, TsgError> {
        let (assets, start) = self.trained()?;
        if !self.capabilities().supports_generate {
            return Err(TsgError::ModeUnsupported {
                model: self.id().to_string(),
                mode: "generate",
            });
        }
        if n != assets.len() {
            return Err(TsgError::ShapeMismatch(format!(
                "requested {n} assets, model trained on {}",
                assets.len()
            )));
        }
        let started = Instant::now();
        let values = self.model.generate(n, length, seed)?;
        let elapsed = started.elapsed().as_secs_f64();
        self.timings.lock().expect("timings lock").generate_s.push(elapsed);
        if values.dim() != (n, length) {
            return Err(TsgError::ShapeMismatch(format!(
                "model returned {:?}, expected ({n}, {length})",
                values.dim()
            )));
        }
        Ok(ReturnMatrix::new(
            assets.to_vec(),
            hourly_timestamps(start, length),
            values,
        )?)
    }

    pub fn reconstruct(&self, input: &ReturnMatrix) -> Result<ReturnMatrix, TsgError> {
        let (assets, _) = self.trained()?;
        if !self.capabilities().supports_reconstruct {
            return Err(TsgError::ModeUnsupported {
                model: self.id().to_string(),
                mode: "reconstruct",
            });
        }
        if input.n_assets() != assets.len() {
            return Err(TsgError::ShapeMismatch(format!(
                "input has {} assets, model trained on {}",
                input.n_assets(),
                assets.len()
            )));
        }
        let started = Instant::now();
        let values = self.model.reconstruct(input)?;
        let elapsed = started.elapsed().as_secs_f64();
        self.timings.lock().expect("timings lock").reconstruct_s.push(elapsed);
        if values.dim() != input.values().dim() {
            return Err(TsgError::ShapeMismatch(format!(
                "reconstruction {:?} vs input {:?}",
                values.dim(),
                input.values().dim()
            )));
        }
        Ok(input.with_values(values)?)
    }
}
