use super::{Capabilities, FitContext, TsgError, TsgModel};
use crate::market_data::ReturnMatrix;
use ndarray::{s, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Real data without a generator: `generate` hands back the training window
/// (its trailing `length` columns) and `reconstruct` is the identity.
#[derive(Debug, Clone, Default)]
pub struct Passthrough {
    train: Option<Array2<f64>>,
}

impl TsgModel for Passthrough {
    fn id(&self) -> &str {
        "passthrough"
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            supports_generate: true,
            supports_reconstruct: true,
        }
    }

    fn fit(&mut self, ctx: &FitContext<'_>) -> Result<(), TsgError> {
        self.train = Some(ctx.train.values().clone());
        Ok(())
    }

    fn generate(&self, _n: usize, length: usize, _seed: u64) -> Result<Array2<f64>, TsgError> {
        let train = self
            .train
            .as_ref()
            .ok_or_else(|| TsgError::NotTrained("passthrough".into()))?;
        let l = train.ncols();
        if length > l {
            return Err(TsgError::ShapeMismatch(format!(
                "passthrough can replay at most {l} hours, asked for {length}"
            )));
        }
        Ok(train.slice(s![.., l - length..]).to_owned())
    }

    fn reconstruct(&self, input: &ReturnMatrix) -> Result<Array2<f64>, TsgError> {
        Ok(input.values().clone())
    }
}

/// Independent per-asset normal draws matched to the training mean and
/// standard deviation. Reconstruction returns the training mean everywhere.
#[derive(Debug, Clone, Default)]
pub struct Gaussian {
    moments: Option<Vec<(f64, f64)>>,
}

impl Gaussian {
    pub fn moments(&self) -> Option<&[(f64, f64)]> {
        self.moments.as_deref()
    }
}

impl TsgModel for Gaussian {
    fn id(&self) -> &str {
        "gaussian"
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            supports_generate: true,
            supports_reconstruct: true,
        }
    }

    fn fit(&mut self, ctx: &FitContext<'_>) -> Result<(), TsgError> {
        let moments = ctx
            .train
            .values()
            .rows()
            .into_iter()
            .map(|row| {
                let xs = row.to_vec();
                (crate::stats::mean(&xs), crate::stats::population_std(&xs))
            })
            .collect();
        self.moments = Some(moments);
        Ok(())
    }

    fn generate(&self, n: usize, length: usize, seed: u64) -> Result<Array2<f64>, TsgError> {
        let moments = self
            .moments
            .as_ref()
            .ok_or_else(|| TsgError::NotTrained("gaussian".into()))?;
        if n != moments.len() {
            return Err(TsgError::ShapeMismatch(format!(
                "fitted on {} assets, asked for {n}",
                moments.len()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Array2::zeros((n, length));
        for (i, (mean, sd)) in moments.iter().enumerate() {
            let dist = Normal::new(*mean, *sd).map_err(|e| TsgError::FitFailed(format!("asset {i}: {e}")))?;
            for t in 0..length {
                out[[i, t]] = dist.sample(&mut rng);
            }
        }
        Ok(out)
    }

    fn reconstruct(&self, input: &ReturnMatrix) -> Result<Array2<f64>, TsgError> {
        let moments = self
            .moments
            .as_ref()
            .ok_or_else(|| TsgError::NotTrained("gaussian".into()))?;
        let (n, l) = input.values().dim();
        Ok(Array2::from_shape_fn((n, l), |(i, _)| moments[i].0))
    }
}

/// Stitches whole-cross-section blocks of training columns, sampled with
/// replacement.
#[derive(Debug, Clone)]
pub struct BlockBootstrap {
    block: usize,
    train: Option<Array2<f64>>,
}

impl BlockBootstrap {
    pub fn new(block: usize) -> Result<Self, TsgError> {
        if block == 0 {
            return Err(TsgError::InvalidConfig("block length must be >= 1".into()));
        }
        Ok(Self { block, train: None })
    }
}

impl TsgModel for BlockBootstrap {
    fn id(&self) -> &str {
        "block_bootstrap"
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            supports_generate: true,
            supports_reconstruct: false,
        }
    }

    fn fit(&mut self, ctx: &FitContext<'_>) -> Result<(), TsgError> {
        self.train = Some(ctx.train.values().clone());
        Ok(())
    }

    fn generate(&self, n: usize, length: usize, seed: u64) -> Result<Array2<f64>, TsgError> {
        let train = self
            .train
            .as_ref()
            .ok_or_else(|| TsgError::NotTrained("block_bootstrap".into()))?;
        if n != train.nrows() {
            return Err(TsgError::ShapeMismatch(format!(
                "fitted on {} assets, asked for {n}",
                train.nrows()
            )));
        }
        let l = train.ncols();
        let block = self.block.min(l);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Array2::zeros((n, length));
        let mut filled = 0;
        while filled < length {
            let start = rng.random_range(0..=l - block);
            let take = block.min(length - filled);
            out.slice_mut(s![.., filled..filled + take])
                .assign(&train.slice(s![.., start..start + take]));
            filled += take;
        }
        Ok(out)
    }

    fn reconstruct(&self, _input: &ReturnMatrix) -> Result<Array2<f64>, TsgError> {
        Err(TsgError::ModeUnsupported {
            model: "block_bootstrap".into(),
            mode: "reconstruct",
        })
    }
}
