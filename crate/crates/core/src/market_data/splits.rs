use super::{MarketDataError, ReturnMatrix};
use serde::{Deserialize, Serialize};

/// Walk-forward offsets `tau in {w, w+s, ..., w+(k-1)s}` with
/// `k = floor((l - w) / s)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub window: usize,
    pub step: usize,
    pub offsets: Vec<usize>,
}

impl SplitPlan {
    pub fn count(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }
}

pub fn make_splits(l: usize, w: usize, s: usize) -> Result<SplitPlan, MarketDataError> {
    if w == 0 || s == 0 || w > l {
        return Err(MarketDataError::InvalidWindow { w, l });
    }
    let k = (l - w) / s;
    Ok(SplitPlan {
        window: w,
        step: s,
        offsets: (0..k).map(|j| w + j * s).collect(),
    })
}

/// One train/test pair cut from the full return matrix.
#[derive(Debug, Clone)]
pub struct WindowSplit {
    pub tau: usize,
    pub train: ReturnMatrix,
    pub test: ReturnMatrix,
}

/// Train columns `[tau - w, tau)`, test columns `[tau, tau + s)`.
pub fn split_slices(returns: &ReturnMatrix, tau: usize, w: usize, s: usize) -> Result<WindowSplit, MarketDataError> {
    let l = returns.len();
    if w == 0 || s == 0 || tau < w || tau + s > l {
        return Err(MarketDataError::OffsetOutOfRange { tau, w, s, l });
    }
    Ok(WindowSplit {
        tau,
        train: returns.columns(tau - w..tau)?,
        test: returns.columns(tau..tau + s)?,
    })
}
