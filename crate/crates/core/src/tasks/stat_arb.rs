use super::ou::{fit_ou, s_score, stat_arb_weights};
use super::{
    check_fees, empty_result, ExcludedAsset, StrategyFailure, StrategyRun, TaskError, TaskKind, TaskResult,
    STAT_ARB_STRATEGY,
};
use crate::market_data::WindowSplit;
use crate::strategies::{simulate, WeightMatrix};
use crate::tsg::TsgModelHandle;
use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// What the OU process is fitted to.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualSignal {
    /// Running sum of residual returns, with the test window continuing the
    /// training level. Mean reversion in this level is what a contrarian
    /// book profits from.
    #[default]
    Cumulative,
    /// The per-hour residual returns themselves.
    Return,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatArbConfig {
    pub gamma: f64,
    pub fees: Vec<f64>,
    pub v0: f64,
    pub residual_signal: ResidualSignal,
}

impl Default for StatArbConfig {
    fn default() -> Self {
        Self {
            gamma: 2.0,
            fees: vec![0.0, 0.0003],
            v0: 10_000.0,
            residual_signal: ResidualSignal::Cumulative,
        }
    }
}

fn running_sum(start: f64, xs: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = start;
    xs.map(|x| {
        acc += x;
        acc
    })
    .collect()
}

/// Reconstruct, fit OU per asset on training residuals, trade s-scores on
/// the test window. The book for test hour `j` uses the score observed at
/// the end of hour `j - 1` (the last training hour for `j = 0`).
pub fn run_stat_arb(
    split: &WindowSplit,
    model: &mut TsgModelHandle,
    config: &StatArbConfig,
) -> Result<TaskResult, TaskError> {
    if !(config.gamma > 0.0 && config.gamma.is_finite()) {
        return Err(TaskError::InvalidConfig(format!("gamma {} must be > 0", config.gamma)));
    }
    check_fees(&config.fees)?;
    let (train, test) = (&split.train, &split.test);
    let mut result = empty_result(TaskKind::StatArb, model.id(), split.tau, test);

    let started = Instant::now();
    model.fit(train, split.tau)?;
    result.timings.fit_s = started.elapsed().as_secs_f64();
    let rec_train = model.reconstruct(train)?;
    let started = Instant::now();
    let rec_test = model.reconstruct(test)?;
    result.timings.infer_s = started.elapsed().as_secs_f64();

    let rho = train.values() - rec_train.values();
    let eps = test.values() - rec_test.values();
    let (n, s) = test.values().dim();

    let per_asset: Vec<_> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (train_sig, test_sig) = match config.residual_signal {
                ResidualSignal::Cumulative => {
                    let tr = running_sum(0.0, rho.row(i).iter().copied());
                    let last = tr.last().copied().unwrap_or(0.0);
                    let te = running_sum(last, eps.row(i).iter().copied());
                    (tr, te)
                }
                ResidualSignal::Return => (rho.row(i).to_vec(), eps.row(i).to_vec()),
            };
            let fit = fit_ou(&train_sig);
            let scores: Vec<f64> = match &fit {
                Ok(p) => (0..s)
                    .map(|j| {
                        let prev = if j == 0 {
                            *train_sig.last().expect("non-empty training window")
                        } else {
                            test_sig[j - 1]
                        };
                        s_score(prev, p)
                    })
                    .collect(),
                Err(_) => vec![f64::NAN; s],
            };
            (fit, scores)
        })
        .collect();

    let mut scores = Array2::from_elem((n, s), f64::NAN);
    for (i, (fit, sc)) in per_asset.iter().enumerate() {
        match fit {
            Ok(p) => result.ou.push(Some(*p)),
            Err(e) => {
                result.ou.push(None);
                result.excluded.push(ExcludedAsset {
                    asset: test.assets()[i].clone(),
                    reason: e.to_string(),
                });
            }
        }
        for (j, v) in sc.iter().enumerate() {
            scores[[i, j]] = *v;
        }
    }
    if result.excluded.len() == n {
        let reasons: Vec<String> = result
            .excluded
            .iter()
            .map(|e| format!("{}: {}", e.asset, e.reason))
            .collect();
        return Err(TaskError::AllAssetsExcluded(reasons.join("; ")));
    }

    let mut weights = Array2::zeros((n, s));
    for j in 0..s {
        let w = stat_arb_weights(&scores.column(j).to_vec(), config.gamma);
        for (i, v) in w.into_iter().enumerate() {
            weights[[i, j]] = v;
        }
    }
    let book = WeightMatrix::new(test.assets().to_vec(), test.timestamps().to_vec(), weights)?;
    for &fee in &config.fees {
        match simulate(&book, test, fee, config.v0) {
            Ok(curve) => result.runs.push(StrategyRun {
                strategy: STAT_ARB_STRATEGY.into(),
                fee,
                curve,
            }),
            Err(e) => result.failures.push(StrategyFailure {
                strategy: format!("{STAT_ARB_STRATEGY}@{fee}"),
                reason: e.to_string(),
            }),
        }
    }
    result.estimate = rec_test.values().clone();
    result.signal = scores.mapv(|v| -v);
    Ok(result)
}
