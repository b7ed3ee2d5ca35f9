use super::{check_fees, empty_result, StrategyFailure, StrategyRun, TaskError, TaskKind, TaskResult};
use crate::features::{compute_features, feature_catalog};
use crate::forecasting::{build_training_set, fit_forecaster, ForecasterConfig};
use crate::market_data::WindowSplit;
use crate::stats::derive_seed;
use crate::strategies::{simulate, Strategy, StrategyError, WeightMatrix};
use crate::tsg::TsgModelHandle;
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Where next-hour predictions come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PredictionSource {
    /// Forecaster trained on the generator's synthetic window.
    Forecaster(ForecasterConfig),
    /// The realised test returns. Upper bound for sanity checks.
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveConfig {
    pub source: PredictionSource,
    pub strategies: Vec<Strategy>,
    pub fees: Vec<f64>,
    pub v0: f64,
    pub seed: u64,
}

impl Default for PredictiveConfig {
    fn default() -> Self {
        Self {
            source: PredictionSource::Forecaster(ForecasterConfig::default()),
            strategies: Strategy::ALL.to_vec(),
            fees: vec![0.0, 0.0003],
            v0: 10_000.0,
            seed: 0,
        }
    }
}

/// Book for one strategy. Hours where PW sees only zero predictions are
/// held flat instead of failing the whole run.
fn book(strategy: Strategy, split: &WindowSplit, predictions: &Array2<f64>) -> Result<WeightMatrix, StrategyError> {
    let (n, s) = predictions.dim();
    let mut values = Array2::zeros((n, s));
    for t in 0..s {
        let col = predictions.column(t).to_vec();
        let w = match strategy.weights(&col) {
            Ok(w) => w,
            Err(StrategyError::DegeneratePredictions) if strategy == Strategy::Pw => vec![0.0; n],
            Err(e) => return Err(e),
        };
        for (i, v) in w.into_iter().enumerate() {
            values[[i, t]] = v;
        }
    }
    WeightMatrix::new(split.test.assets().to_vec(), split.test.timestamps().to_vec(), values)
}

/// Fit the generator on the training window, train a forecaster on a
/// synthetic window of the same length and trade its predictions on the
/// real test window. Test hour `j` is predicted from features at the end of
/// hour `j - 1`, computed over the real train and test returns.
pub fn run_predictive_utility(
    split: &WindowSplit,
    model: &mut TsgModelHandle,
    config: &PredictiveConfig,
) -> Result<TaskResult, TaskError> {
    check_fees(&config.fees)?;
    if config.strategies.is_empty() {
        return Err(TaskError::InvalidConfig("no strategies configured".into()));
    }
    let (train, test) = (&split.train, &split.test);
    let (n, w, s) = (train.n_assets(), train.len(), test.len());
    let mut result = empty_result(TaskKind::PredictiveUtility, model.id(), split.tau, test);

    let predictions = match &config.source {
        PredictionSource::Oracle => test.values().clone(),
        PredictionSource::Forecaster(fc) => {
            fc.validate()?;
            let started = Instant::now();
            model.fit(train, split.tau)?;
            result.timings.fit_s = started.elapsed().as_secs_f64();

            let seed = derive_seed(config.seed, &format!("{}/{}/generate", model.id(), split.tau));
            let started = Instant::now();
            let synthetic = model.generate(n, w, seed)?;
            result.timings.infer_s = started.elapsed().as_secs_f64();

            let started = Instant::now();
            let catalog = feature_catalog();
            let syn_features = compute_features(&synthetic, &catalog)?;
            let forecaster = fit_forecaster(&build_training_set(&syn_features, &synthetic)?, fc)?;
            let real = train.concat(test)?;
            let real_features = compute_features(&real, &catalog)?;
            let mut p = Array2::zeros((n, s));
            for j in 0..s {
                for (i, v) in forecaster.predict(&real_features, w + j - 1)?.into_iter().enumerate() {
                    p[[i, j]] = v;
                }
            }
            result.timings.forecast_s = started.elapsed().as_secs_f64();
            p
        }
    };

    for &strategy in &config.strategies {
        let weights = match book(strategy, split, &predictions) {
            Ok(b) => b,
            Err(e) => {
                result.failures.push(StrategyFailure {
                    strategy: strategy.as_str().into(),
                    reason: e.to_string(),
                });
                continue;
            }
        };
        for &fee in &config.fees {
            match simulate(&weights, test, fee, config.v0) {
                Ok(curve) => result.runs.push(StrategyRun {
                    strategy: strategy.as_str().into(),
                    fee,
                    curve,
                }),
                Err(e) => result.failures.push(StrategyFailure {
                    strategy: format!("{strategy}@{fee}"),
                    reason: e.to_string(),
                }),
            }
        }
    }
    result.estimate = predictions.clone();
    result.signal = predictions;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forecasting::Algorithm;
    use crate::market_data::{split_slices, ReturnMatrix};
    use crate::metrics::trading_metrics;
    use crate::tsg::ModelSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn noise(n: usize, len: usize, seed: u64) -> ReturnMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = Array2::from_shape_fn((n, len), |_| 0.01 * rng.sample::<f64, _>(StandardNormal));
        ReturnMatrix::from_values(v).unwrap()
    }

    fn small_gbdt() -> ForecasterConfig {
        ForecasterConfig {
            trees: 10,
            ..Default::default()
        }
    }

    #[test]
    fn oracle_makes_money_everywhere() {
        let r = noise(12, 900, 1);
        let split = split_slices(&r, 800, 800, 100).unwrap();
        let mut h = TsgModelHandle::from_spec(&ModelSpec::Passthrough, 0).unwrap();
        let cfg = PredictiveConfig {
            source: PredictionSource::Oracle,
            ..Default::default()
        };
        let res = run_predictive_utility(&split, &mut h, &cfg).unwrap();
        assert!(res.failures.is_empty(), "{:?}", res.failures);
        assert_eq!(res.runs.len(), 8);
        for run in &res.runs {
            let m = trading_metrics(&run.curve).unwrap();
            assert!(m.cagr > 0.0, "{} {}", run.strategy, run.fee);
        }
    }

    #[test]
    fn forecaster_pipeline_runs_and_is_deterministic() {
        let r = noise(5, 700, 2);
        let split = split_slices(&r, 600, 600, 100).unwrap();
        let cfg = PredictiveConfig {
            source: PredictionSource::Forecaster(small_gbdt()),
            seed: 3,
            ..Default::default()
        };
        let spec = ModelSpec::Gaussian;
        let a = run_predictive_utility(&split, &mut TsgModelHandle::from_spec(&spec, 0).unwrap(), &cfg).unwrap();
        let b = run_predictive_utility(&split, &mut TsgModelHandle::from_spec(&spec, 0).unwrap(), &cfg).unwrap();
        assert_eq!(a.estimate, b.estimate);
        assert_eq!(a.runs, b.runs);
        // csm needs ten assets
        assert_eq!(a.failures.len(), 1);
        assert_eq!(a.failures[0].strategy, "csm");
        assert_eq!(a.runs.len(), 6);
        assert!(a.estimate.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn prediction_uses_previous_hour_features() {
        // ridge on a lag-1 world: r[t+1] = 0.5 r[t] + noise; the prediction
        // for test hour 0 must depend on the last training return only
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (n, len) = (3, 900);
        let mut v = Array2::zeros((n, len));
        for i in 0..n {
            for t in 1..len {
                v[[i, t]] = 0.5 * v[[i, t - 1]] + 0.01 * rng.sample::<f64, _>(StandardNormal);
            }
        }
        let r = ReturnMatrix::from_values(v).unwrap();
        let split = split_slices(&r, 800, 800, 100).unwrap();
        let cfg = PredictiveConfig {
            source: PredictionSource::Forecaster(ForecasterConfig {
                algorithm: Algorithm::Ridge,
                lambda: 1e-6,
                ..Default::default()
            }),
            strategies: vec![Strategy::Pw],
            ..Default::default()
        };
        let mut h = TsgModelHandle::from_spec(&ModelSpec::Passthrough, 0).unwrap();
        let res = run_predictive_utility(&split, &mut h, &cfg).unwrap();
        // altering the realised test hour 0 must not change its prediction
        let mut bumped = split.test.values().clone();
        bumped[[0, 0]] += 1.0;
        let split2 = WindowSplit {
            tau: split.tau,
            train: split.train.clone(),
            test: split.test.with_values(bumped).unwrap(),
        };
        let mut h2 = TsgModelHandle::from_spec(&ModelSpec::Passthrough, 0).unwrap();
        let res2 = run_predictive_utility(&split2, &mut h2, &cfg).unwrap();
        assert_eq!(res.estimate.column(0), res2.estimate.column(0));
        assert_ne!(res.estimate.column(1), res2.estimate.column(1));
    }

    #[test]
    fn flat_pw_hours_do_not_fail() {
        let r = noise(4, 300, 5);
        let split = split_slices(&r, 200, 200, 100).unwrap();
        let preds = Array2::zeros((4, 100));
        let b = book(Strategy::Pw, &split, &preds).unwrap();
        assert!(b.values().iter().all(|v| *v == 0.0));
        assert!(book(Strategy::HalfLs, &split, &preds).is_ok());
    }

    #[test]
    fn rejects_empty_fee_list() {
        let r = noise(4, 300, 6);
        let split = split_slices(&r, 200, 200, 100).unwrap();
        let cfg = PredictiveConfig {
            fees: vec![],
            ..Default::default()
        };
        let mut h = TsgModelHandle::from_spec(&ModelSpec::Passthrough, 0).unwrap();
        assert!(matches!(
            run_predictive_utility(&split, &mut h, &cfg),
            Err(TaskError::InvalidConfig(_))
        ));
    }
}
