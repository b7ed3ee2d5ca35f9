use super::gbdt::stable_mean;
use super::{FittedModel, ForecastError};
use nalgebra::{DMatrix, DVector};
use ndarray::Array2;

/// Ridge on centred data; the intercept is not penalised.
pub(super) fn fit(x: &Array2<f64>, y: &[f64], lambda: f64) -> Result<FittedModel, ForecastError> {
    let (rows, d) = x.dim();
    let y_mean = stable_mean(y);
    let x_mean: Vec<f64> = (0..d).map(|j| x.column(j).sum() / rows as f64).collect();
    let mut gram = DMatrix::<f64>::zeros(d, d);
    let mut rhs = DVector::<f64>::zeros(d);
    for r in 0..rows {
        let yc = y[r] - y_mean;
        for a in 0..d {
            let xa = x[[r, a]] - x_mean[a];
            rhs[a] += xa * yc;
            for b in a..d {
                gram[(a, b)] += xa * (x[[r, b]] - x_mean[b]);
            }
        }
    }
    for a in 0..d {
        for b in 0..a {
            gram[(a, b)] = gram[(b, a)];
        }
        gram[(a, a)] += lambda;
    }
    let coef: Vec<f64> = if rhs.iter().all(|v| *v == 0.0) {
        vec![0.0; d]
    } else {
        match gram.clone().cholesky() {
            Some(ch) => ch.solve(&rhs).iter().copied().collect(),
            None => gram
                .svd(true, true)
                .solve(&rhs, 1e-12)
                .map_err(|e| ForecastError::Singular(e.to_string()))?
                .iter()
                .copied()
                .collect(),
        }
    };
    let intercept = y_mean - coef.iter().zip(&x_mean).map(|(b, m)| b * m).sum::<f64>();
    Ok(FittedModel::Ridge { intercept, coef })
}
