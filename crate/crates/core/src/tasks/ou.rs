use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Shortest series accepted by [`fit_ou`].
pub const MIN_OU_LENGTH: usize = 48;
/// Dickey-Fuller 1% critical value (regression with intercept, large sample).
pub const DF_CRITICAL_1PCT: f64 = -3.43;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OuError {
    #[error("series has {got} points, need at least {MIN_OU_LENGTH}")]
    TooShort { got: usize },
    #[error("series contains non-finite values")]
    NonFinite,
    #[error("series has zero variance")]
    DegenerateSeries,
    #[error("AR(1) slope {b} is not mean-reverting (unit-root t statistic {t_stat})")]
    NonMeanReverting { b: f64, t_stat: f64 },
}

/// Ornstein-Uhlenbeck parameters on an hourly grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuParams {
    /// Mean-reversion speed per hour.
    pub theta: f64,
    pub mu: f64,
    /// Diffusion volatility per square-root hour.
    pub sigma: f64,
    /// `sigma / sqrt(2 theta)`.
    pub sigma_eq: f64,
    /// AR(1) intercept and slope.
    pub a: f64,
    pub b: f64,
    pub residual_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuFitOptions {
    /// Reject slopes whose Dickey-Fuller statistic does not clear
    /// [`DF_CRITICAL_1PCT`]. Least squares biases a random walk's slope
    /// below 1, so `b < 1` alone accepts most unit roots.
    pub unit_root_test: bool,
}

impl Default for OuFitOptions {
    fn default() -> Self {
        Self { unit_root_test: true }
    }
}

/// Fits `x[t+1] = a + b x[t] + e` by least squares and maps it to OU
/// parameters: `theta = -ln b`, `mu = a / (1 - b)`,
/// `sigma = std(e) sqrt(-2 ln b / (1 - b^2))`.
pub fn fit_ou(series: &[f64]) -> Result<OuParams, OuError> {
    fit_ou_with(series, OuFitOptions::default())
}

pub fn fit_ou_with(series: &[f64], options: OuFitOptions) -> Result<OuParams, OuError> {
    if series.len() < MIN_OU_LENGTH {
        return Err(OuError::TooShort { got: series.len() });
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(OuError::NonFinite);
    }
    if series.iter().all(|v| *v == series[0]) {
        return Err(OuError::DegenerateSeries);
    }
    let x = &series[..series.len() - 1];
    let y = &series[1..];
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    if sxx == 0.0 {
        return Err(OuError::DegenerateSeries);
    }
    let b = sxy / sxx;
    let a = my - b * mx;
    let resid: Vec<f64> = x.iter().zip(y).map(|(xt, yt)| yt - a - b * xt).collect();
    let rm = resid.iter().sum::<f64>() / m;
    let ss = resid.iter().map(|e| (e - rm) * (e - rm)).sum::<f64>();
    let t_stat = (b - 1.0) / (ss / (m - 2.0) / sxx).sqrt();
    if !(b > 0.0 && b < 1.0) || (options.unit_root_test && !(t_stat < DF_CRITICAL_1PCT)) {
        return Err(OuError::NonMeanReverting { b, t_stat });
    }
    let sd_e = (ss / m).sqrt();
    if sd_e == 0.0 {
        return Err(OuError::DegenerateSeries);
    }
    let theta = -b.ln();
    let sigma = sd_e * (-2.0 * b.ln() / (1.0 - b * b)).sqrt();
    Ok(OuParams {
        theta,
        mu: a / (1.0 - b),
        sigma,
        sigma_eq: sigma / (2.0 * theta).sqrt(),
        a,
        b,
        residual_count: resid.len(),
    })
}

/// `(eps - mu) / sigma_eq`.
pub fn s_score(eps: f64, params: &OuParams) -> f64 {
    (eps - params.mu) / params.sigma_eq
}

/// Gate-then-normalise contrarian book: `eta_i = -s_i` where `|s_i| > gamma`,
/// zero elsewhere (and for non-finite scores), scaled so `sum |eta| = 1`.
pub fn stat_arb_weights(scores: &[f64], gamma: f64) -> Vec<f64> {
    let raw: Vec<f64> = scores
        .iter()
        .map(|s| if s.is_finite() && s.abs() > gamma { -s } else { 0.0 })
        .collect();
    let gross: f64 = raw.iter().map(|v| v.abs()).sum();
    if gross == 0.0 {
        return raw;
    }
    raw.iter().map(|v| v / gross).collect()
}

/// Exact discretisation of an OU path started at `mu`.
pub fn simulate_ou(theta: f64, mu: f64, sigma: f64, len: usize, rng: &mut impl rand::Rng) -> Vec<f64> {
    use rand_distr::StandardNormal;
    let b = (-theta).exp();
    let sd = sigma * ((1.0 - b * b) / (2.0 * theta)).sqrt();
    let mut x = mu;
    (0..len)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            x = mu + (x - mu) * b + sd * z;
            x
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn params(mu: f64, sigma_eq: f64) -> OuParams {
        OuParams {
            theta: 0.1,
            mu,
            sigma: sigma_eq * (0.2f64).sqrt(),
            sigma_eq,
            a: 0.0,
            b: (-0.1f64).exp(),
            residual_count: 100,
        }
    }

    #[test]
    fn score_examples() {
        let p = params(0.001, 0.02);
        assert_eq!(s_score(0.001, &p), 0.0);
        assert_abs_diff_eq!(s_score(0.001 + 0.02, &p), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s_score(0.001 - 0.04, &p), -2.0, epsilon = 1e-12);
    }

    #[test]
    fn weight_examples() {
        let w = stat_arb_weights(&[3.0, -4.0, 1.0], 2.0);
        assert_abs_diff_eq!(w[0], -3.0 / 7.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w[1], 4.0 / 7.0, epsilon = 1e-15);
        assert_eq!(w[2], 0.0);
        assert_eq!(stat_arb_weights(&[1.0, -2.0, 0.5], 2.0), vec![0.0, 0.0, 0.0]);
        assert_eq!(stat_arb_weights(&[2.5], 2.0), vec![-1.0]);
        assert_eq!(stat_arb_weights(&[f64::NAN, 3.0], 2.0), vec![0.0, -1.0]);
    }

    #[test]
    fn recovers_planted_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = simulate_ou(0.1, 0.001, 0.02, 12_000, &mut rng);
        let p = fit_ou(&x).unwrap();
        assert!((p.theta - 0.1).abs() <= 0.015, "theta {}", p.theta);
        // the sample mean of this path has sd ~0.0018, so mu gets 3 sd
        assert!((p.mu - 0.001).abs() <= 0.0055, "mu {}", p.mu);
        assert!((p.sigma - 0.02).abs() <= 0.001, "sigma {}", p.sigma);
        let eq_direct = {
            let e: Vec<f64> = x.windows(2).map(|w| w[1] - p.a - p.b * w[0]).collect();
            let m = e.iter().sum::<f64>() / e.len() as f64;
            let sd = (e.iter().map(|v| (v - m).powi(2)).sum::<f64>() / e.len() as f64).sqrt();
            sd / (1.0 - p.b * p.b).sqrt()
        };
        assert_abs_diff_eq!(p.sigma_eq, eq_direct, epsilon = 1e-12);
    }

    /// Profile likelihood of the exact Gaussian transition over a theta
    /// grid, coarse then fine.
    fn grid_theta(x: &[f64]) -> f64 {
        let ll = |theta: f64| {
            let b = (-theta).exp();
            let e: Vec<f64> = x.windows(2).map(|w| w[1] - b * w[0]).collect();
            let a = e.iter().sum::<f64>() / e.len() as f64;
            let var = e.iter().map(|v| (v - a).powi(2)).sum::<f64>() / e.len() as f64;
            -0.5 * e.len() as f64 * var.ln()
        };
        let argmax = |grid: Vec<f64>| {
            grid.into_iter()
                .map(|t| (ll(t), t))
                .fold((f64::NEG_INFINITY, 0.0), |a, b| if b.0 > a.0 { b } else { a })
                .1
        };
        let coarse = argmax((1..=400).map(|k| k as f64 * 0.001).collect());
        argmax(
            (-50..=50)
                .map(|k| coarse + k as f64 * 0.00002)
                .filter(|t| *t > 0.0)
                .collect(),
        )
    }

    #[test]
    fn agrees_with_likelihood_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut rel: Vec<f64> = (0..10)
            .map(|_| {
                let x = simulate_ou(0.1, 0.001, 0.02, 12_000, &mut rng);
                let g = grid_theta(&x);
                (fit_ou(&x).unwrap().theta - g).abs() / g
            })
            .collect();
        rel.sort_by(f64::total_cmp);
        assert!(rel[5] <= 0.05, "median relative gap {}", rel[5]);
    }

    #[test]
    fn theta_error_shrinks_with_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut median_err = |len: usize| {
            let mut e: Vec<f64> = (0..50)
                .map(|_| (fit_ou(&simulate_ou(0.1, 0.0, 0.02, len, &mut rng)).unwrap().theta - 0.1).abs())
                .collect();
            e.sort_by(f64::total_cmp);
            e[25]
        };
        let short = median_err(1_000);
        let long = median_err(10_000);
        assert!(long < short, "{long} vs {short}");
    }

    #[test]
    fn constant_series_is_degenerate() {
        assert_eq!(fit_ou(&[0.3; 100]), Err(OuError::DegenerateSeries));
        assert_eq!(fit_ou(&[0.3; 10]), Err(OuError::TooShort { got: 10 }));
    }

    #[test]
    fn random_walks_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut rejected = 0;
        let mut slope_only = 0;
        for _ in 0..200 {
            let mut x = 0.0;
            let path: Vec<f64> = (0..2000)
                .map(|_| {
                    x += rng.sample::<f64, _>(StandardNormal);
                    x
                })
                .collect();
            if matches!(fit_ou(&path), Err(OuError::NonMeanReverting { .. })) {
                rejected += 1;
            }
            let loose = OuFitOptions { unit_root_test: false };
            if matches!(fit_ou_with(&path, loose), Err(OuError::NonMeanReverting { .. })) {
                slope_only += 1;
            }
        }
        assert!(rejected >= 190, "rejected {rejected} of 200");
        // the slope bound alone lets most walks through
        assert!(slope_only < 100, "slope-only rejected {slope_only}");
    }

    #[test]
    fn alternating_series_rejected() {
        let x: Vec<f64> = (0..100).map(|t| if t % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert!(matches!(fit_ou(&x), Err(OuError::NonMeanReverting { b, .. }) if b < 0.0));
    }

    proptest! {
        #[test]
        fn score_affine_equivariance(eps in -1.0f64..1.0, mu in -0.1f64..0.1, c in -1.0f64..1.0, k in 0.1f64..10.0) {
            let p = params(mu, 0.02);
            let s = s_score(eps, &p);
            let shifted = OuParams { mu: mu + c, ..p };
            prop_assert!((s_score(eps + c, &shifted) - s).abs() <= 1e-9 * (1.0 + s.abs()));
            let scaled = OuParams { mu: mu * k, sigma: p.sigma * k, sigma_eq: p.sigma_eq * k, ..p };
            prop_assert!((s_score(eps * k, &scaled) - s).abs() <= 1e-9 * (1.0 + s.abs()));
        }

        #[test]
        fn weights_gross_and_signs(scores in proptest::collection::vec(-6.0f64..6.0, 1..30), gamma in 0.5f64..3.0) {
            let w = stat_arb_weights(&scores, gamma);
            let gross: f64 = w.iter().map(|v| v.abs()).sum();
            prop_assert!(gross == 0.0 || (gross - 1.0).abs() <= 1e-12);
            for (s, v) in scores.iter().zip(&w) {
                if *s > gamma { prop_assert!(*v <= 0.0); }
                if *s < -gamma { prop_assert!(*v >= 0.0); }
                if s.abs() <= gamma { prop_assert_eq!(*v, 0.0); }
            }
        }
    }
}
