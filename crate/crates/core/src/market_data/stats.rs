use super::{MarketDataError, ReturnMatrix};
use chrono::Timelike;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssetStats {
    pub asset: String,
    /// Mean hourly log-return, percent.
    pub mean_pct: f64,
    /// Population standard deviation of hourly log-returns, percent.
    pub volatility_pct: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HourBucket {
    /// UTC hour of day, 0-23.
    pub hour: u32,
    pub samples: usize,
    pub mean_pct: f64,
    pub volatility_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsSummary {
    pub assets: Vec<AssetStats>,
    pub hours: Vec<HourBucket>,
}

impl StatsSummary {
    pub fn asset(&self, id: &str) -> Option<&AssetStats> {
        self.assets.iter().find(|a| a.asset == id)
    }
}

fn moments(xs: impl Iterator<Item = f64> + Clone) -> (usize, f64, f64, f64, f64) {
    let n = xs.clone().count();
    if n == 0 {
        return (0, f64::NAN, f64::NAN, f64::NAN, f64::NAN);
    }
    let mean = xs.clone().sum::<f64>() / n as f64;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for x in xs {
        let d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    let nf = n as f64;
    let (m2, m3, m4) = (m2 / nf, m3 / nf, m4 / nf);
    let (skew, kurt) = if m2 > 0.0 {
        (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
    } else {
        (0.0, 0.0)
    };
    (n, mean, m2.sqrt(), skew, kurt)
}

/// Per-asset and per-UTC-hour-of-day return statistics.
pub fn descriptive_stats(returns: &ReturnMatrix) -> Result<StatsSummary, MarketDataError> {
    if returns.len() < 2 {
        return Err(MarketDataError::TooFewObservations {
            needed: 2,
            got: returns.len(),
        });
    }
    let assets = returns
        .assets()
        .iter()
        .enumerate()
        .map(|(i, id)| {
            let (_, mean, sd, skewness, excess_kurtosis) = moments(returns.row(i).into_iter().copied());
            AssetStats {
                asset: id.clone(),
                mean_pct: 100.0 * mean,
                volatility_pct: 100.0 * sd,
                skewness,
                excess_kurtosis,
            }
        })
        .collect();

    let mut by_hour: Vec<Vec<f64>> = vec![Vec::new(); 24];
    for (t, ts) in returns.timestamps().iter().enumerate() {
        by_hour[ts.hour() as usize].extend(returns.column(t).iter().copied());
    }
    let hours = by_hour
        .iter()
        .enumerate()
        .map(|(h, xs)| {
            let (samples, mean, sd, _, _) = moments(xs.iter().copied());
            HourBucket {
                hour: h as u32,
                samples,
                mean_pct: 100.0 * mean,
                volatility_pct: 100.0 * sd,
            }
        })
        .collect();
    Ok(StatsSummary { assets, hours })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_returns() {
        let r = ReturnMatrix::from_values(Array2::from_elem((2, 30), 0.001)).unwrap();
        let s = descriptive_stats(&r).unwrap();
        for a in &s.assets {
            assert!((a.mean_pct - 0.1).abs() < 1e-12);
            assert!(a.volatility_pct.abs() < 1e-12);
        }
    }

    #[test]
    fn two_days_fill_each_bucket_twice() {
        let r = ReturnMatrix::from_values(Array2::zeros((3, 48))).unwrap();
        let s = descriptive_stats(&r).unwrap();
        assert_eq!(s.hours.len(), 24);
        assert!(s.hours.iter().all(|b| b.samples == 2 * 3));
        assert_eq!(s.hours.iter().map(|b| b.samples).sum::<usize>(), 3 * 48);
    }

    #[test]
    fn bucket_means_match_group_by() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let vals = Array2::from_shape_fn((3, 240), |_| rng.random_range(-0.05..0.05));
        let r = ReturnMatrix::from_values(vals.clone()).unwrap();
        let s = descriptive_stats(&r).unwrap();
        // brute force: timestamps start at midnight, so hour = t mod 24
        for h in 0..24 {
            let mut sum = 0.0;
            let mut cnt = 0;
            for t in 0..240 {
                if t % 24 == h {
                    for i in 0..3 {
                        sum += vals[[i, t]];
                        cnt += 1;
                    }
                }
            }
            let expect = 100.0 * sum / cnt as f64;
            assert!((s.hours[h].mean_pct - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn asset_order_does_not_matter() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let vals = Array2::from_shape_fn((3, 50), |_| rng.random_range(-0.01..0.01));
        let a = ReturnMatrix::from_values(vals.clone()).unwrap();
        let mut rev = vals.clone();
        rev.invert_axis(ndarray::Axis(0));
        let names: Vec<String> = a.assets().iter().rev().cloned().collect();
        let b = ReturnMatrix::new(names, a.timestamps().to_vec(), rev).unwrap();
        let (sa, sb) = (descriptive_stats(&a).unwrap(), descriptive_stats(&b).unwrap());
        for x in &sa.assets {
            assert_eq!(Some(x), sb.asset(&x.asset));
        }
    }
}
