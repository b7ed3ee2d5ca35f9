use super::TsgError;
use crate::market_data::ReturnMatrix;
use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::Array2;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::str::FromStr;

/// How many principal axes to keep: a fixed count, or the smallest count
/// whose eigenvalue share reaches a percentage (`ev90`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PcaSelection {
    Fixed(usize),
    ExplainedVariance(f64),
}

impl Default for PcaSelection {
    fn default() -> Self {
        PcaSelection::ExplainedVariance(90.0)
    }
}

impl FromStr for PcaSelection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some(q) = s.strip_prefix("ev") {
            let q: f64 = q.parse().map_err(|_| format!("bad explained-variance level {s:?}"))?;
            if !(q > 0.0 && q <= 100.0) {
                return Err(format!("explained-variance level must be in (0, 100], got {q}"));
            }
            return Ok(PcaSelection::ExplainedVariance(q));
        }
        s.parse::<usize>()
            .map(PcaSelection::Fixed)
            .map_err(|_| format!("expected a component count or ev<q>, got {s:?}"))
    }
}

impl fmt::Display for PcaSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PcaSelection::Fixed(p) => write!(f, "{p}"),
            PcaSelection::ExplainedVariance(q) => write!(f, "ev{q}"),
        }
    }
}

impl Serialize for PcaSelection {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PcaSelection {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Count(u64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Count(p) => Ok(PcaSelection::Fixed(p as usize)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Training mean plus the top-`p` eigenvectors of the training covariance.
/// Assets with (numerically) zero training variance sit outside the
/// projection and reconstruct to their mean.
#[derive(Debug, Clone)]
pub struct PcaReconstructor {
    mean: Vec<f64>,
    active: Vec<usize>,
    /// `active.len() x p`, orthonormal columns.
    axes: DMatrix<f64>,
    /// All eigenvalues of the active covariance, descending.
    eigenvalues: Vec<f64>,
}

impl PcaReconstructor {
    pub fn components(&self) -> usize {
        self.axes.ncols()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Indices of assets that take part in the projection.
    pub fn active_assets(&self) -> &[usize] {
        &self.active
    }

    pub fn reconstruct(&self, input: &Array2<f64>) -> Result<Array2<f64>, TsgError> {
        let (n, l) = input.dim();
        if n != self.mean.len() {
            return Err(TsgError::ShapeMismatch(format!(
                "input has {n} assets, PCA fitted on {}",
                self.mean.len()
            )));
        }
        let mut out = Array2::from_shape_fn((n, l), |(i, _)| self.mean[i]);
        if self.axes.ncols() == 0 || self.active.is_empty() {
            return Ok(out);
        }
        let m = self.active.len();
        let centered = DMatrix::from_fn(m, l, |a, t| {
            let i = self.active[a];
            input[[i, t]] - self.mean[i]
        });
        let scores = self.axes.transpose() * &centered;
        let projected = &self.axes * scores;
        for (a, &i) in self.active.iter().enumerate() {
            for t in 0..l {
                out[[i, t]] += projected[(a, t)];
            }
        }
        Ok(out)
    }
}

/// Fits the PCA reconstructor on a training window.
pub fn pca_fit_reconstruct(train: &ReturnMatrix, selection: PcaSelection) -> Result<PcaReconstructor, TsgError> {
    let x = train.values();
    let (n, l) = x.dim();
    if l == 0 || n == 0 {
        return Err(TsgError::FitFailed("empty training window".into()));
    }
    if let PcaSelection::Fixed(p) = selection {
        if p > n {
            return Err(TsgError::InvalidConfig(format!(
                "asked for {p} components from {n} assets"
            )));
        }
    }
    let mean: Vec<f64> = x.rows().into_iter().map(|r| r.sum() / l as f64).collect();
    let active: Vec<usize> = (0..n)
        .filter(|&i| {
            let var = x.row(i).iter().map(|v| (v - mean[i]).powi(2)).sum::<f64>() / l as f64;
            var.sqrt() > 1e-12 * mean[i].abs().max(1.0)
        })
        .collect();
    let m = active.len();
    if m == 0 {
        return Ok(PcaReconstructor {
            mean,
            active,
            axes: DMatrix::zeros(0, 0),
            eigenvalues: Vec::new(),
        });
    }
    let centered = DMatrix::from_fn(m, l, |a, t| x[[active[a], t]] - mean[active[a]]);
    let cov = (&centered * centered.transpose()) / l as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k].max(0.0)).collect();

    let p = match selection {
        PcaSelection::Fixed(p) => p.min(m),
        PcaSelection::ExplainedVariance(q) => {
            let total: f64 = eigenvalues.iter().sum();
            if total <= 0.0 {
                0
            } else {
                let target = q / 100.0;
                let mut acc = 0.0;
                let mut p = m;
                for (k, ev) in eigenvalues.iter().enumerate() {
                    acc += ev;
                    if acc / total >= target - 1e-12 {
                        p = k + 1;
                        break;
                    }
                }
                p
            }
        }
    };
    let mut axes = DMatrix::zeros(m, p);
    for (c, &k) in order.iter().take(p).enumerate() {
        let v = eig.eigenvectors.column(k);
        // sign convention: largest-magnitude loading positive
        let pivot = v
            .iter()
            .copied()
            .fold(0.0f64, |acc, e| if e.abs() > acc.abs() { e } else { acc });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for a in 0..m {
            axes[(a, c)] = sign * v[a];
        }
    }
    Ok(PcaReconstructor {
        mean,
        active,
        axes,
        eigenvalues,
    })
}
