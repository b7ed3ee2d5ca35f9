use super::report::sentinel;
use super::{Metric, MetricsError, MetricsReport, TimingReport};
use crate::stats::{average_ranks, mean};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::io;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Higher,
    Lower,
}

impl Orientation {
    pub fn of(metric: Metric) -> Self {
        if metric.higher_is_better() {
            Orientation::Higher
        } else {
            Orientation::Lower
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Orientation::Higher => "higher",
            Orientation::Lower => "lower",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub metric: Metric,
    pub model: String,
    /// Mean over the model's finite report values, `NaN` if none.
    pub value: f64,
    /// 1 = best; `None` when the value is undefined.
    pub rank: Option<f64>,
}

/// Per-metric model ranks (average ranks on ties). Models whose value is
/// undefined for a metric are left out of that metric's ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct RankTable {
    pub metrics: Vec<Metric>,
    pub models: Vec<String>,
    pub entries: Vec<RankEntry>,
}

impl RankTable {
    pub fn rank(&self, metric: Metric, model: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.metric == metric && e.model == model)
            .and_then(|e| e.rank)
    }

    pub fn orientation(&self, metric: Metric) -> Orientation {
        Orientation::of(metric)
    }

    /// Models left unranked on `metric`.
    pub fn undefined_count(&self, metric: Metric) -> usize {
        self.entries
            .iter()
            .filter(|e| e.metric == metric && e.rank.is_none())
            .count()
    }

    /// Mean of a model's defined ranks across metrics.
    pub fn mean_rank(&self, model: &str) -> f64 {
        let ranks: Vec<f64> = self
            .entries
            .iter()
            .filter(|e| e.model == model)
            .filter_map(|e| e.rank)
            .collect();
        if ranks.is_empty() {
            f64::NAN
        } else {
            mean(&ranks)
        }
    }

    /// Long format, one row per (metric, model), followed by `overall` rows
    /// holding each model's mean rank.
    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<(), MetricsError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["metric", "orientation", "model", "value", "rank", "undefined_models"])?;
        for e in &self.entries {
            w.write_record([
                e.metric.as_str().to_string(),
                Orientation::of(e.metric).as_str().to_string(),
                e.model.clone(),
                sentinel::cell(e.value),
                e.rank.map(|r| format!("{r:?}")).unwrap_or_else(|| "NA".into()),
                self.undefined_count(e.metric).to_string(),
            ])?;
        }
        let overall: Vec<f64> = self.models.iter().map(|m| self.mean_rank(m)).collect();
        let ranked = rank_defined(&overall, Orientation::Lower);
        for (k, model) in self.models.iter().enumerate() {
            w.write_record([
                "overall".to_string(),
                "lower".to_string(),
                model.clone(),
                sentinel::cell(overall[k]),
                ranked[k].map(|r| format!("{r:?}")).unwrap_or_else(|| "NA".into()),
                ranked.iter().filter(|r| r.is_none()).count().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Average ranks of the finite values (1 = best), `None` for the rest.
fn rank_defined(values: &[f64], orientation: Orientation) -> Vec<Option<f64>> {
    let defined: Vec<usize> = (0..values.len()).filter(|&k| values[k].is_finite()).collect();
    let keyed: Vec<f64> = defined
        .iter()
        .map(|&k| match orientation {
            Orientation::Higher => -values[k],
            Orientation::Lower => values[k],
        })
        .collect();
    let ranks = average_ranks(&keyed);
    let mut out = vec![None; values.len()];
    for (&k, r) in defined.iter().zip(ranks) {
        out[k] = Some(r);
    }
    out
}

struct Row {
    model: String,
    group: String,
    values: Vec<(Metric, f64)>,
}

fn build(mut rows: Vec<Row>, metrics: &[Metric]) -> Result<RankTable, MetricsError> {
    // fixed summation order, so the table does not depend on input order
    rows.sort_by(|a, b| (&a.model, &a.group).cmp(&(&b.model, &b.group)));
    let mut groups: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for r in &rows {
        if !groups.entry(&r.model).or_default().insert(&r.group) {
            return Err(MetricsError::InconsistentGrouping(format!(
                "model {} has two reports for {}",
                r.model, r.group
            )));
        }
    }
    if groups.len() < 2 {
        return Err(MetricsError::InconsistentGrouping(format!(
            "ranking needs at least two models, got {}",
            groups.len()
        )));
    }
    let mut sets = groups.iter();
    let (first_model, first) = sets.next().expect("two models");
    for (model, set) in sets {
        if set != first {
            return Err(MetricsError::InconsistentGrouping(format!(
                "models {first_model} and {model} cover different report sets"
            )));
        }
    }
    let models: Vec<String> = groups.keys().map(|m| m.to_string()).collect();
    let mut entries = Vec::new();
    for &metric in metrics {
        let values: Vec<f64> = models
            .iter()
            .map(|model| {
                let xs: Vec<f64> = rows
                    .iter()
                    .filter(|r| &r.model == model)
                    .flat_map(|r| r.values.iter().filter(|(m, _)| *m == metric).map(|(_, v)| *v))
                    .filter(|v| v.is_finite())
                    .collect();
                if xs.is_empty() {
                    f64::NAN
                } else {
                    mean(&xs)
                }
            })
            .collect();
        let ranks = rank_defined(&values, Orientation::of(metric));
        for (k, model) in models.iter().enumerate() {
            entries.push(RankEntry {
                metric,
                model: model.clone(),
                value: values[k],
                rank: ranks[k],
            });
        }
    }
    Ok(RankTable {
        metrics: metrics.to_vec(),
        models,
        entries,
    })
}

/// Ranks models on every reported metric, averaging each model's values over
/// its strategies, fees and years first. All models must cover the same
/// report keys.
pub fn rank_models(reports: &[MetricsReport]) -> Result<RankTable, MetricsError> {
    let rows = reports
        .iter()
        .map(|r| Row {
            model: r.key.model.clone(),
            group: format!("{}/{}/{:?}/{}", r.key.task, r.key.strategy, r.key.fee, r.key.year),
            values: Metric::REPORTED
                .iter()
                .map(|m| (*m, r.value(*m).expect("reported metric")))
                .collect(),
        })
        .collect();
    build(rows, &Metric::REPORTED)
}

pub fn rank_timings(reports: &[TimingReport]) -> Result<RankTable, MetricsError> {
    let rows = reports
        .iter()
        .map(|r| Row {
            model: r.model.clone(),
            group: format!("{}/{}", r.task, r.year),
            values: Metric::TIMING
                .iter()
                .map(|m| (*m, r.value(*m).expect("timing metric")))
                .collect(),
        })
        .collect();
    build(rows, &Metric::TIMING)
}
