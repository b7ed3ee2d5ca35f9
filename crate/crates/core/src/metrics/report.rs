use super::MetricsError;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io;

/// Serde adapter for metric values: `NaN` <-> `null`, `±inf` <-> `"inf"`/`"-inf"`.
pub(crate) mod sentinel {
    use serde::de::{self, Deserializer, Visitor};
    use serde::Serializer;
    use std::fmt;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_nan() {
            s.serialize_none()
        } else if *v == f64::INFINITY {
            s.serialize_str("inf")
        } else if *v == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    struct MetricVisitor;

    impl<'de> Visitor<'de> for MetricVisitor {
        type Value = f64;

        fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            f.write_str("a number, null, \"inf\" or \"-inf\"")
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
            Ok(v)
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_unit<E: de::Error>(self) -> Result<f64, E> {
            Ok(f64::NAN)
        }

        fn visit_none<E: de::Error>(self) -> Result<f64, E> {
            Ok(f64::NAN)
        }

        fn visit_some<D: Deserializer<'de>>(self, d: D) -> Result<f64, D::Error> {
            d.deserialize_any(self)
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
            match v {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "NA" => Ok(f64::NAN),
                other => Err(E::custom(format!("unexpected metric value {other:?}"))),
            }
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        d.deserialize_any(MetricVisitor)
    }

    /// CSV cell text.
    pub fn cell(v: f64) -> String {
        if v.is_nan() {
            "NA".into()
        } else if v == f64::INFINITY {
            "inf".into()
        } else if v == f64::NEG_INFINITY {
            "-inf".into()
        } else {
            format!("{v:?}")
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Mse,
    Mae,
    Ic,
    Ir,
    Cagr,
    Sharpe,
    Mdd,
    Var95,
    Es95,
    TrainTimeS,
    InferTimeS,
}

impl Metric {
    /// Metrics carried by [`MetricsReport`], in column order.
    pub const REPORTED: [Metric; 9] = [
        Metric::Mse,
        Metric::Mae,
        Metric::Ic,
        Metric::Ir,
        Metric::Cagr,
        Metric::Sharpe,
        Metric::Mdd,
        Metric::Var95,
        Metric::Es95,
    ];
    pub const TIMING: [Metric; 2] = [Metric::TrainTimeS, Metric::InferTimeS];

    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::Mse => "mse",
            Metric::Mae => "mae",
            Metric::Ic => "ic",
            Metric::Ir => "ir",
            Metric::Cagr => "cagr",
            Metric::Sharpe => "sharpe",
            Metric::Mdd => "mdd",
            Metric::Var95 => "var95",
            Metric::Es95 => "es95",
            Metric::TrainTimeS => "train_time_s",
            Metric::InferTimeS => "infer_time_s",
        }
    }

    pub fn higher_is_better(&self) -> bool {
        matches!(self, Metric::Ic | Metric::Ir | Metric::Cagr | Metric::Sharpe)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Identifies one report: which model, on which task, traded how, in which
/// year (`"all"` for the whole run).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportKey {
    pub model: String,
    pub task: String,
    pub strategy: String,
    pub fee: f64,
    pub year: String,
}

impl ReportKey {
    /// File stem used for per-report artifacts.
    pub fn stem(&self) -> String {
        format!(
            "{}__{}__{}__fee{}__{}",
            self.model, self.task, self.strategy, self.fee, self.year
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(flatten)]
    pub key: ReportKey,
    pub splits: usize,
    pub hours: usize,
    #[serde(with = "sentinel")]
    pub mse: f64,
    #[serde(with = "sentinel")]
    pub mae: f64,
    #[serde(with = "sentinel")]
    pub ic: f64,
    #[serde(with = "sentinel")]
    pub ir: f64,
    #[serde(with = "sentinel")]
    pub cagr: f64,
    #[serde(with = "sentinel")]
    pub sharpe: f64,
    #[serde(with = "sentinel")]
    pub mdd: f64,
    #[serde(with = "sentinel")]
    pub var95: f64,
    #[serde(with = "sentinel")]
    pub es95: f64,
    pub degenerate_hours: usize,
    pub excluded_assets: usize,
}

impl MetricsReport {
    pub fn value(&self, metric: Metric) -> Option<f64> {
        Some(match metric {
            Metric::Mse => self.mse,
            Metric::Mae => self.mae,
            Metric::Ic => self.ic,
            Metric::Ir => self.ir,
            Metric::Cagr => self.cagr,
            Metric::Sharpe => self.sharpe,
            Metric::Mdd => self.mdd,
            Metric::Var95 => self.var95,
            Metric::Es95 => self.es95,
            Metric::TrainTimeS | Metric::InferTimeS => return None,
        })
    }

    pub fn to_json(&self) -> Result<String, MetricsError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, MetricsError> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Wall-clock costs of one model on one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub model: String,
    pub task: String,
    pub year: String,
    pub splits: usize,
    #[serde(with = "sentinel")]
    pub train_time_s: f64,
    #[serde(with = "sentinel")]
    pub infer_time_s: f64,
}

impl TimingReport {
    pub fn value(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::TrainTimeS => Some(self.train_time_s),
            Metric::InferTimeS => Some(self.infer_time_s),
            _ => None,
        }
    }
}

/// One row per report; undefined values are written as `NA`.
pub fn write_reports_csv<W: io::Write>(reports: &[MetricsReport], writer: W) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["model", "task", "strategy", "fee", "year", "splits", "hours"];
    header.extend(Metric::REPORTED.iter().map(|m| m.as_str()));
    header.extend(["degenerate_hours", "excluded_assets"]);
    w.write_record(&header)?;
    for r in reports {
        let mut row = vec![
            r.key.model.clone(),
            r.key.task.clone(),
            r.key.strategy.clone(),
            format!("{:?}", r.key.fee),
            r.key.year.clone(),
            r.splits.to_string(),
            r.hours.to_string(),
        ];
        for m in Metric::REPORTED {
            row.push(sentinel::cell(r.value(m).expect("reported metric")));
        }
        row.push(r.degenerate_hours.to_string());
        row.push(r.excluded_assets.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn report(model: &str, sharpe: f64) -> MetricsReport {
        MetricsReport {
            key: ReportKey {
                model: model.into(),
                task: "stat_arb".into(),
                strategy: "ou".into(),
                fee: 0.0003,
                year: "2022".into(),
            },
            splits: 3,
            hours: 1080,
            mse: 1e-5,
            mae: 2e-3,
            ic: 0.05,
            ir: f64::INFINITY,
            cagr: 0.1,
            sharpe,
            mdd: 0.2,
            var95: f64::NAN,
            es95: f64::NAN,
            degenerate_hours: 0,
            excluded_assets: 1,
        }
    }

    #[test]
    fn json_sentinels_round_trip() {
        let r = report("pca", f64::NEG_INFINITY);
        let text = r.to_json().unwrap();
        assert!(text.contains(r#""ir": "inf""#));
        assert!(text.contains(r#""sharpe": "-inf""#));
        assert!(text.contains(r#""var95": null"#));
        let back = MetricsReport::from_json(&text).unwrap();
        assert_eq!(back.key, r.key);
        assert_eq!(back.ir, f64::INFINITY);
        assert!(back.var95.is_nan());
        assert_eq!(back.mae, 2e-3);
    }

    #[test]
    fn csv_uses_na() {
        let mut buf = Vec::new();
        write_reports_csv(&[report("pca", 1.5)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "model,task,strategy,fee,year,splits,hours,mse,mae,ic,ir,cagr,sharpe,mdd,var95,es95,degenerate_hours,excluded_assets"
        );
        assert_eq!(
            lines.next().unwrap(),
            "pca,stat_arb,ou,0.0003,2022,3,1080,1e-5,0.002,0.05,inf,0.1,1.5,0.2,NA,NA,0,1"
        );
    }

    #[test]
    fn orientation() {
        assert!(Metric::Sharpe.higher_is_better());
        assert!(!Metric::Mdd.higher_is_better());
        assert!(!Metric::InferTimeS.higher_is_better());
    }
}
