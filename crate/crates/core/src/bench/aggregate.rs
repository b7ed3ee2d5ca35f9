use super::BenchError;
use crate::metrics::{
    rank_metrics, risk_metrics, summarize_ic, timing_metrics, trading_metrics, ErrorAccumulator, InferencePhase,
    MetricsReport, ReportKey, TimingReport,
};
use crate::strategies::EquityCurve;
use crate::tasks::{TaskKind, TaskResult};
use crate::tsg::PhaseTimings;
use chrono::Datelike;
use std::collections::BTreeMap;

/// A successful cell: the task result and the generator's phase timings.
#[derive(Debug, Clone)]
pub struct CellOutput {
    pub result: TaskResult,
    pub phases: PhaseTimings,
}

/// Calendar year in which the test window starts.
pub fn year_of(result: &TaskResult) -> String {
    result
        .timestamps
        .first()
        .map(|t| t.year().to_string())
        .unwrap_or_else(|| "unknown".into())
}

#[derive(Debug, Clone, Default)]
pub struct YearlyAggregate {
    pub reports: Vec<MetricsReport>,
    /// Chained equity per report key, same order as `reports`.
    pub curves: Vec<(ReportKey, EquityCurve)>,
    pub timings: Vec<TimingReport>,
    /// Strategy/fee pairs left out because some split of the year lacks them.
    pub gaps: Vec<String>,
}

/// Groups cells by `(model, task, year)` and aggregates each group.
pub fn aggregate_yearly(cells: &[CellOutput]) -> Result<YearlyAggregate, BenchError> {
    let mut groups: BTreeMap<(String, TaskKind, String), Vec<&CellOutput>> = BTreeMap::new();
    for c in cells {
        groups
            .entry((c.result.model.clone(), c.result.task, year_of(&c.result)))
            .or_default()
            .push(c);
    }
    let mut out = YearlyAggregate::default();
    for ((model, task, year), members) in groups {
        let g = aggregate_group(&model, task, &year, &members)?;
        out.reports.extend(g.reports);
        out.curves.extend(g.curves);
        out.timings.extend(g.timings);
        out.gaps.extend(g.gaps);
    }
    Ok(out)
}

/// Pools one model's splits for one task and year. Error and rank metrics
/// are pooled over every `(tau, t, i)`; trading and risk metrics come from
/// the equity chained across the year's test windows in `tau` order.
pub fn aggregate_group(
    model: &str,
    task: TaskKind,
    year: &str,
    cells: &[&CellOutput],
) -> Result<YearlyAggregate, BenchError> {
    if cells.is_empty() {
        return Err(BenchError::EmptyYear {
            model: model.into(),
            task: task.as_str().into(),
            year: year.into(),
        });
    }
    let mut cells = cells.to_vec();
    cells.sort_by_key(|c| c.result.tau);

    let mut errors = ErrorAccumulator::default();
    let mut ics = Vec::new();
    let mut degenerate = 0;
    let mut excluded = 0;
    let mut phases = PhaseTimings::default();
    for c in &cells {
        let r = &c.result;
        errors.add(r.realized.view(), r.estimate.view())?;
        let (actual, signal) = r.hourly_pairs();
        let summary = rank_metrics(&actual, &signal)?;
        ics.extend(summary.per_hour);
        degenerate += summary.degenerate_hours;
        excluded += r.excluded.len();
        phases.merge(&c.phases);
    }
    let (mse, mae) = errors.finish();
    let ic = summarize_ic(ics, degenerate);

    let mut pairs: Vec<(String, f64)> = Vec::new();
    for c in &cells {
        for run in &c.result.runs {
            if !pairs.iter().any(|(s, f)| *s == run.strategy && *f == run.fee) {
                pairs.push((run.strategy.clone(), run.fee));
            }
        }
    }

    let mut out = YearlyAggregate::default();
    for (strategy, fee) in pairs {
        let curves: Vec<&EquityCurve> = cells
            .iter()
            .filter_map(|c| c.result.run(&strategy, fee).map(|r| &r.curve))
            .collect();
        if curves.len() != cells.len() {
            out.gaps.push(format!(
                "{model}/{task}/{year}: {strategy} at fee {fee} ran in {} of {} splits",
                curves.len(),
                cells.len()
            ));
            continue;
        }
        let chained = EquityCurve::chain(&curves).expect("at least one curve");
        let (cagr, sharpe) = match trading_metrics(&chained) {
            Ok(m) => (m.cagr, m.sharpe),
            Err(_) => (f64::NAN, f64::NAN),
        };
        let risk = risk_metrics(&chained);
        let key = ReportKey {
            model: model.into(),
            task: task.as_str().into(),
            strategy,
            fee,
            year: year.into(),
        };
        out.reports.push(MetricsReport {
            key: key.clone(),
            splits: cells.len(),
            hours: chained.len(),
            mse,
            mae,
            ic: ic.ic,
            ir: ic.ir,
            cagr,
            sharpe,
            mdd: risk.mdd,
            var95: risk.var95,
            es95: risk.es95,
            degenerate_hours: ic.degenerate_hours,
            excluded_assets: excluded,
        });
        out.curves.push((key, chained));
    }

    let phase = match task {
        TaskKind::PredictiveUtility => InferencePhase::Generate,
        TaskKind::StatArb => InferencePhase::Reconstruct,
    };
    let (train_time_s, infer_time_s) = timing_metrics(&phases, phase).unwrap_or((f64::NAN, f64::NAN));
    out.timings.push(TimingReport {
        model: model.into(),
        task: task.as_str().into(),
        year: year.into(),
        splits: cells.len(),
        train_time_s,
        infer_time_s,
    });
    Ok(out)
}
