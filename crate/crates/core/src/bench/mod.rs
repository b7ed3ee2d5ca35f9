//! Config parsing, walk-forward orchestration and report emission.

mod aggregate;
mod config;

pub use aggregate::{aggregate_group, aggregate_yearly, year_of, CellOutput, YearlyAggregate};
pub use config::{
    parse_config, parse_config_str, BenchConfig, ConfigError, ModelEntry, TaskSpec, DEFAULT_FEES, DEFAULT_PREDICTIVE_S,
    DEFAULT_STAT_ARB_S, DEFAULT_V0, DEFAULT_W,
};

use crate::market_data::{load_ohlc, make_splits, split_slices, DroppedAsset, MarketDataError, ReturnMatrix};
use crate::metrics::{
    rank_models, rank_timings, write_reports_csv, MetricsError, MetricsReport, RankTable, TimingReport,
};
use crate::stats::derive_seed;
use crate::strategies::{equity_svg, EquityCurve, StrategyError};
use crate::tasks::{run_predictive_utility, run_stat_arb, ExcludedAsset, PredictionSource, StrategyFailure, TaskKind};
use crate::tsg::TsgModelHandle;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Data(#[from] MarketDataError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("no splits for {model}/{task} in {year}")]
    EmptyYear { model: String, task: String, year: String },
    #[error("no task has a complete split: {0}")]
    NoSplits(String),
    #[error("{0} exists, is not empty and holds no manifest.json")]
    ForeignOutputDir(PathBuf),
    #[error("cannot build worker pool: {0}")]
    Pool(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BenchError + '_ {
    move |source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    Failed,
    /// The model lacks the mode the task needs.
    Skipped,
}

/// Outcome of one `(task, split, model)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub task: TaskKind,
    pub model: String,
    pub tau: usize,
    pub status: CellStatus,
    pub reason: Option<String>,
    pub strategy_failures: Vec<StrategyFailure>,
    pub excluded_assets: Vec<ExcludedAsset>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRecord {
    pub task: TaskKind,
    pub w: usize,
    pub s: usize,
    pub offsets: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSummary {
    pub assets: Vec<String>,
    pub hours: usize,
    pub first: Option<String>,
    pub last: Option<String>,
    pub dropped: Vec<DroppedAsset>,
}

/// Everything needed to audit or reproduce a run. Holds no wall-clock data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: u32,
    pub engine_version: String,
    pub config_hash: String,
    pub config: BenchConfig,
    pub data: DataSummary,
    pub plans: Vec<PlanRecord>,
    pub cells: Vec<CellRecord>,
    /// Aggregation and ranking notes (gaps, unrankable groups).
    pub notes: Vec<String>,
    /// Paths relative to the output directory, sorted.
    pub artifacts: Vec<String>,
}

impl RunManifest {
    pub fn failed_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.status == CellStatus::Failed).count()
    }

    pub fn success(&self) -> bool {
        self.failed_cells() == 0
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimingsFile {
    pub reports: Vec<TimingReport>,
    /// `metric,orientation,model,value,rank` rows per task.
    pub ranks: BTreeMap<String, Vec<crate::metrics::RankEntry>>,
}

/// Loads candles, converts to log-returns and applies the date range.
pub fn load_returns(config: &BenchConfig) -> Result<(ReturnMatrix, Vec<DroppedAsset>), BenchError> {
    let loaded = load_ohlc(&config.data_dir)?;
    let returns = loaded.prices.log_returns()?.restrict(config.start, config.end)?;
    Ok((returns, loaded.dropped))
}

struct Cell<'a> {
    task: &'a TaskSpec,
    model: &'a ModelEntry,
    tau: usize,
}

fn run_cell(cell: &Cell<'_>, returns: &ReturnMatrix, config: &BenchConfig) -> Result<CellOutput, String> {
    let split = split_slices(returns, cell.tau, config.w, cell.task.s()).map_err(|e| e.to_string())?;
    let seed = derive_seed(config.seed, &format!("{}/handle", cell.model.name));
    let mut handle = TsgModelHandle::from_spec(&cell.model.spec, seed).map_err(|e| e.to_string())?;
    let result = match cell.task {
        TaskSpec::PredictiveUtility { config: c, .. } => {
            // one noise stream per configured model
            let c = crate::tasks::PredictiveConfig {
                seed: derive_seed(c.seed, &cell.model.name),
                ..c.clone()
            };
            run_predictive_utility(&split, &mut handle, &c)
        }
        TaskSpec::StatArb { config: c, .. } => run_stat_arb(&split, &mut handle, c),
    };
    let mut result = result.map_err(|e| e.to_string())?;
    result.model = cell.model.name.clone();
    Ok(CellOutput {
        result,
        phases: handle.timings(),
    })
}

fn supported(task: &TaskSpec, model: &ModelEntry) -> Result<(), String> {
    let handle = TsgModelHandle::from_spec(&model.spec, 0).map_err(|e| e.to_string())?;
    let caps = handle.capabilities();
    match task {
        TaskSpec::PredictiveUtility { config, .. } => {
            if matches!(config.source, PredictionSource::Forecaster(_)) && !caps.supports_generate {
                return Err("model does not support generation".into());
            }
        }
        TaskSpec::StatArb { .. } => {
            if !caps.supports_reconstruct {
                return Err("model does not support reconstruction".into());
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses rayon's default.
    pub jobs: Option<usize>,
}

/// Runs every `(task, split, model)` cell and writes the output tree to
/// `config.output_dir`. Cell failures are recorded in the manifest, not
/// returned.
pub fn run(config: &BenchConfig, options: RunOptions) -> Result<RunManifest, BenchError> {
    let (returns, dropped) = load_returns(config)?;

    let mut plans = Vec::new();
    for task in &config.tasks {
        let offsets = if config.w > returns.len() {
            Vec::new()
        } else {
            make_splits(returns.len(), config.w, task.s())?.offsets
        };
        plans.push(PlanRecord {
            task: task.kind(),
            w: config.w,
            s: task.s(),
            offsets,
        });
    }
    if plans.iter().all(|p| p.offsets.is_empty()) {
        return Err(BenchError::NoSplits(format!(
            "{} hours of data, w = {}",
            returns.len(),
            config.w
        )));
    }

    let mut cells = Vec::new();
    let mut records = Vec::new();
    for (task, plan) in config.tasks.iter().zip(&plans) {
        for &tau in &plan.offsets {
            for model in config.models.iter().filter(|m| m.runs(task.kind())) {
                match supported(task, model) {
                    Ok(()) => cells.push(Cell { task, model, tau }),
                    Err(reason) => records.push(CellRecord {
                        task: task.kind(),
                        model: model.name.clone(),
                        tau,
                        status: CellStatus::Skipped,
                        reason: Some(reason),
                        strategy_failures: vec![],
                        excluded_assets: vec![],
                    }),
                }
            }
        }
    }

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = options.jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder.build().map_err(|e| BenchError::Pool(e.to_string()))?;
    let outcomes: Vec<Result<CellOutput, String>> = pool.install(|| {
        cells
            .par_iter()
            .map(|c| {
                catch_unwind(AssertUnwindSafe(|| run_cell(c, &returns, config)))
                    .unwrap_or_else(|_| Err("cell panicked".into()))
            })
            .collect()
    });

    let mut outputs = Vec::new();
    for (cell, outcome) in cells.iter().zip(outcomes) {
        let mut rec = CellRecord {
            task: cell.task.kind(),
            model: cell.model.name.clone(),
            tau: cell.tau,
            status: CellStatus::Ok,
            reason: None,
            strategy_failures: vec![],
            excluded_assets: vec![],
        };
        match outcome {
            Ok(out) => {
                rec.strategy_failures = out.result.failures.clone();
                rec.excluded_assets = out.result.excluded.clone();
                outputs.push(out);
            }
            Err(reason) => {
                log::warn!("{}/{}/tau {}: {reason}", rec.task, rec.model, rec.tau);
                rec.status = CellStatus::Failed;
                rec.reason = Some(reason);
            }
        }
        records.push(rec);
    }
    records.sort_by(|a, b| (a.task, a.tau, &a.model).cmp(&(b.task, b.tau, &b.model)));

    let agg = aggregate_yearly(&outputs)?;
    let out_dir = &config.output_dir;
    prepare_output_dir(out_dir)?;
    let mut artifacts = Vec::new();
    let mut notes = agg.gaps.clone();

    let metrics_dir = out_dir.join("metrics");
    let equity_dir = out_dir.join("equity");
    for dir in [&metrics_dir, &equity_dir] {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    for r in &agg.reports {
        let rel = format!("metrics/{}.json", r.key.stem());
        write_file(out_dir, &rel, format!("{}\n", r.to_json()?).as_bytes())?;
        artifacts.push(rel);
    }
    let mut csv = Vec::new();
    write_reports_csv(&agg.reports, &mut csv)?;
    write_file(out_dir, "metrics/all.csv", &csv)?;
    artifacts.push("metrics/all.csv".into());

    let mut charts: BTreeMap<String, Vec<(&str, &EquityCurve)>> = BTreeMap::new();
    for (key, curve) in &agg.curves {
        let rel = format!("equity/{}.csv", key.stem());
        let mut buf = Vec::new();
        curve.write_csv(&mut buf)?;
        write_file(out_dir, &rel, &buf)?;
        artifacts.push(rel);
        let chart = format!("{}__{}__fee{}__{}", key.task, key.strategy, key.fee, key.year);
        charts.entry(chart).or_default().push((&key.model, curve));
    }
    for (name, series) in &charts {
        let rel = format!("equity/{name}.svg");
        write_file(out_dir, &rel, equity_svg(name, series).as_bytes())?;
        artifacts.push(rel);
    }

    let (rank_files, rank_notes) = write_ranks(out_dir, &agg.reports)?;
    artifacts.extend(rank_files);
    notes.extend(rank_notes);
    write_timings(out_dir, &agg.timings)?;
    artifacts.push("timings.json".into());
    artifacts.push("manifest.json".into());
    artifacts.sort();

    let manifest = RunManifest {
        version: MANIFEST_VERSION,
        engine_version: env!("CARGO_PKG_VERSION").into(),
        config_hash: config.hash(),
        config: config.clone(),
        data: DataSummary {
            assets: returns.assets().to_vec(),
            hours: returns.len(),
            first: returns.timestamps().first().map(|t| t.to_rfc3339()),
            last: returns.timestamps().last().map(|t| t.to_rfc3339()),
            dropped,
        },
        plans,
        cells: records,
        notes,
        artifacts,
    };
    write_file(
        out_dir,
        "manifest.json",
        format!("{}\n", serde_json::to_string_pretty(&manifest)?).as_bytes(),
    )?;
    Ok(manifest)
}

fn write_file(out_dir: &Path, rel: &str, bytes: &[u8]) -> Result<(), BenchError> {
    let path = out_dir.join(rel);
    fs::write(&path, bytes).map_err(io_err(&path))
}

/// Clears artifacts of a previous run; refuses directories that were not
/// written by one.
fn prepare_output_dir(out_dir: &Path) -> Result<(), BenchError> {
    if out_dir.exists() {
        let mut entries = fs::read_dir(out_dir).map_err(io_err(out_dir))?;
        let empty = entries.next().is_none();
        if !empty && !out_dir.join("manifest.json").is_file() {
            return Err(BenchError::ForeignOutputDir(out_dir.to_path_buf()));
        }
        for sub in ["metrics", "equity", "ranks"] {
            let p = out_dir.join(sub);
            if p.is_dir() {
                fs::remove_dir_all(&p).map_err(io_err(&p))?;
            }
        }
    }
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))
}

/// One rank table per `(task, year)` plus one per task over all years.
/// Groups that cannot be ranked are reported as notes.
pub fn write_ranks(out_dir: &Path, reports: &[MetricsReport]) -> Result<(Vec<String>, Vec<String>), BenchError> {
    let dir = out_dir.join("ranks");
    if dir.is_dir() {
        fs::remove_dir_all(&dir).map_err(io_err(&dir))?;
    }
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let mut groups: BTreeMap<String, Vec<MetricsReport>> = BTreeMap::new();
    for r in reports {
        groups
            .entry(format!("{}__{}", r.key.task, r.key.year))
            .or_default()
            .push(r.clone());
        groups
            .entry(format!("{}__all", r.key.task))
            .or_default()
            .push(r.clone());
    }
    let mut files = Vec::new();
    let mut notes = Vec::new();
    for (name, group) in groups {
        match rank_models(&group) {
            Ok(table) => {
                let rel = format!("ranks/{name}.csv");
                let mut buf = Vec::new();
                table.write_csv(&mut buf)?;
                write_file(out_dir, &rel, &buf)?;
                files.push(rel);
            }
            Err(e) => notes.push(format!("ranks/{name}: {e}")),
        }
    }
    Ok((files, notes))
}

pub fn write_timings(out_dir: &Path, reports: &[TimingReport]) -> Result<(), BenchError> {
    let mut by_task: BTreeMap<String, Vec<TimingReport>> = BTreeMap::new();
    for r in reports {
        by_task.entry(r.task.clone()).or_default().push(r.clone());
    }
    let ranks = by_task
        .into_iter()
        .filter_map(|(task, group)| rank_timings(&group).ok().map(|t: RankTable| (task, t.entries)))
        .collect();
    let file = TimingsFile {
        reports: reports.to_vec(),
        ranks,
    };
    write_file(
        out_dir,
        "timings.json",
        format!("{}\n", serde_json::to_string_pretty(&file)?).as_bytes(),
    )
}

/// Rebuilds `ranks/` and the timing ranks from an existing output tree.
pub fn rerank(out_dir: &Path) -> Result<Vec<String>, BenchError> {
    let metrics_dir = out_dir.join("metrics");
    let mut paths: Vec<PathBuf> = fs::read_dir(&metrics_dir)
        .map_err(io_err(&metrics_dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    let mut reports = Vec::with_capacity(paths.len());
    for p in &paths {
        let text = fs::read_to_string(p).map_err(io_err(p))?;
        reports.push(MetricsReport::from_json(&text)?);
    }
    let (_, notes) = write_ranks(out_dir, &reports)?;
    let timings_path = out_dir.join("timings.json");
    if timings_path.is_file() {
        let text = fs::read_to_string(&timings_path).map_err(io_err(&timings_path))?;
        let file: TimingsFile = serde_json::from_str(&text)?;
        write_timings(out_dir, &file.reports)?;
    }
    Ok(notes)
}
