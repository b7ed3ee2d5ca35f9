use crate::forecasting::{Algorithm, ForecasterConfig};
use crate::strategies::Strategy;
use crate::tasks::{PredictionSource, PredictiveConfig, ResidualSignal, StatArbConfig, TaskKind};
use crate::tsg::{Capabilities, ModelSpec, PcaSelection};
use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use thiserror::Error;
use toml::{Table, Value};

pub const DEFAULT_W: usize = 12_000;
pub const DEFAULT_PREDICTIVE_S: usize = 720;
pub const DEFAULT_STAT_ARB_S: usize = 360;
pub const DEFAULT_FEES: [f64; 2] = [0.0, 0.0003];
pub const DEFAULT_V0: f64 = 10_000.0;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {reason}")]
    Io { path: PathBuf, reason: String },
    #[error("config parse error: {0}")]
    ParseError(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {reason}")]
    InvalidValue { key: String, reason: String },
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::InvalidValue {
        key: key.to_string(),
        reason: reason.into(),
    }
}

/// A model as named in reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    pub name: String,
    pub spec: ModelSpec,
    /// Tasks this model takes part in; empty means every configured task.
    pub tasks: Vec<TaskKind>,
}

impl ModelEntry {
    pub fn runs(&self, task: TaskKind) -> bool {
        self.tasks.is_empty() || self.tasks.contains(&task)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum TaskSpec {
    PredictiveUtility { s: usize, config: PredictiveConfig },
    StatArb { s: usize, config: StatArbConfig },
}

impl TaskSpec {
    pub fn kind(&self) -> TaskKind {
        match self {
            TaskSpec::PredictiveUtility { .. } => TaskKind::PredictiveUtility,
            TaskSpec::StatArb { .. } => TaskKind::StatArb,
        }
    }

    pub fn s(&self) -> usize {
        match self {
            TaskSpec::PredictiveUtility { s, .. } | TaskSpec::StatArb { s, .. } => *s,
        }
    }
}

/// Fully resolved benchmark configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub data_dir: PathBuf,
    pub start: Option<DateTime<Utc>>,
    pub end: Option<DateTime<Utc>>,
    pub w: usize,
    pub seed: u64,
    pub models: Vec<ModelEntry>,
    pub tasks: Vec<TaskSpec>,
    /// Not part of the config hash.
    #[serde(skip)]
    pub output_dir: PathBuf,
}

impl BenchConfig {
    /// Replaces the base seed and every task-level seed.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        for t in &mut self.tasks {
            if let TaskSpec::PredictiveUtility { config, .. } = t {
                config.seed = seed;
            }
        }
    }

    /// SHA-256 over the canonical JSON of every field except the output
    /// directory.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<BenchConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config_str(&text, base)
}

/// Relative paths are resolved against `base`.
pub fn parse_config_str(text: &str, base: &Path) -> Result<BenchConfig, ConfigError> {
    let root: Table = text
        .parse()
        .map_err(|e: toml::de::Error| ConfigError::ParseError(e.to_string()))?;
    check_keys(
        &root,
        "",
        &[
            "data_dir",
            "start",
            "end",
            "w",
            "fees",
            "v0",
            "seed",
            "output_dir",
            "models",
            "tasks",
        ],
    )?;
    let data_dir = base.join(str_key(&root, "data_dir")?.ok_or_else(|| invalid("data_dir", "required"))?);
    let output_dir = base.join(str_key(&root, "output_dir")?.unwrap_or_else(|| "ctbench-out".into()));
    let start = time_key(&root, "start")?;
    let end = time_key(&root, "end")?;
    if let (Some(a), Some(b)) = (start, end) {
        if a >= b {
            return Err(invalid("end", "must be after start"));
        }
    }
    let w = usize_key(&root, "w")?.unwrap_or(DEFAULT_W);
    if w == 0 {
        return Err(invalid("w", "must be > 0"));
    }
    let fees = fees_key(&root, "fees")?.unwrap_or_else(|| DEFAULT_FEES.to_vec());
    let v0 = f64_key(&root, "v0")?.unwrap_or(DEFAULT_V0);
    if !(v0 > 0.0 && v0.is_finite()) {
        return Err(invalid("v0", "must be > 0"));
    }
    let seed = u64_key(&root, "seed")?.unwrap_or(0);

    let models = match root.get("models") {
        Some(Value::Array(items)) => items
            .iter()
            .enumerate()
            .map(|(k, v)| match v {
                Value::Table(t) => parse_model(t, &format!("models[{k}]"), base),
                _ => Err(invalid(&format!("models[{k}]"), "expected a table")),
            })
            .collect::<Result<Vec<_>, _>>()?,
        Some(_) => return Err(invalid("models", "expected an array of tables")),
        None => Vec::new(),
    };
    if models.is_empty() {
        return Err(invalid("models", "at least one model is required"));
    }
    for (k, m) in models.iter().enumerate() {
        if models[..k].iter().any(|o| o.name == m.name) {
            return Err(invalid(
                &format!("models[{k}].name"),
                format!("duplicate name {}", m.name),
            ));
        }
    }

    let tasks = match root.get("tasks") {
        Some(Value::Array(items)) => items
            .iter()
            .enumerate()
            .map(|(k, v)| match v {
                Value::Table(t) => parse_task(t, &format!("tasks[{k}]"), &fees, v0, seed),
                _ => Err(invalid(&format!("tasks[{k}]"), "expected a table")),
            })
            .collect::<Result<Vec<_>, _>>()?,
        Some(_) => return Err(invalid("tasks", "expected an array of tables")),
        None => vec![
            parse_task(&table_with_task("predictive_utility"), "tasks[0]", &fees, v0, seed)?,
            parse_task(&table_with_task("stat_arb"), "tasks[1]", &fees, v0, seed)?,
        ],
    };
    if tasks.is_empty() {
        return Err(invalid("tasks", "at least one task is required"));
    }
    for (k, t) in tasks.iter().enumerate() {
        if tasks[..k].iter().any(|o| o.kind() == t.kind()) {
            return Err(invalid(
                &format!("tasks[{k}].task"),
                format!("{} listed twice", t.kind()),
            ));
        }
    }
    Ok(BenchConfig {
        data_dir,
        start,
        end,
        w,
        seed,
        models,
        tasks,
        output_dir,
    })
}

fn table_with_task(task: &str) -> Table {
    let mut t = Table::new();
    t.insert("task".into(), Value::String(task.into()));
    t
}

fn check_keys(table: &Table, prefix: &str, known: &[&str]) -> Result<(), ConfigError> {
    for key in table.keys() {
        if !known.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey(format!("{prefix}{key}")));
        }
    }
    Ok(())
}

fn str_key(t: &Table, key: &str) -> Result<Option<String>, ConfigError> {
    match t.get(key) {
        None => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(_) => Err(invalid(key, "expected a string")),
    }
}

fn bool_key(t: &Table, key: &str) -> Result<Option<bool>, ConfigError> {
    match t.get(key) {
        None => Ok(None),
        Some(Value::Boolean(b)) => Ok(Some(*b)),
        Some(_) => Err(invalid(key, "expected a boolean")),
    }
}

fn f64_key(t: &Table, key: &str) -> Result<Option<f64>, ConfigError> {
    match t.get(key) {
        None => Ok(None),
        Some(Value::Float(f)) => Ok(Some(*f)),
        Some(Value::Integer(i)) => Ok(Some(*i as f64)),
        Some(_) => Err(invalid(key, "expected a number")),
    }
}

fn u64_key(t: &Table, key: &str) -> Result<Option<u64>, ConfigError> {
    match t.get(key) {
        None => Ok(None),
        Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
        Some(_) => Err(invalid(key, "expected a non-negative integer")),
    }
}

fn usize_key(t: &Table, key: &str) -> Result<Option<usize>, ConfigError> {
    u64_key(t, key).map(|v| v.map(|v| v as usize))
}

fn fees_key(t: &Table, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
    let Some(v) = t.get(key) else {
        return Ok(None);
    };
    let Value::Array(items) = v else {
        return Err(invalid(key, "expected a list of fractions"));
    };
    let mut fees = Vec::with_capacity(items.len());
    for item in items {
        let f = match item {
            Value::Float(f) => *f,
            Value::Integer(i) => *i as f64,
            _ => return Err(invalid(key, "expected a list of fractions")),
        };
        if !(0.0..1.0).contains(&f) {
            return Err(invalid(key, format!("fee {f} outside [0, 1)")));
        }
        fees.push(f);
    }
    if fees.is_empty() {
        return Err(invalid(key, "at least one fee is required"));
    }
    Ok(Some(fees))
}

fn time_key(t: &Table, key: &str) -> Result<Option<DateTime<Utc>>, ConfigError> {
    let text = match t.get(key) {
        None => return Ok(None),
        Some(Value::String(s)) => s.clone(),
        Some(Value::Datetime(d)) => d.to_string(),
        Some(_) => return Err(invalid(key, "expected a date or RFC 3339 timestamp")),
    };
    if let Ok(ts) = DateTime::parse_from_rfc3339(&text) {
        return Ok(Some(ts.with_timezone(&Utc)));
    }
    NaiveDate::parse_from_str(&text, "%Y-%m-%d")
        .map(|d| Some(d.and_hms_opt(0, 0, 0).expect("midnight").and_utc()))
        .map_err(|_| invalid(key, format!("cannot parse {text:?}")))
}

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && !name.contains("__")
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

fn capabilities(t: &Table) -> Result<Capabilities, ConfigError> {
    Ok(Capabilities {
        supports_generate: bool_key(t, "generate")?.unwrap_or(true),
        supports_reconstruct: bool_key(t, "reconstruct")?.unwrap_or(true),
    })
}

fn parse_model(t: &Table, at: &str, base: &Path) -> Result<ModelEntry, ConfigError> {
    let p = format!("{at}.");
    let kind = str_key(t, "kind")?.ok_or_else(|| invalid(&format!("{p}kind"), "required"))?;
    let (spec, default_name) = match kind.as_str() {
        "passthrough" => {
            check_keys(t, &p, &["kind", "name", "tasks"])?;
            (ModelSpec::Passthrough, kind.clone())
        }
        "gaussian" => {
            check_keys(t, &p, &["kind", "name", "tasks"])?;
            (ModelSpec::Gaussian, kind.clone())
        }
        "block_bootstrap" => {
            check_keys(t, &p, &["kind", "name", "tasks", "block"])?;
            let block = usize_key(t, "block")?.unwrap_or(24);
            if block == 0 {
                return Err(invalid(&format!("{p}block"), "must be > 0"));
            }
            (ModelSpec::BlockBootstrap { block }, kind.clone())
        }
        "pca" => {
            check_keys(t, &p, &["kind", "name", "tasks", "components"])?;
            let components = match t.get("components") {
                None => PcaSelection::default(),
                Some(Value::Integer(i)) if *i > 0 => PcaSelection::Fixed(*i as usize),
                Some(Value::String(s)) => s
                    .parse()
                    .map_err(|e| invalid(&format!("{p}components"), format!("{e}")))?,
                Some(_) => return Err(invalid(&format!("{p}components"), "expected p > 0 or \"ev<q>\"")),
            };
            (ModelSpec::Pca { components }, kind.clone())
        }
        "external" => {
            check_keys(
                t,
                &p,
                &[
                    "kind",
                    "name",
                    "tasks",
                    "id",
                    "command",
                    "workdir",
                    "generate",
                    "reconstruct",
                ],
            )?;
            let id = str_key(t, "id")?.ok_or_else(|| invalid(&format!("{p}id"), "required"))?;
            let command = match t.get("command") {
                Some(Value::Array(items)) if !items.is_empty() => items
                    .iter()
                    .map(|v| v.as_str().map(str::to_string))
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| invalid(&format!("{p}command"), "expected a list of strings"))?,
                _ => return Err(invalid(&format!("{p}command"), "expected a non-empty list of strings")),
            };
            let workdir = base.join(str_key(t, "workdir")?.unwrap_or_else(|| "ctbench-exchange".into()));
            let capabilities = capabilities(t)?;
            (
                ModelSpec::External {
                    id: id.clone(),
                    command,
                    workdir,
                    capabilities,
                },
                id,
            )
        }
        "bundles" => {
            check_keys(
                t,
                &p,
                &["kind", "name", "tasks", "id", "root", "generate", "reconstruct"],
            )?;
            let id = str_key(t, "id")?.ok_or_else(|| invalid(&format!("{p}id"), "required"))?;
            let root = base.join(str_key(t, "root")?.ok_or_else(|| invalid(&format!("{p}root"), "required"))?);
            let capabilities = capabilities(t)?;
            (
                ModelSpec::Bundles {
                    id: id.clone(),
                    root,
                    capabilities,
                },
                id,
            )
        }
        other => return Err(invalid(&format!("{p}kind"), format!("unknown model kind {other:?}"))),
    };
    let name = str_key(t, "name")?.unwrap_or(default_name);
    if !valid_name(&name) {
        return Err(invalid(
            &format!("{p}name"),
            format!("{name:?} must be [A-Za-z0-9._-] without \"__\""),
        ));
    }
    let tasks = match t.get("tasks") {
        None => Vec::new(),
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| v.as_str().and_then(task_kind))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| invalid(&format!("{p}tasks"), "expected task names"))?,
        Some(_) => return Err(invalid(&format!("{p}tasks"), "expected a list")),
    };
    Ok(ModelEntry { name, spec, tasks })
}

fn task_kind(s: &str) -> Option<TaskKind> {
    match s {
        "predictive_utility" => Some(TaskKind::PredictiveUtility),
        "stat_arb" => Some(TaskKind::StatArb),
        _ => None,
    }
}

fn parse_task(t: &Table, at: &str, fees: &[f64], v0: f64, seed: u64) -> Result<TaskSpec, ConfigError> {
    let p = format!("{at}.");
    let name = str_key(t, "task")?.ok_or_else(|| invalid(&format!("{p}task"), "required"))?;
    let kind = task_kind(&name).ok_or_else(|| invalid(&format!("{p}task"), format!("unknown task {name:?}")))?;
    let task_fees = fees_key(t, "fees")
        .map_err(|e| prefix_err(e, &p))?
        .unwrap_or_else(|| fees.to_vec());
    match kind {
        TaskKind::PredictiveUtility => {
            check_keys(
                t,
                &p,
                &["task", "s", "fees", "strategies", "seed", "source", "forecaster"],
            )?;
            let s = usize_key(t, "s")?.unwrap_or(DEFAULT_PREDICTIVE_S);
            if s == 0 {
                return Err(invalid(&format!("{p}s"), "must be > 0"));
            }
            let strategies = match t.get("strategies") {
                None => Strategy::ALL.to_vec(),
                Some(Value::Array(items)) if !items.is_empty() => items
                    .iter()
                    .map(|v| v.as_str().and_then(|s| s.parse().ok()))
                    .collect::<Option<Vec<Strategy>>>()
                    .ok_or_else(|| invalid(&format!("{p}strategies"), "expected names from half_ls, csm, lotq, pw"))?,
                Some(_) => return Err(invalid(&format!("{p}strategies"), "expected a non-empty list")),
            };
            let source = match str_key(t, "source")?.as_deref() {
                None | Some("forecaster") => PredictionSource::Forecaster(parse_forecaster(t.get("forecaster"), &p)?),
                Some("oracle") => {
                    if t.contains_key("forecaster") {
                        return Err(invalid(&format!("{p}forecaster"), "not used with source = \"oracle\""));
                    }
                    PredictionSource::Oracle
                }
                Some(other) => return Err(invalid(&format!("{p}source"), format!("unknown source {other:?}"))),
            };
            Ok(TaskSpec::PredictiveUtility {
                s,
                config: PredictiveConfig {
                    source,
                    strategies,
                    fees: task_fees,
                    v0,
                    seed: u64_key(t, "seed")?.unwrap_or(seed),
                },
            })
        }
        TaskKind::StatArb => {
            check_keys(t, &p, &["task", "s", "fees", "gamma", "residual_signal"])?;
            let s = usize_key(t, "s")?.unwrap_or(DEFAULT_STAT_ARB_S);
            if s == 0 {
                return Err(invalid(&format!("{p}s"), "must be > 0"));
            }
            let gamma = f64_key(t, "gamma")?.unwrap_or(2.0);
            if !(gamma > 0.0 && gamma.is_finite()) {
                return Err(invalid(&format!("{p}gamma"), "must be > 0"));
            }
            let residual_signal = match str_key(t, "residual_signal")?.as_deref() {
                None | Some("cumulative") => ResidualSignal::Cumulative,
                Some("return") => ResidualSignal::Return,
                Some(other) => {
                    return Err(invalid(
                        &format!("{p}residual_signal"),
                        format!("unknown signal {other:?}"),
                    ))
                }
            };
            Ok(TaskSpec::StatArb {
                s,
                config: StatArbConfig {
                    gamma,
                    fees: task_fees,
                    v0,
                    residual_signal,
                },
            })
        }
    }
}

fn prefix_err(e: ConfigError, prefix: &str) -> ConfigError {
    match e {
        ConfigError::InvalidValue { key, reason } => ConfigError::InvalidValue {
            key: format!("{prefix}{key}"),
            reason,
        },
        other => other,
    }
}

fn parse_forecaster(v: Option<&Value>, p: &str) -> Result<ForecasterConfig, ConfigError> {
    let mut cfg = ForecasterConfig::default();
    let Some(v) = v else {
        return Ok(cfg);
    };
    let Value::Table(t) = v else {
        return Err(invalid(&format!("{p}forecaster"), "expected a table"));
    };
    let fp = format!("{p}forecaster.");
    check_keys(
        t,
        &fp,
        &[
            "algorithm",
            "trees",
            "max_depth",
            "learning_rate",
            "lambda",
            "subsample",
            "min_samples_leaf",
            "seed",
        ],
    )?;
    let wrap = |e| prefix_err(e, &fp);
    if let Some(a) = str_key(t, "algorithm").map_err(wrap)? {
        cfg.algorithm = match a.as_str() {
            "gbdt" => Algorithm::Gbdt,
            "ridge" => Algorithm::Ridge,
            other => {
                return Err(invalid(
                    &format!("{fp}algorithm"),
                    format!("unknown algorithm {other:?}"),
                ))
            }
        };
    }
    if let Some(v) = usize_key(t, "trees").map_err(wrap)? {
        cfg.trees = v;
    }
    if let Some(v) = usize_key(t, "max_depth").map_err(wrap)? {
        cfg.max_depth = v;
    }
    if let Some(v) = f64_key(t, "learning_rate").map_err(wrap)? {
        cfg.learning_rate = v;
    }
    if let Some(v) = f64_key(t, "lambda").map_err(wrap)? {
        cfg.lambda = v;
    }
    if let Some(v) = f64_key(t, "subsample").map_err(wrap)? {
        cfg.subsample = v;
    }
    if let Some(v) = usize_key(t, "min_samples_leaf").map_err(wrap)? {
        cfg.min_samples_leaf = v;
    }
    if let Some(v) = u64_key(t, "seed").map_err(wrap)? {
        cfg.seed = v;
    }
    cfg.validate()
        .map_err(|e| invalid(&format!("{p}forecaster"), e.to_string()))?;
    Ok(cfg)
}
