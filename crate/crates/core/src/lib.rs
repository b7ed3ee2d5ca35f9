//! Benchmark harness for time-series generators on hourly crypto returns.

pub mod bench;
pub mod features;
pub mod forecasting;
pub mod market_data;
pub mod metrics;
pub mod stats;
pub mod strategies;
pub mod tasks;
pub mod tsg;
