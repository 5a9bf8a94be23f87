//! Spread bias detection and against-the-spread backtesting.
//!
//! Historical games are grouped by closing spread. For each spread a kernel
//! density estimate of the outcome gives the probability that the home side
//! covers; the binary entropy of that probability measures how much the
//! spread gives away. Low-entropy spreads are the ones worth wagering on.

pub mod bias;
pub mod data;
pub mod density;
pub mod harness;
pub mod models;
pub mod report;

pub use bias::{BiasProfile, Selection, SpreadBias};
pub use data::{Dataset, GameRecord, Outcome, Spread, SpreadBucket};
pub use density::{KdeSettings, Kernel, OutcomeDensity, OutcomeGrid};
pub use harness::{run_td, run_ti, TdConfig, TiConfig, TiSelection};
pub use models::{AtsResult, Decision, Model, Wager};
pub use report::EvaluationReport;
