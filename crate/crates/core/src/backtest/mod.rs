//! Weekly trading strategy backtester on OHLC or tick data.

pub mod cost;
pub mod engine;
pub mod gate;
pub mod grid;
pub mod pc_report;
pub mod walk_forward;
pub mod session;

pub use cost::{CostModel, Money};
pub use engine::{
    find_entry, manage_position, run_backtest, run_week, run_week_with, settle, BacktestResult, Entry, Exit,
    ExitReason, IntraBarOrder, Side, StrategyParams, TradeOutcome,
};
pub use grid::{evaluate_grid, optimize_grid, optimize_grid_with, GridScore, ParamGrid, PcAxis};
pub use session::{segment_weeks, Bar, Candle, WeekSession};
pub use walk_forward::{walk_forward, Lookback, RowKind, WalkForwardConfig, WalkForwardReport, WalkForwardRow};
pub use gate::{gate_week, predict, run_gated_backtest, GateConfig, GateDecision, Prediction, SkipReason, WeekPrediction};
pub use pc_report::{pc_frequency_report, PcComparison, PcFrequencyReport};
