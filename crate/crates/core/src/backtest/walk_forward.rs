//! Walk-forward evaluation: fit the strategy on trailing periods, trade the
//! next one with the fitted parameters.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use super::cost::CostModel;
use super::engine::{run_backtest, IntraBarOrder, StrategyParams};
use super::grid::{optimize_grid_with, ParamGrid};
use super::session::WeekSession;
use crate::error::{invalid, Result};

pub const DEFAULT_PERIOD_WEEKS: usize = 52;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lookback {
    Periods(usize),
    Expanding,
}

impl Lookback {
    fn first_period(self) -> usize {
        match self {
            Lookback::Periods(k) => k,
            Lookback::Expanding => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RowKind {
    #[serde(rename = "e")]
    Estimated,
    #[serde(rename = "A")]
    Actual,
}

impl RowKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RowKind::Estimated => "e",
            RowKind::Actual => "A",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WalkForwardRow {
    /// Index of the period the row describes.
    pub period: usize,
    pub kind: RowKind,
    pub first_week: i64,
    pub last_week: i64,
    pub n_weeks: usize,
    pub params: StrategyParams,
    /// Mean weekly P&L in account currency.
    pub mean_weekly: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WalkForwardReport {
    pub period_weeks: usize,
    pub rows: Vec<WalkForwardRow>,
}

impl WalkForwardReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("period,kind,first_week,last_week,n_weeks,u,d,ts,pc,mean_weekly\n");
        for r in &self.rows {
            let p = r.params;
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{:?}",
                r.period,
                r.kind.as_str(),
                r.first_week,
                r.last_week,
                r.n_weeks,
                p.u,
                p.d,
                p.ts,
                p.pc,
                r.mean_weekly
            );
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct WalkForwardConfig {
    pub lookback: Lookback,
    pub period_weeks: usize,
    pub grid: ParamGrid,
    pub order: IntraBarOrder,
}

impl WalkForwardConfig {
    pub fn new(lookback: Lookback, grid: ParamGrid) -> Self {
        Self { lookback, period_weeks: DEFAULT_PERIOD_WEEKS, grid, order: IntraBarOrder::default() }
    }
}

/// Splits weeks into consecutive periods; a trailing partial period is kept.
pub fn periods(weeks: &[WeekSession], period_weeks: usize) -> Vec<&[WeekSession]> {
    weeks.chunks(period_weeks.max(1)).collect()
}

/// Produces the alternating `e`/`A` rows: the estimate for period `p-1`
/// followed by the out-of-sample result in period `p`, and finally the
/// estimate made with the last available periods.
pub fn walk_forward(weeks: &[WeekSession], cfg: &WalkForwardConfig, cm: &CostModel) -> Result<WalkForwardReport> {
    if cfg.period_weeks == 0 {
        return Err(invalid("period length must be positive"));
    }
    if let Lookback::Periods(0) = cfg.lookback {
        return Err(invalid("lookback must be at least one period"));
    }
    cfg.grid.validate()?;
    let per = periods(weeks, cfg.period_weeks);
    let first = cfg.lookback.first_period();
    if per.len() < first {
        log::warn!("{} periods available, lookback needs {first}; empty report", per.len());
        return Ok(WalkForwardReport { period_weeks: cfg.period_weeks, rows: vec![] });
    }

    // Fit ending at period p - 1, for p = first..=len.
    let fits: Vec<Result<(usize, WalkForwardRow)>> = (first..=per.len())
        .into_par_iter()
        .map(|p| {
            let start = match cfg.lookback {
                Lookback::Periods(k) => (p - k) * cfg.period_weeks,
                Lookback::Expanding => 0,
            };
            let end = (p * cfg.period_weeks).min(weeks.len());
            let train = &weeks[start..end];
            let best = optimize_grid_with(train, &cfg.grid, cm, cfg.order)?;
            Ok((
                p,
                WalkForwardRow {
                    period: p - 1,
                    kind: RowKind::Estimated,
                    first_week: train[0].week_id,
                    last_week: train[train.len() - 1].week_id,
                    n_weeks: train.len(),
                    params: best.params,
                    mean_weekly: best.mean_weekly(),
                },
            ))
        })
        .collect();

    let mut rows = Vec::new();
    for fit in fits {
        let (p, est) = fit?;
        let params = est.params;
        rows.push(est);
        if let Some(test) = per.get(p) {
            let res = run_backtest(test, &params, cm);
            rows.push(WalkForwardRow {
                period: p,
                kind: RowKind::Actual,
                first_week: test[0].week_id,
                last_week: test[test.len() - 1].week_id,
                n_weeks: test.len(),
                params,
                mean_weekly: res.mean_weekly(),
            });
        }
    }
    Ok(WalkForwardReport { period_weeks: cfg.period_weeks, rows })
}
