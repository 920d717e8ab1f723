//! The weekly U/D/TS/PC state machine.
//!
//! A week opens at most one position: short when the price first rises `U`
//! pips above the zero level, long when it first falls `D` pips below it.
//! Once open, the position is closed by a trailing stop `TS` pips behind the
//! best price seen, by a profit call `PC` pips in its favour, or at the last
//! sample of the week. Fills happen exactly at the trigger and stop levels.
//!
//! Both sides run through the same long-only logic on an oriented view of
//! the bars (prices negated and high/low swapped for shorts).

use serde::{Deserialize, Serialize};

use super::cost::{CostModel, Money};
use super::session::{from_points, pips_to_points, Bar, WeekSession, POINTS_PER_PIP};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Long,
    Short,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Long => "long",
            Side::Short => "short",
        }
    }

    fn sign(self) -> i64 {
        match self {
            Side::Long => 1,
            Side::Short => -1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitReason {
    TrailingStop,
    ProfitCall,
    WeekClose,
    NotOpened,
}

impl ExitReason {
    pub fn as_str(self) -> &'static str {
        match self {
            ExitReason::TrailingStop => "trailing_stop",
            ExitReason::ProfitCall => "profit_call",
            ExitReason::WeekClose => "week_close",
            ExitReason::NotOpened => "not_opened",
        }
    }
}

/// Which exit wins when one sample touches both the profit call and the
/// trailing stop at the same distance from its open.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntraBarOrder {
    #[default]
    ProfitFirst,
    StopFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StrategyParams {
    pub u: u32,
    pub d: u32,
    pub ts: u32,
    pub pc: u32,
}

impl StrategyParams {
    pub const MAX_STOP_PIPS: u32 = 500;

    pub fn new(u: u32, d: u32, ts: u32, pc: u32) -> Result<Self> {
        let sp = Self { u, d, ts, pc };
        sp.validate()?;
        Ok(sp)
    }

    pub fn validate(&self) -> Result<()> {
        if self.u == 0 || self.d == 0 {
            return Err(invalid("U and D must be positive"));
        }
        for (name, v) in [("TS", self.ts), ("PC", self.pc)] {
            if !(1..=Self::MAX_STOP_PIPS).contains(&v) {
                return Err(invalid(format!("{name} must be within 1..={} pips, got {v}", Self::MAX_STOP_PIPS)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Entry {
    pub side: Side,
    pub index: usize,
    /// Opening level in points.
    pub level: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Exit {
    pub reason: ExitReason,
    pub index: usize,
    /// Exit level in points.
    pub level: i64,
    /// Best favourable level reached while open, in points.
    pub best: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TradeOutcome {
    pub week_id: i64,
    pub side: Option<Side>,
    pub open_level: f64,
    pub exit_level: f64,
    pub exit_reason: ExitReason,
    /// Result in points (tenths of a pip), before costs.
    pub pnl_points: i64,
    pub pnl_currency: Money,
    pub nights_held: u32,
    pub open_index: Option<usize>,
    pub exit_index: Option<usize>,
}

impl TradeOutcome {
    pub fn not_opened(week_id: i64) -> Self {
        Self {
            week_id,
            side: None,
            open_level: f64::NAN,
            exit_level: f64::NAN,
            exit_reason: ExitReason::NotOpened,
            pnl_points: 0,
            pnl_currency: Money::ZERO,
            nights_held: 0,
            open_index: None,
            exit_index: None,
        }
    }

    pub fn pnl_pips(&self) -> f64 {
        self.pnl_points as f64 / POINTS_PER_PIP as f64
    }

    pub fn is_opened(&self) -> bool {
        self.side.is_some()
    }
}

// Bar seen from the position's side: larger is better.
#[derive(Debug, Clone, Copy)]
struct Oriented {
    open: i64,
    fav: i64,
    adv: i64,
    close: i64,
}

fn orient(bar: &Bar, side: Side) -> Oriented {
    match side {
        Side::Long => Oriented { open: bar.open, fav: bar.high, adv: bar.low, close: bar.close },
        Side::Short => Oriented { open: -bar.open, fav: -bar.low, adv: -bar.high, close: -bar.close },
    }
}

/// Side chosen when one bar crosses both entry levels: the level nearer the
/// bar's open is taken as hit first, the short trigger on a tie.
pub(crate) fn pick_side(bar: &Bar, up_level: i64, down_level: i64) -> Side {
    if (bar.open - down_level).abs() < (up_level - bar.open).abs() {
        Side::Long
    } else {
        Side::Short
    }
}

pub fn find_entry(session: &WeekSession, u: u32, d: u32) -> Option<Entry> {
    let up_level = session.zero_level + pips_to_points(u);
    let down_level = session.zero_level - pips_to_points(d);
    session.bars().iter().enumerate().find_map(|(index, bar)| {
        let side = match (bar.high >= up_level, bar.low <= down_level) {
            (false, false) => return None,
            (true, false) => Side::Short,
            (false, true) => Side::Long,
            (true, true) => pick_side(bar, up_level, down_level),
        };
        let level = if side == Side::Short { up_level } else { down_level };
        Some(Entry { side, index, level })
    })
}

/// Runs the open position from its entry bar to the exit.
pub fn manage_position(session: &WeekSession, entry: Entry, ts: u32, pc: u32, order: IntraBarOrder) -> Exit {
    let sign = entry.side.sign();
    let bars = session.bars();
    let open = sign * entry.level;
    let ts = pips_to_points(ts);
    let pc_level = open + pips_to_points(pc);
    let out = |reason, index, level: i64, best: i64| Exit { reason, index, level: sign * level, best: sign * best };
    let profit_first = order == IntraBarOrder::ProfitFirst;

    // Entry bar: only the move after the fill counts, which is the adverse
    // extreme (the price travelled through the level to reach it) and the close.
    let first = orient(&bars[entry.index], entry.side);
    let stop_hit = first.adv <= open - ts;
    let pc_hit = first.close >= pc_level;
    if stop_hit && (!pc_hit || !profit_first) {
        return out(ExitReason::TrailingStop, entry.index, open - ts, open);
    }
    if pc_hit {
        return out(ExitReason::ProfitCall, entry.index, pc_level, pc_level);
    }
    let mut best = open.max(first.close);

    for (index, bar) in bars.iter().enumerate().skip(entry.index + 1) {
        let b = orient(bar, entry.side);
        let stop_level = best - ts;
        let pc_hit = b.fav >= pc_level;
        let stop_hit = b.adv <= stop_level;
        let profit = match (pc_hit, stop_hit) {
            (true, true) => {
                let to_pc = (pc_level - b.open).abs();
                let to_stop = (b.open - stop_level).abs();
                if to_pc != to_stop {
                    to_pc < to_stop
                } else {
                    profit_first
                }
            }
            (true, false) => true,
            (false, true) => false,
            (false, false) => {
                best = best.max(b.fav);
                if b.adv <= best - ts {
                    return out(ExitReason::TrailingStop, index, best - ts, best);
                }
                continue;
            }
        };
        return if profit {
            out(ExitReason::ProfitCall, index, pc_level, pc_level)
        } else {
            out(ExitReason::TrailingStop, index, stop_level, best)
        };
    }

    let last = bars.len() - 1;
    let close = orient(&bars[last], entry.side).close;
    out(ExitReason::WeekClose, last, close, best.max(close))
}

fn day(ts: i64) -> i64 {
    ts.div_euclid(86_400)
}

/// Converts an entry/exit pair into an accounted outcome.
pub fn settle(session: &WeekSession, entry: Entry, exit: Exit, cm: &CostModel) -> TradeOutcome {
    let bars = session.bars();
    let pnl_points = entry.side.sign() * (exit.level - entry.level);
    let nights = (day(bars[exit.index].ts) - day(bars[entry.index].ts)).max(0) as u32;
    let open_level = from_points(entry.level);
    TradeOutcome {
        week_id: session.week_id,
        side: Some(entry.side),
        open_level,
        exit_level: from_points(exit.level),
        exit_reason: exit.reason,
        pnl_points,
        pnl_currency: cm.trade_pnl(pnl_points, open_level, nights),
        nights_held: nights,
        open_index: Some(entry.index),
        exit_index: Some(exit.index),
    }
}

pub fn run_week(session: &WeekSession, sp: &StrategyParams, cm: &CostModel) -> TradeOutcome {
    run_week_with(session, sp, cm, IntraBarOrder::default())
}

pub fn run_week_with(session: &WeekSession, sp: &StrategyParams, cm: &CostModel, order: IntraBarOrder) -> TradeOutcome {
    match find_entry(session, sp.u, sp.d) {
        None => TradeOutcome::not_opened(session.week_id),
        Some(entry) => {
            let exit = manage_position(session, entry, sp.ts, sp.pc, order);
            settle(session, entry, exit, cm)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BacktestResult {
    pub outcomes: Vec<TradeOutcome>,
    /// Running sum of weekly P&L.
    pub cumulative: Vec<Money>,
}

impl BacktestResult {
    pub fn from_outcomes(outcomes: Vec<TradeOutcome>) -> Self {
        let cumulative = outcomes
            .iter()
            .scan(Money::ZERO, |acc, o| {
                *acc += o.pnl_currency;
                Some(*acc)
            })
            .collect();
        Self { outcomes, cumulative }
    }

    pub fn total(&self) -> Money {
        self.cumulative.last().copied().unwrap_or(Money::ZERO)
    }

    /// Mean weekly P&L in currency, counting weeks without a position.
    pub fn mean_weekly(&self) -> f64 {
        if self.outcomes.is_empty() {
            return 0.0;
        }
        self.total().to_f64() / self.outcomes.len() as f64
    }
}

pub fn run_backtest(weeks: &[WeekSession], sp: &StrategyParams, cm: &CostModel) -> BacktestResult {
    BacktestResult::from_outcomes(weeks.iter().map(|w| run_week(w, sp, cm)).collect())
}
