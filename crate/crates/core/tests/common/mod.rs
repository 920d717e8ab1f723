#![allow(dead_code)]

use oustop::backtest::{ExitReason, Side, StrategyParams, WeekSession};

/// Result of the reference scan, prices in points (1e-5).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scan {
    pub side: Option<Side>,
    pub reason: ExitReason,
    pub exit_level: i64,
    pub pnl_points: i64,
}

/// Straightforward replay of a tick week: every sample is checked against
/// the entry triggers, then against the profit call and the trailing stop.
pub fn scan_ticks(week: &WeekSession, sp: &StrategyParams) -> Scan {
    let prices: Vec<i64> = week.bars().iter().map(|b| {
        assert!(b.open == b.high && b.high == b.low && b.low == b.close, "tick data expected");
        b.close
    }).collect();
    let up = week.zero_level + 10 * i64::from(sp.u);
    let down = week.zero_level - 10 * i64::from(sp.d);
    let ts = 10 * i64::from(sp.ts);
    let pc = 10 * i64::from(sp.pc);

    let mut opened = None;
    for (i, &p) in prices.iter().enumerate() {
        if p >= up {
            opened = Some((i, Side::Short, up, -1));
            break;
        }
        if p <= down {
            opened = Some((i, Side::Long, down, 1));
            break;
        }
    }
    let Some((start, side, level, sign)) = opened else {
        return Scan { side: None, reason: ExitReason::NotOpened, exit_level: 0, pnl_points: 0 };
    };

    let mut best_gain = 0;
    for &p in &prices[start..] {
        let gain = sign * (p - level);
        if gain >= pc {
            return Scan { side: Some(side), reason: ExitReason::ProfitCall, exit_level: level + sign * pc, pnl_points: pc };
        }
        best_gain = best_gain.max(gain);
        if gain <= best_gain - ts {
            let pnl = best_gain - ts;
            return Scan { side: Some(side), reason: ExitReason::TrailingStop, exit_level: level + sign * pnl, pnl_points: pnl };
        }
    }
    let last = *prices.last().unwrap();
    Scan { side: Some(side), reason: ExitReason::WeekClose, exit_level: last, pnl_points: sign * (last - level) }
}
