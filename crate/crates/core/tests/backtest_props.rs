mod common;

use oustop::backtest::grid::{evaluate_grid, optimize_grid, GridScore, ParamGrid, PcAxis};
use oustop::backtest::session::{to_points, Bar, WeekSession};
use oustop::backtest::{run_backtest, run_week, CostModel, ExitReason, IntraBarOrder, Money, Side, StrategyParams};
use oustop::synthetic::{tick_weeks, Regime, SyntheticConfig};
use oustop::OUParams;
use proptest::prelude::*;

const T0: i64 = 1_704_661_200;

fn tick_week(id: i64, steps: &[i8]) -> WeekSession {
    let mut p = 130_000_i64;
    let mut bars = vec![Bar::tick(T0, p)];
    for (i, s) in steps.iter().enumerate() {
        p += i64::from(*s) * 5;
        bars.push(Bar::tick(T0 + 60 * (i as i64 + 1), p));
    }
    WeekSession::new(id, bars).unwrap()
}

fn mirror(w: &WeekSession) -> WeekSession {
    let bars = w
        .bars()
        .iter()
        .map(|b| Bar { ts: b.ts, open: -b.open, high: -b.low, low: -b.high, close: -b.close })
        .collect();
    WeekSession::new(w.week_id, bars).unwrap()
}

fn params() -> impl Strategy<Value = StrategyParams> {
    (1u32..40, 1u32..40, 1u32..60, 1u32..80).prop_map(|(u, d, ts, pc)| StrategyParams::new(u, d, ts, pc).unwrap())
}

fn steps() -> impl Strategy<Value = Vec<i8>> {
    prop::collection::vec(-3i8..=3, 1..400)
}

proptest! {
    #[test]
    fn matches_brute_force_on_ticks(s in steps(), sp in params()) {
        let w = tick_week(1, &s);
        let o = run_week(&w, &sp, &CostModel::default());
        let r = common::scan_ticks(&w, &sp);
        prop_assert_eq!(o.side, r.side);
        prop_assert_eq!(o.exit_reason, r.reason);
        prop_assert_eq!(o.pnl_points, r.pnl_points);
        if r.side.is_some() {
            prop_assert_eq!(to_points(o.exit_level), r.exit_level);
        }
    }

    #[test]
    fn outcome_invariants(s in steps(), sp in params()) {
        let w = tick_week(1, &s);
        let o = run_week(&w, &sp, &CostModel::default());
        prop_assert_eq!(o.side.is_none(), o.exit_reason == ExitReason::NotOpened);
        if o.side.is_none() {
            prop_assert_eq!(o.pnl_points, 0);
            prop_assert_eq!(o.pnl_currency, Money::ZERO);
        }
        if o.exit_reason == ExitReason::ProfitCall {
            prop_assert_eq!(o.pnl_points, 10 * i64::from(sp.pc));
        }
        if o.exit_reason == ExitReason::TrailingStop {
            // Largest favourable move between the fill and the exit sample.
            let sign = if o.side == Some(Side::Long) { 1 } else { -1 };
            let open = to_points(o.open_level);
            let (a, b) = (o.open_index.unwrap(), o.exit_index.unwrap());
            let best = w.bars()[a..=b].iter().map(|bar| sign * (bar.close - open)).max().unwrap().max(0);
            prop_assert_eq!(o.pnl_points, best - 10 * i64::from(sp.ts));
        }
    }

    #[test]
    fn mirrored_prices_swap_sides(s in steps(), sp in params()) {
        let w = tick_week(1, &s);
        let m = mirror(&w);
        let swapped = StrategyParams { u: sp.d, d: sp.u, ..sp };
        let cm = CostModel::default();
        let a = run_week(&w, &sp, &cm);
        let b = run_week(&m, &swapped, &cm);
        let flip = |s: Option<Side>| s.map(|s| if s == Side::Long { Side::Short } else { Side::Long });
        prop_assert_eq!(flip(a.side), b.side);
        prop_assert_eq!(a.exit_reason, b.exit_reason);
        prop_assert_eq!(a.pnl_points, b.pnl_points);
        if a.side.is_some() {
            prop_assert_eq!(to_points(a.exit_level), -to_points(b.exit_level));
        }
    }

    #[test]
    fn cumulative_equals_sum(weeks in prop::collection::vec(steps(), 0..12), sp in params()) {
        let ws: Vec<_> = weeks.iter().enumerate().map(|(i, s)| tick_week(i as i64, s)).collect();
        let r = run_backtest(&ws, &sp, &CostModel::default());
        let sum: Money = r.outcomes.iter().map(|o| o.pnl_currency).sum();
        prop_assert_eq!(r.total(), sum);
        prop_assert_eq!(r.cumulative.len(), ws.len());
    }

    #[test]
    fn grid_order_does_not_matter(weeks in prop::collection::vec(steps(), 1..5), seed in any::<u64>()) {
        let ws: Vec<_> = weeks.iter().enumerate().map(|(i, s)| tick_week(i as i64, s)).collect();
        let grid = ParamGrid { u: (2..12).collect(), d: (2..12).collect(), ts: vec![3, 6, 9], pc: PcAxis::Absolute(vec![4, 8, 12]) };
        let mut shuffled = grid.clone();
        let rot = |v: &mut Vec<u32>, k: u64| { let n = v.len(); v.rotate_left((k as usize) % n); v.reverse(); };
        rot(&mut shuffled.u, seed);
        rot(&mut shuffled.d, seed >> 8);
        rot(&mut shuffled.ts, seed >> 16);
        if let PcAxis::Absolute(pc) = &mut shuffled.pc { rot(pc, seed >> 24); }
        let cm = CostModel::default();
        prop_assert_eq!(optimize_grid(&ws, &grid, &cm).unwrap(), optimize_grid(&ws, &shuffled, &cm).unwrap());
    }
}

#[test]
fn optimizer_prefers_triggering_levels() {
    // Every week dips 12 pips then rallies 60: 10/10 goes long and takes the
    // profit call, 30/30 never opens.
    let mut s = vec![-1i8; 24];
    s.extend(vec![1i8; 144]);
    let ws: Vec<_> = (0..5).map(|i| tick_week(i, &s)).collect();
    let grid: ParamGrid = "u=10,30;d=10,30;ts=20;pc=25".parse().unwrap();
    let (best, mean) = optimize_grid(&ws, &grid, &CostModel::default()).unwrap();
    assert_eq!((best.u, best.d), (10, 10));
    assert!(mean > 0.0);
}

#[test]
fn constant_offset_keeps_argmax() {
    let ou = OUParams::new(1.3, 5.0, 0.01).unwrap();
    let ws = tick_weeks(&SyntheticConfig { substeps: 2, ..SyntheticConfig::new(vec![Regime { weeks: 6, ou }], 1.3, 3) }).unwrap();
    let grid: ParamGrid = "u=10..30:5;d=10..30:5;ts=10..30:10;pc=ts+0..10:5".parse().unwrap();
    let scores = evaluate_grid(&ws, &grid, &CostModel::default(), IntraBarOrder::default()).unwrap();
    let pick = |s: &[GridScore]| s.iter().copied().reduce(|a, b| if b.better_than(&a) { b } else { a }).unwrap();
    let shifted: Vec<GridScore> = scores.iter().map(|s| GridScore { total: s.total + Money(6 * 1_234_567), ..*s }).collect();
    assert_eq!(pick(&scores).params, pick(&shifted).params);
}

#[test]
fn simulated_ticks_match_brute_force() {
    let ou = OUParams::new(1.3, 5.0, 0.01).unwrap();
    let ws = tick_weeks(&SyntheticConfig::new(vec![Regime { weeks: 40, ou }], 1.3, 77)).unwrap();
    for sp in [StrategyParams::new(10, 10, 15, 20).unwrap(), StrategyParams::new(30, 25, 40, 35).unwrap()] {
        for w in &ws {
            let o = run_week(w, &sp, &CostModel::default());
            let r = common::scan_ticks(w, &sp);
            assert_eq!((o.exit_reason, o.pnl_points), (r.reason, r.pnl_points), "week {}", w.week_id);
        }
    }
}
