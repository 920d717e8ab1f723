//! Exhaustive grid search over `(U, D, TS, PC)`.
//!
//! The entry of a week depends on `U` and `D` only through the first bar
//! touching each level, so the position management is evaluated once per
//! distinct entry and `(TS, PC)` pair and then shared by every `(U, D)` that
//! leads to it. Totals are kept in integer currency micro-units, which makes
//! the reduction exact and independent of evaluation order.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use super::cost::{CostModel, Money};
use super::engine::{manage_position, pick_side, settle, Entry, IntraBarOrder, Side, StrategyParams};
use super::session::{pips_to_points, WeekSession};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PcAxis {
    Absolute(Vec<u32>),
    /// Offsets added to each TS value.
    AboveTs(Vec<u32>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamGrid {
    pub u: Vec<u32>,
    pub d: Vec<u32>,
    pub ts: Vec<u32>,
    pub pc: PcAxis,
}

impl Default for ParamGrid {
    fn default() -> Self {
        Self {
            u: (10..=60).collect(),
            d: (10..=60).collect(),
            ts: (40..=70).collect(),
            pc: PcAxis::AboveTs((0..=15).collect()),
        }
    }
}

fn normalized(v: &[u32]) -> Vec<u32> {
    let mut v = v.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

impl ParamGrid {
    pub fn single(sp: StrategyParams) -> Self {
        Self { u: vec![sp.u], d: vec![sp.d], ts: vec![sp.ts], pc: PcAxis::Absolute(vec![sp.pc]) }
    }

    /// Sorted, deduplicated `(TS, PC)` pairs.
    pub fn stop_pairs(&self) -> Vec<(u32, u32)> {
        let ts = normalized(&self.ts);
        let mut pairs: Vec<(u32, u32)> = match &self.pc {
            PcAxis::Absolute(pc) => {
                let pc = normalized(pc);
                ts.iter().flat_map(|&t| pc.iter().map(move |&p| (t, p))).collect()
            }
            PcAxis::AboveTs(off) => {
                let off = normalized(off);
                ts.iter().flat_map(|&t| off.iter().map(move |&o| (t, t + o))).collect()
            }
        };
        pairs.sort_unstable();
        pairs.dedup();
        pairs
    }

    pub fn len(&self) -> usize {
        normalized(&self.u).len() * normalized(&self.d).len() * self.stop_pairs().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        if self.is_empty() {
            return Err(invalid("parameter grid is empty"));
        }
        let (u, d) = (normalized(&self.u), normalized(&self.d));
        for (ts, pc) in self.stop_pairs() {
            StrategyParams::new(u[0], d[0], ts, pc)?;
        }
        if u[0] == 0 || d[0] == 0 {
            return Err(invalid("U and D must be positive"));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<StrategyParams> {
        let (u, d) = (normalized(&self.u), normalized(&self.d));
        let pairs = self.stop_pairs();
        let mut out = Vec::with_capacity(self.len());
        for &uu in &u {
            for &dd in &d {
                for &(ts, pc) in &pairs {
                    out.push(StrategyParams { u: uu, d: dd, ts, pc });
                }
            }
        }
        out
    }
}

fn parse_axis(s: &str) -> Result<Vec<u32>> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        let num = |t: &str| t.trim().parse::<u32>().map_err(|_| invalid(format!("bad grid value '{t}'")));
        if let Some((lo, rest)) = part.split_once("..") {
            let (hi, step) = match rest.split_once(':') {
                Some((hi, st)) => (num(hi)?, num(st)?),
                None => (num(rest)?, 1),
            };
            let lo = num(lo)?;
            if step == 0 || hi < lo {
                return Err(invalid(format!("bad grid range '{part}'")));
            }
            out.extend((lo..=hi).step_by(step as usize));
        } else {
            out.push(num(part)?);
        }
    }
    Ok(out)
}

/// Parses `u=10..60;d=10..60;ts=40..70;pc=ts+0..15`. Each axis is a comma
/// separated list of values or `lo..hi[:step]` ranges; `pc=ts+...` gives
/// offsets above TS. Missing axes keep their default.
impl FromStr for ParamGrid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut g = ParamGrid::default();
        for item in s.split(';').map(str::trim).filter(|t| !t.is_empty()) {
            let (key, val) = item.split_once('=').ok_or_else(|| invalid(format!("bad grid item '{item}'")))?;
            match key.trim().to_ascii_lowercase().as_str() {
                "u" => g.u = parse_axis(val)?,
                "d" => g.d = parse_axis(val)?,
                "ts" => g.ts = parse_axis(val)?,
                "pc" => {
                    let val = val.trim();
                    g.pc = match val.strip_prefix("ts+") {
                        Some(off) => PcAxis::AboveTs(parse_axis(off)?),
                        None => PcAxis::Absolute(parse_axis(val)?),
                    }
                }
                other => return Err(invalid(format!("unknown grid axis '{other}'"))),
            }
        }
        g.validate()?;
        Ok(g)
    }
}

fn fmt_axis(v: &[u32]) -> String {
    let v = normalized(v);
    if v.len() > 2 && v.windows(2).all(|w| w[1] == w[0] + 1) {
        format!("{}..{}", v[0], v[v.len() - 1])
    } else {
        v.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
    }
}

impl fmt::Display for ParamGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pc = match &self.pc {
            PcAxis::Absolute(v) => fmt_axis(v),
            PcAxis::AboveTs(v) => format!("ts+{}", fmt_axis(v)),
        };
        write!(f, "u={};d={};ts={};pc={}", fmt_axis(&self.u), fmt_axis(&self.d), fmt_axis(&self.ts), pc)
    }
}

/// Total P&L of one grid point over the evaluated weeks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GridScore {
    pub params: StrategyParams,
    pub total: Money,
    pub weeks: usize,
}

impl GridScore {
    pub fn mean_weekly(&self) -> f64 {
        if self.weeks == 0 {
            0.0
        } else {
            self.total.to_f64() / self.weeks as f64
        }
    }

    /// Ordering used to pick the winner: larger total, then smaller TS,
    /// smaller `U + D`, and finally the lexicographically smaller quadruple.
    pub fn better_than(&self, other: &GridScore) -> bool {
        let key = |s: &GridScore| {
            let p = s.params;
            (std::cmp::Reverse(s.total), p.ts, p.u + p.d, (p.u, p.d, p.ts, p.pc))
        };
        key(self) < key(other)
    }
}

// Which entry a `(U, D)` pair leads to in one week.
#[derive(Debug, Clone, Copy)]
enum Choice {
    None,
    Short(usize),
    Long(usize),
}

struct WeekEntries {
    short: Vec<Option<Entry>>,
    long: Vec<Option<Entry>>,
    choice: Vec<Choice>,
}

fn first_hits(session: &WeekSession, levels: impl Iterator<Item = i64>, up: bool) -> Vec<Option<usize>> {
    levels
        .map(|lvl| {
            session.bars().iter().position(|b| if up { b.high >= lvl } else { b.low <= lvl })
        })
        .collect()
}

fn week_entries(session: &WeekSession, u: &[u32], d: &[u32]) -> WeekEntries {
    let z = session.zero_level;
    let up: Vec<i64> = u.iter().map(|&p| z + pips_to_points(p)).collect();
    let down: Vec<i64> = d.iter().map(|&p| z - pips_to_points(p)).collect();
    let iu = first_hits(session, up.iter().copied(), true);
    let id = first_hits(session, down.iter().copied(), false);
    let short = iu
        .iter()
        .zip(&up)
        .map(|(i, &level)| i.map(|index| Entry { side: Side::Short, index, level }))
        .collect();
    let long = id
        .iter()
        .zip(&down)
        .map(|(i, &level)| i.map(|index| Entry { side: Side::Long, index, level }))
        .collect();
    let mut choice = Vec::with_capacity(u.len() * d.len());
    for (ui, hu) in iu.iter().enumerate() {
        for (di, hd) in id.iter().enumerate() {
            choice.push(match (*hu, *hd) {
                (None, None) => Choice::None,
                (Some(_), None) => Choice::Short(ui),
                (None, Some(_)) => Choice::Long(di),
                (Some(a), Some(b)) if a < b => Choice::Short(ui),
                (Some(a), Some(b)) if b < a => Choice::Long(di),
                (Some(a), Some(_)) => match pick_side(&session.bars()[a], up[ui], down[di]) {
                    Side::Short => Choice::Short(ui),
                    Side::Long => Choice::Long(di),
                },
            });
        }
    }
    WeekEntries { short, long, choice }
}

/// Scores every point of the grid. The result is ordered by `(U, D, TS, PC)`.
pub fn evaluate_grid(weeks: &[WeekSession], grid: &ParamGrid, cm: &CostModel, order: IntraBarOrder) -> Result<Vec<GridScore>> {
    grid.validate()?;
    let (u, d) = (normalized(&grid.u), normalized(&grid.d));
    let pairs = grid.stop_pairs();
    let entries: Vec<WeekEntries> = weeks.par_iter().map(|w| week_entries(w, &u, &d)).collect();
    let nud = u.len() * d.len();

    let per_pair: Vec<Vec<i64>> = pairs
        .par_iter()
        .map(|&(ts, pc)| {
            let mut totals = vec![0_i64; nud];
            let pnl = |w: &WeekSession, e: &Option<Entry>| {
                e.map(|e| settle(w, e, manage_position(w, e, ts, pc, order), cm).pnl_currency.0).unwrap_or(0)
            };
            for (w, we) in weeks.iter().zip(&entries) {
                let s: Vec<i64> = we.short.iter().map(|e| pnl(w, e)).collect();
                let l: Vec<i64> = we.long.iter().map(|e| pnl(w, e)).collect();
                for (t, c) in totals.iter_mut().zip(&we.choice) {
                    *t += match *c {
                        Choice::None => 0,
                        Choice::Short(i) => s[i],
                        Choice::Long(i) => l[i],
                    };
                }
            }
            totals
        })
        .collect();

    let mut out = Vec::with_capacity(nud * pairs.len());
    for (ui, &uu) in u.iter().enumerate() {
        for (di, &dd) in d.iter().enumerate() {
            for (pi, &(ts, pc)) in pairs.iter().enumerate() {
                out.push(GridScore {
                    params: StrategyParams { u: uu, d: dd, ts, pc },
                    total: Money(per_pair[pi][ui * d.len() + di]),
                    weeks: weeks.len(),
                });
            }
        }
    }
    Ok(out)
}

/// Picks the grid point with the largest mean weekly return in currency.
pub fn optimize_grid(weeks: &[WeekSession], grid: &ParamGrid, cm: &CostModel) -> Result<(StrategyParams, f64)> {
    optimize_grid_with(weeks, grid, cm, IntraBarOrder::default()).map(|s| (s.params, s.mean_weekly()))
}

pub fn optimize_grid_with(weeks: &[WeekSession], grid: &ParamGrid, cm: &CostModel, order: IntraBarOrder) -> Result<GridScore> {
    if weeks.is_empty() {
        return Err(Error::EmptyInput("no weeks to optimize over".into()));
    }
    let scores = evaluate_grid(weeks, grid, cm, order)?;
    let mut best = scores[0];
    for s in &scores[1..] {
        if s.better_than(&best) {
            best = *s;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backtest::engine::run_week_with;
    use crate::backtest::session::Bar;

    fn week(id: i64, path: &[i64]) -> WeekSession {
        let bars = path
            .iter()
            .enumerate()
            .map(|(i, p)| Bar::tick(1_704_661_200 + 600 * i as i64, 130_000 + 10 * p))
            .collect();
        WeekSession::new(id, bars).unwrap()
    }

    fn zigzag(id: i64, amp: i64) -> WeekSession {
        let mut p = vec![0];
        for k in 1..=amp {
            p.push(-k);
        }
        for k in (-amp + 1)..=amp {
            p.push(k);
        }
        for k in (-amp..amp).rev() {
            p.push(k);
        }
        week(id, &p)
    }

    #[test]
    fn parse_and_display() {
        let g: ParamGrid = "u=10..12;d=5,7;ts=40..50:5;pc=ts+0..2".parse().unwrap();
        assert_eq!(g.u, vec![10, 11, 12]);
        assert_eq!(g.ts, vec![40, 45, 50]);
        assert_eq!(g.len(), 3 * 2 * 3 * 3);
        let back: ParamGrid = g.to_string().parse().unwrap();
        assert_eq!(back.points(), g.points());
        assert!("u=0..3".parse::<ParamGrid>().is_err());
        assert!("x=1".parse::<ParamGrid>().is_err());
        assert!("ts=600".parse::<ParamGrid>().is_err());
    }

    #[test]
    fn default_grid_size() {
        assert_eq!(ParamGrid::default().len(), 51 * 51 * 31 * 16);
    }

    #[test]
    fn fast_evaluation_matches_direct_replay() {
        let weeks: Vec<_> = (0..6).map(|i| zigzag(i, 20 + 7 * i)).collect();
        let grid: ParamGrid = "u=5..30:5;d=5..30:5;ts=5..25:10;pc=5..40:7".parse().unwrap();
        let cm = CostModel::default();
        for order in [IntraBarOrder::ProfitFirst, IntraBarOrder::StopFirst] {
            for s in evaluate_grid(&weeks, &grid, &cm, order).unwrap() {
                let direct: Money = weeks.iter().map(|w| run_week_with(w, &s.params, &cm, order).pnl_currency).sum();
                assert_eq!(s.total, direct, "{:?}", s.params);
            }
        }
    }

    #[test]
    fn single_point_grid() {
        let sp = StrategyParams::new(10, 12, 20, 30).unwrap();
        let weeks = vec![zigzag(0, 30)];
        let (best, _) = optimize_grid(&weeks, &ParamGrid::single(sp), &CostModel::default()).unwrap();
        assert_eq!(best, sp);
    }

    #[test]
    fn empty_weeks_is_an_error() {
        assert!(optimize_grid(&[], &ParamGrid::default(), &CostModel::default()).is_err());
    }

    #[test]
    fn tie_break_prefers_small_ts_then_small_u_plus_d() {
        // No trigger anywhere: every point scores zero.
        let weeks = vec![week(0, &[0, 1, 0, -1, 0])];
        let grid: ParamGrid = "u=20,10;d=30,10;ts=9,7;pc=3".parse().unwrap();
        let s = optimize_grid_with(&weeks, &grid, &CostModel::default(), IntraBarOrder::default()).unwrap();
        assert_eq!(s.params, StrategyParams { u: 10, d: 10, ts: 7, pc: 3 });
    }
}
