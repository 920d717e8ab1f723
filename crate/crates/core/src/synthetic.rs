//! Synthetic trading-week data driven by piecewise-constant OU regimes.
//!
//! Time runs in trading weeks only, so the weekend leaves a flat gap. Each
//! week has 120 hourly candles built from `substeps` exact OU transitions;
//! prices are rounded to the 1e-5 grid used by the backtester.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::backtest::session::{to_points, week_start, Bar, Candle, WeekSession};
use crate::error::{invalid, Result};
use crate::params::OUParams;
use crate::simulate::ExactStep;

pub const HOURS_PER_WEEK: usize = 120;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub weeks: usize,
    pub ou: OUParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub regimes: Vec<Regime>,
    pub start_price: f64,
    pub first_week: i64,
    pub substeps: usize,
    pub seed: u64,
}

impl SyntheticConfig {
    pub fn new(regimes: Vec<Regime>, start_price: f64, seed: u64) -> Self {
        // 2023-01-01 21:00 UTC.
        Self { regimes, start_price, first_week: 2765, substeps: 12, seed }
    }

    pub fn total_weeks(&self) -> usize {
        self.regimes.iter().map(|r| r.weeks).sum()
    }

    fn validate(&self) -> Result<()> {
        if self.substeps == 0 {
            return Err(invalid("substeps must be positive"));
        }
        if !(self.start_price.is_finite() && self.start_price > 0.0) {
            return Err(invalid("start price must be positive"));
        }
        Ok(())
    }
}

/// Sub-hourly OU path as integer points, `substeps * 120` transitions per
/// week, with the starting point of every week included.
fn generate_points(cfg: &SyntheticConfig) -> Result<Vec<Vec<i64>>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = HOURS_PER_WEEK * cfg.substeps;
    let dt = 1.0 / n as f64;
    let mut s = cfg.start_price;
    let mut weeks = Vec::with_capacity(cfg.total_weeks());
    for r in &cfg.regimes {
        let step = ExactStep::new(&r.ou, dt);
        for _ in 0..r.weeks {
            let mut pts = Vec::with_capacity(n + 1);
            pts.push(to_points(s));
            for _ in 0..n {
                s = step.apply(s, StandardNormal.sample(&mut rng));
                pts.push(to_points(s));
            }
            weeks.push(pts);
        }
    }
    Ok(weeks)
}

/// Hourly OHLC candles for the whole configuration.
pub fn generate_candles(cfg: &SyntheticConfig) -> Result<Vec<Candle>> {
    Ok(generate_weeks(cfg)?.iter().flat_map(|w| w.bars().iter().map(Candle::from)).collect())
}

pub fn generate_weeks(cfg: &SyntheticConfig) -> Result<Vec<WeekSession>> {
    let k = cfg.substeps;
    generate_points(cfg)?
        .into_iter()
        .enumerate()
        .map(|(i, pts)| {
            let id = cfg.first_week + i as i64;
            let t0 = week_start(id);
            let bars = (0..HOURS_PER_WEEK)
                .map(|h| {
                    let seg = &pts[h * k..=(h + 1) * k];
                    Bar {
                        ts: t0 + 3_600 * h as i64,
                        open: seg[0],
                        high: *seg.iter().max().unwrap(),
                        low: *seg.iter().min().unwrap(),
                        close: seg[k],
                    }
                })
                .collect();
            WeekSession::new(id, bars)
        })
        .collect()
}

/// Tick-level weeks: one sample per transition, spaced evenly over the
/// trading week.
pub fn tick_weeks(cfg: &SyntheticConfig) -> Result<Vec<WeekSession>> {
    let n = (HOURS_PER_WEEK * cfg.substeps) as i64;
    let spacing = 432_000 / n;
    if spacing == 0 {
        return Err(invalid("too many ticks per week for one-second timestamps"));
    }
    generate_points(cfg)?
        .into_iter()
        .enumerate()
        .map(|(i, pts)| {
            let id = cfg.first_week + i as i64;
            let t0 = week_start(id);
            let bars = pts.iter().enumerate().map(|(j, &p)| Bar::tick(t0 + spacing * j as i64, p)).collect();
            WeekSession::new(id, bars)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backtest::session::{segment_weeks, week_of};

    fn cfg(seed: u64) -> SyntheticConfig {
        let ou = OUParams::new(1.3, 5.0, 0.01).unwrap();
        SyntheticConfig::new(vec![Regime { weeks: 3, ou }], 1.3, seed)
    }

    #[test]
    fn candles_segment_back_into_weeks() {
        let candles = generate_candles(&cfg(1)).unwrap();
        assert_eq!(candles.len(), 3 * HOURS_PER_WEEK);
        for c in &candles {
            c.check().unwrap();
            assert!(week_of(c.timestamp).is_some());
        }
        let weeks = segment_weeks(&candles).unwrap();
        assert_eq!(weeks, generate_weeks(&cfg(1)).unwrap());
    }

    #[test]
    fn deterministic_and_seed_dependent() {
        assert_eq!(generate_candles(&cfg(4)).unwrap(), generate_candles(&cfg(4)).unwrap());
        assert_ne!(generate_candles(&cfg(4)).unwrap(), generate_candles(&cfg(5)).unwrap());
    }

    #[test]
    fn ticks_and_candles_share_the_path() {
        let c = generate_weeks(&cfg(2)).unwrap();
        let t = tick_weeks(&cfg(2)).unwrap();
        for (cw, tw) in c.iter().zip(&t) {
            assert_eq!(cw.zero_level, tw.zero_level);
            assert_eq!(cw.bars().last().unwrap().close, tw.bars().last().unwrap().close);
            let hi = tw.bars().iter().map(|b| b.high).max().unwrap();
            assert_eq!(hi, cw.bars().iter().map(|b| b.high).max().unwrap());
        }
    }
}
