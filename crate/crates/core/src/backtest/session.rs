//! Price samples grouped into trading weeks.
//!
//! Prices are held as integer points of 1e-5 (a tenth of a pip) so that
//! stop levels and P&L are exact.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub const POINT: f64 = 1e-5;
pub const POINTS_PER_PIP: i64 = 10;

/// Sunday 1970-01-04 21:00 UTC, the first trading-week boundary after the epoch.
pub const WEEK_ANCHOR: i64 = 3 * 86_400 + 21 * 3_600;
pub const WEEK_SECS: i64 = 7 * 86_400;
/// Sunday 21:00 to Friday 21:00 UTC.
pub const TRADING_SECS: i64 = 5 * 86_400;

pub fn to_points(price: f64) -> i64 {
    (price * 100_000.0).round() as i64
}

pub fn from_points(points: i64) -> f64 {
    points as f64 / 100_000.0
}

pub fn pips_to_points(pips: u32) -> i64 {
    i64::from(pips) * POINTS_PER_PIP
}

/// Trading week containing `ts`, or `None` for weekend timestamps.
pub fn week_of(ts: i64) -> Option<i64> {
    let rel = ts - WEEK_ANCHOR;
    (rel.rem_euclid(WEEK_SECS) < TRADING_SECS).then(|| rel.div_euclid(WEEK_SECS))
}

/// Unix time at which trading week `week_id` opens.
pub fn week_start(week_id: i64) -> i64 {
    WEEK_ANCHOR + week_id * WEEK_SECS
}

/// OHLC record in price units with a UTC timestamp in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candle {
    pub timestamp: i64,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
}

impl Candle {
    pub fn tick(timestamp: i64, price: f64) -> Self {
        Self { timestamp, open: price, high: price, low: price, close: price }
    }

    pub fn check(&self) -> std::result::Result<(), String> {
        let vals = [self.open, self.high, self.low, self.close];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err("non-finite price".into());
        }
        if !(self.low <= self.open.min(self.close) && self.open.max(self.close) <= self.high) {
            return Err(format!(
                "prices violate low <= open, close <= high (o={}, h={}, l={}, c={})",
                self.open, self.high, self.low, self.close
            ));
        }
        Ok(())
    }
}

/// A sample in integer points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Bar {
    pub ts: i64,
    pub open: i64,
    pub high: i64,
    pub low: i64,
    pub close: i64,
}

impl Bar {
    pub fn tick(ts: i64, price: i64) -> Self {
        Self { ts, open: price, high: price, low: price, close: price }
    }
}

impl From<&Candle> for Bar {
    fn from(c: &Candle) -> Self {
        Bar {
            ts: c.timestamp,
            open: to_points(c.open),
            high: to_points(c.high),
            low: to_points(c.low),
            close: to_points(c.close),
        }
    }
}

impl From<&Bar> for Candle {
    fn from(b: &Bar) -> Self {
        Candle {
            timestamp: b.ts,
            open: from_points(b.open),
            high: from_points(b.high),
            low: from_points(b.low),
            close: from_points(b.close),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WeekSession {
    pub week_id: i64,
    /// Reference level the entry triggers are measured from; the opening
    /// price of the week unless overridden.
    pub zero_level: i64,
    bars: Vec<Bar>,
}

impl WeekSession {
    pub fn new(week_id: i64, bars: Vec<Bar>) -> Result<Self> {
        if let Some(w) = bars.windows(2).find(|w| w[1].ts <= w[0].ts) {
            return Err(invalid(format!("week {week_id}: samples not strictly ordered at ts {}", w[1].ts)));
        }
        let zero_level = bars.first().map_or(0, |b| b.open);
        Ok(Self { week_id, zero_level, bars })
    }

    pub fn with_zero_level(mut self, zero_level: i64) -> Self {
        self.zero_level = zero_level;
        self
    }

    pub fn bars(&self) -> &[Bar] {
        &self.bars
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }
}

/// Groups time-ordered candles into trading weeks; weekend samples are dropped.
pub fn segment_weeks(candles: &[Candle]) -> Result<Vec<WeekSession>> {
    let mut weeks: Vec<WeekSession> = Vec::new();
    let mut current: Option<(i64, Vec<Bar>)> = None;
    let mut dropped = 0usize;
    for c in candles {
        let Some(week) = week_of(c.timestamp) else {
            dropped += 1;
            continue;
        };
        match current.as_mut() {
            Some((id, bars)) if *id == week => bars.push(Bar::from(c)),
            _ => {
                if let Some((id, bars)) = current.take() {
                    weeks.push(WeekSession::new(id, bars)?);
                }
                current = Some((week, vec![Bar::from(c)]));
            }
        }
    }
    if let Some((id, bars)) = current {
        weeks.push(WeekSession::new(id, bars)?);
    }
    if dropped > 0 {
        log::info!("dropped {dropped} samples outside trading hours");
    }
    Ok(weeks)
}

/// Flattens sessions back into candles, in order.
pub fn flatten_weeks(weeks: &[WeekSession]) -> Vec<Candle> {
    weeks.iter().flat_map(|w| w.bars().iter().map(Candle::from)).collect()
}
