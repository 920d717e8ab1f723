//! Account-currency accounting for one position per week.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Sub};

use serde::{Deserialize, Serialize};

use super::session::POINTS_PER_PIP;
use crate::error::{invalid, Result};

/// Account-currency amount in millionths.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Money(pub i64);

const MICROS: i64 = 1_000_000;

impl Money {
    pub const ZERO: Money = Money(0);

    pub fn from_f64(amount: f64) -> Self {
        Money((amount * MICROS as f64).round() as i64)
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / MICROS as f64
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        write!(f, "{sign}{}.{:06}", abs / MICROS as u64, abs % MICROS as u64)
    }
}

impl Add for Money {
    type Output = Money;
    fn add(self, rhs: Money) -> Money {
        Money(self.0 + rhs.0)
    }
}

impl Sub for Money {
    type Output = Money;
    fn sub(self, rhs: Money) -> Money {
        Money(self.0 - rhs.0)
    }
}

impl AddAssign for Money {
    fn add_assign(&mut self, rhs: Money) {
        self.0 += rhs.0;
    }
}

impl Sum for Money {
    fn sum<I: Iterator<Item = Money>>(iter: I) -> Money {
        iter.fold(Money::ZERO, Add::add)
    }
}

/// Position size, leverage and overnight financing.
///
/// The value of one pip on a position opened at `open_level` is
/// `notional * leverage * 1e-4 / open_level`; each night held costs
/// `notional * overnight_commission_rate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub position_notional: f64,
    pub leverage: f64,
    pub overnight_commission_rate: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self { position_notional: 1000.0, leverage: 200.0, overnight_commission_rate: 0.0014 }
    }
}

impl CostModel {
    pub fn new(position_notional: f64, leverage: f64, overnight_commission_rate: f64) -> Result<Self> {
        let cm = Self { position_notional, leverage, overnight_commission_rate };
        cm.validate()?;
        Ok(cm)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("position_notional", self.position_notional),
            ("leverage", self.leverage),
            ("overnight_commission_rate", self.overnight_commission_rate),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Value of one pip, rounded to 1e-6 currency units.
    pub fn pip_value(&self, open_level: f64) -> Money {
        Money::from_f64(self.position_notional * self.leverage * 1e-4 / open_level)
    }

    pub fn overnight_charge(&self) -> Money {
        Money::from_f64(self.position_notional * self.overnight_commission_rate)
    }

    /// P&L of a trade from its result in points, converted once.
    pub fn trade_pnl(&self, pnl_points: i64, open_level: f64, nights: u32) -> Money {
        let gross = i128::from(pnl_points) * i128::from(self.pip_value(open_level).0);
        let d = i128::from(POINTS_PER_PIP);
        // Round half away from zero.
        let rounded = (gross + gross.signum() * d / 2) / d;
        Money(rounded as i64) - Money(self.overnight_charge().0 * i64::from(nights))
    }
}
