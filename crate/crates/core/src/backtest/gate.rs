//! Model-based filter deciding whether a triggered position is worth taking.
//!
//! Each week the OU model is calibrated on hourly closes of the preceding
//! weeks only. A candidate position is skipped when the fit is not usable,
//! when its expected weekly return is not positive, or when the probability
//! of reaching the profit call is below a floor.

use rayon::prelude::*;
use serde::Serialize;

use super::cost::CostModel;
use super::engine::{find_entry, manage_position, settle, BacktestResult, IntraBarOrder, Side, StrategyParams, TradeOutcome};
use super::session::{from_points, WeekSession};
use crate::calibrate::{mle_fit, validity_gate, CalibrationResult, EstimationScheme, SampledSeries};
use crate::error::{invalid, Result};
use crate::params::PIP;
use crate::stopped_max::{expected_weekly_return, mirror_short, pc_probability, StoppedMaxProblem};
use crate::synthetic::HOURS_PER_WEEK;

pub const DEFAULT_PC_FLOOR: f64 = 0.30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GateConfig {
    pub pc_floor: f64,
}

impl Default for GateConfig {
    fn default() -> Self {
        Self { pc_floor: DEFAULT_PC_FLOOR }
    }
}

impl GateConfig {
    pub fn new(pc_floor: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&pc_floor) {
            return Err(invalid(format!("PC probability floor must be in [0, 1], got {pc_floor}")));
        }
        Ok(Self { pc_floor })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    NoCalibration,
    InvalidModel,
    NonPositiveExpectation,
    LowPcProbability,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GateDecision {
    Open,
    Skip(SkipReason),
}

impl GateDecision {
    pub fn is_open(self) -> bool {
        self == GateDecision::Open
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GateDecision::Open => "open",
            GateDecision::Skip(SkipReason::NoCalibration) => "skip_no_calibration",
            GateDecision::Skip(SkipReason::InvalidModel) => "skip_invalid_model",
            GateDecision::Skip(SkipReason::NonPositiveExpectation) => "skip_expectation",
            GateDecision::Skip(SkipReason::LowPcProbability) => "skip_pc_probability",
        }
    }
}

/// Model view of one candidate position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prediction {
    /// Expected weekly return in pips.
    pub expected_pips: f64,
    pub pc_probability: f64,
}

/// Expected return and profit-call probability of a position opened at
/// `level` (price units) under the calibrated parameters.
pub fn predict(cal: &CalibrationResult, side: Side, level: f64, sp: &StrategyParams) -> Result<Prediction> {
    let long = StoppedMaxProblem::new(level, f64::from(sp.ts) * PIP, cal.params)?;
    let prob = match side {
        Side::Long => long,
        Side::Short => mirror_short(&long),
    };
    let expected_pips = expected_weekly_return(&prob, f64::from(sp.ts), f64::from(sp.pc))?;
    let pc_probability = pc_probability(&prob, f64::from(sp.pc) * PIP)?;
    Ok(Prediction { expected_pips, pc_probability })
}

pub fn decide(pred: &Prediction, gate: &GateConfig) -> GateDecision {
    if !(pred.expected_pips.is_finite() && pred.pc_probability.is_finite()) {
        GateDecision::Skip(SkipReason::InvalidModel)
    } else if pred.expected_pips <= 0.0 {
        GateDecision::Skip(SkipReason::NonPositiveExpectation)
    } else if pred.pc_probability < gate.pc_floor {
        GateDecision::Skip(SkipReason::LowPcProbability)
    } else {
        GateDecision::Open
    }
}

pub fn gate_week(cal: &CalibrationResult, side: Side, level: f64, sp: &StrategyParams, gate: &GateConfig) -> GateDecision {
    if !validity_gate(cal) {
        return GateDecision::Skip(SkipReason::InvalidModel);
    }
    match predict(cal, side, level, sp) {
        Ok(p) => decide(&p, gate),
        Err(e) => {
            log::debug!("gate evaluation failed: {e}");
            GateDecision::Skip(SkipReason::InvalidModel)
        }
    }
}

/// Last close in each clock hour of the week.
pub fn hourly_closes(week: &WeekSession) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(HOURS_PER_WEEK);
    let mut hour = None;
    for b in week.bars() {
        let h = b.ts.div_euclid(3_600);
        let c = from_points(b.close);
        if hour == Some(h) {
            *out.last_mut().unwrap() = c;
        } else {
            out.push(c);
            hour = Some(h);
        }
    }
    out
}

/// Sampling step of hourly data in weeks of trading time.
pub const HOURLY_DELTA: f64 = 1.0 / HOURS_PER_WEEK as f64;

/// Calibration available at the start of every week, from earlier weeks only.
pub fn calibrate_weeks(weeks: &[WeekSession], scheme: EstimationScheme) -> Vec<Option<CalibrationResult>> {
    let closes: Vec<Vec<f64>> = weeks.par_iter().map(hourly_closes).collect();
    let need = scheme.min_weeks().round().max(1.0) as usize;
    (0..weeks.len())
        .into_par_iter()
        .map(|i| {
            if i < need {
                return None;
            }
            let from = match scheme {
                EstimationScheme::Rolling { .. } => i - need,
                EstimationScheme::Expanding => 0,
            };
            let values: Vec<f64> = closes[from..i].iter().flatten().copied().collect();
            let series = SampledSeries::new(values, HOURLY_DELTA).ok()?;
            mle_fit(&series).ok()
        })
        .collect()
}

/// Per-week diagnostics of the gated run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeekPrediction {
    pub week_id: i64,
    pub side: Option<Side>,
    pub open_level: Option<f64>,
    pub calibration: Option<CalibrationResult>,
    pub prediction: Option<Prediction>,
    pub decision: Option<GateDecision>,
}

/// Model predictions for the position each week would open, without gating.
pub fn predict_weeks(weeks: &[WeekSession], sp: &StrategyParams, scheme: EstimationScheme, gate: &GateConfig) -> Vec<WeekPrediction> {
    let cals = calibrate_weeks(weeks, scheme);
    weeks
        .par_iter()
        .zip(cals)
        .map(|(w, cal)| {
            let entry = find_entry(w, sp.u, sp.d);
            let mut wp = WeekPrediction {
                week_id: w.week_id,
                side: entry.map(|e| e.side),
                open_level: entry.map(|e| from_points(e.level)),
                calibration: cal,
                prediction: None,
                decision: None,
            };
            if let Some(e) = entry {
                let level = from_points(e.level);
                wp.decision = Some(match cal {
                    None => GateDecision::Skip(SkipReason::NoCalibration),
                    Some(c) => gate_week(&c, e.side, level, sp, gate),
                });
                if let Some(c) = cal.filter(validity_gate) {
                    wp.prediction = predict(&c, e.side, level, sp).ok();
                }
            }
            wp
        })
        .collect()
}

pub fn run_gated_backtest(
    weeks: &[WeekSession],
    sp: &StrategyParams,
    cm: &CostModel,
    scheme: EstimationScheme,
    gate: &GateConfig,
) -> (BacktestResult, Vec<WeekPrediction>) {
    let preds = predict_weeks(weeks, sp, scheme, gate);
    let outcomes: Vec<TradeOutcome> = weeks
        .iter()
        .zip(&preds)
        .map(|(w, p)| match (find_entry(w, sp.u, sp.d), p.decision) {
            (Some(e), Some(GateDecision::Open)) => {
                settle(w, e, manage_position(w, e, sp.ts, sp.pc, IntraBarOrder::default()), cm)
            }
            _ => TradeOutcome::not_opened(w.week_id),
        })
        .collect();
    (BacktestResult::from_outcomes(outcomes), preds)
}
