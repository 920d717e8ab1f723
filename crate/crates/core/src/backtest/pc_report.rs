//! Predicted versus realised profit-call frequency.
//!
//! With independent weekly outcomes the number of profit calls over `n`
//! opened positions is Poisson-Binomial with mean `sum p_i` and variance
//! `sum p_i (1 - p_i)`; the frequency has variance `sum p_i (1 - p_i) / n^2`.

use std::fmt::Write as _;

use serde::Serialize;

use super::engine::{ExitReason, Side, TradeOutcome};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PcFrequencyReport {
    pub n: usize,
    pub sum_p: f64,
    pub sum_pq: f64,
    /// `sum p_i / n`.
    pub theoretical_mean: f64,
    /// `sum p_i (1 - p_i) / n`, the mean Bernoulli variance per week.
    pub theoretical_variance: f64,
    /// `sum p_i (1 - p_i) / n^2`, the variance of the frequency itself.
    pub frequency_variance: f64,
    pub pc_count: usize,
    pub actual_frequency: f64,
    /// Sample variance (n - 1 denominator) of the weekly profit-call indicator.
    pub actual_sample_variance: f64,
}

impl PcFrequencyReport {
    pub fn frequency_std(&self) -> f64 {
        self.frequency_variance.sqrt()
    }
}

/// Builds the report from week-aligned probabilities and outcomes, keeping
/// weeks with an opened position (of `side`, when given) and a finite
/// probability.
pub fn pc_frequency_report(probs: &[Option<f64>], outcomes: &[TradeOutcome], side: Option<Side>) -> Result<PcFrequencyReport> {
    if probs.len() != outcomes.len() {
        return Err(invalid(format!("{} probabilities for {} weeks", probs.len(), outcomes.len())));
    }
    let mut ps = Vec::new();
    let mut hits = Vec::new();
    for (p, o) in probs.iter().zip(outcomes) {
        let Some(s) = o.side else { continue };
        if side.is_some_and(|want| want != s) {
            continue;
        }
        let Some(p) = p.filter(|p| p.is_finite()) else { continue };
        if !(0.0..=1.0).contains(&p) {
            return Err(invalid(format!("probability {p} out of range in week {}", o.week_id)));
        }
        ps.push(p);
        hits.push(o.exit_reason == ExitReason::ProfitCall);
    }
    report_from(&ps, &hits)
}

pub fn report_from(ps: &[f64], hits: &[bool]) -> Result<PcFrequencyReport> {
    if ps.is_empty() {
        return Err(Error::EmptyInput("no weeks with an opened position and a probability".into()));
    }
    assert_eq!(ps.len(), hits.len());
    let n = ps.len();
    let nf = n as f64;
    let sum_p: f64 = ps.iter().sum();
    let sum_pq: f64 = ps.iter().map(|p| p * (1.0 - p)).sum();
    let pc_count = hits.iter().filter(|h| **h).count();
    let freq = pc_count as f64 / nf;
    let actual_sample_variance = if n > 1 { freq * (1.0 - freq) * nf / (nf - 1.0) } else { 0.0 };
    Ok(PcFrequencyReport {
        n,
        sum_p,
        sum_pq,
        theoretical_mean: sum_p / nf,
        theoretical_variance: sum_pq / nf,
        frequency_variance: sum_pq / (nf * nf),
        pc_count,
        actual_frequency: freq,
        actual_sample_variance,
    })
}

/// Actual frequency over all opened weeks next to the model predictions of
/// several estimation schemes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PcComparison {
    pub actual_n: usize,
    pub actual_frequency: f64,
    pub actual_variance: f64,
    pub schemes: Vec<(String, PcFrequencyReport)>,
}

impl PcComparison {
    pub fn new(outcomes: &[TradeOutcome], side: Option<Side>, schemes: Vec<(String, Vec<Option<f64>>)>) -> Result<Self> {
        let hits: Vec<bool> = outcomes
            .iter()
            .filter(|o| o.side.is_some() && (side.is_none() || o.side == side))
            .map(|o| o.exit_reason == ExitReason::ProfitCall)
            .collect();
        let all = report_from(&vec![0.0; hits.len()], &hits)?;
        let schemes = schemes
            .into_iter()
            .map(|(name, probs)| pc_frequency_report(&probs, outcomes, side).map(|r| (name, r)))
            .collect::<Result<_>>()?;
        Ok(Self { actual_n: all.n, actual_frequency: all.actual_frequency, actual_variance: all.actual_sample_variance, schemes })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("quantity,actual");
        for (name, _) in &self.schemes {
            let _ = write!(s, ",{name}");
        }
        s.push('\n');
        let row = |s: &mut String, q: &str, a: f64, f: &dyn Fn(&PcFrequencyReport) -> f64| {
            let _ = write!(s, "{q},{a:?}");
            for (_, r) in &self.schemes {
                let _ = write!(s, ",{:?}", f(r));
            }
            s.push('\n');
        };
        row(&mut s, "pc_frequency", self.actual_frequency, &|r| r.theoretical_mean);
        row(&mut s, "variance", self.actual_variance, &|r| r.theoretical_variance);
        row(&mut s, "weeks", self.actual_n as f64, &|r| r.n as f64);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outcome(week: i64, side: Side, pc: bool) -> TradeOutcome {
        let mut o = TradeOutcome::not_opened(week);
        o.side = Some(side);
        o.exit_reason = if pc { ExitReason::ProfitCall } else { ExitReason::TrailingStop };
        o
    }

    #[test]
    fn half_probabilities() {
        let ps = vec![Some(0.5); 10];
        let os: Vec<_> = (0..10).map(|i| outcome(i, Side::Long, i % 3 == 0)).collect();
        let r = pc_frequency_report(&ps, &os, None).unwrap();
        assert_eq!(r.theoretical_mean, 0.5);
        assert_eq!(r.sum_pq, 2.5);
        assert_eq!(r.frequency_variance, 0.025);
        assert_eq!(r.pc_count, 4);
        assert_eq!(r.actual_frequency, 0.4);
    }

    #[test]
    fn filters_side_and_unopened() {
        let ps = vec![Some(0.2), Some(0.9), Some(0.4), None];
        let mut os = vec![outcome(0, Side::Long, true), outcome(1, Side::Short, true), TradeOutcome::not_opened(2)];
        os.push(outcome(3, Side::Long, false));
        let r = pc_frequency_report(&ps, &os, Some(Side::Long)).unwrap();
        assert_eq!(r.n, 1);
        assert_eq!(r.sum_p, 0.2);
    }

    #[test]
    fn errors() {
        assert!(pc_frequency_report(&[], &[], None).is_err());
        assert!(pc_frequency_report(&[Some(0.1)], &[], None).is_err());
        let os = vec![TradeOutcome::not_opened(0)];
        assert!(pc_frequency_report(&[Some(0.1)], &os, None).is_err());
    }

    #[test]
    fn comparison_layout() {
        let os = vec![outcome(0, Side::Long, true), outcome(1, Side::Short, false), TradeOutcome::not_opened(2)];
        let probs = vec![Some(0.3), Some(0.6), None];
        let c = PcComparison::new(&os, None, vec![("rolling:22".into(), probs.clone()), ("expanding".into(), probs)]).unwrap();
        let csv = c.to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "quantity,actual,rolling:22,expanding");
        assert!(lines[1].starts_with("pc_frequency,0.5,"));
    }
}
