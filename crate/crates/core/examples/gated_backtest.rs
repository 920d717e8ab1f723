//! Model-gated backtest across a regime shift, with the profit-call report.

use oustop::backtest::{pc_frequency_report, run_backtest, run_gated_backtest, CostModel, GateConfig, StrategyParams};
use oustop::calibrate::EstimationScheme;
use oustop::synthetic::{generate_weeks, Regime, SyntheticConfig};
use oustop::OUParams;

fn main() -> oustop::Result<()> {
    let regimes = vec![
        Regime { weeks: 8, ou: OUParams::new(1.30, 3.0, 0.006)? },
        Regime { weeks: 16, ou: OUParams::new(1.10, 0.3, 0.004)? },
    ];
    let weeks = generate_weeks(&SyntheticConfig::new(regimes, 1.3, 4))?;
    let sp = StrategyParams::new(20, 20, 30, 40)?;
    let cm = CostModel::default();
    let plain = run_backtest(&weeks, &sp, &cm);
    let (gated, preds) = run_gated_backtest(&weeks, &sp, &cm, EstimationScheme::rolling(4.0)?, &GateConfig::default());
    println!("plain total {:.2}  gated total {:.2}", plain.total().to_f64(), gated.total().to_f64());
    for p in &preds {
        println!("week {}  {}", p.week_id, p.decision.map_or("no entry", |d| d.as_str()));
    }
    let probs: Vec<Option<f64>> = preds.iter().map(|p| p.prediction.map(|x| x.pc_probability)).collect();
    let r = pc_frequency_report(&probs, &plain.outcomes, None)?;
    println!("predicted PC frequency {:.3} +/- {:.3}, actual {:.3} over {} weeks", r.theoretical_mean, r.frequency_std(), r.actual_frequency, r.n);
    Ok(())
}
