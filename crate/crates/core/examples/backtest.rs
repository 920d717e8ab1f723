//! Fixed-parameter weekly backtest on synthetic hourly candles.

use oustop::backtest::{run_backtest, CostModel, StrategyParams};
use oustop::synthetic::{generate_weeks, Regime, SyntheticConfig};
use oustop::OUParams;

fn main() -> oustop::Result<()> {
    let ou = OUParams::new(1.3, 5.0, 0.01)?;
    let weeks = generate_weeks(&SyntheticConfig::new(vec![Regime { weeks: 52, ou }], 1.3, 1))?;
    let sp = StrategyParams::new(20, 20, 50, 60)?;
    let res = run_backtest(&weeks, &sp, &CostModel::default());
    for o in res.outcomes.iter().take(8) {
        println!(
            "week {}  {:<5}  {:<13}  {:>5} pips  {:>10.2}",
            o.week_id,
            o.side.map_or("-", |s| s.as_str()),
            o.exit_reason.as_str(),
            o.pnl_pips(),
            o.pnl_currency.to_f64()
        );
    }
    println!("total {:.2}  mean weekly {:.2}", res.total().to_f64(), res.mean_weekly());
    Ok(())
}
