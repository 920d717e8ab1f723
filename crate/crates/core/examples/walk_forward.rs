//! Walk-forward grid optimisation over half-year periods.

use oustop::backtest::{walk_forward, CostModel, Lookback, ParamGrid, WalkForwardConfig};
use oustop::synthetic::{generate_weeks, Regime, SyntheticConfig};
use oustop::OUParams;

fn main() -> oustop::Result<()> {
    let ou = OUParams::new(1.3, 5.0, 0.01)?;
    let weeks = generate_weeks(&SyntheticConfig::new(vec![Regime { weeks: 104, ou }], 1.3, 11))?;
    let grid: ParamGrid = "u=10..60:5;d=10..60:5;ts=40..70:10;pc=ts+0..15:5".parse()?;
    let cfg = WalkForwardConfig { period_weeks: 26, ..WalkForwardConfig::new(Lookback::Periods(1), grid) };
    print!("{}", walk_forward(&weeks, &cfg, &CostModel::default())?.to_csv());
    Ok(())
}
