//! Checks the analytic return law against simulated paths.

use oustop::simulate::{mc_weekly_returns, SimConfig};
use oustop::stopped_max::{expected_weekly_return, pc_probability, StoppedMaxProblem};
use oustop::{stats, OUParams, PIP};

fn main() -> oustop::Result<()> {
    let (ts, pc) = (50.0, 50.0);
    let ou = OUParams::with_kappa(1.31, 965.25, 0.01)?;
    let prob = StoppedMaxProblem::new(1.3, ts * PIP, ou)?;
    // Steps small enough that the path moves ~1/100 of the stop per step.
    let dt = (ts * PIP / (100.0 * ou.sigma)).powi(2);
    let s = mc_weekly_returns(&SimConfig::new(ou, 1.3, 50_000, 7).with_dt(dt), ts, pc)?;
    println!("analytic E   {:+.3}", expected_weekly_return(&prob, ts, pc)?);
    println!("simulated E  {:+.3} +/- {:.3}", stats::mean(&s.values), stats::std_error(&s.values));
    println!("analytic P   {:.4}", pc_probability(&prob, pc * PIP)?);
    println!("simulated P  {:.4}", s.pc_frequency());
    Ok(())
}
