//! Pins kappa so that P(PC) hits a target at one mean, then sweeps the mean.

use oustop::stopped_max::{expected_weekly_return, fit_kappa_to_pc_probability, pc_probability, StoppedMaxProblem};
use oustop::{OUParams, PIP};

fn main() -> oustop::Result<()> {
    let template = StoppedMaxProblem::new(1.3, 50.0 * PIP, OUParams::with_kappa(1.335, 1000.0, 0.01)?)?;
    let kappa = fit_kappa_to_pc_probability(&template, 50.0 * PIP, 0.43, 1.0, 1e5)?;
    println!("kappa = {kappa:.2}");
    for theta in [1.335, 1.295, 1.285, 1.275, 1.25] {
        let prob = StoppedMaxProblem::new(1.3, 50.0 * PIP, OUParams::with_kappa(theta, kappa, 0.01)?)?;
        println!(
            "theta {theta}: P(PC) {:.3}  E(PC=50) {:+.3}  E(PC=55) {:+.3}",
            pc_probability(&prob, 50.0 * PIP)?,
            expected_weekly_return(&prob, 50.0, 50.0)?,
            expected_weekly_return(&prob, 50.0, 55.0)?
        );
    }
    Ok(())
}
