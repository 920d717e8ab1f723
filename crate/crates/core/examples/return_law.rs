//! Weekly-return law of a long position for a few long-run means.

use oustop::stopped_max::{expected_weekly_return, pc_probability, return_distribution, StoppedMaxProblem};
use oustop::{OUParams, PIP};

fn main() -> oustop::Result<()> {
    let (ts, pc) = (50.0, 50.0);
    println!("theta     E[pips]   P(PC)    mass");
    for theta in [1.25, 1.285, 1.3, 1.315, 1.335] {
        let ou = OUParams::with_kappa(theta, 965.25, 0.01)?;
        let prob = StoppedMaxProblem::new(1.3, ts * PIP, ou)?;
        let law = return_distribution(&prob, ts, pc, 512)?;
        println!(
            "{theta:<8}  {:>7.3}  {:.4}  {:.6}",
            expected_weekly_return(&prob, ts, pc)?,
            pc_probability(&prob, pc * PIP)?,
            law.total_mass()
        );
    }
    Ok(())
}
