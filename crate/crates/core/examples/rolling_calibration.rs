//! Rolling and expanding OU fits on a simulated hourly series.

use oustop::calibrate::{rolling_estimates, EstimationScheme, SampledSeries};
use oustop::simulate::sample_path;
use oustop::OUParams;

fn main() -> oustop::Result<()> {
    let ou = OUParams::new(1.3, 5.0, 0.01)?;
    let delta = 1.0 / 120.0;
    let series = SampledSeries::new(sample_path(&ou, 1.3, delta, 120 * 80, 5), delta)?;
    for scheme in [EstimationScheme::rolling(22.0)?, EstimationScheme::Expanding] {
        println!("{scheme:?}");
        for e in rolling_estimates(&series, scheme, 120 * 10) {
            let p = e.result.params;
            println!(
                "  week {:>5.1}  theta {:.5}  lambda {:>6.2}  sigma {:.5}  valid {}",
                e.time_weeks, p.theta, p.lambda, p.sigma, e.result.valid
            );
        }
    }
    Ok(())
}
