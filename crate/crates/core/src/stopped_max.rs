//! Law of the running maximum of an OU process stopped when its drawdown
//! first reaches a fixed width, and the weekly-return law of a long position
//! closed by a trailing stop of that width or by a profit call.
//!
//! With scale density `Psi(u, z) = exp{kappa [(z - theta)^2 - (u - theta)^2]}`
//! the stopped maximum `M` started at `x` satisfies
//!
//! ```text
//! P_x[M <= v] = 1 - exp(-H(v)),   H(v) = int_x^v h(z) dz,
//! h(z)        = Psi(x, z) / int_{z-a}^{z} Psi(x, y) dy = 1 / int_{z-a}^{z} Psi(z, y) dy.
//! ```
//!
//! The second form of `h` is the one evaluated: the common factor cancels and
//! the remaining exponent is shifted by its maximum before exponentiation, so
//! the inner integral is accumulated in log space.

use crate::error::{invalid, Error, Result};
use crate::params::{OUParams, PIP};
use crate::quad;

/// Relative tolerance of the inner (denominator) integral.
pub const INNER_REL_TOL: f64 = 1e-10;
/// Relative tolerance of the outer (cumulative hazard) integral.
pub const OUTER_REL_TOL: f64 = 1e-8;
/// Tail mass below which the stopped-maximum support is truncated.
pub const TAIL_MASS: f64 = 1e-9;
/// Default number of grid points of a tabulated [`ReturnDistribution`].
pub const DEFAULT_GRID: usize = 512;
pub const MIN_GRID: usize = 64;

/// Exponent of the scale density, `ln Psi(u, z)`.
pub fn log_psi(u: f64, z: f64, ou: &OUParams) -> f64 {
    // (z - t)^2 - (u - t)^2 factored to avoid cancellation between squares.
    ou.kappa() * (z - u) * ((z - ou.theta) + (u - ou.theta))
}

/// `Psi(u, z)`; `None` when the value is not representable, in which case
/// callers must work with [`log_psi`].
pub fn psi(u: f64, z: f64, ou: &OUParams) -> Option<f64> {
    let v = log_psi(u, z, ou).exp();
    (v.is_finite() && v > 0.0).then_some(v)
}

/// A long position opened at `start` and closed by a trailing stop of width
/// `drawdown` (both in price units).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppedMaxProblem {
    pub start: f64,
    pub drawdown: f64,
    pub ou: OUParams,
}

impl StoppedMaxProblem {
    pub fn new(start: f64, drawdown: f64, ou: OUParams) -> Result<Self> {
        if !(start.is_finite() && drawdown.is_finite()) {
            return Err(invalid("start and drawdown must be finite"));
        }
        if drawdown <= 0.0 {
            return Err(invalid(format!("drawdown must be positive, got {drawdown}")));
        }
        // Goes through the constructor so non-finite parameters are caught.
        let ou = OUParams::new(ou.theta, ou.lambda, ou.sigma)?;
        Ok(Self { start, drawdown, ou })
    }
}

/// Natural log of `int_{z-a}^{z} Psi(z, y) dy`.
pub fn log_inner_integral(z: f64, prob: &StoppedMaxProblem) -> f64 {
    let a = prob.drawdown;
    let ou = &prob.ou;
    let lo = z - a;
    let exponent = |y: f64| log_psi(z, y, ou);
    // The exponent is quadratic in y, so its maximum on [lo, z] is at an end
    // point or at the vertex y = theta.
    let vertex = ou.theta.clamp(lo, z);
    let shift = exponent(z).max(exponent(lo)).max(exponent(vertex));
    let q = quad::integrate(|y| (exponent(y) - shift).exp(), lo, z, INNER_REL_TOL, 0.0);
    shift + q.value.ln()
}

/// Hazard rate `h(z)` of the stopped maximum.
pub fn hazard(z: f64, prob: &StoppedMaxProblem) -> f64 {
    (-log_inner_integral(z, prob)).exp()
}

/// `H(v) = int_x^v h(z) dz`; zero for `v <= start`.
pub fn cumulative_hazard(v: f64, prob: &StoppedMaxProblem) -> f64 {
    cumulative_hazard_between(prob.start, v, prob)
}

fn cumulative_hazard_between(from: f64, to: f64, prob: &StoppedMaxProblem) -> f64 {
    if to <= from {
        return 0.0;
    }
    quad::integrate(|z| hazard(z, prob), from, to, OUTER_REL_TOL, 0.0).value
}

/// `P_x[M <= v]`. Values below the start have probability zero.
pub fn running_max_cdf(v: f64, prob: &StoppedMaxProblem) -> f64 {
    if v <= prob.start {
        return 0.0;
    }
    -(-cumulative_hazard(v, prob)).exp_m1()
}

/// `P_x[M > v]`.
pub fn running_max_survival(v: f64, prob: &StoppedMaxProblem) -> f64 {
    (-cumulative_hazard(v, prob)).exp()
}

/// Density of the stopped maximum, `h(v) exp(-H(v))`.
pub fn running_max_pdf(v: f64, prob: &StoppedMaxProblem) -> f64 {
    if v < prob.start {
        return 0.0;
    }
    hazard(v, prob) * (-cumulative_hazard(v, prob)).exp()
}

/// Probability that the maximum reaches `start + pc` before the drawdown
/// stop fires, i.e. that the profit call is taken.
pub fn pc_probability(prob: &StoppedMaxProblem, pc: f64) -> Result<f64> {
    if !(pc > 0.0 && pc.is_finite()) {
        return Err(invalid(format!("profit call must be positive, got {pc}")));
    }
    Ok(running_max_survival(prob.start + pc, prob))
}

fn check_thresholds(prob: &StoppedMaxProblem, ts_pips: f64, pc_pips: f64) -> Result<()> {
    if !(ts_pips > 0.0 && pc_pips > 0.0 && ts_pips.is_finite() && pc_pips.is_finite()) {
        return Err(invalid("trailing stop and profit call must be positive"));
    }
    let ts_price = ts_pips * PIP;
    if (prob.drawdown - ts_price).abs() > 1e-9 * ts_price {
        return Err(Error::Inconsistent(format!(
            "drawdown {} does not match a trailing stop of {ts_pips} pips",
            prob.drawdown
        )));
    }
    Ok(())
}

/// Expected weekly return in pips of the long position:
/// `int_{-TS}^{PC-TS} y f(y) dy + PC * P(M - x >= PC)`, where `f` is the
/// stopped-maximum density shifted down by the trailing stop.
pub fn expected_weekly_return(prob: &StoppedMaxProblem, ts_pips: f64, pc_pips: f64) -> Result<f64> {
    check_thresholds(prob, ts_pips, pc_pips)?;
    let x = prob.start;
    let a = prob.drawdown;
    let pc = pc_pips * PIP;
    let continuous = quad::integrate(
        |v| (v - x - a) * running_max_pdf(v, prob),
        x,
        x + pc,
        OUTER_REL_TOL,
        1e-12,
    )
    .value;
    Ok(continuous / PIP + pc_pips * pc_probability(prob, pc)?)
}

/// Weekly-return law of the long position: a density on `[-TS, PC-TS]` plus
/// an atom at `PC`, all in pips.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnDistribution {
    /// Uniform grid of returns; the last point is `PC - TS`, where the
    /// density is the left limit.
    pub grid: Vec<f64>,
    /// Density per pip at each grid point.
    pub density: Vec<f64>,
    /// Continuous-part CDF at each grid point.
    pub cdf: Vec<f64>,
    pub pc_atom: f64,
    pub ts_pips: f64,
    pub pc_pips: f64,
}

impl ReturnDistribution {
    pub fn spacing(&self) -> f64 {
        self.grid[1] - self.grid[0]
    }

    /// Trapezoidal mass of the continuous part.
    pub fn continuous_mass(&self) -> f64 {
        trapezoid(&self.density, self.spacing())
    }

    pub fn total_mass(&self) -> f64 {
        self.continuous_mass() + self.pc_atom
    }

    /// Mean return from the tabulated law.
    pub fn mean(&self) -> f64 {
        let weighted: Vec<f64> = self.grid.iter().zip(&self.density).map(|(y, f)| y * f).collect();
        trapezoid(&weighted, self.spacing()) + self.pc_pips * self.pc_atom
    }

    /// Mixed-law CDF `P(R <= y)`, interpolated between grid points with the
    /// density as derivative.
    pub fn mixed_cdf(&self, y: f64) -> f64 {
        let n = self.grid.len();
        if y < self.grid[0] {
            return 0.0;
        }
        if y >= self.pc_pips {
            return 1.0;
        }
        if y >= self.grid[n - 1] {
            return self.cdf[n - 1];
        }
        let h = self.spacing();
        let i = (((y - self.grid[0]) / h) as usize).min(n - 2);
        hermite(
            (y - self.grid[i]) / h,
            h,
            self.cdf[i],
            self.cdf[i + 1],
            self.density[i],
            self.density[i + 1],
        )
    }
}

fn trapezoid(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let inner: f64 = values[1..n - 1].iter().sum();
    h * (inner + 0.5 * (values[0] + values[n - 1]))
}

// Cubic Hermite on a panel of width h at relative position t in [0, 1].
fn hermite(t: f64, h: f64, y0: f64, y1: f64, d0: f64, d1: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0
        + (t3 - 2.0 * t2 + t) * h * d0
        + (-2.0 * t3 + 3.0 * t2) * y1
        + (t3 - t2) * h * d1
}

/// Tabulates the weekly-return law on `grid_size` uniform points.
pub fn return_distribution(
    prob: &StoppedMaxProblem,
    ts_pips: f64,
    pc_pips: f64,
    grid_size: usize,
) -> Result<ReturnDistribution> {
    check_thresholds(prob, ts_pips, pc_pips)?;
    if grid_size < MIN_GRID {
        return Err(invalid(format!("grid size must be at least {MIN_GRID}, got {grid_size}")));
    }
    let x = prob.start;
    let pc = pc_pips * PIP;
    let last = (grid_size - 1) as f64;
    let levels: Vec<f64> = (0..grid_size).map(|k| x + pc * (k as f64 / last)).collect();

    let mut grid = Vec::with_capacity(grid_size);
    let mut density = Vec::with_capacity(grid_size);
    let mut cdf = Vec::with_capacity(grid_size);
    let mut cum = 0.0;
    for (k, &v) in levels.iter().enumerate() {
        if k > 0 {
            cum += cumulative_hazard_between(levels[k - 1], v, prob);
        }
        grid.push(pc_pips * (k as f64 / last) - ts_pips);
        density.push(hazard(v, prob) * (-cum).exp() * PIP);
        cdf.push(-(-cum).exp_m1());
    }
    Ok(ReturnDistribution {
        grid,
        density,
        cdf,
        pc_atom: pc_probability(prob, pc)?,
        ts_pips,
        pc_pips,
    })
}

/// Reflects a long problem into the one describing the short position:
/// the running minimum stopped at a drawup of `a` is minus the running
/// maximum of the reflected process stopped at a drawdown of `a`.
pub fn mirror_short(prob: &StoppedMaxProblem) -> StoppedMaxProblem {
    StoppedMaxProblem { start: -prob.start, drawdown: prob.drawdown, ou: prob.ou.mirrored() }
}

/// A level `v` above the start with `P[M > v] < tail`, found by stepping in
/// units of the drawdown. `None` if the hazard is too weak to reach it.
pub fn support_upper(prob: &StoppedMaxProblem, tail: f64) -> Option<f64> {
    let target = -tail.ln();
    let step = prob.drawdown;
    let mut v = prob.start;
    let mut cum = 0.0;
    for _ in 0..100_000 {
        cum += cumulative_hazard_between(v, v + step, prob);
        v += step;
        if cum >= target {
            return Some(v);
        }
    }
    None
}

/// Stopped-maximum CDF tabulated on a uniform grid with cubic Hermite
/// interpolation of the cumulative hazard. Used to compare against large
/// Monte Carlo samples without one quadrature per sample.
#[derive(Debug, Clone)]
pub struct StoppedMaxTable {
    start: f64,
    step: f64,
    cum_hazard: Vec<f64>,
    hazard: Vec<f64>,
}

impl StoppedMaxTable {
    pub fn new(prob: &StoppedMaxProblem, upper: f64, points: usize) -> Result<Self> {
        if !(upper > prob.start) || points < 2 {
            return Err(invalid("table needs an upper level above the start and at least two points"));
        }
        let step = (upper - prob.start) / (points - 1) as f64;
        let mut cum_hazard = Vec::with_capacity(points);
        let mut hazard_at = Vec::with_capacity(points);
        let mut cum = 0.0;
        for k in 0..points {
            let v = prob.start + step * k as f64;
            if k > 0 {
                cum += cumulative_hazard_between(v - step, v, prob);
            }
            cum_hazard.push(cum);
            hazard_at.push(hazard(v, prob));
        }
        Ok(Self { start: prob.start, step, cum_hazard, hazard: hazard_at })
    }

    pub fn cum_hazard(&self, v: f64) -> f64 {
        if v <= self.start {
            return 0.0;
        }
        let n = self.cum_hazard.len();
        let pos = (v - self.start) / self.step;
        if pos >= (n - 1) as f64 {
            let over = v - (self.start + self.step * (n - 1) as f64);
            return self.cum_hazard[n - 1] + self.hazard[n - 1] * over;
        }
        let i = pos as usize;
        hermite(
            pos - i as f64,
            self.step,
            self.cum_hazard[i],
            self.cum_hazard[i + 1],
            self.hazard[i],
            self.hazard[i + 1],
        )
    }

    pub fn cdf(&self, v: f64) -> f64 {
        -(-self.cum_hazard(v)).exp_m1()
    }
}

/// Finds the `lambda / sigma^2` ratio at which the profit-call probability
/// equals `target`, by bisection in `ln kappa` over `[lo, hi]`. The other
/// inputs are held fixed; `theta` is taken from `template.ou`.
pub fn fit_kappa_to_pc_probability(
    template: &StoppedMaxProblem,
    pc: f64,
    target: f64,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    if !(0.0 < lo && lo < hi) || !(0.0..=1.0).contains(&target) {
        return Err(invalid("kappa bracket must satisfy 0 < lo < hi and target in [0, 1]"));
    }
    let sigma = template.ou.sigma;
    let residual = |kappa: f64| -> Result<f64> {
        let ou = OUParams::with_kappa(template.ou.theta, kappa, sigma)?;
        let prob = StoppedMaxProblem { ou, ..*template };
        Ok(pc_probability(&prob, pc)? - target)
    };
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let (ra, rb) = (residual(lo)?, residual(hi)?);
    if ra * rb > 0.0 {
        return Err(invalid(format!(
            "profit-call probability {target} is not bracketed by kappa in [{lo}, {hi}]"
        )));
    }
    let increasing = rb > ra;
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        let r = residual(mid.exp())?;
        if (r > 0.0) == increasing {
            b = mid;
        } else {
            a = mid;
        }
        if b - a < 1e-13 {
            break;
        }
    }
    Ok((0.5 * (a + b)).exp())
}
