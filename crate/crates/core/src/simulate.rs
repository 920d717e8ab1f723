//! Exact-discretisation OU paths and the Monte Carlo counterparts of the
//! stopped-maximum and weekly-return laws.
//!
//! Paths are split into fixed chunks; chunk `k` draws from the ChaCha8
//! stream `k` of the configured seed, so results do not depend on how rayon
//! schedules the chunks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::params::{OUParams, PIP};

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_STEP_CAP: u64 = 100_000_000;
const CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    Unbounded,
    Weeks(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub ou: OUParams,
    pub x0: f64,
    /// Step in weeks.
    pub dt: f64,
    pub horizon: Horizon,
    pub n_paths: usize,
    pub seed: u64,
    /// Paths still running after this many steps are censored.
    pub step_cap: u64,
}

impl SimConfig {
    pub fn new(ou: OUParams, x0: f64, n_paths: usize, seed: u64) -> Self {
        Self { ou, x0, dt: DEFAULT_DT, horizon: Horizon::Unbounded, n_paths, seed, step_cap: DEFAULT_STEP_CAP }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_horizon(mut self, horizon: Horizon) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if self.n_paths == 0 {
            return Err(invalid("n_paths must be at least 1"));
        }
        if let Horizon::Weeks(w) = self.horizon {
            if !(w > 0.0 && w.is_finite()) {
                return Err(invalid(format!("horizon must be positive, got {w}")));
            }
        }
        if !self.x0.is_finite() {
            return Err(invalid("x0 must be finite"));
        }
        Ok(())
    }

    fn max_steps(&self) -> u64 {
        match self.horizon {
            Horizon::Unbounded => self.step_cap,
            Horizon::Weeks(w) => ((w / self.dt).round() as u64).clamp(1, self.step_cap),
        }
    }
}

/// Exact one-step transition of the OU process over `dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactStep {
    decay: f64,
    drift: f64,
    scale: f64,
}

impl ExactStep {
    pub fn new(ou: &OUParams, dt: f64) -> Self {
        let ldt = ou.lambda * dt;
        let decay = (-ldt).exp();
        // theta (1 - e^{-l dt}) and (1 - e^{-2 l dt}) / (2 l), both stable as l -> 0.
        let drift = -ou.theta * (-ldt).exp_m1();
        let var_factor = if ldt == 0.0 { dt } else { -(-2.0 * ldt).exp_m1() / (2.0 * ou.lambda) };
        Self { decay, drift, scale: ou.sigma * var_factor.sqrt() }
    }

    #[inline]
    pub fn apply(&self, s: f64, z: f64) -> f64 {
        s * self.decay + self.drift + self.scale * z
    }

    pub fn mean(&self, s: f64) -> f64 {
        s * self.decay + self.drift
    }

    pub fn std_dev(&self) -> f64 {
        self.scale
    }
}

/// One exact transition from `s` with standard normal draw `z`.
pub fn ou_step(s: f64, ou: &OUParams, dt: f64, z: f64) -> f64 {
    ExactStep::new(ou, dt).apply(s, z)
}

pub fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// Samples `n_steps` transitions from `x0`; the result has `n_steps + 1` points.
pub fn sample_path(ou: &OUParams, x0: f64, dt: f64, n_steps: usize, seed: u64) -> Vec<f64> {
    let step = ExactStep::new(ou, dt);
    let mut rng = chunk_rng(seed, 0);
    let mut out = Vec::with_capacity(n_steps + 1);
    let mut s = x0;
    out.push(s);
    for _ in 0..n_steps {
        s = step.apply(s, StandardNormal.sample(&mut rng));
        out.push(s);
    }
    out
}

/// Outcome of one simulated path.
#[derive(Debug, Clone, Copy, PartialEq)]
enum PathEnd {
    Value(f64),
    ProfitCall,
    Censored,
}

/// Sorted Monte Carlo sample plus bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct McSample {
    pub values: Vec<f64>,
    /// Paths that ended at the profit call (weekly returns only).
    pub pc_hits: usize,
    pub censored: usize,
    pub n_paths: usize,
}

impl McSample {
    pub fn censored_fraction(&self) -> f64 {
        self.censored as f64 / self.n_paths as f64
    }

    pub fn pc_frequency(&self) -> f64 {
        self.pc_hits as f64 / self.values.len() as f64
    }
}

fn run_paths<F>(cfg: &SimConfig, path: F, pc_value: f64) -> McSample
where
    F: Fn(&mut ChaCha8Rng) -> PathEnd + Sync,
{
    let n_chunks = cfg.n_paths.div_ceil(CHUNK);
    let per_chunk: Vec<Vec<PathEnd>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_rng(cfg.seed, c as u64);
            let len = CHUNK.min(cfg.n_paths - c * CHUNK);
            (0..len).map(|_| path(&mut rng)).collect()
        })
        .collect();

    let mut values = Vec::with_capacity(cfg.n_paths);
    let (mut pc_hits, mut censored) = (0, 0);
    for end in per_chunk.into_iter().flatten() {
        match end {
            PathEnd::Value(v) => values.push(v),
            PathEnd::ProfitCall => {
                pc_hits += 1;
                values.push(pc_value);
            }
            PathEnd::Censored => censored += 1,
        }
    }
    values.sort_by(f64::total_cmp);
    let sample = McSample { values, pc_hits, censored, n_paths: cfg.n_paths };
    if sample.censored_fraction() > 0.01 {
        log::warn!("{} of {} paths censored at the step cap", sample.censored, sample.n_paths);
    }
    sample
}

/// Simulates paths from `x0` until the drawdown from the running maximum
/// reaches `drawdown`, and records the maximum at that moment.
pub fn mc_stopped_max(cfg: &SimConfig, drawdown: f64) -> Result<McSample> {
    cfg.validate()?;
    if !(drawdown > 0.0) {
        return Err(invalid(format!("drawdown must be positive, got {drawdown}")));
    }
    let step = ExactStep::new(&cfg.ou, cfg.dt);
    let max_steps = cfg.max_steps();
    let x0 = cfg.x0;
    Ok(run_paths(
        cfg,
        |rng| {
            let (mut x, mut best) = (x0, x0);
            for _ in 0..max_steps {
                x = step.apply(x, StandardNormal.sample(rng));
                if x > best {
                    best = x;
                } else if best - x >= drawdown {
                    return PathEnd::Value(best);
                }
            }
            PathEnd::Censored
        },
        f64::NAN,
    ))
}

/// Simulates the long position opened at `x0`: returns in pips at the
/// trailing stop (`max - x0 - TS`), the profit call (`PC`), or the horizon
/// (`final - x0`) when one is set. The profit call is checked first.
pub fn mc_weekly_returns(cfg: &SimConfig, ts_pips: f64, pc_pips: f64) -> Result<McSample> {
    cfg.validate()?;
    if !(ts_pips > 0.0 && pc_pips > 0.0) {
        return Err(invalid("trailing stop and profit call must be positive"));
    }
    let step = ExactStep::new(&cfg.ou, cfg.dt);
    let max_steps = cfg.max_steps();
    let bounded = matches!(cfg.horizon, Horizon::Weeks(_));
    let x0 = cfg.x0;
    let ts = ts_pips * PIP;
    let pc_level = x0 + pc_pips * PIP;
    Ok(run_paths(
        cfg,
        |rng| {
            let (mut x, mut best) = (x0, x0);
            for _ in 0..max_steps {
                x = step.apply(x, StandardNormal.sample(rng));
                if x >= pc_level {
                    return PathEnd::ProfitCall;
                }
                if x > best {
                    best = x;
                } else if best - x >= ts {
                    return PathEnd::Value((best - x0) / PIP - ts_pips);
                }
            }
            if bounded {
                PathEnd::Value((x - x0) / PIP)
            } else {
                PathEnd::Censored
            }
        },
        pc_pips,
    ))
}
