//! Command-line front end: argument and config-file handling, and one
//! function per command producing CSV or JSON text.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::backtest::gate::{predict_weeks, run_gated_backtest, GateConfig};
use crate::backtest::grid::{optimize_grid_with, ParamGrid};
use crate::backtest::pc_report::PcComparison;
use crate::backtest::walk_forward::{walk_forward, Lookback, WalkForwardConfig, DEFAULT_PERIOD_WEEKS};
use crate::backtest::{run_backtest, BacktestResult, CostModel, IntraBarOrder, Side, StrategyParams, WeekSession};
use crate::calibrate::{rolling_estimates, EstimationScheme, SampledSeries};
use crate::error::{invalid, Error, Result};
use crate::io::{candles_to_csv, ingest, write_output};
use crate::params::{OUParams, PIP};
use crate::simulate::{mc_weekly_returns, Horizon, SimConfig, DEFAULT_DT};
use crate::stopped_max::{expected_weekly_return, pc_probability, return_distribution, StoppedMaxProblem, DEFAULT_GRID};
use crate::synthetic::{generate_candles, Regime, SyntheticConfig, HOURS_PER_WEEK};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Calibrate,
    Dist,
    Simulate,
    Backtest,
    Optimize,
    WalkForward,
    PcReport,
    Generate,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Order {
    #[default]
    ProfitFirst,
    StopFirst,
}

impl From<Order> for IntraBarOrder {
    fn from(o: Order) -> Self {
        match o {
            Order::ProfitFirst => IntraBarOrder::ProfitFirst,
            Order::StopFirst => IntraBarOrder::StopFirst,
        }
    }
}

/// Settings that may come from the command line or a TOML file. Every field
/// is optional here; `RunConfig::resolve` fills in defaults.
#[derive(Debug, Clone, Default, Parser, Deserialize)]
#[command(name = "oustop", version, allow_negative_numbers = true, about = "OU stopped-maximum analytics and weekly U/D/TS/PC backtests")]
#[serde(deny_unknown_fields)]
pub struct Args {
    /// TOML file with defaults for any of the options below.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    #[arg(long, value_enum)]
    pub command: Option<Command>,
    /// Price CSV with `timestamp,open,high,low,close` or `timestamp,price`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Output file; stdout when absent or `-`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub seed: Option<u64>,

    /// Short trigger, pips above the zero level.
    #[arg(long)]
    pub u: Option<u32>,
    /// Long trigger, pips below the zero level.
    #[arg(long)]
    pub d: Option<u32>,
    /// Trailing stop in pips.
    #[arg(long)]
    pub ts: Option<u32>,
    /// Profit call in pips.
    #[arg(long)]
    pub pc: Option<u32>,
    /// Search grid, e.g. `u=10..60;d=10..60;ts=40..70;pc=ts+0..15`.
    #[arg(long)]
    pub grid: Option<String>,
    /// `rolling:<weeks>` or `expanding`.
    #[arg(long)]
    pub scheme: Option<String>,
    #[arg(long)]
    pub pc_floor: Option<f64>,
    /// Apply the model gate in `backtest`.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub gated: Option<bool>,
    /// Walk-forward lookback in periods, or `expanding`.
    #[arg(long)]
    pub lookback: Option<String>,
    #[arg(long)]
    pub period_weeks: Option<usize>,
    #[arg(long, value_enum)]
    pub intra_bar: Option<Order>,
    /// Restrict `pc-report` to one side.
    #[arg(long)]
    pub side: Option<String>,

    #[arg(long)]
    pub theta: Option<f64>,
    /// Mean-reversion rate per week.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Volatility per square-root week.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Sets lambda = kappa * sigma^2.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Opening level of the analysed long position.
    #[arg(long)]
    pub x: Option<f64>,
    #[arg(long)]
    pub grid_size: Option<usize>,

    #[arg(long)]
    pub paths: Option<usize>,
    /// Monte Carlo step in weeks; chosen from the stop width when absent.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Simulation horizon in weeks; unbounded when absent.
    #[arg(long)]
    pub horizon: Option<f64>,

    /// Weeks to synthesise in `generate`.
    #[arg(long)]
    pub weeks: Option<usize>,

    #[arg(long)]
    pub notional: Option<f64>,
    #[arg(long)]
    pub leverage: Option<f64>,
    #[arg(long)]
    pub commission: Option<f64>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident, $($f:ident),*) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl Args {
    /// Fields set in `other` take precedence.
    pub fn overlay(mut self, other: &Args) -> Args {
        overlay!(self, other, command, data, out, format, seed, u, d, ts, pc, grid, scheme, pc_floor, gated, lookback,
            period_weeks, intra_bar, side, theta, lambda, sigma, kappa, x, grid_size, paths, dt, horizon, weeks,
            notional, leverage, commission);
        self
    }
}

pub fn load_config_file(path: &Path) -> Result<Args> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })?;
    toml::from_str(&text).map_err(|e| Error::Parse { path: path.into(), line: 0, msg: e.to_string() })
}

/// Fully resolved settings.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub seed: u64,
    pub sp: StrategyParams,
    pub grid: ParamGrid,
    pub scheme: EstimationScheme,
    pub gate: GateConfig,
    pub gated: bool,
    pub lookback: Lookback,
    pub period_weeks: usize,
    pub order: IntraBarOrder,
    pub side: Option<Side>,
    pub ou: OUParams,
    pub x: f64,
    pub grid_size: usize,
    pub paths: usize,
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub weeks: usize,
    pub cost: CostModel,
}

fn parse_lookback(s: &str) -> Result<Lookback> {
    match s.trim() {
        "expanding" => Ok(Lookback::Expanding),
        n => match n.parse::<usize>() {
            Ok(k) if k >= 1 => Ok(Lookback::Periods(k)),
            _ => Err(invalid(format!("lookback must be a positive count or 'expanding', got '{s}'"))),
        },
    }
}

fn parse_side(s: &str) -> Result<Option<Side>> {
    match s.trim() {
        "long" => Ok(Some(Side::Long)),
        "short" => Ok(Some(Side::Short)),
        "both" => Ok(None),
        other => Err(invalid(format!("side must be long, short or both, got '{other}'"))),
    }
}

impl RunConfig {
    /// Flags override the config file, which overrides the defaults.
    pub fn resolve(flags: &Args) -> Result<Self> {
        let merged = match &flags.config {
            Some(path) => load_config_file(path)?.overlay(flags),
            None => flags.clone(),
        };
        let a = merged;
        let command = a.command.ok_or_else(|| invalid("--command is required"))?;
        let sp = StrategyParams::new(a.u.unwrap_or(20), a.d.unwrap_or(20), a.ts.unwrap_or(50), a.pc.unwrap_or(50))?;
        let grid = match &a.grid {
            Some(g) => g.parse()?,
            None => ParamGrid::default(),
        };
        let scheme = match &a.scheme {
            Some(s) => s.parse()?,
            None => EstimationScheme::default(),
        };
        let sigma = a.sigma.unwrap_or(0.01);
        let theta = a.theta.unwrap_or(1.3);
        let ou = match (a.kappa, a.lambda) {
            (Some(_), Some(_)) => return Err(invalid("give either --kappa or --lambda, not both")),
            (Some(k), None) => OUParams::with_kappa(theta, k, sigma)?,
            (None, l) => OUParams::new(theta, l.unwrap_or(5.0), sigma)?,
        };
        let cost_default = CostModel::default();
        let cost = CostModel::new(
            a.notional.unwrap_or(cost_default.position_notional),
            a.leverage.unwrap_or(cost_default.leverage),
            a.commission.unwrap_or(cost_default.overnight_commission_rate),
        )?;
        let period_weeks = a.period_weeks.unwrap_or(DEFAULT_PERIOD_WEEKS);
        if period_weeks == 0 {
            return Err(invalid("period length must be positive"));
        }
        Ok(Self {
            command,
            data: a.data,
            out: a.out,
            format: a.format.unwrap_or_default(),
            seed: a.seed.unwrap_or(0),
            sp,
            grid,
            scheme,
            gate: GateConfig::new(a.pc_floor.unwrap_or(crate::backtest::gate::DEFAULT_PC_FLOOR))?,
            gated: a.gated.unwrap_or(false),
            lookback: parse_lookback(a.lookback.as_deref().unwrap_or("1"))?,
            period_weeks,
            order: a.intra_bar.unwrap_or_default().into(),
            side: parse_side(a.side.as_deref().unwrap_or("both"))?,
            ou,
            x: a.x.unwrap_or(1.3),
            grid_size: a.grid_size.unwrap_or(DEFAULT_GRID),
            paths: a.paths.unwrap_or(100_000),
            dt: a.dt,
            horizon: a.horizon,
            weeks: a.weeks.unwrap_or(182),
            cost,
        })
    }

    fn weeks(&self) -> Result<Vec<WeekSession>> {
        let path = self.data.as_ref().ok_or_else(|| invalid("--data is required for this command"))?;
        ingest(path)
    }
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn render(cfg: &RunConfig, csv: String, json: serde_json::Value) -> Result<String> {
    match cfg.format {
        Format::Csv => Ok(csv),
        Format::Json => serde_json::to_string_pretty(&json).map(|s| s + "\n").map_err(|e| Error::Serialize(e.to_string())),
    }
}

/// Runs the configured command and returns the text it would write.
pub fn execute(cfg: &RunConfig) -> Result<String> {
    match cfg.command {
        Command::Calibrate => cmd_calibrate(cfg),
        Command::Dist => cmd_dist(cfg),
        Command::Simulate => cmd_simulate(cfg),
        Command::Backtest => cmd_backtest(cfg),
        Command::Optimize => cmd_optimize(cfg),
        Command::WalkForward => cmd_walkforward(cfg),
        Command::PcReport => cmd_pcreport(cfg),
        Command::Generate => cmd_generate(cfg),
    }
}

pub fn cmd_calibrate(cfg: &RunConfig) -> Result<String> {
    let weeks = cfg.weeks()?;
    let values: Vec<f64> = weeks.iter().flat_map(crate::backtest::gate::hourly_closes).collect();
    let series = SampledSeries::new(values, crate::backtest::gate::HOURLY_DELTA)?;
    let est = rolling_estimates(&series, cfg.scheme, HOURS_PER_WEEK);
    let mut csv = String::from("time,theta,lambda,sigma,kappa,valid\n");
    for e in &est {
        let p = e.result.params;
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            num(e.time_weeks),
            num(p.theta),
            num(p.lambda),
            num(p.sigma),
            num(e.result.kappa()),
            e.result.valid
        );
    }
    let rows: Vec<_> = est
        .iter()
        .map(|e| {
            let p = e.result.params;
            json!({"time": e.time_weeks, "theta": p.theta, "lambda": p.lambda, "sigma": p.sigma,
                   "kappa": e.result.kappa(), "valid": e.result.valid})
        })
        .collect();
    render(cfg, csv, json!({"scheme": cfg.scheme.to_string(), "estimates": rows}))
}

fn long_problem(cfg: &RunConfig) -> Result<StoppedMaxProblem> {
    if !cfg.ou.is_usable() {
        return Err(Error::ModelNotViable(format!(
            "mean-reversion rate must be positive (lambda = {}); the OU model does not describe this period",
            cfg.ou.lambda
        )));
    }
    StoppedMaxProblem::new(cfg.x, f64::from(cfg.sp.ts) * PIP, cfg.ou)
}

pub fn cmd_dist(cfg: &RunConfig) -> Result<String> {
    let prob = long_problem(cfg)?;
    let (ts, pc) = (f64::from(cfg.sp.ts), f64::from(cfg.sp.pc));
    let dist = return_distribution(&prob, ts, pc, cfg.grid_size)?;
    let expected = expected_weekly_return(&prob, ts, pc)?;
    let p_pc = pc_probability(&prob, pc * PIP)?;
    let mut csv = String::from("kind,return_pips,value\n");
    for (y, f) in dist.grid.iter().zip(&dist.density) {
        let _ = writeln!(csv, "density,{},{}", num(*y), num(*f));
    }
    let _ = writeln!(csv, "atom,{},{}", num(pc), num(dist.pc_atom));
    let _ = writeln!(csv, "p_pc,,{}", num(p_pc));
    let _ = writeln!(csv, "expected_return,,{}", num(expected));
    let json = json!({
        "theta": cfg.ou.theta, "lambda": cfg.ou.lambda, "sigma": cfg.ou.sigma, "kappa": cfg.ou.kappa(),
        "x": cfg.x, "ts_pips": ts, "pc_pips": pc,
        "grid": dist.grid, "density": dist.density,
        "atom": {"return_pips": pc, "mass": dist.pc_atom},
        "p_pc": p_pc, "expected_return": expected,
    });
    render(cfg, csv, json)
}

/// Step giving about 100 steps per stop width, capped at the default.
pub fn auto_dt(ou: &OUParams, ts_pips: f64) -> f64 {
    (ts_pips * PIP / (100.0 * ou.sigma)).powi(2).min(DEFAULT_DT)
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<String> {
    let (ts, pc) = (f64::from(cfg.sp.ts), f64::from(cfg.sp.pc));
    let dt = cfg.dt.unwrap_or_else(|| auto_dt(&cfg.ou, ts));
    let mut sim = SimConfig::new(cfg.ou, cfg.x, cfg.paths, cfg.seed).with_dt(dt);
    if let Some(h) = cfg.horizon {
        sim = sim.with_horizon(Horizon::Weeks(h));
    }
    let s = mc_weekly_returns(&sim, ts, pc)?;
    let mean = crate::stats::mean(&s.values);
    let se = crate::stats::std_error(&s.values);
    let fields: [(&str, String); 10] = [
        ("seed", cfg.seed.to_string()),
        ("paths", s.n_paths.to_string()),
        ("dt", num(dt)),
        ("ts_pips", num(ts)),
        ("pc_pips", num(pc)),
        ("mean_return", num(mean)),
        ("std_error", num(se)),
        ("pc_frequency", num(s.pc_frequency())),
        ("censored", s.censored.to_string()),
        ("kappa", num(cfg.ou.kappa())),
    ];
    let mut csv = String::from("key,value\n");
    for (k, v) in &fields {
        let _ = writeln!(csv, "{k},{v}");
    }
    let json = json!({
        "seed": cfg.seed, "paths": s.n_paths, "dt": dt, "ts_pips": ts, "pc_pips": pc,
        "mean_return": mean, "std_error": se, "pc_frequency": s.pc_frequency(),
        "censored": s.censored, "kappa": cfg.ou.kappa(),
    });
    render(cfg, csv, json)
}

fn outcomes_output(cfg: &RunConfig, res: &BacktestResult) -> Result<String> {
    let mut csv = String::from("week,side,exit,open_level,exit_level,pnl_pips,pnl_currency,nights,cumulative\n");
    for (o, c) in res.outcomes.iter().zip(&res.cumulative) {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            o.week_id,
            o.side.map_or("none", Side::as_str),
            o.exit_reason.as_str(),
            if o.is_opened() { num(o.open_level) } else { String::new() },
            if o.is_opened() { num(o.exit_level) } else { String::new() },
            num(o.pnl_pips()),
            o.pnl_currency,
            o.nights_held,
            c
        );
    }
    let rows: Vec<_> = res
        .outcomes
        .iter()
        .zip(&res.cumulative)
        .map(|(o, c)| {
            json!({
                "week": o.week_id, "side": o.side.map_or("none", Side::as_str), "exit": o.exit_reason.as_str(),
                "open_level": o.is_opened().then_some(o.open_level), "exit_level": o.is_opened().then_some(o.exit_level),
                "pnl_pips": o.pnl_pips(), "pnl_currency": o.pnl_currency.to_f64(), "nights": o.nights_held,
                "cumulative": c.to_f64(),
            })
        })
        .collect();
    render(cfg, csv, json!({"params": cfg.sp, "total": res.total().to_f64(), "weeks": rows}))
}

pub fn cmd_backtest(cfg: &RunConfig) -> Result<String> {
    let weeks = cfg.weeks()?;
    let res = if cfg.gated {
        run_gated_backtest(&weeks, &cfg.sp, &cfg.cost, cfg.scheme, &cfg.gate).0
    } else {
        let outcomes = weeks.iter().map(|w| crate::backtest::run_week_with(w, &cfg.sp, &cfg.cost, cfg.order)).collect();
        BacktestResult::from_outcomes(outcomes)
    };
    outcomes_output(cfg, &res)
}

pub fn cmd_optimize(cfg: &RunConfig) -> Result<String> {
    let weeks = cfg.weeks()?;
    let best = optimize_grid_with(&weeks, &cfg.grid, &cfg.cost, cfg.order)?;
    let p = best.params;
    let csv = format!(
        "u,d,ts,pc,mean_weekly,total,weeks\n{},{},{},{},{},{},{}\n",
        p.u,
        p.d,
        p.ts,
        p.pc,
        num(best.mean_weekly()),
        best.total,
        best.weeks
    );
    let json = json!({"grid": cfg.grid.to_string(), "params": p, "mean_weekly": best.mean_weekly(),
                      "total": best.total.to_f64(), "weeks": best.weeks});
    render(cfg, csv, json)
}

pub fn cmd_walkforward(cfg: &RunConfig) -> Result<String> {
    let weeks = cfg.weeks()?;
    let mut wf = WalkForwardConfig::new(cfg.lookback, cfg.grid.clone());
    wf.period_weeks = cfg.period_weeks;
    wf.order = cfg.order;
    let report = walk_forward(&weeks, &wf, &cfg.cost)?;
    let json = serde_json::to_value(&report).map_err(|e| Error::Serialize(e.to_string()))?;
    render(cfg, report.to_csv(), json)
}

pub fn cmd_pcreport(cfg: &RunConfig) -> Result<String> {
    let weeks = cfg.weeks()?;
    let outcomes = run_backtest(&weeks, &cfg.sp, &cfg.cost).outcomes;
    let mut schemes = vec![cfg.scheme];
    if cfg.scheme != EstimationScheme::Expanding {
        schemes.push(EstimationScheme::Expanding);
    }
    let probs = schemes
        .iter()
        .map(|s| {
            let preds = predict_weeks(&weeks, &cfg.sp, *s, &cfg.gate);
            (s.to_string(), preds.iter().map(|p| p.prediction.map(|q| q.pc_probability)).collect())
        })
        .collect();
    let cmp = PcComparison::new(&outcomes, cfg.side, probs)?;
    let json = serde_json::to_value(&cmp).map_err(|e| Error::Serialize(e.to_string()))?;
    render(cfg, cmp.to_csv(), json)
}

pub fn cmd_generate(cfg: &RunConfig) -> Result<String> {
    let regime = Regime { weeks: cfg.weeks, ou: cfg.ou };
    let syn = SyntheticConfig::new(vec![regime], cfg.x, cfg.seed);
    let candles = generate_candles(&syn)?;
    match cfg.format {
        Format::Csv => Ok(candles_to_csv(&candles)),
        Format::Json => {
            let json = json!({"seed": cfg.seed, "theta": cfg.ou.theta, "lambda": cfg.ou.lambda,
                              "sigma": cfg.ou.sigma, "start": cfg.x, "candles": candles});
            render(cfg, String::new(), json)
        }
    }
}

/// Parses arguments, runs, writes the output, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let flags = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 4 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match RunConfig::resolve(&flags).and_then(|cfg| execute(&cfg).and_then(|text| write_output(cfg.out.as_deref(), &text))) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", json!({"error": {"category": e.category(), "message": e.to_string()}}));
            e.exit_code()
        }
    }
}
