//! Budget dynamics `x(t+1) = x(t) [1 + r(t) q(t)]` for a line-up of agents
//! sharing one return stream, repeated over independent trials.
//!
//! Within a step the order is fixed: every agent picks `q(t)` from what it
//! has seen up to `t-1`, then `r(t)` is revealed, budgets are updated, and
//! finally the agents learn from `r(t)`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ga::{GaConfig, Population};
use crate::policy::{act_constant, act_ramp_rect, act_square_wave, Mapping, QBounds, RampRect};
use crate::predictors::{IncrementalUpdate, MovingAverage, MovingLeastSquares, Predictor};
use crate::returns::{generate_series, ReturnParams};
use crate::rng::{RngStream, RETURNS_LANE};

pub const DEFAULT_STEPS: u64 = 100_000;
pub const DEFAULT_TRIALS: u64 = 100;
/// Constant fraction used by the reference strategy when none is given.
pub const DEFAULT_Q0: f64 = 1.0;

/// One investment strategy and its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum StrategySpec {
    Constant { q0: f64 },
    MovingAverage { memory: usize, mapping: Mapping },
    MovingLeastSquares { memory: usize, mapping: Mapping },
    Incremental { gamma: f64, mapping: Mapping },
    Genetic(GaConfig),
    SquareWave { period: u64 },
    RampRect(RampRect),
}

impl StrategySpec {
    pub fn label(&self) -> &'static str {
        match self {
            StrategySpec::Constant { .. } => "Q0",
            StrategySpec::MovingAverage { .. } => "MA",
            StrategySpec::MovingLeastSquares { .. } => "MLS",
            StrategySpec::Incremental { .. } => "IUR",
            StrategySpec::Genetic(_) => "GA",
            StrategySpec::SquareWave { .. } => "SW",
            StrategySpec::RampRect(_) => "RR",
        }
    }

    /// Tuned MA: M = 5 when risk-seeking, M = 2 when risk-avoiding.
    pub fn tuned_ma(mapping: Mapping) -> Self {
        let memory = match mapping {
            Mapping::RiskSeeking => 5,
            Mapping::RiskAvoiding => 2,
        };
        StrategySpec::MovingAverage { memory, mapping }
    }

    pub fn tuned_mls(mapping: Mapping) -> Self {
        StrategySpec::MovingLeastSquares { memory: 25, mapping }
    }

    pub fn tuned_iur(mapping: Mapping) -> Self {
        StrategySpec::Incremental { gamma: 0.5, mapping }
    }

    /// Q0, MA, MLS, IUR, GA and SW with their tuned parameters.
    pub fn tuned_lineup(mapping: Mapping, period: u32, q0: f64) -> Result<Vec<Self>> {
        Ok(vec![
            StrategySpec::Constant { q0 },
            Self::tuned_ma(mapping),
            Self::tuned_mls(mapping),
            Self::tuned_iur(mapping),
            StrategySpec::Genetic(GaConfig::tuned(period as usize)?),
            StrategySpec::SquareWave { period: u64::from(period) },
        ])
    }

    pub fn validate(&self, bounds: &QBounds) -> Result<()> {
        match *self {
            StrategySpec::Constant { q0 } => act_constant(q0, bounds).map(drop),
            StrategySpec::MovingAverage { memory, .. } => MovingAverage::new(memory).map(drop),
            StrategySpec::MovingLeastSquares { memory, .. } => MovingLeastSquares::new(memory).map(drop),
            StrategySpec::Incremental { gamma, .. } => IncrementalUpdate::new(gamma).map(drop),
            StrategySpec::Genetic(_) | StrategySpec::RampRect(_) => Ok(()),
            StrategySpec::SquareWave { period } => act_square_wave(period, 0, bounds).map(drop),
        }
    }

    fn build(&self, bounds: &QBounds, mut rng: RngStream) -> Result<Agent> {
        self.validate(bounds)?;
        Ok(match *self {
            StrategySpec::Constant { q0 } => Agent::Constant(q0),
            StrategySpec::MovingAverage { memory, mapping } => Agent::Predictive {
                predictor: AnyPredictor::Ma(MovingAverage::new(memory)?),
                mapping,
            },
            StrategySpec::MovingLeastSquares { memory, mapping } => Agent::Predictive {
                predictor: AnyPredictor::Mls(MovingLeastSquares::new(memory)?),
                mapping,
            },
            StrategySpec::Incremental { gamma, mapping } => Agent::Predictive {
                predictor: AnyPredictor::Iur(IncrementalUpdate::new(gamma)?),
                mapping,
            },
            StrategySpec::Genetic(cfg) => Agent::Genetic {
                population: Population::init(&cfg, bounds, &mut rng),
                cfg,
                rng,
            },
            StrategySpec::SquareWave { period } => Agent::SquareWave(period),
            StrategySpec::RampRect(rr) => Agent::RampRect(rr),
        })
    }
}

#[derive(Debug, Clone)]
enum AnyPredictor {
    Ma(MovingAverage),
    Mls(MovingLeastSquares),
    Iur(IncrementalUpdate),
}

impl Predictor for AnyPredictor {
    fn predict(&self) -> f64 {
        match self {
            AnyPredictor::Ma(p) => p.predict(),
            AnyPredictor::Mls(p) => p.predict(),
            AnyPredictor::Iur(p) => p.predict(),
        }
    }

    fn observe(&mut self, r: f64) -> Result<()> {
        match self {
            AnyPredictor::Ma(p) => p.observe(r),
            AnyPredictor::Mls(p) => p.observe(r),
            AnyPredictor::Iur(p) => p.observe(r),
        }
    }
}

#[derive(Debug, Clone)]
enum Agent {
    Constant(f64),
    Predictive {
        predictor: AnyPredictor,
        mapping: Mapping,
    },
    Genetic {
        population: Population,
        cfg: GaConfig,
        rng: RngStream,
    },
    SquareWave(u64),
    RampRect(RampRect),
}

impl Agent {
    fn choose(&self, t: u64, bounds: &QBounds) -> Result<f64> {
        match self {
            Agent::Constant(q0) => Ok(*q0),
            Agent::Predictive { predictor, mapping } => mapping.apply(predictor.predict(), bounds),
            Agent::Genetic { population, .. } => Ok(population.action(t, bounds)),
            Agent::SquareWave(period) => act_square_wave(*period, t, bounds),
            Agent::RampRect(rr) => Ok(act_ramp_rect(rr, t, bounds)),
        }
    }

    fn observe(&mut self, t: u64, r: f64, bounds: &QBounds) -> Result<()> {
        match self {
            Agent::Predictive { predictor, .. } => predictor.observe(r),
            Agent::Genetic { population, cfg, rng } => {
                population.accumulate_fitness(r, t);
                if population.generation_complete() {
                    population.evolve(cfg, bounds, rng)?;
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// One step of the budget dynamics on plain numbers.
pub fn step_budget(x: f64, q: f64, r: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::NonFinite("budget"));
    }
    if x < 0.0 {
        return Err(Error::OutOfRange { what: "budget", value: x, lo: 0.0, hi: f64::INFINITY });
    }
    Error::check_range("q", q, 0.0, 1.0)?;
    Error::check_range("r", r, -1.0, 1.0)?;
    Ok((x * (1.0 + r * q)).max(0.0))
}

/// Budget kept as `scaled * 2^exp2` so that runs of 10^5 steps neither
/// overflow nor underflow. Rescaling is by exact powers of two, so while the
/// budget stays within `1e±250` it equals the naive running product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wealth {
    scaled: f64,
    exp2: i64,
}

const RESCALE_ABOVE: f64 = 1e250;
const RESCALE_BELOW: f64 = 1e-250;
const RESCALE_BITS: i32 = 830;

impl Wealth {
    pub const ONE: Wealth = Wealth { scaled: 1.0, exp2: 0 };

    pub fn step(&mut self, q: f64, r: f64) {
        self.scaled *= (1.0 + r * q).max(0.0);
        if self.scaled > RESCALE_ABOVE {
            self.scaled *= 2f64.powi(-RESCALE_BITS);
            self.exp2 += i64::from(RESCALE_BITS);
        } else if self.scaled > 0.0 && self.scaled < RESCALE_BELOW {
            self.scaled *= 2f64.powi(RESCALE_BITS);
            self.exp2 -= i64::from(RESCALE_BITS);
        }
    }

    pub fn log10(&self) -> f64 {
        self.scaled.log10() + self.exp2 as f64 * std::f64::consts::LOG10_2
    }

    /// Plain value; saturates to `inf` or `0` outside the f64 range.
    pub fn value(&self) -> f64 {
        if self.exp2 == 0 {
            self.scaled
        } else {
            10f64.powf(self.log10())
        }
    }

    pub fn is_ruined(&self) -> bool {
        self.scaled == 0.0
    }
}

/// Address of one trial's random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialSeed {
    pub master: u64,
    pub trial: u64,
}

impl TrialSeed {
    pub fn returns_stream(&self) -> RngStream {
        RngStream::derive(self.master, self.trial, RETURNS_LANE)
    }

    /// Private stream of the agent at `index` in the line-up.
    pub fn agent_stream(&self, index: usize) -> RngStream {
        let lane = u16::try_from(index + 1).expect("line-up too large");
        RngStream::derive(self.master, self.trial, lane)
    }
}

/// Step-by-step driver for one trial.
#[derive(Debug, Clone)]
pub struct TrialRunner {
    agents: Vec<Agent>,
    wealth: Vec<Wealth>,
    last_q: Vec<f64>,
    bounds: QBounds,
    t: u64,
}

impl TrialRunner {
    pub fn new(strategies: &[StrategySpec], bounds: QBounds, seed: TrialSeed) -> Result<Self> {
        let agents = strategies
            .iter()
            .enumerate()
            .map(|(i, s)| s.build(&bounds, seed.agent_stream(i)))
            .collect::<Result<Vec<_>>>()?;
        let n = agents.len();
        Ok(Self {
            agents,
            wealth: vec![Wealth::ONE; n],
            last_q: vec![0.0; n],
            bounds,
            t: 0,
        })
    }

    /// Time of the next step.
    pub fn time(&self) -> u64 {
        self.t
    }

    pub fn wealth(&self) -> &[Wealth] {
        &self.wealth
    }

    /// Reveal `r(t)` and advance one step. Returns the fractions the agents
    /// committed before seeing it.
    pub fn step(&mut self, r: f64) -> Result<&[f64]> {
        Error::check_range("r", r, -1.0, 1.0)?;
        let t = self.t;
        for (i, agent) in self.agents.iter_mut().enumerate() {
            let q = agent.choose(t, &self.bounds)?;
            debug_assert!(self.bounds.contains(q), "q = {q} escaped the bounds");
            self.wealth[i].step(q, r);
            agent.observe(t, r, &self.bounds)?;
            self.last_q[i] = q;
        }
        self.t += 1;
        Ok(&self.last_q)
    }

    /// GA population of the agent at `index`, if it is a GA agent.
    pub fn population(&self, index: usize) -> Option<&Population> {
        match self.agents.get(index)? {
            Agent::Genetic { population, .. } => Some(population),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetSample {
    pub t: u64,
    pub budget: f64,
    pub log10_budget: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub labels: Vec<&'static str>,
    /// Per strategy, budgets at `t = p, 2p, ..., t_max`.
    pub curves: Vec<Vec<BudgetSample>>,
}

impl TrialResult {
    pub fn final_sample(&self, strategy: usize) -> Option<&BudgetSample> {
        self.curves.get(strategy)?.last()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub strategies: Vec<StrategySpec>,
    pub returns: ReturnParams,
    pub bounds: QBounds,
    pub t_max: u64,
    pub trials: u64,
    pub master_seed: u64,
    pub record_period: u64,
}

impl ExperimentConfig {
    /// 10^5 steps, 100 trials, seed 0, one sample per return period.
    pub fn new(strategies: Vec<StrategySpec>, returns: ReturnParams) -> Self {
        Self {
            strategies,
            record_period: u64::from(returns.period()),
            returns,
            bounds: QBounds::default(),
            t_max: DEFAULT_STEPS,
            trials: DEFAULT_TRIALS,
            master_seed: 0,
        }
    }

    pub fn with_steps(mut self, t_max: u64) -> Self {
        self.t_max = t_max;
        self
    }

    pub fn with_trials(mut self, trials: u64) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn with_record_period(mut self, period: u64) -> Self {
        self.record_period = period;
        self
    }

    pub fn with_bounds(mut self, bounds: QBounds) -> Self {
        self.bounds = bounds;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.strategies.is_empty() {
            return Err(Error::invalid("strategies", "at least one strategy is required"));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials", "must be positive"));
        }
        if self.record_period == 0 {
            return Err(Error::invalid("record_period", "must be positive"));
        }
        if self.t_max == 0 || !self.t_max.is_multiple_of(self.record_period) {
            return Err(Error::invalid(
                "t_max",
                format!("must be a positive multiple of the record period {}", self.record_period),
            ));
        }
        for s in &self.strategies {
            s.validate(&self.bounds)?;
        }
        Ok(())
    }

    pub fn periods(&self) -> f64 {
        self.t_max as f64 / f64::from(self.returns.period())
    }
}

/// Run a line-up against a given return sequence.
pub fn simulate(
    strategies: &[StrategySpec],
    bounds: QBounds,
    returns: &[f64],
    record_period: u64,
    seed: TrialSeed,
) -> Result<TrialResult> {
    if record_period == 0 {
        return Err(Error::invalid("record_period", "must be positive"));
    }
    let mut runner = TrialRunner::new(strategies, bounds, seed)?;
    let samples = returns.len() / record_period as usize;
    let mut curves = vec![Vec::with_capacity(samples); strategies.len()];
    for &r in returns {
        runner.step(r)?;
        if runner.time() % record_period == 0 {
            for (curve, w) in curves.iter_mut().zip(runner.wealth()) {
                curve.push(BudgetSample {
                    t: runner.time(),
                    budget: w.value(),
                    log10_budget: w.log10(),
                });
            }
        }
    }
    Ok(TrialResult {
        labels: strategies.iter().map(StrategySpec::label).collect(),
        curves,
    })
}

/// Trial `trial` of `config`: one return stream shared by every strategy.
pub fn run_trial(config: &ExperimentConfig, trial: u64) -> Result<TrialResult> {
    config.validate()?;
    let seed = TrialSeed {
        master: config.master_seed,
        trial,
    };
    let series = generate_series(&config.returns, config.t_max as usize, &mut seed.returns_stream())?;
    simulate(&config.strategies, config.bounds, series.values(), config.record_period, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Serial,
    Parallel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub t: u64,
    pub mean_budget: f64,
    pub mean_log10_budget: f64,
    pub std_log10_budget: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub labels: Vec<&'static str>,
    pub trials: u64,
    /// Per strategy, trial averages at each recorded time.
    pub curves: Vec<Vec<CurvePoint>>,
    /// Per strategy, final log10 budget of every trial in trial order.
    pub final_log10: Vec<Vec<f64>>,
}

impl ExperimentResult {
    pub fn final_point(&self, strategy: usize) -> &CurvePoint {
        self.curves[strategy].last().expect("experiment recorded no samples")
    }

    /// Standard error of the final mean log10 budget.
    pub fn final_standard_error(&self, strategy: usize) -> f64 {
        self.final_point(strategy).std_log10_budget / (self.trials as f64).sqrt()
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    run_experiment_with(config, Execution::Parallel)
}

/// Trials are independent; the result does not depend on `execution`.
pub fn run_experiment_with(config: &ExperimentConfig, execution: Execution) -> Result<ExperimentResult> {
    config.validate()?;
    let trials: Vec<TrialResult> = match execution {
        Execution::Serial => (0..config.trials).map(|i| run_trial(config, i)).collect::<Result<_>>()?,
        Execution::Parallel => (0..config.trials)
            .into_par_iter()
            .map(|i| run_trial(config, i))
            .collect::<Result<_>>()?,
    };
    Ok(aggregate(&trials))
}

fn aggregate(trials: &[TrialResult]) -> ExperimentResult {
    let first = &trials[0];
    let n_strategies = first.curves.len();
    let mut curves = Vec::with_capacity(n_strategies);
    let mut final_log10 = Vec::with_capacity(n_strategies);
    for s in 0..n_strategies {
        let samples = first.curves[s].len();
        let curve = (0..samples)
            .map(|k| {
                let points: Vec<&BudgetSample> = trials.iter().map(|tr| &tr.curves[s][k]).collect();
                summarize(first.curves[s][k].t, &points)
            })
            .collect();
        curves.push(curve);
        final_log10.push(
            trials
                .iter()
                .map(|tr| tr.curves[s].last().map_or(0.0, |p| p.log10_budget))
                .collect(),
        );
    }
    ExperimentResult {
        labels: first.labels.clone(),
        trials: trials.len() as u64,
        curves,
        final_log10,
    }
}

fn summarize(t: u64, points: &[&BudgetSample]) -> CurvePoint {
    let n = points.len() as f64;
    let logs: Vec<f64> = points.iter().map(|p| p.log10_budget).collect();
    let mean_log = logs.iter().sum::<f64>() / n;
    let std_log = if points.len() > 1 {
        (logs.iter().map(|l| (l - mean_log).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    // Plain averaging is exact while every budget is representable;
    // otherwise average in log space.
    let representable = points
        .iter()
        .all(|p| p.budget.is_finite() && (p.budget > 0.0 || p.log10_budget == f64::NEG_INFINITY));
    let mean_budget = if representable {
        points.iter().map(|p| p.budget).sum::<f64>() / n
    } else {
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let rest = logs.iter().map(|l| 10f64.powf(l - top)).sum::<f64>() / n;
        10f64.powf(top + rest.log10())
    };
    CurvePoint {
        t,
        mean_budget,
        mean_log10_budget: mean_log,
        std_log10_budget: std_log,
    }
}
