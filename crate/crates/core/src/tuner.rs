//! Parameter search for the strategies: exhaustive grids for the
//! one-parameter predictors and random-restart hill climbing for the GA.
//!
//! Every candidate is scored by [`run_experiment`] under the same master
//! seed, so all candidates face identical return realizations. The objective
//! is the mean log10 budget growth per return period.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;

use crate::engine::{run_experiment, ExperimentConfig, StrategySpec};
use crate::error::{Error, Result};
use crate::ga::GaConfig;
use crate::policy::Mapping;
use crate::rng::RngStream;

pub const POPULATION_SIZES: [f64; 5] = [50.0, 100.0, 200.0, 500.0, 1000.0];

/// Strategy family whose parameters are searched.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    MovingAverage(Mapping),
    MovingLeastSquares(Mapping),
    Incremental(Mapping),
    Genetic,
}

impl Family {
    pub fn label(&self) -> &'static str {
        match self {
            Family::MovingAverage(_) => "MA",
            Family::MovingLeastSquares(_) => "MLS",
            Family::Incremental(_) => "IUR",
            Family::Genetic => "GA",
        }
    }

    pub fn parameters(&self) -> &'static [&'static str] {
        match self {
            Family::MovingAverage(_) | Family::MovingLeastSquares(_) => &["m"],
            Family::Incremental(_) => &["gamma"],
            Family::Genetic => &["c", "pc", "pm", "s"],
        }
    }

    /// Default search space: M in 1..=50 (2..=50 for MLS), gamma in
    /// 0.0..=1.0 by 0.1, and a discretisation of the GA ranges.
    pub fn default_axes(&self) -> Vec<ParamAxis> {
        let steps = |n: usize, top: f64| (0..=n).map(|i| top * i as f64 / n as f64).collect::<Vec<_>>();
        let axes = match self {
            Family::MovingAverage(_) => vec![("m", (1..=50).map(f64::from).collect())],
            Family::MovingLeastSquares(_) => vec![("m", (2..=50).map(f64::from).collect())],
            Family::Incremental(_) => vec![("gamma", steps(10, 1.0))],
            Family::Genetic => vec![
                ("c", POPULATION_SIZES.to_vec()),
                ("pc", steps(10, 1.0)),
                ("pm", vec![0.0, 0.001, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2]),
                ("s", steps(5, 0.5)),
            ],
        };
        axes.into_iter()
            .map(|(name, values)| ParamAxis::new(name, values).expect("default axes are valid"))
            .collect()
    }

    /// Strategy for `assignment`; GA parameters not assigned keep their
    /// tuned values and the chromosome length is the return period.
    pub fn build(&self, assignment: &Assignment, period: u32) -> Result<StrategySpec> {
        for (name, _) in &assignment.0 {
            if !self.parameters().contains(&name.as_str()) {
                return Err(Error::invalid("parameter", format!("{name} does not apply to {}", self.label())));
            }
        }
        let required = |name: &'static str| {
            assignment
                .get(name)
                .ok_or_else(|| Error::invalid("parameter", format!("{} needs {name}", self.label())))
        };
        Ok(match *self {
            Family::MovingAverage(mapping) => StrategySpec::MovingAverage {
                memory: required("m")? as usize,
                mapping,
            },
            Family::MovingLeastSquares(mapping) => StrategySpec::MovingLeastSquares {
                memory: required("m")? as usize,
                mapping,
            },
            Family::Incremental(mapping) => StrategySpec::Incremental {
                gamma: required("gamma")?,
                mapping,
            },
            Family::Genetic => {
                let tuned = GaConfig::tuned(period as usize)?;
                StrategySpec::Genetic(GaConfig::new(
                    assignment.get("c").map_or(tuned.population(), |c| c as usize),
                    period as usize,
                    assignment.get("pc").unwrap_or(tuned.p_crossover()),
                    assignment.get("pm").unwrap_or(tuned.p_mutation()),
                    assignment.get("s").unwrap_or(tuned.elitism()),
                )?)
            }
        })
    }
}

/// Candidate values of one parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamAxis {
    name: String,
    values: Vec<f64>,
}

impl ParamAxis {
    /// Values must lie in the parameter's search range: `m` an integer in
    /// [1, 50], `gamma`, `pc`, `pm` in [0, 1], `s` in [0, 0.5] and `c` one of
    /// 50, 100, 200, 500, 1000.
    pub fn new(name: &str, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("grid", format!("no candidate values for {name}")));
        }
        for &v in &values {
            match name {
                "m" => {
                    Error::check_range("m", v, 1.0, 50.0)?;
                    if v.fract() != 0.0 {
                        return Err(Error::invalid("m", format!("{v} is not an integer")));
                    }
                }
                "gamma" => drop(Error::check_range("gamma", v, 0.0, 1.0)?),
                "pc" => drop(Error::check_range("pc", v, 0.0, 1.0)?),
                "pm" => drop(Error::check_range("pm", v, 0.0, 1.0)?),
                "s" => drop(Error::check_range("s", v, 0.0, 0.5)?),
                "c" => {
                    if !POPULATION_SIZES.contains(&v) {
                        return Err(Error::invalid("c", format!("{v} is not one of {POPULATION_SIZES:?}")));
                    }
                }
                other => return Err(Error::invalid("parameter", format!("unknown parameter {other:?}"))),
            }
        }
        for (i, v) in values.iter().enumerate() {
            if values[..i].contains(v) {
                return Err(Error::invalid("grid", format!("duplicate value {v} for {name}")));
            }
        }
        Ok(Self {
            name: name.to_string(),
            values,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Named parameter values, in axis order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Assignment(pub Vec<(String, f64)>);

impl Assignment {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.iter().find(|(n, _)| n == name).map(|&(_, v)| v)
    }

    fn from_indices(axes: &[ParamAxis], idx: &[usize]) -> Self {
        Assignment(axes.iter().zip(idx).map(|(a, &i)| (a.name.clone(), a.values[i])).collect())
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (name, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{name}={v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub assignment: Assignment,
    /// Mean over trials of log10 budget growth per period.
    pub objective: f64,
    /// Standard deviation of the per-trial growth.
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    /// Every evaluated assignment, best first.
    pub ranked: Vec<Evaluation>,
    /// Best assignment reached from each restart; empty for grid search.
    pub restarts: Vec<Evaluation>,
}

impl TuneResult {
    pub fn best(&self) -> &Evaluation {
        &self.ranked[0]
    }
}

/// Stable sort, best objective first; ties keep evaluation order.
fn rank(mut evals: Vec<Evaluation>) -> Vec<Evaluation> {
    evals.sort_by(|a, b| b.objective.total_cmp(&a.objective));
    evals
}

/// Score one assignment with the line-up of `eval` replaced by it.
pub fn evaluate(family: Family, assignment: &Assignment, eval: &ExperimentConfig) -> Result<Evaluation> {
    let spec = family.build(assignment, eval.returns.period())?;
    let config = ExperimentConfig {
        strategies: vec![spec],
        ..eval.clone()
    };
    let result = run_experiment(&config)?;
    let periods = config.periods();
    let growth: Vec<f64> = result.final_log10[0].iter().map(|l| l / periods).collect();
    let n = growth.len() as f64;
    let objective = growth.iter().sum::<f64>() / n;
    let std = if growth.len() > 1 {
        (growth.iter().map(|g| (g - objective).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(Evaluation {
        assignment: assignment.clone(),
        objective,
        std,
    })
}

fn cartesian(axes: &[ParamAxis]) -> Vec<Vec<usize>> {
    axes.iter().fold(vec![vec![]], |acc, axis| {
        acc.iter()
            .flat_map(|prefix| {
                (0..axis.values.len()).map(move |i| {
                    let mut next = prefix.clone();
                    next.push(i);
                    next
                })
            })
            .collect()
    })
}

fn check_axes(family: Family, axes: &[ParamAxis]) -> Result<()> {
    if axes.is_empty() {
        return Err(Error::invalid("grid", "no parameter axes"));
    }
    for a in axes {
        if !family.parameters().contains(&a.name()) {
            return Err(Error::invalid("grid", format!("{} does not apply to {}", a.name, family.label())));
        }
    }
    Ok(())
}

/// Evaluate every point of the grid spanned by `axes` and rank them.
pub fn grid_search(family: Family, axes: &[ParamAxis], eval: &ExperimentConfig) -> Result<TuneResult> {
    check_axes(family, axes)?;
    let evals = cartesian(axes)
        .into_par_iter()
        .map(|idx| evaluate(family, &Assignment::from_indices(axes, &idx), eval))
        .collect::<Result<Vec<_>>>()?;
    Ok(TuneResult {
        ranked: rank(evals),
        restarts: Vec::new(),
    })
}

/// Outcome of [`hill_climb`], as index vectors into the axes.
#[derive(Debug, Clone, PartialEq)]
pub struct Climb {
    /// Local optimum reached by each restart with its objective.
    pub optima: Vec<(Vec<usize>, f64)>,
    /// Every point evaluated, in first-evaluation order.
    pub evaluated: Vec<(Vec<usize>, f64)>,
}

/// Steepest-ascent hill climbing over a discrete grid with random restarts.
///
/// Each restart starts from a uniformly drawn grid point and moves to the
/// best of its axis neighbours (one index up or down on one axis) while that
/// strictly improves the objective. Objective values are cached across
/// restarts.
pub fn hill_climb<F>(axes: &[ParamAxis], restarts: usize, rng: &mut RngStream, mut objective: F) -> Result<Climb>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if restarts == 0 {
        return Err(Error::invalid("restarts", "need at least one restart"));
    }
    if axes.is_empty() {
        return Err(Error::invalid("grid", "no parameter axes"));
    }
    let mut cache: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    let mut evaluated = Vec::new();
    let mut score = |idx: &Vec<usize>, evaluated: &mut Vec<(Vec<usize>, f64)>| -> Result<f64> {
        if let Some(&v) = cache.get(idx) {
            return Ok(v);
        }
        let point: Vec<f64> = axes.iter().zip(idx).map(|(a, &i)| a.values[i]).collect();
        let v = objective(&point)?;
        cache.insert(idx.clone(), v);
        evaluated.push((idx.clone(), v));
        Ok(v)
    };

    let mut optima = Vec::with_capacity(restarts);
    for _ in 0..restarts {
        let mut current: Vec<usize> = axes.iter().map(|a| rng.index(a.values.len())).collect();
        let mut value = score(&current, &mut evaluated)?;
        loop {
            let mut best: Option<(Vec<usize>, f64)> = None;
            for (d, axis) in axes.iter().enumerate() {
                for step in [-1isize, 1] {
                    let Some(i) = current[d].checked_add_signed(step) else { continue };
                    if i >= axis.values.len() {
                        continue;
                    }
                    let mut next = current.clone();
                    next[d] = i;
                    let v = score(&next, &mut evaluated)?;
                    if best.as_ref().is_none_or(|b| v > b.1) {
                        best = Some((next, v));
                    }
                }
            }
            match best {
                Some((next, v)) if v > value => {
                    current = next;
                    value = v;
                }
                _ => break,
            }
        }
        optima.push((current, value));
    }
    Ok(Climb { optima, evaluated })
}

/// Random-restart hill climbing with [`evaluate`] as the objective.
pub fn hill_climb_restart(
    family: Family,
    axes: &[ParamAxis],
    restarts: usize,
    eval: &ExperimentConfig,
    rng: &mut RngStream,
) -> Result<TuneResult> {
    check_axes(family, axes)?;
    let mut evals: BTreeMap<Vec<usize>, Evaluation> = BTreeMap::new();
    let climb = hill_climb(axes, restarts, rng, |point| {
        let assignment = Assignment(axes.iter().zip(point).map(|(a, &v)| (a.name.clone(), v)).collect());
        let e = evaluate(family, &assignment, eval)?;
        let objective = e.objective;
        let idx = axes.iter().zip(point).map(|(a, v)| a.values.iter().position(|x| x == v).unwrap()).collect();
        evals.insert(idx, e);
        Ok(objective)
    })?;
    let ranked = rank(climb.evaluated.iter().map(|(idx, _)| evals[idx].clone()).collect());
    let restarts = climb.optima.iter().map(|(idx, _)| evals[idx].clone()).collect();
    Ok(TuneResult { ranked, restarts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::returns::ReturnParams;

    fn eval_config(steps: u64, trials: u64) -> ExperimentConfig {
        ExperimentConfig::new(vec![], ReturnParams::amplitude(100, 0.2).unwrap())
            .with_steps(steps)
            .with_trials(trials)
            .with_seed(3)
    }

    fn config_with(strategy: StrategySpec, steps: u64, trials: u64) -> ExperimentConfig {
        ExperimentConfig {
            strategies: vec![strategy],
            ..eval_config(steps, trials)
        }
    }

    #[test]
    fn axis_validation() {
        assert!(ParamAxis::new("m", vec![]).is_err());
        assert!(ParamAxis::new("m", vec![0.0]).is_err());
        assert!(ParamAxis::new("m", vec![2.5]).is_err());
        assert!(ParamAxis::new("m", vec![51.0]).is_err());
        assert!(ParamAxis::new("gamma", vec![1.2]).is_err());
        assert!(ParamAxis::new("s", vec![0.6]).is_err());
        assert!(ParamAxis::new("c", vec![300.0]).is_err());
        assert!(ParamAxis::new("q", vec![0.3]).is_err());
        assert!(ParamAxis::new("gamma", vec![0.3, 0.3]).is_err());
        assert!(ParamAxis::new("c", vec![50.0, 1000.0]).is_ok());
    }

    #[test]
    fn family_build() {
        let a = Assignment(vec![("m".into(), 7.0)]);
        assert_eq!(
            Family::MovingAverage(Mapping::RiskSeeking).build(&a, 100).unwrap(),
            StrategySpec::MovingAverage { memory: 7, mapping: Mapping::RiskSeeking }
        );
        assert!(Family::Incremental(Mapping::RiskSeeking).build(&a, 100).is_err());
        let ga = Family::Genetic.build(&Assignment(vec![("c".into(), 50.0)]), 100).unwrap();
        assert_eq!(ga, StrategySpec::Genetic(GaConfig::new(50, 100, 0.7, 0.01, 0.3).unwrap()));
    }

    #[test]
    fn cartesian_order() {
        let axes = [ParamAxis::new("c", vec![50.0, 100.0]).unwrap(), ParamAxis::new("s", vec![0.1, 0.2, 0.3]).unwrap()];
        let grid = cartesian(&axes);
        assert_eq!(grid.len(), 6);
        assert_eq!(grid[0], vec![0, 0]);
        assert_eq!(grid[1], vec![0, 1]);
        assert_eq!(grid[5], vec![1, 2]);
    }

    #[test]
    fn empty_grid_rejected() {
        let family = Family::MovingAverage(Mapping::RiskSeeking);
        assert!(grid_search(family, &[], &eval_config(1_000, 2)).is_err());
        let wrong = [ParamAxis::new("gamma", vec![0.5]).unwrap()];
        assert!(grid_search(family, &wrong, &eval_config(1_000, 2)).is_err());
    }

    #[test]
    fn single_point_is_ranked_first() {
        let family = Family::Incremental(Mapping::RiskSeeking);
        let axes = [ParamAxis::new("gamma", vec![0.4]).unwrap()];
        let r = grid_search(family, &axes, &eval_config(2_000, 3)).unwrap();
        assert_eq!(r.ranked.len(), 1);
        assert_eq!(r.best().assignment.get("gamma"), Some(0.4));
    }

    #[test]
    fn ranking_is_descending_and_matches_independent_runs() {
        let family = Family::MovingAverage(Mapping::RiskAvoiding);
        let axes = [ParamAxis::new("m", vec![1.0, 4.0, 12.0]).unwrap()];
        let cfg = eval_config(3_000, 4);
        let r = grid_search(family, &axes, &cfg).unwrap();
        assert!(r.ranked.windows(2).all(|w| w[0].objective >= w[1].objective));
        for e in &r.ranked {
            let m = e.assignment.get("m").unwrap() as usize;
            let direct = run_experiment(&config_with(
                StrategySpec::MovingAverage { memory: m, mapping: Mapping::RiskAvoiding },
                3_000,
                4,
            ))
            .unwrap();
            let mean_growth = direct.final_log10[0].iter().sum::<f64>() / 4.0 / 30.0;
            assert!((mean_growth - e.objective).abs() < 1e-12);
        }
    }

    #[test]
    fn dominated_point_does_not_change_the_winner() {
        let family = Family::MovingAverage(Mapping::RiskSeeking);
        let cfg = eval_config(3_000, 4);
        let base = grid_search(family, &[ParamAxis::new("m", vec![2.0, 5.0]).unwrap()], &cfg).unwrap();
        let more = grid_search(family, &[ParamAxis::new("m", vec![2.0, 5.0, 50.0]).unwrap()], &cfg).unwrap();
        assert_eq!(base.best().assignment, more.best().assignment);
        assert_eq!(more.ranked.last().unwrap().assignment.get("m"), Some(50.0));
    }

    #[test]
    fn hill_climb_finds_quadratic_optimum_from_every_start() {
        let axes = [ParamAxis::new("gamma", (0..=20).map(|i| i as f64 / 20.0).collect()).unwrap()];
        let mut rng = RngStream::new(8);
        let climb = hill_climb(&axes, 10, &mut rng, |p| Ok(-(p[0] - 0.35).powi(2))).unwrap();
        assert_eq!(climb.optima.len(), 10);
        for (idx, _) in &climb.optima {
            assert_eq!(idx, &vec![7]);
        }
    }

    #[test]
    fn hill_climb_two_dimensional_bowl() {
        let axes = [
            ParamAxis::new("pc", (0..=10).map(|i| i as f64 / 10.0).collect()).unwrap(),
            ParamAxis::new("s", (0..=5).map(|i| i as f64 / 10.0).collect()).unwrap(),
        ];
        let climb = hill_climb(&axes, 4, &mut RngStream::new(1), |p| {
            Ok(-(p[0] - 0.7).powi(2) - (p[1] - 0.3).powi(2))
        })
        .unwrap();
        assert!(climb.optima.iter().all(|(idx, _)| idx == &vec![7, 3]));
    }

    #[test]
    fn hill_climb_is_deterministic_and_rejects_zero_restarts() {
        let axes = [ParamAxis::new("m", (1..=30).map(f64::from).collect()).unwrap()];
        let f = |p: &[f64]| Ok((p[0] * 0.7).sin());
        let a = hill_climb(&axes, 1, &mut RngStream::new(5), f).unwrap();
        let b = hill_climb(&axes, 1, &mut RngStream::new(5), f).unwrap();
        assert_eq!(a, b);
        assert!(hill_climb(&axes, 0, &mut RngStream::new(5), f).is_err());
    }

    #[test]
    fn hill_climb_restart_reports_restart_optima() {
        let family = Family::Incremental(Mapping::RiskSeeking);
        let axes = [ParamAxis::new("gamma", vec![0.1, 0.3, 0.5, 0.7, 0.9]).unwrap()];
        let r = hill_climb_restart(family, &axes, 2, &eval_config(2_000, 3), &mut RngStream::new(2)).unwrap();
        assert_eq!(r.restarts.len(), 2);
        assert!(r.ranked.windows(2).all(|w| w[0].objective >= w[1].objective));
        for opt in &r.restarts {
            assert!(opt.objective <= r.best().objective);
        }
    }
}
