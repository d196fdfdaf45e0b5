//! Agents investing a fraction of their budget into a noisy periodic market.
//!
//! The crate is organised along the simulation pipeline:
//!
//! - [`returns`]: the exogenous return stream (sine with phase or amplitude noise)
//! - [`analysis`]: distribution and lag-one statistics of a return stream
//! - [`predictors`]: moving average, moving least squares, incremental update
//! - [`policy`]: estimate- or clock-driven choice of the invested fraction
//! - [`ga`]: the genetic-algorithm strategy
//! - [`engine`]: budget dynamics, trials and trial averaging
//! - [`tuner`]: parameter search over the strategies

pub mod analysis;
pub mod engine;
pub mod error;
pub mod ga;
pub mod policy;
pub mod predictors;
pub mod returns;
pub mod rng;
pub mod tuner;

pub use engine::{
    run_experiment, run_experiment_with, run_trial, simulate, step_budget, ExperimentConfig,
    ExperimentResult, StrategySpec, TrialResult, TrialRunner, TrialSeed,
};
pub use error::{Error, Result};
pub use ga::{GaConfig, Population};
pub use policy::{Mapping, QBounds, RampRect};
pub use returns::{generate_series, next_return, NoiseKind, ReturnParams, ReturnSeries};
pub use rng::RngStream;
pub use tuner::{grid_search, hill_climb_restart, Assignment, Evaluation, Family, ParamAxis, TuneResult};
