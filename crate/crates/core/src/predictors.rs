//! Next-return estimators: moving average, moving least squares and the
//! incremental update rule.
//!
//! All of them only ever see returns that have already been revealed. When
//! choosing `q(t)` the estimate is built from `r(0) .. r(t-1)`.

use std::collections::VecDeque;

use crate::error::{Error, Result};

pub trait Predictor {
    /// Estimate of the next, not yet revealed, return.
    fn predict(&self) -> f64;

    /// Feed the return that was just revealed.
    fn observe(&mut self, r: f64) -> Result<()>;
}

fn check_return(r: f64) -> Result<f64> {
    Error::check_range("observed return", r, -1.0, 1.0)
}

/// Mean of the last `memory` returns.
#[derive(Debug, Clone, PartialEq)]
pub struct MovingAverage {
    memory: usize,
    window: VecDeque<f64>,
}

impl MovingAverage {
    pub fn new(memory: usize) -> Result<Self> {
        if memory == 0 {
            return Err(Error::invalid("memory", "moving average needs M >= 1"));
        }
        Ok(Self {
            memory,
            window: VecDeque::with_capacity(memory),
        })
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn window(&self) -> &VecDeque<f64> {
        &self.window
    }
}

impl Predictor for MovingAverage {
    /// Mean of whatever is in the window; 0 before the first observation.
    fn predict(&self) -> f64 {
        if self.window.is_empty() {
            return 0.0;
        }
        self.window.iter().sum::<f64>() / self.window.len() as f64
    }

    fn observe(&mut self, r: f64) -> Result<()> {
        let r = check_return(r)?;
        if self.window.len() == self.memory {
            self.window.pop_front();
        }
        self.window.push_back(r);
        Ok(())
    }
}

/// Least-squares line `r = slope * t + intercept` in absolute time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
}

/// Linear trend fitted to the last `memory` returns and extrapolated one
/// step ahead.
#[derive(Debug, Clone, PartialEq)]
pub struct MovingLeastSquares {
    memory: usize,
    window: VecDeque<f64>,
    /// Time index of the oldest value in the window.
    start: u64,
}

impl MovingLeastSquares {
    pub fn new(memory: usize) -> Result<Self> {
        if memory < 2 {
            return Err(Error::invalid("memory", "moving least squares needs M >= 2"));
        }
        Ok(Self {
            memory,
            window: VecDeque::with_capacity(memory),
            start: 0,
        })
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }

    /// Time index the next observation will carry.
    pub fn next_time(&self) -> u64 {
        self.start + self.window.len() as u64
    }

    /// Record `r` observed at time `t`. Times must be consecutive; the first
    /// observation fixes the origin.
    pub fn observe_at(&mut self, t: u64, r: f64) -> Result<()> {
        let r = check_return(r)?;
        if self.window.is_empty() {
            self.start = t;
        } else if t != self.next_time() {
            return Err(Error::invalid(
                "time index",
                format!("expected {}, got {t}", self.next_time()),
            ));
        }
        if self.window.len() == self.memory {
            self.window.pop_front();
            self.start += 1;
        }
        self.window.push_back(r);
        Ok(())
    }

    /// Slope and intercept in window-local time `0 .. n-1`.
    fn local_fit(&self) -> Result<(f64, f64)> {
        let n = self.window.len();
        if n < 2 {
            return Err(Error::InsufficientData {
                what: "moving least squares fit",
                needed: 2,
                got: n,
            });
        }
        let nf = n as f64;
        let x_mean = (nf - 1.0) / 2.0;
        let y_mean = self.window.iter().sum::<f64>() / nf;
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for (i, &y) in self.window.iter().enumerate() {
            let dx = i as f64 - x_mean;
            sxy += dx * (y - y_mean);
            sxx += dx * dx;
        }
        let slope = sxy / sxx;
        Ok((slope, y_mean - slope * x_mean))
    }

    pub fn fit(&self) -> Result<LinearFit> {
        let (slope, local_intercept) = self.local_fit()?;
        Ok(LinearFit {
            slope,
            intercept: local_intercept - slope * self.start as f64,
        })
    }

    /// Trend line evaluated at `t_next`, clamped to [-1, 1]. With fewer than
    /// two observations: the last one, or 0 with none.
    pub fn predict_at(&self, t_next: u64) -> f64 {
        match self.local_fit() {
            Ok((slope, intercept)) => {
                let dt = t_next as f64 - self.start as f64;
                (slope * dt + intercept).clamp(-1.0, 1.0)
            }
            Err(_) => self.window.back().copied().unwrap_or(0.0),
        }
    }
}

impl Predictor for MovingLeastSquares {
    fn predict(&self) -> f64 {
        self.predict_at(self.next_time())
    }

    fn observe(&mut self, r: f64) -> Result<()> {
        let t = self.next_time();
        self.observe_at(t, r)
    }
}

/// Exponential recency-weighted estimate
/// `est <- est + gamma (r - est)`, starting from 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncrementalUpdate {
    gamma: f64,
    estimate: f64,
}

impl IncrementalUpdate {
    pub fn new(gamma: f64) -> Result<Self> {
        Self::with_estimate(gamma, 0.0)
    }

    pub fn with_estimate(gamma: f64, estimate: f64) -> Result<Self> {
        Error::check_range("gamma", gamma, 0.0, 1.0)?;
        if !estimate.is_finite() {
            return Err(Error::NonFinite("estimate"));
        }
        Ok(Self { gamma, estimate })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn estimate(&self) -> f64 {
        self.estimate
    }

    pub fn updated(self, r: f64) -> Result<Self> {
        let r = check_return(r)?;
        Ok(Self {
            estimate: self.estimate + self.gamma * (r - self.estimate),
            ..self
        })
    }
}

impl Predictor for IncrementalUpdate {
    fn predict(&self) -> f64 {
        self.estimate
    }

    fn observe(&mut self, r: f64) -> Result<()> {
        *self = self.updated(r)?;
        Ok(())
    }
}
