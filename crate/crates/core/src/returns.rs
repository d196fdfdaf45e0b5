//! The exogenous return stream: a sine of period `T` with phase or amplitude
//! noise.
//!
//! ```text
//! phase:      r(t) = sin(w t + s1 π ξ)
//! amplitude:  r(t) = (1 - s2) sin(w t) + s2 ξ
//! ```
//! with `w = 2π / T` and `ξ ~ U(-1, 1)` drawn fresh at every step.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Which noise family a parameter set selects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    Phase,
    Amplitude,
    /// Both levels nonzero: `(1 - s2) sin(w t + s1 π ξ1) + s2 ξ2`.
    /// Never used in the reference experiments.
    Mixed,
}

impl NoiseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NoiseKind::Phase => "phase",
            NoiseKind::Amplitude => "amplitude",
            NoiseKind::Mixed => "mixed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReturnParams {
    period: u32,
    sigma_phase: f64,
    sigma_amplitude: f64,
}

impl ReturnParams {
    pub fn new(period: u32, sigma_phase: f64, sigma_amplitude: f64) -> Result<Self> {
        if period == 0 {
            return Err(Error::invalid("period", "must be positive"));
        }
        Error::check_range("sigma1", sigma_phase, 0.0, 1.0)?;
        Error::check_range("sigma2", sigma_amplitude, 0.0, 1.0)?;
        Ok(Self {
            period,
            sigma_phase,
            sigma_amplitude,
        })
    }

    pub fn phase(period: u32, sigma: f64) -> Result<Self> {
        Self::new(period, sigma, 0.0)
    }

    pub fn amplitude(period: u32, sigma: f64) -> Result<Self> {
        Self::new(period, 0.0, sigma)
    }

    pub fn noise_free(period: u32) -> Result<Self> {
        Self::new(period, 0.0, 0.0)
    }

    pub fn period(&self) -> u32 {
        self.period
    }

    pub fn angular_frequency(&self) -> f64 {
        TAU / f64::from(self.period)
    }

    pub fn sigma1(&self) -> f64 {
        self.sigma_phase
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma_amplitude
    }

    pub fn noise_kind(&self) -> NoiseKind {
        match (self.sigma_phase > 0.0, self.sigma_amplitude > 0.0) {
            (true, true) => NoiseKind::Mixed,
            (_, true) => NoiseKind::Amplitude,
            _ => NoiseKind::Phase,
        }
    }

    /// False when both noise levels are nonzero.
    pub fn is_canonical(&self) -> bool {
        self.noise_kind() != NoiseKind::Mixed
    }

    /// The noise-free signal `sin(w t)`. The phase is reduced modulo the
    /// period first so long runs stay exactly periodic.
    pub fn carrier(&self, t: u64) -> f64 {
        let k = t % u64::from(self.period);
        (self.angular_frequency() * k as f64).sin()
    }
}

/// Return at step `t`. Pure phase or amplitude noise consumes one draw,
/// mixed noise two.
pub fn next_return(params: &ReturnParams, t: u64, rng: &mut RngStream) -> f64 {
    let phase = params.angular_frequency() * (t % u64::from(params.period)) as f64;
    let r = match params.noise_kind() {
        NoiseKind::Phase => (phase + params.sigma_phase * PI * rng.signed_unit()).sin(),
        NoiseKind::Amplitude => {
            (1.0 - params.sigma_amplitude) * phase.sin()
                + params.sigma_amplitude * rng.signed_unit()
        }
        NoiseKind::Mixed => {
            let carrier = (phase + params.sigma_phase * PI * rng.signed_unit()).sin();
            (1.0 - params.sigma_amplitude) * carrier + params.sigma_amplitude * rng.signed_unit()
        }
    };
    r.clamp(-1.0, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    values: Vec<f64>,
    params: ReturnParams,
}

impl ReturnSeries {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn params(&self) -> &ReturnParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

impl AsRef<[f64]> for ReturnSeries {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

/// Returns for `t = 0 .. t_max`.
pub fn generate_series(params: &ReturnParams, t_max: usize, rng: &mut RngStream) -> Result<ReturnSeries> {
    if t_max == 0 {
        return Err(Error::invalid("t_max", "must be at least 1"));
    }
    let values = (0..t_max as u64).map(|t| next_return(params, t, rng)).collect();
    Ok(ReturnSeries {
        values,
        params: *params,
    })
}
