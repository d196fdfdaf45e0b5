//! Maps from a return estimate, or from the clock, to the invested fraction
//! `q(t)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Allowed range of the invested fraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QBounds {
    min: f64,
    max: f64,
}

impl Default for QBounds {
    fn default() -> Self {
        Self::DEFAULT
    }
}

impl QBounds {
    /// `[0.1, 1.0]`: at least a tenth of the budget is always at stake.
    pub const DEFAULT: QBounds = QBounds { min: 0.1, max: 1.0 };

    pub fn new(min: f64, max: f64) -> Result<Self> {
        Error::check_range("q_min", min, 0.0, 1.0)?;
        Error::check_range("q_max", max, 0.0, 1.0)?;
        if min >= max {
            return Err(Error::invalid("q bounds", format!("q_min {min} must be below q_max {max}")));
        }
        Ok(Self { min, max })
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn contains(&self, q: f64) -> bool {
        q >= self.min && q <= self.max
    }

    pub fn clamp(&self, q: f64) -> f64 {
        q.clamp(self.min, self.max)
    }
}

/// How an estimate is turned into an investment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mapping {
    /// `q_max` on a positive estimate, `q_min` otherwise.
    RiskSeeking,
    /// The estimate itself, clamped to the bounds.
    RiskAvoiding,
}

impl Mapping {
    pub fn apply(self, r_hat: f64, bounds: &QBounds) -> Result<f64> {
        match self {
            Mapping::RiskSeeking => act_risk_seeking(r_hat, bounds),
            Mapping::RiskAvoiding => act_risk_avoiding(r_hat, bounds),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mapping::RiskSeeking => "rs",
            Mapping::RiskAvoiding => "ra",
        }
    }
}

impl fmt::Display for Mapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mapping {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rs" | "risk-seeking" => Ok(Mapping::RiskSeeking),
            "ra" | "risk-avoiding" => Ok(Mapping::RiskAvoiding),
            other => Err(Error::invalid("mode", format!("expected rs or ra, got {other:?}"))),
        }
    }
}

pub fn act_constant(q0: f64, bounds: &QBounds) -> Result<f64> {
    Error::check_range("q0", q0, bounds.min, bounds.max)
}

pub fn act_risk_seeking(r_hat: f64, bounds: &QBounds) -> Result<f64> {
    if !r_hat.is_finite() {
        return Err(Error::NonFinite("return estimate"));
    }
    Ok(if r_hat > 0.0 { bounds.max } else { bounds.min })
}

pub fn act_risk_avoiding(r_hat: f64, bounds: &QBounds) -> Result<f64> {
    if !r_hat.is_finite() {
        return Err(Error::NonFinite("return estimate"));
    }
    Ok(bounds.clamp(r_hat))
}

/// Breakpoints of the periodic ramp-rectangle schedule.
///
/// Over one cycle `t̂ = t mod h4` the schedule ramps up on `(0, h1)`, holds
/// `q_max` on `[h1, h2]`, ramps down on `(h2, h3)` and holds `q_min` on
/// `[h3, h4)`. Both ramps are `h1` steps wide.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RampRect {
    h1: u64,
    h2: u64,
    h3: u64,
    h4: u64,
}

impl RampRect {
    pub fn new(h1: u64, h2: u64, h3: u64, h4: u64) -> Result<Self> {
        if !(0 < h1 && h1 <= h2 && h2 < h3 && h3 <= h4) {
            return Err(Error::invalid(
                "ramp-rectangle breakpoints",
                format!("need 0 < h1 <= h2 < h3 <= h4, got ({h1}, {h2}, {h3}, {h4})"),
            ));
        }
        if h3 - h2 != h1 {
            return Err(Error::invalid(
                "ramp-rectangle breakpoints",
                format!("ramps must be symmetric: h3 - h2 = {} but h1 = {h1}", h3 - h2),
            ));
        }
        Ok(Self { h1, h2, h3, h4 })
    }

    /// Unit-width ramps over `period`: `q_max` on `[1, T/2 - 1]`, `q_min` on
    /// `[T/2, T)`. Agrees with [`act_square_wave`] everywhere except `t̂ = 0`.
    pub fn square_wave(period: u64) -> Result<Self> {
        if period < 4 || !period.is_multiple_of(2) {
            return Err(Error::invalid("period", format!("need an even period >= 4, got {period}")));
        }
        Self::new(1, period / 2 - 1, period / 2, period)
    }

    pub fn breakpoints(&self) -> (u64, u64, u64, u64) {
        (self.h1, self.h2, self.h3, self.h4)
    }

    pub fn ramp_width(&self) -> u64 {
        self.h1
    }
}

/// Ramp-rectangle schedule at time `t`. At `t̂ = 0` the rising ramp starts
/// from `q_min`.
pub fn act_ramp_rect(params: &RampRect, t: u64, bounds: &QBounds) -> f64 {
    let RampRect { h1, h2, h3, h4 } = *params;
    let th = t % h4;
    let span = bounds.max - bounds.min;
    let q = if th < h1 {
        bounds.min + span * th as f64 / h1 as f64
    } else if th <= h2 {
        bounds.max
    } else if th < h3 {
        bounds.max - span * (th - h2) as f64 / (h3 - h2) as f64
    } else {
        bounds.min
    };
    bounds.clamp(q)
}

/// Square wave with period `period`: `q_max` while `t mod T < T/2`, else
/// `q_min`.
pub fn act_square_wave(period: u64, t: u64, bounds: &QBounds) -> Result<f64> {
    if period == 0 || !period.is_multiple_of(2) {
        return Err(Error::invalid("period", format!("square wave needs an even positive period, got {period}")));
    }
    Ok(if t % period < period / 2 {
        bounds.max
    } else {
        bounds.min
    })
}
