//! Layered run settings: built-in defaults, then a `key=value` file, then
//! `RISKWAVE_*` environment variables, then command-line flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use riskwave::engine::{DEFAULT_Q0, DEFAULT_STEPS, DEFAULT_TRIALS};
use riskwave::{ExperimentConfig, GaConfig, Mapping, QBounds, ReturnParams, StrategySpec};

use crate::error::CliError;

pub const ENV_PREFIX: &str = "RISKWAVE_";
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_OUT: &str = "out";

/// Every key accepted in a config file or as `RISKWAVE_<KEY>`.
pub const KEYS: [&str; 21] = [
    "strategies", "mode", "sigma1", "sigma2", "period", "t_max", "trials", "seed", "q_min", "q_max", "record", "ma_m",
    "mls_m", "iur_gamma", "ga_c", "ga_pc", "ga_pm", "ga_s", "q0", "out", "noise",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyName {
    Q0,
    Ma,
    Mls,
    Iur,
    Ga,
    Sw,
}

impl StrategyName {
    pub const ALL: [StrategyName; 6] = [Self::Q0, Self::Ma, Self::Mls, Self::Iur, Self::Ga, Self::Sw];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Q0 => "q0",
            Self::Ma => "ma",
            Self::Mls => "mls",
            Self::Iur => "iur",
            Self::Ga => "ga",
            Self::Sw => "sw",
        }
    }
}

impl FromStr for StrategyName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|n| n.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown strategy {s:?} (expected one of q0, ma, mls, iur, ga, sw)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Noise {
    Amplitude,
    Phase,
}

impl Noise {
    pub fn as_str(self) -> &'static str {
        match self {
            Noise::Amplitude => "amplitude",
            Noise::Phase => "phase",
        }
    }

    pub fn params(self, period: u32, sigma: f64) -> riskwave::Result<ReturnParams> {
        match self {
            Noise::Amplitude => ReturnParams::amplitude(period, sigma),
            Noise::Phase => ReturnParams::phase(period, sigma),
        }
    }
}

impl FromStr for Noise {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "amplitude" | "amp" => Ok(Noise::Amplitude),
            "phase" => Ok(Noise::Phase),
            other => Err(format!("unknown noise kind {other:?} (expected amplitude or phase)")),
        }
    }
}

impl fmt::Display for Noise {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub strategies: Vec<StrategyName>,
    pub mode: Mapping,
    pub sigma1: f64,
    pub sigma2: f64,
    pub period: u32,
    pub t_max: u64,
    pub trials: u64,
    pub seed: u64,
    pub q_min: f64,
    pub q_max: f64,
    /// Sampling interval of budget curves; the period when absent.
    pub record: Option<u64>,
    /// Moving-average memory; 5 for risk-seeking, 2 for risk-avoiding when absent.
    pub ma_m: Option<usize>,
    pub mls_m: usize,
    pub iur_gamma: f64,
    pub ga_c: usize,
    pub ga_pc: f64,
    pub ga_pm: f64,
    pub ga_s: f64,
    pub q0: f64,
    pub out: PathBuf,
    /// Noise kind scanned by `sweep` and `stats`.
    pub noise: Noise,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            strategies: StrategyName::ALL.to_vec(),
            mode: Mapping::RiskSeeking,
            sigma1: 0.0,
            sigma2: 0.5,
            period: 100,
            t_max: DEFAULT_STEPS,
            trials: DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
            q_min: QBounds::DEFAULT.min(),
            q_max: QBounds::DEFAULT.max(),
            record: None,
            ma_m: None,
            mls_m: 25,
            iur_gamma: 0.5,
            ga_c: 1000,
            ga_pc: 0.7,
            ga_pm: 0.01,
            ga_s: 0.3,
            q0: DEFAULT_Q0,
            out: PathBuf::from(DEFAULT_OUT),
            noise: Noise::Amplitude,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| CliError::Config(format!("{key}: cannot parse {value:?}: {e}")))
}

/// Parse `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_config(text: &str, origin: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("{origin}:{}: expected key=value, got {line:?}", n + 1)))?;
        let key = key.trim().to_ascii_lowercase();
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::Config(format!("{origin}:{}: unknown key {key:?}", n + 1)));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

pub fn read_config(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text, &path.display().to_string())
}

/// Overlay the layers in increasing precedence and parse the result.
pub fn resolve(
    file: BTreeMap<String, String>,
    env: impl Fn(&str) -> Option<String>,
    flags: BTreeMap<String, String>,
) -> Result<Settings, CliError> {
    let mut merged = file;
    for key in KEYS {
        if let Some(v) = env(&format!("{ENV_PREFIX}{}", key.to_ascii_uppercase())) {
            merged.insert(key.to_string(), v);
        }
    }
    merged.extend(flags);
    Settings::from_map(&merged)
}

impl Settings {
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self, CliError> {
        let mut s = Settings::default();
        for (key, value) in map {
            match key.as_str() {
                "strategies" => {
                    s.strategies = value
                        .split(',')
                        .filter(|p| !p.trim().is_empty())
                        .map(|p| parse::<StrategyName>(key, p))
                        .collect::<Result<_, _>>()?;
                    if s.strategies.is_empty() {
                        return Err(CliError::Config("strategies: empty list".into()));
                    }
                }
                "mode" => s.mode = parse(key, value)?,
                "sigma1" => s.sigma1 = parse(key, value)?,
                "sigma2" => s.sigma2 = parse(key, value)?,
                "period" => s.period = parse(key, value)?,
                "t_max" => s.t_max = parse(key, value)?,
                "trials" => s.trials = parse(key, value)?,
                "seed" => s.seed = parse(key, value)?,
                "q_min" => s.q_min = parse(key, value)?,
                "q_max" => s.q_max = parse(key, value)?,
                "record" => s.record = Some(parse(key, value)?),
                "ma_m" => s.ma_m = Some(parse(key, value)?),
                "mls_m" => s.mls_m = parse(key, value)?,
                "iur_gamma" => s.iur_gamma = parse(key, value)?,
                "ga_c" => s.ga_c = parse(key, value)?,
                "ga_pc" => s.ga_pc = parse(key, value)?,
                "ga_pm" => s.ga_pm = parse(key, value)?,
                "ga_s" => s.ga_s = parse(key, value)?,
                "q0" => s.q0 = parse(key, value)?,
                "out" => s.out = PathBuf::from(value.trim()),
                "noise" => s.noise = parse(key, value)?,
                other => return Err(CliError::Config(format!("unknown key {other:?}"))),
            }
        }
        Ok(s)
    }

    pub fn bounds(&self) -> Result<QBounds, CliError> {
        QBounds::new(self.q_min, self.q_max).map_err(CliError::config)
    }

    pub fn returns(&self) -> Result<ReturnParams, CliError> {
        ReturnParams::new(self.period, self.sigma1, self.sigma2).map_err(CliError::config)
    }

    pub fn ma_memory(&self) -> usize {
        self.ma_m.unwrap_or(match self.mode {
            Mapping::RiskSeeking => 5,
            Mapping::RiskAvoiding => 2,
        })
    }

    pub fn ga(&self) -> Result<GaConfig, CliError> {
        GaConfig::new(self.ga_c, self.period as usize, self.ga_pc, self.ga_pm, self.ga_s).map_err(CliError::config)
    }

    pub fn spec(&self, name: StrategyName) -> Result<StrategySpec, CliError> {
        let mapping = self.mode;
        Ok(match name {
            StrategyName::Q0 => StrategySpec::Constant { q0: self.q0 },
            StrategyName::Ma => StrategySpec::MovingAverage {
                memory: self.ma_memory(),
                mapping,
            },
            StrategyName::Mls => StrategySpec::MovingLeastSquares {
                memory: self.mls_m,
                mapping,
            },
            StrategyName::Iur => StrategySpec::Incremental {
                gamma: self.iur_gamma,
                mapping,
            },
            StrategyName::Ga => StrategySpec::Genetic(self.ga()?),
            StrategyName::Sw => StrategySpec::SquareWave {
                period: u64::from(self.period),
            },
        })
    }

    /// Validated experiment for `returns`.
    pub fn experiment(&self, returns: ReturnParams) -> Result<ExperimentConfig, CliError> {
        let specs = self.strategies.iter().map(|&n| self.spec(n)).collect::<Result<Vec<_>, _>>()?;
        let mut cfg = ExperimentConfig::new(specs, returns)
            .with_steps(self.t_max)
            .with_trials(self.trials)
            .with_seed(self.seed)
            .with_bounds(self.bounds()?);
        if let Some(r) = self.record {
            cfg = cfg.with_record_period(r);
        }
        cfg.validate().map_err(CliError::config)?;
        Ok(cfg)
    }

    /// Every key with its resolved value, for manifests.
    pub fn echo(&self) -> Vec<(String, String)> {
        let strategies: Vec<&str> = self.strategies.iter().map(|s| s.as_str()).collect();
        [
            ("strategies", strategies.join(",")),
            ("mode", self.mode.as_str().to_string()),
            ("sigma1", self.sigma1.to_string()),
            ("sigma2", self.sigma2.to_string()),
            ("period", self.period.to_string()),
            ("t_max", self.t_max.to_string()),
            ("trials", self.trials.to_string()),
            ("seed", self.seed.to_string()),
            ("q_min", self.q_min.to_string()),
            ("q_max", self.q_max.to_string()),
            ("record", self.record.unwrap_or(u64::from(self.period)).to_string()),
            ("ma_m", self.ma_memory().to_string()),
            ("mls_m", self.mls_m.to_string()),
            ("iur_gamma", self.iur_gamma.to_string()),
            ("ga_c", self.ga_c.to_string()),
            ("ga_pc", self.ga_pc.to_string()),
            ("ga_pm", self.ga_pm.to_string()),
            ("ga_s", self.ga_s.to_string()),
            ("q0", self.q0.to_string()),
            ("out", self.out.display().to_string()),
            ("noise", self.noise.as_str().to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }
}
