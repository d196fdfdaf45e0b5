use std::path::Path;
use std::time::{Instant, SystemTime};

use riskwave::analysis::{
    arcsine_cdf, consecutive_product_distribution, histogram, ks_against, lag1_autocorrelation, mean_abs,
    mean_consecutive_product, sign_correlation, Histogram,
};
use riskwave::engine::{TrialRunner, TrialSeed};
use riskwave::policy::act_square_wave;
use riskwave::tuner::{grid_search, hill_climb_restart, Family, ParamAxis, TuneResult};
use riskwave::{generate_series, next_return, run_experiment, ExperimentConfig, Mapping, RngStream, StrategySpec};

use crate::error::CliError;
use crate::output::{float, Manifest, PlotScript, Table};
use crate::settings::{Noise, Settings};

const STATS_LANE: u16 = 0;

struct Run<'a> {
    command: &'static str,
    settings: &'a Settings,
    extras: Vec<(String, String)>,
    outputs: Vec<String>,
    started: SystemTime,
    clock: Instant,
}

impl<'a> Run<'a> {
    fn start(command: &'static str, settings: &'a Settings) -> Result<Self, CliError> {
        std::fs::create_dir_all(&settings.out)?;
        Ok(Self {
            command,
            settings,
            extras: Vec::new(),
            outputs: Vec::new(),
            started: SystemTime::now(),
            clock: Instant::now(),
        })
    }

    fn extra(&mut self, key: &str, value: impl ToString) {
        self.extras.push((key.to_string(), value.to_string()));
    }

    fn dir(&self) -> &Path {
        &self.settings.out
    }

    fn table(&mut self, table: &Table, name: &str) -> Result<(), CliError> {
        table.write(self.dir(), name)?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    fn plot(&mut self, script: &PlotScript, name: &str) -> Result<(), CliError> {
        script.write(self.dir(), name)?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    fn finish(self, stem: &str) -> Result<(), CliError> {
        let manifest = Manifest {
            command: self.command.to_string(),
            config: self.settings.echo(),
            extras: self.extras,
            outputs: self.outputs,
            started: self.started,
            elapsed: self.clock.elapsed(),
        };
        manifest.write(&self.settings.out, &format!("{stem}.manifest"))?;
        for o in &manifest.outputs {
            eprintln!("wrote {}", self.settings.out.join(o).display());
        }
        Ok(())
    }
}

fn labels(cfg: &ExperimentConfig) -> Vec<String> {
    cfg.strategies.iter().map(|s| s.label().to_string()).collect()
}

pub fn simulate(settings: &Settings) -> Result<(), CliError> {
    let cfg = settings.experiment(settings.returns()?)?;
    let mut run = Run::start("simulate", settings)?;
    let result = run_experiment(&cfg)?;
    let mut table = Table::new(&[
        "t",
        "strategy",
        "mode",
        "sigma1",
        "sigma2",
        "mean_budget",
        "mean_log10_budget",
        "std_log10_budget",
    ]);
    for (label, curve) in result.labels.iter().zip(&result.curves) {
        for p in curve {
            table.row(&[
                p.t.to_string(),
                label.to_string(),
                settings.mode.as_str().to_string(),
                float(settings.sigma1),
                float(settings.sigma2),
                float(p.mean_budget),
                float(p.mean_log10_budget),
                float(p.std_log10_budget),
            ]);
        }
    }
    run.table(&table, "simulate.csv")?;
    run.plot(
        &PlotScript {
            title: format!("mean log10 budget, sigma1={} sigma2={}", settings.sigma1, settings.sigma2),
            csv: "simulate.csv".into(),
            x_column: 1,
            y_column: 7,
            key_column: 2,
            keys: labels(&cfg),
            xlabel: "t".into(),
            ylabel: "mean log10 budget".into(),
        },
        "simulate.gp",
    )?;
    run.finish("simulate")
}

pub fn default_sigmas() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}

pub fn sweep(settings: &Settings, sigmas: &[f64]) -> Result<(), CliError> {
    if sigmas.is_empty() {
        return Err(CliError::Config("sigmas: empty grid".into()));
    }
    let mut configs = Vec::with_capacity(sigmas.len());
    for &s in sigmas {
        if !(s > 0.0 && s < 1.0) {
            return Err(CliError::Config(format!("sigmas: {s} is outside (0, 1)")));
        }
        let cfg = settings.experiment(settings.noise.params(settings.period, s).map_err(CliError::config)?)?;
        configs.push(cfg.with_record_period(settings.t_max));
    }
    let mut run = Run::start("sweep", settings)?;
    run.extra("sigmas", sigmas.iter().map(f64::to_string).collect::<Vec<_>>().join(","));
    let mut table = Table::new(&[
        "noise",
        "sigma",
        "strategy",
        "mode",
        "t",
        "mean_budget",
        "mean_log10_budget",
        "std_log10_budget",
        "stderr_log10_budget",
    ]);
    for (&s, cfg) in sigmas.iter().zip(&configs) {
        let result = run_experiment(cfg)?;
        for (i, label) in result.labels.iter().enumerate() {
            let p = result.final_point(i);
            table.row(&[
                settings.noise.as_str().to_string(),
                float(s),
                label.to_string(),
                settings.mode.as_str().to_string(),
                p.t.to_string(),
                float(p.mean_budget),
                float(p.mean_log10_budget),
                float(p.std_log10_budget),
                float(result.final_standard_error(i)),
            ]);
        }
    }
    let stem = format!("sweep_{}_{}", settings.noise, settings.mode);
    run.table(&table, &format!("{stem}.csv"))?;
    run.plot(
        &PlotScript {
            title: format!("final mean log10 budget, {} noise, {}", settings.noise, settings.mode),
            csv: format!("{stem}.csv"),
            x_column: 2,
            y_column: 7,
            key_column: 3,
            keys: labels(&configs[0]),
            xlabel: "sigma".into(),
            ylabel: "mean log10 budget".into(),
        },
        &format!("{stem}.gp"),
    )?;
    run.finish(&stem)
}

pub struct StatsOptions {
    pub sigmas: Vec<f64>,
    pub samples: usize,
    pub bins: usize,
}

fn histogram_rows(table: &mut Table, noise: Noise, sigma: f64, h: &Histogram) {
    for ((lo, hi, count), freq) in h.bins().zip(h.frequencies()) {
        table.row(&[
            noise.as_str().to_string(),
            float(sigma),
            float(lo),
            float(hi),
            count.to_string(),
            float(freq),
        ]);
    }
}

pub fn stats(settings: &Settings, opts: &StatsOptions) -> Result<(), CliError> {
    if opts.sigmas.is_empty() {
        return Err(CliError::Config("sigmas: empty grid".into()));
    }
    let noise = settings.noise;
    let params = |s: f64| noise.params(settings.period, s).map_err(CliError::config);
    for &s in &opts.sigmas {
        params(s)?;
    }
    if opts.samples < 2 || opts.bins == 0 {
        return Err(CliError::Config("samples must be at least 2 and bins at least 1".into()));
    }
    let mut run = Run::start("stats", settings)?;
    run.extra("sigmas", opts.sigmas.iter().map(f64::to_string).collect::<Vec<_>>().join(","));
    run.extra("samples", opts.samples);
    run.extra("bins", opts.bins);

    let bin_header = ["noise", "sigma", "bin_lo", "bin_hi", "count", "frequency"];
    let mut hist = Table::new(&bin_header);
    let mut products = Table::new(&bin_header);
    let mut summary = Table::new(&[
        "noise",
        "sigma",
        "mean_abs",
        "mean_product",
        "sign_correlation",
        "lag1_autocorrelation",
        "ks_arcsine",
    ]);
    for (i, &s) in opts.sigmas.iter().enumerate() {
        let mut rng = RngStream::derive(settings.seed, i as u64, STATS_LANE);
        let series = generate_series(&params(s)?, opts.samples, &mut rng)?;
        let values = series.values();
        histogram_rows(&mut hist, noise, s, &histogram(values, opts.bins, -1.0, 1.0)?);
        histogram_rows(&mut products, noise, s, &consecutive_product_distribution(values, opts.bins)?);
        summary.row(&[
            noise.as_str().to_string(),
            float(s),
            float(mean_abs(values)?),
            float(mean_consecutive_product(values)?),
            float(sign_correlation(values)?),
            float(lag1_autocorrelation(values)?),
            float(ks_against(values, arcsine_cdf)),
        ]);
    }

    let offset = opts.sigmas.len() as u64;
    let mut abs_curve = Table::new(&["noise", "sigma", "mean_abs"]);
    for j in 0..=20u64 {
        let s = j as f64 / 20.0;
        let mut rng = RngStream::derive(settings.seed, offset + j, STATS_LANE);
        let series = generate_series(&params(s)?, opts.samples, &mut rng)?;
        abs_curve.row(&[noise.as_str().to_string(), float(s), float(mean_abs(series.values())?)]);
    }

    let stem = format!("stats_{noise}");
    run.table(&hist, &format!("{stem}_histogram.csv"))?;
    run.table(&products, &format!("{stem}_products.csv"))?;
    run.table(&abs_curve, &format!("{stem}_mean_abs.csv"))?;
    run.table(&summary, &format!("{stem}_summary.csv"))?;
    let keys: Vec<String> = opts.sigmas.iter().map(|s| float(*s)).collect();
    run.plot(
        &PlotScript {
            title: format!("return histogram, {noise} noise"),
            csv: format!("{stem}_histogram.csv"),
            x_column: 3,
            y_column: 6,
            key_column: 2,
            keys: keys.clone(),
            xlabel: "r".into(),
            ylabel: "frequency".into(),
        },
        &format!("{stem}_histogram.gp"),
    )?;
    run.plot(
        &PlotScript {
            title: format!("consecutive products, {noise} noise"),
            csv: format!("{stem}_products.csv"),
            x_column: 3,
            y_column: 6,
            key_column: 2,
            keys,
            xlabel: "r(t) r(t+1)".into(),
            ylabel: "frequency".into(),
        },
        &format!("{stem}_products.gp"),
    )?;
    run.plot(
        &PlotScript {
            title: format!("mean |r|, {noise} noise"),
            csv: format!("{stem}_mean_abs.csv"),
            x_column: 2,
            y_column: 3,
            key_column: 1,
            keys: vec![noise.as_str().to_string()],
            xlabel: "sigma".into(),
            ylabel: "mean |r|".into(),
        },
        &format!("{stem}_mean_abs.gp"),
    )?;
    run.finish(&stem)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Grid,
    Hill,
}

pub struct TuneOptions {
    pub family: String,
    pub grid: Vec<String>,
    pub method: Method,
    pub restarts: usize,
}

pub fn family(name: &str, mode: Mapping) -> Result<Family, CliError> {
    match name.trim().to_ascii_lowercase().as_str() {
        "ma" => Ok(Family::MovingAverage(mode)),
        "mls" => Ok(Family::MovingLeastSquares(mode)),
        "iur" => Ok(Family::Incremental(mode)),
        "ga" => Ok(Family::Genetic),
        other => Err(CliError::Config(format!("family: unknown {other:?} (expected ma, mls, iur or ga)"))),
    }
}

/// Parse `name=v1,v2,...` or `name=lo..hi` (integer range) axis flags.
pub fn parse_axis(text: &str) -> Result<ParamAxis, CliError> {
    let (name, values) = text
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("grid: expected name=values, got {text:?}")))?;
    let name = name.trim();
    let values = if let Some((lo, hi)) = values.split_once("..") {
        let lo: i64 = lo.trim().parse().map_err(|_| CliError::Config(format!("grid: bad range {values:?}")))?;
        let hi: i64 = hi.trim().parse().map_err(|_| CliError::Config(format!("grid: bad range {values:?}")))?;
        (lo..=hi).map(|v| v as f64).collect()
    } else {
        values
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| CliError::Config(format!("grid: bad value {v:?} for {name}"))))
            .collect::<Result<Vec<_>, _>>()?
    };
    ParamAxis::new(name, values).map_err(CliError::config)
}

fn tune_table(axes: &[ParamAxis], evals: &[riskwave::Evaluation], with_rank: bool) -> Table {
    let mut header: Vec<&str> = axes.iter().map(|a| a.name()).collect();
    header.extend(["objective", "std"]);
    if with_rank {
        header.push("rank");
    }
    let mut table = Table::new(&header);
    for (i, e) in evals.iter().enumerate() {
        let mut row: Vec<String> = axes.iter().map(|a| float(e.assignment.get(a.name()).unwrap_or(f64::NAN))).collect();
        row.push(float(e.objective));
        row.push(float(e.std));
        if with_rank {
            row.push((i + 1).to_string());
        }
        table.row(&row);
    }
    table
}

pub fn tune(settings: &Settings, opts: &TuneOptions) -> Result<(), CliError> {
    let fam = family(&opts.family, settings.mode)?;
    let axes = if opts.grid.is_empty() {
        fam.default_axes()
    } else {
        opts.grid.iter().map(|g| parse_axis(g)).collect::<Result<Vec<_>, _>>()?
    };
    for a in &axes {
        if !fam.parameters().contains(&a.name()) {
            return Err(CliError::Config(format!("grid: {} does not apply to {}", a.name(), fam.label())));
        }
    }
    if opts.method == Method::Hill && opts.restarts == 0 {
        return Err(CliError::Config("restarts: need at least one".into()));
    }
    let first = riskwave::Assignment(axes.iter().map(|a| (a.name().to_string(), a.values()[0])).collect());
    let probe = fam.build(&first, settings.period).map_err(CliError::config)?;
    let mut eval = ExperimentConfig::new(vec![probe], settings.returns()?)
        .with_steps(settings.t_max)
        .with_trials(settings.trials)
        .with_seed(settings.seed)
        .with_bounds(settings.bounds()?);
    eval.validate().map_err(CliError::config)?;
    eval.strategies.clear();

    let mut run = Run::start("tune", settings)?;
    run.extra("family", fam.label().to_ascii_lowercase());
    run.extra("method", if opts.method == Method::Grid { "grid" } else { "hill" });
    run.extra("restarts", opts.restarts);
    for a in &axes {
        run.extra(&format!("grid.{}", a.name()), a.values().iter().map(f64::to_string).collect::<Vec<_>>().join(","));
    }
    let result: TuneResult = match opts.method {
        Method::Grid => grid_search(fam, &axes, &eval)?,
        Method::Hill => hill_climb_restart(fam, &axes, opts.restarts, &eval, &mut RngStream::new(settings.seed))?,
    };
    let stem = format!("tune_{}", fam.label().to_ascii_lowercase());
    run.table(&tune_table(&axes, &result.ranked, true), &format!("{stem}.csv"))?;
    if opts.method == Method::Hill {
        run.table(&tune_table(&axes, &result.restarts, false), &format!("{stem}_restarts.csv"))?;
    }
    let best = result.best();
    eprintln!("best {}: {} objective {:.6} (std {:.6})", fam.label(), best.assignment, best.objective, best.std);
    run.finish(&stem)
}

pub struct TraceOptions {
    pub at: u64,
    pub window: u64,
}

pub fn ga_trace(settings: &Settings, opts: &TraceOptions) -> Result<(), CliError> {
    if opts.window == 0 || opts.window > opts.at || opts.at > settings.t_max {
        return Err(CliError::Config(format!(
            "window: [{}, {}) is outside the run of {} steps",
            opts.at as i128 - opts.window as i128,
            opts.at,
            settings.t_max
        )));
    }
    let returns = settings.returns()?;
    let bounds = settings.bounds()?;
    let spec = StrategySpec::Genetic(settings.ga()?);
    spec.validate(&bounds).map_err(CliError::config)?;
    let period = u64::from(settings.period);
    act_square_wave(period, 0, &bounds).map_err(CliError::config)?;

    let mut run = Run::start("ga-trace", settings)?;
    run.extra("at", opts.at);
    run.extra("window", opts.window);

    let seed = TrialSeed {
        master: settings.seed,
        trial: 0,
    };
    let mut rng = seed.returns_stream();
    let mut runner = TrialRunner::new(&[spec], bounds, seed)?;
    let mut trace = Table::new(&["t", "r", "q_ga", "q_sw"]);
    let mut generations = Table::new(&["generation", "gene_index", "gene_value", "fitness"]);
    let start = opts.at - opts.window;
    for t in 0..opts.at {
        if t >= start && (t == start || t % period == 0) {
            let pop = runner.population(0).expect("genetic agent");
            if let Some(best) = pop.best_previous() {
                for (k, g) in best.genes.iter().enumerate() {
                    generations.row(&[pop.generation().to_string(), k.to_string(), float(*g), float(best.fitness)]);
                }
            }
        }
        let r = next_return(&returns, t, &mut rng);
        let q = runner.step(r)?[0];
        if t >= start {
            trace.row(&[t.to_string(), float(r), float(q), float(act_square_wave(period, t, &bounds)?)]);
        }
    }
    let stem = format!("ga_trace_{}", opts.at);
    run.table(&trace, &format!("{stem}.csv"))?;
    run.table(&generations, &format!("{stem}_generations.csv"))?;
    let script = format!(
        "set datafile separator ','\n\
         set terminal pngcairo size 900,600\n\
         set output '{stem}.png'\n\
         set title 'return and risk propensity near t={at}'\n\
         set xlabel 't'\n\
         set key outside right\n\
         plot '{stem}.csv' skip 1 using 1:2 with lines title 'r(t)', \\\n\
         \x20    '' skip 1 using 1:3 with steps title 'q GA', \\\n\
         \x20    '' skip 1 using 1:4 with steps title 'q SW'\n",
        at = opts.at
    );
    std::fs::write(run.dir().join(format!("{stem}.gp")), script)?;
    run.outputs.push(format!("{stem}.gp"));
    run.finish(&stem)
}
