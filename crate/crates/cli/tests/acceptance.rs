//! Acceptance checks, one line per criterion. Exits nonzero if any fails.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use riskwave::analysis::{
    arcsine_cdf, histogram, ks_against, lag1_autocorrelation, mean_abs, mean_consecutive_product, pearson,
    sign_correlation, DEFAULT_BINS,
};
use riskwave::engine::{run_trial, TrialRunner, TrialSeed};
use riskwave::ga::Population;
use riskwave::policy::{act_ramp_rect, act_square_wave};
use riskwave::predictors::MovingLeastSquares;
use riskwave::tuner::{grid_search, Family, ParamAxis};
use riskwave::{
    generate_series, next_return, run_experiment, ExperimentConfig, ExperimentResult, GaConfig, Mapping, QBounds,
    RampRect, ReturnParams, RngStream, StrategySpec,
};

const SEED: u64 = 1;
const T: u32 = 100;

struct Outcome {
    pass: bool,
    detail: String,
    notes: Vec<String>,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
            notes: Vec::new(),
        }
    }

    fn note(mut self, n: impl Into<String>) -> Self {
        self.notes.push(n.into());
        self
    }
}

fn criterion(n: u32, title: &str, budget: Duration, check: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = check();
    let elapsed = start.elapsed();
    let in_time = elapsed <= budget;
    let pass = out.pass && in_time;
    println!(
        "[{}] {n} {title}: {} ({:.1}s of {}s{})",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_secs_f64(),
        budget.as_secs(),
        if in_time { "" } else { ", over budget" }
    );
    for note in &out.notes {
        println!("      {note}");
    }
    pass
}

fn amplitude(s: f64) -> ReturnParams {
    ReturnParams::amplitude(T, s).unwrap()
}

fn experiment(strategies: Vec<StrategySpec>, returns: ReturnParams, steps: u64, trials: u64) -> ExperimentResult {
    let cfg = ExperimentConfig::new(strategies, returns)
        .with_steps(steps)
        .with_trials(trials)
        .with_seed(SEED)
        .with_record_period(steps);
    run_experiment(&cfg).unwrap()
}

fn mean(r: &ExperimentResult, i: usize) -> f64 {
    r.final_point(i).mean_log10_budget
}

/// `a` exceeds `b` by more than two pooled standard errors.
fn beats(ra: &ExperimentResult, a: usize, rb: &ExperimentResult, b: usize) -> (bool, f64, f64) {
    let gap = mean(ra, a) - mean(rb, b);
    let pooled = (ra.final_standard_error(a).powi(2) + rb.final_standard_error(b).powi(2)).sqrt();
    (gap > 2.0 * pooled, gap, pooled)
}

fn constant_decay() -> Outcome {
    let qs = [0.1, 0.5, 1.0];
    let r = experiment(qs.iter().map(|&q0| StrategySpec::Constant { q0 }).collect(), amplitude(0.5), 10_000, 100);
    let m: Vec<f64> = (0..3).map(|i| mean(&r, i)).collect();
    let pass = m.iter().all(|&x| x < 0.0) && m[0] > m[1] && m[1] > m[2];
    Outcome::new(pass, format!("q0=0.1: {:.2}, q0=0.5: {:.2}, q0=1.0: {:.2}", m[0], m[1], m[2]))
}

fn adaptive(mapping: Mapping) -> Vec<StrategySpec> {
    vec![StrategySpec::tuned_ma(mapping), StrategySpec::tuned_mls(mapping), StrategySpec::tuned_iur(mapping)]
}

fn noise_degradation() -> Outcome {
    let lo = experiment(adaptive(Mapping::RiskSeeking), amplitude(0.2), 100_000, 100);
    let hi = experiment(adaptive(Mapping::RiskSeeking), amplitude(0.8), 100_000, 100);
    let parts: Vec<String> = (0..3)
        .map(|i| format!("{} {:.0} -> {:.0}", lo.labels[i], mean(&lo, i), mean(&hi, i)))
        .collect();
    Outcome::new((0..3).all(|i| mean(&lo, i) > mean(&hi, i)), parts.join(", "))
}

fn low_noise_ordering() -> Outcome {
    let mut specs = vec![StrategySpec::SquareWave { period: u64::from(T) }];
    specs.extend(adaptive(Mapping::RiskSeeking));
    specs.push(StrategySpec::Constant { q0: riskwave::engine::DEFAULT_Q0 });
    let r = experiment(specs, amplitude(0.1), 100_000, 100);
    let mut pass = true;
    let mut parts = Vec::new();
    for i in 1..=3 {
        let (above, gap_sw, se_sw) = beats(&r, 0, &r, i);
        let (below, gap_q0, se_q0) = beats(&r, i, &r, 4);
        pass &= above && below;
        parts.push(format!(
            "{} {:.0} (SW gap {:.1}/{:.2}se, Q0 gap {:.0}/{:.2}se)",
            r.labels[i],
            mean(&r, i),
            gap_sw,
            se_sw,
            gap_q0,
            se_q0
        ));
    }
    Outcome::new(pass, format!("SW {:.0}, Q0 {:.0}", mean(&r, 0), mean(&r, 4))).note(parts.join("; "))
}

fn sw_profile(bounds: &QBounds) -> Vec<f64> {
    (0..u64::from(T)).map(|k| act_square_wave(u64::from(T), k, bounds).unwrap()).collect()
}

fn ga_discovers_square_wave() -> Outcome {
    let bounds = QBounds::DEFAULT;
    let sw = sw_profile(&bounds);
    let p = ReturnParams::noise_free(T).unwrap();
    let spec = [StrategySpec::Genetic(GaConfig::tuned(T as usize).unwrap())];
    let (mut early, mut late) = (Vec::new(), Vec::new());
    for master in 0..10u64 {
        let seed = TrialSeed { master, trial: 0 };
        let mut rng = seed.returns_stream();
        let mut runner = TrialRunner::new(&spec, bounds, seed).unwrap();
        for t in 0..100_000u64 {
            runner.step(next_return(&p, t, &mut rng)).unwrap();
            if t + 1 == 10_000 {
                early.push(pearson(&runner.population(0).unwrap().best_previous().unwrap().genes, &sw));
            }
        }
        late.push(pearson(&runner.population(0).unwrap().best_previous().unwrap().genes, &sw));
    }
    let avg = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let worst = late.iter().cloned().fold(f64::INFINITY, f64::min);
    Outcome::new(
        worst >= 0.8 && avg(&late) >= avg(&early),
        format!("corr at 1e5: min {worst:.3}, mean {:.3}; mean at 1e4: {:.3}", avg(&late), avg(&early)),
    )
}

fn rs_ra_crossover() -> Outcome {
    let specs = vec![StrategySpec::tuned_ma(Mapping::RiskSeeking), StrategySpec::tuned_ma(Mapping::RiskAvoiding)];
    let lo = experiment(specs.clone(), amplitude(0.1), 100_000, 100);
    let hi = experiment(specs, amplitude(0.9), 100_000, 100);
    let (rs_wins, g1, s1) = beats(&lo, 0, &lo, 1);
    let (ra_wins, g2, s2) = beats(&hi, 1, &hi, 0);
    Outcome::new(
        rs_wins && ra_wins,
        format!(
            "sigma2=0.1 RS {:.0} vs RA {:.0} (gap {g1:.0}, se {s1:.2}); sigma2=0.9 RA {:.0} vs RS {:.0} (gap {g2:.0}, se {s2:.2})",
            mean(&lo, 0),
            mean(&lo, 1),
            mean(&hi, 1),
            mean(&hi, 0)
        ),
    )
}

fn samples(p: ReturnParams, stream: u64) -> Vec<f64> {
    generate_series(&p, 100_000, &mut RngStream::derive(SEED, stream, 0)).unwrap().into_values()
}

fn return_statistics() -> Outcome {
    let phases: Vec<Vec<f64>> = [0.1, 0.5, 0.9]
        .iter()
        .enumerate()
        .map(|(i, &s)| samples(ReturnParams::phase(T, s).unwrap(), i as u64))
        .collect();
    let hists: Vec<_> = phases.iter().map(|v| histogram(v, DEFAULT_BINS, -1.0, 1.0).unwrap()).collect();
    let mut sup: f64 = 0.0;
    for a in 0..3 {
        for b in a + 1..3 {
            sup = sup.max(hists[a].sup_distance(&hists[b]).unwrap());
        }
    }
    let ks = phases.iter().map(|v| ks_against(v, arcsine_cdf)).fold(0.0, f64::max);

    let grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
    let curve: Vec<f64> = grid
        .iter()
        .enumerate()
        .map(|(j, &s)| mean_abs(&samples(amplitude(s), 10 + j as u64)).unwrap())
        .collect();
    let argmin = (0..curve.len()).min_by(|&a, &b| curve[a].total_cmp(&curve[b])).unwrap();
    let interior = argmin > 0 && argmin < grid.len() - 1 && (0.4..=0.7).contains(&grid[argmin]);

    let amp = samples(amplitude(0.5), 40);
    let pha = samples(ReturnParams::phase(T, 0.5).unwrap(), 41);
    let (pa, pp) = (mean_consecutive_product(&amp).unwrap(), mean_consecutive_product(&pha).unwrap());

    let a = sup < 0.02;
    let b = ks < 0.02;
    let d = pa > pp;
    let mark = |ok: bool| if ok { "ok" } else { "FAILED" };
    Outcome::new(
        a && b && interior && d,
        format!(
            "(a) sup {sup:.4} {}, (b) ks {ks:.4} {}, (c) min at {} {}, (d) product amp {pa:.4} vs phase {pp:.4} {}",
            mark(a),
            mark(b),
            grid[argmin],
            mark(interior),
            mark(d)
        ),
    )
    .note(format!(
        "sign correlation amp {:.3} vs phase {:.3}; lag-1 autocorrelation amp {:.3} vs phase {:.3}",
        sign_correlation(&amp).unwrap(),
        sign_correlation(&pha).unwrap(),
        lag1_autocorrelation(&amp).unwrap(),
        lag1_autocorrelation(&pha).unwrap()
    ))
}

fn table_neighbourhoods() -> Outcome {
    let eval = ExperimentConfig::new(vec![], amplitude(0.2))
        .with_steps(100_000)
        .with_trials(50)
        .with_seed(SEED);
    let memories = ParamAxis::new("m", (1..=10).map(f64::from).collect()).unwrap();
    let gammas = ParamAxis::new("gamma", (1..=9).map(|i| i as f64 / 10.0).collect()).unwrap();
    let top = |family: Family, axis: &ParamAxis| {
        let r = grid_search(family, std::slice::from_ref(axis), &eval).unwrap();
        let name = axis.name().to_string();
        let best = r.best().assignment.get(&name).unwrap();
        let ranking: Vec<String> = r.ranked.iter().take(4).map(|e| format!("{}", e.assignment)).collect();
        (best, ranking.join(" > "))
    };
    let (ma_rs, ma_rs_rank) = top(Family::MovingAverage(Mapping::RiskSeeking), &memories);
    let (ma_ra, ma_ra_rank) = top(Family::MovingAverage(Mapping::RiskAvoiding), &memories);
    let (iur, iur_rank) = top(Family::Incremental(Mapping::RiskSeeking), &gammas);
    let a = (3.0..=7.0).contains(&ma_rs);
    let b = (1.0..=4.0).contains(&ma_ra);
    let c = (0.3..=0.7).contains(&iur);
    let mark = |ok: bool| if ok { "ok" } else { "FAILED" };
    Outcome::new(
        a && b && c,
        format!(
            "MA-RS M={ma_rs} {}, MA-RA M={ma_ra} {}, IUR-RS gamma={iur} {}",
            mark(a),
            mark(b),
            mark(c)
        ),
    )
    .note(format!("MA-RS: {ma_rs_rank}"))
    .note(format!("MA-RA: {ma_ra_rank}"))
    .note(format!("IUR-RS: {iur_rank}"))
}

fn oracle_equivalences() -> Outcome {
    let mut failures = Vec::new();

    // product of single-period factors against run_trial
    let cfg = ExperimentConfig::new(
        vec![StrategySpec::Constant { q0: 0.6 }, StrategySpec::SquareWave { period: u64::from(T) }],
        amplitude(0.4),
    )
    .with_steps(1_000)
    .with_trials(1)
    .with_seed(SEED)
    .with_record_period(1_000);
    let trial = run_trial(&cfg, 0).unwrap();
    let mut rng = TrialSeed { master: SEED, trial: 0 }.returns_stream();
    let (mut x_q0, mut x_sw) = (1.0f64, 1.0f64);
    for t in 0..1_000u64 {
        let r = next_return(&cfg.returns, t, &mut rng);
        x_q0 *= 1.0 + r * 0.6;
        x_sw *= 1.0 + r * if t % 100 < 50 { 1.0 } else { 0.1 };
    }
    let product_err = (trial.final_sample(0).unwrap().log10_budget - x_q0.log10())
        .abs()
        .max((trial.final_sample(1).unwrap().log10_budget - x_sw.log10()).abs());
    if product_err >= 1e-9 {
        failures.push(format!("product {product_err:e}"));
    }

    // moving least squares against the normal equations
    let mut rng = RngStream::new(SEED);
    let mut mls_err: f64 = 0.0;
    for _ in 0..200 {
        let m = 2 + rng.index(40);
        let t0 = rng.index(5_000) as u64;
        let values: Vec<f64> = (0..m + rng.index(10)).map(|_| rng.signed_unit()).collect();
        let mut mls = MovingLeastSquares::new(m).unwrap();
        for (i, &v) in values.iter().enumerate() {
            mls.observe_at(t0 + i as u64, v).unwrap();
        }
        let pts: Vec<(f64, f64)> = values
            .iter()
            .enumerate()
            .skip(values.len() - m)
            .map(|(i, &v)| ((t0 + i as u64) as f64, v))
            .collect();
        let n = pts.len() as f64;
        let (sx, sy) = (pts.iter().map(|p| p.0).sum::<f64>(), pts.iter().map(|p| p.1).sum::<f64>());
        let sxx = pts.iter().map(|p| p.0 * p.0).sum::<f64>();
        let sxy = pts.iter().map(|p| p.0 * p.1).sum::<f64>();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let intercept = (sy - slope * sx) / n;
        let t_next = t0 + values.len() as u64;
        let fit = mls.fit().unwrap();
        let predicted = (slope * t_next as f64 + intercept).clamp(-1.0, 1.0);
        mls_err = mls_err
            .max((fit.slope - slope).abs())
            .max((mls.predict_at(t_next) - predicted).abs());
    }
    if mls_err >= 1e-9 {
        failures.push(format!("mls {mls_err:e}"));
    }

    // GA fitness against a brute-force double loop
    let genes: Vec<Vec<f64>> = (0..30).map(|_| (0..T).map(|_| rng.open_uniform(0.1, 1.0)).collect()).collect();
    let mut pop = Population::from_genes(genes.clone()).unwrap();
    let returns: Vec<f64> = (0..u64::from(T)).map(|t| next_return(&amplitude(0.5), t, &mut rng)).collect();
    for (t, &r) in returns.iter().enumerate() {
        pop.accumulate_fitness(r, t as u64);
    }
    let mut exact = true;
    for (j, c) in pop.chromosomes().iter().enumerate() {
        let mut f = 0.0;
        for (t, &r) in returns.iter().enumerate() {
            f += r * genes[j][t % T as usize];
        }
        exact &= c.fitness == f;
    }
    if !exact {
        failures.push("ga fitness".into());
    }

    // square wave against the ramp-rectangle with unit ramps
    let bounds = QBounds::DEFAULT;
    let rr = RampRect::square_wave(u64::from(T)).unwrap();
    let mut sw_mismatch = Vec::new();
    for t in 0..10 * u64::from(T) {
        let sw = act_square_wave(u64::from(T), t, &bounds).unwrap();
        let ramp = act_ramp_rect(&rr, t, &bounds);
        if sw != ramp && t % u64::from(T) != 0 {
            sw_mismatch.push(t);
        }
    }
    if !sw_mismatch.is_empty() {
        failures.push(format!("sw/rr differ at {sw_mismatch:?}"));
    }

    Outcome::new(
        failures.is_empty(),
        format!(
            "product err {product_err:.1e}, mls err {mls_err:.1e}, ga fitness exact {exact}, sw/rr differ only at t mod T = 0: {}",
            sw_mismatch.is_empty()
        ),
    )
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let commands: [&[&str]; 6] = [
        &["simulate", "--steps", "3000", "--trials", "6"],
        &["sweep", "--steps", "1000", "--trials", "4", "--sigmas", "0.2,0.6", "--noise", "phase"],
        &["stats", "--samples", "5000"],
        &["tune", "--family", "iur", "--steps", "2000", "--trials", "4"],
        &["tune", "--family", "ma", "--method", "hill", "--restarts", "2", "--grid", "m=1..8", "--steps", "2000", "--trials", "4"],
        &["ga-trace", "--at", "3000", "--window", "200", "--sigma2", "0.5"],
    ];
    let mut differing = Vec::new();
    let mut compared = 0;
    for args in commands {
        let mut outputs = Vec::new();
        for threads in ["1", "4"] {
            let dir = tempfile::tempdir().unwrap();
            let status = Command::new(env!("CARGO_BIN_EXE_riskwave"))
                .args(args)
                .args(["--seed", "11", "--out"])
                .arg(dir.path())
                .env("RAYON_NUM_THREADS", threads)
                .stderr(std::process::Stdio::null())
                .status()
                .unwrap();
            if !status.success() {
                return Outcome::new(false, format!("{} exited with {status}", args[0]));
            }
            outputs.push(csv_files(dir.path()));
        }
        compared += outputs[0].len();
        if outputs[0].is_empty() || outputs[0] != outputs[1] {
            differing.push(args[0]);
        }
    }
    Outcome::new(
        differing.is_empty(),
        format!("{compared} CSVs from 6 runs compared across 1 and 4 threads, differing: {differing:?}"),
    )
}

fn main() -> ExitCode {
    let s = Duration::from_secs;
    let results = [
        criterion(1, "constant-strategy decay", s(10), constant_decay),
        criterion(2, "noise degradation", s(120), noise_degradation),
        criterion(3, "strategy ordering at low noise", s(120), low_noise_ordering),
        criterion(4, "GA discovers the square wave", s(180), ga_discovers_square_wave),
        criterion(5, "RS vs RA crossover", s(120), rs_ra_crossover),
        criterion(6, "return statistics", s(30), return_statistics),
        criterion(7, "parameter neighbourhoods", s(300), table_neighbourhoods),
        criterion(8, "oracle equivalences", s(60), oracle_equivalences),
        criterion(9, "determinism", s(120), determinism),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("{passed}/{} acceptance criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
