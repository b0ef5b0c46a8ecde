use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Args, ValueEnum};
use hybridlab::grid::{
    compile_splitting, evolve, gaussian_state, grid_expectation, marginal_density, reduced_quantum_density,
    write_snapshot, AxisLabel, AxisSpec, EvolveOptions, GridError, GridSpec, GridState, Marginal, RunManifest,
};
use hybridlab::moments::{
    classify_spectrum, fit_envelope, propagate_moments, quadratic_expectation, EnvelopeFit, MomentState,
    DEFAULT_CLUSTER_TOLERANCE,
};
use hybridlab::observables::{classically_measurable, validate_density, DensityValidation};
use hybridlab::{Generator, OperatorPolynomial};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::failure::{config_error, Classify, Failure};
use crate::model::{self, Mode, Model, ModelArgs};
use crate::output;

pub const DEFAULT_OBSERVERS: [&str; 9] = ["q", "p", "x", "y", "q^2", "p^2", "x^2", "y^2", "(q^2 + p^2)/2"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EngineChoice {
    Moments,
    Grid,
    Both,
}

#[derive(Args, Clone, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value_t = EngineChoice::Moments)]
    pub engine: EngineChoice,
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    #[arg(long, default_value_t = 10.0)]
    pub t_final: f64,
    /// Grid points per axis, a power of two.
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    /// Half extent of every grid axis.
    #[arg(long, default_value_t = 8.0)]
    pub l: f64,
    #[arg(long)]
    pub n_x: Option<usize>,
    #[arg(long)]
    pub n_y: Option<usize>,
    #[arg(long)]
    pub n_q: Option<usize>,
    #[arg(long)]
    pub l_x: Option<f64>,
    #[arg(long)]
    pub l_y: Option<f64>,
    #[arg(long)]
    pub l_q: Option<f64>,
    /// Observable to record, in the expression syntax; repeatable.
    #[arg(long = "observer")]
    pub observers: Vec<String>,
    /// Initial mean of `q`, `x` or `y`, as `name=value`; repeatable.
    #[arg(long = "mean", value_parser = parse_mean, allow_hyphen_values = true)]
    pub means: Vec<(String, f64)>,
    /// Record observers every this many steps (and at the final step).
    #[arg(long, default_value_t = 10)]
    pub sample_every: usize,
    #[arg(long, default_value = "hybridlab-run")]
    pub output: PathBuf,
    /// Use one worker thread.
    #[arg(long)]
    pub single_threaded: bool,
    /// Write binary marginal snapshots of the grid state.
    #[arg(long)]
    pub snapshots: bool,
    /// Boundary mass that aborts a grid run; 0 disables the check.
    #[arg(long, default_value_t = 1e-6)]
    pub overflow_threshold: f64,
}

fn parse_mean(text: &str) -> Result<(String, f64), String> {
    let (name, value) = text.split_once('=').ok_or("expected name=value")?;
    let value: f64 = value.trim().parse().map_err(|e| format!("{e}"))?;
    Ok((name.trim().to_string(), value))
}

/// Everything a run depends on, echoed into its report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub mode: Mode,
    pub k: f64,
    pub engine: EngineChoice,
    /// Canonical text of the Koopmanian (hybrid) or Hamiltonian.
    pub generator: String,
    pub dt: f64,
    pub t_final: f64,
    pub steps: usize,
    pub sample_every: usize,
    pub grid: Option<GridSpec>,
    pub observers: Vec<String>,
    pub initial_mean: BTreeMap<String, f64>,
    pub output: PathBuf,
    pub single_threaded: bool,
    pub threads: usize,
    pub overflow_threshold: Option<f64>,
    pub snapshots: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObserverInfo {
    pub name: String,
    /// Free of the shift operators `p_x`, `p_y`.
    pub classically_measurable: bool,
}

/// Summary of one engine's output. Every number is recomputable from `csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineReport {
    pub engine: String,
    pub csv: PathBuf,
    /// Two-column `t,value` files, one per observer.
    pub plots: Vec<PathBuf>,
    pub observers: Vec<ObserverInfo>,
    /// Column holding the conserved generator, `K` or `H`.
    pub conserved: String,
    /// `max |c(t) - c(0)| / |c(0)|`, absolute when `c(0) = 0`.
    pub conserved_drift: f64,
    /// `max |norm(t) - norm(0)|` from the `norm` column.
    pub norm_drift: Option<f64>,
    /// Envelope of `sqrt(<q^2>)`, when `q^2` is observed.
    pub envelope: Option<EnvelopeFit>,
    pub envelope_note: Option<String>,
    pub files: Vec<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub observer: String,
    pub max_abs_deviation: f64,
    pub time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub csv: PathBuf,
    pub rows: Vec<Deviation>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: RunConfig,
    /// Eigenvalue clusters of the moment generator with their Jordan structure.
    pub spectrum: String,
    pub engines: Vec<EngineReport>,
    pub comparison: Option<Comparison>,
    /// Wall-clock seconds per phase.
    pub timings: BTreeMap<String, f64>,
}

/// Density of the quantum subsystem at the end of a grid run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityRecord {
    pub time: f64,
    pub purity: f64,
    pub validation: DensityValidation,
}

/// Sampled series: one row per time, observers followed by the conserved generator.
struct Series {
    times: Vec<f64>,
    rows: Vec<Vec<f64>>,
    norms: Option<Vec<f64>>,
    files: Vec<PathBuf>,
}

struct Plan {
    config: RunConfig,
    model: Model,
    observers: Vec<OperatorPolynomial>,
}

pub fn worker_threads(single_threaded: bool) -> Result<usize, Failure> {
    if single_threaded {
        return Ok(1);
    }
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    match std::env::var("HYBRIDLAB_THREADS") {
        Ok(text) => match text.trim().parse::<usize>() {
            Ok(cap) if cap >= 1 => Ok(available.min(cap)),
            _ => config_error!("HYBRIDLAB_THREADS must be a positive integer, got `{text}`"),
        },
        Err(_) => Ok(available),
    }
}

/// Number of steps when `t_final / dt` is a positive integer.
pub fn step_count(t_final: f64, dt: f64) -> Result<usize, Failure> {
    if !(dt.is_finite() && dt > 0.0) {
        config_error!("dt must be positive, got {dt}");
    }
    if !(t_final.is_finite() && t_final > 0.0) {
        config_error!("t_final must be positive, got {t_final}");
    }
    let ratio = t_final / dt;
    let steps = ratio.round();
    if !(steps >= 1.0 && (ratio - steps).abs() <= 1e-9 * steps) {
        config_error!("t_final / dt = {ratio} is not a positive integer");
    }
    Ok(steps as usize)
}

fn grid_spec(args: &SimulateArgs) -> Result<GridSpec, Failure> {
    let axis = |label, n: Option<usize>, l: Option<f64>| AxisSpec::new(label, l.unwrap_or(args.l), n.unwrap_or(args.n));
    GridSpec::new(vec![
        axis(AxisLabel::X, args.n_x, args.l_x),
        axis(AxisLabel::Y, args.n_y, args.l_y),
        axis(AxisLabel::Q, args.n_q, args.l_q),
    ])
    .config()
}

fn prepare(args: &SimulateArgs, engine: EngineChoice) -> Result<Plan, Failure> {
    let model = args.model.resolve().config()?;
    let steps = step_count(args.t_final, args.dt)?;
    if args.sample_every == 0 {
        config_error!("sample_every must be at least 1");
    }
    let uses_grid = engine != EngineChoice::Moments;
    if uses_grid && model.mode != Mode::Hybrid {
        config_error!("the grid engine supports --mode hybrid only");
    }
    let mut initial_mean = BTreeMap::new();
    for (name, value) in &args.means {
        if !["q", "x", "y"].contains(&name.as_str()) {
            config_error!("initial means can be set for q, x and y, not `{name}`");
        }
        if !value.is_finite() {
            config_error!("initial mean {name} = {value} is not finite");
        }
        initial_mean.insert(name.clone(), *value);
    }
    let names: Vec<String> = if args.observers.is_empty() {
        DEFAULT_OBSERVERS.iter().map(|s| s.to_string()).collect()
    } else {
        args.observers.clone()
    };
    let observers = names.iter().map(|s| model::parse(s, args.model.k)).collect::<anyhow::Result<Vec<_>>>().config()?;
    let grid = if uses_grid { Some(grid_spec(args)?) } else { None };
    if !(args.overflow_threshold.is_finite() && args.overflow_threshold >= 0.0) {
        config_error!("overflow_threshold must be nonnegative");
    }
    let config = RunConfig {
        mode: model.mode,
        k: args.model.k,
        engine,
        generator: model.generator.to_string(),
        dt: args.dt,
        t_final: args.t_final,
        steps,
        sample_every: args.sample_every,
        grid,
        observers: names,
        initial_mean,
        output: args.output.clone(),
        single_threaded: args.single_threaded,
        threads: worker_threads(args.single_threaded)?,
        overflow_threshold: (args.overflow_threshold > 0.0).then_some(args.overflow_threshold),
        snapshots: args.snapshots,
    };
    let plan = Plan { config, model, observers };
    if engine != EngineChoice::Grid {
        let s0 = initial_moments(&plan);
        for (name, o) in plan.config.observers.iter().zip(&plan.observers) {
            quadratic_expectation(o, &s0).with_context(|| format!("observer `{name}`")).config()?;
        }
    }
    if uses_grid {
        let state = initial_grid(&plan)?;
        for (name, o) in plan.config.observers.iter().zip(&plan.observers) {
            grid_expectation(&state, o).with_context(|| format!("observer `{name}`")).config()?;
        }
    }
    Ok(plan)
}

fn initial_moments(plan: &Plan) -> MomentState {
    let basis = &plan.model.dynamics.basis;
    let mut s = MomentState::vacuum(basis);
    for (name, value) in &plan.config.initial_mean {
        if let Some(i) = Generator::from_name(name).and_then(|g| s.index_of(g)) {
            s.mean[i] = *value;
        }
    }
    s.second = DMatrix::identity(basis.len(), basis.len()) * 0.5 + &s.mean * s.mean.transpose();
    s
}

fn initial_grid(plan: &Plan) -> Result<GridState, Failure> {
    let spec = plan.config.grid.as_ref().expect("grid spec");
    let means: Vec<f64> =
        spec.axes.iter().map(|a| plan.config.initial_mean.get(a.label.name()).copied().unwrap_or(0.0)).collect();
    gaussian_state(spec, &means, &vec![FRAC_1_SQRT_2; means.len()]).config()
}

/// Indices 0, s, 2s, ... and always the final step.
fn sample_steps(steps: usize, every: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (0..=steps).step_by(every).collect();
    if *out.last().unwrap() != steps {
        out.push(steps);
    }
    out
}

fn run_moments(plan: &Plan) -> Result<Series, Failure> {
    let s0 = initial_moments(plan);
    let mut times = Vec::new();
    let mut rows = Vec::new();
    for step in sample_steps(plan.config.steps, plan.config.sample_every) {
        let t = step as f64 * plan.config.dt;
        let s = propagate_moments(&plan.model.dynamics, &s0, t).runtime()?;
        let mut row = Vec::with_capacity(plan.observers.len() + 1);
        for o in plan.observers.iter().chain([&plan.model.generator]) {
            row.push(quadratic_expectation(o, &s).runtime()?);
        }
        times.push(t);
        rows.push(row);
    }
    Ok(Series { times, rows, norms: None, files: Vec::new() })
}

fn write_marginal(path: &Path, marginal: &Marginal) -> Result<(), Failure> {
    let mut bytes = Vec::new();
    write_snapshot(&mut bytes, marginal).runtime()?;
    output::write_atomic(path, &bytes).runtime()
}

fn run_grid(plan: &Plan, dir: &Path) -> Result<Series, Failure> {
    let config = &plan.config;
    let started = Instant::now();
    let state = initial_grid(plan)?;
    let spec = state.spec().clone();
    let mut files = Vec::new();
    if config.snapshots {
        let path = PathBuf::from("snapshots/xy_initial.bin");
        write_marginal(&dir.join(&path), &marginal_density(&state, &[AxisLabel::X, AxisLabel::Y]).runtime()?)?;
        files.push(path);
    }
    let propagator = compile_splitting(&plan.model.generator, &spec, config.dt).config()?.with_threads(config.threads);
    let compiled = started.elapsed().as_secs_f64();
    let mut watched = plan.observers.clone();
    watched.push(plan.model.generator.clone());
    let options = EvolveOptions { stride: config.sample_every, overflow_threshold: config.overflow_threshold };
    let run = evolve(state, &propagator, config.t_final, &watched, options).map_err(|e| match e {
        e @ (GridError::StepMismatch { .. } | GridError::InvalidSpec(_)) => Failure::Config(e.into()),
        e => Failure::Runtime(anyhow!(e)),
    })?;
    let evolved = started.elapsed().as_secs_f64() - compiled;

    let rho = reduced_quantum_density(&run.state).runtime()?;
    let density =
        DensityRecord { time: config.t_final, purity: rho.purity(), validation: validate_density(&rho.matrix) };
    output::write_json(&dir.join("density.json"), &density).runtime()?;
    files.push("density.json".into());
    if config.snapshots {
        for (name, keep) in [("xy_final", vec![AxisLabel::X, AxisLabel::Y]), ("q_final", vec![AxisLabel::Q])] {
            let path = PathBuf::from(format!("snapshots/{name}.bin"));
            write_marginal(&dir.join(&path), &marginal_density(&run.state, &keep).runtime()?)?;
            files.push(path);
        }
    }
    let manifest = RunManifest {
        grid: spec,
        dt: config.dt,
        k: config.k,
        t_final: config.t_final,
        steps: run.steps,
        threads: propagator.threads(),
        koopmanian: config.generator.clone(),
        durations: BTreeMap::from([("compile".to_string(), compiled), ("evolve".to_string(), evolved)]),
        norm_drift: run.norm_drift(),
    };
    output::write_json(&dir.join("manifest.json"), &manifest).runtime()?;
    files.push("manifest.json".into());
    Ok(Series { times: run.times, rows: run.values, norms: Some(run.norms), files })
}

/// Relative drift of a conserved series, absolute when it starts at zero.
pub fn drift(series: &[f64]) -> f64 {
    let first = series[0];
    let spread = series.iter().fold(0.0, |m: f64, v| m.max((v - first).abs()));
    if first == 0.0 {
        spread
    } else {
        spread / first.abs()
    }
}

fn envelope(plan: &Plan, series: &Series) -> (Option<EnvelopeFit>, Option<String>) {
    let q2 = OperatorPolynomial::generator(Generator::Q).pow(2);
    let Some(column) = plan.observers.iter().position(|o| *o == q2) else {
        return (None, Some("q^2 is not observed".into()));
    };
    let amplitude: Vec<f64> = series.rows.iter().map(|row| row[column].sqrt()).collect();
    match fit_envelope(&series.times, &amplitude) {
        Ok(fit) => (Some(fit), None),
        Err(e) => (None, Some(e.to_string())),
    }
}

fn emit(plan: &Plan, dir: &Path, engine: &str, series: Series) -> Result<EngineReport, Failure> {
    let names = &plan.config.observers;
    let conserved = plan.model.generator_name.to_string();
    let mut header = vec!["t".to_string()];
    header.extend(names.iter().cloned());
    header.push(conserved.clone());
    if series.norms.is_some() {
        header.push("norm".into());
    }
    let rows = series.times.iter().enumerate().map(|(i, t)| {
        let mut row = vec![*t];
        row.extend(&series.rows[i]);
        if let Some(norms) = &series.norms {
            row.push(norms[i]);
        }
        row
    });
    let csv = PathBuf::from(format!("{engine}.csv"));
    output::write_atomic(&dir.join(&csv), output::csv(&header, rows).as_bytes()).runtime()?;

    let mut plots = Vec::new();
    for (o, name) in names.iter().enumerate() {
        let path = PathBuf::from(format!("plots/{engine}/{:02}_{}.csv", o, output::slug(name)));
        let rows = series.times.iter().zip(&series.rows).map(|(t, row)| vec![*t, row[o]]);
        let text = output::csv(&["t".to_string(), name.clone()], rows);
        output::write_atomic(&dir.join(&path), text.as_bytes()).runtime()?;
        plots.push(path);
    }

    let conserved_series: Vec<f64> = series.rows.iter().map(|row| row[names.len()]).collect();
    let (envelope, envelope_note) = envelope(plan, &series);
    Ok(EngineReport {
        engine: engine.to_string(),
        csv,
        plots,
        observers: names
            .iter()
            .zip(&plan.observers)
            .map(|(name, o)| ObserverInfo { name: name.clone(), classically_measurable: classically_measurable(o) })
            .collect(),
        conserved,
        conserved_drift: drift(&conserved_series),
        norm_drift: series.norms.as_ref().map(|n| n.iter().fold(0.0, |m: f64, v| m.max((v - n[0]).abs()))),
        envelope,
        envelope_note,
        files: series.files,
    })
}

/// Largest `|grid - moments|` per column, with the time it occurs.
pub fn deviations(names: &[String], times: &[f64], moments: &[Vec<f64>], grid: &[Vec<f64>]) -> Vec<Deviation> {
    names
        .iter()
        .enumerate()
        .map(|(o, name)| {
            let mut worst = Deviation { observer: name.clone(), max_abs_deviation: 0.0, time: times[0] };
            for (i, t) in times.iter().enumerate() {
                let d = (grid[i][o] - moments[i][o]).abs();
                if d > worst.max_abs_deviation {
                    worst = Deviation { observer: name.clone(), max_abs_deviation: d, time: *t };
                }
            }
            worst
        })
        .collect()
}

fn compare(plan: &Plan, dir: &Path, moments: &Series, grid: &Series) -> Result<Comparison, Failure> {
    if moments.times != grid.times {
        return Err(Failure::Runtime(anyhow!("engines sampled different times")));
    }
    let mut names = plan.config.observers.clone();
    names.push(plan.model.generator_name.to_string());
    let rows = deviations(&names, &moments.times, &moments.rows, &grid.rows);
    let mut text = String::from("observer,max_abs_deviation,time\n");
    for row in &rows {
        text.push_str(&format!(
            "{},{},{}\n",
            row.observer,
            output::number(row.max_abs_deviation),
            output::number(row.time)
        ));
    }
    let csv = PathBuf::from("comparison.csv");
    output::write_atomic(&dir.join(&csv), text.as_bytes()).runtime()?;
    Ok(Comparison { csv, rows })
}

/// Runs the configured engines and writes CSVs, plots and `report.json` into the output directory.
pub fn run(args: &SimulateArgs, engine: EngineChoice) -> Result<RunReport, Failure> {
    let started = Instant::now();
    let plan = prepare(args, engine)?;
    let dir = plan.config.output.clone();
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display())).runtime()?;
    let mut timings = BTreeMap::from([("prepare".to_string(), started.elapsed().as_secs_f64())]);

    let timed = |f: &dyn Fn() -> Result<Series, Failure>| {
        let t = Instant::now();
        f().map(|s| (s, t.elapsed().as_secs_f64()))
    };
    let (moments, grid) = std::thread::scope(|scope| {
        let grid = (engine != EngineChoice::Moments).then(|| scope.spawn(|| timed(&|| run_grid(&plan, &dir))));
        let moments = (engine != EngineChoice::Grid).then(|| timed(&|| run_moments(&plan)));
        (moments, grid.map(|h| h.join().expect("grid engine thread")))
    });
    let moments = moments.transpose()?;
    let grid = grid.transpose()?;

    let write = Instant::now();
    let comparison = match (&moments, &grid) {
        (Some((m, _)), Some((g, _))) => Some(compare(&plan, &dir, m, g)?),
        _ => None,
    };
    let mut engines = Vec::new();
    if let Some((series, seconds)) = moments {
        timings.insert("moments".into(), seconds);
        engines.push(emit(&plan, &dir, "moments", series)?);
    }
    if let Some((series, seconds)) = grid {
        timings.insert("grid".into(), seconds);
        engines.push(emit(&plan, &dir, "grid", series)?);
    }
    timings.insert("write".into(), write.elapsed().as_secs_f64());
    let spectrum = classify_spectrum(&plan.model.dynamics, DEFAULT_CLUSTER_TOLERANCE).summary();
    let report = RunReport { config: plan.config, spectrum, engines, comparison, timings };
    output::write_json(&dir.join("report.json"), &report).runtime()?;
    Ok(report)
}
