//! `hybridlab`: derivations, no-go certificates, spectra and simulations of
//! hybrid classical-quantum oscillators.

mod config;
mod failure;
mod model;
mod output;
mod report;
mod simulate;

use std::path::PathBuf;

use anyhow::anyhow;
use clap::{Args, CommandFactory, Parser, Subcommand};
use hybridlab::algebra::{coeff, format_equations, heisenberg_system, koopmanize, nogo_witness};
use hybridlab::moments::{classify_spectrum, DEFAULT_CLUSTER_TOLERANCE};

use failure::{config_error, Classify, Failure};
use model::{Mode, ModelArgs};
use simulate::{EngineChoice, SimulateArgs};

#[derive(Parser, Debug)]
#[command(name = "hybridlab", version, about = "Hybrid classical-quantum dynamics in the Koopman-von Neumann picture")]
struct Cli {
    /// Config file: `key = value` lines, optionally under `[subcommand]` sections.
    /// Flags on the command line take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the Heisenberg equations `dg/dt = -i[g, K]` for every generator.
    Derive(ModelArgs),
    /// Evaluate the Jacobi witness that rules out a Koopmanian with both target commutators.
    Nogo(NogoArgs),
    /// Eigenvalues of the moment generator with multiplicities and Jordan chains.
    Spectrum(SpectrumArgs),
    /// Run the moment and/or grid engine and write CSVs and a JSON report.
    Simulate(SimulateArgs),
    /// Run both engines and tabulate their largest deviations.
    Compare(SimulateArgs),
    /// Summarize run directories as a markdown table and JSON.
    Report(report::ReportArgs),
}

#[derive(Args, Debug)]
struct NogoArgs {
    #[arg(long, allow_negative_numbers = true)]
    k: f64,
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Clustering tolerance for eigenvalues.
    #[arg(long, default_value_t = DEFAULT_CLUSTER_TOLERANCE)]
    tolerance: f64,
    /// Print the JSON report instead of the summary.
    #[arg(long)]
    json: bool,
    /// Directory to write `spectrum.json` into.
    #[arg(long)]
    output: Option<PathBuf>,
}

const SUBCOMMANDS: [&str; 6] = ["derive", "nogo", "spectrum", "simulate", "compare", "report"];

/// Splices config-file entries in as flags right after the subcommand name.
fn apply_config(argv: Vec<String>) -> Result<Vec<String>, Failure> {
    let located = config::locate(&argv, &SUBCOMMANDS);
    let (Some(path), Some(position)) = (located.config, located.subcommand) else {
        return Ok(argv);
    };
    let command = Cli::command();
    let sub = command.find_subcommand(&argv[position]).expect("known subcommand");
    let entries = config::load(path.as_ref(), &argv[position]).config()?;
    let flags = config::to_flags(sub, &entries, &argv[position + 1..]).config()?;
    let mut out = argv[..=position].to_vec();
    out.extend(flags);
    out.extend_from_slice(&argv[position + 1..]);
    Ok(out)
}

fn derive(args: &ModelArgs) -> Result<(), Failure> {
    let (name, generator) = match args.mode {
        Mode::Hybrid => ("K", args.koopmanian().config()?),
        Mode::ClassicalClassical => {
            if args.koopmanian.is_some() {
                config_error!("--koopmanian requires --mode hybrid");
            }
            ("L", koopmanize(&args.hamiltonian().config()?).config()?)
        }
        Mode::QuantumQuantum => {
            config_error!("derive works on Koopmanians; use --mode hybrid or classical-classical")
        }
    };
    println!("{name} = {generator}");
    print!("{}", format_equations(&heisenberg_system(&generator)));
    Ok(())
}

fn nogo(args: &NogoArgs) -> Result<(), Failure> {
    let Some(k) = coeff::coeff_from_f64(args.k) else {
        config_error!("k must be finite, got {}", args.k);
    };
    let witness = nogo_witness(&k);
    if witness.is_zero() {
        println!("witness = 0: OK");
    } else {
        println!("witness = {witness}: FAIL (-i*k != 0: no Koopmanian yields both target commutators)");
    }
    Ok(())
}

fn spectrum(args: &SpectrumArgs) -> Result<(), Failure> {
    if !(args.tolerance.is_finite() && args.tolerance > 0.0) {
        config_error!("tolerance must be positive, got {}", args.tolerance);
    }
    let model = args.model.resolve().config()?;
    let report = classify_spectrum(&model.dynamics, args.tolerance);
    if let Some(dir) = &args.output {
        output::write_json(&dir.join("spectrum.json"), &report).runtime()?;
    }
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report).map_err(|e| Failure::Runtime(anyhow!(e)))?);
    } else {
        let basis: Vec<&str> = model.dynamics.basis.iter().map(|g| g.name()).collect();
        println!("{} = {}", model.generator_name, model.generator);
        println!("basis: {}", basis.join(", "));
        print!("{}", report.summary());
    }
    Ok(())
}

fn simulate(args: &SimulateArgs, engine: EngineChoice) -> Result<(), Failure> {
    let report = simulate::run(args, engine)?;
    println!("wrote {}", report.config.output.join("report.json").display());
    for e in &report.engines {
        let mut line = format!("{}: {} drift {:.3e}", e.engine, e.conserved, e.conserved_drift);
        if let Some(n) = e.norm_drift {
            line.push_str(&format!(", norm drift {n:.3e}"));
        }
        if let Some(fit) = &e.envelope {
            line.push_str(&format!(", sqrt<q^2> envelope degree {}", fit.degree));
        }
        println!("{line}");
    }
    if let Some(c) = &report.comparison {
        let width = c.rows.iter().map(|r| r.observer.len()).max().unwrap_or(8).max(8);
        println!("{:width$}  {:>22}  {:>10}", "observer", "max |grid - moments|", "at t");
        for r in &c.rows {
            println!("{:width$}  {:>22.6e}  {:>10.4}", r.observer, r.max_abs_deviation, r.time);
        }
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Derive(args) => derive(args),
        Command::Nogo(args) => nogo(args),
        Command::Spectrum(args) => spectrum(args),
        Command::Simulate(args) => simulate(args, args.engine),
        Command::Compare(args) => simulate(args, EngineChoice::Both),
        Command::Report(args) => report::run(args).map(|_| ()),
    }
}

fn main() {
    let result = apply_config(std::env::args().collect()).and_then(|argv| {
        let cli = Cli::try_parse_from(argv).unwrap_or_else(|e| e.exit());
        dispatch(&cli)
    });
    if let Err(failure) = result {
        eprintln!("{failure}");
        std::process::exit(failure.exit_code());
    }
}
