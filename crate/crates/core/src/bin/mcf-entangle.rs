use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mcf_entangle::config::ExperimentConfig;
use mcf_entangle::pipeline;
use mcf_entangle::Result;

/// Simulate and certify four-dimensional path-entangled photon pairs from a
/// multi-core fiber source.
#[derive(Parser)]
#[command(name = "mcf-entangle", version)]
struct Cli {
    /// TOML experiment configuration; defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Random seed, overriding `measurement.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, overriding `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample coincidence tables for every configured basis.
    Simulate(SimulateArgs),
    /// Certify entanglement from the five count tables in a directory.
    Certify {
        /// Directory holding counts_Z.csv and counts_X0.csv .. counts_X3.csv;
        /// defaults to the output directory.
        #[arg(long)]
        tables: Option<PathBuf>,
    },
    /// Simulate interferometric phase drift and its spectrum.
    Drift(DriftArgs),
    /// Fiber-distance budget of the pair rate.
    Linkbudget(LinkBudgetArgs),
    /// Simulate, certify, drift and link budget in one run.
    Report(SimulateArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// White-noise visibility of the source state.
    #[arg(long)]
    visibility: Option<f64>,
    /// Seconds of integration per basis.
    #[arg(long)]
    integration_time: Option<f64>,
    /// Accidental coincidences per second for every detector pair.
    #[arg(long)]
    accidental_rate: Option<f64>,
}

#[derive(Args)]
struct DriftArgs {
    /// Seconds.
    #[arg(long)]
    duration: Option<f64>,
    /// Sampling interval, seconds.
    #[arg(long)]
    dt: Option<f64>,
    /// Detector pair, e.g. `0,0`.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pair: Option<Vec<usize>>,
}

#[derive(Args)]
struct LinkBudgetArgs {
    /// Pairs per (s mW nm).
    #[arg(long)]
    brightness: Option<f64>,
    /// mW.
    #[arg(long)]
    pump_power: Option<f64>,
    /// nm.
    #[arg(long)]
    bandwidth: Option<f64>,
    /// dB/km.
    #[arg(long)]
    attenuation: Option<f64>,
    /// Fiber arms carrying photons (1 or 2).
    #[arg(long)]
    arms: Option<u8>,
    #[arg(long)]
    efficiency: Option<f64>,
    /// Pairs per second needed at the receivers.
    #[arg(long)]
    min_rate: Option<f64>,
    /// Distances to tabulate, km, comma separated.
    #[arg(long, value_delimiter = ',')]
    distances: Option<Vec<f64>>,
}

fn set<T>(target: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *target = v;
    }
}

fn apply_simulate(config: &mut ExperimentConfig, args: SimulateArgs) {
    set(&mut config.source.visibility, args.visibility);
    set(&mut config.measurement.integration_time, args.integration_time);
    if let Some(rate) = args.accidental_rate {
        config.measurement.accidental_rate = mcf_entangle::config::AccidentalRate::Uniform(rate);
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    set(&mut config.measurement.seed, cli.seed);
    let out = pipeline::output_dir(&config, cli.out);

    match cli.command {
        Command::Simulate(args) => {
            apply_simulate(&mut config, args);
            let sim = pipeline::run_simulate(&config, &out)?;
            for b in &sim.bases {
                println!("{}: {} coincidences", b.name, b.counts.total());
            }
            println!("tables written to {}", out.display());
        }
        Command::Certify { tables } => {
            let dir = tables.unwrap_or_else(|| out.clone());
            let report = pipeline::run_certify(&dir, &out)?;
            print!("{}", mcf_entangle::certify::summary_text(&report));
        }
        Command::Drift(args) => {
            set(&mut config.drift.duration, args.duration);
            set(&mut config.drift.dt, args.dt);
            if let Some(p) = args.pair {
                config.drift.pair = [p[0], p[1]];
            }
            config.validate()?;
            let d = pipeline::run_drift(&config, &out)?;
            println!(
                "dominant component {:.5} Hz; {:.2}% of power below {} Hz",
                d.dominant_frequency_hz,
                100.0 * d.power_fraction_below_cutoff,
                d.cutoff_hz
            );
        }
        Command::Linkbudget(args) => {
            let lb = &mut config.linkbudget;
            set(&mut lb.budget.brightness, args.brightness);
            set(&mut lb.budget.pump_power, args.pump_power);
            set(&mut lb.budget.bandwidth, args.bandwidth);
            set(&mut lb.budget.attenuation, args.attenuation);
            set(&mut lb.budget.arms, args.arms);
            set(&mut lb.budget.coincidence_efficiency, args.efficiency);
            set(&mut lb.budget.min_rate, args.min_rate);
            set(&mut lb.distances, args.distances);
            config.validate()?;
            let l = pipeline::run_linkbudget(&config.linkbudget.budget, &config.linkbudget.distances, &out)?;
            for p in &l.rates {
                println!("{:>8.1} km  {:.4e} pairs/s", p.distance_km, p.rate);
            }
            match l.max_distance {
                Some(m) if m.below_threshold_at_source => println!("source rate is below min_rate"),
                Some(m) => println!("max distance {:.3} km", m.km),
                None => println!("no distance limit"),
            }
        }
        Command::Report(args) => {
            apply_simulate(&mut config, args);
            let report = pipeline::run_report(&config, &out)?;
            print!("{}", pipeline::report_text(&report));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
