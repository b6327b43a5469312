//! `ews`: run scaling-law experiments from TOML configs or named presets, and
//! print analytic oracle values.

mod oracle;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use ews_core::experiment::{load_config, preset, preset_text, ExperimentConfig, ExperimentReport, Overrides, PRESETS};

#[derive(Parser)]
#[command(
    name = "ews",
    version,
    about = "Variance scaling laws of linear systems driven by red noise"
)]
struct Cli {
    /// Worker threads for the sweep engine (0 = all cores).
    #[arg(long, global = true, env = "EWS_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Run a named preset (`ews preset --list` shows them).
    Preset {
        #[arg(required_unless_present = "list")]
        name: Option<String>,
        /// List preset names.
        #[arg(long)]
        list: bool,
        /// Print the preset's config instead of running it.
        #[arg(long)]
        print: bool,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Print analytic stationary variances, e.g. `ews oracle scalar p=-0.5 kappa=2`.
    Oracle {
        /// scalar, cable, jordan or multiplication
        system: String,
        /// `key=value` parameters
        params: Vec<String>,
    },
    /// Check a config file without running it.
    Validate { config: PathBuf },
}

#[derive(Args)]
struct OverrideArgs {
    /// Root seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Independent trajectories per swept value.
    #[arg(long)]
    samples: Option<usize>,
    /// Trajectory length T.
    #[arg(long)]
    horizon: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl From<OverrideArgs> for Overrides {
    fn from(a: OverrideArgs) -> Self {
        Overrides {
            seed: a.seed,
            samples: a.samples,
            horizon: a.horizon,
            out: a.out,
        }
    }
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .context("building the worker pool")
}

fn run(mut config: ExperimentConfig, overrides: Overrides, threads: Option<usize>) -> Result<()> {
    config.apply(&overrides);
    let report = pool(threads)?.install(|| ews_core::experiment::run_experiment(&config))?;
    print_report(&report);
    Ok(())
}

fn print_report(report: &ExperimentReport) {
    println!(
        "{}: {} sweep(s) in {:.1} s",
        report.plan.config.name,
        report.results.len(),
        report.wall_time_seconds
    );
    for c in &report.columns {
        let fit = c.judged.as_ref().unwrap_or(&c.fits.power);
        let verdict = c.verdict.map(|v| v.to_string()).unwrap_or_else(|| "-".into());
        println!(
            "  {:<40} slope {:>9.4}  r2 {:.4}  {verdict}",
            c.label, fit.slope, fit.r_squared
        );
    }
    for f in &report.files {
        println!("  wrote {}", f.display());
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, overrides } => {
            let c = load_config(&config)?;
            run(c, overrides.into(), cli.threads)
        }
        Command::Preset {
            name,
            list,
            print,
            overrides,
        } => {
            if list {
                for p in PRESETS {
                    println!("{p}");
                }
                return Ok(());
            }
            let name = name.expect("clap requires a name");
            if print {
                print!("{}", preset_text(&name)?);
                return Ok(());
            }
            run(preset(&name)?, overrides.into(), cli.threads)
        }
        Command::Oracle { system, params } => {
            for (key, value) in oracle::evaluate(&system, &params)? {
                println!("{key} = {value:.16e}");
            }
            Ok(())
        }
        Command::Validate { config } => {
            let c = load_config(&config)?;
            let plan = c.plan()?;
            println!("{}: ok", config.display());
            for (prefix, s) in &plan.sweeps {
                println!(
                    "  {}{} sweep of {}: {} values x {} samples, {} probe(s)",
                    prefix,
                    s.swept.name(),
                    s.system.variant().name(),
                    s.values.len(),
                    s.n_samples,
                    s.probes.len()
                );
            }
            println!("  output: {}", plan.out_dir.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
