//! `nlfp`: scenario runner for the nonlocal Fokker–Planck solver.

mod config;
mod pipeline;
mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use nlfp_core::bernstein::BernsteinSpec;

use crate::config::{load_config, parse_json};
use crate::pipeline::Options;
use crate::report::Report;

#[derive(Parser)]
#[command(name = "nlfp", version, about = "Nonlocal nonlinear Fokker-Planck scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the PDE, run the enabled verifications and, if requested, the particles.
    Run(Common),
    /// Check the hypotheses on a Bernstein function file; no solve.
    CheckSpec(Common),
    /// Resolvent properties on the scenario's initial density.
    ResolventTest(Common),
    /// Particle system against the PDE solution.
    ParticleOnly(Common),
    /// Step-size refinement study.
    Convergence(Common),
}

#[derive(Args)]
struct Common {
    /// Input file (alternative to --config).
    input: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides the scenario's `output`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the scenario's `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Caps the worker threads.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    allow_hypothesis_fail: bool,
}

impl Common {
    fn input(&self) -> Result<&Path> {
        match (&self.input, &self.config) {
            (Some(_), Some(_)) => bail!("give the input either positionally or with --config, not both"),
            (Some(p), None) | (None, Some(p)) => Ok(p),
            (None, None) => bail!("missing input file (positional or --config)"),
        }
    }
}

fn execute(cli: Cli) -> Result<(Report, Option<PathBuf>)> {
    let (name, common) = match &cli.command {
        Command::Run(c) => ("run", c),
        Command::CheckSpec(c) => ("check-spec", c),
        Command::ResolventTest(c) => ("resolvent-test", c),
        Command::ParticleOnly(c) => ("particle-only", c),
        Command::Convergence(c) => ("convergence", c),
    };
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .context("configuring the thread pool")?;
    }
    let opts = Options {
        allow_hypothesis_fail: common.allow_hypothesis_fail,
    };
    let input = common.input()?;
    if name == "check-spec" {
        let text = fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
        let spec: BernsteinSpec = parse_json(&text, input)?;
        let report = pipeline::check_spec(&spec, &opts)?;
        return Ok((report, common.out.clone()));
    }
    let mut config = load_config(input)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    let out = common.out.clone().unwrap_or_else(|| config.output.clone());
    let report = match name {
        "run" => pipeline::run(config, &out, &opts),
        "resolvent-test" => pipeline::resolvent_test(config, &out, &opts),
        "particle-only" => pipeline::particle_only(config, &out, &opts),
        _ => pipeline::convergence(config, &out, &opts),
    }?;
    Ok((report, Some(out)))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok((report, out)) => {
            if let Some(dir) = &out {
                if let Err(e) = report.write(dir) {
                    eprintln!("error: {e:#}");
                    return ExitCode::from(2);
                }
            } else {
                match serde_json::to_string_pretty(&report) {
                    Ok(s) => println!("{s}"),
                    Err(e) => {
                        eprintln!("error: {e}");
                        return ExitCode::from(2);
                    }
                }
            }
            eprint!("{}", report.summary());
            if report.pass {
                ExitCode::SUCCESS
            } else {
                eprintln!("verification failed");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
