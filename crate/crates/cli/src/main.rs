// SPDX-License-Identifier: MIT OR Apache-2.0

//! `cpclust` command-line front end.
//!
//! Exit codes: 0 success, 2 config error, 3 data error, 4 runtime failure
//! (including a failed oracle check).

mod bench;
mod config;
mod error;
mod io;
mod oracle_check;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cpclust::simulate::generate_dataset;
use cpclust::sampler::derive_seed;
use cpclust::GibbsState;

use crate::config::{BenchConfig, Overrides, RunConfig, SimulateConfig};
use crate::error::{CliError, CliResult, Context};
use crate::io::{ensure_dir, read_config, read_dataset, read_json, write_dataset, write_json};
use crate::run::{fit, summarize_chains, write_chains, write_summary, ResolvedConfig, VERSION};

#[derive(Parser)]
#[command(name = "cpclust", version, about = "Cluster sequences by change-point profile")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw scenario datasets and their generating parameters
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the Gibbs sampler on a wide CSV
    Fit {
        #[arg(long)]
        data: PathBuf,
        /// JSON run config; defaults apply when omitted
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Summarize the chains of a fit directory
    Summarize {
        #[arg(long)]
        run: PathBuf,
        /// Generating parameters as written by `simulate`
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Output directory; defaults to the run directory
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare sampler frequencies with exact enumeration
    OracleCheck {
        #[arg(long, value_enum, default_value = "all")]
        suite: oracle_check::Suite,
        /// Retained draws per check
        #[arg(long)]
        draws: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Simulate and fit every dataset of a scenario grid
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
}

fn cmd_simulate(config: &Path, out: &Path) -> CliResult<()> {
    let cfg: SimulateConfig = read_config(config)?;
    let spec = cfg.scenario()?;
    ensure_dir(out)?;
    write_json(&out.join("simulate_config.json"), &cfg)?;
    for d in 0..cfg.datasets {
        let seed = derive_seed(cfg.seed_base, d as u64);
        let (data, truth) = generate_dataset(&spec, seed).config()?;
        write_dataset(&out.join(format!("data_{d}.csv")), &data)?;
        write_json(&out.join(format!("truth_{d}.json")), &truth)?;
    }
    println!(
        "simulate: {} datasets of {}x{} in {}",
        cfg.datasets,
        spec.n,
        spec.m,
        out.display()
    );
    Ok(())
}

fn cmd_fit(data: &Path, config: Option<&Path>, out: &Path, overrides: &Overrides) -> CliResult<()> {
    let mut cfg: RunConfig = match config {
        Some(p) => read_config(p)?,
        None => RunConfig::default(),
    };
    cfg.apply(overrides);
    cfg.validate()?;
    let raw = read_dataset(data)?;
    let workers = cfg.worker_count();
    let f = fit(&raw, &cfg, workers)?;
    ensure_dir(out)?;
    let mut resolved = cfg.clone();
    resolved.seeds = Some(f.seeds.clone());
    write_json(
        &out.join("resolved_config.json"),
        &ResolvedConfig {
            version: VERSION.to_string(),
            data: data.display().to_string(),
            sequences: f.data.num_sequences(),
            locations_raw: raw.num_locations(),
            locations: f.data.num_locations(),
            seeds: f.seeds.clone(),
            config: resolved,
        },
    )?;
    write_chains(out, &f.chains)?;
    let summary = summarize_chains(&f.chains, None)?;
    write_summary(out, &summary, None)?;
    report(&summary);
    Ok(())
}

fn cmd_summarize(run_dir: &Path, truth: Option<&Path>, out: Option<&Path>) -> CliResult<()> {
    let chains = run::read_chains(run_dir)?;
    let truth: Option<GibbsState> = truth.map(read_json).transpose()?;
    let summary = summarize_chains(&chains, truth.as_ref())?;
    let out = out.unwrap_or(run_dir);
    ensure_dir(out)?;
    write_summary(out, &summary, truth.as_ref())?;
    report(&summary);
    Ok(())
}

fn report(s: &run::RunSummary) {
    let p = &s.posterior;
    print!(
        "L mode {} ({} draws, modal partition {:.3}), max R-hat {}",
        p.l_mode,
        p.draws,
        p.modal_partition_frequency,
        s.max_rhat.map_or("n/a".to_string(), |r| format!("{r:.4}"))
    );
    if let Some(t) = &p.truth {
        print!(", V-measure {:.4}, sigma2 MAD {:.4}", t.v_measure, t.sigma2_mad);
    }
    println!();
}

fn cmd_oracle_check(suite: oracle_check::Suite, draws: Option<usize>, seed: u64) -> CliResult<()> {
    let checks = oracle_check::run(suite, draws, seed)?;
    for c in &checks {
        println!(
            "{}: {} {:.4} < {} {}",
            c.name,
            c.statistic,
            c.value,
            c.limit,
            if c.passed() { "PASS" } else { "FAIL" }
        );
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed()).map(|c| c.name).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Runtime(format!("oracle check failed: {}", failed.join(", "))))
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate { config, out } => cmd_simulate(&config, &out),
        Command::Fit {
            data,
            config,
            out,
            overrides,
        } => cmd_fit(&data, config.as_deref(), &out, &overrides),
        Command::Summarize { run, truth, out } => cmd_summarize(&run, truth.as_deref(), out.as_deref()),
        Command::OracleCheck { suite, draws, seed } => cmd_oracle_check(suite, draws, seed),
        Command::Bench { config, out, workers } => {
            let cfg: BenchConfig = read_config(&config)?;
            bench::run(&cfg, &out, workers)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
