//! The `tvwhittle` command-line tool: AR(1) grid-posterior study, replicated
//! tvAR experiments, model fitting and self-test.

pub mod args;
pub mod config;
pub mod experiment;
pub mod fit;
pub mod grid;
pub mod output;
pub mod selftest;

use anyhow::Result;

use args::{Cli, Command};
use config::{ExperimentSettings, FitSettings, GridSettings, RunConfig};

/// Config file values with command-line overrides on top.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.overlay(&cli.overrides());
    Ok(cfg)
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    pool.install(f)
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: &Cli) -> Result<i32> {
    let cfg = resolve_config(cli)?;
    match &cli.command {
        Command::GridAr1(a) => {
            let s = GridSettings::resolve(&cfg)?;
            if a.dry_run {
                std::fs::create_dir_all(&s.common.out)?;
                output::write_toml(&s.common.out.join("config.toml"), &s.echo())?;
                return Ok(0);
            }
            let rows = in_pool(s.common.threads, || grid::run(&s))?;
            println!("{:>8} {:>6} {:>12} {:>14}", "phi", "T", "efficiency", "perturbation");
            for r in rows {
                println!("{:>8.3} {:>6} {:>12.4} {:>14.5}", r.phi_true, r.t_len, r.efficiency, r.perturbation);
            }
        }
        Command::Experiment(a) => {
            let s = ExperimentSettings::resolve(&cfg)?;
            if a.dry_run {
                experiment::write_config(&s)?;
                return Ok(0);
            }
            let summary = in_pool(s.common.threads, || experiment::run(&s))?;
            println!("{:<16} {:>10} {:>12} {:>14} {:>6}", "method", "rmse", "efficiency", "perturbation", "failed");
            for m in summary {
                println!(
                    "{:<16} {:>10.5} {:>12.4} {:>14.5} {:>6}",
                    m.method.to_string(),
                    m.rmse,
                    m.efficiency,
                    m.perturbation,
                    m.n_failed
                );
            }
        }
        Command::Fit(a) => {
            let s = FitSettings::resolve(&cfg)?;
            if a.dry_run {
                fit::dry_run(&s)?;
                return Ok(0);
            }
            let draws = fit::run(&s)?;
            println!(
                "{} draws, {} states, mean update rate {:.3}; output in {}",
                draws.n_draws,
                draws.n_states,
                draws.mean_update_rate(),
                s.common.out.display()
            );
        }
        Command::Selftest(a) => {
            let fault = a.inject_fault.as_deref().map(str::parse).transpose()?;
            let checks = selftest::run_checks(fault);
            print!("{}", selftest::report(&checks));
            if checks.iter().any(|c| !c.passed()) {
                return Ok(1);
            }
        }
    }
    Ok(0)
}
