//! Command-line arguments.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{OneOrMany, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "tvwhittle", version, about = "Whittle-type likelihoods for time-varying AR models")]
pub struct Cli {
    /// Flat TOML file of run settings; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for replications (0 = all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact vs Whittle grid posteriors for a stationary AR(1).
    GridAr1(RunArgs),
    /// Replicated tvAR simulation experiment.
    Experiment(RunArgs),
    /// Fit a tvAR model to a CSV series.
    Fit(RunArgs),
    /// Run the fast invariant checks.
    Selftest(SelftestArgs),
}

fn on_off(s: &str) -> Result<bool, String> {
    match s {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        other => Err(format!("expected on or off, got '{other}'")),
    }
}

#[derive(Debug, Default, Args)]
pub struct RunArgs {
    /// AR(1) coefficients, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub phi: Option<Vec<f64>>,
    /// Series length(s), comma separated.
    #[arg(long = "T", value_delimiter = ',')]
    pub t_len: Option<Vec<usize>>,
    #[arg(long)]
    pub n_rep: Option<usize>,
    /// Experiment number (1, 2 or 3).
    #[arg(long)]
    pub experiment: Option<u8>,
    /// full or desk.
    #[arg(long)]
    pub preset: Option<String>,
    /// Method tokens, e.g. dw:15:ta,bw:30:15.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,
    /// td, whittle, dw or bw.
    #[arg(long)]
    pub family: Option<String>,
    /// none, ta, tar, pw, bc or bcnt.
    #[arg(long = "mod")]
    pub modification: Option<String>,
    /// Block segment length.
    #[arg(long = "N")]
    pub seg_len: Option<usize>,
    /// Block step.
    #[arg(long = "S")]
    pub step: Option<usize>,
    /// Dynamic Whittle half-window.
    #[arg(long = "m")]
    pub m: Option<usize>,
    /// Stochastic volatility, on or off.
    #[arg(long, value_parser = on_off)]
    pub sv: Option<bool>,
    /// none or first.
    #[arg(long)]
    pub difference: Option<String>,
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long)]
    pub n_iter: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    #[arg(long)]
    pub particles: Option<usize>,
    /// Input CSV for fit.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub n_freq: Option<usize>,
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// Write the resolved config.toml and derived.toml, then stop.
    #[arg(long)]
    pub dry_run: bool,
}

#[derive(Debug, Default, Args)]
pub struct SelftestArgs {
    #[arg(long, hide = true)]
    pub inject_fault: Option<String>,
}

impl Cli {
    /// Overrides given on the command line, as a config layer.
    pub fn overrides(&self) -> RunConfig {
        let mut c = RunConfig {
            seed: self.seed,
            threads: self.threads,
            out: self.out.as_ref().map(|p| p.display().to_string()),
            ..RunConfig::default()
        };
        let a = match &self.command {
            Command::GridAr1(a) | Command::Experiment(a) | Command::Fit(a) => a,
            Command::Selftest(_) => return c,
        };
        c.phi = a.phi.clone().map(OneOrMany::Many);
        c.t_len = a.t_len.clone().map(|v| if v.len() == 1 { OneOrMany::One(v[0]) } else { OneOrMany::Many(v) });
        c.n_rep = a.n_rep;
        c.experiment = a.experiment;
        c.preset = a.preset.clone();
        c.methods = a.methods.clone();
        c.family = a.family.clone();
        c.modification = a.modification.clone();
        c.seg_len = a.seg_len;
        c.step = a.step;
        c.m = a.m;
        c.sv = a.sv;
        c.difference = a.difference.clone();
        c.order = a.order;
        c.n_iter = a.n_iter;
        c.burn_in = a.burn_in;
        c.thin = a.thin;
        c.n_particles = a.particles;
        c.input = a.input.as_ref().map(|p| p.display().to_string());
        c.n_freq = a.n_freq;
        c.grid_points = a.grid_points;
        c
    }
}
