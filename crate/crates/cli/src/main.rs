//! `lexmap`: fit, evaluate and simulate form-meaning mappings from the
//! command line. Data goes to files in the output directory; diagnostics go
//! to stderr.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Result};
use clap::{Parser, Subcommand};

use config::RunConfig;

#[derive(Parser)]
#[command(name = "lexmap", version, about = "Linear form-meaning mappings for lexicon experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a mapping and write it with an evaluation report
    Train(RunArgs),
    /// Evaluate a saved mapping
    Eval(RunArgs),
    /// Learn incrementally over an event file and compare with the frequency-weighted solution
    Trajectory(RunArgs),
    /// Priming measures for prime/target pairs
    Prime(RunArgs),
    /// Generate a synthetic lexicon, embeddings and event file
    Synth(RunArgs),
    /// Fit every registered method on the same data
    Compare(RunArgs),
}

/// Settings come from defaults, then `--config`, then the flags below.
#[derive(clap::Args)]
struct RunArgs {
    /// key=value file; a previous run's `run.meta` works
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override any config key
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    lexicon: Option<String>,
    #[arg(long)]
    embeddings: Option<String>,
    #[arg(long)]
    events: Option<String>,
    #[arg(long)]
    mapping: Option<String>,
    #[arg(long)]
    conditions: Option<String>,
    #[arg(long)]
    out: Option<String>,
    /// n-gram size
    #[arg(long)]
    gram: Option<String>,
    /// orthography or pronunciation
    #[arg(long)]
    source: Option<String>,
    /// Comma-separated: segmental, tritone, tone_marked
    #[arg(long)]
    channels: Option<String>,
    /// el, fil or whl
    #[arg(long)]
    method: Option<String>,
    /// comprehension or production
    #[arg(long)]
    direction: Option<String>,
    /// raw, log or scaled:K
    #[arg(long)]
    transform: Option<String>,
    #[arg(long)]
    ridge: Option<String>,
    #[arg(long)]
    eta: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Events per trajectory checkpoint
    #[arg(long)]
    interval: Option<String>,
    /// Comma-separated accuracy cut-offs
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    words: Option<String>,
    #[arg(long)]
    dimension: Option<String>,
    #[arg(long)]
    exponent: Option<String>,
    #[arg(long)]
    base_count: Option<String>,
    #[arg(long)]
    emit_events: Option<String>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        let flags = [
            ("lexicon", &self.lexicon),
            ("embeddings", &self.embeddings),
            ("events", &self.events),
            ("mapping", &self.mapping),
            ("conditions", &self.conditions),
            ("out", &self.out),
            ("gram", &self.gram),
            ("source", &self.source),
            ("channels", &self.channels),
            ("method", &self.method),
            ("direction", &self.direction),
            ("transform", &self.transform),
            ("ridge", &self.ridge),
            ("eta", &self.eta),
            ("seed", &self.seed),
            ("interval", &self.interval),
            ("k", &self.k),
            ("words", &self.words),
            ("dimension", &self.dimension),
            ("exponent", &self.exponent),
            ("base_count", &self.base_count),
            ("emit_events", &self.emit_events),
        ];
        for (key, value) in flags {
            if let Some(value) = value {
                cfg.set(key, value)?;
            }
        }
        for pair in &self.set {
            let (key, value) = pair.split_once('=').ok_or_else(|| anyhow!("--set expects KEY=VALUE, got `{pair}`"))?;
            cfg.set(key, value)?;
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<()> {
    let (args, command): (&RunArgs, fn(&RunConfig) -> Result<()>) = match &cli.command {
        Command::Train(a) => (a, commands::train),
        Command::Eval(a) => (a, commands::eval),
        Command::Trajectory(a) => (a, commands::trajectory),
        Command::Prime(a) => (a, commands::prime),
        Command::Synth(a) => (a, commands::synth),
        Command::Compare(a) => (a, commands::compare),
    };
    command(&args.resolve()?)
}

/// Joins the error chain, skipping causes already quoted by their parent.
fn describe(e: &anyhow::Error) -> String {
    let mut text = String::new();
    for cause in e.chain() {
        let part = cause.to_string();
        if !text.ends_with(&part) {
            if !text.is_empty() {
                text.push_str(": ");
            }
            text.push_str(&part);
        }
    }
    text
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::FAILURE
        }
    }
}
