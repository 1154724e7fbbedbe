//! `ucca-rec`: command-line front end for the recursive UCCA parser.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use recursive_ucca::config::{Config, ConfigError};
use recursive_ucca::pipeline::{self, PipelineError};

#[derive(Parser, Debug)]
#[command(name = "ucca-rec", version, about = "Recursive UCCA parsing with a masked sequence tagger")]
struct Cli {
    /// Configuration file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Replay gold passages instead of running the trained model.
    #[arg(long, global = true)]
    oracle: bool,
    /// Write a per-sentence decoding trace here.
    #[arg(long, global = true)]
    trace: Option<PathBuf>,
    /// Override any configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Expand training passages into masked examples.
    Expand,
    /// Train the tagger and write a checkpoint.
    Train,
    /// Parse sentences into passages.
    Parse,
    /// Score predicted passages against gold passages.
    Eval,
    /// Sweep the remote-detection threshold on development passages.
    Tune,
}

fn build_config(cli: &Cli) -> Result<Config, ConfigError> {
    let mut cfg = Config::load(cli.config.as_deref())?;
    let cwd = std::env::current_dir().unwrap_or_default();
    for o in &cli.overrides {
        let (k, v) = o.split_once('=').ok_or(ConfigError::Syntax {
            origin: format!("--set {o}"),
            line: 1,
        })?;
        cfg.set(k, v, &cwd, "--set")?;
    }
    if let Some(seed) = cli.seed {
        cfg.set("seed", &seed.to_string(), &cwd, "--seed")?;
    }
    if let Some(w) = cli.workers {
        cfg.set("workers", &w.to_string(), &cwd, "--workers")?;
    }
    if let Some(t) = &cli.trace {
        cfg.set("trace", &t.display().to_string(), &cwd, "--trace")?;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), PipelineError> {
    let cfg = build_config(cli)?;
    match cli.command {
        Command::Expand => print!("{}", pipeline::cmd_expand(&cfg)?),
        Command::Train => print!("{}", pipeline::cmd_train(&cfg)?),
        Command::Parse => {
            let passages = pipeline::cmd_parse(&cfg, cli.oracle)?;
            println!("parsed {} sentences", passages.len());
        }
        Command::Eval => print!("{}", pipeline::cmd_eval(&cfg)?.to_text()),
        Command::Tune => print!("{}", pipeline::cmd_tune(&cfg, cli.oracle)?.to_text()),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
