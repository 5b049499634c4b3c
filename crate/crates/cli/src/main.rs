use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use contraction_lab_cli::{
    cmd_identities, cmd_poincare, cmd_simulate, cmd_wave, init_threads, CliResult, ExperimentConfig,
};

#[derive(Parser)]
#[command(name = "a-contraction-lab", version, about = "Weighted relative-entropy contraction experiments")]
struct Cli {
    /// TOML experiment config; every key has a default.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, replaces `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Replaces the top-level `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Dot-path override such as `solver.cfl=0.3`; repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the traveling wave and check its exactness.
    Wave,
    /// Run the shifted PDE and write the contraction verdict.
    Simulate,
    /// Check the functional identities on random states.
    Identities {
        /// Number of states, replaces `identities.n_random`.
        #[arg(long)]
        n_random: Option<usize>,
    },
    /// Scan the Poincare-type inequality over sampled test functions.
    Poincare,
    /// Print the resolved config as TOML.
    PrintConfig,
}

fn execute(cli: Cli) -> CliResult<()> {
    let mut overrides = cli.overrides;
    if let Some(seed) = cli.seed {
        overrides.push(format!("seed={seed}"));
    }
    if let Some(out) = &cli.out {
        overrides.push(format!("output.dir={}", toml_string(&out.to_string_lossy())));
    }
    let cfg = ExperimentConfig::load(cli.config.as_deref(), &overrides)?;
    init_threads()?;
    let outcome = match cli.command {
        Command::PrintConfig => {
            print!("{}", cfg.to_toml());
            return Ok(());
        }
        Command::Wave => cmd_wave(&cfg)?,
        Command::Simulate => cmd_simulate(&cfg)?,
        Command::Identities { n_random } => {
            cmd_identities(&cfg, n_random.unwrap_or(cfg.identities.n_random))?
        }
        Command::Poincare => cmd_poincare(&cfg)?,
    };
    println!("{}", outcome.summary);
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    outcome.into_result().map(|_| ())
}

fn toml_string(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
