use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use seek_cli::{
    cmd_avggap, cmd_certify, cmd_compare, cmd_lbs, cmd_simulate, load, resolve_output_dir, CliError, Outcome, Source,
    DEFAULT_EPSILONS, DEFAULT_GAP_HORIZON,
};

/// Source seeking with Lie-bracket extremum-seeking control.
#[derive(Parser)]
#[command(name = "seek", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Built-in scenario: table1, table2 or table3 (default table1).
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Scenario file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory. Falls back to output.dir, then $SEEK_OUT, then ./out.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for commands that run several simulations.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Print the report to stdout as well.
    #[arg(long, short)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the closed loop for the configured design.
    Simulate(Common),
    /// Run the third- and first-order designs on the same scenario.
    Compare(Common),
    /// Run the averaged system and its stability analysis.
    Lbs(Common),
    /// Sweep epsilon and report the closed-loop / averaged-system gap.
    Avggap {
        #[command(flatten)]
        common: Common,
        /// Comma-separated epsilon values.
        #[arg(long, value_delimiter = ',')]
        eps: Vec<f64>,
        /// Simulated time per sweep point (s).
        #[arg(long, default_value_t = DEFAULT_GAP_HORIZON)]
        horizon: f64,
    },
    /// Evaluate the stability certificate for the scenario's gains.
    Certify(Common),
}

fn run(cli: Cli) -> anyhow::Result<(Outcome, bool)> {
    let common = match &cli.command {
        Command::Simulate(c) | Command::Compare(c) | Command::Lbs(c) | Command::Certify(c) => c,
        Command::Avggap { common, .. } => common,
    };
    let source = match (&common.preset, &common.config) {
        (_, Some(path)) => Source::File(path.clone()),
        (Some(name), None) => Source::Preset(name.clone()),
        (None, None) => Source::Preset("table1".into()),
    };
    let cfg = load(&source).with_context(|| match &source {
        Source::Preset(name) => format!("loading preset `{name}`"),
        Source::File(path) => format!("loading {}", path.display()),
    })?;
    let env = std::env::var("SEEK_OUT").ok();
    let out = resolve_output_dir(common.out.as_deref(), &cfg, env.as_deref());

    let outcome = match &cli.command {
        Command::Simulate(_) => cmd_simulate(&cfg, &out)?,
        Command::Compare(c) => cmd_compare(&cfg, &out, c.jobs)?,
        Command::Lbs(_) => cmd_lbs(&cfg, &out)?,
        Command::Certify(_) => cmd_certify(&cfg, &out)?,
        Command::Avggap { eps, horizon, common } => {
            let eps = if eps.is_empty() {
                DEFAULT_EPSILONS.to_vec()
            } else {
                eps.clone()
            };
            cmd_avggap(&cfg, &out, &eps, *horizon, common.jobs)?
        }
    };
    Ok((outcome, common.verbose))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok((outcome, verbose)) => {
            if verbose {
                print!("{}", outcome.summary);
            }
            for path in &outcome.artifacts {
                println!("wrote {}", path.display());
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("seek: {e:#}");
            let code = e.downcast_ref::<CliError>().map_or(1, CliError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
