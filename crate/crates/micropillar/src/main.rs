use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use micropillar::commands::{run, Command};
use micropillar::config::ConfigSource;

#[derive(Parser)]
#[command(
    name = "micropillar",
    version,
    about = "Micropillar single-photon source design calculations"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Reflectance, transmittance and phase spectrum of a mirror stack
    Dbr(Args),
    /// Planar-cavity resonance, Q_2D and escape split
    CavityQ(Args),
    /// Fundamental pillar mode over the diameter grid
    Mode(Args),
    /// Fit the sidewall scattering coefficient to measured Q(d)
    Fit(Args),
    /// Efficiency versus diameter, one block per q_2d
    Sweep(Args),
    /// Best diameter for each q_2d and the global optimum
    Optimize(Args),
    /// Monte Carlo photon-fate tally
    Mc(Args),
}

#[derive(clap::Args)]
struct Args {
    /// Config file (key = value lines)
    #[arg(value_name = "CONFIG", conflicts_with = "config")]
    positional: Option<PathBuf>,
    /// Config file, same as the positional argument
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Data output file; standard output when absent
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Monte Carlo seed, overrides `seed`
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Override a config key, e.g. --set gamma=1.5
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    let (command, args) = match cli.command {
        Cmd::Dbr(a) => (Command::Dbr, a),
        Cmd::CavityQ(a) => (Command::CavityQ, a),
        Cmd::Mode(a) => (Command::Mode, a),
        Cmd::Fit(a) => (Command::Fit, a),
        Cmd::Sweep(a) => (Command::Sweep, a),
        Cmd::Optimize(a) => (Command::Optimize, a),
        Cmd::Mc(a) => (Command::Mc, a),
    };
    let mut source = match args.positional.or(args.config) {
        Some(path) => ConfigSource::load(&path)?,
        None => ConfigSource::default(),
    };
    for o in &args.overrides {
        source.set(o)?;
    }
    if let Some(seed) = args.seed {
        source.set(&format!("seed={seed}"))?;
    }
    if let Some(out) = &args.out {
        source.set(&format!("out={}", out.display()))?;
    }
    let out_path = source.resolve()?.out;
    let outcome = run(command, &source)?;
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    match out_path {
        Some(path) => {
            std::fs::write(&path, &outcome.data)
                .map_err(|e| anyhow::anyhow!("cannot write {}: {e}", path.display()))?;
            print!("{}", outcome.summary);
        }
        None => {
            eprint!("{}", outcome.summary);
            std::io::stdout().write_all(outcome.data.as_bytes())?;
        }
    }
    Ok(())
}
