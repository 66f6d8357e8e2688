#![allow(clippy::needless_range_loop)]

mod commands;
mod output;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use resonator_core::Config;
use serde_json::json;

use crate::commands::Options;
use crate::output::Run;

/// Thermodynamics and photon counting statistics of a frequency-driven
/// resonator. Writes CSV data plus a JSON manifest into `--out`.
#[derive(Parser, Debug)]
#[command(name = "resonator", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON configuration; defaults to the subcommand's reference setting
    #[arg(long, global = true)]
    params: Option<PathBuf>,

    /// Output directory
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Highest cumulant order (cumulants, lr-cumulants)
    #[arg(long, global = true)]
    order: Option<usize>,

    /// Time at which to evaluate the distribution
    #[arg(long = "at-time", global = true)]
    at_time: Option<f64>,

    /// Half-width of the m window (distribution)
    #[arg(long = "m-max", global = true)]
    m_max: Option<usize>,

    /// Reserved: nothing here draws random numbers
    #[arg(long, global = true)]
    seedless: bool,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Temperature along the trajectory
    Temperature,
    /// Energy, power, heat current and impulse work
    Thermo,
    /// Periodic-state response next to the linear-response prediction
    LinearResponse,
    /// Cumulants of the transferred photon number
    Cumulants,
    /// Cumulant modulation against the linear-response prediction
    LrCumulants,
    /// Full distribution of the transferred photon number
    Distribution,
    /// Cross-check against the Fock-space oracle
    VerifyOracle,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Temperature => "temperature",
            Command::Thermo => "thermo",
            Command::LinearResponse => "linear-response",
            Command::Cumulants => "cumulants",
            Command::LrCumulants => "lr-cumulants",
            Command::Distribution => "distribution",
            Command::VerifyOracle => "verify-oracle",
        }
    }

    fn default_config(self) -> Option<Config> {
        match self {
            Command::Temperature => Some(commands::default_temperature()),
            Command::Thermo => Some(commands::default_thermo()),
            Command::LinearResponse => Some(commands::default_linear_response()),
            Command::Cumulants => Some(commands::default_cumulants()),
            Command::LrCumulants => Some(commands::default_lr_cumulants()),
            Command::Distribution => Some(commands::default_distribution()),
            Command::VerifyOracle => None,
        }
    }
}

fn check_flags(cli: &Cli) -> Result<()> {
    if cli.seedless {
        bail!("--seedless is reserved: no computation here uses random numbers");
    }
    let cmd = cli.command;
    if cli.order.is_some() && !matches!(cmd, Command::Cumulants | Command::LrCumulants) {
        bail!("--order does not apply to {}", cmd.name());
    }
    if (cli.at_time.is_some() || cli.m_max.is_some()) && cmd != Command::Distribution {
        bail!("--at-time and --m-max apply only to distribution");
    }
    if cli.params.is_some() && cmd == Command::VerifyOracle {
        bail!("verify-oracle runs a fixed suite and takes no --params");
    }
    Ok(())
}

fn load_config(cli: &Cli) -> Result<Option<Config>> {
    match &cli.params {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let cfg =
                Config::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
            Ok(Some(cfg))
        }
        None => Ok(cli.command.default_config()),
    }
}

fn execute(cli: &Cli) -> Result<bool> {
    check_flags(cli)?;
    let started = Instant::now();
    let cfg = load_config(cli)?;
    if let Some(c) = &cfg {
        for note in c.system.advisories() {
            eprintln!("warning: {note}");
        }
    }
    let opts = Options {
        order: cli.order.unwrap_or(4),
        at_time: cli.at_time,
        m_max: cli.m_max.unwrap_or(150),
    };
    let mut run = Run::new(&cli.out, cli.command.name())?;
    let mut passed = true;
    let context = || format!("{} failed", cli.command.name());
    match (cli.command, &cfg) {
        (Command::Temperature, Some(c)) => {
            commands::temperature(c, &mut run).with_context(context)?
        }
        (Command::Thermo, Some(c)) => commands::thermo(c, &mut run).with_context(context)?,
        (Command::LinearResponse, Some(c)) => {
            commands::linear_response(c, &mut run).with_context(context)?
        }
        (Command::Cumulants, Some(c)) => {
            commands::cumulants(c, &opts, &mut run).with_context(context)?
        }
        (Command::LrCumulants, Some(c)) => {
            commands::lr_cumulants(c, &opts, &mut run).with_context(context)?
        }
        (Command::Distribution, Some(c)) => {
            for w in commands::distribution_cmd(c, &opts, &mut run).with_context(context)? {
                eprintln!("warning: {w}");
            }
        }
        (Command::VerifyOracle, _) => {
            passed = commands::verify_oracle(&mut run).with_context(context)?;
        }
        (_, None) => unreachable!("every computing subcommand has a default configuration"),
    }
    for f in run.files() {
        println!("wrote {}", cli.out.join(f).display());
    }
    let manifest = run.finish(cfg.as_ref(), started.elapsed().as_secs_f64())?;
    println!("wrote {}", manifest.display());
    Ok(passed)
}

fn error_report(err: &anyhow::Error) -> serde_json::Value {
    let kind = err
        .chain()
        .find_map(|e| e.downcast_ref::<resonator_core::Error>())
        .map(|e| e.kind())
        .unwrap_or("cli");
    json!({
        "error": {
            "kind": kind,
            "message": err.to_string(),
            "causes": err.chain().skip(1).map(|e| e.to_string()).collect::<Vec<_>>(),
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!(
                "{}",
                json!({"error": {"kind": "verification", "message": "oracle checks failed", "causes": []}})
            );
            ExitCode::from(1)
        }
        Err(err) => {
            eprintln!("{}", error_report(&err));
            ExitCode::from(2)
        }
    }
}
