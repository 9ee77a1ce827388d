use std::path::PathBuf;
use std::process::ExitCode;

use btspec_cli::commands::{self, DEFAULT_FIELD_RESOLUTION};
use btspec_cli::{load, Result};
use clap::{Args, Parser, Subcommand};

/// Spectra, branch points and spin-echo signals of the Bloch-Torrey operator.
#[derive(Parser)]
#[command(name = "btspec", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// key = value config file
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `-s N=200`; repeatable
    #[arg(short = 's', long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (beats the config file and BTSPEC_OUT_DIR)
    #[arg(short, long)]
    out: Option<PathBuf>,
}

impl Common {
    fn overrides(&self) -> Vec<String> {
        let mut v = self.set.clone();
        if let Some(o) = &self.out {
            v.push(format!("out_dir={}", o.display()));
        }
        v
    }
}

#[derive(Subcommand)]
enum Command {
    /// Track eigenvalue branches over [0, g_max] and locate branch points
    Sweep(Common),
    /// Signal for each pulse duration by every available route
    Signal(Common),
    /// Export one eigenfunction on the y = 0 section
    Fieldmap {
        #[command(flatten)]
        common: Common,
        /// 1-based branch label
        #[arg(short = 'j', long)]
        branch: usize,
        /// Dimensionless gradient strength
        #[arg(short, long)]
        g: f64,
        #[arg(short, long, default_value_t = DEFAULT_FIELD_RESOLUTION)]
        resolution: usize,
    },
}

fn run(cli: Cli) -> Result<Vec<PathBuf>> {
    match cli.command {
        Command::Sweep(c) => commands::sweep(&load(c.config.as_deref(), &c.overrides())?),
        Command::Signal(c) => commands::signal(&load(c.config.as_deref(), &c.overrides())?),
        Command::Fieldmap { common, branch, g, resolution } => {
            let cfg = load(common.config.as_deref(), &common.overrides())?;
            commands::fieldmap(&cfg, branch, g, resolution)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("btspec: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
