mod commands;
mod config;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use chrono::{SecondsFormat, Utc};
use clap::Parser;

use commands::Failure;
use config::{Command, RunConfig};
use output::{RunManifest, RunWriter};

/// Batch runner for the mb-lab experiments.
///
/// Exit status: 0 when every pass criterion of the run holds, 1 on a failed
/// criterion or numerical failure, 2 on usage or configuration errors.
#[derive(Parser, Debug)]
#[command(name = "mb-lab", version)]
struct Cli {
    command: Command,
    /// Flat key=value configuration file.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Run directory; defaults to $MB_LAB_OUT/<command>, else runs/<command>.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override one key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

fn usage(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("mb-lab: {msg}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => return usage(format!("cannot read config {}: {e}", cli.config.display())),
    };
    let cfg = match RunConfig::build(cli.command, &text, &cli.sets, cli.seed) {
        Ok(c) => c,
        Err(e) => return usage(e),
    };
    let dir = cli.out.unwrap_or_else(|| {
        let root = std::env::var_os("MB_LAB_OUT").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("runs"));
        root.join(cli.command.name())
    });
    let mut writer = match RunWriter::new(&dir) {
        Ok(w) => w,
        Err(e) => return usage(format!("{e:#}")),
    };
    let started = now();
    let (status, failures) = match commands::run(&cfg) {
        Err(Failure::Usage(m)) => return usage(m),
        Err(Failure::Numeric { criterion, message }) => {
            eprintln!("mb-lab: FAIL {criterion}: {message}");
            (1, vec![criterion])
        }
        Ok(out) => {
            for (name, data) in &out.files {
                if let Err(e) = writer.write(name, data) {
                    eprintln!("mb-lab: {e:#}");
                    return ExitCode::from(2);
                }
            }
            for f in &out.failures {
                eprintln!("mb-lab: FAIL {f}");
            }
            (if out.failures.is_empty() { 0 } else { 1 }, out.failures)
        }
    };
    let manifest = RunManifest {
        tool: "mb-lab",
        version: env!("CARGO_PKG_VERSION"),
        registry_version: mb_lab::constants::REGISTRY_VERSION,
        config: &cfg,
        started,
        finished: now(),
        status,
        failures,
        files: vec![],
    };
    match writer.finish(manifest) {
        Ok(p) => println!("{}", p.display()),
        Err(e) => {
            eprintln!("mb-lab: {e:#}");
            return ExitCode::from(2);
        }
    }
    ExitCode::from(status as u8)
}
