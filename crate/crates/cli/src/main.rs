//! `decolab` scenario runner.
//!
//! ```text
//! decolab run <SCENARIO> [--config FILE | --preset NAME] [--output-dir DIR]
//!                        [--seed N] [--threads N] [--KEY VALUE ...]
//! decolab validate [FILE] [--preset NAME] [--KEY VALUE ...]
//! ```
//!
//! Any `--KEY VALUE` pair not recognized as a runner option overrides the
//! scenario parameter `KEY` (dotted keys reach into nested objects).

mod config;
mod error;
mod output;
mod scenarios;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{CommandFactory, Parser, Subcommand};
use serde_json::json;

use config::{ConfigSource, Scenario};
use error::CliError;
use output::Output;

const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "decolab", version, about = "Decoherence simulation scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario and write its manifest and CSV outputs.
    Run {
        scenario: Scenario,
        /// JSON config file (`scenario`, `seed`, `output_dir`, `params`).
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        /// Built-in preset name (see `presets/`).
        #[arg(long)]
        preset: Option<String>,
        /// Output directory; defaults to `out/<scenario>`.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// RNG seed; falls back to the config, then `DECOLAB_SEED`, then 0.
        #[arg(long)]
        seed: Option<u64>,
        /// Cap on worker threads.
        #[arg(long)]
        threads: Option<usize>,
        /// Built-in demonstration instance (two-slit only).
        #[arg(long)]
        demo: bool,
    },
    /// Check a config without running it and print the derived timescales.
    Validate {
        config: Option<PathBuf>,
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
        /// Scenario, when the config does not name one.
        #[arg(long)]
        scenario: Option<Scenario>,
    },
}

type Overrides = Vec<(String, String)>;

/// Pulls `--key value` pairs that are not runner options out of the
/// argument list, leaving the rest for clap.
fn split_overrides(args: Vec<OsString>) -> Result<(Vec<OsString>, Overrides), CliError> {
    let command = Cli::command();
    let Some(sub) = args.get(1).and_then(|a| a.to_str()).and_then(|name| command.find_subcommand(name)) else {
        return Ok((args, Vec::new()));
    };
    let known: Vec<(String, bool)> = sub
        .get_arguments()
        .filter_map(|a| a.get_long().map(|l| (l.to_string(), a.get_action().takes_values())))
        .chain([("help".to_string(), false), ("version".to_string(), false)])
        .collect();

    let mut kept = args[..2].to_vec();
    let mut overrides = Vec::new();
    let mut rest = args.into_iter().skip(2);
    while let Some(arg) = rest.next() {
        let Some(text) = arg.to_str().and_then(|s| s.strip_prefix("--")).filter(|s| !s.is_empty()) else {
            kept.push(arg);
            continue;
        };
        let (name, inline) = match text.split_once('=') {
            Some((n, v)) => (n.to_string(), Some(v.to_string())),
            None => (text.to_string(), None),
        };
        if let Some((_, takes_value)) = known.iter().find(|(k, _)| *k == name) {
            let takes_value = *takes_value;
            kept.push(arg);
            if takes_value && inline.is_none() {
                kept.extend(rest.next());
            }
            continue;
        }
        let value = match inline {
            Some(v) => v,
            None => rest
                .next()
                .and_then(|v| v.into_string().ok())
                .ok_or_else(|| CliError::Validation(format!("parameter --{name} needs a value")))?,
        };
        overrides.push((name, value));
    }
    Ok((kept, overrides))
}

fn unix_time() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

fn run(cli: Cli, overrides: Vec<(String, String)>) -> Result<(), CliError> {
    match cli.command {
        Command::Run { scenario, config, preset, output_dir, seed, threads, demo } => {
            let source = match (config, preset) {
                (Some(path), _) => ConfigSource::File(path),
                (None, Some(name)) => ConfigSource::Preset(name),
                (None, None) => ConfigSource::Defaults,
            };
            let mut resolved = config::resolve(&source, Some(scenario), &overrides)?;
            if demo {
                if scenario != Scenario::TwoSlit {
                    return Err(CliError::Validation("--demo applies only to the two-slit scenario".into()));
                }
                resolved.params.insert("demo".into(), json!(true));
            }
            let seed = seed.or(resolved.seed).map(Ok).unwrap_or_else(config::env_seed)?;
            let dir = output_dir.or(resolved.output_dir).unwrap_or_else(|| PathBuf::from("out").join(scenario.name()));
            if let Some(n) = threads {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n.max(1))
                    .build_global()
                    .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
            }

            let prepared = scenarios::prepare(scenario, resolved.params)?;
            let violations = prepared.violations();
            if !violations.is_empty() {
                return Err(CliError::Validation(format!("invalid parameters:\n  {}", violations.join("\n  "))));
            }
            let mut out = Output::create(&dir, seed)?;
            let start = Instant::now();
            let timestamp = unix_time();
            let results = prepared.run(&mut out)?;
            let manifest = json!({
                "schema_version": SCHEMA_VERSION,
                "scenario": scenario.name(),
                "version": decolab::VERSION,
                "seed": seed,
                "params": prepared.params_json(),
                "files": out.files(),
                "results": results,
                "wall_time_seconds": start.elapsed().as_secs_f64(),
                "timestamp_unix": timestamp,
            });
            out.write_json("manifest.json", &manifest)?;
            println!("{}", serde_json::to_string_pretty(&manifest).expect("manifest serializes"));
            Ok(())
        }
        Command::Validate { config, preset, scenario } => {
            let source = match (config, preset) {
                (Some(path), _) => ConfigSource::File(path),
                (None, Some(name)) => ConfigSource::Preset(name),
                (None, None) => {
                    return Err(CliError::Validation("validate needs a config file or --preset".into()));
                }
            };
            let resolved = config::resolve(&source, scenario, &overrides)?;
            let report = match scenarios::prepare(resolved.scenario, resolved.params) {
                Ok(prepared) => json!({
                    "scenario": resolved.scenario.name(),
                    "violations": prepared.violations(),
                    "timescales": prepared.timescales(),
                }),
                Err(e) => json!({
                    "scenario": resolved.scenario.name(),
                    "violations": [e.to_string()],
                    "timescales": null,
                }),
            };
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let outcome = split_overrides(std::env::args_os().collect()).and_then(|(args, overrides)| {
        let cli = Cli::try_parse_from(args).unwrap_or_else(|e| e.exit());
        run(cli, overrides)
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("decolab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
