use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use treebridge_cli::config::keys_help;
use treebridge_cli::{commands, CliError, RunConfig, EXIT_CODES_HELP};

#[derive(Parser)]
#[command(name = "treebridge", version, about = "Brownian motion, bridges and inference on BHV tree space")]
#[command(after_long_help = long_help())]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args)]
struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, env = "TREEBRIDGE_OUT", default_value = ".")]
    out: PathBuf,
    /// Master seed (same as `seed=...`).
    #[arg(long)]
    seed: Option<u64>,
    /// Configuration overrides, `key=value`.
    #[arg(value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Geodesic distance and classification between two trees.
    Geodesic(Common),
    /// Fréchet mean and variance of a dataset.
    Frechet(Common),
    /// Forward random walks from a source tree.
    SimulateWalk(Common),
    /// MCMC over random-walk bridges between two trees.
    SampleBridge(Common),
    /// Posterior inference of the source tree and dispersion.
    Infer(Common),
    /// Marginal likelihood of a dataset for a fixed source and dispersion.
    Marginal {
        #[command(flatten)]
        common: Common,
        /// chib, tunnel, stepping-stone or star-exact.
        #[arg(long)]
        method: Option<String>,
        /// Source tree (Newick, or @file).
        #[arg(long)]
        x0: Option<String>,
        #[arg(long)]
        t0: Option<String>,
        #[arg(long)]
        m: Option<String>,
    },
    /// Exact four-taxon Brownian motion kernel on a grid.
    Exact4(Common),
    /// Split and topology counts of a dataset.
    Summarize(Common),
}

fn long_help() -> String {
    format!("{}\n\n{EXIT_CODES_HELP}\n\nThe output directory defaults to $TREEBRIDGE_OUT, else the current directory.", keys_help())
}

fn split_pairs(set: &[String]) -> Result<Vec<(String, String)>, CliError> {
    set.iter()
        .map(|s| {
            s.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| CliError::Config(format!("expected key=value, got `{s}`")))
        })
        .collect()
}

fn execute(cli: Cli) -> Result<serde_json::Value, CliError> {
    let (name, common, extra) = match cli.command {
        Cmd::Geodesic(c) => ("geodesic", c, vec![]),
        Cmd::Frechet(c) => ("frechet", c, vec![]),
        Cmd::SimulateWalk(c) => ("simulate-walk", c, vec![]),
        Cmd::SampleBridge(c) => ("sample-bridge", c, vec![]),
        Cmd::Infer(c) => ("infer", c, vec![]),
        Cmd::Marginal { common, method, x0, t0, m } => {
            let extra = [("method", method), ("x0", x0), ("t0", t0), ("m", m)]
                .into_iter()
                .filter_map(|(k, v)| v.map(|v| (k.to_string(), v)))
                .collect();
            ("marginal", common, extra)
        }
        Cmd::Exact4(c) => ("exact4", c, vec![]),
        Cmd::Summarize(c) => ("summarize", c, vec![]),
    };
    let text = common
        .config
        .as_ref()
        .map(|p| std::fs::read_to_string(p).map_err(|e| CliError::Io { path: p.clone(), source: e }))
        .transpose()?;
    let mut overrides = split_pairs(&common.set)?;
    overrides.extend(extra);
    if let Some(s) = common.seed {
        overrides.push(("seed".into(), s.to_string()));
    }
    let cfg = RunConfig::resolve(name, text.as_deref(), &overrides)?;
    commands::run(&cfg, &common.out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(v) => {
            println!("{}", serde_json::to_string_pretty(&v).expect("serializable"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            let msg = serde_json::json!({"error": e.kind(), "message": e.to_string()});
            eprintln!("{msg}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
