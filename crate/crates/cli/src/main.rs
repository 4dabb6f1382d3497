use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use mscr_cli::commands::{self, RepairOptions};
use mscr_cli::config::{ExperimentConfig, ParamsConfig};

#[derive(Parser)]
#[command(name = "mscr", version, about = "Cooperative regenerating code toolkit")]
struct Cli {
    /// Optional TOML experiment configuration; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct ParamFlags {
    #[arg(short, long)]
    n: Option<usize>,
    #[arg(short, long)]
    k: Option<usize>,
    #[arg(short, long)]
    d: Option<usize>,
    /// Number of simultaneous failures repaired together.
    #[arg(long)]
    h: Option<usize>,
    /// Prime field modulus.
    #[arg(short, long)]
    p: Option<u64>,
}

impl ParamFlags {
    fn to_config(&self) -> ParamsConfig {
        ParamsConfig {
            n: self.n,
            k: self.k,
            d: self.d,
            h: self.h,
            p: self.p,
            lambdas: None,
            mus: None,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Encode a file into n chunk files.
    Encode {
        input: PathBuf,
        /// Output directory (or `output.dir` in the config).
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        params: ParamFlags,
    },
    /// Quarantine the chunks of exactly h nodes.
    Fail {
        dir: PathBuf,
        #[arg(value_delimiter = ',', required = false)]
        nodes: Vec<usize>,
    },
    /// Restore the failed chunks by cooperative repair.
    Repair {
        dir: PathBuf,
        /// Helper nodes, comma separated; defaults to the d lowest survivors.
        #[arg(long, value_delimiter = ',')]
        helpers: Option<Vec<usize>>,
        /// Write the transcript of every stripe instead of stripe 0 only.
        #[arg(long)]
        full_transcript: bool,
        #[arg(long)]
        transcript: Option<PathBuf>,
        /// Also write the metrics as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Check chunk checksums and parity.
    Verify { dir: PathBuf },
    /// Rebuild the original file from k chunks.
    Decode {
        dir: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Nodes to read, comma separated; defaults to the k lowest intact.
        #[arg(long, value_delimiter = ',')]
        nodes: Option<Vec<usize>>,
    },
    /// Print the access comparison table.
    Table {
        /// Extra rows as `d-k,h`, repeatable.
        #[arg(long = "row", value_parser = parse_row)]
        rows: Vec<(u64, u64)>,
        #[arg(long)]
        csv: bool,
        /// Append published parameters of other constructions.
        #[arg(long)]
        literature: bool,
    },
    /// Validate parameters and print derived quantities.
    ParamsCheck {
        #[command(flatten)]
        params: ParamFlags,
    },
    /// In-memory repair experiment against the reconstruct oracle.
    Simulate {
        #[command(flatten)]
        params: ParamFlags,
        #[arg(long, value_delimiter = ',')]
        failed: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        helpers: Option<Vec<usize>>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 20)]
        trials: usize,
    },
}

fn parse_row(s: &str) -> std::result::Result<(u64, u64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected `d-k,h`, got `{s}`"))?;
    let num = |x: &str| x.trim().parse::<u64>().map_err(|e| format!("`{x}`: {e}"));
    Ok((num(a)?, num(b)?))
}

fn run(cli: Cli) -> Result<bool> {
    let cfg = ExperimentConfig::load_optional(cli.config.as_deref())?;
    match cli.command {
        Command::Encode { input, out, params } => {
            let spec = commands::resolve_spec(&params.to_config(), &cfg.params)?;
            let dir = out
                .or(cfg.output.dir)
                .ok_or_else(|| anyhow!("no output directory given"))?;
            print!("{}", commands::encode_file(&input, &dir, &spec)?);
        }
        Command::Fail { dir, nodes } => {
            let nodes = if nodes.is_empty() {
                cfg.failed.context("no nodes to fail given")?
            } else {
                nodes
            };
            print!("{}", commands::fail_nodes(&dir, &nodes)?);
        }
        Command::Repair {
            dir,
            helpers,
            full_transcript,
            transcript,
            csv,
        } => {
            let helpers = helpers.or(cfg.helpers);
            let opts = RepairOptions {
                full_transcript,
                transcript: transcript.or(cfg.output.transcript),
                csv: csv.or(cfg.output.csv),
            };
            print!("{}", commands::repair_dir(&dir, helpers.as_deref(), &opts)?);
        }
        Command::Verify { dir } => {
            let report = commands::verify_dir(&dir)?;
            print!("{report}");
            return Ok(report.ok());
        }
        Command::Decode { dir, out, nodes } => {
            print!("{}", commands::decode_dir(&dir, &out, nodes.as_deref())?);
        }
        Command::Table {
            rows,
            csv,
            literature,
        } => print!("{}", commands::table(&rows, csv, literature)?),
        Command::ParamsCheck { params } => {
            let spec = commands::resolve_spec(&params.to_config(), &cfg.params)?;
            print!("{}", commands::params_check(&spec)?);
        }
        Command::Simulate {
            params,
            failed,
            helpers,
            seed,
            trials,
        } => {
            let spec = commands::resolve_spec(&params.to_config(), &cfg.params)?;
            let p = spec.validate()?;
            let failed = failed
                .or(cfg.failed)
                .unwrap_or_else(|| (0..p.h()).collect());
            let helpers = helpers.or(cfg.helpers);
            let seed = seed.or(cfg.seed).unwrap_or(0);
            print!(
                "{}",
                commands::simulate(&p, &failed, helpers.as_deref(), seed, trials)?
            );
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
