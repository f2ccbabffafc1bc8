//! `steadyarm` command line: train one run, evaluate a checkpoint, compare
//! the four replay-update methods, or plot a log CSV.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use steadyarm_core::harness::{
    compare, emit_plots, evaluate, load_config, run_training, ConfigOverrides, Profile,
};
use steadyarm_core::replay::UpdateMethod;

#[derive(Parser)]
#[command(
    name = "steadyarm",
    version,
    about = "DDPG on a simulated suction arm with steady-state replay admission"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct ConfigArgs {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Experiment scale preset: paper or desk.
    #[arg(long)]
    profile: Option<Profile>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train one agent with one method and seed.
    Train {
        #[command(flatten)]
        config: ConfigArgs,
        /// Replay update method: A, B, C, or D.
        #[arg(long)]
        method: UpdateMethod,
        /// Master seed for this run.
        #[arg(long)]
        seed: u64,
        /// Output directory for logs, checkpoint, and manifest.
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a checkpoint on the shared seeded episode set.
    Eval {
        /// SRCKPT checkpoint produced by `train`.
        #[arg(long)]
        checkpoint: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        /// Seed that fixes the evaluation object positions.
        #[arg(long = "eval-seed")]
        eval_seed: u64,
        /// Method whose interaction mode to evaluate under (defaults to the
        /// config's method).
        #[arg(long)]
        method: Option<UpdateMethod>,
        /// Number of evaluation episodes (defaults to the config's value).
        #[arg(long)]
        episodes: Option<u32>,
        /// Optional directory for eval.csv and eval.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train and evaluate every method over the given seeds.
    Compare {
        #[command(flatten)]
        config: ConfigArgs,
        /// Comma-separated run seeds, e.g. 1,2,3.
        #[arg(long, value_delimiter = ',', required = true)]
        seeds: Vec<u64>,
        /// Comma-separated methods (default A,B,C,D).
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<UpdateMethod>>,
        /// Output directory (defaults to the config's out_dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Evaluation seed shared by every cell (defaults to the config's).
        #[arg(long = "eval-seed")]
        eval_seed: Option<u64>,
        /// Worker threads for the grid cells.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Render an episode-log CSV to a standalone SVG.
    Plot {
        /// Input CSV with episode, method, reward columns.
        #[arg(long)]
        log: PathBuf,
        /// Output SVG path.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() {
    if let Err(err) = real_main() {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn real_main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Train {
            config,
            method,
            seed,
            out,
        } => {
            let cfg = load_config(
                &config.config,
                &ConfigOverrides {
                    method: Some(method),
                    seed: Some(seed),
                    out_dir: Some(out),
                    profile: config.profile,
                },
            )?;
            let artifacts = run_training(&cfg).context("training failed")?;
            println!(
                "trained method {} seed {} for {} episodes",
                cfg.method, cfg.seed, cfg.episodes
            );
            println!("episode log: {}", artifacts.episodes_csv.display());
            println!("checkpoint:  {}", artifacts.checkpoint.display());
            println!("manifest:    {}", artifacts.manifest.display());
        }
        Cmd::Eval {
            checkpoint,
            config,
            eval_seed,
            method,
            episodes,
            out,
        } => {
            let mut cfg = load_config(
                &config.config,
                &ConfigOverrides {
                    method,
                    ..ConfigOverrides::default()
                },
            )?;
            cfg.eval_seed = eval_seed;
            if let Some(n) = episodes {
                cfg.eval_episodes = n;
            }
            let report = evaluate(&checkpoint, &cfg, cfg.eval_seed, cfg.eval_episodes)?;
            println!(
                "method {} eval_seed {}: success_rate {:.2} mean_reward {:.4} shake {:.4}",
                cfg.method, cfg.eval_seed, report.success_rate, report.mean_episode_reward, report.shake
            );
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                let csv_path = dir.join("eval.csv");
                let mut w = csv::Writer::from_path(&csv_path)?;
                for ep in &report.episodes {
                    w.serialize(ep)?;
                }
                w.flush()?;
                std::fs::write(dir.join("eval.json"), serde_json::to_string_pretty(&report)?)?;
                println!("episode records: {}", csv_path.display());
            }
        }
        Cmd::Compare {
            config,
            seeds,
            methods,
            out,
            eval_seed,
            jobs,
        } => {
            let mut cfg = load_config(
                &config.config,
                &ConfigOverrides {
                    out_dir: out,
                    profile: config.profile,
                    ..ConfigOverrides::default()
                },
            )?;
            if let Some(es) = eval_seed {
                cfg.eval_seed = es;
            }
            let methods = methods.unwrap_or_else(|| UpdateMethod::ALL.to_vec());
            if seeds.is_empty() {
                bail!("--seeds needs at least one seed");
            }
            let jobs = jobs.unwrap_or_else(|| {
                std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
            });
            let output = compare(&cfg, &methods, &seeds, jobs)?;
            println!("method seed success_rate mean_reward shake");
            for cell in &output.cells {
                println!(
                    "{:6} {:4} {:12.2} {:11.4} {:.4}",
                    cell.method.to_string(),
                    cell.seed,
                    cell.success_rate,
                    cell.mean_reward,
                    cell.shake
                );
            }
            println!("table: {}", output.table_csv.display());
            println!("eval episodes: {}", output.eval_episodes_csv.display());
        }
        Cmd::Plot { log, out } => {
            emit_plots(&log, &out)?;
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}
