//! Trains and evaluates every (method, seed) cell against one shared set of
//! evaluation object positions, then writes the comparison table.
//!
//! Cells are fully isolated (own environment, agent, buffer, and random
//! streams), so they may run on worker threads; results are assembled in a
//! fixed method-major order regardless of scheduling.

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Serialize;

use crate::replay::UpdateMethod;
use crate::{Error, Result};

use super::config::RunConfig;
use super::eval::{evaluate, EvalReport};
use super::train::run_training;

/// One trained-and-evaluated grid cell.
#[derive(Debug, Clone)]
pub struct ComparisonCell {
    pub method: UpdateMethod,
    pub seed: u64,
    pub success_rate: f64,
    pub mean_reward: f64,
    pub shake: f64,
    pub run_dir: PathBuf,
    pub report: EvalReport,
}

/// All cells plus the emitted files.
#[derive(Debug, Clone)]
pub struct ComparisonOutput {
    pub cells: Vec<ComparisonCell>,
    pub table_csv: PathBuf,
    pub eval_episodes_csv: PathBuf,
}

#[derive(Serialize)]
struct TableRow<'a> {
    method: &'a str,
    seed: u64,
    success_rate: f64,
    mean_reward: f64,
    shake: f64,
}

#[derive(Serialize)]
struct EvalEpisodeRow<'a> {
    episode: u32,
    method: &'a str,
    seed: u64,
    reward: f64,
    success: bool,
}

/// Runs the full grid. Every cell shares `base` except for its method, seed,
/// and output subdirectory; all cells are evaluated with `base.eval_seed`.
pub fn compare(
    base: &RunConfig,
    methods: &[UpdateMethod],
    seeds: &[u64],
    jobs: usize,
) -> Result<ComparisonOutput> {
    if methods.is_empty() || seeds.is_empty() {
        return Err(Error::Config("compare needs at least one method and one seed".into()));
    }
    std::fs::create_dir_all(&base.out_dir)?;

    let cells: Vec<RunConfig> = methods
        .iter()
        .flat_map(|&m| {
            seeds.iter().map(move |&s| {
                let dir = base.out_dir.join(format!("{m}-seed{s}"));
                base.cell(m, s, dir)
            })
        })
        .collect();

    let results: Vec<Mutex<Option<Result<ComparisonCell>>>> =
        cells.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = jobs.max(1).min(cells.len());

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= cells.len() {
                    break;
                }
                let outcome = run_cell(&cells[i]);
                *results[i].lock().unwrap() = Some(outcome);
            });
        }
    });

    let mut collected = Vec::with_capacity(cells.len());
    for slot in results {
        collected.push(slot.into_inner().unwrap().expect("worker finished")?);
    }

    let table_csv = base.out_dir.join("comparison.csv");
    let mut table = csv::Writer::from_path(&table_csv)?;
    for cell in &collected {
        table.serialize(TableRow {
            method: &cell.method.to_string(),
            seed: cell.seed,
            success_rate: cell.success_rate,
            mean_reward: cell.mean_reward,
            shake: cell.shake,
        })?;
    }
    table.flush()?;

    let eval_episodes_csv = base.out_dir.join("eval_episodes.csv");
    let mut eval_out = csv::Writer::from_path(&eval_episodes_csv)?;
    for cell in &collected {
        for ep in &cell.report.episodes {
            eval_out.serialize(EvalEpisodeRow {
                episode: ep.episode,
                method: &cell.method.to_string(),
                seed: cell.seed,
                reward: ep.reward,
                success: ep.success,
            })?;
        }
    }
    eval_out.flush()?;

    Ok(ComparisonOutput {
        cells: collected,
        table_csv,
        eval_episodes_csv,
    })
}

fn run_cell(cfg: &RunConfig) -> Result<ComparisonCell> {
    let artifacts = run_training(cfg)?;
    let report = evaluate(&artifacts.checkpoint, cfg, cfg.eval_seed, cfg.eval_episodes)?;
    Ok(ComparisonCell {
        method: cfg.method,
        seed: cfg.seed,
        success_rate: report.success_rate,
        mean_reward: report.mean_episode_reward,
        shake: report.shake,
        run_dir: cfg.out_dir.clone(),
        report,
    })
}
