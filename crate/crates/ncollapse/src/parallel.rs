//! Rayon drivers for the episode and Monte Carlo loops.
//!
//! Work is indexed by episode or trial number, each unit draws from its own
//! random stream, and results are collected in index order, so the output
//! matches the serial core functions bit for bit.

use rayon::prelude::*;

use ncollapse_core::bounds::{self, BoundCheckReport, GaussianClassModel};
use ncollapse_core::fewshot::{self, AccuracyReport, EpisodeConfig, Head};
use ncollapse_core::{ClassPartition, Result};

pub const THREADS_ENV: &str = "NC_THREADS";

/// Thread cap from `NC_THREADS`; `None` when unset, empty or zero.
pub fn threads_from_env() -> std::result::Result<Option<usize>, String> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(s) if s.trim().is_empty() => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(0) => Ok(None),
            Ok(n) => Ok(Some(n)),
            Err(_) => Err(format!("{THREADS_ENV} must be a non-negative integer, got `{s}`")),
        },
    }
}

/// Runs `f` on a pool capped at `threads`, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match threads {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool construction")
            .install(f),
    }
}

pub fn evaluate(partition: &ClassPartition, cfg: &EpisodeConfig, head: &Head) -> Result<AccuracyReport> {
    cfg.check_partition(partition)?;
    let per_episode = (0..cfg.episodes as u64)
        .into_par_iter()
        .map(|i| fewshot::episode_accuracy(partition, cfg, head, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(AccuracyReport::from_episodes(*head, *cfg, per_episode))
}

pub fn verify_prop5(model: &GaussianClassModel, n_c: usize, trials: usize, seed: u64) -> Result<BoundCheckReport> {
    bounds::check_prop5_inputs(model, n_c, trials)?;
    let errors: Vec<bool> = (0..trials)
        .into_par_iter()
        .with_min_len(256)
        .map(|t| bounds::prop5_trial(model, n_c, seed, t as u64))
        .collect();
    bounds::finish_prop5(model, n_c, seed, &errors)
}

pub fn verify_lemma2(n: usize, p: usize, trials: usize, seed: u64) -> Result<BoundCheckReport> {
    bounds::check_lemma2_inputs(n, p, trials)?;
    let d: Vec<f64> = (0..trials)
        .into_par_iter()
        .with_min_len(256)
        .map(|t| bounds::lemma2_trial(n, p, seed, t as u64))
        .collect();
    bounds::finish_lemma2(n, p, seed, &d)
}
