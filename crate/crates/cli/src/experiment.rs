//! Runs the trials of an experiment and tabulates their records.
//!
//! Trial `i` of every series is seeded with `derive(seed, i)`, so series that
//! differ only in step size or method share their random streams trial by
//! trial. Trials run on the rayon pool; results are gathered in (series,
//! trial) order, so the output does not depend on scheduling.

use rayon::prelude::*;

use hdmc_core::dagger::{self, perfect_model_return, random_policy_return};
use hdmc_core::reward::RewardMode;
use hdmc_core::seed;
use hdmc_core::shooter::{Shooter, EPISODE_LENGTH};

use crate::config::{ExperimentConfig, Method, Variant};
use crate::stats::Interval;
use crate::CliError;

/// One curve: a method, its reward mode and step size where they apply.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Series {
    pub method: Method,
    pub reward_mode: Option<RewardMode>,
    pub step_size: Option<f64>,
}

impl Series {
    pub fn label(&self) -> String {
        let mut s = self.method.name().to_string();
        if let Some(m) = self.reward_mode {
            s.push_str(&format!(" / {}", m.name()));
        }
        if let Some(a) = self.step_size {
            s.push_str(&format!(" / α={a}"));
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub variant: Variant,
    pub series: Series,
    pub trial: usize,
    pub iteration: usize,
    pub discounted_return: f64,
    pub dynamics_examples: u64,
    pub reward_examples: u64,
    pub mean_log_loss: f64,
    pub mean_reward_residual: f64,
    pub diverged_fraction: f64,
}

pub fn trial_seed(master: u64, trial: usize) -> u64 {
    seed::derive(master, trial as u64)
}

/// The curves a configuration produces: one per step size when the reward
/// is learned, one otherwise.
pub fn series(cfg: &ExperimentConfig) -> Vec<Series> {
    match cfg.method {
        Method::Learn(_) if cfg.learns_reward() => cfg
            .step_sizes
            .iter()
            .map(|&a| Series {
                method: cfg.method,
                reward_mode: Some(cfg.reward_mode),
                step_size: Some(a),
            })
            .collect(),
        Method::Learn(_) => vec![Series {
            method: cfg.method,
            reward_mode: Some(cfg.reward_mode),
            step_size: None,
        }],
        _ => vec![Series {
            method: cfg.method,
            reward_mode: None,
            step_size: None,
        }],
    }
}

pub fn run_trial(cfg: &ExperimentConfig, series: &Series, trial: usize) -> Result<Vec<RunRecord>, CliError> {
    let seed = trial_seed(cfg.seed, trial);
    let record = |iteration, discounted_return| RunRecord {
        variant: cfg.variant,
        series: *series,
        trial,
        iteration,
        discounted_return,
        dynamics_examples: 0,
        reward_examples: 0,
        mean_log_loss: 0.0,
        mean_reward_residual: 0.0,
        diverged_fraction: 0.0,
    };
    let env = Shooter::new(cfg.variant.moving_bullseye());
    match series.method {
        Method::Learn(_) => {
            let lc = cfg.loop_config(series.step_size.unwrap_or(cfg.step_sizes[0]));
            let recs = dagger::run(&lc, seed).map_err(|e| CliError::Config(e.to_string()))?;
            Ok(recs
                .into_iter()
                .map(|r| RunRecord {
                    dynamics_examples: r.dynamics_examples,
                    reward_examples: r.reward_examples,
                    mean_log_loss: r.mean_log_loss,
                    mean_reward_residual: r.mean_reward_residual,
                    diverged_fraction: r.diverged_fraction,
                    ..record(r.iteration, r.eval_return)
                })
                .collect())
        }
        Method::PerfectModel => {
            let planner = cfg.planner();
            Ok((1..=cfg.iterations)
                .map(|n| {
                    let s = seed::derive(seed, n as u64);
                    record(n, perfect_model_return(&env, &planner, s, EPISODE_LENGTH))
                })
                .collect())
        }
        Method::Random => Ok((1..=cfg.iterations)
            .map(|n| {
                let s = seed::derive(seed, n as u64);
                record(n, random_policy_return(&env, s, EPISODE_LENGTH, cfg.gamma))
            })
            .collect()),
    }
}

/// Every trial of every series of `cfg`.
pub fn run(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>, CliError> {
    cfg.validate()?;
    let jobs: Vec<(Series, usize)> = series(cfg)
        .into_iter()
        .flat_map(|s| (0..cfg.trials).map(move |t| (s, t)))
        .collect();
    let results: Vec<Vec<RunRecord>> = jobs
        .par_iter()
        .map(|(s, t)| run_trial(cfg, s, *t))
        .collect::<Result<_, _>>()?;
    Ok(results.into_iter().flatten().collect())
}

/// Distinct series in order of first appearance.
pub fn series_of(records: &[RunRecord]) -> Vec<Series> {
    let mut out: Vec<Series> = Vec::new();
    for r in records {
        if !out.contains(&r.series) {
            out.push(r.series);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub variant: Variant,
    pub series: Series,
    pub iteration: usize,
    pub interval: Interval,
}

/// Per-iteration mean and 95% interval across trials, for each series.
pub fn summarize(records: &[RunRecord]) -> Vec<SummaryRow> {
    let mut out = Vec::new();
    for s in series_of(records) {
        let rows: Vec<&RunRecord> = records.iter().filter(|r| r.series == s).collect();
        let mut iterations: Vec<usize> = rows.iter().map(|r| r.iteration).collect();
        iterations.sort_unstable();
        iterations.dedup();
        for n in iterations {
            let values: Vec<f64> = rows
                .iter()
                .filter(|r| r.iteration == n)
                .map(|r| r.discounted_return)
                .collect();
            out.push(SummaryRow {
                variant: rows[0].variant,
                series: s,
                iteration: n,
                interval: Interval::of(&values),
            });
        }
    }
    out
}

/// Per-trial mean return over the last `window` iterations of `series`.
pub fn final_means(records: &[RunRecord], series: &Series, window: usize) -> Vec<f64> {
    let rows: Vec<&RunRecord> = records.iter().filter(|r| r.series == *series).collect();
    let last = rows.iter().map(|r| r.iteration).max().unwrap_or(0);
    let first = last.saturating_sub(window);
    let mut trials: Vec<usize> = rows.iter().map(|r| r.trial).collect();
    trials.sort_unstable();
    trials.dedup();
    trials
        .into_iter()
        .map(|t| {
            let tail: Vec<f64> = rows
                .iter()
                .filter(|r| r.trial == t && r.iteration > first)
                .map(|r| r.discounted_return)
                .collect();
            tail.iter().sum::<f64>() / tail.len() as f64
        })
        .collect()
}

/// Interval of the final-`window` means of `series` across trials.
pub fn final_interval(records: &[RunRecord], series: &Series, window: usize) -> Interval {
    Interval::of(&final_means(records, series, window))
}

/// The series with the highest final-10-iteration mean; ties go to the first.
pub fn best_series(records: &[RunRecord]) -> Option<Series> {
    let mut best: Option<(Series, f64)> = None;
    for s in series_of(records) {
        let m = final_interval(records, &s, 10).mean;
        if best.is_none_or(|(_, b)| m > b) {
            best = Some((s, m));
        }
    }
    best.map(|(s, _)| s)
}
