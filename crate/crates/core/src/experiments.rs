//! Seeded replication harness for the partitioning and annealing benchmarks.
//!
//! Replication `r` of a run with base seed `s` uses seed `s + r`, so any row
//! can be replayed alone. Timing columns are informative only.

use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cover::{planted_group, solve_sann, CoverSolver, CoverStatus, ReducedSystem, SannConfig, ScheduleKind};
use crate::error::Result;
use crate::partition::{partition_database, partition_greedy};
use crate::template::random_database;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BenchConfig {
    pub n: usize,
    pub epsilon: usize,
    pub clients: usize,
    pub reps: usize,
    pub solver: CoverSolver,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub epsilon: usize,
    pub clients: usize,
    pub clust_mean: f64,
    pub clust_greedy_mean: f64,
    /// `clust_greedy_mean / clust_mean`.
    pub efficiency: f64,
    pub time_ms: f64,
    pub time_greedy_ms: f64,
}

struct Replication {
    clusters: usize,
    greedy: usize,
    time_ms: f64,
    time_greedy_ms: f64,
}

/// Runs both partitioners on `reps` fresh random databases.
pub fn run_partition_bench(cfg: &BenchConfig) -> Result<BenchRow> {
    let reps: Vec<Replication> = (0..cfg.reps.max(1) as u64)
        .into_par_iter()
        .map(|r| {
            let seed = cfg.seed.wrapping_add(r);
            let db = random_database(cfg.n, cfg.clients, seed)?;
            let start = Instant::now();
            let mts = partition_database(&db, cfg.epsilon, &cfg.solver, seed)?;
            let time_ms = start.elapsed().as_secs_f64() * 1e3;
            let start = Instant::now();
            let greedy = partition_greedy(&db, cfg.epsilon, seed);
            let time_greedy_ms = start.elapsed().as_secs_f64() * 1e3;
            Ok(Replication {
                clusters: mts.len(),
                greedy: greedy.len(),
                time_ms,
                time_greedy_ms,
            })
        })
        .collect::<Result<_>>()?;
    let count = reps.len() as f64;
    let mean = |f: &dyn Fn(&Replication) -> f64| reps.iter().map(f).sum::<f64>() / count;
    let clust_mean = mean(&|r| r.clusters as f64);
    let clust_greedy_mean = mean(&|r| r.greedy as f64);
    Ok(BenchRow {
        n: cfg.n,
        epsilon: cfg.epsilon,
        clients: cfg.clients,
        clust_mean,
        clust_greedy_mean,
        efficiency: clust_greedy_mean / clust_mean,
        time_ms: mean(&|r| r.time_ms),
        time_greedy_ms: mean(&|r| r.time_greedy_ms),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SannBenchConfig {
    pub n: usize,
    pub epsilon: usize,
    pub clients: usize,
    pub reps: usize,
    pub schedule: ScheduleKind,
    pub max_iters: u64,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SannRow {
    pub schedule: ScheduleKind,
    pub n: usize,
    pub epsilon: usize,
    pub clients: usize,
    /// Share of planted instances where no cover was found, in percent.
    pub error_pct: f64,
    pub time_ms: f64,
}

/// Plants a hidden center, draws `clients` members in its epsilon-ball and asks
/// the annealer for a cover, `reps` times.
pub fn run_sann_bench(cfg: &SannBenchConfig) -> SannRow {
    let outcomes: Vec<(bool, f64)> = (0..cfg.reps.max(1) as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(r));
            let (_, group) = planted_group(cfg.n, cfg.epsilon, cfg.clients, &mut rng);
            let start = Instant::now();
            let sys = ReducedSystem::build(&group, cfg.epsilon, 0).expect("non-empty planted group");
            let result = solve_sann(
                &sys,
                &SannConfig {
                    schedule: cfg.schedule,
                    max_iters: cfg.max_iters,
                    seed: rng.gen(),
                },
            );
            let ms = start.elapsed().as_secs_f64() * 1e3;
            let miss = match &result.status {
                CoverStatus::Found(p) => !group.iter().all(|v| v.distance(p) <= cfg.epsilon),
                _ => true,
            };
            (miss, ms)
        })
        .collect();
    let count = outcomes.len() as f64;
    SannRow {
        schedule: cfg.schedule,
        n: cfg.n,
        epsilon: cfg.epsilon,
        clients: cfg.clients,
        error_pct: 100.0 * outcomes.iter().filter(|(m, _)| *m).count() as f64 / count,
        time_ms: outcomes.iter().map(|(_, t)| t).sum::<f64>() / count,
    }
}

/// The annealing benchmark once per schedule.
pub fn run_cooling_bench(base: &SannBenchConfig) -> Vec<SannRow> {
    ScheduleKind::ALL
        .iter()
        .map(|&schedule| run_sann_bench(&SannBenchConfig { schedule, ..*base }))
        .collect()
}

pub fn bench_csv(header_comment: &str, rows: &[BenchRow]) -> String {
    let mut out = comment_block(header_comment);
    out.push_str("n,epsilon,clients,clust_mean,clust_greedy_mean,efficiency,time_ms,time_greedy_ms\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{:.3},{:.3},{:.3},{:.3},{:.3}",
            r.n, r.epsilon, r.clients, r.clust_mean, r.clust_greedy_mean, r.efficiency, r.time_ms, r.time_greedy_ms
        );
    }
    out
}

pub fn sann_csv(header_comment: &str, rows: &[SannRow]) -> String {
    let mut out = comment_block(header_comment);
    out.push_str("schedule,n,epsilon,clients,error_pct,time_ms\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{:.2},{:.3}",
            r.schedule, r.n, r.epsilon, r.clients, r.error_pct, r.time_ms
        );
    }
    out
}

fn comment_block(text: &str) -> String {
    text.lines().map(|l| format!("# {l}\n")).collect()
}
