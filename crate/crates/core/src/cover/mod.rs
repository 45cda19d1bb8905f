//! Cover-template search for a group of templates.
//!
//! A cover of a group is any template within `epsilon` of every member, i.e. a
//! point of the intersection of the members' Hamming balls. The group is first
//! reduced to a small integer system ([`ReducedSystem`]), which is then solved
//! either exhaustively ([`solve_exact`]) or by simulated annealing
//! ([`solve_sann`]).

pub mod exact;
pub mod reduce;
pub mod sann;

use std::collections::HashSet;
use std::time::Duration;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::index::sample;
use rand::Rng;
use serde::Serialize;

pub use exact::{enumerate_exact, solve_exact, Enumeration, ExactConfig};
pub use reduce::{IndexPartition, ReducedSystem};
pub use sann::{cooling_temperature, solve_sann, CoolingSchedule, SannConfig, ScheduleKind};

use crate::error::Result;
use crate::template::Template;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CoverStatus {
    Found(Template),
    /// The search space was exhausted without a cover.
    NotFound,
    /// The budget ran out first; nothing is known about existence.
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Exact,
    Sann,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CoverStats {
    pub iterations: u64,
    pub elapsed: Duration,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoverResult {
    pub status: CoverStatus,
    pub solver: SolverKind,
    pub stats: CoverStats,
}

impl CoverResult {
    pub fn center(&self) -> Option<&Template> {
        match &self.status {
            CoverStatus::Found(t) => Some(t),
            _ => None,
        }
    }
}

/// Which search backs a cover query.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CoverSolver {
    Exact(ExactConfig),
    /// The seed inside the config is ignored by callers that derive their own.
    Sann(SannConfig),
}

impl CoverSolver {
    pub fn exact() -> Self {
        CoverSolver::Exact(ExactConfig::default())
    }

    pub fn sann(schedule: ScheduleKind) -> Self {
        CoverSolver::Sann(SannConfig {
            schedule,
            ..SannConfig::default()
        })
    }

    pub fn kind(&self) -> SolverKind {
        match self {
            CoverSolver::Exact(_) => SolverKind::Exact,
            CoverSolver::Sann(_) => SolverKind::Sann,
        }
    }
}

/// Searches a cover of `group` using its first member as reference.
pub fn find_cover(group: &[Template], epsilon: usize, solver: &CoverSolver, seed: u64) -> Result<CoverResult> {
    let sys = ReducedSystem::build(group, epsilon, 0)?;
    Ok(match solver {
        CoverSolver::Exact(cfg) => solve_exact(&sys, cfg),
        CoverSolver::Sann(cfg) => solve_sann(&sys, &SannConfig { seed, ..*cfg }),
    })
}

/// Natural log of the binomial coefficient, exact enough for sampling weights.
fn ln_binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
}

/// Uniform point of the Hamming ball `B(center, radius)` minus the center itself.
pub fn random_in_ball<R: Rng + ?Sized>(center: &Template, radius: usize, rng: &mut R) -> Template {
    let n = center.len();
    let radius = radius.min(n);
    assert!(radius >= 1, "punctured ball of radius 0 is empty");
    let logs: Vec<f64> = (1..=radius).map(|r| ln_binomial(n, r)).collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let dist = WeightedIndex::new(&weights).expect("positive weights");
    let r = 1 + dist.sample(rng);
    let mut t = center.clone();
    for i in sample(rng, n, r).into_iter() {
        t.flip(i);
    }
    t
}

/// A hidden center and `count` distinct members drawn uniformly from its
/// punctured `radius`-ball, so that the group always has a cover.
pub fn planted_group<R: Rng + ?Sized>(
    n: usize,
    radius: usize,
    count: usize,
    rng: &mut R,
) -> (Template, Vec<Template>) {
    let center = Template::random(n, rng);
    let mut seen = HashSet::with_capacity(count);
    let mut members = Vec::with_capacity(count);
    while members.len() < count {
        let t = random_in_ball(&center, radius, rng);
        if seen.insert(t.clone()) {
            members.push(t);
        }
    }
    (center, members)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ln_binomial_small_values() {
        assert!((ln_binomial(5, 2) - 10f64.ln()).abs() < 1e-12);
        assert_eq!(ln_binomial(7, 0), 0.0);
        assert!((ln_binomial(30, 10) - 30045015f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn planted_members_lie_in_the_ball() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (c, g) = planted_group(30, 10, 50, &mut rng);
        assert_eq!(g.len(), 50);
        assert!(g.iter().all(|t| (1..=10).contains(&t.distance(&c))));
    }

    #[test]
    fn ball_sampling_follows_binomial_weights() {
        // n = 6, radius 2: P(d = 1) = 6/21, P(d = 2) = 15/21
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = Template::zeros(6);
        let trials = 40_000;
        let ones = (0..trials)
            .filter(|_| random_in_ball(&c, 2, &mut rng).count_ones() == 1)
            .count();
        let p = ones as f64 / trials as f64;
        assert!((p - 6.0 / 21.0).abs() < 0.01, "{p}");
    }

    #[test]
    fn find_cover_with_both_solvers() {
        let g: Vec<Template> = ["011", "101", "110"].iter().map(|s| s.parse().unwrap()).collect();
        let exact = find_cover(&g, 1, &CoverSolver::exact(), 0).unwrap();
        assert_eq!(exact.center().unwrap().to_string(), "111");
        let sann = find_cover(&g, 1, &CoverSolver::sann(ScheduleKind::Additive), 5).unwrap();
        assert_eq!(sann.center().unwrap().to_string(), "111");
        assert_eq!(sann.solver, SolverKind::Sann);
    }
}
