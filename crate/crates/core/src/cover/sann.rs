//! Simulated annealing over flip-count vectors.
//!
//! The energy is `sum_i min(0, slack_i)` over all member rows, so it is never
//! positive and reaches zero exactly on covers. The walk starts at the
//! reference (all counts zero) and stops at the first zero-energy state.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::reduce::ReducedSystem;
use super::{CoverResult, CoverStats, CoverStatus, SolverKind};
use crate::error::{Error, Result};

pub const DEFAULT_MAX_ITERS: u64 = 200_000;

/// Probability of proposing the direction with the larger energy.
pub const UPHILL_BIAS: f64 = 0.75;

/// Final exponential temperature as a fraction of the initial one.
pub const EXPONENTIAL_FLOOR: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKind {
    Additive,
    LinearMultiplicative,
    Exponential,
    Logarithmic,
}

impl ScheduleKind {
    pub const ALL: [ScheduleKind; 4] = [
        ScheduleKind::Additive,
        ScheduleKind::LinearMultiplicative,
        ScheduleKind::Exponential,
        ScheduleKind::Logarithmic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScheduleKind::Additive => "additive",
            ScheduleKind::LinearMultiplicative => "linear-multiplicative",
            ScheduleKind::Exponential => "exponential",
            ScheduleKind::Logarithmic => "logarithmic",
        }
    }
}

impl fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScheduleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "additive" | "linear" => Ok(ScheduleKind::Additive),
            "linear-multiplicative" | "multiplicative" => Ok(ScheduleKind::LinearMultiplicative),
            "exponential" => Ok(ScheduleKind::Exponential),
            "logarithmic" => Ok(ScheduleKind::Logarithmic),
            other => Err(Error::Invalid(format!("unknown cooling schedule `{other}`"))),
        }
    }
}

/// A cooling schedule with its constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CoolingSchedule {
    /// `t0 * (1 - step / max_steps)`
    Additive,
    /// `t0 / (1 + alpha * step)`
    LinearMultiplicative { alpha: f64 },
    /// `t0 * beta^step`
    Exponential { beta: f64 },
    /// `t0 / (1 + alpha * ln(1 + step))`
    Logarithmic { alpha: f64 },
}

impl CoolingSchedule {
    /// Default constants: `alpha = 1`, and `beta` such that `beta^max_steps = 1e-3`.
    pub fn with_defaults(kind: ScheduleKind, max_steps: u64) -> Self {
        match kind {
            ScheduleKind::Additive => CoolingSchedule::Additive,
            ScheduleKind::LinearMultiplicative => CoolingSchedule::LinearMultiplicative { alpha: 1.0 },
            ScheduleKind::Exponential => CoolingSchedule::Exponential {
                beta: EXPONENTIAL_FLOOR.powf(1.0 / max_steps.max(1) as f64),
            },
            ScheduleKind::Logarithmic => CoolingSchedule::Logarithmic { alpha: 1.0 },
        }
    }

    pub fn kind(&self) -> ScheduleKind {
        match self {
            CoolingSchedule::Additive => ScheduleKind::Additive,
            CoolingSchedule::LinearMultiplicative { .. } => ScheduleKind::LinearMultiplicative,
            CoolingSchedule::Exponential { .. } => ScheduleKind::Exponential,
            CoolingSchedule::Logarithmic { .. } => ScheduleKind::Logarithmic,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            CoolingSchedule::Additive => Ok(()),
            CoolingSchedule::LinearMultiplicative { alpha } | CoolingSchedule::Logarithmic { alpha } => {
                if alpha > 0.0 && alpha.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidSchedule(format!("alpha must be positive, got {alpha}")))
                }
            }
            CoolingSchedule::Exponential { beta } => {
                if beta > 0.0 && beta < 1.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidSchedule(format!("beta must lie in (0, 1), got {beta}")))
                }
            }
        }
    }

    #[inline]
    fn at(&self, t0: f64, step: u64, max_steps: u64) -> f64 {
        let s = step as f64;
        match *self {
            CoolingSchedule::Additive => t0 * (1.0 - s / max_steps.max(1) as f64),
            CoolingSchedule::LinearMultiplicative { alpha } => t0 / (1.0 + alpha * s),
            CoolingSchedule::Exponential { beta } => t0 * beta.powf(s),
            CoolingSchedule::Logarithmic { alpha } => t0 / (1.0 + alpha * (1.0 + s).ln()),
        }
    }
}

pub fn cooling_temperature(
    schedule: &CoolingSchedule,
    t0: f64,
    step: u64,
    max_steps: u64,
) -> Result<f64> {
    schedule.validate()?;
    if t0.is_nan() || t0 <= 0.0 {
        return Err(Error::InvalidSchedule(format!("t0 must be positive, got {t0}")));
    }
    if step > max_steps {
        return Err(Error::InvalidSchedule(format!("step {step} beyond {max_steps}")));
    }
    Ok(schedule.at(t0, step, max_steps))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SannConfig {
    pub schedule: ScheduleKind,
    pub max_iters: u64,
    pub seed: u64,
}

impl Default for SannConfig {
    fn default() -> Self {
        Self {
            schedule: ScheduleKind::Additive,
            max_iters: DEFAULT_MAX_ITERS,
            seed: 0,
        }
    }
}

pub fn solve_sann(sys: &ReducedSystem, config: &SannConfig) -> CoverResult {
    let start = Instant::now();
    let max_iters = config.max_iters.max(1);
    let schedule = CoolingSchedule::with_defaults(config.schedule, max_iters);
    let (status, iterations) = anneal(sys, &schedule, max_iters, config.seed);
    CoverResult {
        status,
        solver: SolverKind::Sann,
        stats: CoverStats {
            iterations,
            elapsed: start.elapsed(),
        },
    }
}

/// Energy change of moving variable `j` by `delta` (+1 or -1), given the current slack.
#[inline]
fn delta_energy(sys: &ReducedSystem, slack: &[i64], j: usize, delta: i64) -> i64 {
    slack
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let after = s - sys.sign(i, j) * delta;
            after.min(0) - s.min(0)
        })
        .sum()
}

fn anneal(sys: &ReducedSystem, schedule: &CoolingSchedule, max_iters: u64, seed: u64) -> (CoverStatus, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vars = sys.num_vars();
    let bounds = sys.bounds();
    let mut counts = vec![0usize; vars];
    let mut slack: Vec<i64> = sys.rhs().to_vec();
    let mut energy: i64 = slack.iter().map(|s| (*s).min(0)).sum();
    if energy == 0 {
        return (CoverStatus::Found(sys.decode_unchecked(&counts)), 0);
    }
    // one step moves each row by at most one
    let t0 = sys.num_rows() as f64;

    for step in 0..max_iters {
        let temperature = schedule.at(t0, step, max_iters);
        let j = rng.gen_range(0..vars);
        // a step leaving the box is clamped, i.e. stays put with zero energy change
        let up = (counts[j] < bounds[j]).then(|| delta_energy(sys, &slack, j, 1));
        let down = (counts[j] > 0).then(|| delta_energy(sys, &slack, j, -1));
        let (u, d) = (up.unwrap_or(0), down.unwrap_or(0));
        let up_preferred = if u == d { rng.gen_bool(0.5) } else { u > d };
        let go_up = up_preferred == rng.gen_bool(UPHILL_BIAS);
        let (delta, de) = match (go_up, up, down) {
            (true, Some(u), _) => (1i64, u),
            (false, _, Some(d)) => (-1i64, d),
            _ => continue,
        };

        let accept = de >= 0 || (temperature > 0.0 && rng.gen::<f64>() < (de as f64 / temperature).exp());
        if !accept {
            continue;
        }
        counts[j] = (counts[j] as i64 + delta) as usize;
        for (i, s) in slack.iter_mut().enumerate() {
            *s -= sys.sign(i, j) * delta;
        }
        energy += de;
        if energy == 0 {
            return (CoverStatus::Found(sys.decode_unchecked(&counts)), step + 1);
        }
    }
    (CoverStatus::Unknown, max_iters)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cover::exact::{solve_exact, ExactConfig};
    use crate::cover::planted_group;
    use crate::template::Template;

    #[test]
    fn every_schedule_starts_at_t0() {
        for kind in ScheduleKind::ALL {
            let s = CoolingSchedule::with_defaults(kind, 1000);
            assert_eq!(cooling_temperature(&s, 50.0, 0, 1000).unwrap(), 50.0);
        }
    }

    #[test]
    fn additive_reaches_zero_at_the_end() {
        let s = CoolingSchedule::Additive;
        assert_eq!(cooling_temperature(&s, 7.0, 100, 100).unwrap(), 0.0);
    }

    #[test]
    fn exponential_default_ends_at_floor() {
        let s = CoolingSchedule::with_defaults(ScheduleKind::Exponential, 200_000);
        let end = cooling_temperature(&s, 1.0, 200_000, 200_000).unwrap();
        assert!((end - EXPONENTIAL_FLOOR).abs() < 1e-9);
    }

    #[test]
    fn schedules_are_monotone_and_positive() {
        let max = 5000;
        for kind in ScheduleKind::ALL {
            let s = CoolingSchedule::with_defaults(kind, max);
            let mut prev = f64::INFINITY;
            for step in 0..max {
                let temp = cooling_temperature(&s, 50.0, step, max).unwrap();
                assert!(temp > 0.0 && temp <= prev, "{kind} at {step}");
                prev = temp;
            }
        }
    }

    #[test]
    fn invalid_constants_are_rejected() {
        let bad = [
            CoolingSchedule::LinearMultiplicative { alpha: 0.0 },
            CoolingSchedule::Logarithmic { alpha: -1.0 },
            CoolingSchedule::Exponential { beta: 1.0 },
            CoolingSchedule::Exponential { beta: 0.0 },
        ];
        for s in bad {
            assert!(matches!(cooling_temperature(&s, 1.0, 0, 10), Err(Error::InvalidSchedule(_))));
        }
        assert!(cooling_temperature(&CoolingSchedule::Additive, 0.0, 0, 10).is_err());
        assert!(cooling_temperature(&CoolingSchedule::Additive, 1.0, 11, 10).is_err());
    }

    #[test]
    fn schedule_names_parse() {
        for kind in ScheduleKind::ALL {
            assert_eq!(kind.name().parse::<ScheduleKind>().unwrap(), kind);
        }
        assert!("cubic".parse::<ScheduleKind>().is_err());
    }

    #[test]
    fn reference_cover_is_found_immediately() {
        let g: Vec<Template> = ["0000", "0001", "0010"].iter().map(|s| s.parse().unwrap()).collect();
        let sys = ReducedSystem::build(&g, 1, 0).unwrap();
        let r = solve_sann(&sys, &SannConfig::default());
        assert_eq!(r.status, CoverStatus::Found(g[0].clone()));
        assert_eq!(r.stats.iterations, 0);
    }

    #[test]
    fn found_covers_are_valid_and_agree_with_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for seed in 0..40u64 {
            let (_, group) = planted_group(30, 8, 20, &mut rng);
            let sys = ReducedSystem::build(&group, 8, 0).unwrap();
            let cfg = SannConfig {
                seed,
                ..SannConfig::default()
            };
            let r = solve_sann(&sys, &cfg);
            if let CoverStatus::Found(p) = &r.status {
                assert!(group.iter().all(|v| v.distance(p) <= 8));
                assert!(matches!(
                    solve_exact(&sys, &ExactConfig::default()).status,
                    CoverStatus::Found(_)
                ));
            }
        }
    }

    #[test]
    fn unsolvable_system_exhausts_budget() {
        let g: Vec<Template> = ["000", "011", "101", "110"].iter().map(|s| s.parse().unwrap()).collect();
        let sys = ReducedSystem::build(&g, 1, 0).unwrap();
        let r = solve_sann(
            &sys,
            &SannConfig {
                max_iters: 5000,
                ..SannConfig::default()
            },
        );
        assert_eq!(r.status, CoverStatus::Unknown);
        assert_eq!(r.stats.iterations, 5000);
    }

    #[test]
    fn same_seed_same_result() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let (_, group) = planted_group(40, 10, 30, &mut rng);
        let sys = ReducedSystem::build(&group, 10, 0).unwrap();
        let cfg = SannConfig {
            seed: 77,
            ..SannConfig::default()
        };
        let a = solve_sann(&sys, &cfg);
        let b = solve_sann(&sys, &cfg);
        assert_eq!(a.status, b.status);
        assert_eq!(a.stats.iterations, b.stats.iterations);
    }
}
