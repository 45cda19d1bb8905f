//! Masterkey-set and master-feature-set attacks against a leaked salted database.
//!
//! The transform here is a toy salting scheme, `template = feature XOR token`.
//! Both inversions are exact, and for any candidate `m`,
//! `d(T(m, P), T(F, P)) = d(m, F)`, so covering the recovered hidden values
//! with few centers is exactly the database partitioning problem.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cover::CoverSolver;
use crate::error::{Error, Result};
use crate::partition::partition_database;
use crate::template::{random_database, random_database_with, Template, TemplateDatabase};

/// `T(F, P) = F XOR P`.
#[derive(Clone, Copy, Debug, Default)]
pub struct ToyTransform;

impl ToyTransform {
    pub fn apply(&self, feature: &Template, token: &Template) -> Result<Template> {
        feature.xor(token)
    }

    /// Token `P` such that `T(feature, P) = template`.
    pub fn invert_token(&self, feature: &Template, template: &Template) -> Result<Template> {
        template.xor(feature)
    }

    /// Feature `F` such that `T(F, token) = template`.
    pub fn invert_feature(&self, token: &Template, template: &Template) -> Result<Template> {
        template.xor(token)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnrolledRecord {
    pub id: String,
    pub token: Template,
    pub feature: Template,
    pub template: Template,
}

/// Builds `k` records with distinct uniform features and tokens.
///
/// Features are `random_database(n, k, seed)`, so partitioning them is the
/// same experiment as partitioning that database.
pub fn simulate_enrollment(n: usize, k: usize, seed: u64) -> Result<Vec<EnrolledRecord>> {
    let features = random_database(n, k, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x746f_6b65_6e73);
    let tokens = random_database_with(n, k, &mut rng)?;
    records_from(&features, &tokens)
}

pub fn records_from(features: &TemplateDatabase, tokens: &TemplateDatabase) -> Result<Vec<EnrolledRecord>> {
    features
        .ids()
        .iter()
        .zip(features.members())
        .zip(tokens.members())
        .map(|((id, f), p)| {
            Ok(EnrolledRecord {
                id: id.clone(),
                token: p.clone(),
                feature: f.clone(),
                template: ToyTransform.apply(f, p)?,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackKind {
    /// Leak holds tokens; the attacker wants features.
    MasterFeatureSet,
    /// Leak holds features; the attacker wants tokens.
    MasterkeySet,
}

impl fmt::Display for AttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttackKind::MasterFeatureSet => "master-feature-set",
            AttackKind::MasterkeySet => "masterkey-set",
        })
    }
}

impl FromStr for AttackKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "master-feature-set" | "master-feature" | "feature" => Ok(AttackKind::MasterFeatureSet),
            "masterkey-set" | "masterkey" | "key" => Ok(AttackKind::MasterkeySet),
            other => Err(Error::Invalid(format!("unknown attack kind `{other}`"))),
        }
    }
}

/// One leaked record: the known half (token or feature) and the stored template.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeakEntry {
    pub id: String,
    pub known: Template,
    pub template: Template,
}

pub fn leak_for(kind: AttackKind, records: &[EnrolledRecord]) -> Vec<LeakEntry> {
    records
        .iter()
        .map(|r| LeakEntry {
            id: r.id.clone(),
            known: match kind {
                AttackKind::MasterFeatureSet => r.token.clone(),
                AttackKind::MasterkeySet => r.feature.clone(),
            },
            template: r.template.clone(),
        })
        .collect()
}

/// Lines `<id> <known bits> <template bits>`.
pub fn parse_leak(text: &str) -> Result<Vec<LeakEntry>> {
    let mut out = Vec::new();
    let mut dim = None;
    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(' ').collect();
        let parse_err = |message: &str| Error::Parse {
            line: line_no,
            message: message.to_string(),
        };
        if fields.len() != 3 || fields[0].is_empty() {
            return Err(parse_err("expected `<id> <bits> <bits>`"));
        }
        let known: Template = fields[1].parse().map_err(|_| parse_err("bad bits"))?;
        let template: Template = fields[2].parse().map_err(|_| parse_err("bad bits"))?;
        let n = *dim.get_or_insert(known.len());
        if known.len() != n || template.len() != n {
            return Err(parse_err("inconsistent widths"));
        }
        out.push(LeakEntry {
            id: fields[0].to_string(),
            known,
            template,
        });
    }
    Ok(out)
}

pub fn write_leak(entries: &[LeakEntry]) -> String {
    let mut out = String::new();
    for e in entries {
        let _ = writeln!(out, "{} {} {}", e.id, e.known, e.template);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AttackResult {
    pub kind: AttackKind,
    #[serde(serialize_with = "as_strings")]
    pub items: Vec<Template>,
    pub inversion_calls: usize,
    /// Fraction of records matched by at least one item under `tau`.
    pub coverage: f64,
    pub records: usize,
    pub tau: usize,
    pub partitioned: bool,
}

fn as_strings<S: serde::Serializer>(items: &[Template], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(items.iter().map(|t| t.to_string()))
}

/// Recovers every record's hidden feature from its token, then (optionally)
/// partitions the recovered features into `tau`-balls.
pub fn master_feature_attack(
    leak: &[LeakEntry],
    tau: usize,
    use_partition: bool,
    solver: &CoverSolver,
    seed: u64,
) -> Result<AttackResult> {
    run_attack(AttackKind::MasterFeatureSet, leak, tau, use_partition, solver, seed)
}

/// Mirror of [`master_feature_attack`]: recovers tokens from known features.
pub fn masterkey_attack(
    leak: &[LeakEntry],
    tau: usize,
    use_partition: bool,
    solver: &CoverSolver,
    seed: u64,
) -> Result<AttackResult> {
    run_attack(AttackKind::MasterkeySet, leak, tau, use_partition, solver, seed)
}

pub fn run_attack(
    kind: AttackKind,
    leak: &[LeakEntry],
    tau: usize,
    use_partition: bool,
    solver: &CoverSolver,
    seed: u64,
) -> Result<AttackResult> {
    if leak.is_empty() {
        return Err(Error::EmptyLeak);
    }
    let tr = ToyTransform;
    let mut calls = 0usize;
    let mut hidden = Vec::with_capacity(leak.len());
    for e in leak {
        calls += 1;
        hidden.push(match kind {
            AttackKind::MasterFeatureSet => tr.invert_feature(&e.known, &e.template)?,
            AttackKind::MasterkeySet => tr.invert_token(&e.known, &e.template)?,
        });
    }
    let ids = leak.iter().map(|e| e.id.clone()).collect();
    let recovered = TemplateDatabase::new(ids, hidden)?;
    let items: Vec<Template> = if use_partition {
        partition_database(&recovered, tau, solver, seed)?
            .entries
            .into_iter()
            .map(|e| e.center)
            .collect()
    } else {
        recovered.members().to_vec()
    };
    let coverage = coverage(kind, leak, &items, tau)?;
    Ok(AttackResult {
        kind,
        items,
        inversion_calls: calls,
        coverage,
        records: leak.len(),
        tau,
        partitioned: use_partition,
    })
}

/// Fraction of records for which some item passes the verifier: for a
/// master-feature `m`, `d(T(m, P_i), t_i) <= tau`; for a masterkey `k`,
/// `d(T(x_i, k), t_i) <= tau`.
pub fn coverage(kind: AttackKind, leak: &[LeakEntry], items: &[Template], tau: usize) -> Result<f64> {
    let tr = ToyTransform;
    let mut matched = 0usize;
    for e in leak {
        let mut hit = false;
        for m in items {
            let forged = match kind {
                AttackKind::MasterFeatureSet => tr.apply(m, &e.known)?,
                AttackKind::MasterkeySet => tr.apply(&e.known, m)?,
            };
            if forged.hamming(&e.template)? <= tau {
                hit = true;
                break;
            }
        }
        matched += usize::from(hit);
    }
    Ok(matched as f64 / leak.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cover::planted_group;
    use rand::Rng;

    #[test]
    fn inversions_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let tr = ToyTransform;
        for _ in 0..10_000 {
            let n = rng.gen_range(1..200);
            let f = Template::random(n, &mut rng);
            let p = Template::random(n, &mut rng);
            let t = tr.apply(&f, &p).unwrap();
            assert_eq!(tr.invert_token(&f, &t).unwrap(), p);
            assert_eq!(tr.invert_feature(&p, &t).unwrap(), f);
            assert_eq!(tr.apply(&t, &p).unwrap(), f);
        }
        let a = Template::zeros(3);
        assert!(tr.invert_token(&a, &Template::zeros(4)).is_err());
    }

    #[test]
    fn transform_preserves_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..2000 {
            let n = rng.gen_range(1..130);
            let m = Template::random(n, &mut rng);
            let f = Template::random(n, &mut rng);
            let p = Template::random(n, &mut rng);
            let lhs = ToyTransform.apply(&m, &p).unwrap().distance(&ToyTransform.apply(&f, &p).unwrap());
            assert_eq!(lhs, m.distance(&f));
        }
    }

    #[test]
    fn single_ball_leaks_need_one_item() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (_, features) = planted_group(40, 8, 25, &mut rng);
        let (_, tokens) = planted_group(40, 8, 25, &mut rng);
        let recs = records_from(
            &TemplateDatabase::from_templates(features).unwrap(),
            &TemplateDatabase::from_templates(tokens).unwrap(),
        )
        .unwrap();
        let solver = CoverSolver::exact();
        let mf = master_feature_attack(&leak_for(AttackKind::MasterFeatureSet, &recs), 8, true, &solver, 0).unwrap();
        assert_eq!(mf.items.len(), 1);
        assert_eq!(mf.coverage, 1.0);
        let mk = masterkey_attack(&leak_for(AttackKind::MasterkeySet, &recs), 8, true, &solver, 0).unwrap();
        assert_eq!(mk.items.len(), 1);
        assert_eq!(mk.coverage, 1.0);
        assert_eq!(mk.inversion_calls, 25);
    }

    #[test]
    fn partitioning_never_grows_the_set() {
        for seed in 0..10 {
            let recs = simulate_enrollment(24, 30, seed).unwrap();
            let solver = CoverSolver::exact();
            for kind in [AttackKind::MasterFeatureSet, AttackKind::MasterkeySet] {
                let leak = leak_for(kind, &recs);
                let plain = run_attack(kind, &leak, 5, false, &solver, seed).unwrap();
                let part = run_attack(kind, &leak, 5, true, &solver, seed).unwrap();
                assert_eq!(plain.items.len(), 30);
                assert!(part.items.len() <= plain.items.len());
                assert_eq!(plain.coverage, 1.0);
                assert_eq!(part.coverage, 1.0);
                assert_eq!(part.inversion_calls, plain.inversion_calls);
            }
        }
    }

    #[test]
    fn coverage_detects_misses() {
        let recs = simulate_enrollment(32, 10, 4).unwrap();
        let leak = leak_for(AttackKind::MasterFeatureSet, &recs);
        let only_first = vec![recs[0].feature.clone()];
        let c = coverage(AttackKind::MasterFeatureSet, &leak, &only_first, 0).unwrap();
        assert!((c - 0.1).abs() < 1e-12);
    }

    #[test]
    fn leak_text_round_trip_and_errors() {
        let recs = simulate_enrollment(16, 5, 9).unwrap();
        let leak = leak_for(AttackKind::MasterkeySet, &recs);
        assert_eq!(parse_leak(&write_leak(&leak)).unwrap(), leak);
        assert!(parse_leak("a 0101 011\n").is_err());
        assert!(parse_leak("a 0101\n").is_err());
        assert!(matches!(
            run_attack(AttackKind::MasterkeySet, &[], 3, true, &CoverSolver::exact(), 0),
            Err(Error::EmptyLeak)
        ));
    }
}
