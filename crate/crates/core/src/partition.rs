//! Splitting a database into groups that each share a cover template.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use num_bigint::BigUint;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::{ball_volume, binomial, birthday_bound_log2};
use crate::clustering::cluster_complete_link;
use crate::cover::{find_cover, CoverSolver};
use crate::error::{Error, Result};
use crate::template::{Template, TemplateDatabase};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MasterEntry {
    pub center: Template,
    /// Indices into the source database, ascending.
    pub covered: Vec<usize>,
}

/// Centers whose covered sets partition the database, every member lying
/// within `epsilon` of its center.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MasterTemplateSet {
    pub epsilon: usize,
    pub entries: Vec<MasterEntry>,
}

impl MasterTemplateSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn centers(&self) -> impl Iterator<Item = &Template> {
        self.entries.iter().map(|e| &e.center)
    }

    /// Checks the partition and distance invariants against `db`.
    pub fn verify(&self, db: &TemplateDatabase) -> Result<()> {
        let mut seen = vec![false; db.len()];
        for (e, entry) in self.entries.iter().enumerate() {
            if entry.center.len() != db.dim() {
                return Err(Error::DimensionMismatch {
                    expected: db.dim(),
                    found: entry.center.len(),
                });
            }
            for &i in &entry.covered {
                if i >= db.len() || std::mem::replace(&mut seen[i], true) {
                    return Err(Error::Invalid(format!("entry {e}: member {i} missing or covered twice")));
                }
                let d = entry.center.distance(&db.members()[i]);
                if d > self.epsilon {
                    return Err(Error::Invalid(format!(
                        "entry {e}: member {} at distance {d} > {}",
                        db.ids()[i],
                        self.epsilon
                    )));
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::Invalid(format!("member {} is not covered", db.ids()[i])));
        }
        Ok(())
    }

    /// One line per entry: `<center bits> <id>,<id>,...`.
    pub fn to_text(&self, db: &TemplateDatabase) -> String {
        let mut out = String::new();
        for entry in &self.entries {
            let ids: Vec<&str> = entry.covered.iter().map(|&i| db.ids()[i].as_str()).collect();
            let _ = writeln!(out, "{} {}", entry.center, ids.join(","));
        }
        out
    }

    pub fn parse(text: &str, db: &TemplateDatabase, epsilon: usize) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line_no = lineno + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse { line: line_no, message };
            let (bits, ids) = line
                .split_once(' ')
                .ok_or_else(|| parse_err("expected `<center> <ids>`".into()))?;
            let center: Template = bits.parse().map_err(|_| parse_err("bad center bits".into()))?;
            let mut covered = Vec::new();
            for id in ids.split(',').filter(|s| !s.is_empty()) {
                covered.push(
                    db.position_of_id(id)
                        .ok_or_else(|| parse_err(format!("unknown id `{id}`")))?,
                );
            }
            covered.sort_unstable();
            entries.push(MasterEntry { center, covered });
        }
        let mts = Self { epsilon, entries };
        mts.verify(db)?;
        Ok(mts)
    }
}

/// Clusters the remaining members with a diameter bound starting at `2 epsilon`,
/// keeps every cluster for which a cover is found, and tightens the bound by
/// one after each pass until the database is exhausted.
pub fn partition_database(
    db: &TemplateDatabase,
    epsilon: usize,
    solver: &CoverSolver,
    seed: u64,
) -> Result<MasterTemplateSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let members = db.members();
    let mut remaining: Vec<usize> = (0..db.len()).collect();
    let mut entries = Vec::new();
    let mut s = 2 * epsilon;

    while !remaining.is_empty() {
        let pool: Vec<Template> = remaining.iter().map(|&i| members[i].clone()).collect();
        let clustering = cluster_complete_link(&pool, s);
        let mut taken = vec![false; remaining.len()];
        for cluster in &clustering.clusters {
            let solve_seed: u64 = rng.gen();
            let center = if cluster.len() == 1 {
                Some(pool[cluster[0]].clone())
            } else {
                let group: Vec<Template> = cluster.iter().map(|&i| pool[i].clone()).collect();
                find_cover(&group, epsilon, solver, solve_seed)?.center().cloned()
            };
            // Unknown counts as a miss; the cluster is retried with a smaller bound.
            if let Some(center) = center {
                let mut covered: Vec<usize> = cluster.iter().map(|&i| remaining[i]).collect();
                covered.sort_unstable();
                for &i in cluster {
                    taken[i] = true;
                }
                entries.push(MasterEntry { center, covered });
            }
        }
        remaining = remaining
            .into_iter()
            .zip(taken)
            .filter(|(_, t)| !t)
            .map(|(i, _)| i)
            .collect();
        s = s.saturating_sub(1);
    }
    Ok(MasterTemplateSet { epsilon, entries })
}

/// Picks a random remaining member and removes it together with everything
/// within `epsilon`, until nothing is left. Centers are database members.
pub fn partition_greedy(db: &TemplateDatabase, epsilon: usize, seed: u64) -> MasterTemplateSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let members = db.members();
    let mut remaining: Vec<usize> = (0..db.len()).collect();
    let mut entries = Vec::new();
    while !remaining.is_empty() {
        let pick = remaining[rng.gen_range(0..remaining.len())];
        let center = members[pick].clone();
        let (covered, rest): (Vec<usize>, Vec<usize>) = remaining
            .into_iter()
            .partition(|&i| members[i].distance(&center) <= epsilon);
        remaining = rest;
        entries.push(MasterEntry { center, covered });
    }
    MasterTemplateSet { epsilon, entries }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AddOutcome {
    /// Attached to an existing entry whose center is within epsilon.
    Attached { entry: usize, distance: usize },
    /// No center was close enough; a singleton entry was appended.
    NewEntry { entry: usize },
}

/// Enrolls `t` under `id` and attaches it to the nearest center within
/// `epsilon` (lowest entry index on ties), or opens a singleton entry.
pub fn add_user(
    mts: &mut MasterTemplateSet,
    db: &mut TemplateDatabase,
    id: String,
    t: Template,
) -> Result<AddOutcome> {
    let epsilon = mts.epsilon;
    let index = db.push(id, t)?;
    let t = &db.members()[index];
    let nearest = mts
        .entries
        .iter()
        .enumerate()
        .map(|(e, entry)| (entry.center.distance(t), e))
        .filter(|&(d, _)| d <= epsilon)
        .min();
    Ok(match nearest {
        Some((distance, entry)) => {
            mts.entries[entry].covered.push(index);
            AddOutcome::Attached { entry, distance }
        }
        None => {
            mts.entries.push(MasterEntry {
                center: t.clone(),
                covered: vec![index],
            });
            AddOutcome::NewEntry {
                entry: mts.entries.len() - 1,
            }
        }
    })
}

/// `|B(a, epsilon) ∩ B(b, epsilon)|` for two templates at distance `d` in `n` bits.
///
/// A point flips `i` of the `d` disagreeing positions and `j` of the others; it
/// lies at distance `i + j` from `a` and `d - i + j` from `b`.
pub fn ball_intersection(d: usize, n: usize, epsilon: usize) -> Result<BigUint> {
    if d > n {
        return Err(Error::Invalid(format!("distance {d} exceeds dimension {n}")));
    }
    let mut total = BigUint::zero();
    for i in 0..=d.min(epsilon) {
        let left = binomial(d, i);
        for j in 0..=(n - d).min(epsilon - i) {
            if d - i + j <= epsilon {
                total += &left * binomial(n - d, j);
            }
        }
    }
    Ok(total)
}

/// Running count of removed users, for capacity accounting.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RemovalLedger {
    pub removed: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffectedUser {
    pub id: String,
    pub distance: usize,
    /// Size of the overlap between this user's acceptance ball and the revoked one.
    pub overlap: BigUint,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RemovalReport {
    pub removed_id: String,
    pub removed: Template,
    pub affected: Vec<AffectedUser>,
    /// Templates that must now be rejected: one ball volume per removed user so far.
    pub removed_volume: BigUint,
    pub removed_total: u64,
    /// Removed plus enrolled users reached the birthday size.
    pub capacity_breach: bool,
}

/// Removes the user holding `t` and lists every remaining user whose ball meets
/// the revoked ball. Re-enrollment is left to the caller.
pub fn remove_user(
    db: &mut TemplateDatabase,
    t: &Template,
    epsilon: usize,
    ledger: &mut RemovalLedger,
) -> Result<RemovalReport> {
    let n = db.dim();
    if t.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: t.len(),
        });
    }
    let index = db.position_of(t).ok_or_else(|| Error::NotEnrolled(t.to_string()))?;
    let volume = ball_volume(n, epsilon)?;
    let (removed_id, removed) = db.remove(index)?;
    ledger.removed += 1;

    let mut affected = Vec::new();
    for (id, other) in db.ids().iter().zip(db.members()) {
        let d = other.distance(&removed);
        if d <= 2 * epsilon {
            affected.push(AffectedUser {
                id: id.clone(),
                distance: d,
                overlap: ball_intersection(d, n, epsilon)?,
            });
        }
    }
    let population = ledger.removed + db.len() as u64;
    let capacity_breach = (population as f64).log2() >= birthday_bound_log2(n, epsilon)?;
    Ok(RemovalReport {
        removed_id,
        removed,
        affected,
        removed_volume: volume * ledger.removed,
        removed_total: ledger.removed,
        capacity_breach,
    })
}

/// Ids of database members within `radius` of `t`, for quick lookups.
pub fn neighbours(db: &TemplateDatabase, t: &Template, radius: usize) -> BTreeSet<String> {
    db.ids()
        .iter()
        .zip(db.members())
        .filter(|(_, m)| m.distance(t) <= radius)
        .map(|(id, _)| id.clone())
        .collect()
}
