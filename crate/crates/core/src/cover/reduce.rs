//! Column-class reduction of the ball-intersection system.
//!
//! Columns of a group that are identical or complementary (as bit columns over
//! the members) always contribute together: a candidate's distance to every
//! member depends only on how many bits it flips inside each class. The cover
//! problem over `n` bits therefore shrinks to an integer system over one
//! flip count per class.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::template::Template;

/// Coarsest partition of bit positions into identical-or-opposite column classes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexPartition {
    classes: Vec<Vec<usize>>,
    reference: usize,
    members: usize,
    /// `agrees[j * members + i]`: member `i` equals the reference on class `j`.
    agrees: Vec<bool>,
}

impl IndexPartition {
    /// Partition for `group`, with signs relative to `group[reference]`.
    pub fn new(group: &[Template], reference: usize) -> Result<Self> {
        let first = group.first().ok_or(Error::EmptyDatabase)?;
        let n = first.len();
        if let Some(bad) = group.iter().find(|t| t.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: bad.len(),
            });
        }
        if reference >= group.len() {
            return Err(Error::Invalid(format!(
                "reference {reference} outside a group of {}",
                group.len()
            )));
        }
        let m = group.len();
        let ref_t = &group[reference];

        // Column c normalised so the reference bit is 0: bit i set iff member i
        // differs from the reference at c.
        let mut by_key: HashMap<Template, usize> = HashMap::new();
        let mut classes: Vec<Vec<usize>> = Vec::new();
        let mut keys: Vec<Template> = Vec::new();
        for c in 0..n {
            let r = ref_t.get(c);
            let mut key = Template::zeros(m);
            for (i, t) in group.iter().enumerate() {
                if t.get(c) != r {
                    key.set(i, true);
                }
            }
            match by_key.get(&key) {
                Some(&j) => classes[j].push(c),
                None => {
                    by_key.insert(key.clone(), classes.len());
                    classes.push(vec![c]);
                    keys.push(key);
                }
            }
        }

        let mut agrees = Vec::with_capacity(classes.len() * m);
        for key in &keys {
            agrees.extend((0..m).map(|i| !key.get(i)));
        }
        Ok(Self {
            classes,
            reference,
            members: m,
            agrees,
        })
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn num_members(&self) -> usize {
        self.members
    }

    pub fn reference(&self) -> usize {
        self.reference
    }

    /// +1 when member `i` agrees with the reference on class `j`, -1 otherwise.
    #[inline]
    pub fn sign(&self, i: usize, j: usize) -> i64 {
        if self.agrees[j * self.members + i] {
            1
        } else {
            -1
        }
    }

    /// Classes in 1-based column numbering, the way they are usually written down.
    pub fn one_based(&self) -> Vec<Vec<usize>> {
        self.classes
            .iter()
            .map(|k| k.iter().map(|c| c + 1).collect())
            .collect()
    }
}

/// `sum_j sign[i][j] * N_j <= epsilon - d(member_i, reference)` for every member,
/// with `0 <= N_j <= min(epsilon, |K_j|)`.
#[derive(Clone, Debug)]
pub struct ReducedSystem {
    partition: IndexPartition,
    reference: Template,
    epsilon: usize,
    dist_to_ref: Vec<usize>,
    bounds: Vec<usize>,
    rhs: Vec<i64>,
}

impl ReducedSystem {
    pub fn build(group: &[Template], epsilon: usize, reference: usize) -> Result<Self> {
        let partition = IndexPartition::new(group, reference)?;
        let ref_t = group[reference].clone();
        let dist_to_ref: Vec<usize> = group.iter().map(|t| t.distance(&ref_t)).collect();
        let bounds = partition
            .classes()
            .iter()
            .map(|k| k.len().min(epsilon))
            .collect();
        let rhs = dist_to_ref
            .iter()
            .map(|&d| epsilon as i64 - d as i64)
            .collect();
        Ok(Self {
            partition,
            reference: ref_t,
            epsilon,
            dist_to_ref,
            bounds,
            rhs,
        })
    }

    pub fn partition(&self) -> &IndexPartition {
        &self.partition
    }

    pub fn reference(&self) -> &Template {
        &self.reference
    }

    pub fn epsilon(&self) -> usize {
        self.epsilon
    }

    pub fn dist_to_ref(&self) -> &[usize] {
        &self.dist_to_ref
    }

    pub fn bounds(&self) -> &[usize] {
        &self.bounds
    }

    /// `epsilon - d(v)` per member row.
    pub fn rhs(&self) -> &[i64] {
        &self.rhs
    }

    pub fn num_rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn num_vars(&self) -> usize {
        self.bounds.len()
    }

    #[inline]
    pub fn sign(&self, row: usize, var: usize) -> i64 {
        self.partition.sign(row, var)
    }

    /// Number of points in the box `prod_j {0..bounds[j]}`, saturating.
    pub fn search_space_size(&self) -> u128 {
        self.bounds
            .iter()
            .fold(1u128, |acc, &b| acc.saturating_mul(b as u128 + 1))
    }

    /// Per-row slack `rhs_i - (A N)_i`; negative entries are violated rows.
    pub fn slack(&self, counts: &[usize]) -> Vec<i64> {
        (0..self.num_rows())
            .map(|i| {
                let lhs: i64 = counts
                    .iter()
                    .enumerate()
                    .map(|(j, &nj)| self.sign(i, j) * nj as i64)
                    .sum();
                self.rhs[i] - lhs
            })
            .collect()
    }

    /// Sum over rows of `min(0, slack)`: zero exactly on feasible vectors, negative otherwise.
    pub fn energy(&self, counts: &[usize]) -> i64 {
        self.slack(counts).into_iter().map(|s| s.min(0)).sum()
    }

    pub fn in_box(&self, counts: &[usize]) -> bool {
        counts.len() == self.num_vars() && counts.iter().zip(&self.bounds).all(|(n, b)| n <= b)
    }

    pub fn is_feasible(&self, counts: &[usize]) -> bool {
        self.in_box(counts) && self.slack(counts).iter().all(|&s| s >= 0)
    }

    /// Reference with the lowest `N_j` positions of every class flipped.
    pub fn decode(&self, counts: &[usize]) -> Result<Template> {
        if !self.is_feasible(counts) {
            return Err(Error::Infeasible);
        }
        Ok(self.decode_unchecked(counts))
    }

    pub(crate) fn decode_unchecked(&self, counts: &[usize]) -> Template {
        let mut t = self.reference.clone();
        for (class, &nj) in self.partition.classes().iter().zip(counts) {
            for &c in &class[..nj] {
                t.flip(c);
            }
        }
        t
    }

    /// Every template whose per-class distances to the reference equal `counts`.
    pub fn realizations(&self, counts: &[usize]) -> Vec<Template> {
        let mut out = vec![self.reference.clone()];
        for (class, &nj) in self.partition.classes().iter().zip(counts) {
            let subsets = combinations(class, nj);
            let mut next = Vec::with_capacity(out.len() * subsets.len());
            for base in &out {
                for subset in &subsets {
                    let mut t = base.clone();
                    for &c in subset {
                        t.flip(c);
                    }
                    next.push(t);
                }
            }
            out = next;
        }
        out
    }

    /// Per-class distance profile of `candidate` to the reference.
    pub fn counts_of(&self, candidate: &Template) -> Vec<usize> {
        self.partition
            .classes()
            .iter()
            .map(|k| k.iter().filter(|&&c| candidate.get(c) != self.reference.get(c)).count())
            .collect()
    }
}

fn combinations(items: &[usize], r: usize) -> Vec<Vec<usize>> {
    fn go(items: &[usize], r: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            if items.len() - i < r - cur.len() {
                break;
            }
            cur.push(items[i]);
            go(items, r, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(items, r, 0, &mut Vec::with_capacity(r), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn t(s: &str) -> Template {
        s.parse().unwrap()
    }

    fn seven_bit_group() -> Vec<Template> {
        vec![t("1011011"), t("1001011"), t("1011111"), t("1001110")]
    }

    /// Direct check of the column property on an index set.
    fn property_holds(group: &[Template], k: &[usize]) -> bool {
        group.iter().all(|u| {
            group.iter().all(|v| {
                let d = k.iter().filter(|&&c| u.get(c) != v.get(c)).count();
                d == 0 || d == k.len()
            })
        })
    }

    fn random_group(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Vec<Template> {
        (0..m).map(|_| Template::random(n, rng)).collect()
    }

    #[test]
    fn seven_bit_partition() {
        let p = IndexPartition::new(&seven_bit_group(), 0).unwrap();
        assert_eq!(p.one_based(), vec![vec![1, 2, 4, 6], vec![3], vec![5], vec![7]]);
    }

    #[test]
    fn identical_members_give_one_class() {
        let g = vec![t("0110101"); 3];
        let p = IndexPartition::new(&g, 0).unwrap();
        assert_eq!(p.classes(), &[vec![0, 1, 2, 3, 4, 5, 6]]);
        let single = IndexPartition::new(&[t("01")], 0).unwrap();
        assert_eq!(single.num_classes(), 1);
    }

    #[test]
    fn dimension_mismatch_in_group() {
        assert!(matches!(
            IndexPartition::new(&[t("01"), t("011")], 0),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(IndexPartition::new(&[], 0), Err(Error::EmptyDatabase)));
    }

    #[test]
    fn partition_is_valid_and_coarsest() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let n = rng.gen_range(1..40);
            let m = rng.gen_range(1..6);
            let g = random_group(&mut rng, n, m);
            let p = IndexPartition::new(&g, rng.gen_range(0..m)).unwrap();
            let mut cols: Vec<usize> = p.classes().concat();
            cols.sort_unstable();
            assert_eq!(cols, (0..n).collect::<Vec<_>>());
            assert!(p.num_classes() <= n && p.num_classes() >= 1);
            for k in p.classes() {
                assert!(property_holds(&g, k));
            }
            for a in 0..p.num_classes() {
                for b in (a + 1)..p.num_classes() {
                    let merged = [p.classes()[a].clone(), p.classes()[b].clone()].concat();
                    assert!(!property_holds(&g, &merged));
                }
            }
        }
    }

    #[test]
    fn seven_bit_reduced_system() {
        let sys = ReducedSystem::build(&seven_bit_group(), 2, 0).unwrap();
        assert_eq!(sys.num_vars(), 4);
        assert_eq!(sys.bounds(), &[2, 1, 1, 1]);
        // reference row is all +1
        assert!((0..4).all(|j| sys.sign(0, j) == 1));
        assert_eq!(sys.rhs()[0], 2);
    }

    #[test]
    fn singleton_system() {
        let sys = ReducedSystem::build(&[t("10110")], 3, 0).unwrap();
        assert_eq!(sys.num_rows(), 1);
        assert_eq!(sys.num_vars(), 1);
        assert_eq!(sys.bounds(), &[3]);
        assert!(sys.is_feasible(&[3]));
        assert!(!sys.is_feasible(&[4]));
    }

    #[test]
    fn decode_zero_is_reference() {
        let g = seven_bit_group();
        let sys = ReducedSystem::build(&g, 3, 1).unwrap();
        assert_eq!(sys.decode(&vec![0; sys.num_vars()]).unwrap(), g[1]);
    }

    #[test]
    fn decode_example_one_without_origin() {
        let g = vec![t("011"), t("101"), t("110")];
        let sys = ReducedSystem::build(&g, 1, 0).unwrap();
        // enumerate the whole box: exactly one feasible vector
        let mut feasible = Vec::new();
        let mut counts = vec![0; sys.num_vars()];
        loop {
            if sys.is_feasible(&counts) {
                feasible.push(counts.clone());
            }
            let mut j = 0;
            while j < counts.len() && counts[j] == sys.bounds()[j] {
                counts[j] = 0;
                j += 1;
            }
            if j == counts.len() {
                break;
            }
            counts[j] += 1;
        }
        assert_eq!(feasible.len(), 1);
        assert_eq!(sys.decode(&feasible[0]).unwrap(), t("111"));
        assert_eq!(sys.decode(&vec![1; sys.num_vars()]), Err(Error::Infeasible));
    }

    #[test]
    fn energy_zero_iff_feasible_and_permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..300 {
            let n = rng.gen_range(4..14);
            let m = rng.gen_range(1..6);
            let g = random_group(&mut rng, n, m);
            let eps = rng.gen_range(0..=n);
            let sys = ReducedSystem::build(&g, eps, 0).unwrap();
            let counts: Vec<usize> = sys.bounds().iter().map(|&b| rng.gen_range(0..=b)).collect();
            let e = sys.energy(&counts);
            assert!(e <= 0);
            assert_eq!(e == 0, sys.is_feasible(&counts));
            // any realization has the same distances to all members
            let dists: Vec<Vec<usize>> = sys
                .realizations(&counts)
                .iter()
                .map(|p| g.iter().map(|v| v.distance(p)).collect())
                .collect();
            assert!(dists.windows(2).all(|w| w[0] == w[1]));
            let expected: Vec<i64> = dists[0].iter().map(|&d| eps as i64 - d as i64).collect();
            assert_eq!(sys.slack(&counts), expected);
        }
    }

    #[test]
    fn counts_round_trip_through_decode() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let g = random_group(&mut rng, 20, 4);
        let sys = ReducedSystem::build(&g, 20, 2).unwrap();
        for _ in 0..100 {
            let p = Template::random(20, &mut rng);
            let counts = sys.counts_of(&p);
            assert!(sys.is_feasible(&counts));
            assert_eq!(sys.counts_of(&sys.decode(&counts).unwrap()), counts);
        }
    }
}
