//! Complete-link agglomerative clustering under an inner-cluster diameter bound.

use crate::template::{DissimilarityMatrix, Template};

/// Disjoint groups of member indices whose pairwise distances are all at most
/// `diameter_bound`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clustering {
    pub clusters: Vec<Vec<usize>>,
    pub diameter_bound: usize,
}

impl Clustering {
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }
}

/// Largest pairwise distance between the two groups.
pub fn complete_link_distance(members: &[Template], a: &[usize], b: &[usize]) -> usize {
    a.iter()
        .flat_map(|&i| b.iter().map(move |&j| members[i].distance(&members[j])))
        .max()
        .unwrap_or(0)
}

pub fn cluster_complete_link(members: &[Template], s: usize) -> Clustering {
    cluster_matrix(&DissimilarityMatrix::from_templates(members), s)
}

/// Starts from singletons and repeatedly merges the two clusters with the
/// smallest complete-link distance, stopping once that distance exceeds `s`.
///
/// Ties go to the lexicographically smallest `(i, j)` slot pair, where a
/// cluster's slot is its smallest member index. Clusters are returned in slot
/// order with sorted members.
pub fn cluster_matrix(matrix: &DissimilarityMatrix, s: usize) -> Clustering {
    let k = matrix.size();
    let mut link: Vec<u32> = (0..k * k).map(|x| matrix.get(x / k, x % k)).collect();
    let mut active = vec![true; k];
    let mut groups: Vec<Vec<usize>> = (0..k).map(|i| vec![i]).collect();
    // nearest[i] = best partner j > i for slot i
    let mut nearest: Vec<Option<(u32, usize)>> = vec![None; k];

    let best_after = |link: &[u32], active: &[bool], i: usize| -> Option<(u32, usize)> {
        let mut best: Option<(u32, usize)> = None;
        for j in (i + 1)..k {
            if active[j] {
                let d = link[i * k + j];
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, j));
                }
            }
        }
        best
    };

    for (i, slot) in nearest.iter_mut().enumerate() {
        *slot = best_after(&link, &active, i);
    }

    loop {
        let mut pick: Option<(u32, usize, usize)> = None;
        for i in 0..k {
            if !active[i] {
                continue;
            }
            if let Some((d, j)) = nearest[i] {
                if pick.is_none_or(|(bd, _, _)| d < bd) {
                    pick = Some((d, i, j));
                }
            }
        }
        let Some((d, i, j)) = pick else { break };
        if d as usize > s {
            break;
        }

        // merge j into i
        active[j] = false;
        let moved = std::mem::take(&mut groups[j]);
        groups[i].extend(moved);
        for h in 0..k {
            if active[h] && h != i {
                let merged = link[i * k + h].max(link[j * k + h]);
                link[i * k + h] = merged;
                link[h * k + i] = merged;
            }
        }
        nearest[i] = best_after(&link, &active, i);
        for h in 0..i {
            if active[h] {
                if let Some((_, partner)) = nearest[h] {
                    if partner == i || partner == j {
                        nearest[h] = best_after(&link, &active, h);
                    }
                }
            }
        }
        // slots between i and j may have pointed at j
        for h in (i + 1)..j {
            if active[h] && nearest[h].is_some_and(|(_, p)| p == j) {
                nearest[h] = best_after(&link, &active, h);
            }
        }
    }

    let clusters = groups
        .into_iter()
        .zip(active)
        .filter(|(_, a)| *a)
        .map(|(mut g, _)| {
            g.sort_unstable();
            g
        })
        .collect();
    Clustering {
        clusters,
        diameter_bound: s,
    }
}
