//! Exhaustive depth-first search over flip-count vectors with bound pruning.

use std::time::Instant;

use super::reduce::ReducedSystem;
use super::{CoverResult, CoverStats, CoverStatus, SolverKind};
use crate::template::Template;

pub const DEFAULT_NODE_BUDGET: u64 = 50_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExactConfig {
    /// Search nodes visited before giving up with `Unknown`.
    pub node_budget: u64,
}

impl Default for ExactConfig {
    fn default() -> Self {
        Self {
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }
}

/// All feasible flip-count vectors of a system, when the search completed.
#[derive(Clone, Debug)]
pub struct Enumeration {
    pub solutions: Vec<Vec<usize>>,
    pub complete: bool,
    pub nodes: u64,
}

impl Enumeration {
    /// One decoded representative per feasible vector.
    pub fn representatives(&self, sys: &ReducedSystem) -> Vec<Template> {
        self.solutions.iter().map(|n| sys.decode_unchecked(n)).collect()
    }

    /// Every template in the ball intersection, expanded from the feasible vectors.
    pub fn all_covers(&self, sys: &ReducedSystem) -> Vec<Template> {
        self.solutions.iter().flat_map(|n| sys.realizations(n)).collect()
    }
}

pub fn solve_exact(sys: &ReducedSystem, config: &ExactConfig) -> CoverResult {
    let start = Instant::now();
    let mut search = Search::new(sys, config.node_budget, false);
    search.run();
    let status = match (search.solutions.pop(), search.exhausted_budget) {
        (Some(n), _) => CoverStatus::Found(sys.decode_unchecked(&n)),
        (None, false) => CoverStatus::NotFound,
        (None, true) => CoverStatus::Unknown,
    };
    CoverResult {
        status,
        solver: SolverKind::Exact,
        stats: CoverStats {
            iterations: search.nodes,
            elapsed: start.elapsed(),
        },
    }
}

pub fn enumerate_exact(sys: &ReducedSystem, config: &ExactConfig) -> Enumeration {
    let mut search = Search::new(sys, config.node_budget, true);
    search.run();
    let mut solutions = search.solutions;
    solutions.sort();
    Enumeration {
        solutions,
        complete: !search.exhausted_budget,
        nodes: search.nodes,
    }
}

struct Search<'a> {
    sys: &'a ReducedSystem,
    /// Variable visiting order.
    order: Vec<usize>,
    /// `neg_cap[t * rows + i]`: how far row `i` can still drop using variables `order[t..]`.
    neg_cap: Vec<i64>,
    lhs: Vec<i64>,
    counts: Vec<usize>,
    /// Row whose signs are all +1, capping the total flip count.
    reference_row: usize,
    all: bool,
    budget: u64,
    nodes: u64,
    exhausted_budget: bool,
    solutions: Vec<Vec<usize>>,
}

impl<'a> Search<'a> {
    fn new(sys: &'a ReducedSystem, budget: u64, all: bool) -> Self {
        let rows = sys.num_rows();
        let vars = sys.num_vars();
        let mut order: Vec<usize> = (0..vars).collect();
        // variables that pull many rows down first
        order.sort_by_key(|&j| {
            let neg = (0..rows).filter(|&i| sys.sign(i, j) < 0).count();
            std::cmp::Reverse((neg * sys.bounds()[j], j))
        });
        let mut neg_cap = vec![0i64; (vars + 1) * rows];
        for t in (0..vars).rev() {
            let j = order[t];
            for i in 0..rows {
                let here = if sys.sign(i, j) < 0 {
                    sys.bounds()[j] as i64
                } else {
                    0
                };
                neg_cap[t * rows + i] = neg_cap[(t + 1) * rows + i] + here;
            }
        }
        Self {
            sys,
            order,
            neg_cap,
            lhs: vec![0; rows],
            counts: vec![0; vars],
            reference_row: sys.partition().reference(),
            all,
            budget,
            nodes: 0,
            exhausted_budget: false,
            solutions: Vec::new(),
        }
    }

    fn run(&mut self) {
        self.descend(0);
    }

    /// Returns true when the search should stop.
    fn descend(&mut self, depth: usize) -> bool {
        self.nodes += 1;
        if self.nodes > self.budget {
            self.exhausted_budget = true;
            return true;
        }
        let rows = self.sys.num_rows();
        let rhs = self.sys.rhs();
        let remaining = rhs[self.reference_row] - self.lhs[self.reference_row];
        if remaining < 0 {
            return false;
        }
        let caps = &self.neg_cap[depth * rows..(depth + 1) * rows];
        for i in 0..rows {
            if self.lhs[i] - remaining.min(caps[i]) > rhs[i] {
                return false;
            }
        }
        if depth == self.order.len() {
            // every row satisfied: caps are zero here
            self.solutions.push(self.counts.clone());
            return !self.all;
        }

        let j = self.order[depth];
        let top = (self.sys.bounds()[j] as i64).min(remaining) as usize;
        for v in 0..=top {
            if v > 0 {
                for i in 0..rows {
                    self.lhs[i] += self.sys.sign(i, j);
                }
            }
            self.counts[j] = v;
            if self.descend(depth + 1) {
                self.undo(j, v);
                return true;
            }
        }
        self.undo(j, top);
        false
    }

    fn undo(&mut self, j: usize, v: usize) {
        if v > 0 {
            for i in 0..self.sys.num_rows() {
                self.lhs[i] -= self.sys.sign(i, j) * v as i64;
            }
        }
        self.counts[j] = 0;
    }
}
