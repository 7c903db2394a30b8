//! Exact constraint-satisfaction inference over a sentence's candidate pool.
//!
//! The objective of a 0/1 selection `l` is
//! `sum_i [s_i l_i + O (1 - l_i)] - sum(soft penalties)` with `s_i` the sum
//! of the voting systems' probabilities. It is maximized by depth-first
//! branch-and-bound: items are branched in order of decreasing margin
//! `s_i - O`, and a node is cut when its value plus the positive margins of
//! the still-selectable items falls below the incumbent.
//!
//! Ties between optimal selections go to the smaller selection, then to the
//! one containing the highest-priority candidate where they differ (more
//! votes, earlier start, label text).

use std::cmp::Ordering;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval_oracle::{score, solutions_to_props};
use crate::model::{
    audit_selection, is_dependent, pair_conflicts, satisfies_dependency, Candidate, Constraint, ConstraintMode,
    ConstraintSet, Solution,
};
use crate::pool::{CandidatePool, PoolSentence};

pub const DEFAULT_BIAS: f64 = 0.30;
pub const DEFAULT_MAX_NODES: u64 = 20_000_000;
const EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scope {
    PredByPred,
    FullSentence,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsConfig {
    /// Score of leaving a candidate unselected.
    pub o: f64,
    pub scope: Scope,
    pub constraints: ConstraintSet,
    /// Search nodes allowed per optimization before giving up.
    pub max_nodes: u64,
}

impl Default for CsConfig {
    fn default() -> Self {
        CsConfig {
            o: DEFAULT_BIAS,
            scope: Scope::FullSentence,
            constraints: ConstraintSet::hard(&[Constraint::C1, Constraint::C2, Constraint::C5, Constraint::C6]),
            max_nodes: DEFAULT_MAX_NODES,
        }
    }
}

impl CsConfig {
    /// Constraints in effect for the configured scope.
    pub fn effective_constraints(&self) -> ConstraintSet {
        match self.scope {
            Scope::PredByPred => self.constraints.per_predicate(),
            Scope::FullSentence => self.constraints,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CsError {
    #[error("search budget of {nodes} nodes exhausted; best-so-far solution is not proven optimal")]
    Timeout { best: Box<Solution>, nodes: u64 },
    #[error("non-finite weight for candidate {0}")]
    NonFinite(usize),
    #[error("{0} weights supplied for {1} candidates")]
    WeightCount(usize, usize),
}

/// Result of one optimization with its search statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub solution: Solution,
    pub nodes: u64,
}

/// Objective of `selected` over the candidates in `universe`.
pub fn objective(
    selected: &[usize],
    universe_size: usize,
    candidates: &[Candidate],
    weights: &[f64],
    o: f64,
    cs: &ConstraintSet,
) -> f64 {
    let gain: f64 = selected.iter().map(|&i| weights[i] - o).sum();
    let penalty: f64 = audit_selection(selected, candidates, cs).iter().map(|v| v.penalty()).sum();
    o * universe_size as f64 + gain - penalty
}

struct Dependency {
    mode: ConstraintMode,
    bases: Vec<usize>,
}

struct Search {
    /// Free items (local indices) in branching order.
    order: Vec<usize>,
    position: Vec<usize>,
    margin: Vec<f64>,
    rank: Vec<u32>,
    hard: Vec<Vec<usize>>,
    soft: Option<Vec<Vec<f64>>>,
    deps: Vec<Vec<Dependency>>,
    any_hard_dep: bool,
    blocked: Vec<u32>,
    chosen: Vec<bool>,
    selected: Vec<usize>,
    best_value: f64,
    best: Vec<usize>,
    best_key: Vec<u32>,
    nodes: u64,
    max_nodes: u64,
}

fn better_key(a: &[u32], b: &[u32]) -> bool {
    match a.len().cmp(&b.len()) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => a < b,
    }
}

impl Search {
    fn new(cands: &[&Candidate], margin: Vec<f64>, cs: &ConstraintSet, max_nodes: u64) -> Search {
        let n = cands.len();
        let mut by_priority: Vec<usize> = (0..n).collect();
        by_priority.sort_by(|&a, &b| cands[a].priority_cmp(cands[b]).then(a.cmp(&b)));
        let mut rank = vec![0u32; n];
        for (r, &i) in by_priority.iter().enumerate() {
            rank[i] = r as u32;
        }

        let mut hard = vec![Vec::new(); n];
        let mut soft: Option<Vec<Vec<f64>>> = None;
        for (c, mode) in cs.active().filter(|(c, _)| c.is_pairwise()) {
            for i in 0..n {
                for j in i + 1..n {
                    if !pair_conflicts(c, &cands[i].argument, &cands[j].argument) {
                        continue;
                    }
                    match mode {
                        ConstraintMode::Hard => {
                            hard[i].push(j);
                            hard[j].push(i);
                        }
                        ConstraintMode::Soft(p) => {
                            let m = soft.get_or_insert_with(|| vec![vec![0.0; n]; n]);
                            m[i][j] += p;
                            m[j][i] += p;
                        }
                        ConstraintMode::Off => {}
                    }
                }
            }
        }
        for h in &mut hard {
            h.sort_unstable();
            h.dedup();
        }

        let mut deps: Vec<Vec<Dependency>> = (0..n).map(|_| Vec::new()).collect();
        let mut is_base = vec![false; n];
        let mut any_hard_dep = false;
        for (c, mode) in cs.active().filter(|(c, _)| !c.is_pairwise()) {
            for i in 0..n {
                if !is_dependent(c, &cands[i].argument) {
                    continue;
                }
                let bases: Vec<usize> = (0..n)
                    .filter(|&j| j != i && satisfies_dependency(c, &cands[i].argument, &cands[j].argument))
                    .collect();
                for &b in &bases {
                    is_base[b] = true;
                }
                any_hard_dep |= matches!(mode, ConstraintMode::Hard);
                deps[i].push(Dependency { mode, bases });
            }
        }

        // An item that cannot gain and cannot serve as a base is never
        // part of a preferred optimum.
        let mut order: Vec<usize> = (0..n).filter(|&i| margin[i] > 0.0 || is_base[i]).collect();
        order.sort_by(|&a, &b| margin[b].total_cmp(&margin[a]).then(rank[a].cmp(&rank[b])));
        let mut position = vec![usize::MAX; n];
        for (k, &i) in order.iter().enumerate() {
            position[i] = k;
        }

        Search {
            order,
            position,
            margin,
            rank,
            hard,
            soft,
            deps,
            any_hard_dep,
            blocked: vec![0; n],
            chosen: vec![false; n],
            selected: Vec::new(),
            best_value: 0.0,
            best: Vec::new(),
            best_key: Vec::new(),
            nodes: 0,
            max_nodes,
        }
    }

    fn hard_deps_satisfiable(&self, depth: usize) -> bool {
        self.selected.iter().all(|&i| {
            self.deps[i].iter().all(|d| {
                !matches!(d.mode, ConstraintMode::Hard)
                    || d.bases.iter().any(|&b| {
                        self.chosen[b]
                            || (self.position[b] != usize::MAX && self.position[b] >= depth && self.blocked[b] == 0)
                    })
            })
        })
    }

    fn leaf(&mut self, value: f64) {
        let mut value = value;
        for &i in &self.selected {
            for d in &self.deps[i] {
                if !d.bases.iter().any(|&b| self.chosen[b]) {
                    match d.mode {
                        ConstraintMode::Hard => return,
                        ConstraintMode::Soft(p) => value -= p,
                        ConstraintMode::Off => {}
                    }
                }
            }
        }
        let improves = value > self.best_value + EPS;
        if improves || value >= self.best_value - EPS {
            let mut key: Vec<u32> = self.selected.iter().map(|&i| self.rank[i]).collect();
            key.sort_unstable();
            if improves || better_key(&key, &self.best_key) {
                self.best_value = value;
                self.best = self.selected.clone();
                self.best_key = key;
            }
        }
    }

    fn dfs(&mut self, depth: usize, value: f64) -> Result<(), ()> {
        self.nodes += 1;
        if self.nodes > self.max_nodes {
            return Err(());
        }
        if depth == self.order.len() {
            self.leaf(value);
            return Ok(());
        }
        let optimistic: f64 = self.order[depth..]
            .iter()
            .filter(|&&i| self.blocked[i] == 0)
            .map(|&i| self.margin[i].max(0.0))
            .sum();
        if value + optimistic < self.best_value - EPS {
            return Ok(());
        }
        if self.any_hard_dep && !self.hard_deps_satisfiable(depth) {
            return Ok(());
        }
        let i = self.order[depth];
        if self.blocked[i] == 0 {
            let penalty: f64 = match &self.soft {
                Some(m) => self.selected.iter().map(|&j| m[i][j]).sum(),
                None => 0.0,
            };
            for k in 0..self.hard[i].len() {
                let j = self.hard[i][k];
                self.blocked[j] += 1;
            }
            self.chosen[i] = true;
            self.selected.push(i);
            let r = self.dfs(depth + 1, value + self.margin[i] - penalty);
            self.selected.pop();
            self.chosen[i] = false;
            for k in 0..self.hard[i].len() {
                let j = self.hard[i][k];
                self.blocked[j] -= 1;
            }
            r?;
        }
        self.dfs(depth + 1, value)
    }
}

/// Maximizes the objective over the candidates listed in `universe`
/// (indices into `candidates`) with per-candidate `weights`.
pub fn optimize(
    sentence: usize,
    candidates: &[Candidate],
    universe: &[usize],
    weights: &[f64],
    o: f64,
    cs: &ConstraintSet,
    max_nodes: u64,
) -> Result<Outcome, CsError> {
    if weights.len() != candidates.len() {
        return Err(CsError::WeightCount(weights.len(), candidates.len()));
    }
    if let Some(&i) = universe.iter().find(|&&i| !weights[i].is_finite()) {
        return Err(CsError::NonFinite(i));
    }
    let local: Vec<&Candidate> = universe.iter().map(|&i| &candidates[i]).collect();
    let margin: Vec<f64> = universe.iter().map(|&i| weights[i] - o).collect();
    let mut search = Search::new(&local, margin, cs, max_nodes);
    let finished = search.dfs(0, 0.0).is_ok();
    let mut selected: Vec<usize> = search.best.iter().map(|&k| universe[k]).collect();
    selected.sort_unstable();
    let objective = objective(&selected, universe.len(), candidates, weights, o, cs);
    let solution = Solution { sentence, selected, objective };
    if finished {
        Ok(Outcome { solution, nodes: search.nodes })
    } else {
        Err(CsError::Timeout { best: Box::new(solution), nodes: search.nodes })
    }
}

fn optimize_scoped(
    sentence: usize,
    candidates: &[Candidate],
    weights: &[f64],
    cfg: &CsConfig,
) -> Result<Outcome, CsError> {
    let cs = cfg.effective_constraints();
    match cfg.scope {
        Scope::FullSentence => {
            let universe: Vec<usize> = (0..candidates.len()).collect();
            optimize(sentence, candidates, &universe, weights, cfg.o, &cs, cfg.max_nodes)
        }
        Scope::PredByPred => {
            let n_pred = candidates.iter().map(|c| c.argument.predicate + 1).max().unwrap_or(0);
            let mut groups = vec![Vec::new(); n_pred];
            for (i, c) in candidates.iter().enumerate() {
                groups[c.argument.predicate].push(i);
            }
            let mut merged = Solution::empty(sentence);
            let mut nodes = 0;
            let mut timed_out = false;
            for g in groups.iter().filter(|g| !g.is_empty()) {
                let part = match optimize(sentence, candidates, g, weights, cfg.o, &cs, cfg.max_nodes) {
                    Ok(out) => out,
                    Err(CsError::Timeout { best, nodes }) => {
                        timed_out = true;
                        Outcome { solution: *best, nodes }
                    }
                    Err(e) => return Err(e),
                };
                nodes += part.nodes;
                merged.selected.extend(part.solution.selected);
                merged.objective += part.solution.objective;
            }
            merged.selected.sort_unstable();
            if timed_out {
                Err(CsError::Timeout { best: Box::new(merged), nodes })
            } else {
                Ok(Outcome { solution: merged, nodes })
            }
        }
    }
}

/// Constraint-satisfaction inference on one sentence's candidates, scoring
/// each by its probability sum.
pub fn solve(candidates: &[Candidate], cfg: &CsConfig) -> Result<Solution, CsError> {
    let sentence = candidates.first().map_or(0, |c| c.sentence);
    let weights: Vec<f64> = candidates.iter().map(Candidate::prob_sum).collect();
    Ok(optimize_scoped(sentence, candidates, &weights, cfg)?.solution)
}

/// As [`solve`], with arbitrary per-candidate scores in place of
/// probability sums, also reporting visited nodes.
pub fn solve_with_weights(
    sentence: &PoolSentence,
    weights: &[f64],
    cfg: &CsConfig,
) -> Result<Outcome, CsError> {
    optimize_scoped(sentence.id, &sentence.candidates, weights, cfg)
}

/// Solves every sentence of the pool (in parallel on the current rayon
/// pool; results are independent of thread count).
pub fn solve_pool(pool: &CandidatePool, cfg: &CsConfig) -> Result<Vec<Solution>, CsError> {
    pool.sentences
        .par_iter()
        .map(|s| {
            let weights: Vec<f64> = s.candidates.iter().map(Candidate::prob_sum).collect();
            optimize_scoped(s.id, &s.candidates, &weights, cfg).map(|o| o.solution)
        })
        .collect()
}

/// The O grid 0, 0.05, ..., 1.0.
pub fn default_grid() -> Vec<f64> {
    (0..=20).map(|k| k as f64 * 0.05).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub o: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub n_selected: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub rows: Vec<SweepRow>,
    /// Recall never increases along the (ascending) grid.
    pub recall_monotone: bool,
    /// Selection size never increases along the grid.
    pub size_monotone: bool,
}

impl Sweep {
    pub fn csv(&self) -> String {
        let mut out = String::from("O,precision,recall,f1\n");
        for r in &self.rows {
            let _ = writeln!(out, "{:.2},{:.2},{:.2},{:.2}", r.o, r.precision, r.recall, r.f1);
        }
        out
    }
}

/// One scored run per bias value. The pool must be aligned with gold.
pub fn sweep_o(pool: &CandidatePool, cfg: &CsConfig, grid: &[f64]) -> Result<Sweep, CsError> {
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let mut rows = Vec::with_capacity(grid.len());
    for &o in &grid {
        let run = CsConfig { o, ..*cfg };
        let sols = solve_pool(pool, &run)?;
        let report = score(&solutions_to_props(pool, &sols), &crate::eval_oracle::gold_props(pool))
            .expect("pool and its own gold share a skeleton");
        rows.push(SweepRow {
            o,
            precision: report.precision,
            recall: report.recall,
            f1: report.f1,
            n_selected: sols.iter().map(|s| s.selected.len()).sum(),
        });
    }
    let recall_monotone = rows.windows(2).all(|w| w[1].recall <= w[0].recall + 1e-9);
    let size_monotone = rows.windows(2).all(|w| w[1].n_selected <= w[0].n_selected);
    Ok(Sweep { rows, recall_monotone, size_monotone })
}
