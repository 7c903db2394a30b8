//! Maximum-confidence consistent argument structures for learned scorers.
//!
//! Per predicate, a CKY-style chart holds for every token interval and every
//! set of core labels used inside it the best selection of disjoint
//! candidates lying in the interval. Adjacent intervals combine when their
//! core-label sets are disjoint, so the no-duplicate-core rule is exact.
//! The sentence-level variant, where arguments of different predicates may
//! embed but not cross, runs the exact optimizer of [`crate::infer_cs`].

use std::collections::BTreeMap;

use crate::infer_cs::{optimize, CsError, DEFAULT_MAX_NODES};
use crate::model::{Candidate, Constraint, ConstraintSet, Solution};

const EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug)]
pub struct ScoredCandidate<'a> {
    /// Index of the candidate in its sentence's candidate list.
    pub index: usize,
    pub candidate: &'a Candidate,
    pub confidence: f64,
}

#[derive(Clone, Debug)]
struct Entry {
    value: f64,
    /// Priority ranks of the chosen items, sorted.
    key: Vec<u32>,
    items: Vec<usize>,
}

impl Entry {
    fn empty() -> Entry {
        Entry { value: 0.0, key: Vec::new(), items: Vec::new() }
    }

    fn beats(&self, other: &Entry) -> bool {
        if self.value > other.value + EPS {
            return true;
        }
        if self.value < other.value - EPS {
            return false;
        }
        match self.key.len().cmp(&other.key.len()) {
            std::cmp::Ordering::Less => true,
            std::cmp::Ordering::Greater => false,
            std::cmp::Ordering::Equal => self.key < other.key,
        }
    }

    fn join(&self, other: &Entry) -> Entry {
        let mut key = self.key.clone();
        key.extend_from_slice(&other.key);
        key.sort_unstable();
        let mut items = self.items.clone();
        items.extend_from_slice(&other.items);
        Entry { value: self.value + other.value, key, items }
    }
}

type Cell = BTreeMap<u64, Entry>;

fn offer(cell: &mut Cell, mask: u64, e: Entry) {
    match cell.get(&mask) {
        Some(cur) if !e.beats(cur) => {}
        _ => {
            cell.insert(mask, e);
        }
    }
}

fn core_bit(c: &Candidate) -> u64 {
    c.argument.label.core_index().map_or(0, |k| 1u64 << k.min(63))
}

/// Best selection for one predicate: pairwise disjoint spans and, when
/// `no_duplicate_core` is set, at most one of each core label. Items with
/// confidence at or below zero are never chosen.
pub fn dp_predicate(items: &[ScoredCandidate], no_duplicate_core: bool) -> Solution {
    let sentence = items.first().map_or(0, |s| s.candidate.sentence);
    debug_assert!(
        items.windows(2).all(|w| w[0].candidate.argument.predicate == w[1].candidate.argument.predicate),
        "dp_predicate expects candidates of a single predicate"
    );
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by(|&a, &b| {
        items[a]
            .candidate
            .priority_cmp(items[b].candidate)
            .then(items[a].index.cmp(&items[b].index))
    });
    let mut rank = vec![0u32; items.len()];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r as u32;
    }

    let useful: Vec<usize> = (0..items.len()).filter(|&i| items[i].confidence > 0.0).collect();
    if useful.is_empty() {
        return Solution::empty(sentence);
    }
    // Compress token positions to the boundaries that matter.
    let lo = useful.iter().map(|&i| items[i].candidate.argument.span.start).min().unwrap();
    let hi = useful.iter().map(|&i| items[i].candidate.argument.span.end).max().unwrap();
    let n = hi - lo + 1;
    let mut exact: Vec<Vec<Vec<usize>>> = vec![vec![Vec::new(); n]; n];
    for &i in &useful {
        let sp = items[i].candidate.argument.span;
        exact[sp.start - lo][sp.end - lo].push(i);
    }

    let mut chart: Vec<Vec<Cell>> = vec![vec![Cell::new(); n]; n];
    for len in 1..=n {
        for i in 0..=n - len {
            let j = i + len - 1;
            let mut cell = Cell::new();
            cell.insert(0, Entry::empty());
            for &c in &exact[i][j] {
                let mask = if no_duplicate_core { core_bit(items[c].candidate) } else { 0 };
                let e = Entry { value: items[c].confidence, key: vec![rank[c]], items: vec![c] };
                offer(&mut cell, mask, e);
            }
            for k in i..j {
                let (left, right) = (&chart[i][k], &chart[k + 1][j]);
                for (&ml, el) in left {
                    for (&mr, er) in right {
                        if ml & mr != 0 {
                            continue;
                        }
                        if el.items.is_empty() && er.items.is_empty() {
                            continue;
                        }
                        offer(&mut cell, ml | mr, el.join(er));
                    }
                }
            }
            chart[i][j] = cell;
        }
    }
    let mut best = Entry::empty();
    for e in chart[0][n - 1].values() {
        if e.beats(&best) {
            best = e.clone();
        }
    }
    let mut selected: Vec<usize> = best.items.iter().map(|&k| items[k].index).collect();
    selected.sort_unstable();
    Solution { sentence, selected, objective: best.value }
}

/// Best selection over a whole sentence: same-predicate spans disjoint,
/// no duplicate core label per predicate, and no crossing spans across
/// predicates. `confidences` is indexed like `candidates`.
pub fn dp_sentence(sentence: usize, candidates: &[Candidate], confidences: &[f64]) -> Result<Solution, CsError> {
    dp_sentence_with_budget(sentence, candidates, confidences, DEFAULT_MAX_NODES)
}

pub fn dp_sentence_with_budget(
    sentence: usize,
    candidates: &[Candidate],
    confidences: &[f64],
    max_nodes: u64,
) -> Result<Solution, CsError> {
    let cs = ConstraintSet::hard(&[Constraint::C1, Constraint::C2, Constraint::C5]);
    let universe: Vec<usize> = (0..candidates.len()).collect();
    optimize(sentence, candidates, &universe, confidences, 0.0, &cs, max_nodes).map(|o| o.solution)
}

/// Runs [`dp_predicate`] on each predicate and merges the results.
pub fn dp_by_predicate(
    sentence: usize,
    candidates: &[Candidate],
    confidences: &[f64],
    no_duplicate_core: bool,
) -> Solution {
    let n_pred = candidates.iter().map(|c| c.argument.predicate + 1).max().unwrap_or(0);
    let mut out = Solution::empty(sentence);
    for p in 0..n_pred {
        let items: Vec<ScoredCandidate> = candidates
            .iter()
            .enumerate()
            .filter(|(_, c)| c.argument.predicate == p)
            .map(|(index, candidate)| ScoredCandidate { index, candidate, confidence: confidences[index] })
            .collect();
        let s = dp_predicate(&items, no_duplicate_core);
        out.selected.extend(s.selected);
        out.objective += s.objective;
    }
    out.selected.sort_unstable();
    out
}
