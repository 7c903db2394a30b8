//! Scoring, bootstrap intervals, oracle upper bounds and the two voting
//! baselines.
//!
//! Arguments are compared as exact (predicate, label, span) triples after a
//! continuation repair: within a predicate, scanning by start position, a
//! `C-X` not preceded by an `X` is relabeled `X`. A run with no predicted
//! arguments has precision 100 by convention.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus_io::{PropsDocument, PropsPredicate, PropsSentence};
use crate::model::{pair_conflicts, Argument, Candidate, Constraint, RoleLabel, Solution, Span};
use crate::pool::{CandidatePool, PoolError};

pub const DEFAULT_BOOTSTRAP_SAMPLES: usize = 1000;
pub const DEFAULT_BOOTSTRAP_LEVEL: f64 = 0.95;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("predicted and gold skeletons differ at sentence {0}")]
    Skeleton(usize),
    #[error("bootstrap needs at least 100 resamples, got {0}")]
    TooFewResamples(usize),
    #[error("confidence level {0} outside (0,1)")]
    Level(f64),
}

/// Relabels each `C-X` that has no earlier `X` as `X`. Verb entries are
/// left alone.
pub fn repair(args: &mut [(RoleLabel, Span)]) {
    let mut order: Vec<usize> = (0..args.len()).collect();
    order.sort_by_key(|&i| (args[i].1.start, std::cmp::Reverse(args[i].1.end)));
    let mut seen: BTreeSet<RoleLabel> = BTreeSet::new();
    for i in order {
        if args[i].0.is_continuation() && !seen.contains(args[i].0.base()) {
            args[i].0 = args[i].0.base().clone();
        }
        seen.insert(args[i].0.clone());
    }
}

fn frame(p: &PropsPredicate) -> BTreeSet<(RoleLabel, Span)> {
    let mut args: Vec<(RoleLabel, Span)> = p.args.iter().filter(|(l, _)| !l.is_verb()).cloned().collect();
    repair(&mut args);
    args.into_iter().collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub correct: usize,
    pub excess: usize,
    pub missed: usize,
}

impl Counts {
    fn add(&mut self, o: &Counts) {
        self.correct += o.correct;
        self.excess += o.excess;
        self.missed += o.missed;
    }

    pub fn precision(&self) -> f64 {
        let n = self.correct + self.excess;
        if n == 0 {
            100.0
        } else {
            100.0 * self.correct as f64 / n as f64
        }
    }

    pub fn recall(&self) -> f64 {
        let n = self.correct + self.missed;
        if n == 0 {
            100.0
        } else {
            100.0 * self.correct as f64 / n as f64
        }
    }

    pub fn f1(&self) -> f64 {
        f1(self.precision(), self.recall())
    }
}

pub fn f1(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelRow {
    pub label: RoleLabel,
    pub counts: Counts,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub pprops: f64,
    pub counts: Counts,
    pub n_predicates: usize,
    pub n_perfect: usize,
    /// Sorted by label text.
    pub per_label: Vec<LabelRow>,
    /// Gold label by predicted label for arguments whose span and
    /// predicate match but whose label differs.
    pub confusion: BTreeMap<(RoleLabel, RoleLabel), usize>,
    pub per_sentence: Vec<Counts>,
}

impl ScoreReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<12} {:>8} {:>8} {:>8} {:>9} {:>9} {:>8}", "", "corr", "excess", "missed", "prec", "rec", "F1");
        let _ = writeln!(
            out,
            "{:<12} {:>8} {:>8} {:>8} {:>9.2} {:>9.2} {:>8.2}",
            "Overall", self.counts.correct, self.counts.excess, self.counts.missed, self.precision, self.recall, self.f1
        );
        for row in &self.per_label {
            let c = &row.counts;
            let _ = writeln!(
                out,
                "{:<12} {:>8} {:>8} {:>8} {:>9.2} {:>9.2} {:>8.2}",
                row.label.to_string(),
                c.correct,
                c.excess,
                c.missed,
                c.precision(),
                c.recall(),
                c.f1()
            );
        }
        let _ = writeln!(out, "PProps {:.2} ({} of {})", self.pprops, self.n_perfect, self.n_predicates);
        out
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("label,correct,excess,missed,precision,recall,f1\n");
        let c = &self.counts;
        let _ = writeln!(out, "overall,{},{},{},{:.2},{:.2},{:.2}", c.correct, c.excess, c.missed, self.precision, self.recall, self.f1);
        for row in &self.per_label {
            let c = &row.counts;
            let _ = writeln!(
                out,
                "{},{},{},{},{:.2},{:.2},{:.2}",
                row.label,
                c.correct,
                c.excess,
                c.missed,
                c.precision(),
                c.recall(),
                c.f1()
            );
        }
        let _ = writeln!(out, "pprops,,,,{:.2},,", self.pprops);
        out
    }
}

fn same_skeleton(a: &PropsSentence, b: &PropsSentence) -> bool {
    a.n_tokens == b.n_tokens
        && a.predicates.len() == b.predicates.len()
        && a.predicates.iter().zip(&b.predicates).all(|(x, y)| x.position == y.position)
}

pub fn score(predicted: &PropsDocument, gold: &PropsDocument) -> Result<ScoreReport, EvalError> {
    if predicted.sentences.len() != gold.sentences.len() {
        return Err(EvalError::Skeleton(predicted.sentences.len().min(gold.sentences.len())));
    }
    let mut total = Counts::default();
    let mut labels: BTreeMap<RoleLabel, Counts> = BTreeMap::new();
    let mut confusion = BTreeMap::new();
    let mut per_sentence = Vec::with_capacity(gold.sentences.len());
    let (mut n_predicates, mut n_perfect) = (0, 0);
    for (si, (ps, gs)) in predicted.sentences.iter().zip(&gold.sentences).enumerate() {
        if !same_skeleton(ps, gs) {
            return Err(EvalError::Skeleton(si));
        }
        let mut sc = Counts::default();
        for (pp, gp) in ps.predicates.iter().zip(&gs.predicates) {
            let (pf, gf) = (frame(pp), frame(gp));
            n_predicates += 1;
            if pf == gf {
                n_perfect += 1;
            }
            for a in &pf {
                let e = labels.entry(a.0.clone()).or_default();
                if gf.contains(a) {
                    sc.correct += 1;
                    e.correct += 1;
                } else {
                    sc.excess += 1;
                    e.excess += 1;
                    if let Some(g) = gf.iter().find(|g| g.1 == a.1) {
                        *confusion.entry((g.0.clone(), a.0.clone())).or_insert(0) += 1;
                    }
                }
            }
            for g in gf.difference(&pf) {
                sc.missed += 1;
                labels.entry(g.0.clone()).or_default().missed += 1;
            }
        }
        total.add(&sc);
        per_sentence.push(sc);
    }
    Ok(ScoreReport {
        precision: total.precision(),
        recall: total.recall(),
        f1: total.f1(),
        pprops: if n_predicates == 0 { 100.0 } else { 100.0 * n_perfect as f64 / n_predicates as f64 },
        counts: total,
        n_predicates,
        n_perfect,
        per_label: labels.into_iter().map(|(label, counts)| LabelRow { label, counts }).collect(),
        confusion,
        per_sentence,
    })
}

fn skeleton_sentence(n_tokens: usize, predicates: &[crate::model::Predicate]) -> PropsSentence {
    PropsSentence {
        n_tokens,
        predicates: predicates
            .iter()
            .map(|p| PropsPredicate {
                position: p.position,
                lemma: p.lemma.clone(),
                args: vec![(RoleLabel::Verb, Span::single(p.position))],
            })
            .collect(),
    }
}

fn push_args(s: &mut PropsSentence, args: impl IntoIterator<Item = Argument>) {
    for a in args {
        s.predicates[a.predicate].args.push((a.label, a.span));
    }
    for p in &mut s.predicates {
        p.canonicalize();
    }
}

/// Props document holding the selected candidates of each sentence.
pub fn solutions_to_props(pool: &CandidatePool, solutions: &[Solution]) -> PropsDocument {
    let sentences = pool
        .sentences
        .iter()
        .zip(solutions)
        .map(|(ps, sol)| {
            let mut s = skeleton_sentence(ps.n_tokens, &ps.predicates);
            push_args(&mut s, sol.selected.iter().map(|&i| ps.candidates[i].argument.clone()));
            s
        })
        .collect();
    PropsDocument { sentences }
}

/// The gold document recorded in an aligned pool (empty frames if the pool
/// carries no gold).
pub fn gold_props(pool: &CandidatePool) -> PropsDocument {
    let sentences = pool
        .sentences
        .iter()
        .map(|ps| {
            let mut s = skeleton_sentence(ps.n_tokens, &ps.predicates);
            push_args(&mut s, ps.gold.iter().flatten().cloned());
            s
        })
        .collect();
    PropsDocument { sentences }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub f1: f64,
    pub half_width: f64,
    pub lower: f64,
    pub upper: f64,
    pub samples: usize,
    pub level: f64,
}

impl fmt::Display for BootstrapResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2} ±{:.1}", self.f1, self.half_width)
    }
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Sentence-level bootstrap of F1 with a percentile interval. Resample `k`
/// draws from its own generator seeded from `seed` and `k`, so the result
/// does not depend on thread count.
pub fn bootstrap(
    predicted: &PropsDocument,
    gold: &PropsDocument,
    samples: usize,
    level: f64,
    seed: u64,
) -> Result<BootstrapResult, EvalError> {
    if samples < 100 {
        return Err(EvalError::TooFewResamples(samples));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(EvalError::Level(level));
    }
    let report = score(predicted, gold)?;
    let per = &report.per_sentence;
    let n = per.len();
    let mut f1s: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let mut c = Counts::default();
            for _ in 0..n {
                c.add(&per[rng.gen_range(0..n)]);
            }
            c.f1()
        })
        .collect();
    let point = report.f1;
    if n == 0 {
        f1s.iter_mut().for_each(|x| *x = point);
    }
    f1s.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    let lower = percentile(&f1s, alpha);
    let upper = percentile(&f1s, 1.0 - alpha);
    Ok(BootstrapResult { f1: point, half_width: ((upper - lower) / 2.0).max(0.0), lower, upper, samples, level })
}

/// Selects exactly the correct candidates.
pub fn oracle_combination(pool: &CandidatePool) -> Result<Vec<Solution>, PoolError> {
    pool.sentences
        .iter()
        .map(|ps| {
            let mut selected = Vec::new();
            for (i, c) in ps.candidates.iter().enumerate() {
                match c.is_gold {
                    None => return Err(PoolError::NotAligned),
                    Some(true) => selected.push(i),
                    Some(false) => {}
                }
            }
            Ok(Solution { sentence: ps.id, objective: selected.len() as f64, selected })
        })
        .collect()
}

fn frame_f1(pred: &[(RoleLabel, Span)], gold: &[(RoleLabel, Span)]) -> f64 {
    let mut p = pred.to_vec();
    repair(&mut p);
    let mut g = gold.to_vec();
    repair(&mut g);
    let (p, g): (BTreeSet<_>, BTreeSet<_>) = (p.into_iter().collect(), g.into_iter().collect());
    let correct = p.intersection(&g).count();
    Counts { correct, excess: p.len() - correct, missed: g.len() - correct }.f1()
}

/// Per predicate, the complete frame of the single system scoring the best
/// frame F1 against gold; ties go to the lower system index.
pub fn oracle_rerank(pool: &CandidatePool) -> Result<Vec<Solution>, PoolError> {
    let m = pool.n_systems();
    pool.sentences
        .iter()
        .map(|ps| {
            let gold = ps.gold.as_ref().ok_or(PoolError::NotAligned)?;
            let mut selected = Vec::new();
            for (p, idx) in ps.by_predicate().into_iter().enumerate() {
                let g: Vec<(RoleLabel, Span)> =
                    gold.iter().filter(|a| a.predicate == p).map(|a| (a.label.clone(), a.span)).collect();
                let mut best: Option<(f64, Vec<usize>)> = None;
                for j in 0..m {
                    let mine: Vec<usize> = idx.iter().copied().filter(|&i| ps.candidates[i].votes.contains(&j)).collect();
                    let args: Vec<(RoleLabel, Span)> = mine
                        .iter()
                        .map(|&i| (ps.candidates[i].argument.label.clone(), ps.candidates[i].argument.span))
                        .collect();
                    let f = frame_f1(&args, &g);
                    if best.as_ref().map_or(true, |(bf, _)| f > *bf + 1e-12) {
                        best = Some((f, mine));
                    }
                }
                selected.extend(best.map(|b| b.1).unwrap_or_default());
            }
            selected.sort_unstable();
            Ok(Solution { sentence: ps.id, objective: selected.len() as f64, selected })
        })
        .collect()
}

/// One element of the recall baseline's sort key; all are descending in
/// preference.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum KeyPart {
    Votes,
    Length,
    SystemPriority,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub key: [KeyPart; 3],
    /// System indices from most to least trusted; defaults to pool order.
    pub system_priority: Option<Vec<usize>>,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig { key: [KeyPart::Votes, KeyPart::Length, KeyPart::SystemPriority], system_priority: None }
    }
}

const BASELINE_CONSTRAINTS: [Constraint; 3] = [Constraint::C1, Constraint::C2, Constraint::C5];

fn greedy(candidates: &[Candidate], pool_order: &[usize], cfg: &BaselineConfig, n_systems: usize) -> Vec<usize> {
    let prio: Vec<usize> = match &cfg.system_priority {
        Some(order) => {
            let mut rank = vec![usize::MAX; n_systems];
            for (r, &j) in order.iter().enumerate() {
                if j < n_systems {
                    rank[j] = r;
                }
            }
            rank
        }
        None => (0..n_systems).collect(),
    };
    let best_sys = |c: &Candidate| c.votes.iter().map(|&j| prio[j]).min().unwrap_or(usize::MAX);
    let mut order = pool_order.to_vec();
    order.sort_by(|&a, &b| {
        let (x, y) = (&candidates[a], &candidates[b]);
        let mut ord = std::cmp::Ordering::Equal;
        for part in cfg.key {
            ord = ord.then_with(|| match part {
                KeyPart::Votes => y.vote_count().cmp(&x.vote_count()),
                KeyPart::Length => y.argument.span.len().cmp(&x.argument.span.len()),
                KeyPart::SystemPriority => best_sys(x).cmp(&best_sys(y)),
            });
        }
        ord.then(a.cmp(&b))
    });
    let mut selected: Vec<usize> = Vec::new();
    for i in order {
        let ok = selected.iter().all(|&s| {
            BASELINE_CONSTRAINTS
                .iter()
                .all(|&c| !pair_conflicts(c, &candidates[i].argument, &candidates[s].argument))
        });
        if ok {
            selected.push(i);
        }
    }
    selected.sort_unstable();
    selected
}

/// Greedy voting baseline over all candidates.
pub fn baseline_recall(pool: &CandidatePool, cfg: &BaselineConfig) -> Vec<Solution> {
    pool.sentences
        .iter()
        .map(|ps| {
            let all: Vec<usize> = (0..ps.candidates.len()).collect();
            let selected = greedy(&ps.candidates, &all, cfg, pool.n_systems());
            Solution { sentence: ps.id, objective: selected.len() as f64, selected }
        })
        .collect()
}

/// Greedy voting baseline over the candidates every system proposed.
pub fn baseline_precision(pool: &CandidatePool, cfg: &BaselineConfig) -> Vec<Solution> {
    let m = pool.n_systems();
    pool.sentences
        .iter()
        .map(|ps| {
            let unanimous: Vec<usize> = (0..ps.candidates.len()).filter(|&i| ps.candidates[i].vote_count() == m).collect();
            let selected = greedy(&ps.candidates, &unanimous, cfg, m);
            Solution { sentence: ps.id, objective: selected.len() as f64, selected }
        })
        .collect()
}
