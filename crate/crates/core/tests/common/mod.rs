//! Test-side oracles: random instance generators and exhaustive
//! enumeration with constraint checks written from scratch over label text
//! and token offsets.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use srlcomb::model::{Argument, Candidate, ConstraintMode, ConstraintSet, Predicate, Sentence, Span, Token};
use srlcomb::Constraint;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub const LABELS: [&str; 12] =
    ["A0", "A1", "A2", "A3", "AM-TMP", "AM-LOC", "R-A0", "R-A1", "C-A1", "C-A0", "R-AM-LOC", "C-AM-TMP"];

/// Random candidates over `n_pred` predicates with probabilities from `m`
/// systems.
pub fn random_candidates(r: &mut ChaCha8Rng, n: usize, n_pred: usize, n_tokens: usize, m: usize) -> Vec<Candidate> {
    let mut out: Vec<Candidate> = Vec::new();
    while out.len() < n {
        let p = r.gen_range(0..n_pred);
        let label = LABELS[r.gen_range(0..LABELS.len())];
        let s = r.gen_range(0..n_tokens);
        let e = (s + r.gen_range(0..4)).min(n_tokens - 1);
        let arg = Argument::new(p, label.parse().unwrap(), Span::new(s, e));
        if out.iter().any(|c| c.argument == arg) {
            continue;
        }
        let mut c = Candidate::new(0, arg, m);
        for j in 0..m {
            if r.gen_bool(0.6) || (j + 1 == m && c.votes.is_empty()) {
                c.votes.insert(j);
                c.probs[j] = Some(r.gen_range(0.0..1.0));
            }
        }
        out.push(c);
    }
    out
}

pub fn random_constraints(r: &mut ChaCha8Rng) -> ConstraintSet {
    let mut cs = ConstraintSet::none();
    for c in Constraint::ALL {
        let mode = match r.gen_range(0..3) {
            0 => ConstraintMode::Off,
            1 => ConstraintMode::Hard,
            _ => ConstraintMode::Soft(r.gen_range(0.0..1.5)),
        };
        cs.set(c, mode);
    }
    cs
}

fn overlap(a: (usize, usize), b: (usize, usize)) -> bool {
    !(a.1 < b.0 || b.1 < a.0)
}

fn crossing(a: (usize, usize), b: (usize, usize)) -> bool {
    let a_in_b = b.0 <= a.0 && a.1 <= b.1;
    let b_in_a = a.0 <= b.0 && b.1 <= a.1;
    overlap(a, b) && !a_in_b && !b_in_a
}

fn is_core(l: &str) -> bool {
    l.len() == 2 && l.starts_with('A') && l.as_bytes()[1].is_ascii_digit()
}

fn unshareable(l: &str) -> bool {
    l.starts_with("AM-") || l.starts_with("R-AM-") || l.starts_with("C-")
}

struct Item {
    pred: usize,
    label: String,
    span: (usize, usize),
}

fn items(c: &[Candidate]) -> Vec<Item> {
    c.iter()
        .map(|c| Item {
            pred: c.argument.predicate,
            label: c.argument.label.to_string(),
            span: (c.argument.span.start, c.argument.span.end),
        })
        .collect()
}

/// Penalty of the pair under constraint number `k` (1, 2, 5, 6), or None
/// when the pair is fine.
fn pair_breaks(k: usize, a: &Item, b: &Item) -> bool {
    let same = a.pred == b.pred;
    match k {
        1 => same && overlap(a.span, b.span),
        2 => same && is_core(&a.label) && a.label == b.label,
        5 => !same && crossing(a.span, b.span),
        6 => !same && a.label == b.label && a.span == b.span && unshareable(&a.label),
        _ => false,
    }
}

fn dependency_met(k: usize, dep: &Item, sel: &[&Item]) -> bool {
    let prefix = if k == 3 { "R-" } else { "C-" };
    let Some(base) = dep.label.strip_prefix(prefix) else { return true };
    sel.iter().any(|b| {
        !std::ptr::eq(*b, dep) && b.pred == dep.pred && b.label == base && (k == 3 || b.span.0 < dep.span.0)
    })
}

/// Objective of a subset, `None` if a hard constraint breaks.
pub fn subset_value(c: &[Candidate], w: &[f64], o: f64, cs: &ConstraintSet, mask: u64) -> Option<f64> {
    let it = items(c);
    let sel: Vec<usize> = (0..c.len()).filter(|&i| mask >> i & 1 == 1).collect();
    let mut v = o * c.len() as f64;
    for &i in &sel {
        v += w[i] - o;
    }
    for k in 1..=6usize {
        let mode = cs.mode(Constraint::ALL[k - 1]);
        let cost = match mode {
            ConstraintMode::Off => continue,
            ConstraintMode::Hard => f64::INFINITY,
            ConstraintMode::Soft(p) => p,
        };
        let mut breaks = 0usize;
        if k == 3 || k == 4 {
            let refs: Vec<&Item> = sel.iter().map(|&i| &it[i]).collect();
            for &i in &sel {
                if !dependency_met(k, &it[i], &refs) {
                    breaks += 1;
                }
            }
        } else {
            for (x, &i) in sel.iter().enumerate() {
                for &j in &sel[x + 1..] {
                    if pair_breaks(k, &it[i], &it[j]) {
                        breaks += 1;
                    }
                }
            }
        }
        if breaks > 0 {
            if cost.is_infinite() {
                return None;
            }
            v -= cost * breaks as f64;
        }
    }
    Some(v)
}

/// Best objective over all 2^N subsets.
pub fn brute_force(c: &[Candidate], w: &[f64], o: f64, cs: &ConstraintSet) -> f64 {
    assert!(c.len() <= 20);
    let mut best = f64::NEG_INFINITY;
    for mask in 0..(1u64 << c.len()) {
        if let Some(v) = subset_value(c, w, o, cs, mask) {
            best = best.max(v);
        }
    }
    best
}

pub fn mask_of(selected: &[usize]) -> u64 {
    selected.iter().fold(0, |m, &i| m | 1 << i)
}

/// A placeholder sentence matching a candidate list, for the validator.
pub fn sentence_for(id: usize, n_tokens: usize, n_pred: usize) -> Sentence {
    Sentence {
        id,
        tokens: (0..n_tokens)
            .map(|i| Token {
                index: i,
                form: "w".into(),
                pos: "NN".into(),
                chunk: "O".into(),
                clause: "*".into(),
                ne: "O".into(),
            })
            .collect(),
        predicates: (0..n_pred).map(|p| Predicate { position: p.min(n_tokens - 1), lemma: "v".into() }).collect(),
        parse: None,
    }
}
