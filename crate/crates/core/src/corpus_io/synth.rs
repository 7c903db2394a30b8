//! Seeded synthetic corpora: annotated sentences, a gold props layer, and
//! per-system outputs obtained by corrupting gold (dropped arguments,
//! spurious arguments, relabeling, boundary jitter) with raw scores where
//! correct arguments score higher on average than incorrect ones.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{PropsDocument, PropsPredicate, PropsSentence, ScoreKey, ScoreTable};
use crate::model::{span_relation, ParseNode, Predicate, RoleLabel, Sentence, Span, SpanRelation, Token};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemKnobs {
    pub precision: f64,
    pub recall: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub n_sentences: usize,
    pub tokens: (usize, usize),
    pub predicates: (usize, usize),
    pub args_per_predicate: (usize, usize),
    pub systems: Vec<SystemKnobs>,
    pub label_noise: f64,
    pub boundary_noise: f64,
    /// Mean raw score of correct and of incorrect arguments.
    pub score_means: (f64, f64),
    pub score_sd: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_sentences: 100,
            tokens: (12, 30),
            predicates: (1, 3),
            args_per_predicate: (1, 4),
            systems: vec![SystemKnobs { precision: 0.8, recall: 0.75 }; 3],
            label_noise: 0.05,
            boundary_noise: 0.05,
            score_means: (6.0, -4.0),
            score_sd: 6.0,
            seed: 7,
        }
    }
}

impl SyntheticConfig {
    pub fn check(&self) -> Result<(), String> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        let range = |r: (usize, usize)| r.0 <= r.1;
        if !range(self.tokens) || !range(self.predicates) || !range(self.args_per_predicate) {
            return Err("empty range".into());
        }
        if self.tokens.0 < 4 {
            return Err("sentences need at least 4 tokens".into());
        }
        if !unit(self.label_noise) || !unit(self.boundary_noise) {
            return Err("noise rates must lie in [0,1]".into());
        }
        if self.systems.iter().any(|k| !unit(k.precision) || !unit(k.recall) || k.precision == 0.0) {
            return Err("precision in (0,1], recall in [0,1]".into());
        }
        if !(self.score_sd >= 0.0) {
            return Err("score sd must be non-negative".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSystem {
    pub id: String,
    pub props: PropsDocument,
    pub scores: ScoreTable,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticCorpus {
    /// Sentences with syntax and predicates attached.
    pub sentences: Vec<Sentence>,
    pub gold: PropsDocument,
    pub systems: Vec<SyntheticSystem>,
}

const ADJUNCTS: [&str; 5] = ["TMP", "LOC", "MNR", "ADV", "DIS"];

struct Chunk {
    kind: &'static str,
    span: Span,
}

fn gen_tokens(rng: &mut ChaCha8Rng, n: usize) -> (Vec<Token>, Vec<Chunk>) {
    let mut chunks = Vec::new();
    let mut tokens = Vec::with_capacity(n);
    let mut t = 0;
    while t < n {
        let kind = *["NP", "NP", "VP", "PP", "NP", "ADVP", "O"].choose(rng).unwrap();
        let len = match kind {
            "NP" => rng.gen_range(1..=3),
            "VP" => rng.gen_range(1..=2),
            _ => 1,
        }
        .min(n - t);
        for k in 0..len {
            let (form, pos) = match kind {
                "NP" if k + 1 == len => ("thing", "NN"),
                "NP" => ("the", "DT"),
                "VP" if k + 1 == len => ("did", "VBD"),
                "VP" => ("will", "MD"),
                "PP" => ("in", "IN"),
                "ADVP" => ("now", "RB"),
                _ => {
                    if rng.gen_bool(0.5) {
                        (",", ",")
                    } else {
                        ("and", "CC")
                    }
                }
            };
            let chunk = match (kind, k) {
                ("O", _) => "O".to_string(),
                (_, 0) => format!("B-{kind}"),
                _ => format!("I-{kind}"),
            };
            tokens.push(Token {
                index: t + k,
                form: form.to_string(),
                pos: pos.to_string(),
                chunk,
                clause: String::new(),
                ne: "O".to_string(),
            });
        }
        chunks.push(Chunk { kind, span: Span::new(t, t + len - 1) });
        t += len;
    }
    (tokens, chunks)
}

fn phrase_nodes(chunks: &[Chunk]) -> Vec<ParseNode> {
    chunks
        .iter()
        .filter(|c| c.kind != "O")
        .map(|c| ParseNode { label: c.kind.to_string(), span: c.span, children: Vec::new() })
        .collect()
}

fn gen_sentence(rng: &mut ChaCha8Rng, id: usize, cfg: &SyntheticConfig) -> (Sentence, Vec<Chunk>) {
    let n = rng.gen_range(cfg.tokens.0..=cfg.tokens.1);
    let (mut tokens, mut chunks) = gen_tokens(rng, n);
    if !chunks.iter().any(|c| c.kind == "VP") {
        let i = rng.gen_range(0..chunks.len());
        chunks[i].kind = "VP";
        let sp = chunks[i].span;
        for t in sp.start..=sp.end {
            tokens[t].chunk = if t == sp.start { "B-VP".into() } else { "I-VP".into() };
            tokens[t].pos = if t == sp.end { "VBD".into() } else { "MD".into() };
            tokens[t].form = if t == sp.end { "did".into() } else { "will".into() };
        }
    }
    for c in &chunks {
        if c.kind == "NP" && rng.gen_bool(0.2) {
            let ty = *["PER", "LOC", "ORG"].choose(rng).unwrap();
            for t in c.span.start..=c.span.end {
                tokens[t].ne = if t == c.span.start { format!("B-{ty}") } else { format!("I-{ty}") };
            }
        }
    }
    // Outer clause over the sentence; sometimes an embedded clause from a
    // later chunk to the end.
    let embedded = if chunks.len() > 2 && rng.gen_bool(0.3) { Some(rng.gen_range(1..chunks.len())) } else { None };
    for tok in tokens.iter_mut() {
        tok.clause = "*".into();
    }
    let root_children = match embedded {
        Some(ci) => {
            let start = chunks[ci].span.start;
            let mut kids = phrase_nodes(&chunks[..ci]);
            let inner = phrase_nodes(&chunks[ci..]);
            kids.push(ParseNode { label: "S".into(), span: Span::new(start, n - 1), children: inner });
            tokens[0].clause = "(S*".into();
            tokens[start].clause = if start == 0 { "(S(S*".into() } else { "(S*".into() };
            tokens[n - 1].clause = if n - 1 == start { "(S*S)S)".into() } else { "*S)S)".into() };
            kids
        }
        None => {
            tokens[0].clause = "(S*".into();
            tokens[n - 1].clause = if n == 1 { "(S*S)".into() } else { "*S)".into() };
            phrase_nodes(&chunks)
        }
    };
    let parse = ParseNode { label: "S".into(), span: Span::new(0, n - 1), children: root_children };

    let vp_heads: Vec<usize> = chunks.iter().filter(|c| c.kind == "VP").map(|c| c.span.end).collect();
    let want = rng.gen_range(cfg.predicates.0..=cfg.predicates.1).min(vp_heads.len());
    let mut positions: Vec<usize> = vp_heads.choose_multiple(rng, want).copied().collect();
    positions.sort_unstable();
    let predicates = positions.iter().map(|&p| Predicate { position: p, lemma: "do".into() }).collect();
    (Sentence { id, tokens, predicates, parse: Some(parse) }, chunks)
}

fn gen_gold(rng: &mut ChaCha8Rng, sent: &Sentence, chunks: &[Chunk], cfg: &SyntheticConfig) -> PropsSentence {
    let units: Vec<Span> = chunks.iter().filter(|c| c.kind != "O").map(|c| c.span).collect();
    let mut all: Vec<Span> = Vec::new();
    let mut predicates = Vec::new();
    for p in &sent.predicates {
        let want = rng.gen_range(cfg.args_per_predicate.0..=cfg.args_per_predicate.1);
        let mut spans: Vec<Span> = Vec::new();
        for _ in 0..want * 8 {
            if spans.len() >= want || units.is_empty() {
                break;
            }
            let i = rng.gen_range(0..units.len());
            let j = (i + rng.gen_range(0..2)).min(units.len() - 1);
            let span = Span::new(units[i].start, units[j].end);
            if span.contains_token(p.position)
                || spans.iter().any(|s| s.intersects(&span))
                || all.iter().any(|s| *s == span || span_relation(*s, span) == SpanRelation::Crossing)
            {
                continue;
            }
            spans.push(span);
        }
        spans.sort();
        all.extend(spans.iter().copied());
        let before: Vec<Span> = spans.iter().filter(|s| s.end < p.position).copied().collect();
        let after: Vec<Span> = spans.iter().filter(|s| s.start > p.position).copied().collect();
        let mut args = vec![(RoleLabel::Verb, Span::single(p.position))];
        let mut adj = ADJUNCTS.to_vec();
        adj.shuffle(rng);
        let mut adj = adj.into_iter();
        for (k, s) in before.iter().rev().enumerate() {
            let label = if k == 0 { RoleLabel::core(0) } else { RoleLabel::Adjunct(adj.next().unwrap_or("ADV").into()) };
            args.push((label, *s));
        }
        for (k, s) in after.iter().enumerate() {
            let label = match k {
                0 => RoleLabel::core(1),
                1 => RoleLabel::core(2),
                2 if rng.gen_bool(0.5) => RoleLabel::core(3),
                _ => RoleLabel::Adjunct(adj.next().unwrap_or("MNR").into()),
            };
            args.push((label, *s));
        }
        let mut pp = PropsPredicate { position: p.position, lemma: p.lemma.clone(), args };
        pp.canonicalize();
        predicates.push(pp);
    }
    PropsSentence { n_tokens: sent.len(), predicates }
}

fn random_label(rng: &mut ChaCha8Rng, used_core: &[u8]) -> RoleLabel {
    loop {
        let label = if rng.gen_bool(0.5) {
            RoleLabel::core(rng.gen_range(0..4))
        } else {
            RoleLabel::Adjunct((*ADJUNCTS.choose(rng).unwrap()).into())
        };
        if label.core_index().map_or(true, |c| !used_core.contains(&c)) {
            return label;
        }
    }
}

fn fits(span: Span, pred: usize, taken: &[(RoleLabel, Span)]) -> bool {
    !span.contains_token(pred) && taken.iter().all(|(_, s)| !s.intersects(&span))
}

fn corrupt(
    rng: &mut ChaCha8Rng,
    gold: &PropsSentence,
    knobs: SystemKnobs,
    cfg: &SyntheticConfig,
) -> PropsSentence {
    let denom = (1.0 - cfg.label_noise) * (1.0 - cfg.boundary_noise);
    let keep = if denom > 0.0 { (knobs.recall / denom).min(1.0) } else { 1.0 };
    let spurious_rate = (knobs.recall / knobs.precision - keep).max(0.0);
    let n = gold.n_tokens;
    let mut predicates = Vec::new();
    for gp in &gold.predicates {
        let pos = gp.position;
        let mut args: Vec<(RoleLabel, Span)> = Vec::new();
        let gold_args: Vec<&(RoleLabel, Span)> = gp.scored_args().collect();
        for (label, span) in &gold_args {
            if !rng.gen_bool(keep) {
                continue;
            }
            let mut label = label.clone();
            let mut span = *span;
            if rng.gen_bool(cfg.label_noise) {
                let used: Vec<u8> = args.iter().filter_map(|(l, _)| l.core_index()).collect();
                let mut relabeled = random_label(rng, &used);
                for _ in 0..8 {
                    if relabeled != label {
                        break;
                    }
                    relabeled = random_label(rng, &used);
                }
                label = relabeled;
            }
            if rng.gen_bool(cfg.boundary_noise) {
                let jittered = match rng.gen_range(0..4) {
                    0 if span.start > 0 => Span::new(span.start - 1, span.end),
                    1 if span.start < span.end => Span::new(span.start + 1, span.end),
                    2 if span.end + 1 < n => Span::new(span.start, span.end + 1),
                    _ if span.start < span.end => Span::new(span.start, span.end - 1),
                    _ => span,
                };
                let others: Vec<(RoleLabel, Span)> =
                    gold_args.iter().filter(|(_, s)| *s != span).map(|a| (*a).clone()).collect();
                if fits(jittered, pos, &args) && fits(jittered, pos, &others) {
                    span = jittered;
                }
            }
            if label.core_index().is_some() && args.iter().any(|(l, _)| *l == label) {
                continue;
            }
            if fits(span, pos, &args) {
                args.push((label, span));
            }
        }
        let expected = spurious_rate * gold_args.len().max(1) as f64;
        let mut n_spurious = expected.floor() as usize;
        if rng.gen_bool(expected - expected.floor()) {
            n_spurious += 1;
        }
        for _ in 0..n_spurious {
            for _ in 0..20 {
                let len = rng.gen_range(1..=3).min(n);
                let start = rng.gen_range(0..=n - len);
                let span = Span::new(start, start + len - 1);
                let used: Vec<u8> = args.iter().filter_map(|(l, _)| l.core_index()).collect();
                let label = random_label(rng, &used);
                let in_gold = gp.args.iter().any(|(l, s)| *l == label && *s == span);
                if !in_gold && fits(span, pos, &args) {
                    args.push((label, span));
                    break;
                }
            }
        }
        args.push((RoleLabel::Verb, Span::single(pos)));
        let mut pp = PropsPredicate { position: pos, lemma: gp.lemma.clone(), args };
        pp.canonicalize();
        predicates.push(pp);
    }
    PropsSentence { n_tokens: n, predicates }
}

/// Generates a corpus; identical configs (seed included) give identical
/// output.
pub fn generate_synthetic(cfg: &SyntheticConfig) -> SyntheticCorpus {
    cfg.check().expect("invalid synthetic config");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut sentences = Vec::with_capacity(cfg.n_sentences);
    let mut gold = PropsDocument::default();
    for id in 0..cfg.n_sentences {
        let (sent, chunks) = gen_sentence(&mut rng, id, cfg);
        gold.sentences.push(gen_gold(&mut rng, &sent, &chunks, cfg));
        sentences.push(sent);
    }
    let correct = Normal::new(cfg.score_means.0, cfg.score_sd).unwrap();
    let wrong = Normal::new(cfg.score_means.1, cfg.score_sd).unwrap();
    let mut systems = Vec::new();
    for (j, knobs) in cfg.systems.iter().enumerate() {
        let mut srng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1 + j as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut props = PropsDocument::default();
        let mut scores = ScoreTable::new();
        for (si, gs) in gold.sentences.iter().enumerate() {
            let ps = corrupt(&mut srng, gs, *knobs, cfg);
            for (pi, (pp, gp)) in ps.predicates.iter().zip(&gs.predicates).enumerate() {
                for (label, span) in pp.scored_args() {
                    let ok = gp.args.iter().any(|(l, s)| l == label && s == span);
                    let score = if ok { correct.sample(&mut srng) } else { wrong.sample(&mut srng) };
                    let key = ScoreKey { sentence: si, predicate: pi, label: label.clone(), span: *span };
                    scores.insert(key, (score * 1000.0).round() / 1000.0);
                }
            }
            props.sentences.push(ps);
        }
        systems.push(SyntheticSystem { id: format!("M{}", j + 1), props, scores });
    }
    SyntheticCorpus { sentences, gold, systems }
}
