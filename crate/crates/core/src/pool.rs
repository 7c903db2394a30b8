//! Candidate pool: the deduplicated union of the arguments proposed by all
//! systems, with per-system votes and raw scores, optionally aligned with
//! gold.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus_io::{PropsDocument, PropsPredicate, PropsSentence, ScoreKey, ScoreTable};
use crate::model::{Argument, Candidate, Predicate, RoleLabel, Span};

#[derive(Debug, Error, PartialEq)]
pub enum PoolError {
    #[error("no system outputs supplied")]
    NoSystems,
    #[error("predicate skeleton mismatch at sentence {0}")]
    Alignment(usize),
    #[error("gold arguments have not been aligned with the pool")]
    NotAligned,
}

#[derive(Clone, Debug)]
pub struct SystemOutput {
    pub id: String,
    pub props: PropsDocument,
    pub scores: Option<ScoreTable>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoolSentence {
    pub id: usize,
    pub n_tokens: usize,
    pub predicates: Vec<Predicate>,
    pub candidates: Vec<Candidate>,
    /// Every gold argument, including those no system proposed.
    #[serde(default)]
    pub gold: Option<Vec<Argument>>,
}

impl PoolSentence {
    pub fn n_unreachable_gold(&self) -> usize {
        let reachable = self.candidates.iter().filter(|c| c.is_gold == Some(true)).count();
        self.gold.as_ref().map_or(0, |g| g.len() - reachable)
    }

    /// Candidate indices grouped by predicate.
    pub fn by_predicate(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.predicates.len()];
        for (i, c) in self.candidates.iter().enumerate() {
            out[c.argument.predicate].push(i);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidatePool {
    pub system_ids: Vec<String>,
    pub sentences: Vec<PoolSentence>,
}

impl CandidatePool {
    pub fn n_systems(&self) -> usize {
        self.system_ids.len()
    }

    pub fn n_candidates(&self) -> usize {
        self.sentences.iter().map(|s| s.candidates.len()).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("pool serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// The props document system `j` would have produced: its arguments plus
    /// the verb of each predicate.
    pub fn system_view(&self, j: usize) -> PropsDocument {
        let sentences = self
            .sentences
            .iter()
            .map(|s| {
                let mut predicates: Vec<PropsPredicate> = s
                    .predicates
                    .iter()
                    .map(|p| PropsPredicate {
                        position: p.position,
                        lemma: p.lemma.clone(),
                        args: vec![(RoleLabel::Verb, Span::single(p.position))],
                    })
                    .collect();
                for c in s.candidates.iter().filter(|c| c.votes.contains(&j)) {
                    predicates[c.argument.predicate].args.push((c.argument.label.clone(), c.argument.span));
                }
                for p in &mut predicates {
                    p.canonicalize();
                }
                PropsSentence { n_tokens: s.n_tokens, predicates }
            })
            .collect();
        PropsDocument { sentences }
    }

    /// Raw-score table of system `j` over the pool.
    pub fn system_scores(&self, j: usize) -> ScoreTable {
        let mut t = ScoreTable::new();
        for s in &self.sentences {
            for c in &s.candidates {
                if let Some(v) = c.raw_scores.get(j).copied().flatten() {
                    t.insert(
                        ScoreKey {
                            sentence: s.id,
                            predicate: c.argument.predicate,
                            label: c.argument.label.clone(),
                            span: c.argument.span,
                        },
                        v,
                    );
                }
            }
        }
        t
    }
}

fn candidate_order(a: &Candidate, b: &Candidate) -> std::cmp::Ordering {
    let (x, y) = (&a.argument, &b.argument);
    x.predicate
        .cmp(&y.predicate)
        .then(x.span.start.cmp(&y.span.start))
        .then(y.span.end.cmp(&x.span.end))
        .then_with(|| x.label.cmp(&y.label))
}

/// Merges system outputs into one candidate per distinct
/// (predicate, label, span). Verb pseudo-arguments are left out.
pub fn build_pool(systems: &[SystemOutput]) -> Result<CandidatePool, PoolError> {
    let first = systems.first().ok_or(PoolError::NoSystems)?;
    for s in &systems[1..] {
        first.props.same_skeleton(&s.props).map_err(PoolError::Alignment)?;
    }
    let m = systems.len();
    let mut sentences = Vec::with_capacity(first.props.sentences.len());
    for (si, skel) in first.props.sentences.iter().enumerate() {
        let mut index: HashMap<Argument, usize> = HashMap::new();
        let mut candidates: Vec<Candidate> = Vec::new();
        for (j, sys) in systems.iter().enumerate() {
            for arg in sys.props.sentences[si].arguments() {
                let key = ScoreKey { sentence: si, predicate: arg.predicate, label: arg.label.clone(), span: arg.span };
                let raw = sys.scores.as_ref().and_then(|t| t.get(&key).copied());
                let idx = *index.entry(arg.clone()).or_insert_with(|| {
                    candidates.push(Candidate::new(si, arg, m));
                    candidates.len() - 1
                });
                candidates[idx].votes.insert(j);
                candidates[idx].raw_scores[j] = raw;
            }
        }
        candidates.sort_by(candidate_order);
        sentences.push(PoolSentence {
            id: si,
            n_tokens: skel.n_tokens,
            predicates: skel.skeleton(),
            candidates,
            gold: None,
        });
    }
    Ok(CandidatePool { system_ids: systems.iter().map(|s| s.id.clone()).collect(), sentences })
}

pub fn align_gold(pool: &mut CandidatePool, gold: &PropsDocument) -> Result<(), PoolError> {
    if pool.sentences.len() != gold.sentences.len() {
        return Err(PoolError::Alignment(pool.sentences.len().min(gold.sentences.len())));
    }
    for (ps, gs) in pool.sentences.iter_mut().zip(&gold.sentences) {
        let same = ps.n_tokens == gs.n_tokens
            && ps.predicates.len() == gs.predicates.len()
            && ps.predicates.iter().zip(&gs.predicates).all(|(a, b)| a.position == b.position);
        if !same {
            return Err(PoolError::Alignment(ps.id));
        }
        let gold_args: Vec<Argument> = gs.arguments().collect();
        for c in &mut ps.candidates {
            c.is_gold = Some(gold_args.contains(&c.argument));
        }
        ps.gold = Some(gold_args);
    }
    Ok(())
}

/// Per-label distribution of correct pooled arguments by agreement level.
#[derive(Clone, Debug, PartialEq)]
pub struct AgreementTable {
    pub columns: Vec<String>,
    /// (label, percentage per column, number of correct candidates)
    pub rows: Vec<(RoleLabel, Vec<f64>, usize)>,
}

impl AgreementTable {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{:<10}", "label");
        for c in &self.columns {
            let _ = write!(out, " {:>9}", c);
        }
        let _ = writeln!(out, " {:>7}", "n");
        for (label, pct, n) in &self.rows {
            let _ = write!(out, "{:<10}", label.to_string());
            for p in pct {
                let _ = write!(out, " {:>8.2}%", p);
            }
            let _ = writeln!(out, " {:>7}", n);
        }
        out
    }
}

/// Columns: "∩ of M" down to "∩ of 2", then one column per system for
/// arguments only that system proposed.
pub fn pool_stats(pool: &CandidatePool) -> Result<AgreementTable, PoolError> {
    let m = pool.n_systems();
    let mut columns: Vec<String> = (2..=m).rev().map(|k| format!("∩ of {k}")).collect();
    columns.extend(pool.system_ids.iter().cloned());
    let mut counts: BTreeMap<RoleLabel, Vec<usize>> = BTreeMap::new();
    for s in &pool.sentences {
        for c in &s.candidates {
            match c.is_gold {
                None => return Err(PoolError::NotAligned),
                Some(false) => continue,
                Some(true) => {}
            }
            let row = counts.entry(c.argument.label.clone()).or_insert_with(|| vec![0; columns.len()]);
            let k = c.vote_count();
            if k >= 2 {
                row[m - k] += 1;
            } else {
                let j = *c.votes.iter().next().expect("candidates carry at least one vote");
                row[m - 1 + j] += 1;
            }
        }
    }
    let rows = counts
        .into_iter()
        .map(|(label, row)| {
            let n: usize = row.iter().sum();
            let pct = row.iter().map(|&x| 100.0 * x as f64 / n as f64).collect();
            (label, pct, n)
        })
        .collect();
    Ok(AgreementTable { columns, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus_io::parse_props;

    fn sys(id: &str, text: &str) -> SystemOutput {
        SystemOutput { id: id.into(), props: parse_props(text).unwrap(), scores: None }
    }

    const M1: &str = "- (A0*)\nsell (V*)\n- (A1*\n- *)\n";
    const M2: &str = "- *\nsell (V*)\n- (A1*\n- *)\n";

    #[test]
    fn shared_argument_gets_both_votes() {
        let pool = build_pool(&[sys("M1", M1), sys("M2", M2)]).unwrap();
        let cands = &pool.sentences[0].candidates;
        assert_eq!(cands.len(), 2);
        let a1 = cands.iter().find(|c| c.argument.label == RoleLabel::core(1)).unwrap();
        assert_eq!(a1.votes.iter().copied().collect::<Vec<_>>(), vec![0, 1]);
        let a0 = cands.iter().find(|c| c.argument.label == RoleLabel::core(0)).unwrap();
        assert_eq!(a0.vote_count(), 1);
        assert!(cands.iter().all(|c| !c.argument.label.is_verb()));
    }

    #[test]
    fn skeleton_mismatch() {
        let other = "- *\n- *\nsell (V*)\n- *\n";
        assert_eq!(build_pool(&[sys("M1", M1), sys("M2", other)]).unwrap_err(), PoolError::Alignment(0));
    }

    #[test]
    fn gold_alignment_and_stats() {
        let mut pool = build_pool(&[sys("M1", M1), sys("M2", M2)]).unwrap();
        assert_eq!(pool_stats(&pool).unwrap_err(), PoolError::NotAligned);
        let gold = parse_props("- (A1*)\nsell (V*)\n- (A1*\n- *)\n").unwrap();
        align_gold(&mut pool, &gold).unwrap();
        let flags: Vec<_> = pool.sentences[0].candidates.iter().map(|c| c.is_gold).collect();
        assert_eq!(flags, vec![Some(false), Some(true)]);
        assert_eq!(pool.sentences[0].n_unreachable_gold(), 1);
        let st = pool_stats(&pool).unwrap();
        assert_eq!(st.columns, vec!["∩ of 2", "M1", "M2"]);
        assert_eq!(st.rows.len(), 1);
        assert_eq!(st.rows[0].1, vec![100.0, 0.0, 0.0]);
    }

    #[test]
    fn json_dump_round_trip() {
        let pool = build_pool(&[sys("M1", M1), sys("M2", M2)]).unwrap();
        assert_eq!(CandidatePool::from_json(&pool.to_json()).unwrap(), pool);
    }

    #[test]
    fn system_views_rebuild_the_pool() {
        let pool = build_pool(&[sys("M1", M1), sys("M2", M2)]).unwrap();
        let views: Vec<SystemOutput> = (0..2)
            .map(|j| SystemOutput { id: pool.system_ids[j].clone(), props: pool.system_view(j), scores: None })
            .collect();
        assert_eq!(build_pool(&views).unwrap(), pool);
    }
}
