//! Column-format corpus files: predicate/argument props, syntax columns,
//! raw-score sidecars, and a synthetic corpus generator.
//!
//! Props files hold one line per token. The first column carries the
//! predicate lemma (or `-`), every further column holds the bracketed
//! arguments of one predicate: `(A0*` opens, `*)` closes, `(A0*)` marks a
//! single-token argument and `*` is a token with no boundary. Sentences are
//! separated by blank lines. Spans are inclusive token intervals.

mod syntax;
mod synth;

pub use syntax::{chunk_spans, clause_spans, emit_syntax, parse_syntax, plain_sentence};
pub use synth::{generate_synthetic, SyntheticConfig, SyntheticCorpus, SyntheticSystem, SystemKnobs};

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{span_relation, Argument, Predicate, RoleLabel, Span, SpanRelation};

#[derive(Debug, Error, PartialEq)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("cannot serialize: {0}")]
    Serialize(String),
}

impl FormatError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        FormatError::Parse { line, message: message.into() }
    }

    pub fn line(&self) -> Option<usize> {
        match self {
            FormatError::Parse { line, .. } => Some(*line),
            FormatError::Serialize(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropsPredicate {
    pub position: usize,
    pub lemma: String,
    /// Arguments in canonical order: start ascending, longer first, then
    /// label text. The verb itself appears as a `V` argument.
    pub args: Vec<(RoleLabel, Span)>,
}

impl PropsPredicate {
    pub fn canonicalize(&mut self) {
        self.args
            .sort_by(|a, b| a.1.start.cmp(&b.1.start).then(b.1.end.cmp(&a.1.end)).then_with(|| a.0.cmp(&b.0)));
    }

    /// Arguments other than the verb.
    pub fn scored_args(&self) -> impl Iterator<Item = &(RoleLabel, Span)> {
        self.args.iter().filter(|(l, _)| !l.is_verb())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropsSentence {
    pub n_tokens: usize,
    pub predicates: Vec<PropsPredicate>,
}

impl PropsSentence {
    pub fn skeleton(&self) -> Vec<Predicate> {
        self.predicates.iter().map(|p| Predicate { position: p.position, lemma: p.lemma.clone() }).collect()
    }

    pub fn arguments(&self) -> impl Iterator<Item = Argument> + '_ {
        self.predicates.iter().enumerate().flat_map(|(pi, p)| {
            p.scored_args().map(move |(l, s)| Argument::new(pi, l.clone(), *s))
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PropsDocument {
    pub sentences: Vec<PropsSentence>,
}

impl PropsDocument {
    pub fn canonicalize(&mut self) {
        for s in &mut self.sentences {
            for p in &mut s.predicates {
                p.canonicalize();
            }
        }
    }

    pub fn n_predicates(&self) -> usize {
        self.sentences.iter().map(|s| s.predicates.len()).sum()
    }

    /// Same sentence count, token counts and predicate positions.
    pub fn same_skeleton(&self, other: &PropsDocument) -> Result<(), usize> {
        if self.sentences.len() != other.sentences.len() {
            return Err(self.sentences.len().min(other.sentences.len()));
        }
        for (i, (a, b)) in self.sentences.iter().zip(&other.sentences).enumerate() {
            let same = a.n_tokens == b.n_tokens
                && a.predicates.len() == b.predicates.len()
                && a.predicates.iter().zip(&b.predicates).all(|(x, y)| x.position == y.position);
            if !same {
                return Err(i);
            }
        }
        Ok(())
    }
}

/// Splits text into blank-line separated blocks of `(line number, fields)`.
pub(crate) fn blocks(text: &str) -> Vec<Vec<(usize, Vec<&str>)>> {
    let mut out = Vec::new();
    let mut cur: Vec<(usize, Vec<&str>)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
        } else {
            cur.push((i + 1, fields));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// A bracket tag split into its opened labels and its number of closers.
pub(crate) struct BracketTag<'a> {
    pub opens: Vec<&'a str>,
    pub closes: usize,
}

/// Parses `(A*`, `(S(NP*`, `*)`, `*))`, `(A0*)` and `*`. When
/// `labeled_closers` is set, closers may carry a label (`*S)S)`), as in
/// clause columns.
pub(crate) fn parse_bracket_tag(tag: &str, labeled_closers: bool) -> Option<BracketTag<'_>> {
    let star = tag.find('*')?;
    let (head, tail) = (&tag[..star], &tag[star + 1..]);
    let mut opens = Vec::new();
    if !head.is_empty() {
        if !head.starts_with('(') {
            return None;
        }
        for label in head[1..].split('(') {
            if label.is_empty() || label.contains(')') {
                return None;
            }
            opens.push(label);
        }
    }
    let closes = if labeled_closers {
        if !tail.is_empty() && !tail.ends_with(')') {
            return None;
        }
        if tail.contains('(') || tail.contains('*') {
            return None;
        }
        tail.matches(')').count()
    } else {
        if !tail.chars().all(|c| c == ')') {
            return None;
        }
        tail.len()
    };
    Some(BracketTag { opens, closes })
}

pub fn parse_props(text: &str) -> Result<PropsDocument, FormatError> {
    let mut doc = PropsDocument::default();
    for block in blocks(text) {
        let first_line = block[0].0;
        let ncols = block[0].1.len();
        for (line, fields) in &block {
            if fields.len() != ncols {
                return Err(FormatError::at(
                    *line,
                    format!("expected {ncols} columns, found {}", fields.len()),
                ));
            }
        }
        let mut predicates: Vec<PropsPredicate> = block
            .iter()
            .enumerate()
            .filter(|(_, (_, f))| f[0] != "-")
            .map(|(t, (_, f))| PropsPredicate { position: t, lemma: f[0].to_string(), args: Vec::new() })
            .collect();
        if predicates.len() != ncols - 1 {
            return Err(FormatError::at(
                first_line,
                format!("{} target verbs but {} argument columns", predicates.len(), ncols - 1),
            ));
        }
        for (k, pred) in predicates.iter_mut().enumerate() {
            let mut stack: Vec<(&str, usize, usize)> = Vec::new();
            for (t, (line, fields)) in block.iter().enumerate() {
                let tag = fields[k + 1];
                let parsed = parse_bracket_tag(tag, false)
                    .ok_or_else(|| FormatError::at(*line, format!("malformed argument tag `{tag}`")))?;
                for label in parsed.opens {
                    stack.push((label, t, *line));
                }
                for _ in 0..parsed.closes {
                    let (label, start, open_line) = stack
                        .pop()
                        .ok_or_else(|| FormatError::at(*line, format!("unbalanced `)` in column {}", k + 2)))?;
                    let label: RoleLabel = label
                        .parse()
                        .map_err(|_| FormatError::at(open_line, format!("invalid label `{label}`")))?;
                    pred.args.push((label, Span::new(start, t)));
                }
            }
            if let Some((label, _, line)) = stack.pop() {
                return Err(FormatError::at(line, format!("unclosed `({label}` in column {}", k + 2)));
            }
            pred.canonicalize();
        }
        doc.sentences.push(PropsSentence { n_tokens: block.len(), predicates });
    }
    Ok(doc)
}

pub fn emit_props(doc: &PropsDocument) -> Result<String, FormatError> {
    let mut out = String::new();
    for (si, sent) in doc.sentences.iter().enumerate() {
        let n = sent.n_tokens;
        if n == 0 {
            return Err(FormatError::Serialize(format!("sentence {si} has no tokens")));
        }
        let mut lemma_col = vec!["-"; n];
        let mut last: Option<usize> = None;
        for p in &sent.predicates {
            if p.position >= n || last.is_some_and(|l| p.position <= l) {
                return Err(FormatError::Serialize(format!("sentence {si}: bad predicate position {}", p.position)));
            }
            last = Some(p.position);
            lemma_col[p.position] = &p.lemma;
        }
        let mut columns: Vec<Vec<String>> = Vec::with_capacity(sent.predicates.len());
        for (pi, p) in sent.predicates.iter().enumerate() {
            let mut args = p.args.clone();
            args.sort_by(|a, b| a.1.start.cmp(&b.1.start).then(b.1.end.cmp(&a.1.end)).then_with(|| a.0.cmp(&b.0)));
            for (i, (_, a)) in args.iter().enumerate() {
                if a.end >= n {
                    return Err(FormatError::Serialize(format!("sentence {si}: span {a} out of bounds")));
                }
                for (_, b) in &args[i + 1..] {
                    if span_relation(*a, *b) == SpanRelation::Crossing {
                        return Err(FormatError::Serialize(format!(
                            "sentence {si}, predicate {pi}: crossing spans {a} and {b}"
                        )));
                    }
                }
            }
            let mut col = vec![String::new(); n];
            let mut closes = vec![0usize; n];
            for (label, span) in &args {
                col[span.start].push('(');
                col[span.start].push_str(&label.to_string());
                closes[span.end] += 1;
            }
            for (t, cell) in col.iter_mut().enumerate() {
                cell.push('*');
                for _ in 0..closes[t] {
                    cell.push(')');
                }
            }
            columns.push(col);
        }
        for t in 0..n {
            out.push_str(lemma_col[t]);
            for col in &columns {
                out.push(' ');
                out.push_str(&col[t]);
            }
            out.push('\n');
        }
        out.push('\n');
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ScoreKey {
    pub sentence: usize,
    pub predicate: usize,
    pub label: RoleLabel,
    pub span: Span,
}

/// Raw (uncalibrated) per-argument scores of one system.
pub type ScoreTable = BTreeMap<ScoreKey, f64>;

pub fn parse_scores(text: &str) -> Result<ScoreTable, FormatError> {
    let mut table = ScoreTable::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 6 {
            return Err(FormatError::at(line_no, format!("expected 6 fields, found {}", fields.len())));
        }
        let num = |s: &str, what: &str| -> Result<usize, FormatError> {
            s.parse().map_err(|_| FormatError::at(line_no, format!("invalid {what} `{s}`")))
        };
        let sentence = num(fields[0], "sentence index")?;
        let predicate = num(fields[1], "predicate index")?;
        let label: RoleLabel =
            fields[2].parse().map_err(|_| FormatError::at(line_no, format!("invalid label `{}`", fields[2])))?;
        let start = num(fields[3], "span start")?;
        let end = num(fields[4], "span end")?;
        let span = Span::try_new(start, end).map_err(|_| FormatError::at(line_no, "span start after end"))?;
        let score: f64 =
            fields[5].parse().map_err(|_| FormatError::at(line_no, format!("invalid score `{}`", fields[5])))?;
        if !score.is_finite() {
            return Err(FormatError::at(line_no, "score is not finite"));
        }
        let key = ScoreKey { sentence, predicate, label, span };
        if table.insert(key, score).is_some() {
            return Err(FormatError::at(line_no, "duplicate score key"));
        }
    }
    Ok(table)
}

pub fn emit_scores(table: &ScoreTable) -> String {
    let mut out = String::new();
    for (k, v) in table {
        let _ = writeln!(out, "{} {} {} {} {} {}", k.sentence, k.predicate, k.label, k.span.start, k.span.end, v);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn figure_style_sentence() {
        let text = "\
-    (A0*  *
-    *)    *
-    *     *
-    *     *
sold (V*)  *
-    (A1*  *
-    *)    *
";
        let err = parse_props(text).unwrap_err();
        // two argument columns but a single lemma row
        assert_eq!(err.line(), Some(1));
        let text = "\
-    (A0*
-    *)
-    *
-    *
sold (V*)
-    (A1*
-    *)
";
        let doc = parse_props(text).unwrap();
        let p = &doc.sentences[0].predicates[0];
        assert_eq!(p.position, 4);
        assert_eq!(p.lemma, "sold");
        assert_eq!(
            p.args,
            vec![
                ("A0".parse().unwrap(), Span::new(0, 1)),
                (RoleLabel::Verb, Span::new(4, 4)),
                ("A1".parse().unwrap(), Span::new(5, 6)),
            ]
        );
    }

    #[test]
    fn single_token_argument_emission() {
        let doc = PropsDocument {
            sentences: vec![PropsSentence {
                n_tokens: 4,
                predicates: vec![PropsPredicate {
                    position: 0,
                    lemma: "go".into(),
                    args: vec![(RoleLabel::Verb, Span::new(0, 0)), (RoleLabel::core(1), Span::new(2, 2))],
                }],
            }],
        };
        let text = emit_props(&doc).unwrap();
        assert_eq!(text.lines().nth(2), Some("- (A1*)"));
        assert_eq!(parse_props(&text).unwrap(), doc);
    }

    #[test]
    fn empty_document() {
        assert_eq!(emit_props(&PropsDocument::default()).unwrap(), "");
        assert_eq!(parse_props("").unwrap(), PropsDocument::default());
        assert!(parse_scores("").unwrap().is_empty());
    }

    #[test]
    fn nested_and_equal_spans_round_trip() {
        let text = "go (V*) (A0(A1*\n- * *))\n- * *\nrun * (V*)\n\n";
        let doc = parse_props(text).unwrap();
        assert_eq!(doc.sentences[0].predicates[1].args.len(), 3);
        assert_eq!(emit_props(&doc).unwrap(), text);
    }

    #[test]
    fn unbalanced_brackets_rejected() {
        assert_eq!(parse_props("go (V*)\n- *)\n").unwrap_err().line(), Some(2));
        assert_eq!(parse_props("go (V*)\n- (A1*\n- *\n").unwrap_err().line(), Some(2));
        assert!(parse_props("go (V*)\n- (A1*)x\n").is_err());
        assert!(parse_props("go (V*) \n- * *\n").is_err());
    }

    #[test]
    fn crossing_spans_cannot_be_emitted() {
        let doc = PropsDocument {
            sentences: vec![PropsSentence {
                n_tokens: 6,
                predicates: vec![PropsPredicate {
                    position: 5,
                    lemma: "x".into(),
                    args: vec![(RoleLabel::core(0), Span::new(0, 2)), (RoleLabel::core(1), Span::new(1, 3))],
                }],
            }],
        };
        assert!(matches!(emit_props(&doc), Err(FormatError::Serialize(_))));
    }

    #[test]
    fn score_lines() {
        let t = parse_scores("0 0 A0 0 3 2.57\n").unwrap();
        let key = ScoreKey { sentence: 0, predicate: 0, label: RoleLabel::core(0), span: Span::new(0, 3) };
        assert_eq!(t[&key], 2.57);
        assert_eq!(emit_scores(&t), "0 0 A0 0 3 2.57\n");
        assert_eq!(parse_scores("0 0 A0 0 3 1\n0 0 A0 0 3 2\n").unwrap_err().line(), Some(2));
        assert_eq!(parse_scores("\n0 0 A0 3 0 1\n").unwrap_err().line(), Some(2));
        assert_eq!(parse_scores("0 0 A0 0 3\n").unwrap_err().line(), Some(1));
        assert!(parse_scores("0 0 A0 0 3 nan\n").is_err());
    }
}
