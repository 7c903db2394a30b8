//! Core domain types: spans, role labels, sentences, pooled candidates,
//! solutions, and the consistency constraints shared by every engine.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureVector;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("invalid role label `{0}`")]
    InvalidLabel(String),
    #[error("invalid span [{start},{end}]")]
    InvalidSpan { start: usize, end: usize },
    #[error("invalid constraint spec `{0}`")]
    InvalidConstraintSpec(String),
    #[error("structural error: {0}")]
    Structural(String),
}

/// Token interval, inclusive on both ends.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        assert!(start <= end, "span start {start} after end {end}");
        Span { start, end }
    }

    pub fn try_new(start: usize, end: usize) -> Result<Self, ModelError> {
        if start <= end {
            Ok(Span { start, end })
        } else {
            Err(ModelError::InvalidSpan { start, end })
        }
    }

    pub fn single(pos: usize) -> Self {
        Span { start: pos, end: pos }
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn contains_token(&self, pos: usize) -> bool {
        self.start <= pos && pos <= self.end
    }

    pub fn intersects(&self, other: &Span) -> bool {
        self.start <= other.end && other.start <= self.end
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.start, self.end)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SpanRelation {
    Equal,
    Disjoint,
    AContainsB,
    BContainsA,
    Crossing,
}

pub fn span_relation(a: Span, b: Span) -> SpanRelation {
    if a == b {
        SpanRelation::Equal
    } else if !a.intersects(&b) {
        SpanRelation::Disjoint
    } else if a.contains(&b) {
        SpanRelation::AContainsB
    } else if b.contains(&a) {
        SpanRelation::BContainsA
    } else {
        SpanRelation::Crossing
    }
}

/// PropBank-style role label.
///
/// `Reference` and `Continuation` wrap a base label that is itself neither a
/// reference nor a continuation, so `R-AM-TMP` is a reference to `AM-TMP`.
/// Labels outside the numbered/adjunct scheme (such as `AA`) are kept as
/// `Other`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum RoleLabel {
    Verb,
    Core(u8),
    Adjunct(String),
    Other(String),
    Reference(Box<RoleLabel>),
    Continuation(Box<RoleLabel>),
}

impl RoleLabel {
    pub fn core(index: u8) -> Self {
        assert!(index <= 5);
        RoleLabel::Core(index)
    }

    pub fn is_verb(&self) -> bool {
        matches!(self, RoleLabel::Verb)
    }

    pub fn core_index(&self) -> Option<u8> {
        match self {
            RoleLabel::Core(i) => Some(*i),
            _ => None,
        }
    }

    /// The label a reference or continuation points back to; the label
    /// itself otherwise.
    pub fn base(&self) -> &RoleLabel {
        match self {
            RoleLabel::Reference(b) | RoleLabel::Continuation(b) => b,
            other => other,
        }
    }

    pub fn is_reference(&self) -> bool {
        matches!(self, RoleLabel::Reference(_))
    }

    pub fn is_continuation(&self) -> bool {
        matches!(self, RoleLabel::Continuation(_))
    }

    /// Labels two predicates may not share on an identical span:
    /// AM-*, R-AM-* and C-*.
    pub fn is_unshareable(&self) -> bool {
        match self {
            RoleLabel::Adjunct(_) | RoleLabel::Continuation(_) => true,
            RoleLabel::Reference(b) => matches!(**b, RoleLabel::Adjunct(_)),
            _ => false,
        }
    }

    fn parse_base(s: &str) -> Result<RoleLabel, ModelError> {
        let bad = || ModelError::InvalidLabel(s.to_string());
        if s.is_empty() || s.chars().any(|c| c.is_whitespace() || "()*".contains(c)) {
            return Err(bad());
        }
        if s == "V" {
            return Ok(RoleLabel::Verb);
        }
        if let Some(tag) = s.strip_prefix("AM-") {
            if tag.is_empty() {
                return Err(bad());
            }
            return Ok(RoleLabel::Adjunct(tag.to_string()));
        }
        if s.starts_with("R-") || s.starts_with("C-") {
            return Err(bad());
        }
        let bytes = s.as_bytes();
        if bytes.len() == 2 && bytes[0] == b'A' && bytes[1].is_ascii_digit() {
            let idx = bytes[1] - b'0';
            return if idx <= 5 { Ok(RoleLabel::Core(idx)) } else { Err(bad()) };
        }
        Ok(RoleLabel::Other(s.to_string()))
    }
}

impl FromStr for RoleLabel {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(rest) = s.strip_prefix("R-") {
            let base = RoleLabel::parse_base(rest).map_err(|_| ModelError::InvalidLabel(s.into()))?;
            return Ok(RoleLabel::Reference(Box::new(base)));
        }
        if let Some(rest) = s.strip_prefix("C-") {
            let base = RoleLabel::parse_base(rest).map_err(|_| ModelError::InvalidLabel(s.into()))?;
            return Ok(RoleLabel::Continuation(Box::new(base)));
        }
        RoleLabel::parse_base(s)
    }
}

impl fmt::Display for RoleLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RoleLabel::Verb => f.write_str("V"),
            RoleLabel::Core(i) => write!(f, "A{i}"),
            RoleLabel::Adjunct(t) => write!(f, "AM-{t}"),
            RoleLabel::Other(t) => f.write_str(t),
            RoleLabel::Reference(b) => write!(f, "R-{b}"),
            RoleLabel::Continuation(b) => write!(f, "C-{b}"),
        }
    }
}

impl From<RoleLabel> for String {
    fn from(l: RoleLabel) -> String {
        l.to_string()
    }
}

impl TryFrom<String> for RoleLabel {
    type Error = ModelError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

// Labels order by their surface text, which keeps reports and tie-breaks
// readable.
impl Ord for RoleLabel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.to_string().cmp(&other.to_string())
    }
}

impl PartialOrd for RoleLabel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub index: usize,
    pub form: String,
    pub pos: String,
    pub chunk: String,
    pub clause: String,
    pub ne: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseNode {
    pub label: String,
    pub span: Span,
    pub children: Vec<ParseNode>,
}

impl ParseNode {
    pub fn leaf(label: impl Into<String>, span: Span) -> Self {
        ParseNode { label: label.into(), span, children: Vec::new() }
    }

    /// Children must be ordered, pairwise disjoint and inside the parent.
    pub fn is_well_formed(&self) -> bool {
        let mut prev_end: Option<usize> = None;
        for c in &self.children {
            if !self.span.contains(&c.span) {
                return false;
            }
            if let Some(p) = prev_end {
                if c.span.start <= p {
                    return false;
                }
            }
            prev_end = Some(c.span.end);
            if !c.is_well_formed() {
                return false;
            }
        }
        true
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(ParseNode::node_count).sum::<usize>()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Predicate {
    pub position: usize,
    pub lemma: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub id: usize,
    pub tokens: Vec<Token>,
    pub predicates: Vec<Predicate>,
    pub parse: Option<ParseNode>,
}

impl Sentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn check(&self) -> Result<(), ModelError> {
        let mut last = None;
        for p in &self.predicates {
            if p.position >= self.tokens.len() {
                return Err(ModelError::Structural(format!(
                    "sentence {}: predicate at {} out of range",
                    self.id, p.position
                )));
            }
            if let Some(l) = last {
                if p.position <= l {
                    return Err(ModelError::Structural(format!(
                        "sentence {}: predicate positions not increasing",
                        self.id
                    )));
                }
            }
            last = Some(p.position);
        }
        if let Some(root) = &self.parse {
            if !root.is_well_formed() || root.span.end >= self.tokens.len() {
                return Err(ModelError::Structural(format!("sentence {}: malformed parse tree", self.id)));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Argument {
    /// Index into the sentence's predicate list (not a token position).
    pub predicate: usize,
    pub label: RoleLabel,
    pub span: Span,
}

impl Argument {
    pub fn new(predicate: usize, label: RoleLabel, span: Span) -> Self {
        Argument { predicate, label, span }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub sentence: usize,
    pub argument: Argument,
    /// Indices of the systems that proposed this exact argument.
    pub votes: BTreeSet<usize>,
    pub raw_scores: Vec<Option<f64>>,
    pub probs: Vec<Option<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<FeatureVector>,
    pub is_gold: Option<bool>,
}

impl Candidate {
    pub fn new(sentence: usize, argument: Argument, n_systems: usize) -> Self {
        Candidate {
            sentence,
            argument,
            votes: BTreeSet::new(),
            raw_scores: vec![None; n_systems],
            probs: vec![None; n_systems],
            features: None,
            is_gold: None,
        }
    }

    /// Sum of per-system probabilities; a system that did not vote
    /// contributes 0.
    pub fn prob_sum(&self) -> f64 {
        self.probs.iter().flatten().sum()
    }

    pub fn vote_count(&self) -> usize {
        self.votes.len()
    }

    /// Ordering used to break ties between equal-objective selections:
    /// more votes first, then earlier start, then label text.
    pub fn priority_cmp(&self, other: &Candidate) -> Ordering {
        other
            .votes
            .len()
            .cmp(&self.votes.len())
            .then(self.argument.span.start.cmp(&other.argument.span.start))
            .then_with(|| self.argument.label.cmp(&other.argument.label))
            .then(self.argument.predicate.cmp(&other.argument.predicate))
            .then(self.argument.span.end.cmp(&other.argument.span.end))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub sentence: usize,
    /// Sorted indices into the sentence's candidate list.
    pub selected: Vec<usize>,
    pub objective: f64,
}

impl Solution {
    pub fn empty(sentence: usize) -> Self {
        Solution { sentence, selected: Vec::new(), objective: 0.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Constraint {
    /// Same-predicate arguments neither overlap nor embed.
    C1,
    /// At most one of each core label per predicate.
    C2,
    /// R-X requires X for the same predicate.
    C3,
    /// C-X requires an earlier X for the same predicate.
    C4,
    /// Arguments of different predicates may embed but not cross.
    C5,
    /// Different predicates do not share an identical AM-*, R-AM-* or C-* argument.
    C6,
}

impl Constraint {
    pub const ALL: [Constraint; 6] =
        [Constraint::C1, Constraint::C2, Constraint::C3, Constraint::C4, Constraint::C5, Constraint::C6];

    pub fn number(self) -> usize {
        self as usize + 1
    }

    pub fn from_number(n: usize) -> Option<Constraint> {
        Constraint::ALL.get(n.checked_sub(1)?).copied()
    }

    pub fn is_cross_predicate(self) -> bool {
        matches!(self, Constraint::C5 | Constraint::C6)
    }

    /// c3 and c4 are implications (a dependent needs a base); the rest
    /// forbid pairs.
    pub fn is_pairwise(self) -> bool {
        !matches!(self, Constraint::C3 | Constraint::C4)
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}", self.number())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
pub enum ConstraintMode {
    #[default]
    Off,
    Hard,
    Soft(f64),
}

impl ConstraintMode {
    pub fn is_active(self) -> bool {
        !matches!(self, ConstraintMode::Off)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct ConstraintSet {
    modes: [ConstraintMode; 6],
}

impl ConstraintSet {
    pub fn none() -> Self {
        ConstraintSet::default()
    }

    pub fn hard(constraints: &[Constraint]) -> Self {
        let mut cs = ConstraintSet::none();
        for &c in constraints {
            cs.set(c, ConstraintMode::Hard);
        }
        cs
    }

    pub fn set(&mut self, c: Constraint, mode: ConstraintMode) {
        if let ConstraintMode::Soft(p) = mode {
            assert!(p.is_finite() && p >= 0.0, "soft penalty must be finite and non-negative");
        }
        self.modes[c as usize] = mode;
    }

    pub fn with(mut self, c: Constraint, mode: ConstraintMode) -> Self {
        self.set(c, mode);
        self
    }

    pub fn mode(&self, c: Constraint) -> ConstraintMode {
        self.modes[c as usize]
    }

    pub fn is_hard(&self, c: Constraint) -> bool {
        matches!(self.mode(c), ConstraintMode::Hard)
    }

    pub fn active(&self) -> impl Iterator<Item = (Constraint, ConstraintMode)> + '_ {
        Constraint::ALL.into_iter().map(|c| (c, self.mode(c))).filter(|(_, m)| m.is_active())
    }

    /// The hard subset of this set.
    pub fn hard_only(&self) -> ConstraintSet {
        let mut out = ConstraintSet::none();
        for (c, m) in self.active() {
            if matches!(m, ConstraintMode::Hard) {
                out.set(c, m);
            }
        }
        out
    }

    /// Drops the cross-predicate constraints (c5, c6).
    pub fn per_predicate(&self) -> ConstraintSet {
        let mut out = *self;
        out.set(Constraint::C5, ConstraintMode::Off);
        out.set(Constraint::C6, ConstraintMode::Off);
        out
    }

    /// Parses specs such as `1+2+5+6` or `1+2+3:soft=0.5`.
    pub fn parse(spec: &str) -> Result<Self, ModelError> {
        let bad = || ModelError::InvalidConstraintSpec(spec.to_string());
        let mut cs = ConstraintSet::none();
        let spec = spec.trim();
        if spec.is_empty() || spec == "none" {
            return Ok(cs);
        }
        for item in spec.split('+') {
            let (num, mode) = match item.split_once(':') {
                None => (item, ConstraintMode::Hard),
                Some((num, "hard")) => (num, ConstraintMode::Hard),
                Some((num, rest)) => {
                    let pen = rest.strip_prefix("soft=").ok_or_else(bad)?;
                    let p: f64 = pen.parse().map_err(|_| bad())?;
                    if !p.is_finite() || p < 0.0 {
                        return Err(bad());
                    }
                    (num, ConstraintMode::Soft(p))
                }
            };
            let n: usize = num.trim().parse().map_err(|_| bad())?;
            let c = Constraint::from_number(n).ok_or_else(bad)?;
            cs.set(c, mode);
        }
        Ok(cs)
    }
}

impl fmt::Display for ConstraintSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .active()
            .map(|(c, m)| match m {
                ConstraintMode::Soft(p) => format!("{}:soft={}", c.number(), p),
                _ => c.number().to_string(),
            })
            .collect();
        if parts.is_empty() {
            f.write_str("none")
        } else {
            f.write_str(&parts.join("+"))
        }
    }
}

/// True when selecting both arguments breaks pairwise constraint `c`.
/// Always false for the implication constraints c3/c4.
pub fn pair_conflicts(c: Constraint, a: &Argument, b: &Argument) -> bool {
    let same_pred = a.predicate == b.predicate;
    match c {
        Constraint::C1 => same_pred && span_relation(a.span, b.span) != SpanRelation::Disjoint,
        Constraint::C2 => same_pred && a.label.core_index().is_some() && a.label == b.label,
        Constraint::C5 => !same_pred && span_relation(a.span, b.span) == SpanRelation::Crossing,
        Constraint::C6 => {
            !same_pred && a.span == b.span && a.label == b.label && a.label.is_unshareable()
        }
        Constraint::C3 | Constraint::C4 => false,
    }
}

/// Whether `dep` is subject to implication constraint `c`.
pub fn is_dependent(c: Constraint, dep: &Argument) -> bool {
    match c {
        Constraint::C3 => dep.label.is_reference(),
        Constraint::C4 => dep.label.is_continuation(),
        _ => false,
    }
}

/// Whether selecting `base` satisfies implication constraint `c` for `dep`.
pub fn satisfies_dependency(c: Constraint, dep: &Argument, base: &Argument) -> bool {
    if dep.predicate != base.predicate || !is_dependent(c, dep) || base.label != *dep.label.base() {
        return false;
    }
    match c {
        Constraint::C3 => true,
        Constraint::C4 => base.span.start < dep.span.start,
        _ => false,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub constraint: Constraint,
    /// Candidate indices involved: a pair for pairwise constraints, the
    /// dependent alone for c3/c4.
    pub candidates: Vec<usize>,
    pub mode: ConstraintMode,
}

impl Violation {
    pub fn penalty(&self) -> f64 {
        match self.mode {
            ConstraintMode::Soft(p) => p,
            ConstraintMode::Hard => f64::INFINITY,
            ConstraintMode::Off => 0.0,
        }
    }
}

/// Lists every violated active constraint in `selected`, soft ones included.
pub fn audit_selection(selected: &[usize], candidates: &[Candidate], cs: &ConstraintSet) -> Vec<Violation> {
    let mut out = Vec::new();
    for (c, mode) in cs.active() {
        if c.is_pairwise() {
            for (x, &i) in selected.iter().enumerate() {
                for &j in &selected[x + 1..] {
                    if pair_conflicts(c, &candidates[i].argument, &candidates[j].argument) {
                        out.push(Violation { constraint: c, candidates: vec![i, j], mode });
                    }
                }
            }
        } else {
            for &i in selected {
                let dep = &candidates[i].argument;
                if !is_dependent(c, dep) {
                    continue;
                }
                let ok = selected
                    .iter()
                    .any(|&j| j != i && satisfies_dependency(c, dep, &candidates[j].argument));
                if !ok {
                    out.push(Violation { constraint: c, candidates: vec![i], mode });
                }
            }
        }
    }
    out
}

fn check_membership(solution: &Solution, candidates: &[Candidate], sentence: &Sentence) -> Result<(), ModelError> {
    if solution.sentence != sentence.id {
        return Err(ModelError::Structural(format!(
            "solution for sentence {} checked against sentence {}",
            solution.sentence, sentence.id
        )));
    }
    for &i in &solution.selected {
        let cand = candidates
            .get(i)
            .ok_or_else(|| ModelError::Structural(format!("candidate index {i} out of range")))?;
        if cand.sentence != sentence.id {
            return Err(ModelError::Structural(format!(
                "candidate {i} belongs to sentence {}, not {}",
                cand.sentence, sentence.id
            )));
        }
        if cand.argument.predicate >= sentence.predicates.len() || cand.argument.span.end >= sentence.len() {
            return Err(ModelError::Structural(format!("candidate {i} out of sentence bounds")));
        }
    }
    Ok(())
}

/// Hard-constraint violations of a solution. An empty list means the
/// solution is consistent; soft violations are reported by [`audit`].
pub fn validate(
    solution: &Solution,
    candidates: &[Candidate],
    cs: &ConstraintSet,
    sentence: &Sentence,
) -> Result<Vec<Violation>, ModelError> {
    check_membership(solution, candidates, sentence)?;
    Ok(audit_selection(&solution.selected, candidates, &cs.hard_only()))
}

/// All violations, with soft ones carrying their penalty.
pub fn audit(
    solution: &Solution,
    candidates: &[Candidate],
    cs: &ConstraintSet,
    sentence: &Sentence,
) -> Result<Vec<Violation>, ModelError> {
    check_membership(solution, candidates, sentence)?;
    Ok(audit_selection(&solution.selected, candidates, cs))
}
