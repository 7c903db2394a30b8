//! Binary features for candidate scoring, in six groups:
//!
//! * FS1 voting: label, number and ids of systems proposing the exact
//!   argument, and each voter's argument sequence for the predicate.
//! * FS2 same-predicate overlap and FS3 other-predicate overlap: number and
//!   ids of systems proposing an argument with the same span but another
//!   label, an included argument, a containing argument, or a crossing one.
//! * FS4 partial syntax: chunk and clause structure of the argument and of
//!   the stretch between argument and predicate.
//! * FS5 full syntax: constituent label, tree path to the predicate and
//!   generalizations of it, clause/VP counts, subsumption, governing
//!   category and surface distance.
//! * FS6 probabilities: each system's probability discretized into one of
//!   five intervals, or `none`.
//!
//! Features are interned strings `group:name=value`. Counts of 5 and above
//! collapse into `5+`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::RwLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::calibrate::{discretize, IntervalTable};
use crate::corpus_io::clause_spans;
use crate::model::{span_relation, ParseNode, Sentence, Span, SpanRelation};
use crate::pool::{CandidatePool, PoolSentence};

/// Sorted set of feature ids: a sparse binary vector.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(Vec<u32>);

impl FeatureVector {
    pub fn from_ids(ids: impl IntoIterator<Item = u32>) -> Self {
        let mut v: Vec<u32> = ids.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        FeatureVector(v)
    }

    pub fn ids(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of shared features.
    pub fn dot(&self, other: &FeatureVector) -> usize {
        let (a, b) = (&self.0, &other.0);
        let (mut i, mut j, mut n) = (0, 0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureGroup {
    Voting,
    SamePredicate,
    OtherPredicate,
    PartialSyntax,
    FullSyntax,
    Probabilities,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 6] = [
        FeatureGroup::Voting,
        FeatureGroup::SamePredicate,
        FeatureGroup::OtherPredicate,
        FeatureGroup::PartialSyntax,
        FeatureGroup::FullSyntax,
        FeatureGroup::Probabilities,
    ];
}

impl fmt::Display for FeatureGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FS{}", *self as usize + 1)
    }
}

impl FromStr for FeatureGroup {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let n: usize = s
            .trim()
            .to_ascii_uppercase()
            .strip_prefix("FS")
            .and_then(|d| d.parse().ok())
            .ok_or_else(|| format!("unknown feature group `{s}`"))?;
        FeatureGroup::ALL.get(n.wrapping_sub(1)).copied().ok_or_else(|| format!("unknown feature group `{s}`"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub groups: BTreeSet<FeatureGroup>,
    /// Sequences longer than this are represented by their first and last
    /// `ngram_cap` elements.
    pub ngram_cap: usize,
    /// Tree paths with more elements than this are also generalized.
    pub path_threshold: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig { groups: FeatureGroup::ALL.into_iter().collect(), ngram_cap: 10, path_threshold: 3 }
    }
}

impl FeatureConfig {
    /// Groups FS1..FSk.
    pub fn cumulative(k: usize) -> Self {
        FeatureConfig { groups: FeatureGroup::ALL[..k.clamp(1, 6)].iter().copied().collect(), ..Default::default() }
    }

    pub fn has(&self, g: FeatureGroup) -> bool {
        self.groups.contains(&g)
    }

    /// Parses `FS1,FS2,FS5` or the cumulative shorthand `FS1..FS4`.
    pub fn parse_groups(spec: &str) -> Result<BTreeSet<FeatureGroup>, String> {
        let mut out = BTreeSet::new();
        for part in spec.split(',') {
            if let Some((a, b)) = part.split_once("..") {
                let (a, b): (FeatureGroup, FeatureGroup) = (a.parse()?, b.parse()?);
                out.extend(FeatureGroup::ALL.into_iter().filter(|g| *g >= a && *g <= b));
            } else {
                out.insert(part.parse()?);
            }
        }
        if out.is_empty() {
            return Err("empty feature group set".into());
        }
        Ok(out)
    }

    pub fn tag(&self) -> String {
        let groups: Vec<String> = self.groups.iter().map(|g| g.to_string()).collect();
        format!("{} ngram={} path={}", groups.join(","), self.ngram_cap, self.path_threshold)
    }

    pub fn from_tag(tag: &str) -> Result<Self, String> {
        let mut parts = tag.split_whitespace();
        let groups = Self::parse_groups(parts.next().ok_or("empty feature tag")?)?;
        let mut cfg = FeatureConfig { groups, ..Default::default() };
        for p in parts {
            match p.split_once('=') {
                Some(("ngram", v)) => cfg.ngram_cap = v.parse().map_err(|_| format!("bad ngram `{v}`"))?,
                Some(("path", v)) => cfg.path_threshold = v.parse().map_err(|_| format!("bad path `{v}`"))?,
                _ => return Err(format!("bad feature tag item `{p}`")),
            }
        }
        Ok(cfg)
    }
}

#[derive(Default)]
struct VocabInner {
    ids: HashMap<String, u32>,
    names: Vec<String>,
}

/// Feature-string registry. Interning is lock-protected; a frozen
/// vocabulary ignores unknown strings.
#[derive(Default)]
pub struct Vocabulary {
    inner: RwLock<VocabInner>,
    frozen: bool,
}

impl Vocabulary {
    pub fn new() -> Self {
        Vocabulary::default()
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn len(&self) -> usize {
        self.inner.read().unwrap().names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.inner.read().unwrap().ids.get(name).copied()
    }

    pub fn name(&self, id: u32) -> Option<String> {
        self.inner.read().unwrap().names.get(id as usize).cloned()
    }

    pub fn intern(&self, name: &str) -> Option<u32> {
        if let Some(id) = self.get(name) {
            return Some(id);
        }
        if self.frozen {
            return None;
        }
        let mut inner = self.inner.write().unwrap();
        if let Some(&id) = inner.ids.get(name) {
            return Some(id);
        }
        let id = inner.names.len() as u32;
        inner.names.push(name.to_string());
        inner.ids.insert(name.to_string(), id);
        Some(id)
    }

    pub fn vector(&self, names: &[String]) -> FeatureVector {
        FeatureVector::from_ids(names.iter().filter_map(|n| self.intern(n)))
    }

    /// `id<TAB>feature` lines in id order.
    pub fn dump(&self) -> String {
        let inner = self.inner.read().unwrap();
        let mut out = String::new();
        for (i, n) in inner.names.iter().enumerate() {
            out.push_str(&format!("{i}\t{n}\n"));
        }
        out
    }

    /// Loads a dump as a frozen vocabulary.
    pub fn from_dump(text: &str) -> Result<Self, String> {
        let mut inner = VocabInner::default();
        for (ln, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let (id, name) = line.split_once('\t').ok_or_else(|| format!("line {}: missing tab", ln + 1))?;
            let id: u32 = id.parse().map_err(|_| format!("line {}: bad id", ln + 1))?;
            if id as usize != inner.names.len() {
                return Err(format!("line {}: ids must be dense and ordered", ln + 1));
            }
            inner.ids.insert(name.to_string(), id);
            inner.names.push(name.to_string());
        }
        Ok(Vocabulary { inner: RwLock::new(inner), frozen: true })
    }

    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.dump().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn bucket(n: usize) -> String {
    if n >= 5 {
        "5+".to_string()
    } else {
        n.to_string()
    }
}

fn signed_bucket(d: i64) -> String {
    match d {
        d if d >= 5 => "5+".into(),
        d if d <= -5 => "-5+".into(),
        d => d.to_string(),
    }
}

fn seq_features(out: &mut Vec<String>, name: &str, tags: &[&str], cap: usize) {
    if tags.len() > cap {
        out.push(format!("{name}_start={}", tags[..cap].join("-")));
        out.push(format!("{name}_end={}", tags[tags.len() - cap..].join("-")));
    } else if tags.is_empty() {
        out.push(format!("{name}=none"));
    } else {
        out.push(format!("{name}={}", tags.join("-")));
    }
}

struct Unit {
    tag: String,
    span: Span,
}

struct TreeNode {
    label: String,
    span: Span,
    parent: Option<usize>,
    depth: usize,
}

/// Parse tree flattened into an arena, with one POS leaf per token.
struct Tree {
    nodes: Vec<TreeNode>,
    leaf: Vec<usize>,
}

impl Tree {
    fn build(root: &ParseNode, sentence: &Sentence) -> Tree {
        fn add(n: &ParseNode, parent: Option<usize>, depth: usize, nodes: &mut Vec<TreeNode>, kids: &mut Vec<Vec<usize>>) -> usize {
            let id = nodes.len();
            nodes.push(TreeNode { label: n.label.clone(), span: n.span, parent, depth });
            kids.push(Vec::new());
            for c in &n.children {
                let cid = add(c, Some(id), depth + 1, nodes, kids);
                kids[id].push(cid);
            }
            id
        }
        let mut nodes = Vec::new();
        let mut kids = Vec::new();
        add(root, None, 0, &mut nodes, &mut kids);
        let mut leaf = Vec::with_capacity(sentence.len());
        for (t, tok) in sentence.tokens.iter().enumerate() {
            let mut parent = None;
            if nodes[0].span.contains_token(t) {
                let mut cur = 0;
                while let Some(&c) = kids[cur].iter().find(|&&c| nodes[c].span.contains_token(t)) {
                    cur = c;
                }
                parent = Some(cur);
            }
            let depth = parent.map_or(0, |p| nodes[p].depth + 1);
            leaf.push(nodes.len());
            nodes.push(TreeNode { label: tok.pos.clone(), span: Span::single(t), parent, depth });
        }
        Tree { nodes, leaf }
    }

    /// Exact-span node (topmost of a unary chain), else the widest node
    /// inside the span sharing its left boundary.
    fn map_span(&self, span: Span) -> usize {
        let best = |pred: &dyn Fn(&TreeNode) -> bool| {
            self.nodes
                .iter()
                .enumerate()
                .filter(|(_, n)| pred(n))
                .min_by(|(_, a), (_, b)| b.span.end.cmp(&a.span.end).then(a.depth.cmp(&b.depth)))
                .map(|(i, _)| i)
        };
        best(&|n: &TreeNode| n.span == span)
            .or_else(|| best(&|n: &TreeNode| n.span.start == span.start && n.span.end <= span.end))
            .unwrap_or(self.leaf[span.start])
    }

    fn ancestors(&self, mut id: usize) -> Vec<usize> {
        let mut out = vec![id];
        while let Some(p) = self.nodes[id].parent {
            out.push(p);
            id = p;
        }
        out
    }
}

fn is_clause_label(l: &str) -> bool {
    l.starts_with('S')
}

/// Per-sentence data shared by all of its candidates.
struct Context<'a> {
    pool_sentence: &'a PoolSentence,
    system_ids: &'a [String],
    sentence: &'a Sentence,
    units: Vec<Unit>,
    clauses: Vec<Span>,
    entities: Vec<(String, Span)>,
    tree: Option<Tree>,
    /// Argument sequence per (predicate, system).
    sequences: Vec<Vec<String>>,
}

impl<'a> Context<'a> {
    fn new(pool_sentence: &'a PoolSentence, system_ids: &'a [String], sentence: &'a Sentence) -> Self {
        let mut units: Vec<Unit> = Vec::new();
        for (t, tok) in sentence.tokens.iter().enumerate() {
            if let Some(ty) = tok.chunk.strip_prefix("B-") {
                units.push(Unit { tag: ty.to_string(), span: Span::single(t) });
            } else if tok.chunk.starts_with("I-") && units.last().is_some_and(|u| u.span.end + 1 == t) {
                units.last_mut().unwrap().span.end = t;
            } else {
                units.push(Unit { tag: tok.pos.clone(), span: Span::single(t) });
            }
        }
        let entities = crate::corpus_io::chunk_spans(&sentence.tokens, |t| &t.ne)
            .into_iter()
            .map(|(ty, s)| (ty.to_string(), s))
            .collect();
        let m = system_ids.len();
        let mut sequences = Vec::with_capacity(pool_sentence.predicates.len());
        for (pi, p) in pool_sentence.predicates.iter().enumerate() {
            let mut per_sys = Vec::with_capacity(m);
            for j in 0..m {
                let mut items: Vec<(usize, String)> = vec![(p.position, "V".to_string())];
                for c in &pool_sentence.candidates {
                    if c.argument.predicate == pi && c.votes.contains(&j) {
                        items.push((c.argument.span.start, c.argument.label.to_string()));
                    }
                }
                items.sort();
                per_sys.push(items.into_iter().map(|(_, l)| l).collect::<Vec<_>>().join("-"));
            }
            sequences.push(per_sys);
        }
        Context {
            pool_sentence,
            system_ids,
            sentence,
            units,
            clauses: clause_spans(&sentence.tokens),
            entities,
            tree: sentence.parse.as_ref().map(|r| Tree::build(r, sentence)),
            sequences,
        }
    }

    fn clause_depth(&self, span: Span) -> i64 {
        self.clauses.iter().filter(|c| c.contains(&span)).count() as i64
    }

    fn gap(&self, arg: Span, pred: usize) -> Option<Span> {
        if arg.end < pred && arg.end + 1 < pred {
            Some(Span::new(arg.end + 1, pred - 1))
        } else if arg.start > pred + 1 {
            Some(Span::new(pred + 1, arg.start - 1))
        } else {
            None
        }
    }

    fn clause_tags(&self, span: Option<Span>) -> String {
        let Some(span) = span else { return "none".into() };
        let tags: Vec<String> = (span.start..=span.end)
            .map(|t| self.sentence.tokens[t].clause.replace('*', ""))
            .filter(|s| !s.is_empty())
            .collect();
        if tags.is_empty() {
            "none".into()
        } else {
            tags.join("_")
        }
    }

    fn extract(&self, ci: usize, intervals: &IntervalTable, cfg: &FeatureConfig) -> Vec<String> {
        let mut f = Vec::new();
        if cfg.has(FeatureGroup::Voting) {
            self.voting(ci, &mut f);
        }
        if cfg.has(FeatureGroup::SamePredicate) {
            self.overlap(ci, true, &mut f);
        }
        if cfg.has(FeatureGroup::OtherPredicate) {
            self.overlap(ci, false, &mut f);
        }
        if cfg.has(FeatureGroup::PartialSyntax) {
            self.partial_syntax(ci, cfg, &mut f);
        }
        if cfg.has(FeatureGroup::FullSyntax) {
            self.full_syntax(ci, cfg, &mut f);
        }
        if cfg.has(FeatureGroup::Probabilities) {
            let c = &self.pool_sentence.candidates[ci];
            for (j, id) in self.system_ids.iter().enumerate() {
                let p = c.probs.get(j).copied().flatten();
                match discretize(p, j, &c.argument.label, intervals) {
                    Some(k) => f.push(format!("fs6:{id}=i{k}")),
                    None => f.push(format!("fs6:{id}=none")),
                }
            }
        }
        f
    }

    fn voting(&self, ci: usize, f: &mut Vec<String>) {
        let c = &self.pool_sentence.candidates[ci];
        f.push(format!("fs1:label={}", c.argument.label));
        f.push(format!("fs1:numsys={}", bucket(c.vote_count())));
        for &j in &c.votes {
            let id = &self.system_ids[j];
            f.push(format!("fs1:sys={id}"));
            f.push(format!("fs1:seq:{id}={}", self.sequences[c.argument.predicate][j]));
        }
    }

    fn overlap(&self, ci: usize, same_predicate: bool, f: &mut Vec<String>) {
        let c = &self.pool_sentence.candidates[ci];
        let group = if same_predicate { "fs2" } else { "fs3" };
        let mut sets: [BTreeSet<usize>; 4] = Default::default();
        for (oi, o) in self.pool_sentence.candidates.iter().enumerate() {
            if oi == ci || (o.argument.predicate == c.argument.predicate) != same_predicate {
                continue;
            }
            let slot = match span_relation(c.argument.span, o.argument.span) {
                SpanRelation::Equal if o.argument.label != c.argument.label => 0,
                SpanRelation::AContainsB => 1,
                SpanRelation::BContainsA => 2,
                SpanRelation::Crossing => 3,
                _ => continue,
            };
            sets[slot].extend(o.votes.iter().copied());
        }
        for (name, set) in ["samespan", "included", "containing", "crossing"].iter().zip(&sets) {
            f.push(format!("{group}:{name}_n={}", bucket(set.len())));
            for &j in set {
                f.push(format!("{group}:{name}_sys={}", self.system_ids[j]));
            }
        }
    }

    fn partial_syntax(&self, ci: usize, cfg: &FeatureConfig, f: &mut Vec<String>) {
        let c = &self.pool_sentence.candidates[ci];
        let span = c.argument.span;
        let pred = self.pool_sentence.predicates[c.argument.predicate].position;
        let inside: Vec<&str> = self.units.iter().filter(|u| u.span.intersects(&span)).map(|u| u.tag.as_str()).collect();
        f.push(format!("fs4:toklen={}", bucket(span.len())));
        f.push(format!("fs4:chunklen={}", bucket(inside.len())));
        seq_features(f, "fs4:chunkseq", &inside, cfg.ngram_cap);
        f.push(format!("fs4:clauseseq={}", self.clause_tags(Some(span))));
        let mut nes: BTreeSet<&str> = BTreeSet::new();
        for (ty, s) in &self.entities {
            if span.intersects(s) {
                nes.insert(ty);
            }
        }
        if nes.is_empty() {
            f.push("fs4:ne=none".into());
        }
        for ty in nes {
            f.push(format!("fs4:ne={ty}"));
        }
        let position = if span.end < pred {
            "before"
        } else if span.start > pred {
            "after"
        } else {
            "overlap"
        };
        f.push(format!("fs4:position={position}"));
        let gap = self.gap(span, pred);
        let between: Vec<&str> = match gap {
            Some(g) => self
                .units
                .iter()
                .filter(|u| g.contains(&u.span) && !u.span.contains_token(pred))
                .map(|u| u.tag.as_str())
                .collect(),
            None => Vec::new(),
        };
        f.push(format!("fs4:adjacent={}", between.is_empty() && position != "overlap"));
        seq_features(f, "fs4:between", &between, cfg.ngram_cap);
        f.push(format!("fs4:between_n={}", bucket(between.len())));
        f.push(format!("fs4:between_clauses={}", self.clause_tags(gap)));
        let sub = self.clause_depth(span) - self.clause_depth(Span::single(pred));
        f.push(format!("fs4:clause_sub={}", signed_bucket(sub)));
    }

    fn full_syntax(&self, ci: usize, cfg: &FeatureConfig, f: &mut Vec<String>) {
        let Some(tree) = &self.tree else {
            f.push("fs5:parse_absent".into());
            return;
        };
        let c = &self.pool_sentence.candidates[ci];
        let span = c.argument.span;
        let pred = self.pool_sentence.predicates[c.argument.predicate].position;
        let a = tree.map_span(span);
        let p = tree.leaf[pred];
        let node = |i: usize| &tree.nodes[i];
        f.push(format!("fs5:label={}", node(a).label));

        let up = tree.ancestors(a);
        let down = tree.ancestors(p);
        if let Some(lca_pos) = up.iter().position(|x| down.contains(x)) {
            let lca = up[lca_pos];
            let asc: Vec<&str> = up[..lca_pos].iter().map(|&i| node(i).label.as_str()).collect();
            let dpos = down.iter().position(|&x| x == lca).unwrap();
            let desc: Vec<&str> = down[..dpos].iter().rev().map(|&i| node(i).label.as_str()).collect();
            let anc = node(lca).label.as_str();
            let mut path = String::new();
            for l in &asc {
                path.push_str(l);
                path.push('↑');
            }
            path.push_str(anc);
            for l in &desc {
                path.push('↓');
                path.push_str(l);
            }
            let elements = asc.len() + 1 + desc.len();
            f.push(format!("fs5:path={path}"));
            f.push(format!("fs5:pathlen={}", bucket(elements)));
            let count = |ls: &[&str], pred: fn(&str) -> bool| ls.iter().filter(|l| pred(l)).count();
            let clause_asc = count(&asc, is_clause_label);
            let clause_desc = count(&desc, is_clause_label);
            let vp = |l: &str| l == "VP";
            let vp_asc = count(&asc, vp);
            let vp_desc = count(&desc, vp);
            f.push(format!("fs5:clauses={}", bucket(clause_asc + clause_desc + usize::from(is_clause_label(anc)))));
            f.push(format!("fs5:clauses_up={}", bucket(clause_asc)));
            f.push(format!("fs5:clauses_down={}", bucket(clause_desc)));
            f.push(format!("fs5:vps={}", bucket(vp_asc + vp_desc + usize::from(anc == "VP"))));
            f.push(format!("fs5:vps_up={}", bucket(vp_asc)));
            f.push(format!("fs5:vps_down={}", bucket(vp_desc)));
            if elements > cfg.path_threshold {
                let arg_label = asc.first().copied().unwrap_or(anc);
                let pred_label = desc.last().copied().unwrap_or(anc);
                if desc.len() > 1 {
                    for ni in &desc[..desc.len() - 1] {
                        f.push(format!("fs5:gpath_a={arg_label}↑{anc}↓{ni}↓{pred_label}"));
                    }
                }
                if asc.len() > 1 {
                    for ni in &asc[1..] {
                        f.push(format!("fs5:gpath_b={arg_label}↑{ni}↑{anc}↓{pred_label}"));
                    }
                }
            }
        } else {
            f.push("fs5:path=none".into());
        }
        let sub = node(a).depth as i64 - node(p).depth as i64;
        f.push(format!("fs5:subsumption={}", signed_bucket(sub)));
        let mut gov = "none";
        let mut cur = node(a).parent;
        while let Some(i) = cur {
            let l = node(i).label.as_str();
            if is_clause_label(l) {
                gov = "S";
                break;
            }
            if l == "VP" {
                gov = "VP";
                break;
            }
            cur = node(i).parent;
        }
        f.push(format!("fs5:gov={gov}"));

        let gap = self.gap(span, pred);
        let toks = gap.map_or(&[][..], |g| &self.sentence.tokens[g.start..=g.end]);
        let vb = toks.iter().filter(|t| t.pos.starts_with("VB")).count();
        let commas = toks.iter().filter(|t| t.pos == "," || t.form == ",").count();
        let cc = toks.iter().filter(|t| t.pos == "CC").count();
        f.push(format!("fs5:dist_tok={}", bucket(toks.len())));
        f.push(format!("fs5:dist_vb={}", bucket(vb)));
        f.push(format!("fs5:dist_comma={}", bucket(commas)));
        f.push(format!("fs5:dist_cc={}", bucket(cc)));
        f.push(format!("fs5:dist_adjacent={}", toks.is_empty()));
    }
}

/// Feature strings of candidate `ci` of `pool_sentence`.
pub fn extract_strings(
    pool_sentence: &PoolSentence,
    system_ids: &[String],
    ci: usize,
    sentence: &Sentence,
    intervals: &IntervalTable,
    cfg: &FeatureConfig,
) -> Vec<String> {
    Context::new(pool_sentence, system_ids, sentence).extract(ci, intervals, cfg)
}

pub fn extract(
    pool_sentence: &PoolSentence,
    system_ids: &[String],
    ci: usize,
    sentence: &Sentence,
    intervals: &IntervalTable,
    cfg: &FeatureConfig,
    vocab: &Vocabulary,
) -> FeatureVector {
    vocab.vector(&extract_strings(pool_sentence, system_ids, ci, sentence, intervals, cfg))
}

/// Fills `features` on every pooled candidate. Strings are computed in
/// parallel; interning runs in corpus order so ids do not depend on thread
/// scheduling.
pub fn extract_pool(
    pool: &mut CandidatePool,
    sentences: &[Sentence],
    intervals: &IntervalTable,
    cfg: &FeatureConfig,
    vocab: &Vocabulary,
) {
    assert_eq!(pool.sentences.len(), sentences.len(), "pool and syntax sentence counts differ");
    let strings: Vec<Vec<Vec<String>>> = pool
        .sentences
        .par_iter()
        .zip(sentences.par_iter())
        .map(|(ps, s)| {
            let ctx = Context::new(ps, &pool.system_ids, s);
            (0..ps.candidates.len()).map(|ci| ctx.extract(ci, intervals, cfg)).collect()
        })
        .collect();
    for (ps, per_sentence) in pool.sentences.iter_mut().zip(strings) {
        for (c, names) in ps.candidates.iter_mut().zip(per_sentence) {
            c.features = Some(vocab.vector(&names));
        }
    }
}
