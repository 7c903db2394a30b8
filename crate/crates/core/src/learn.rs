//! Candidate scorers: per-label kernel SVMs (SMO), local kernel
//! Perceptrons, and the global averaged kernel Perceptron trained through
//! inference.
//!
//! All scorers share one dual representation: for each label, a list of
//! support vectors with a coefficient, scored with the polynomial kernel
//! `(u.v + 1)^d`. Perceptron supports also carry the running sum needed for
//! averaging. The averaging clock advances once per processed example: if an
//! update made while processing example `t` (1-based) adds `delta` to a
//! coefficient, the support accumulates `t * delta`, and after `T` examples
//! the coefficient averaged over the `T` parameter states is
//! `((T + 1) c - s) / T`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibrate::{Cuts, IntervalTable};
use crate::eval_oracle::{gold_props, score, solutions_to_props};
use crate::features::{FeatureConfig, FeatureVector};
use crate::infer_cs::{CsError, Scope};
use crate::infer_dp::{dp_by_predicate, dp_sentence};
use crate::model::{RoleLabel, Solution};
use crate::pool::{CandidatePool, PoolSentence};

pub const DEFAULT_DEGREE: u32 = 2;
pub const DEFAULT_EPOCHS: usize = 5;
pub const DEFAULT_SVM_C: f64 = 1.0;
pub const DEFAULT_SVM_TOLERANCE: f64 = 1e-3;
pub const MODEL_HEADER: &str = "SRLCOMB-MODEL v1";

#[derive(Debug, Error, PartialEq)]
pub enum LearnError {
    #[error("model file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("vocabulary fingerprint {found} does not match the model's {expected}")]
    FeatureMismatch { expected: String, found: String },
    #[error("candidate {candidate} of sentence {sentence} has no features")]
    MissingFeatures { sentence: usize, candidate: usize },
    #[error("training pool has no gold alignment")]
    NotAligned,
    #[error("kernel degree must be at least 1")]
    Degree,
    #[error(transparent)]
    Inference(#[from] CsError),
}

pub fn kernel(u: &FeatureVector, v: &FeatureVector, degree: u32) -> f64 {
    ((u.dot(v) + 1) as f64).powi(degree as i32)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Predictor {
    /// Latest parameters, used while training.
    Final,
    /// Average over all parameter states, used at test time.
    Averaged,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Support {
    pub vector: FeatureVector,
    pub coef: f64,
    /// Sum of `t * delta` over the updates that touched this support, `t`
    /// being the averaging clock.
    pub weighted: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LabelModel {
    pub bias: f64,
    pub bias_weighted: f64,
    pub supports: Vec<Support>,
    /// Trained on a single class; scores are the constant bias.
    pub degenerate: bool,
    index: HashMap<FeatureVector, usize>,
    inverted: HashMap<u32, Vec<u32>>,
    coef_sum: f64,
    weighted_sum: f64,
}

impl LabelModel {
    fn add(&mut self, x: &FeatureVector, delta: f64, t: f64) {
        let k = match self.index.get(x) {
            Some(&k) => k,
            None => {
                let k = self.supports.len();
                self.supports.push(Support { vector: x.clone(), coef: 0.0, weighted: 0.0 });
                self.index.insert(x.clone(), k);
                for &f in x.ids() {
                    self.inverted.entry(f).or_default().push(k as u32);
                }
                k
            }
        };
        self.supports[k].coef += delta;
        self.supports[k].weighted += t * delta;
        self.coef_sum += delta;
        self.weighted_sum += t * delta;
    }

    fn rebuild(&mut self) {
        self.index.clear();
        self.inverted.clear();
        self.coef_sum = 0.0;
        self.weighted_sum = 0.0;
        for (k, s) in self.supports.iter().enumerate() {
            self.index.insert(s.vector.clone(), k);
            for &f in s.vector.ids() {
                self.inverted.entry(f).or_default().push(k as u32);
            }
            self.coef_sum += s.coef;
            self.weighted_sum += s.weighted;
        }
    }

    /// `(sum_s c_s K(s, x), sum_s w_s K(s, x))`.
    fn expansions(&self, x: &FeatureVector, degree: u32) -> (f64, f64) {
        let mut shared: HashMap<u32, u32> = HashMap::new();
        for f in x.ids() {
            if let Some(list) = self.inverted.get(f) {
                for &k in list {
                    *shared.entry(k).or_insert(0) += 1;
                }
            }
        }
        let (mut a, mut b) = (self.coef_sum, self.weighted_sum);
        let mut touched: Vec<(u32, u32)> = shared.into_iter().collect();
        touched.sort_unstable();
        for (k, n) in touched {
            let s = &self.supports[k as usize];
            let extra = ((n + 1) as f64).powi(degree as i32) - 1.0;
            a += s.coef * extra;
            b += s.weighted * extra;
        }
        (a, b)
    }

    fn score(&self, x: &FeatureVector, degree: u32, steps: u64, predictor: Predictor) -> f64 {
        let (a, b) = self.expansions(x, degree);
        match predictor {
            Predictor::Averaged if steps > 0 => {
                let u = steps as f64;
                ((u + 1.0) * a - b) / u + ((u + 1.0) * self.bias - self.bias_weighted) / u
            }
            _ => a + self.bias,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    Svm,
    LocalPerceptron,
    GlobalPerceptron,
}

impl ModelKind {
    fn name(self) -> &'static str {
        match self {
            ModelKind::Svm => "svm",
            ModelKind::LocalPerceptron => "local-perceptron",
            ModelKind::GlobalPerceptron => "global-perceptron",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        match s {
            "svm" => Some(ModelKind::Svm),
            "local-perceptron" => Some(ModelKind::LocalPerceptron),
            "global-perceptron" => Some(ModelKind::GlobalPerceptron),
            _ => None,
        }
    }
}

/// Per-label dual scorers plus what is needed to rebuild features at test
/// time.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreModel {
    pub kind: ModelKind,
    pub degree: u32,
    /// Total number of Perceptron updates (0 for SVMs).
    pub updates: u64,
    /// Parameter states averaged over: examples processed so far.
    pub steps: u64,
    pub labels: BTreeMap<RoleLabel, LabelModel>,
    pub feature_tag: String,
    pub vocab_fingerprint: String,
    pub system_ids: Vec<String>,
    pub gamma: f64,
    pub intervals: IntervalTable,
}

impl ScoreModel {
    pub fn new(kind: ModelKind, degree: u32) -> Result<Self, LearnError> {
        if degree == 0 {
            return Err(LearnError::Degree);
        }
        Ok(ScoreModel {
            kind,
            degree,
            updates: 0,
            steps: 0,
            labels: BTreeMap::new(),
            feature_tag: FeatureConfig::default().tag(),
            vocab_fingerprint: String::new(),
            system_ids: Vec::new(),
            gamma: crate::calibrate::DEFAULT_GAMMA,
            intervals: IntervalTable::default(),
        })
    }

    /// Signed confidence; labels the model never saw score 0.
    pub fn score(&self, label: &RoleLabel, x: &FeatureVector, predictor: Predictor) -> f64 {
        self.labels.get(label).map_or(0.0, |m| m.score(x, self.degree, self.steps, predictor))
    }

    /// Applies one Perceptron update of `delta` (±1) on `x` for `label`
    /// within the current example.
    pub fn update(&mut self, label: &RoleLabel, x: &FeatureVector, delta: f64) {
        self.updates += 1;
        let t = (self.steps + 1) as f64;
        self.labels.entry(label.clone()).or_default().add(x, delta, t);
    }

    /// Closes the current example: its parameter state joins the average.
    pub fn tick(&mut self) {
        self.steps += 1;
    }

    pub fn n_supports(&self) -> usize {
        self.labels.values().map(|m| m.supports.len()).sum()
    }

    pub fn save(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{MODEL_HEADER}");
        let _ = writeln!(out, "kind {}", self.kind.name());
        let _ = writeln!(out, "kernel-degree {}", self.degree);
        let _ = writeln!(out, "features {}", self.feature_tag);
        let _ = writeln!(out, "vocab {}", if self.vocab_fingerprint.is_empty() { "-" } else { &self.vocab_fingerprint });
        let _ = writeln!(out, "systems {}", if self.system_ids.is_empty() { "-".to_string() } else { self.system_ids.join(",") });
        let _ = writeln!(out, "gamma {}", self.gamma);
        let _ = writeln!(out, "updates {}", self.updates);
        let _ = writeln!(out, "steps {}", self.steps);
        let cuts = |c: &Cuts| format!("{} {} {} {} {}", c.points[0], c.points[1], c.points[2], c.points[3], u8::from(c.degenerate));
        for ((j, label), c) in &self.intervals.per_label {
            let _ = writeln!(out, "interval {j} {label} {}", cuts(c));
        }
        for (j, c) in &self.intervals.per_system {
            let _ = writeln!(out, "interval {j} * {}", cuts(c));
        }
        for (label, m) in &self.labels {
            let _ = writeln!(
                out,
                "label {label} bias {} {} degenerate {} rows {}",
                m.bias,
                m.bias_weighted,
                u8::from(m.degenerate),
                m.supports.len()
            );
            for s in &m.supports {
                let ids: Vec<String> = s.vector.ids().iter().map(|i| i.to_string()).collect();
                let ids = if ids.is_empty() { "-".to_string() } else { ids.join(",") };
                let _ = writeln!(out, "{} {} {ids}", s.coef, s.weighted);
            }
            let _ = writeln!(out, "end");
        }
        out
    }

    pub fn load(text: &str) -> Result<Self, LearnError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).peekable();
        let err = |line: usize, m: &str| LearnError::Format { line, message: m.to_string() };
        match lines.next() {
            Some((_, l)) if l == MODEL_HEADER => {}
            _ => return Err(err(1, "missing model header")),
        }
        let mut model = ScoreModel::new(ModelKind::GlobalPerceptron, DEFAULT_DEGREE)?;
        while let Some((ln, line)) = lines.next() {
            let (key, rest) = line.split_once(' ').unwrap_or((line, ""));
            let num = |s: &str| -> Result<f64, LearnError> {
                s.parse::<f64>().map_err(|_| err(ln, &format!("bad number `{s}`")))
            };
            match key {
                "kind" => model.kind = ModelKind::from_name(rest).ok_or_else(|| err(ln, "unknown model kind"))?,
                "kernel-degree" => {
                    model.degree = rest.parse().map_err(|_| err(ln, "bad kernel degree"))?;
                    if model.degree == 0 {
                        return Err(LearnError::Degree);
                    }
                }
                "features" => {
                    FeatureConfig::from_tag(rest).map_err(|e| err(ln, &e))?;
                    model.feature_tag = rest.to_string();
                }
                "vocab" => model.vocab_fingerprint = if rest == "-" { String::new() } else { rest.to_string() },
                "systems" => {
                    model.system_ids =
                        if rest == "-" { Vec::new() } else { rest.split(',').map(str::to_string).collect() }
                }
                "gamma" => model.gamma = num(rest)?,
                "updates" => model.updates = rest.parse().map_err(|_| err(ln, "bad update count"))?,
                "steps" => model.steps = rest.parse().map_err(|_| err(ln, "bad step count"))?,
                "interval" => {
                    let f: Vec<&str> = rest.split(' ').collect();
                    if f.len() != 7 {
                        return Err(err(ln, "interval needs system, label, four cuts and a flag"));
                    }
                    let j: usize = f[0].parse().map_err(|_| err(ln, "bad system index"))?;
                    let cuts = Cuts {
                        points: [num(f[2])?, num(f[3])?, num(f[4])?, num(f[5])?],
                        degenerate: f[6] == "1",
                    };
                    if f[1] == "*" {
                        model.intervals.per_system.insert(j, cuts);
                    } else {
                        let label: RoleLabel = f[1].parse().map_err(|_| err(ln, "bad label"))?;
                        model.intervals.per_label.insert((j, label), cuts);
                    }
                }
                "label" => {
                    let f: Vec<&str> = rest.split(' ').collect();
                    if f.len() != 8 || f[1] != "bias" || f[4] != "degenerate" || f[6] != "rows" {
                        return Err(err(ln, "malformed label block header"));
                    }
                    let label: RoleLabel = f[0].parse().map_err(|_| err(ln, "bad label"))?;
                    let rows: usize = f[7].parse().map_err(|_| err(ln, "bad row count"))?;
                    let mut m = LabelModel { bias: num(f[2])?, bias_weighted: num(f[3])?, degenerate: f[5] == "1", ..Default::default() };
                    for _ in 0..rows {
                        let (rl, row) = lines.next().ok_or_else(|| err(ln, "truncated label block"))?;
                        let parts: Vec<&str> = row.split(' ').collect();
                        if parts.len() != 3 {
                            return Err(err(rl, "support rows need coefficient, sum and feature ids"));
                        }
                        let ids: Vec<u32> = if parts[2] == "-" {
                            Vec::new()
                        } else {
                            parts[2]
                                .split(',')
                                .map(|s| s.parse().map_err(|_| err(rl, "bad feature id")))
                                .collect::<Result<_, _>>()?
                        };
                        let coef = parts[0].parse().map_err(|_| err(rl, "bad coefficient"))?;
                        let weighted = parts[1].parse().map_err(|_| err(rl, "bad coefficient sum"))?;
                        m.supports.push(Support { vector: FeatureVector::from_ids(ids), coef, weighted });
                    }
                    match lines.next() {
                        Some((_, "end")) => {}
                        Some((l, _)) => return Err(err(l, "expected `end`")),
                        None => return Err(err(ln, "missing `end`")),
                    }
                    m.rebuild();
                    model.labels.insert(label, m);
                }
                "" => {}
                _ => return Err(err(ln, &format!("unknown key `{key}`"))),
            }
        }
        Ok(model)
    }

    pub fn check_vocabulary(&self, fingerprint: &str) -> Result<(), LearnError> {
        if !self.vocab_fingerprint.is_empty() && self.vocab_fingerprint != fingerprint {
            return Err(LearnError::FeatureMismatch {
                expected: self.vocab_fingerprint.clone(),
                found: fingerprint.to_string(),
            });
        }
        Ok(())
    }
}

/// Per-label binary data: feature vectors with their correctness.
pub type LocalDataset = BTreeMap<RoleLabel, Vec<(FeatureVector, bool)>>;

pub fn local_datasets(pool: &CandidatePool) -> Result<LocalDataset, LearnError> {
    let mut out = LocalDataset::new();
    for s in &pool.sentences {
        for (i, c) in s.candidates.iter().enumerate() {
            let x = c.features.clone().ok_or(LearnError::MissingFeatures { sentence: s.id, candidate: i })?;
            let gold = c.is_gold.ok_or(LearnError::NotAligned)?;
            out.entry(c.argument.label.clone()).or_default().push((x, gold));
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub degree: u32,
    pub c: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig { degree: DEFAULT_DEGREE, c: DEFAULT_SVM_C, tolerance: DEFAULT_SVM_TOLERANCE, max_iterations: 10_000_000 }
    }
}

/// Solution of one binary soft-margin dual problem.
#[derive(Clone, Debug, PartialEq)]
pub struct SvmSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    /// Dual objective `1/2 a'Qa - sum(a)` (minimized).
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Sequential minimal optimization with maximal-violating-pair selection
/// over a precomputed kernel matrix. `y` holds ±1.
pub fn smo(k: &[Vec<f64>], y: &[f64], cfg: &SvmConfig) -> SvmSolution {
    let n = y.len();
    let c = cfg.c;
    let q = |i: usize, j: usize| y[i] * y[j] * k[i][j];
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut iterations = 0;
    let mut converged = false;
    let up = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
    let low = |a: f64, yt: f64| (yt > 0.0 && a > 0.0) || (yt < 0.0 && a < c);
    while iterations < cfg.max_iterations {
        let mut i = usize::MAX;
        let mut gmax = f64::NEG_INFINITY;
        for t in 0..n {
            if up(alpha[t], y[t]) && -y[t] * grad[t] > gmax {
                gmax = -y[t] * grad[t];
                i = t;
            }
        }
        let mut j = usize::MAX;
        let mut gmin = f64::INFINITY;
        for t in 0..n {
            if low(alpha[t], y[t]) && -y[t] * grad[t] < gmin {
                gmin = -y[t] * grad[t];
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < cfg.tolerance {
            converged = true;
            break;
        }
        iterations += 1;
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = (q(i, i) + q(j, j) + 2.0 * q(i, j)).max(1e-12);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (q(i, i) + q(j, j) - 2.0 * q(i, j)).max(1e-12);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += q(t, i) * di + q(t, j) * dj;
        }
    }
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut free_sum) = (0usize, 0.0);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 { free_sum / free as f64 } else { (ub + lb) / 2.0 };
    let objective = (0..n).map(|t| alpha[t] * (grad[t] - 1.0)).sum::<f64>() / 2.0;
    SvmSolution { alpha, bias: -rho, objective, iterations, converged }
}

/// Per-label SVM training report.
#[derive(Clone, Debug, PartialEq)]
pub struct SvmLabelReport {
    pub label: RoleLabel,
    pub n: usize,
    pub n_support: usize,
    pub objective: f64,
    pub converged: bool,
    pub degenerate: bool,
}

pub fn train_local_svm(data: &LocalDataset, cfg: &SvmConfig) -> Result<(ScoreModel, Vec<SvmLabelReport>), LearnError> {
    let mut model = ScoreModel::new(ModelKind::Svm, cfg.degree)?;
    let mut reports = Vec::new();
    for (label, items) in data {
        let pos = items.iter().filter(|(_, g)| *g).count();
        let mut lm = LabelModel::default();
        if pos == 0 || pos == items.len() {
            lm.bias = if pos == 0 { -1.0 } else { 1.0 };
            lm.degenerate = true;
            reports.push(SvmLabelReport {
                label: label.clone(),
                n: items.len(),
                n_support: 0,
                objective: 0.0,
                converged: true,
                degenerate: true,
            });
            model.labels.insert(label.clone(), lm);
            continue;
        }
        let k: Vec<Vec<f64>> =
            items.par_iter().map(|(u, _)| items.iter().map(|(v, _)| kernel(u, v, cfg.degree)).collect()).collect();
        let y: Vec<f64> = items.iter().map(|(_, g)| if *g { 1.0 } else { -1.0 }).collect();
        let sol = smo(&k, &y, cfg);
        for (t, (x, _)) in items.iter().enumerate() {
            if sol.alpha[t] > 0.0 {
                lm.add(x, sol.alpha[t] * y[t], 0.0);
            }
        }
        lm.supports.retain(|s| s.coef != 0.0);
        lm.bias = sol.bias;
        lm.rebuild();
        reports.push(SvmLabelReport {
            label: label.clone(),
            n: items.len(),
            n_support: lm.supports.len(),
            objective: sol.objective,
            converged: sol.converged,
            degenerate: false,
        });
        model.labels.insert(label.clone(), lm);
    }
    Ok((model, reports))
}

/// Kernel Perceptron on each label's data: every sign error (score ≤ 0 for
/// a positive, ≥ 0 for a negative) adds the example with its sign.
pub fn train_local_perceptron(data: &LocalDataset, degree: u32, epochs: usize) -> Result<ScoreModel, LearnError> {
    let mut model = ScoreModel::new(ModelKind::LocalPerceptron, degree)?;
    for _ in 0..epochs {
        for (label, items) in data {
            for (x, gold) in items {
                let y = if *gold { 1.0 } else { -1.0 };
                if y * model.score(label, x, Predictor::Final) <= 0.0 {
                    model.update(label, x, y);
                }
                model.tick();
            }
        }
    }
    Ok(model)
}

/// Inference used inside global training and by the learned engine.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlobalInference {
    pub scope: Scope,
}

impl Default for GlobalInference {
    fn default() -> Self {
        GlobalInference { scope: Scope::PredByPred }
    }
}

impl GlobalInference {
    pub fn run(&self, sentence: &PoolSentence, confidences: &[f64]) -> Result<Solution, CsError> {
        match self.scope {
            Scope::PredByPred => Ok(dp_by_predicate(sentence.id, &sentence.candidates, confidences, true)),
            Scope::FullSentence => dp_sentence(sentence.id, &sentence.candidates, confidences),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerceptronConfig {
    pub degree: u32,
    pub epochs: usize,
    pub inference: GlobalInference,
    /// Shuffle example order each epoch with this seed; `None` keeps corpus
    /// order.
    pub shuffle_seed: Option<u64>,
}

impl Default for PerceptronConfig {
    fn default() -> Self {
        PerceptronConfig {
            degree: DEFAULT_DEGREE,
            epochs: DEFAULT_EPOCHS,
            inference: GlobalInference::default(),
            shuffle_seed: None,
        }
    }
}

/// Updates applied for one training example.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub epoch: usize,
    pub sentence: usize,
    pub promotions: usize,
    pub demotions: usize,
    /// |y \ ŷ| from the pre-update prediction.
    pub missed: usize,
    /// |ŷ \ y| from the pre-update prediction.
    pub excess: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub updates: usize,
    /// Training-set F1 of the current (final) parameters.
    pub train_f1: f64,
    /// Training-set F1 of the averaged parameters.
    pub train_f1_averaged: f64,
    /// Validation F1 of the averaged parameters.
    pub validation_f1: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct GlobalTraining {
    /// Model of the selected epoch.
    pub model: ScoreModel,
    pub best_epoch: usize,
    pub epochs: Vec<EpochStats>,
    pub ledger: Vec<LedgerEntry>,
}

fn confidences(model: &ScoreModel, s: &PoolSentence, predictor: Predictor) -> Result<Vec<f64>, LearnError> {
    s.candidates
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let x = c.features.as_ref().ok_or(LearnError::MissingFeatures { sentence: s.id, candidate: i })?;
            Ok(model.score(&c.argument.label, x, predictor))
        })
        .collect()
}

/// Signed confidence for every candidate of every sentence.
pub fn score_pool(
    model: &ScoreModel,
    pool: &CandidatePool,
    vocab_fingerprint: &str,
    predictor: Predictor,
) -> Result<Vec<Vec<f64>>, LearnError> {
    model.check_vocabulary(vocab_fingerprint)?;
    pool.sentences.par_iter().map(|s| confidences(model, s, predictor)).collect()
}

/// Runs the learned engine over a pool.
pub fn infer_pool(
    model: &ScoreModel,
    pool: &CandidatePool,
    inference: &GlobalInference,
    predictor: Predictor,
) -> Result<Vec<Solution>, LearnError> {
    pool.sentences
        .par_iter()
        .map(|s| {
            let conf = confidences(model, s, predictor)?;
            Ok(inference.run(s, &conf)?)
        })
        .collect()
}

fn pool_f1(model: &ScoreModel, pool: &CandidatePool, inference: &GlobalInference, predictor: Predictor) -> Result<f64, LearnError> {
    let sols = infer_pool(model, pool, inference, predictor)?;
    Ok(score(&solutions_to_props(pool, &sols), &gold_props(pool)).expect("pool skeleton").f1)
}

/// Global averaged Perceptron: for each sentence, predict with the current
/// parameters, promote the missed gold candidates and demote the wrongly
/// selected ones. Gold arguments missing from the pool are never promoted.
/// After each epoch the averaged model is evaluated on `validation` (if
/// given) and the best epoch is kept; otherwise the last epoch is.
pub fn train_global_perceptron(
    train: &CandidatePool,
    validation: Option<&CandidatePool>,
    cfg: &PerceptronConfig,
) -> Result<GlobalTraining, LearnError> {
    let mut model = ScoreModel::new(ModelKind::GlobalPerceptron, cfg.degree)?;
    let mut ledger = Vec::new();
    let mut epochs = Vec::new();
    let mut best: Option<(f64, usize, ScoreModel)> = None;
    let mut order: Vec<usize> = (0..train.sentences.len()).collect();
    let mut rng = cfg.shuffle_seed.map(ChaCha8Rng::seed_from_u64);
    for epoch in 1..=cfg.epochs {
        if let Some(r) = rng.as_mut() {
            order.shuffle(r);
        }
        let mut updates = 0;
        for &si in &order {
            let s = &train.sentences[si];
            let conf = confidences(&model, s, Predictor::Final)?;
            let predicted: BTreeSet<usize> = cfg.inference.run(s, &conf)?.selected.into_iter().collect();
            let gold: BTreeSet<usize> =
                (0..s.candidates.len()).filter(|&i| s.candidates[i].is_gold == Some(true)).collect();
            let missed: Vec<usize> = gold.difference(&predicted).copied().collect();
            let excess: Vec<usize> = predicted.difference(&gold).copied().collect();
            for &i in &missed {
                let c = &s.candidates[i];
                model.update(&c.argument.label, c.features.as_ref().expect("checked above"), 1.0);
            }
            for &i in &excess {
                let c = &s.candidates[i];
                model.update(&c.argument.label, c.features.as_ref().expect("checked above"), -1.0);
            }
            model.tick();
            updates += missed.len() + excess.len();
            ledger.push(LedgerEntry {
                epoch,
                sentence: s.id,
                promotions: missed.len(),
                demotions: excess.len(),
                missed: missed.len(),
                excess: excess.len(),
            });
        }
        let train_f1 = pool_f1(&model, train, &cfg.inference, Predictor::Final)?;
        let train_f1_averaged = pool_f1(&model, train, &cfg.inference, Predictor::Averaged)?;
        let validation_f1 = match validation {
            Some(v) => Some(pool_f1(&model, v, &cfg.inference, Predictor::Averaged)?),
            None => None,
        };
        epochs.push(EpochStats { epoch, updates, train_f1, train_f1_averaged, validation_f1 });
        let key = validation_f1.unwrap_or(epoch as f64);
        if best.as_ref().map_or(true, |(b, _, _)| key > *b) {
            best = Some((key, epoch, model.clone()));
        }
    }
    let (best_epoch, model) = match best {
        Some((_, e, m)) => (e, m),
        None => (0, model),
    };
    Ok(GlobalTraining { model, best_epoch, epochs, ledger })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(ids: &[u32]) -> FeatureVector {
        FeatureVector::from_ids(ids.iter().copied())
    }

    #[test]
    fn kernel_values() {
        assert_eq!(kernel(&fv(&[]), &fv(&[]), 2), 1.0);
        assert_eq!(kernel(&fv(&[1, 2, 3, 9]), &fv(&[1, 2, 3, 7]), 2), 16.0);
        assert_eq!(kernel(&fv(&[1]), &fv(&[1]), 3), 8.0);
    }

    #[test]
    fn zero_model_scores_zero() {
        let m = ScoreModel::new(ModelKind::GlobalPerceptron, 2).unwrap();
        assert_eq!(m.score(&RoleLabel::core(0), &fv(&[1, 2]), Predictor::Averaged), 0.0);
        assert!(ScoreModel::new(ModelKind::Svm, 0).is_err());
    }

    #[test]
    fn averaged_matches_explicit_mean() {
        let mut m = ScoreModel::new(ModelKind::GlobalPerceptron, 2).unwrap();
        let a0 = RoleLabel::core(0);
        let (x, y) = (fv(&[1, 2]), fv(&[2, 3]));
        // States after each example: w1 = +x, w2 = +x - y, w3 = w2,
        // w4 = 2x - y.
        m.update(&a0, &x, 1.0);
        m.tick();
        m.update(&a0, &y, -1.0);
        m.tick();
        m.tick();
        m.update(&a0, &x, 1.0);
        m.tick();
        let z = fv(&[2]);
        let (kx, ky) = (kernel(&x, &z, 2), kernel(&y, &z, 2));
        let states = [kx, kx - ky, kx - ky, 2.0 * kx - ky];
        let mean = states.iter().sum::<f64>() / 4.0;
        assert!((m.score(&a0, &z, Predictor::Averaged) - mean).abs() < 1e-12);
        assert!((m.score(&a0, &z, Predictor::Final) - states[3]).abs() < 1e-12);
        assert_eq!(m.updates, 3);
        assert_eq!(m.labels[&a0].supports.len(), 2);
    }

    #[test]
    fn model_text_round_trip() {
        let mut m = ScoreModel::new(ModelKind::GlobalPerceptron, 2).unwrap();
        m.update(&RoleLabel::core(0), &fv(&[1, 5]), 1.0);
        m.tick();
        m.update(&"AM-TMP".parse().unwrap(), &fv(&[]), -1.0);
        m.tick();
        m.vocab_fingerprint = "ab12".into();
        m.system_ids = vec!["M1".into(), "M2".into()];
        m.intervals.per_system.insert(0, Cuts { points: [0.1, 0.2, 0.3, 0.4], degenerate: false });
        m.intervals.per_label.insert((1, RoleLabel::core(1)), Cuts { points: [0.5; 4], degenerate: true });
        let text = m.save();
        let back = ScoreModel::load(&text).unwrap();
        assert_eq!(back.save(), text);
        assert_eq!(back, m);
        assert!(ScoreModel::load("nonsense\n").is_err());
        let bad = text.replace("end", "stop");
        assert!(matches!(ScoreModel::load(&bad), Err(LearnError::Format { .. })));
    }

    #[test]
    fn vocabulary_check() {
        let mut m = ScoreModel::new(ModelKind::Svm, 2).unwrap();
        m.vocab_fingerprint = "aa".into();
        assert!(m.check_vocabulary("aa").is_ok());
        assert!(matches!(m.check_vocabulary("bb"), Err(LearnError::FeatureMismatch { .. })));
    }

    #[test]
    fn local_perceptron_separates() {
        let a0 = RoleLabel::core(0);
        let data: LocalDataset = [(
            a0.clone(),
            vec![(fv(&[1, 10]), true), (fv(&[2, 10]), false), (fv(&[1, 11]), true), (fv(&[3, 11]), false)],
        )]
        .into();
        let m = train_local_perceptron(&data, 2, 10).unwrap();
        for (x, g) in &data[&a0] {
            assert_eq!(m.score(&a0, x, Predictor::Final) > 0.0, *g);
        }
    }

    #[test]
    fn svm_separates_toy_data() {
        let a0 = RoleLabel::core(0);
        let data: LocalDataset = [(
            a0.clone(),
            vec![(fv(&[1, 10]), true), (fv(&[2, 10]), false), (fv(&[1, 11]), true), (fv(&[3, 11]), false)],
        )]
        .into();
        let (m, rep) = train_local_svm(&data, &SvmConfig::default()).unwrap();
        assert!(rep[0].converged);
        for (x, g) in &data[&a0] {
            assert_eq!(m.score(&a0, x, Predictor::Averaged) > 0.0, *g);
        }
        let single: LocalDataset = [(a0.clone(), vec![(fv(&[1]), true)])].into();
        let (m, rep) = train_local_svm(&single, &SvmConfig::default()).unwrap();
        assert!(rep[0].degenerate);
        assert!(m.score(&a0, &fv(&[7]), Predictor::Final) > 0.0);
    }
}
