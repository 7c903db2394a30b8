//! Raw score to probability conversion (temperature softmax), rejection
//! curves, and equal-frequency probability intervals.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::model::RoleLabel;
use crate::pool::CandidatePool;

pub const DEFAULT_GAMMA: f64 = 0.1;

#[derive(Debug, Error, PartialEq)]
pub enum CalibrationError {
    #[error("non-finite input to softmax")]
    NonFinite,
    #[error("softmax needs at least one score")]
    NoScores,
    #[error("rejection curve needs at least one item")]
    Empty,
    #[error("probability {0} outside [0,1]")]
    OutOfRange(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CalibrationConfig {
    pub gamma: f64,
    /// Score of the implicit competing class when a system supplies one
    /// score per argument.
    pub background: f64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig { gamma: DEFAULT_GAMMA, background: 0.0 }
    }
}

/// `p_i = exp(gamma * s_i) / sum_j exp(gamma * s_j)`, computed after
/// subtracting the maximum.
pub fn softmax(scores: &[f64], gamma: f64) -> Result<Vec<f64>, CalibrationError> {
    if scores.is_empty() {
        return Err(CalibrationError::NoScores);
    }
    if !gamma.is_finite() || scores.iter().any(|s| !s.is_finite()) {
        return Err(CalibrationError::NonFinite);
    }
    let scaled: Vec<f64> = scores.iter().map(|s| gamma * s).collect();
    let max = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scaled.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

/// Probability of a single scored argument against the background class.
pub fn two_class_probability(score: f64, cfg: &CalibrationConfig) -> Result<f64, CalibrationError> {
    Ok(softmax(&[score, cfg.background], cfg.gamma)?[0])
}

/// Fills `probs` for every voting system. A vote without a raw score is
/// treated as scoring the background value.
pub fn assign_probabilities(pool: &mut CandidatePool, cfg: &CalibrationConfig) -> Result<(), CalibrationError> {
    for s in &mut pool.sentences {
        for c in &mut s.candidates {
            for j in 0..c.probs.len() {
                c.probs[j] = if c.votes.contains(&j) {
                    let raw = c.raw_scores[j].unwrap_or(cfg.background);
                    Some(two_class_probability(raw, cfg)?)
                } else {
                    None
                };
            }
        }
    }
    Ok(())
}

pub const REJECTION_LEVELS: [u32; 20] = [0, 5, 10, 15, 20, 25, 30, 35, 40, 45, 50, 55, 60, 65, 70, 75, 80, 85, 90, 95];

/// Accuracy of the kept set after dropping the lowest-probability n% of
/// items, for n = 0, 5, ..., 95. Ties keep input order.
pub fn rejection_curve(items: &[(f64, bool)]) -> Result<Vec<(u32, f64)>, CalibrationError> {
    if items.is_empty() {
        return Err(CalibrationError::Empty);
    }
    if let Some(&(p, _)) = items.iter().find(|(p, _)| !(0.0..=1.0).contains(p)) {
        return Err(CalibrationError::OutOfRange(p));
    }
    let mut sorted: Vec<&(f64, bool)> = items.iter().collect();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut prefix = Vec::with_capacity(sorted.len() + 1);
    prefix.push(0usize);
    for (_, ok) in &sorted {
        prefix.push(prefix.last().unwrap() + usize::from(*ok));
    }
    let n = sorted.len();
    Ok(REJECTION_LEVELS
        .iter()
        .map(|&pct| {
            let keep = ((100 - pct) as usize * n).div_ceil(100).max(1);
            (pct, prefix[keep] as f64 / keep as f64)
        })
        .collect())
}

pub fn curve_csv(curve: &[(u32, f64)]) -> String {
    let mut out = String::from("rejection_pct,accuracy\n");
    for (pct, acc) in curve {
        let _ = writeln!(out, "{pct},{acc:.6}");
    }
    out
}

/// Four cut points splitting one system's probabilities for one label into
/// five equally populated intervals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cuts {
    pub points: [f64; 4],
    /// Fewer than five observations: all cut points are equal.
    pub degenerate: bool,
}

impl Cuts {
    pub fn from_observations(values: &[f64]) -> Cuts {
        let mut v: Vec<f64> = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        if n < 5 {
            let mid = if n == 0 { 0.5 } else { v[n / 2] };
            return Cuts { points: [mid; 4], degenerate: true };
        }
        let mut points = [0.0; 4];
        for (k, p) in points.iter_mut().enumerate() {
            *p = v[(k + 1) * n / 5];
        }
        Cuts { points, degenerate: false }
    }

    pub fn interval(&self, p: f64) -> u8 {
        self.points.iter().filter(|&&c| c <= p).count() as u8
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct IntervalTable {
    pub per_label: BTreeMap<(usize, RoleLabel), Cuts>,
    /// Per-system cuts over all labels, for labels unseen in training.
    pub per_system: BTreeMap<usize, Cuts>,
}

pub fn build_intervals(pool: &CandidatePool) -> IntervalTable {
    let mut obs: BTreeMap<(usize, RoleLabel), Vec<f64>> = BTreeMap::new();
    let mut sys_obs: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for s in &pool.sentences {
        for c in &s.candidates {
            for (j, p) in c.probs.iter().enumerate() {
                if let Some(p) = p {
                    obs.entry((j, c.argument.label.clone())).or_default().push(*p);
                    sys_obs.entry(j).or_default().push(*p);
                }
            }
        }
    }
    IntervalTable {
        per_label: obs.into_iter().map(|(k, v)| (k, Cuts::from_observations(&v))).collect(),
        per_system: sys_obs.into_iter().map(|(k, v)| (k, Cuts::from_observations(&v))).collect(),
    }
}

/// Interval index 0..=4, or `None` when the system did not vote.
pub fn discretize(p: Option<f64>, system: usize, label: &RoleLabel, table: &IntervalTable) -> Option<u8> {
    let p = p?;
    let cuts = table
        .per_label
        .get(&(system, label.clone()))
        .or_else(|| table.per_system.get(&system))
        .copied()
        .unwrap_or(Cuts { points: [0.5; 4], degenerate: true });
    Some(cuts.interval(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_when_scores_equal_or_gamma_zero() {
        for p in softmax(&[2.0, 2.0, 2.0, 2.0], 0.7).unwrap() {
            assert!((p - 0.25).abs() < 1e-15);
        }
        for p in softmax(&[1.0, -3.0, 8.0], 0.0).unwrap() {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(softmax(&[1.0, f64::NAN], 0.1), Err(CalibrationError::NonFinite));
        assert_eq!(softmax(&[1.0], f64::INFINITY), Err(CalibrationError::NonFinite));
        assert_eq!(softmax(&[], 0.1), Err(CalibrationError::NoScores));
        assert_eq!(rejection_curve(&[]), Err(CalibrationError::Empty));
        assert!(rejection_curve(&[(1.5, true)]).is_err());
    }

    #[test]
    fn no_overflow_on_large_scores() {
        let p = softmax(&[1e6, 1e6 - 1.0], 1.0).unwrap();
        assert!(p.iter().all(|x| x.is_finite()));
        assert!((p[0] + p[1] - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn sums_to_one_and_positive(scores in proptest::collection::vec(-50.0f64..50.0, 1..12), gamma in 0.0f64..5.0) {
            let p = softmax(&scores, gamma).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(p.iter().all(|&x| x > 0.0));
        }

        #[test]
        fn shift_invariant(scores in proptest::collection::vec(-20.0f64..20.0, 1..8), shift in -30.0f64..30.0) {
            let a = softmax(&scores, 0.1).unwrap();
            let shifted: Vec<f64> = scores.iter().map(|s| s + shift).collect();
            let b = softmax(&shifted, 0.1).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn all_correct_curve_is_flat_at_one() {
        let items: Vec<(f64, bool)> = (0..37).map(|i| (i as f64 / 37.0, true)).collect();
        let curve = rejection_curve(&items).unwrap();
        assert_eq!(curve.len(), 20);
        assert!(curve.iter().all(|&(_, a)| a == 1.0));
    }

    #[test]
    fn uniform_observations_fill_intervals_evenly() {
        let obs: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        let cuts = Cuts::from_observations(&obs);
        let mut counts = [0usize; 5];
        for p in &obs {
            counts[cuts.interval(*p) as usize] += 1;
        }
        for c in counts {
            assert!((18..=22).contains(&c), "{counts:?}");
        }
        assert_eq!(cuts.interval(-1.0), 0);
        assert_eq!(cuts.interval(2.0), 4);
    }

    #[test]
    fn degenerate_and_absent() {
        let cuts = Cuts::from_observations(&[0.2, 0.4]);
        assert!(cuts.degenerate);
        assert!(cuts.points.iter().all(|&c| c == cuts.points[0]));
        let table = IntervalTable::default();
        assert_eq!(discretize(None, 0, &RoleLabel::core(0), &table), None);
        assert_eq!(discretize(Some(0.9), 0, &RoleLabel::core(0), &table), Some(4));
    }
}
