mod common;

use common::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use srlcomb::calibrate::softmax;
use srlcomb::corpus_io::{emit_props, generate_synthetic, parse_props, SyntheticConfig};
use srlcomb::eval_oracle::{bootstrap, repair, score};
use srlcomb::features::{FeatureVector, Vocabulary};
use srlcomb::infer_cs::{solve, CsConfig, Scope};
use srlcomb::infer_dp::{dp_predicate, ScoredCandidate};
use srlcomb::learn::kernel;
use srlcomb::{Candidate, RoleLabel, Span};

fn items<'a>(cands: &'a [Candidate], conf: &[f64], order: &[usize]) -> Vec<ScoredCandidate<'a>> {
    order.iter().map(|&i| ScoredCandidate { index: i, candidate: &cands[i], confidence: conf[i] }).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cs_matches_enumeration(seed in any::<u64>(), o in 0.0f64..1.5) {
        let mut r = rng(seed);
        let n = r.gen_range(1..=12);
        let (n_pred, n_tok) = (r.gen_range(1..=3), r.gen_range(6..=12));
        let cands = random_candidates(&mut r, n, n_pred, n_tok, 3);
        let cs = random_constraints(&mut r);
        let w: Vec<f64> = cands.iter().map(Candidate::prob_sum).collect();
        let cfg = CsConfig { o, constraints: cs, scope: Scope::FullSentence, ..Default::default() };
        let sol = solve(&cands, &cfg).unwrap();
        let mine = subset_value(&cands, &w, o, &cs, mask_of(&sol.selected));
        prop_assert!(mine.is_some(), "hard constraint broken");
        prop_assert!((mine.unwrap() - brute_force(&cands, &w, o, &cs)).abs() < 1e-9);
    }

    #[test]
    fn dp_ignores_input_order(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(1..=12);
        let n_tok = r.gen_range(5..=20);
        let cands = random_candidates(&mut r, n, 1, n_tok, 1);
        let conf: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..2.0)).collect();
        let order: Vec<usize> = (0..n).collect();
        let mut shuffled = order.clone();
        shuffled.shuffle(&mut r);
        let a = dp_predicate(&items(&cands, &conf, &order), true);
        let b = dp_predicate(&items(&cands, &conf, &shuffled), true);
        prop_assert_eq!(a.selected, b.selected);
        prop_assert!((a.objective - b.objective).abs() < 1e-9);
    }

    #[test]
    fn kernel_is_symmetric_and_positive(
        u in proptest::collection::vec(0u32..50, 0..20),
        v in proptest::collection::vec(0u32..50, 0..20),
        d in 1u32..4,
    ) {
        let (u, v) = (FeatureVector::from_ids(u), FeatureVector::from_ids(v));
        prop_assert_eq!(kernel(&u, &v, d), kernel(&v, &u, d));
        prop_assert!(kernel(&u, &v, d) >= 1.0);
        prop_assert_eq!(kernel(&u, &u, d), ((u.len() + 1) as f64).powi(d as i32));
    }

    #[test]
    fn softmax_is_a_distribution(scores in proptest::collection::vec(-50.0f64..50.0, 1..8), gamma in 0.0f64..2.0) {
        let p = softmax(&scores, gamma).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(p.iter().all(|x| (0.0..=1.0).contains(x)));
    }

    #[test]
    fn repair_is_idempotent(raw in proptest::collection::vec((0usize..LABELS.len(), 0usize..10), 0..8)) {
        let mut args: Vec<(RoleLabel, Span)> =
            raw.iter().map(|&(l, s)| (LABELS[l].parse().unwrap(), Span::new(s, s + 1))).collect();
        repair(&mut args);
        let once = args.clone();
        repair(&mut args);
        prop_assert_eq!(once, args);
    }

    #[test]
    fn vocabulary_dump_round_trips(names in proptest::collection::btree_set("[a-z:=0-9]{1,12}", 0..30)) {
        let v = Vocabulary::new();
        for n in &names {
            v.intern(n);
        }
        let back = Vocabulary::from_dump(&v.dump()).unwrap();
        prop_assert_eq!(back.fingerprint(), v.fingerprint());
        prop_assert!(back.is_frozen());
        for n in &names {
            prop_assert_eq!(back.get(n), v.get(n));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn corpus_round_trip_and_self_score(seed in any::<u64>()) {
        let corpus = generate_synthetic(&SyntheticConfig { n_sentences: 6, seed, ..Default::default() });
        let text = emit_props(&corpus.gold).unwrap();
        let back = parse_props(&text).unwrap();
        prop_assert_eq!(emit_props(&back).unwrap(), text);
        let self_report = score(&back, &corpus.gold).unwrap();
        prop_assert_eq!(self_report.f1, 100.0);
        prop_assert_eq!(self_report.pprops, 100.0);
        let sys = &corpus.systems[0].props;
        let b1 = bootstrap(sys, &corpus.gold, 200, 0.95, seed).unwrap();
        let b2 = bootstrap(sys, &corpus.gold, 200, 0.95, seed).unwrap();
        prop_assert_eq!(&b1, &b2);
        prop_assert!(b1.lower <= b1.upper);
    }
}
