use std::fmt::Write as _;
use std::path::Path;

use anyhow::Result;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use srlcomb::calibrate::{curve_csv, rejection_curve};
use srlcomb::corpus_io::{emit_props, emit_scores, emit_syntax, generate_synthetic, SyntheticConfig, SystemKnobs};
use srlcomb::eval_oracle::{
    baseline_precision, baseline_recall, bootstrap, oracle_combination, oracle_rerank, score, solutions_to_props,
    BaselineConfig, KeyPart, ScoreReport, DEFAULT_BOOTSTRAP_LEVEL,
};
use srlcomb::features::{extract_pool, FeatureConfig, Vocabulary};
use srlcomb::infer_cs::{default_grid, solve_pool, solve_with_weights, sweep_o, CsConfig, CsError, Scope};
use srlcomb::learn::{
    local_datasets, score_pool, train_global_perceptron, train_local_perceptron, train_local_svm,
    GlobalInference, LearnError, ModelKind, PerceptronConfig, Predictor, ScoreModel, SvmConfig,
};
use srlcomb::pool::{pool_stats, CandidatePool};
use srlcomb::{calibrate::build_intervals, ConstraintSet, Solution};

use crate::inputs::{format_error, load, manifest_path, write, Loaded};
use crate::{
    Cli, Command, CurvesArgs, EngineArg, Failure, InferArgs, OracleArgs, PoolArgs, ScopeArg, ScorerArg, SweepArgs,
    SynthArgs, TrainArgs, EXIT_FORMAT, EXIT_MISMATCH, EXIT_TIMEOUT,
};

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Synth(a) => synth(a, cli.jobs),
        Command::Pool(a) => pool(a, cli.jobs),
        Command::Train(a) => train(a, cli.jobs),
        Command::Infer(a) => infer(a, cli.jobs),
        Command::Sweep(a) => sweep(a, cli.jobs),
        Command::Curves(a) => curves(a, cli.jobs),
        Command::Oracle(a) => oracle(a, cli.jobs),
    }
}

fn cs_error(e: CsError) -> anyhow::Error {
    match e {
        CsError::Timeout { nodes, .. } => {
            Failure::err(EXIT_TIMEOUT, format!("optimizer gave up after {nodes} nodes; raise --max-nodes"))
        }
        e => anyhow::Error::new(e),
    }
}

fn learn_error(e: LearnError) -> anyhow::Error {
    match e {
        LearnError::FeatureMismatch { .. } => Failure::err(EXIT_MISMATCH, e.to_string()),
        LearnError::Format { .. } => Failure::err(EXIT_FORMAT, e.to_string()),
        LearnError::Inference(e) => cs_error(e),
        e => anyhow::Error::new(e),
    }
}

fn scope(s: ScopeArg) -> Scope {
    match s {
        ScopeArg::Pred => Scope::PredByPred,
        ScopeArg::Sentence => Scope::FullSentence,
    }
}

fn constraints(spec: &str) -> Result<ConstraintSet> {
    ConstraintSet::parse(spec).map_err(|e| Failure::err(EXIT_FORMAT, format!("--constraints: {e}")))
}

fn save_manifest(path: &Path, command: &str, jobs: usize, params: &impl Serialize, results: Value) -> Result<()> {
    let m = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "jobs": jobs,
        "parameters": params,
        "results": results,
    });
    write(path, &(serde_json::to_string_pretty(&m)? + "\n"))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn synth(a: &SynthArgs, jobs: usize) -> Result<()> {
    let cfg = SyntheticConfig {
        n_sentences: a.sentences,
        systems: vec![SystemKnobs { precision: a.precision, recall: a.recall }; a.systems],
        seed: a.seed,
        ..Default::default()
    };
    cfg.check().map_err(|e| Failure::err(EXIT_FORMAT, e))?;
    let corpus = generate_synthetic(&cfg);
    let dir = &a.out;
    write(&dir.join("gold.props"), &emit_props(&corpus.gold)?)?;
    write(&dir.join("syntax.txt"), &emit_syntax(&corpus.sentences)?)?;
    let mut files = vec!["gold.props".to_string(), "syntax.txt".to_string()];
    for s in &corpus.systems {
        write(&dir.join(format!("{}.props", s.id)), &emit_props(&s.props)?)?;
        write(&dir.join(format!("{}.scores", s.id)), &emit_scores(&s.scores))?;
        files.push(format!("{}.props", s.id));
        files.push(format!("{}.scores", s.id));
    }
    println!("wrote {} sentences and {} systems to {}", a.sentences, a.systems, dir.display());
    save_manifest(&dir.join("manifest.json"), "synth", jobs, a, json!({ "files": files, "generator": cfg }))
}

fn pool(a: &PoolArgs, jobs: usize) -> Result<()> {
    let Loaded { pool, .. } = load(&a.inputs, false)?;
    write(&a.out, &(pool.to_json() + "\n"))?;
    let n_gold: usize = pool.sentences.iter().filter_map(|s| s.gold.as_ref()).map(Vec::len).sum();
    println!(
        "{} sentences, {} systems, {} candidates",
        pool.sentences.len(),
        pool.n_systems(),
        pool.n_candidates()
    );
    let mut results = json!({ "sentences": pool.sentences.len(), "candidates": pool.n_candidates() });
    if a.inputs.gold.is_some() {
        let table = pool_stats(&pool)?;
        let unreachable: usize = pool.sentences.iter().map(|s| s.n_unreachable_gold()).sum();
        print!("{}", table.render());
        println!("gold arguments: {n_gold}, proposed by no system: {unreachable}");
        results["gold"] = json!(n_gold);
        results["unreachable_gold"] = json!(unreachable);
    }
    save_manifest(&manifest_path(&a.out), "pool", jobs, a, results)
}

fn feature_config(spec: &str) -> Result<FeatureConfig> {
    let groups = FeatureConfig::parse_groups(spec).map_err(|e| Failure::err(EXIT_FORMAT, format!("--features: {e}")))?;
    Ok(FeatureConfig { groups, ..Default::default() })
}

fn vocab_path(model: &Path) -> std::path::PathBuf {
    let mut s = model.as_os_str().to_owned();
    s.push(".vocab");
    s.into()
}

fn split_pool(pool: CandidatePool, sentences: Vec<srlcomb::Sentence>, holdout: f64) -> Result<(Loaded, Option<Loaded>)> {
    if !(0.0..1.0).contains(&holdout) {
        return Err(Failure::err(EXIT_FORMAT, "--holdout must lie in [0,1)"));
    }
    let n = pool.sentences.len();
    let k = (holdout * n as f64).ceil() as usize;
    if k == 0 {
        return Ok((Loaded { pool, gold: None, sentences }, None));
    }
    let cut = n - k;
    let (mut train, mut dev) = (pool.clone(), pool);
    train.sentences.truncate(cut);
    dev.sentences.drain(..cut);
    let mut train_s = sentences;
    let dev_s = train_s.split_off(cut);
    Ok((Loaded { pool: train, gold: None, sentences: train_s }, Some(Loaded { pool: dev, gold: None, sentences: dev_s })))
}

fn train(a: &TrainArgs, jobs: usize) -> Result<()> {
    let loaded = load(&a.inputs, true)?;
    let fcfg = feature_config(&a.features)?;
    let (mut tr, mut dev) = split_pool(loaded.pool, loaded.sentences, a.holdout)?;
    let intervals = build_intervals(&tr.pool);
    let mut vocab = Vocabulary::new();
    extract_pool(&mut tr.pool, &tr.sentences, &intervals, &fcfg, &vocab);
    vocab.freeze();
    if let Some(d) = dev.as_mut() {
        extract_pool(&mut d.pool, &d.sentences, &intervals, &fcfg, &vocab);
    }
    let mut results = json!({ "train_sentences": tr.pool.sentences.len(), "features": vocab.len() });
    let mut model = match a.scorer {
        ScorerArg::Probsum => return Err(Failure::err(EXIT_FORMAT, "probsum needs no training")),
        ScorerArg::Svm => {
            let data = local_datasets(&tr.pool).map_err(learn_error)?;
            let cfg = SvmConfig { degree: a.degree, c: a.c, ..Default::default() };
            let (model, reports) = train_local_svm(&data, &cfg).map_err(learn_error)?;
            println!("{:<10} {:>7} {:>8} {:>10}  converged", "label", "n", "support", "objective");
            for r in &reports {
                println!("{:<10} {:>7} {:>8} {:>10.3}  {}", r.label.to_string(), r.n, r.n_support, r.objective, r.converged);
            }
            model
        }
        ScorerArg::PerceptronLocal => {
            let data = local_datasets(&tr.pool).map_err(learn_error)?;
            train_local_perceptron(&data, a.degree, a.epochs).map_err(learn_error)?
        }
        ScorerArg::PerceptronGlobal => {
            let cfg = PerceptronConfig {
                degree: a.degree,
                epochs: a.epochs,
                inference: GlobalInference { scope: scope(a.scope) },
                shuffle_seed: a.seed,
            };
            let t = train_global_perceptron(&tr.pool, dev.as_ref().map(|d| &d.pool), &cfg).map_err(learn_error)?;
            println!("{:>5} {:>8} {:>9} {:>9} {:>9}", "epoch", "updates", "train", "train-avg", "valid");
            for e in &t.epochs {
                let v = e.validation_f1.map_or("-".to_string(), |f| format!("{f:.2}"));
                println!("{:>5} {:>8} {:>9.2} {:>9.2} {:>9}", e.epoch, e.updates, e.train_f1, e.train_f1_averaged, v);
            }
            println!("selected epoch {}", t.best_epoch);
            results["epochs"] = serde_json::to_value(&t.epochs)?;
            results["best_epoch"] = json!(t.best_epoch);
            t.model
        }
    };
    model.feature_tag = fcfg.tag();
    model.vocab_fingerprint = vocab.fingerprint();
    model.system_ids = tr.pool.system_ids.clone();
    model.gamma = a.inputs.gamma;
    model.intervals = intervals;
    write(&a.model, &model.save())?;
    write(&vocab_path(&a.model), &vocab.dump())?;
    println!("{} support vectors over {} labels; model written to {}", model.n_supports(), model.labels.len(), a.model.display());
    results["supports"] = json!(model.n_supports());
    results["vocab_fingerprint"] = json!(model.vocab_fingerprint);
    save_manifest(&manifest_path(&a.model), "train", jobs, a, results)
}

fn expected_kind(s: ScorerArg) -> Option<ModelKind> {
    match s {
        ScorerArg::Probsum => None,
        ScorerArg::Svm => Some(ModelKind::Svm),
        ScorerArg::PerceptronLocal => Some(ModelKind::LocalPerceptron),
        ScorerArg::PerceptronGlobal => Some(ModelKind::GlobalPerceptron),
    }
}

/// Loads model and vocabulary and computes candidate confidences.
fn learned_confidences(a: &InferArgs, loaded: &mut Loaded, kind: ModelKind) -> Result<Vec<Vec<f64>>> {
    let path = a.model.as_ref().ok_or_else(|| Failure::err(EXIT_FORMAT, "a learned scorer needs --model"))?;
    let text = std::fs::read_to_string(path).map_err(|e| format_error(path, e))?;
    let model = ScoreModel::load(&text).map_err(|e| format_error(path, e))?;
    if model.kind != kind {
        return Err(Failure::err(EXIT_MISMATCH, format!("{} holds a {:?} model", path.display(), model.kind)));
    }
    if model.system_ids != loaded.pool.system_ids {
        return Err(Failure::err(
            EXIT_MISMATCH,
            format!("model trained on systems {:?}, given {:?}", model.system_ids, loaded.pool.system_ids),
        ));
    }
    if model.gamma != a.inputs.gamma {
        return Err(Failure::err(EXIT_MISMATCH, format!("model trained with gamma {}", model.gamma)));
    }
    let vpath = a.vocab.clone().unwrap_or_else(|| vocab_path(path));
    let vtext = std::fs::read_to_string(&vpath).map_err(|e| format_error(&vpath, e))?;
    let vocab = Vocabulary::from_dump(&vtext).map_err(|e| format_error(&vpath, e))?;
    model.check_vocabulary(&vocab.fingerprint()).map_err(learn_error)?;
    let fcfg = FeatureConfig::from_tag(&model.feature_tag).map_err(|e| format_error(path, e))?;
    extract_pool(&mut loaded.pool, &loaded.sentences, &model.intervals, &fcfg, &vocab);
    score_pool(&model, &loaded.pool, &vocab.fingerprint(), Predictor::Averaged).map_err(learn_error)
}

fn infer(a: &InferArgs, jobs: usize) -> Result<()> {
    let mut loaded = load(&a.inputs, false)?;
    let cs = constraints(&a.constraints)?;
    let resolved_scope = a.scope.unwrap_or(if a.engine == EngineArg::Dp { ScopeArg::Pred } else { ScopeArg::Sentence });
    let sols: Vec<Solution> = match (a.engine, expected_kind(a.scorer)) {
        (EngineArg::Cs, None) => {
            let cfg = CsConfig {
                o: a.o,
                scope: scope(resolved_scope),
                constraints: cs,
                max_nodes: a.max_nodes,
            };
            solve_pool(&loaded.pool, &cfg).map_err(cs_error)?
        }
        (EngineArg::Dp, None) => {
            return Err(Failure::err(EXIT_FORMAT, "the dp engine needs a learned scorer"));
        }
        (EngineArg::Cs, Some(kind)) => {
            let conf = learned_confidences(a, &mut loaded, kind)?;
            let cfg = CsConfig {
                o: a.o,
                scope: scope(resolved_scope),
                constraints: cs,
                max_nodes: a.max_nodes,
            };
            loaded
                .pool
                .sentences
                .par_iter()
                .zip(conf.par_iter())
                .map(|(s, w)| solve_with_weights(s, w, &cfg).map(|o| o.solution))
                .collect::<Result<_, _>>()
                .map_err(cs_error)?
        }
        (EngineArg::Dp, Some(kind)) => {
            let conf = learned_confidences(a, &mut loaded, kind)?;
            let inference = GlobalInference { scope: scope(resolved_scope) };
            loaded
                .pool
                .sentences
                .par_iter()
                .zip(conf.par_iter())
                .map(|(s, w)| inference.run(s, w))
                .collect::<Result<_, _>>()
                .map_err(cs_error)?
        }
    };
    let predicted = solutions_to_props(&loaded.pool, &sols);
    write(&a.out, &emit_props(&predicted)?)?;
    let mut results = json!({ "scope": resolved_scope, "selected": sols.iter().map(|s| s.selected.len()).sum::<usize>() });
    if let Some(gold) = &loaded.gold {
        let report = score(&predicted, gold).map_err(|e| Failure::err(EXIT_FORMAT, e.to_string()))?;
        print!("{}", report.render());
        results["precision"] = json!(report.precision);
        results["recall"] = json!(report.recall);
        results["f1"] = json!(report.f1);
        results["pprops"] = json!(report.pprops);
        if a.bootstrap > 0 {
            let b = bootstrap(&predicted, gold, a.bootstrap, DEFAULT_BOOTSTRAP_LEVEL, a.seed)
                .map_err(|e| Failure::err(EXIT_FORMAT, format!("--bootstrap: {e}")))?;
            println!("F1 {b}  ({} resamples, {:.0}% interval [{:.2}, {:.2}])", b.samples, b.level * 100.0, b.lower, b.upper);
            results["bootstrap"] = serde_json::to_value(&b)?;
        }
        if let Some(p) = &a.report {
            write(p, &report.csv())?;
        }
    }
    save_manifest(&manifest_path(&a.out), "infer", jobs, a, results)
}

fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    spec.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| Failure::err(EXIT_FORMAT, format!("--grid: bad value {x:?}"))))
        .collect()
}

fn sweep(a: &SweepArgs, jobs: usize) -> Result<()> {
    let loaded = load(&a.inputs, true)?;
    let grid = match &a.grid {
        Some(g) => parse_grid(g)?,
        None => default_grid(),
    };
    let cfg = CsConfig { scope: scope(a.scope), constraints: constraints(&a.constraints)?, max_nodes: a.max_nodes, ..Default::default() };
    let sw = sweep_o(&loaded.pool, &cfg, &grid).map_err(cs_error)?;
    emit(a.out.as_deref(), &sw.csv())?;
    match &a.out {
        Some(p) => save_manifest(&manifest_path(p), "sweep", jobs, a, serde_json::to_value(&sw)?),
        None => Ok(()),
    }
}

fn curves(a: &CurvesArgs, jobs: usize) -> Result<()> {
    let loaded = load(&a.inputs, true)?;
    let pool = &loaded.pool;
    let mut out = String::from("system,rejection_pct,accuracy\n");
    for (j, id) in pool.system_ids.iter().enumerate() {
        let items: Vec<(f64, bool)> = pool
            .sentences
            .iter()
            .flat_map(|s| &s.candidates)
            .filter_map(|c| Some((c.probs[j]?, c.is_gold == Some(true))))
            .collect();
        if items.is_empty() {
            continue;
        }
        let curve = rejection_curve(&items).map_err(|e| Failure::err(EXIT_FORMAT, e.to_string()))?;
        for line in curve_csv(&curve).lines().skip(1) {
            let _ = writeln!(out, "{id},{line}");
        }
    }
    emit(a.out.as_deref(), &out)?;
    match &a.out {
        Some(p) => save_manifest(&manifest_path(p), "curves", jobs, a, json!({ "systems": pool.n_systems() })),
        None => Ok(()),
    }
}

fn parse_key(spec: &str) -> Result<[KeyPart; 3]> {
    let parts: Vec<KeyPart> = spec
        .split(',')
        .map(|p| match p.trim() {
            "votes" => Ok(KeyPart::Votes),
            "length" => Ok(KeyPart::Length),
            "priority" => Ok(KeyPart::SystemPriority),
            other => Err(Failure::err(EXIT_FORMAT, format!("--baseline-key: unknown part {other:?}"))),
        })
        .collect::<Result<_>>()?;
    parts.try_into().map_err(|_| Failure::err(EXIT_FORMAT, "--baseline-key needs three parts"))
}

fn block(out: &mut String, title: &str, rows: &[(String, ScoreReport)]) {
    let _ = writeln!(out, "{title}");
    let _ = writeln!(out, "{:<16} {:>8} {:>8} {:>8} {:>8}", "", "P", "R", "F1", "PProps");
    for (name, r) in rows {
        let _ = writeln!(out, "{:<16} {:>8.2} {:>8.2} {:>8.2} {:>8.2}", name, r.precision, r.recall, r.f1, r.pprops);
    }
    out.push('\n');
}

fn oracle(a: &OracleArgs, jobs: usize) -> Result<()> {
    let loaded = load(&a.inputs, true)?;
    let (pool, gold) = (&loaded.pool, loaded.gold.as_ref().expect("gold required"));
    let eval = |sols: &[Solution]| score(&solutions_to_props(pool, sols), gold).map_err(|e| anyhow::anyhow!(e));
    let bcfg = BaselineConfig { key: parse_key(&a.baseline_key)?, system_priority: None };
    let mut out = String::new();
    let mut singles = Vec::new();
    for (j, id) in pool.system_ids.iter().enumerate() {
        singles.push((id.clone(), score(&pool.system_view(j), gold).map_err(|e| anyhow::anyhow!(e))?));
    }
    block(&mut out, "Systems", &singles);
    let comb = eval(&oracle_combination(pool)?)?;
    block(&mut out, "Combination", &[("oracle".into(), comb.clone())]);
    let rerank = eval(&oracle_rerank(pool)?)?;
    block(&mut out, "Re-Ranking", &[("oracle".into(), rerank.clone())]);
    let br = eval(&baseline_recall(pool, &bcfg))?;
    let bp = eval(&baseline_precision(pool, &bcfg))?;
    block(&mut out, "Baselines", &[("recall".into(), br.clone()), ("precision".into(), bp.clone())]);
    emit(a.out.as_deref(), &out)?;
    let f = |r: &ScoreReport| json!({ "precision": r.precision, "recall": r.recall, "f1": r.f1, "pprops": r.pprops });
    let results = json!({
        "combination": f(&comb),
        "re_ranking": f(&rerank),
        "baseline_recall": f(&br),
        "baseline_precision": f(&bp),
    });
    match &a.out {
        Some(p) => save_manifest(&manifest_path(p), "oracle", jobs, a, results),
        None => Ok(()),
    }
}
