//! Loading of corpus files named on the command line.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use srlcomb::calibrate::CalibrationConfig;
use srlcomb::corpus_io::{parse_props, parse_scores, parse_syntax, plain_sentence, PropsDocument};
use srlcomb::pipeline::{prepare_pool, PipelineError};
use srlcomb::pool::{CandidatePool, PoolError, SystemOutput};
use srlcomb::Sentence;

use crate::{Failure, Inputs, EXIT_FORMAT};

pub struct Loaded {
    pub pool: CandidatePool,
    pub gold: Option<PropsDocument>,
    /// One per pool sentence; placeholders when no syntax file was given.
    pub sentences: Vec<Sentence>,
}

pub fn format_error(path: &Path, e: impl Display) -> anyhow::Error {
    Failure::err(EXIT_FORMAT, format!("{}: {e}", path.display()))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| format_error(path, e))
}

fn split_pair(spec: &str) -> Result<(String, PathBuf)> {
    match spec.split_once('=') {
        Some((id, path)) if !id.is_empty() && !path.is_empty() => Ok((id.to_string(), PathBuf::from(path))),
        _ => {
            let path = PathBuf::from(spec);
            let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
            if id.is_empty() {
                return Err(Failure::err(EXIT_FORMAT, format!("expected ID=PATH, got {spec:?}")));
            }
            Ok((id, path))
        }
    }
}

fn read_props(path: &Path) -> Result<PropsDocument> {
    parse_props(&read(path)?).map_err(|e| format_error(path, e))
}

pub fn load(inputs: &Inputs, need_gold: bool) -> Result<Loaded> {
    let mut systems = Vec::new();
    for spec in &inputs.systems {
        let (id, path) = split_pair(spec)?;
        if systems.iter().any(|s: &SystemOutput| s.id == id) {
            return Err(Failure::err(EXIT_FORMAT, format!("system {id} given twice")));
        }
        systems.push(SystemOutput { id, props: read_props(&path)?, scores: None });
    }
    for spec in &inputs.scores {
        let (id, path) = split_pair(spec)?;
        let table = parse_scores(&read(&path)?).map_err(|e| format_error(&path, e))?;
        let sys = systems
            .iter_mut()
            .find(|s| s.id == id)
            .ok_or_else(|| Failure::err(EXIT_FORMAT, format!("scores given for unknown system {id}")))?;
        sys.scores = Some(table);
    }
    let gold = match &inputs.gold {
        Some(p) => Some(read_props(p)?),
        None if need_gold => return Err(Failure::err(EXIT_FORMAT, "this command needs --gold")),
        None => None,
    };
    let calib = CalibrationConfig { gamma: inputs.gamma, ..Default::default() };
    let pool = prepare_pool(&systems, gold.as_ref(), &calib).map_err(|e| match e {
        PipelineError::Pool(PoolError::Alignment(i)) => {
            Failure::err(EXIT_FORMAT, format!("sentence {i}: inputs disagree on tokens or predicates"))
        }
        e => Failure::err(EXIT_FORMAT, e.to_string()),
    })?;
    let sentences = match &inputs.syntax {
        Some(p) => {
            let s = parse_syntax(&read(p)?).map_err(|e| format_error(p, e))?;
            let agree = s.len() == pool.sentences.len()
                && s.iter().zip(&pool.sentences).all(|(a, b)| a.tokens.len() == b.n_tokens);
            if !agree {
                return Err(format_error(p, "sentences do not match the system outputs"));
            }
            s
        }
        None => pool.sentences.iter().map(|s| plain_sentence(s.id, s.n_tokens)).collect(),
    };
    Ok(Loaded { pool, gold, sentences })
}

pub fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// `<path>.manifest.json`
pub fn manifest_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}
